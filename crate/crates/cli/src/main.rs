fn main() {
    std::process::exit(refract_cli::run(std::env::args_os()));
}
