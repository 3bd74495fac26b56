use std::path::PathBuf;
use std::process::{Command, Output};

fn models() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn refract(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refract")).args(args).env_remove("REFRACT_THREADS").output().unwrap()
}

fn model(name: &str) -> String {
    models().join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("refract-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn compute_writes_csv_with_manifest() {
    let out = scratch("curve.csv");
    let o = refract(&["compute", "--model", &model("bm.toml"), "--q", "1", "--delta", "1", "--b", "0", "--x", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let manifest = lines.next().unwrap();
    assert!(manifest.starts_with("# manifest {"));
    assert!(manifest.contains("\"subcommand\":\"compute\""));
    assert_eq!(lines.next(), Some("y,cdf,density,potential_density"));
    let row: Vec<&str> = lines.nth(100).unwrap().split(',').collect();
    assert_eq!(row.len(), 4);
    for v in row {
        let mantissa = v.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{v}");
        v.parse::<f64>().unwrap();
    }
}

#[test]
fn compute_json_output_is_identical_across_runs() {
    let a = scratch("a.json");
    let args = |p: &PathBuf| {
        refract(&["compute", "--model", &model("cpp_exp.toml"), "--q", "1", "--delta", "1", "--b", "0.5", "--x", "0", "--out", p.to_str().unwrap()])
    };
    assert!(args(&a).status.success());
    let first = std::fs::read(&a).unwrap();
    assert!(args(&a).status.success());
    assert_eq!(first, std::fs::read(&a).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["manifest"]["b"], 0.5);
    assert!(v["cdf"].as_array().unwrap().len() > 100);
}

#[test]
fn validate_exit_codes() {
    let o = refract(&["validate", "--model", &model("cpp_posdrift.toml"), "--delta", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["admissibility"]["admitted"], false);
    assert!(String::from_utf8_lossy(&o.stderr).contains("large-s factor ratios fails"));
    let o = refract(&["validate", "--model", &model("cpp_exp.toml"), "--delta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let o = refract(&["validate", "--model", &model("cpp_exp.toml"), "--delta", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_echoes_the_model_bit_exactly() {
    let src = scratch("odd.toml");
    std::fs::write(&src, "kind = \"brownian\"\nsigma = 0.1\ndrift = -0.30000000000000004\n").unwrap();
    let o = refract(&["validate", "--model", src.to_str().unwrap(), "--delta", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let echoed = v["manifest"]["model"].as_str().unwrap();
    let back = refract_core::model_file::ModelFile::parse(echoed).unwrap();
    let orig = refract_core::model_file::ModelFile::load(&src).unwrap();
    assert_eq!(back, orig);
    assert_eq!(back.to_toml(), echoed);
}

#[test]
fn bad_model_files_fail_validation() {
    let src = scratch("typo.toml");
    std::fs::write(&src, "kind = \"brownian\"\nsigma = 1.0\ndrfit = 0.0\n").unwrap();
    let o = refract(&["validate", "--model", src.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = refract(&["validate", "--model", "/nonexistent/model.toml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(refract(&["frobnicate"]).status.code(), Some(64));
    let o = refract(&["compute", "--model", &model("bm.toml")]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(refract(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_writes_samples_and_sidecar() {
    let bin = scratch("samples.bin");
    let o = refract(&[
        "simulate", "--model", &model("cpp_exp.toml"), "--q", "1", "--delta", "1", "--b", "0", "--x", "0",
        "--paths", "5000", "--seed", "3", "--samples", bin.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let samples = refract_core::monte_carlo::read_samples(&bin).unwrap();
    assert_eq!(samples.len(), 5000);
    assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    let side: serde_json::Value =
        serde_json::from_slice(&std::fs::read(refract_cli::sidecar(&bin)).unwrap()).unwrap();
    assert_eq!(side["manifest"]["seed"], 3);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["scheme"], "exact_bounded_variation");
}

#[test]
fn thread_cap_does_not_change_results() {
    let run = |threads: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_refract"));
        c.args(["simulate", "--model", &model("bm.toml"), "--q", "1", "--delta", "1", "--b", "0", "--x", "0"]);
        c.args(["--paths", "3000", "--h", "0.01", "--seed", "9"]);
        c.env_remove("REFRACT_THREADS");
        if let Some(t) = threads {
            c.env("REFRACT_THREADS", t);
        }
        c.output().unwrap().stdout
    };
    assert_eq!(run(None), run(Some("1")));
}

#[test]
fn compare_exit_codes() {
    let o = refract(&[
        "compare", "--model", &model("cpp_exp.toml"), "--q", "1", "--delta", "1", "--b", "0", "--x", "0",
        "--paths", "20000", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["ks"].as_f64().unwrap() <= v["threshold"].as_f64().unwrap());
    assert_eq!(v["deciles"].as_array().unwrap().len(), 9);
    // Both extrema atoms present: the formula no longer describes the simulated process.
    let o = refract(&[
        "compare", "--model", &model("cpp_negdrift.toml"), "--q", "1", "--delta", "-1", "--b", "0", "--x", "0",
        "--paths", "20000", "--seed", "1", "--allow-inadmissible",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn report_passes_for_two_sided_model() {
    let o = refract(&["report", "--model", &model("two_sided.toml"), "--delta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}
