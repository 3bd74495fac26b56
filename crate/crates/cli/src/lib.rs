//! `refract` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 validation or comparison failure, 64 usage error.

use clap::{Args, Parser, Subcommand};
use refract_core::approximation::{convergence_report, ApproxSequence};
use refract_core::exec::{with_threads, Execution};
use refract_core::kernels::{kernel_property_report, KernelSet};
use refract_core::levy_models::{classify_and_admit, LevySpec};
use refract_core::model_file::ModelFile;
use refract_core::monte_carlo::{compare, simulate_u, write_samples, SimConfig, SimResult};
use refract_core::potential::{refracted_cdf, PotentialResult, RefractionProblem};
use refract_core::wiener_hopf::WhContext;
use refract_core::Error;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "refract", version, about = "Law of a refracted Lévy process at an exponential time")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic CDF, density and potential density on a grid (CSV, or JSON for a .json output).
    Compute(ProblemArgs),
    /// Monte Carlo samples of U at the exponential time.
    Simulate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Binary sample file.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Analytic law against simulation: KS statistic and decile z-scores.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Convergence table of the hyper-exponential approximation stages.
    Converge {
        #[command(flatten)]
        base: ModelArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        q: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [4u32, 6, 8])]
        stages: Vec<u32>,
    },
    /// Admissibility report; exit 2 when the problem is rejected.
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        delta: f64,
    },
    /// Kernel property checks.
    Report {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Model file (TOML).
    #[arg(long)]
    model: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ProblemArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
    /// Grid step override.
    #[arg(long, allow_negative_numbers = true)]
    dx: Option<f64>,
    /// Grid half-width override.
    #[arg(long, allow_negative_numbers = true)]
    length: Option<f64>,
    /// Compute rejected problems anyway, for diagnostics.
    #[arg(long)]
    allow_inadmissible: bool,
}

#[derive(Args, Debug, Clone)]
struct SimArgs {
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Parameters of a run, echoed into every output file.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunManifest {
    pub subcommand: String,
    pub model_path: String,
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub allow_inadmissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<u32>>,
    pub outputs: Vec<String>,
}

enum Failure {
    Runtime(String),
    Rejected(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotAdmitted(_) | Error::InvalidModel(_) | Error::GridMismatch(_) => Failure::Rejected(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<bool, Failure>;

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let threads = std::env::var("REFRACT_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    match with_threads(threads, || dispatch(cli.command)) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(Failure::Rejected(m)) => {
            eprintln!("refract: {m}");
            EXIT_FAILED
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("refract: {m}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Compute(p) => compute(&p),
        Command::Simulate { problem, sim, samples } => simulate(&problem, &sim, samples.as_deref()),
        Command::Compare { problem, sim } => compare_cmd(&problem, &sim),
        Command::Converge { base, q, delta, stages } => converge(&base, q, delta, &stages),
        Command::Validate { model, delta } => validate(&model, delta),
        Command::Report { model, q, delta } => report(&model, q, delta),
    }
}

fn load_model(args: &ModelArgs) -> std::result::Result<(ModelFile, LevySpec), Failure> {
    let file = ModelFile::load(&args.model).map_err(|e| match e {
        Error::Io(m) => Failure::Runtime(m),
        other => Failure::Rejected(other.to_string()),
    })?;
    let spec = file.to_spec()?;
    Ok((file, spec))
}

fn base_manifest(sub: &str, args: &ModelArgs, file: &ModelFile) -> RunManifest {
    RunManifest {
        subcommand: sub.into(),
        model_path: args.model.display().to_string(),
        model: file.to_toml(),
        outputs: args.out.iter().map(|p| p.display().to_string()).collect(),
        ..RunManifest::default()
    }
}

fn problem_manifest(sub: &str, p: &ProblemArgs, file: &ModelFile) -> RunManifest {
    RunManifest {
        q: Some(p.q),
        delta: Some(p.delta),
        b: Some(p.b),
        x: Some(p.x),
        dx: p.dx,
        length: p.length,
        allow_inadmissible: p.allow_inadmissible,
        ..base_manifest(sub, &p.model, file)
    }
}

fn build_problem(p: &ProblemArgs, spec: LevySpec) -> RefractionProblem {
    let mut problem = RefractionProblem::new(spec, p.q, p.delta, p.b, p.x).with_grid(p.dx, p.length);
    problem.allow_inadmissible = p.allow_inadmissible;
    problem.with_execution(Execution::Parallel)
}

fn sim_config(s: &SimArgs) -> SimConfig {
    SimConfig { n_paths: s.paths, step_h: s.h, seed: s.seed }
}

fn emit(out: Option<&Path>, text: &str) -> std::result::Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| Failure::Runtime(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    manifest: &'a RunManifest,
    #[serde(flatten)]
    body: T,
}

fn to_json<T: Serialize>(manifest: &RunManifest, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Document { manifest, body }).expect("reports serialize");
    s.push('\n');
    s
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn curve_csv(manifest: &RunManifest, r: &PotentialResult) -> String {
    let mut s = String::new();
    let header = serde_json::to_string(manifest).expect("manifest serializes");
    s.push_str("# manifest ");
    s.push_str(&header);
    s.push('\n');
    s.push_str("y,cdf,density,potential_density\n");
    for i in 0..r.cdf.len() {
        let line = [r.cdf.x(i), r.cdf.values[i], r.density.values[i], r.potential_measure_density.values[i]]
            .map(fmt17)
            .join(",");
        s.push_str(&line);
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct CurveBody<'a> {
    b: f64,
    x: f64,
    q: f64,
    y: Vec<f64>,
    cdf: &'a [f64],
    density: &'a [f64],
    potential_density: &'a [f64],
    diagnostics: &'a refract_core::potential::Diagnostics,
    admissibility: &'a refract_core::levy_models::AdmissibilityReport,
    warnings: &'a [String],
}

fn compute(p: &ProblemArgs) -> Outcome {
    let (file, spec) = load_model(&p.model)?;
    let manifest = problem_manifest("compute", p, &file);
    let r = refracted_cdf(&build_problem(p, spec))?;
    let out = p.model.out.as_deref();
    let text = if out.is_some_and(|o| o.extension().is_some_and(|e| e == "json")) {
        let body = CurveBody {
            b: r.b,
            x: r.x,
            q: r.q,
            y: (0..r.cdf.len()).map(|i| r.cdf.x(i)).collect(),
            cdf: &r.cdf.values,
            density: &r.density.values,
            potential_density: &r.potential_measure_density.values,
            diagnostics: &r.diagnostics,
            admissibility: &r.admissibility,
            warnings: &r.warnings,
        };
        to_json(&manifest, body)
    } else {
        curve_csv(&manifest, &r)
    };
    emit(out, &text)?;
    Ok(true)
}

#[derive(Serialize)]
struct SimSummary {
    n_paths: usize,
    scheme: refract_core::monte_carlo::Scheme,
    mean: f64,
    deciles: Vec<(f64, f64)>,
    empirical_cdf_at_b: f64,
    stderr_at_b: f64,
}

fn summarize(sim: &SimResult) -> SimSummary {
    let n = sim.samples.len() as f64;
    SimSummary {
        n_paths: sim.samples.len(),
        scheme: sim.scheme,
        mean: sim.samples.iter().sum::<f64>() / n,
        deciles: (1..10).map(|k| (k as f64 / 10.0, sim.quantile(k as f64 / 10.0))).collect(),
        empirical_cdf_at_b: sim.empirical_cdf(sim.b),
        stderr_at_b: sim.stderr_band(sim.b),
    }
}

fn simulate(p: &ProblemArgs, s: &SimArgs, samples: Option<&Path>) -> Outcome {
    let (file, spec) = load_model(&p.model)?;
    let mut manifest = problem_manifest("simulate", p, &file);
    manifest.paths = Some(s.paths);
    manifest.h = Some(s.h);
    manifest.seed = Some(s.seed);
    if let Some(path) = samples {
        manifest.outputs.push(path.display().to_string());
    }
    let sim = simulate_u(&build_problem(p, spec), &sim_config(s))?;
    if let Some(path) = samples {
        write_samples(path, &sim.samples)?;
        // The sample format has a fixed 16-byte header, so its manifest travels alongside.
        let side = sidecar(path);
        std::fs::write(&side, to_json(&manifest, serde_json::Map::new()))
            .map_err(|e| Failure::Runtime(format!("{}: {e}", side.display())))?;
    }
    emit(p.model.out.as_deref(), &to_json(&manifest, summarize(&sim)))?;
    Ok(true)
}

pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn compare_cmd(p: &ProblemArgs, s: &SimArgs) -> Outcome {
    let (file, spec) = load_model(&p.model)?;
    let mut manifest = problem_manifest("compare", p, &file);
    manifest.paths = Some(s.paths);
    manifest.h = Some(s.h);
    manifest.seed = Some(s.seed);
    let problem = build_problem(p, spec);
    let analytic = refracted_cdf(&problem)?;
    let sim = simulate_u(&problem, &sim_config(s))?;
    let report = compare(&analytic, &sim)?;
    emit(p.model.out.as_deref(), &to_json(&manifest, &report))?;
    Ok(report.passed)
}

fn converge(base: &ModelArgs, q: f64, delta: f64, stages: &[u32]) -> Outcome {
    let (file, spec) = load_model(base)?;
    let manifest = RunManifest { q: Some(q), delta: Some(delta), stages: Some(stages.to_vec()), ..base_manifest("converge", base, &file) };
    let seq = ApproxSequence::build(&spec, stages, Execution::Parallel)?;
    let report = convergence_report(&seq, q, delta, Execution::Parallel)?;
    emit(base.out.as_deref(), &to_json(&manifest, &report))?;
    Ok(report.passed)
}

#[derive(Serialize)]
struct Validation {
    admissibility: refract_core::levy_models::AdmissibilityReport,
}

fn validate(m: &ModelArgs, delta: f64) -> Outcome {
    let (file, spec) = load_model(m)?;
    let manifest = RunManifest { delta: Some(delta), ..base_manifest("validate", m, &file) };
    let (_, admissibility) = classify_and_admit(&spec, delta);
    let admitted = admissibility.admitted;
    for r in &admissibility.reasons {
        eprintln!("rejected: {r}");
    }
    emit(m.out.as_deref(), &to_json(&manifest, Validation { admissibility }))?;
    Ok(admitted)
}

fn report(m: &ModelArgs, q: f64, delta: f64) -> Outcome {
    let (file, spec) = load_model(m)?;
    let manifest = RunManifest { q: Some(q), delta: Some(delta), ..base_manifest("report", m, &file) };
    let wh = WhContext::build(&spec, q, delta)?;
    let ks = KernelSet::build_default(&wh)?;
    let report = kernel_property_report(&ks, Execution::Parallel);
    let passed = report.all_passed();
    emit(m.out.as_deref(), &to_json(&manifest, &report))?;
    Ok(passed)
}
