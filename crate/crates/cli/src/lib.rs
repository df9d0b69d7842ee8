//! `usflab`: one subcommand per experiment driver of `usf-core`.
//!
//! Settings come from flags, then from an optional `--config` file, then
//! from the driver defaults. Every run writes `<subcommand>.csv` and
//! `<subcommand>.json` into the output directory; both start with the
//! artifact version and the full resolved config.

mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;
use usf_core::experiments::{
    run_connection_scaling, run_domination_coupling, run_renormalized_field, run_special_component, run_sprinkling,
    run_transience_probe, DominationConfig, ExperimentError, FieldConfig, LambdaSpec, Report, ScalingConfig,
    SpecialConfig, SprinklingConfig, TransienceConfig,
};
use usf_core::verify::{run_verify, Check};

pub use config::{pick, ConfigFile, IntList};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Overrides the output directory unless `--out` is given.
pub const OUT_DIR_ENV: &str = "USFLAB_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "usflab-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Precondition(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "usflab",
    version,
    about = "Uniform spanning forest and box percolation experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed. Drawn at random and printed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CI mode: refuse to run without an explicit seed.
    #[arg(long, global = true)]
    ci: bool,
    /// Output directory (default: $USFLAB_OUT_DIR, else ./usflab-out).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for trials (default: one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Key-value config file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Thinned forest against box percolation on one edge per cell.
    /// Defaults: d 2, radius 4, k 1, eps 1, 10000 trials.
    Domination(DominationArgs),
    /// Probability that B_n is connected inside B_2n.
    /// Defaults: lambda axis-lines:1, d 3, k 1, eps 0.25, n 8,16,32, 200 trials.
    ConnectScaling(ScalingArgs),
    /// Component counts of H across sprinkled annuli.
    /// Defaults: lambda axis-lines:1, d 2, k 1, eps 1, m 16, n 16, layers 4d, 200 trials.
    Sprinkling(SprinklingArgs),
    /// Sprinkling started from the special component.
    /// Defaults as for sprinkling.
    SpecialComponent(SprinklingArgs),
    /// Renormalized site field and its correlations.
    /// Defaults: lambda axis-lines:1, d 3, k 1, eps 0.25, n 8, 6 sites, 1000 trials.
    RenormField(FieldArgs),
    /// Effective resistance growth for one forest, two forests, and forest plus boxes.
    /// Defaults: d 3, k 1, eps 0.25, n 8,16,32, padding max n, tol 1e-8, 50 trials.
    Transience(TransienceArgs),
    /// Run the oracle and property checks and print a pass/fail table.
    Verify,
}

#[derive(Debug, Args)]
struct DominationArgs {
    #[arg(long)]
    d: Option<usize>,
    /// The window is [-radius, radius]^d.
    #[arg(long)]
    radius: Option<i64>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Decide every step exactly instead of screening in floating point.
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    /// axis-lines[:axis], independent-wusf[:padding], file:<path> or full-lattice.
    #[arg(long)]
    lambda: Option<LambdaSpec>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Comma-separated box sizes.
    #[arg(long, value_name = "N,..")]
    n: Option<IntList>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct SprinklingArgs {
    #[arg(long)]
    lambda: Option<LambdaSpec>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    m: Option<i64>,
    /// A perfect square; the sprinkled shell has width sqrt(n).
    #[arg(long)]
    n: Option<i64>,
    /// Number of annuli.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct FieldArgs {
    #[arg(long)]
    lambda: Option<LambdaSpec>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Coarse scale; must exceed 2k.
    #[arg(long)]
    n: Option<i64>,
    /// Coarse sites along the first axis.
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct TransienceArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<i64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_name = "N,..")]
    n: Option<IntList>,
    /// Padding of the wired tree around the sampled box.
    #[arg(long)]
    padding: Option<i64>,
    /// Relative residual of the resistance solver.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub enum Job {
    Domination(DominationConfig),
    ConnectScaling(ScalingConfig),
    Sprinkling(SprinklingConfig),
    SpecialComponent(SpecialConfig),
    RenormField(FieldConfig),
    Transience(TransienceConfig),
    Verify { seed: u64 },
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Domination(_) => "domination",
            Job::ConnectScaling(_) => "connect-scaling",
            Job::Sprinkling(_) => "sprinkling",
            Job::SpecialComponent(_) => "special-component",
            Job::RenormField(_) => "renorm-field",
            Job::Transience(_) => "transience",
            Job::Verify { .. } => "verify",
        }
    }

    fn config_json(&self) -> serde_json::Value {
        let v = match self {
            Job::Domination(c) => serde_json::to_value(c),
            Job::ConnectScaling(c) => serde_json::to_value(c),
            Job::Sprinkling(c) | Job::SpecialComponent(c) => serde_json::to_value(c),
            Job::RenormField(c) => serde_json::to_value(c),
            Job::Transience(c) => serde_json::to_value(c),
            Job::Verify { seed } => Ok(json!({ "seed": seed })),
        };
        v.expect("configs serialize")
    }
}

/// Settings shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub job: Job,
    pub out_dir: PathBuf,
    pub workers: Option<usize>,
}

/// Parse `argv` (program name first), run the subcommand and return the
/// process exit code: 0 success, 1 usage error, 2 runtime error.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    match resolve(cli).and_then(|rc| execute(&rc)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("usflab: {e}");
            e.exit_code()
        }
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let ci = cli.common.ci || file.get::<bool>("ci")?.unwrap_or(false);
    let seed = match cli.common.seed.or(file.get::<u64>("seed")?) {
        Some(s) => s,
        None if ci => {
            return Err(CliError::Usage(
                "CI mode requires an explicit seed (--seed or `seed =`)".into(),
            ))
        }
        None => {
            let s = rand::random::<u64>();
            println!("seed: {s} (drawn at random; pass --seed {s} to reproduce)");
            s
        }
    };
    let file_out = file.get::<PathBuf>("out")?;
    let out_dir = cli
        .common
        .out
        .or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .or(file_out)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let workers = cli.common.workers.or(file.get::<usize>("workers")?);
    if workers == Some(0) {
        return Err(CliError::Usage("workers must be at least 1".into()));
    }
    let job = build_job(cli.command, &file, seed)?;
    file.ensure_all_used()?;
    Ok(RunConfig { job, out_dir, workers })
}

fn trials(flag: Option<usize>, file: &ConfigFile, default: usize) -> Result<usize, CliError> {
    let t = pick(flag, file, "trials", default)?;
    if t == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    Ok(t)
}

fn build_job(command: Command, f: &ConfigFile, seed: u64) -> Result<Job, CliError> {
    Ok(match command {
        Command::Domination(a) => {
            let d = DominationConfig::default();
            Job::Domination(DominationConfig {
                dim: pick(a.d, f, "d", d.dim)?,
                radius: pick(a.radius, f, "radius", d.radius)?,
                k: pick(a.k, f, "k", d.k)?,
                eps: pick(a.eps, f, "eps", d.eps)?,
                trials: trials(a.trials, f, d.trials)?,
                seed,
                exact: a.exact || f.get::<bool>("exact")?.unwrap_or(d.exact),
            })
        }
        Command::ConnectScaling(a) => {
            let d = ScalingConfig::default();
            Job::ConnectScaling(ScalingConfig {
                lambda: pick(a.lambda, f, "lambda", d.lambda)?,
                dim: pick(a.d, f, "d", d.dim)?,
                k: pick(a.k, f, "k", d.k)?,
                eps: pick(a.eps, f, "eps", d.eps)?,
                n_list: pick(a.n, f, "n", IntList(d.n_list))?.0,
                trials: trials(a.trials, f, d.trials)?,
                seed,
            })
        }
        Command::Sprinkling(a) => Job::Sprinkling(sprinkling_config(a, f, seed)?),
        Command::SpecialComponent(a) => Job::SpecialComponent(sprinkling_config(a, f, seed)?),
        Command::RenormField(a) => {
            let d = FieldConfig::default();
            Job::RenormField(FieldConfig {
                lambda: pick(a.lambda, f, "lambda", d.lambda)?,
                dim: pick(a.d, f, "d", d.dim)?,
                k: pick(a.k, f, "k", d.k)?,
                eps: pick(a.eps, f, "eps", d.eps)?,
                n: pick(a.n, f, "n", d.n)?,
                sites: pick(a.sites, f, "sites", d.sites)?,
                trials: trials(a.trials, f, d.trials)?,
                seed,
            })
        }
        Command::Transience(a) => {
            let d = TransienceConfig::default();
            let padding = f.get::<i64>("padding")?;
            Job::Transience(TransienceConfig {
                dim: pick(a.d, f, "d", d.dim)?,
                k: pick(a.k, f, "k", d.k)?,
                eps: pick(a.eps, f, "eps", d.eps)?,
                n_list: pick(a.n, f, "n", IntList(d.n_list))?.0,
                padding: a.padding.or(padding).or(d.padding),
                trials: trials(a.trials, f, d.trials)?,
                seed,
                tol: pick(a.tol, f, "tol", d.tol)?,
            })
        }
        Command::Verify => Job::Verify { seed },
    })
}

fn sprinkling_config(a: SprinklingArgs, f: &ConfigFile, seed: u64) -> Result<SprinklingConfig, CliError> {
    let d = SprinklingConfig::default();
    let layers = f.get::<usize>("layers")?;
    Ok(SprinklingConfig {
        lambda: pick(a.lambda, f, "lambda", d.lambda)?,
        dim: pick(a.d, f, "d", d.dim)?,
        k: pick(a.k, f, "k", d.k)?,
        eps: pick(a.eps, f, "eps", d.eps)?,
        m: pick(a.m, f, "m", d.m)?,
        n: pick(a.n, f, "n", d.n)?,
        layers: a.layers.or(layers).or(d.layers),
        trials: trials(a.trials, f, d.trials)?,
        seed,
    })
}

/// Run a resolved config on a pool of the requested size and write outputs.
pub fn execute(rc: &RunConfig) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = rc.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_job(rc))
}

fn run_job(rc: &RunConfig) -> Result<(), CliError> {
    let job = &rc.job;
    log::info!("running {}", job.name());
    match job {
        Job::Domination(c) => emit(rc, &run_domination_coupling(c)?),
        Job::ConnectScaling(c) => emit(rc, &run_connection_scaling(c)?),
        Job::Sprinkling(c) => emit(rc, &run_sprinkling(c)?),
        Job::SpecialComponent(c) => emit(rc, &run_special_component(c)?),
        Job::RenormField(c) => emit(rc, &run_renormalized_field(c)?),
        Job::Transience(c) => emit(rc, &run_transience_probe(c)?),
        Job::Verify { seed } => {
            let report = VerifyReport {
                seed: *seed,
                checks: run_verify(*seed),
            };
            print!("{}", report.table());
            emit(rc, &report)?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Runtime(format!(
                    "{failed} of {} checks failed",
                    report.checks.len()
                )));
            }
            Ok(())
        }
    }
}

/// Header lines that open every CSV output.
pub fn csv_preamble(job: &Job) -> String {
    format!(
        "# usflab {VERSION}\n# subcommand: {}\n# config: {}\n",
        job.name(),
        job.config_json()
    )
}

fn emit<R: Report>(rc: &RunConfig, report: &R) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    std::fs::create_dir_all(&rc.out_dir).map_err(|e| io(&rc.out_dir, e))?;
    let name = rc.job.name();
    let body = report.csv();
    let csv_path = rc.out_dir.join(format!("{name}.csv"));
    std::fs::write(&csv_path, format!("{}{body}", csv_preamble(&rc.job))).map_err(|e| io(&csv_path, e))?;

    let doc = json!({
        "artifact": "usflab",
        "version": VERSION,
        "subcommand": name,
        "config": rc.job.config_json(),
        "report": report.summary(),
    });
    let json_path = rc.out_dir.join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(&doc).expect("reports serialize");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(|e| io(&json_path, e))?;

    if !matches!(rc.job, Job::Verify { .. }) {
        print!("{body}");
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

struct VerifyReport {
    seed: u64,
    checks: Vec<Check>,
}

impl VerifyReport {
    fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{mark}  {:<width$}  {}\n", c.name, c.detail));
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{passed}/{} checks passed\n", self.checks.len()));
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report for VerifyReport {
    fn csv_header(&self) -> Vec<&'static str> {
        vec!["check", "passed", "detail"]
    }

    fn csv_rows(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| vec![csv_field(&c.name), c.passed.to_string(), csv_field(&c.detail)])
            .collect()
    }

    fn summary(&self) -> serde_json::Value {
        json!({ "seed": self.seed, "checks": self.checks })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("usflab").chain(args.iter().copied()))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        resolve(cli)
    }

    #[test]
    fn flags_resolve_into_driver_configs() {
        let rc = parse(&[
            "connect-scaling",
            "--d",
            "3",
            "--k",
            "1",
            "--eps",
            "0.25",
            "--n",
            "8,16,32",
            "--trials",
            "200",
            "--seed",
            "7",
        ])
        .unwrap();
        let Job::ConnectScaling(c) = rc.job else {
            panic!("wrong job")
        };
        assert_eq!(c.n_list, vec![8, 16, 32]);
        assert_eq!((c.dim, c.k, c.eps, c.trials, c.seed), (3, 1, 0.25, 200, 7));
        assert_eq!(c.lambda, LambdaSpec::AxisLines { axis: 0 });
    }

    #[test]
    fn global_flags_go_before_or_after_the_subcommand() {
        let a = parse(&["--seed", "3", "--out", "x", "verify"]).unwrap();
        let b = parse(&["verify", "--seed", "3", "--out", "x"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.job, Job::Verify { seed: 3 });
    }

    #[test]
    fn config_file_fills_gaps_and_flags_win() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# sprinkling\nseed = 5\nm = 36\nn = 36\nlayers = 2\nk = 2\nworkers = 1\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let rc = parse(&["sprinkling", "--config", p, "--k", "1"]).unwrap();
        let Job::Sprinkling(c) = rc.job else {
            panic!("wrong job")
        };
        assert_eq!((c.m, c.n, c.layers, c.k, c.seed), (36, 36, Some(2), 1, 5));
        assert_eq!(c.eps, SprinklingConfig::default().eps);
        assert_eq!(rc.workers, Some(1));
    }

    #[test]
    fn unknown_config_keys_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "seed = 1\nlayers = 2\n").unwrap();
        let err = parse(&["connect-scaling", "--config", path.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("layers"));
    }

    #[test]
    fn ci_mode_needs_a_seed() {
        let err = parse(&["--ci", "verify"]).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(parse(&["--ci", "--seed", "1", "verify"]).is_ok());
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(parse_and_dispatch(["usflab", "connect-scaling", "--bogus", "1"]), 1);
        assert_eq!(parse_and_dispatch(["usflab", "connect-scaling", "--n", "8,x"]), 1);
        assert_eq!(parse_and_dispatch(["usflab", "frobnicate"]), 1);
        assert_eq!(parse_and_dispatch(["usflab", "--help"]), 0);
    }

    #[test]
    fn driver_preconditions_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = parse_and_dispatch(["usflab", "connect-scaling", "--k", "0", "--seed", "1", "--out", out]);
        assert_eq!(code, 1);
        let code = parse_and_dispatch(["usflab", "sprinkling", "--n", "15", "--seed", "1", "--out", out]);
        assert_eq!(code, 1);
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }

    #[test]
    fn missing_lambda_file_is_a_runtime_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = parse_and_dispatch([
            "usflab",
            "connect-scaling",
            "--lambda",
            "file:/nonexistent/lambda.txt",
            "--seed",
            "1",
            "--out",
            out,
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn outputs_start_with_version_and_config() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = parse_and_dispatch([
            "usflab",
            "connect-scaling",
            "--d",
            "2",
            "--n",
            "2,3",
            "--trials",
            "5",
            "--seed",
            "4",
            "--out",
            out,
        ]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(dir.path().join("connect-scaling.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), format!("# usflab {VERSION}"));
        assert_eq!(lines.next().unwrap(), "# subcommand: connect-scaling");
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# config: {\"lambda\":\"axis-lines:1\",\"dim\":2"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2);
        let json: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("connect-scaling.json")).unwrap()).unwrap();
        assert_eq!(json["version"], VERSION);
        assert_eq!(json["config"]["seed"], 4);
        assert_eq!(json.as_object().unwrap().keys().next().unwrap(), "artifact");
    }
}
