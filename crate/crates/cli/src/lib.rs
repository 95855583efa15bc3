//! Command-line front end for `infogeo`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use infogeo::config::{parse_json, GeometryConfig, RunConfig};
use infogeo::diagnostics::{dahlberg_terms, CounterexampleConfig};
use infogeo::experiment::{geometry_report, FilterSetup};
use infogeo::verify::{run_suites, Fault, VerifyContext};
use infogeo::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "infogeo", version, about = "Deformed-exponential statistical manifolds and projection filters")]
pub struct Cli {
    /// JSON config file for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Only run checks whose `suite.check` name contains this text.
    #[arg(long, global = true)]
    pub filter: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the property suites.
    Verify {
        /// Corrupt a component to exercise the harness (`psi2`).
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Divergences and tensors between two or three densities.
    Geometry,
    /// Dense, projection and Kalman-Bucy filters on simulated paths.
    Filter {
        /// Independent simulated paths.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Term-by-term Dahlberg series.
    Counterexample {
        /// Sobolev order (overrides the config).
        #[arg(long)]
        k: Option<usize>,
        /// Integrability exponent (overrides the config).
        #[arg(long)]
        lambda: Option<f64>,
        /// Number of rows (overrides the config).
        #[arg(long)]
        terms: Option<usize>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => CliError::Config(e.to_string()),
            other => CliError::Failure(other.to_string()),
        }
    }
}

fn config(msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config error: {msg}"))
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("{}: {e}", path.display()))
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| config(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let started = Instant::now();
    let result = match &cli.command {
        Command::Verify { inject_fault } => cmd_verify(&cli, *inject_fault),
        Command::Geometry => cmd_geometry(&cli),
        Command::Filter { trials } => cmd_filter(&cli, *trials),
        Command::Counterexample { k, lambda, terms } => cmd_counterexample(&cli, *k, *lambda, *terms),
    };
    log::info!("finished in {:.2?}", started.elapsed());
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("infogeo: {e}");
            e.exit_code()
        }
    }
}

pub fn cmd_verify(cli: &Cli, fault: Option<Fault>) -> Result<i32, CliError> {
    let cx = VerifyContext::new(cli.seed, fault);
    let outcomes = run_suites(&cx, cli.filter.as_deref());
    if outcomes.is_empty() {
        return Err(config(format!("filter `{}` selects no checks", cli.filter.as_deref().unwrap_or(""))));
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for c in &outcomes {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {}.{}: {}", c.suite, c.check, c.detail).ok();
    }
    let failed: Vec<String> = outcomes.iter().filter(|c| !c.passed).map(|c| format!("{}.{}", c.suite, c.check)).collect();
    let report = serde_json::json!({ "seed": cli.seed, "checks": outcomes.len(), "failed": failed });
    writeln!(out, "{report}").ok();
    if let Some(dir) = &cli.out {
        ensure_dir(dir)?;
        let full = serde_json::json!({ "seed": cli.seed, "failed": failed, "outcomes": outcomes });
        write_file(&dir.join("verify.json"), &serde_json::to_string_pretty(&full).unwrap())?;
    }
    Ok(if failed.is_empty() { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_geometry(cli: &Cli) -> Result<i32, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| config("geometry needs --config"))?;
    let cfg = GeometryConfig::from_json(&read_config(path)?)?;
    let report = serde_json::to_string_pretty(&geometry_report(&cfg)?).unwrap();
    match &cli.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("geometry.json"), &report)?;
        }
        None => emit(&format!("{report}\n")),
    }
    Ok(EXIT_OK)
}

pub fn cmd_filter(cli: &Cli, trials: usize) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::from_json(&read_config(p)?)?,
        None => RunConfig::default(),
    };
    if trials == 0 {
        return Err(config("--trials must be positive"));
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("infogeo-out"));
    ensure_dir(&dir)?;
    let setup = FilterSetup::new(&cfg)?;
    log::info!("gram condition {:.3e}, {} trials", setup.basis.condition(), trials);
    let (results, summary) = setup.run(cli.seed, trials)?;
    for r in &results {
        let path = dir.join(format!("trial_{:03}.csv", r.trial));
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_failure(&path, e))?;
        if r.rows.is_empty() {
            w.write_record(CSV_COLUMNS).map_err(|e| io_failure(&path, e))?;
        }
        for row in &r.rows {
            w.serialize(row).map_err(|e| io_failure(&path, e))?;
        }
        w.flush().map_err(|e| io_failure(&path, e))?;
        if let Some(e) = &r.error {
            log::warn!("trial {}: {e}", r.trial);
        }
    }
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    write_file(&dir.join("summary.json"), &serde_json::to_string_pretty(&summary).unwrap())?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4e}"));
    println!(
        "{} trials, {} failed; median KL(dense|proj) = {}, KL(proj|dense) = {}, D_MO = {}",
        summary.trials,
        summary.failures,
        show(summary.median_kl_dp),
        show(summary.median_kl_pd),
        show(summary.median_dmo)
    );
    Ok(if summary.failures == 0 { EXIT_OK } else { EXIT_FAILURE })
}

pub const CSV_COLUMNS: [&str; 11] =
    ["t", "mass", "mean_proj", "var_proj", "mean_dense", "var_dense", "mean_kb", "var_kb", "kl_dp", "kl_pd", "dmo"];

pub fn cmd_counterexample(cli: &Cli, k: Option<usize>, lambda: Option<f64>, terms: Option<usize>) -> Result<i32, CliError> {
    let mut cfg: CounterexampleConfig = match &cli.config {
        Some(p) => parse_json(&read_config(p)?)?,
        None => CounterexampleConfig::default(),
    };
    cfg.k = k.unwrap_or(cfg.k);
    cfg.lambda = lambda.unwrap_or(cfg.lambda);
    cfg.terms = terms.unwrap_or(cfg.terms);
    let report = dahlberg_terms(&cfg).map_err(|e| match e {
        Error::InvalidParameter { .. } => config(e),
        other => other.into(),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    w.write_record(["n", "A_n", "B_n", "ratio_A", "ratio_B", "A_raw", "B_raw", "partial_A", "partial_B"]).unwrap();
    for t in &report.terms {
        w.write_record([
            t.n.to_string(),
            t.a_n.to_string(),
            t.b_n.to_string(),
            fmt(t.ratio_a),
            fmt(t.ratio_b),
            t.a_raw.to_string(),
            t.b_raw.to_string(),
            t.partial_a.to_string(),
            t.partial_b.to_string(),
        ])
        .unwrap();
    }
    let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
    eprintln!("alpha = {:.6}, epsilon = {:.6e}", report.alpha, report.epsilon);
    match &cli.out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("counterexample.csv"), &text)?;
        }
        None => emit(&text),
    }
    Ok(EXIT_OK)
}
