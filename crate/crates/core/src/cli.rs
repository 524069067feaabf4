//! Command-line surface: `classify`, `sweep`, `oracle`, `validate` and `ldp`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage or parameter error,
//! 3 numerical or convergence failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::env::{make_environment, DisorderSpec};
use crate::polymer::{log_partition, oracle_log_partition, PolymerParams, Window};
use crate::rates::{classify_region, Exponent, HSign};
use crate::scaling::validation::{run_suite, Suite};
use crate::scaling::{
    run_distributional, run_ldp_validation, run_logz_sweep, run_xi_check, Check, ScalingReport, SweepConfig,
};
use crate::varsolve::variant_of;
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Largest `N` accepted by `oracle`.
pub const CLI_ORACLE_MAX_N: usize = 16;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "polylab", version, about = "Range-interacting polymer in a random environment")]
pub struct Cli {
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, env = "POLYLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Place (alpha, gamma, zeta, sign h) in the phase diagram.
    Classify(ClassifyQuery),
    /// Run the checks of a TOML configuration and write CSV/JSON results.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the transfer engine with path enumeration.
    Oracle(OracleQuery),
    /// Run an acceptance suite: oracle, ldp, distributional, regions or all.
    Validate {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact walk probabilities against a large-deviation rate.
    Ldp {
        #[arg(long)]
        xi: f64,
        #[arg(long, allow_hyphen_values = true)]
        u: f64,
        #[arg(long)]
        v: f64,
        /// Comma-separated N values; a default ladder when omitted.
        #[arg(long = "n-list", value_delimiter = ',')]
        n_list: Vec<usize>,
        /// Relative tolerance; exit 1 when exceeded.
        #[arg(long)]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignArg {
    Positive,
    Zero,
    Negative,
}

impl From<SignArg> for HSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Positive => HSign::Positive,
            SignArg::Zero => HSign::Zero,
            SignArg::Negative => HSign::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ClassifyQuery {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value = "inf", allow_hyphen_values = true)]
    pub gamma: Exponent,
    #[arg(long, default_value = "inf", allow_hyphen_values = true)]
    pub zeta: Exponent,
    #[arg(long = "h-sign", value_enum, default_value = "positive")]
    pub h_sign: SignArg,
    /// Treat the disorder coupling as zero.
    #[arg(long = "no-disorder", default_value_t = false)]
    #[serde(default)]
    pub no_disorder: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OracleQuery {
    #[arg(long = "n")]
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long = "beta-hat", default_value_t = 1.0)]
    pub beta_hat: f64,
    #[arg(long = "h-hat", default_value_t = 0.0, allow_hyphen_values = true)]
    pub h_hat: f64,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub gamma: Exponent,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub zeta: Exponent,
}

/// Everything a configuration file can hold.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub classify: Vec<ClassifyQuery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oracle: Vec<OracleQuery>,
}

impl RunConfig {
    /// Parses a run file. A file holding a bare sweep table is accepted too.
    pub fn from_toml(text: &str) -> Result<Self> {
        let run: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if run.sweep.is_some() || !run.classify.is_empty() || !run.oracle.is_empty() {
            return Ok(run);
        }
        match toml::from_str::<SweepConfig>(text) {
            Ok(sweep) => Ok(RunConfig { sweep: Some(sweep), ..run }),
            Err(e) => Err(Error::Config(e.to_string())),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_USAGE;
        }
        // a global pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::NonFiniteWeight { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Classify(q) => cmd_classify(&q),
        Command::Sweep { config, out } => cmd_sweep(&config, out.as_deref()),
        Command::Oracle(q) => cmd_oracle(&q),
        Command::Validate { suite, out } => cmd_validate(&suite, out.as_deref()),
        Command::Ldp { xi, u, v, n_list, tol } => cmd_ldp(xi, u, v, &n_list, tol),
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn classify_json(q: &ClassifyQuery) -> Result<serde_json::Value> {
    let label = classify_region(q.alpha, q.gamma, q.zeta, q.h_sign.into(), !q.no_disorder)?;
    Ok(serde_json::to_value(label)?)
}

pub fn cmd_classify(q: &ClassifyQuery) -> Result<i32> {
    print_json(&classify_json(q)?)?;
    Ok(EXIT_OK)
}

pub fn oracle_json(q: &OracleQuery) -> Result<serde_json::Value> {
    if q.n > CLI_ORACLE_MAX_N {
        return Err(Error::CostGuard { n: q.n, limit: CLI_ORACLE_MAX_N });
    }
    let env = make_environment(DisorderSpec::new(q.alpha, q.p, q.seed)?)?;
    let params = PolymerParams::new(q.alpha, q.beta_hat, q.h_hat, q.gamma, q.zeta, q.n)?;
    let engine = log_partition(&env, &params, Window::Auto)?;
    let oracle = oracle_log_partition(&env, &params)?;
    let rel_diff = (engine - oracle).abs() / oracle.abs().max(1.0);
    Ok(json!({ "version": VERSION, "engine": engine, "oracle": oracle, "rel_diff": rel_diff }))
}

pub fn cmd_oracle(q: &OracleQuery) -> Result<i32> {
    print_json(&oracle_json(q)?)?;
    Ok(EXIT_OK)
}

fn csv_header(version: &str) -> String {
    format!("# polylab-version {version}\n")
}

/// Writes sweep rows as CSV behind a version comment line.
pub fn write_rows_csv(path: &Path, report: &ScalingReport) -> Result<()> {
    let mut buf = csv_header(VERSION).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in &report.rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs every check listed in the sweep and writes `sweep.csv` and `summary.json`.
pub fn cmd_sweep(config: &Path, out: Option<&Path>) -> Result<i32> {
    let text = fs::read_to_string(config).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let run = RunConfig::from_toml(&text)?;
    let sweep = run.sweep.clone().ok_or_else(|| Error::Config("no [sweep] table".into()))?;
    let dir = out.map(Path::to_path_buf).or(run.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let outcome = run_sweep_checks(&sweep, &dir)?;
    println!("{}", serde_json::to_string(&outcome.summary)?);
    Ok(outcome.code)
}

pub struct SweepOutcome {
    pub summary: serde_json::Value,
    pub code: i32,
}

pub fn run_sweep_checks(sweep: &SweepConfig, dir: &Path) -> Result<SweepOutcome> {
    sweep.validate()?;
    let mut summary = serde_json::Map::new();
    summary.insert("version".into(), json!(VERSION));
    let mut passed = true;
    let mut code = EXIT_OK;
    if sweep.checks.iter().any(|c| matches!(c, Check::LogzLimit | Check::VariationalCoupling)) {
        let report = run_logz_sweep(sweep)?;
        write_rows_csv(&dir.join("sweep.csv"), &report)?;
        passed &= report.verdict.passed;
        if report.unconverged_fraction > sweep.max_unconverged_fraction {
            code = EXIT_NUMERICAL;
        }
        summary.insert("region".into(), json!(report.label.region.to_string()));
        summary.insert("label".into(), serde_json::to_value(&report.label)?);
        summary.insert("exponent_fit".into(), serde_json::to_value(report.exponent_fit)?);
        summary.insert("extrapolation".into(), serde_json::to_value(report.extrapolation)?);
        summary.insert("limit".into(), json!(report.limit));
        summary.insert("unconverged_fraction".into(), json!(report.unconverged_fraction));
        summary.insert("logz_verdict".into(), serde_json::to_value(&report.verdict)?);
    }
    if sweep.checks.contains(&Check::XiHistogram) {
        let xi = run_xi_check(sweep)?;
        passed &= xi.passed;
        summary.insert("xi_check".into(), serde_json::to_value(&xi)?);
    }
    if sweep.checks.contains(&Check::Ldp) {
        let l = sweep.ldp.as_ref().ok_or_else(|| Error::Config("check 'ldp' needs an [sweep.ldp] table".into()))?;
        let rep = run_ldp_validation(l.xi, l.u, l.v, &l.n_list)?;
        passed &= rep.passes(sweep.tolerance.value);
        summary.insert("ldp".into(), serde_json::to_value(&rep)?);
    }
    if sweep.checks.contains(&Check::Distributional) {
        let label = sweep.label()?;
        let variant = variant_of(&label.region)
            .ok_or_else(|| Error::Config(format!("{} has no random limit law", label.region)))?;
        let rep = run_distributional(
            variant,
            sweep.beta_hat,
            sweep.h_hat,
            sweep.seeds.len(),
            sweep.distributional_resolution,
        )?;
        passed &= rep.ks <= sweep.tolerance.value;
        summary.insert("distributional".into(), serde_json::to_value(&rep)?);
    }
    summary.insert("verdict".into(), json!(if passed { "pass" } else { "fail" }));
    let summary = serde_json::Value::Object(summary);
    write_json(&dir.join("summary.json"), &summary)?;
    if code == EXIT_OK && !passed {
        code = EXIT_FAIL;
    }
    Ok(SweepOutcome { summary, code })
}

pub fn cmd_validate(suite: &str, out: Option<&Path>) -> Result<i32> {
    let suite: Suite = suite.parse()?;
    let outcomes = run_suite(suite);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let passed = outcomes.iter().all(|o| o.passed);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let name = format!("validate_{}.json", serde_json::to_value(suite)?.as_str().unwrap_or("suite"));
        write_json(&dir.join(name), &json!({ "version": VERSION, "passed": passed, "criteria": outcomes }))?;
    }
    Ok(if passed { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_ldp(xi: f64, u: f64, v: f64, n_list: &[usize], tol: Option<f64>) -> Result<i32> {
    let rep = run_ldp_validation(xi, u, v, n_list)?;
    let mut value = serde_json::to_value(&rep)?;
    value["version"] = json!(VERSION);
    print_json(&value)?;
    Ok(match tol {
        Some(t) if !rep.passes(t) => EXIT_FAIL,
        _ => EXIT_OK,
    })
}
