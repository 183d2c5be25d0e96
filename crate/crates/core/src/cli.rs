//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid configuration or input files,
//! 1 when a run aborts.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::abi::{self, AbiConfig, IterationReport};
use crate::baselines::{self, AbcSsConfig, EvalReport};
use crate::error::Error;
use crate::io;
use crate::models::{self, CurseTable, SimulatorBundle};
use crate::seed::{derive_seed, stream};

/// Posterior draws written for generative-model methods unless overridden.
pub const DEFAULT_POSTERIOR_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "abi")]
    Abi,
    #[serde(rename = "wabc")]
    Wabc,
    #[serde(rename = "abc-ss")]
    AbcSs,
    #[serde(rename = "rejection-abc")]
    RejectionAbc,
}

/// Settings shared by the single-round baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub budget: usize,
    pub keep_fraction: f64,
    /// Network settings; used by `abc-ss` only.
    #[serde(default)]
    pub abc_ss: AbcSsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: String,
    pub method: Method,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub abi: Option<AbiConfig>,
    #[serde(default)]
    pub baseline: Option<BaselineConfig>,
    /// Explicit tolerances; switches ABI to the fixed-schedule loop.
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub x_star_path: Option<PathBuf>,
    #[serde(default = "default_posterior_draws")]
    pub posterior_draws: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_posterior_draws() -> usize {
    DEFAULT_POSTERIOR_DRAWS
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    /// Checks the config and fills every seed from the master seed, so the
    /// echoed config is exactly what ran.
    pub fn resolve(mut self) -> Result<(Self, SimulatorBundle), ConfigError> {
        let model = models::by_name(&self.model).map_err(|e| ConfigError(e.to_string()))?;
        let bad = |e: Error| ConfigError(format!("invalid config: {e}"));
        match self.method {
            Method::Abi => {
                let abi = self
                    .abi
                    .as_mut()
                    .ok_or_else(|| ConfigError("method 'abi' needs an 'abi' block".into()))?;
                abi.seed = self.seed;
                abi.net.seed = derive_seed(self.seed, "net", 0);
                abi.density.seed = derive_seed(self.seed, "density", 0);
                abi.validate().map_err(bad)?;
                if let Some(s) = &self.schedule {
                    abi::validate_schedule(s).map_err(bad)?;
                    abi.iterations = s.len();
                }
                if self.posterior_draws == 0 {
                    return Err(ConfigError("posterior_draws must be >= 1".into()));
                }
            }
            _ => {
                let b = self.baseline.as_mut().ok_or_else(|| {
                    ConfigError("baseline methods need a 'baseline' block".into())
                })?;
                if b.budget == 0 || !(b.keep_fraction > 0.0 && b.keep_fraction <= 1.0) {
                    return Err(ConfigError(
                        "baseline needs budget >= 1 and keep_fraction in (0, 1]".into(),
                    ));
                }
                if self.method == Method::AbcSs {
                    b.abc_ss.net.seed = derive_seed(self.seed, "abc-ss", 0);
                    b.abc_ss.net.validate().map_err(bad)?;
                }
                if self.schedule.is_some() {
                    return Err(ConfigError(
                        "'schedule' applies to method 'abi' only".into(),
                    ));
                }
            }
        }
        Ok((self, model))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "abinfer",
    version,
    about = "Likelihood-free Bayesian inference"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a configured experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Compare two sample files.
    Eval {
        samples_a: PathBuf,
        samples_b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Acceptance rate of ε-ball rejection as the data dimension grows.
    DemoCurse {
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = models::CURSE_SIGMA)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print the registered model names.
    ListModels,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn runtime(e: Error) -> Failure {
    Failure::Runtime(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct RunReport<'a> {
    model: &'a str,
    method: Method,
    seed: u64,
    x_star_source: String,
    posterior_draws: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<&'a [IterationReport]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    simulations: Option<usize>,
}

/// Loads, resolves and runs an experiment config, writing all outputs.
fn cmd_run(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
) -> Result<(), Failure> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let (cfg, model) = cfg.resolve()?;
    let (x_star, x_source) = match &cfg.x_star_path {
        Some(p) => {
            let file = io::read_x_star(p).map_err(|e| Failure::Config(e.to_string()))?;
            if file.values.len() != model.data_dim {
                return Err(Failure::Config(format!(
                    "observation {} has {} values, model {} expects {}",
                    p.display(),
                    file.values.len(),
                    model.name,
                    model.data_dim
                )));
            }
            (file.values, p.display().to_string())
        }
        None => (
            model.observation().map_err(runtime)?,
            "built-in".to_string(),
        ),
    };
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| {
        Failure::Runtime(format!("cannot create {}: {e}", cfg.output_dir.display()))
    })?;
    let dir = cfg.output_dir.clone();
    write_file(&dir.join("config_echo.json"), &to_json(&cfg))?;
    write_file(
        &dir.join("x_star.csv"),
        &io::x_star_to_csv(&model.name, models::OBSERVATION_SEED, &x_star),
    )?;

    let log = |r: &IterationReport| {
        if !quiet {
            eprintln!("{}", abi::format_progress(r));
        }
    };
    let (draws, report) = match cfg.method {
        Method::Abi => {
            let abi_cfg = cfg.abi.as_ref().expect("resolved");
            let result = match &cfg.schedule {
                Some(s) => {
                    abi::run_abi_fixed_schedule_with_progress(&model, &x_star, s, abi_cfg, log)
                }
                None => abi::run_abi_with_progress(&model, &x_star, abi_cfg, log),
            }
            .map_err(runtime)?;
            let draws = result.posterior.sample(
                cfg.posterior_draws,
                &mut stream(cfg.seed, "posterior-samples", 0),
            );
            write_file(
                &dir.join("posterior_model.json"),
                &to_json(&result.posterior),
            )?;
            let report = to_json(&RunReport {
                model: &model.name,
                method: cfg.method,
                seed: cfg.seed,
                x_star_source: x_source,
                posterior_draws: draws.len(),
                iterations: Some(&result.reports),
                final_epsilon: result.reports.last().map(|r| r.epsilon),
                simulations: Some(result.reports.iter().map(|r| r.simulator_calls).sum()),
            });
            (draws, report)
        }
        method => {
            let b = cfg.baseline.as_ref().expect("resolved");
            let seed = derive_seed(cfg.seed, "baseline", 0);
            let draws = match method {
                Method::Wabc => {
                    baselines::wasserstein_abc(&model, &x_star, b.budget, b.keep_fraction, seed)
                }
                Method::RejectionAbc => {
                    baselines::rejection_abc(&model, &x_star, b.budget, b.keep_fraction, seed)
                }
                Method::AbcSs => {
                    baselines::abc_ss(&model, &x_star, b.budget, b.keep_fraction, &b.abc_ss, seed)
                        .map(|o| o.draws)
                }
                Method::Abi => unreachable!(),
            }
            .map_err(runtime)?;
            let report = to_json(&RunReport {
                model: &model.name,
                method,
                seed: cfg.seed,
                x_star_source: x_source,
                posterior_draws: draws.len(),
                iterations: None,
                final_epsilon: None,
                simulations: Some(b.budget),
            });
            (draws, report)
        }
    };
    io::write_samples_csv(
        &dir.join("posterior_samples.csv"),
        &model.param_names,
        &draws,
    )
    .map_err(runtime)?;
    write_file(&dir.join("report.json"), &report)?;
    if !quiet {
        eprintln!(
            "wrote {} draws to {} in {:.2}s",
            draws.len(),
            dir.display(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

fn cmd_eval(a: &Path, b: &Path, out: Option<PathBuf>, quiet: bool) -> Result<(), Failure> {
    let read = |p: &Path| io::read_samples_csv(p).map_err(|e| Failure::Config(e.to_string()));
    let (names_a, rows_a) = read(a)?;
    let (names_b, rows_b) = read(b)?;
    if names_a.len() != names_b.len() {
        return Err(Failure::Config(format!(
            "column count mismatch: {} has {}, {} has {}",
            a.display(),
            names_a.len(),
            b.display(),
            names_b.len()
        )));
    }
    let report: EvalReport = baselines::evaluate(&rows_a, &rows_b).map_err(runtime)?;
    let json = to_json(&report);
    if !quiet {
        print!("{json}");
    }
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("eval.json"), &json)
}

pub fn curse_csv(table: &CurseTable) -> String {
    let mut s = String::from("n,acceptance_rate\n");
    for r in &table.rows {
        s.push_str(&format!("{},{}\n", r.n, io::fmt_f64(r.acceptance_rate)));
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo_curse(
    dims: &[usize],
    epsilon: f64,
    trials: usize,
    sigma: f64,
    seed: u64,
    out: Option<PathBuf>,
    quiet: bool,
) -> Result<(), Failure> {
    let table = models::curse_of_dim_demo(dims, epsilon, trials, sigma, seed)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    write_file(&dir.join("curse.csv"), &curse_csv(&table))?;
    if !quiet {
        match table.slope {
            Some(s) => eprintln!("log-acceptance slope: {s:.6}"),
            None => eprintln!("log-acceptance slope: undefined (fewer than two nonzero rates)"),
        }
    }
    Ok(())
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            quiet,
        } => cmd_run(&config, seed, out, quiet),
        Command::Eval {
            samples_a,
            samples_b,
            out,
            quiet,
        } => cmd_eval(&samples_a, &samples_b, out, quiet),
        Command::DemoCurse {
            dims,
            epsilon,
            trials,
            sigma,
            seed,
            out,
            quiet,
        } => cmd_demo_curse(&dims, epsilon, trials, sigma, seed, out, quiet),
        Command::ListModels => {
            for name in models::MODEL_NAMES {
                println!("{name}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}
