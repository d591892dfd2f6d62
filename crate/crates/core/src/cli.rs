//! `auxsbm` command line.
//!
//! Exit codes: 0 on success, 1 for usage, domain or malformed-input errors,
//! 2 for I/O errors. Structured output goes to stdout (JSON or CSV);
//! diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::detect::{map_detector, DetectionOptions, Likelihood};
use crate::divergence::{all_thresholds, region_sweep, ThresholdReport};
use crate::error::{Error, Result};
use crate::model::{sample_cbm, sample_sbm, LabeledGraph, ParamsSpec, SamplerOptions, Scenario};
use crate::sdp::{build_adjacency_objective, build_objective, certify_objective, solve, SolverOptions};
use crate::sim::{self, ExperimentConfig, FigureGrid};

const PARAMS_SCHEMA: &str = "\
PARAMS JSON (either form):
  binary:  {\"q0\": 9, \"q1\": 1, \"q2\": 3, \"q3\": 1, \"rho\": 0.5, \"xi\": 0.1}   (xi omitted for SBM)
  general: {\"m_x\": 2, \"m_y\": 2, \"P\": [[..m_y..] x m_x], \"Q\": [[..m_x*m_y..] x m_x*m_y], \"Xi\": [[..] x m_x]}
           micro-community index is j*m_x + i for x = i, y = j";

const GRAPH_AND_PARAMS_SCHEMA: &str = "\
GRAPH JSON:
  {\"n\": 6, \"model\": \"sbm\"|\"cbm\", \"x\": [..n..], \"y\": [..n..], \"edges\": [[u, v, sign], ..]}
  u < v, sign is 1 for SBM and +1/-1 for CBM; x and y are optional
PARAMS JSON:
  {\"q0\": 9, \"q1\": 1, \"q2\": 3, \"q3\": 1, \"rho\": 0.5, \"xi\": 0.1} or the general m_x/m_y/P/Q/Xi form";

const CONFIG_SCHEMA: &str = "\
CONFIG JSON:
  {\"params\": PARAMS, \"scenario\": \"sbm_known_y\", \"detector\": \"sdp\"|\"map\"|\"ml_bruteforce\",
   \"n\": [500], \"q0\": [7, 9], \"trials\": 100, \"base_seed\": 0, \"out\": \"aep.csv\",
   \"journal\": \"trials.ndjson\", \"threads\": 4, \"certify\": false, \"timing\": false,
   \"solver\": {\"grad_rtol\": 1e-8, ..}, \"likelihood\": \"poisson\"|\"binomial\", \"exact_y_count\": false}
  CSV columns: scenario,n,q0,rho,xi,trials,aep,aep_ci_lo,aep_ci_hi,exact_rate,certified_rate,mean_ms";

#[derive(Debug, Parser)]
#[command(name = "auxsbm", version, about = "Community recovery with auxiliary node labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a graph; writes graph JSON to --out or stdout.
    #[command(after_long_help = PARAMS_SCHEMA)]
    Sample(SampleArgs),
    /// Exact-recovery thresholds of a parameter set.
    #[command(after_long_help = PARAMS_SCHEMA)]
    Thresholds(ThresholdsArgs),
    /// Recovery-region boundary q0*(rho) as CSV `rho,q0_star,scenario`.
    #[command(after_long_help = PARAMS_SCHEMA)]
    Region(RegionArgs),
    /// Genie-aided MAP detection; prints DetectionResult JSON.
    #[command(after_long_help = GRAPH_AND_PARAMS_SCHEMA)]
    Detect(DetectArgs),
    /// Solve the SDP relaxation; prints SdpSolution JSON.
    #[command(after_long_help = GRAPH_AND_PARAMS_SCHEMA)]
    Solve(SolveArgs),
    /// Run a Monte Carlo experiment; writes the aggregate CSV.
    #[command(after_long_help = CONFIG_SCHEMA)]
    Simulate(SimulateArgs),
    /// Write the recovery-region figure data and a gnuplot script.
    Figures(FiguresArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fix the count of each y value instead of sampling it i.i.d.
    #[arg(long)]
    exact_y_count: bool,
    /// Graph JSON destination; a summary is printed instead of the graph.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ThresholdsArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Binary parameters; q0 is ignored.
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, default_value_t = 0.02)]
    rho_min: f64,
    #[arg(long, default_value_t = 0.98)]
    rho_max: f64,
    #[arg(long, default_value_t = 0.02)]
    rho_step: f64,
    /// Upper end of the q0 search; the lower end is max(q1, q2, q3).
    #[arg(long, default_value_t = 400.0)]
    q0_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Graph carrying true x and y labels (used as the genie).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    scenario: Scenario,
    #[arg(long, value_enum, default_value = "poisson")]
    likelihood: LikelihoodArg,
    /// Include per-node log-posterior scores.
    #[arg(long)]
    scores: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LikelihoodArg {
    Poisson,
    Binomial,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Binary parameters; optional for sbm_unknown_y.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    scenario: Scenario,
    /// Seed for the random initial factor.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also check the dual certificate.
    #[arg(long)]
    certify: bool,
    /// Include the factor V in the output.
    #[arg(long)]
    full: bool,
    /// Relative gradient tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    /// Replaces the config's n list.
    #[arg(long, num_args = 1..)]
    n: Option<Vec<usize>>,
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    certify: bool,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct FiguresArgs {
    /// Output directory for fig2.csv .. fig5.csv and figures.gp.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.02)]
    rho_step: f64,
    #[arg(long, default_value_t = 400.0)]
    q0_max: f64,
}

/// Parse `args` (including the program name), run the subcommand and return
/// the process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => 2,
        Err(e) => {
            eprintln!("auxsbm: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 2,
        Error::Csv(c) if matches!(c.kind(), csv::ErrorKind::Io(_)) => 2,
        _ => 1,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn read_params(path: &Path) -> Result<ParamsSpec> {
    let spec: ParamsSpec = read_json(path)?;
    spec.general().validate()?;
    Ok(spec)
}

fn read_graph(path: &Path) -> Result<LabeledGraph> {
    LabeledGraph::from_json_str(&fs::read_to_string(path)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Region(a) => cmd_region(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Figures(a) => cmd_figures(a),
    }
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let sample = match params.binary() {
        Some(b) => b.sample(a.n, a.seed, a.exact_y_count)?,
        None => {
            let general = params.general();
            let opts = SamplerOptions { exact_y_count: a.exact_y_count, ..Default::default() };
            if general.is_censored() {
                sample_cbm(&general, a.n, a.seed, &opts)?
            } else {
                sample_sbm(&general, a.n, a.seed, &opts)?
            }
        }
    };
    if sample.clipped_pairs > 0 {
        log::warn!("{} pairs had edge probability clipped to 1", sample.clipped_pairs);
    }
    match a.out {
        Some(path) => {
            fs::write(&path, sample.graph.to_json_string()?)?;
            print_json(&json!({
                "n": sample.graph.n(),
                "edges": sample.graph.num_edges(),
                "clipped_pairs": sample.clipped_pairs,
                "out": path,
            }))
        }
        None => {
            println!("{}", sample.graph.to_json_string()?);
            Ok(())
        }
    }
}

fn threshold_table(reports: &[ThresholdReport]) -> String {
    let mut s = format!("{:<12} {:>14}  {:<8} {:<8} argmin\n", "threshold", "value", "exact", "critical");
    for r in reports {
        let which = serde_json::to_value(r.which).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let argmin = r.argmin.as_ref().and_then(|a| serde_json::to_string(a).ok()).unwrap_or_default();
        s.push_str(&format!("{:<12} {:>14.9}  {:<8} {:<8} {}\n", which, r.value, r.exact_recovery, r.critical, argmin));
    }
    s
}

fn cmd_thresholds(a: ThresholdsArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let reports = all_thresholds(&params.general())?;
    match a.format {
        Format::Json => print_json(&reports),
        Format::Text => {
            print!("{}", threshold_table(&reports));
            Ok(())
        }
    }
}

fn rho_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && min > 0.0 && max < 1.0 && min <= max) {
        return Err(Error::domain(format!("invalid rho grid {min}..{max} step {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| min + k as f64 * step).collect())
}

fn cmd_region(a: RegionArgs) -> Result<()> {
    let params = read_params(&a.params)?;
    let base = *params.binary_or_err()?;
    if base.is_censored() != a.scenario.censored() {
        return Err(Error::domain(format!("params and scenario {} disagree on censoring", a.scenario)));
    }
    let grid = rho_grid(a.rho_min, a.rho_max, a.rho_step)?;
    let lo = base.q1.max(base.q2).max(base.q3);
    let points = region_sweep(&base.with_q0(lo), a.scenario, &grid, (lo, a.q0_max))?;
    match a.out {
        Some(path) => sim::write_boundary_csv(&path, &[(a.scenario, &points)]),
        None => {
            let mut out = io::stdout().lock();
            writeln!(out, "rho,q0_star,scenario")?;
            for p in &points {
                writeln!(out, "{:.6},{:.6},{}", p.rho, p.q0_star, a.scenario)?;
            }
            Ok(())
        }
    }
}

fn cmd_detect(a: DetectArgs) -> Result<()> {
    let params = read_params(&a.params)?.general();
    let graph = read_graph(&a.graph)?;
    let genie = graph.micro_labels(params.m_x)?;
    let likelihood = match a.likelihood {
        LikelihoodArg::Poisson => Likelihood::Poisson,
        LikelihoodArg::Binomial => Likelihood::Binomial,
    };
    let opts = DetectionOptions { likelihood, keep_scores: a.scores };
    print_json(&map_detector(a.scenario, &graph, &params, &genie, &opts)?)
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let params = a.params.as_deref().map(read_params).transpose()?;
    let binary = params.as_ref().map(ParamsSpec::binary_or_err).transpose()?;
    let objective = match binary {
        Some(b) => build_objective(&graph, b, a.scenario)?,
        None if a.scenario == Scenario::SbmUnknownY => build_adjacency_objective(&graph)?,
        None => return Err(Error::domain(format!("scenario {} needs --params", a.scenario))),
    };
    let mut opts = SolverOptions { seed: a.seed, ..SolverOptions::default() };
    if let Some(tol) = a.tol {
        opts.grad_rtol = tol;
    }
    let mut solution = solve(&objective, &opts)?;
    if !a.full {
        solution.v = None;
    }
    if a.certify {
        let rho_hat = graph.y().map(|y| y.iter().filter(|&&l| l == 1).count() as f64 / y.len().max(1) as f64);
        let certificate = certify_objective(&objective, binary, &solution.x_hat, rho_hat)?;
        print_json(&json!({ "solution": solution, "certificate": certificate }))
    } else {
        print_json(&solution)
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut config: ExperimentConfig = read_json(&a.config)?;
    if let Some(t) = a.trials {
        config.trials = t;
    }
    if let Some(n) = a.n {
        config.n = n;
    }
    if let Some(s) = a.seed {
        config.base_seed = s;
    }
    if a.out.is_some() {
        config.out = a.out;
    }
    if a.certify {
        config.certify = true;
    }
    if a.threads.is_some() {
        config.threads = a.threads;
    }
    if config.out.is_none() {
        return Err(Error::domain("no output path: set \"out\" in the config or pass --out"));
    }
    let report = sim::run_experiment(&config)?;
    if report.resumed > 0 {
        log::info!("resumed {} trials from the journal", report.resumed);
    }
    Ok(())
}

fn cmd_figures(a: FiguresArgs) -> Result<()> {
    let grid = FigureGrid { rho: rho_grid(a.rho_step, 1.0 - a.rho_step / 2.0, a.rho_step)?, q0_hi: a.q0_max };
    let figures = sim::reproduce_figures(&a.out, &grid)?;
    let summary: Vec<_> = figures
        .iter()
        .map(|f| json!({ "figure": f.name, "points": f.known.len(), "known_above_unknown": f.known_above_unknown }))
        .collect();
    print_json(&summary)
}
