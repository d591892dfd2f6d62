//! Monte Carlo harness: per-trial detection on sampled graphs, aggregate
//! error rates with Wilson intervals, recovery-region figures and empirical
//! phase-transition estimates.
//!
//! Trial `t` of every point uses seed `base_seed + t` for both the graph and
//! the solver, so a configuration fully determines its output. Completed
//! trials are appended to an NDJSON journal; a rerun with the same journal
//! skips them.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{align_and_score, map_detector, ml_bruteforce, spins_to_labels, DetectionOptions, Likelihood, Symmetry};
use crate::divergence::{region_sweep, BoundaryPoint};
use crate::error::{Error, Result};
use crate::model::{sample_cbm, sample_sbm, BinaryModelParams, LabeledGraph, ParamsSpec, SamplerOptions, Scenario};
use crate::sdp::{build_objective, certify, solve, SolverOptions};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;
/// AEP values below this are reported as upper bounds.
pub const AEP_RESOLUTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Genie-aided MAP for the scenario.
    Map,
    /// Semidefinite relaxation with rounding.
    #[default]
    Sdp,
    /// Exhaustive ML (`n <= 16`).
    MlBruteforce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamsSpec,
    pub scenario: Scenario,
    #[serde(default)]
    pub detector: Detector,
    pub n: Vec<usize>,
    /// Values of `q0` to sweep (binary parameters only); defaults to the
    /// value in `params`.
    #[serde(default)]
    pub q0: Option<Vec<f64>>,
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// CSV destination.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub journal: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub certify: bool,
    /// Fill the `mean_ms` column (makes the CSV timing-dependent).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub likelihood: Likelihood,
    /// Sample `y` with exact counts instead of i.i.d.
    #[serde(default)]
    pub exact_y_count: bool,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if self.n.is_empty() {
            return Err(Error::domain("at least one n is required"));
        }
        if let Some(&bad) = self.n.iter().find(|&&n| n < 2) {
            return Err(Error::domain(format!("n = {bad} is too small")));
        }
        if self.detector != Detector::Map {
            self.params.binary_or_err()?;
            if let Some(&odd) = self.n.iter().find(|&&n| n % 2 == 1) {
                return Err(Error::domain(format!("n = {odd} is odd; balanced detectors need even n")));
            }
        }
        if self.detector == Detector::MlBruteforce {
            if let Some(&big) = self.n.iter().find(|&&n| n > crate::detect::ML_MAX_N) {
                return Err(Error::domain(format!("n = {big} is too large for brute force")));
            }
        }
        if self.q0.is_some() {
            self.params.binary_or_err()?;
        }
        if self.params.general().is_censored() != self.scenario.censored() {
            return Err(Error::domain(format!("params and scenario {} disagree on censoring", self.scenario)));
        }
        if self.certify && self.detector != Detector::Sdp {
            return Err(Error::domain("certification applies to the sdp detector only"));
        }
        for p in self.points() {
            if let Some(b) = p.binary {
                b.validate()?;
            }
        }
        Ok(())
    }

    fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &n in &self.n {
            match (&self.q0, self.params.binary()) {
                (Some(list), Some(b)) => out.extend(list.iter().map(|&q0| Point { n, binary: Some(b.with_q0(q0)) })),
                (_, b) => out.push(Point { n, binary: b.copied() }),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n: usize,
    binary: Option<BinaryModelParams>,
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scenario: Scenario,
    pub n: usize,
    pub q0: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub errors: usize,
    pub exact: bool,
    pub certified: Option<bool>,
    pub ms: f64,
}

/// Aggregate of one `(scenario, n, q0)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: Scenario,
    pub n: usize,
    pub q0: Option<f64>,
    pub rho: Option<f64>,
    pub xi: Option<f64>,
    pub trials: usize,
    pub aep: f64,
    pub aep_ci_lo: f64,
    pub aep_ci_hi: f64,
    /// `aep < AEP_RESOLUTION`: treat `aep_ci_hi` as the reportable value.
    pub aep_is_upper_bound: bool,
    pub exact_rate: f64,
    pub certified_rate: Option<f64>,
    pub mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<AggregateRow>,
    /// Trials loaded from the journal instead of being rerun.
    pub resumed: usize,
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the endpoints are exact at k = 0 and k = n; roundoff would leave ~1e-22
    let lo = if k == 0.0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Everything needed to run one trial.
#[derive(Debug, Clone)]
pub struct TrialSpec {
    pub params: ParamsSpec,
    pub scenario: Scenario,
    pub detector: Detector,
    pub n: usize,
    pub certify: bool,
    pub solver: SolverOptions,
    pub likelihood: Likelihood,
    pub exact_y_count: bool,
}

fn sample_for(spec: &TrialSpec, seed: u64) -> Result<LabeledGraph> {
    if let Some(b) = spec.params.binary() {
        return Ok(b.sample(spec.n, seed, spec.exact_y_count)?.graph);
    }
    let general = spec.params.general();
    let opts = SamplerOptions { exact_y_count: spec.exact_y_count, ..Default::default() };
    let s = if general.is_censored() {
        sample_cbm(&general, spec.n, seed, &opts)?
    } else {
        sample_sbm(&general, spec.n, seed, &opts)?
    };
    Ok(s.graph)
}

/// `(errors, certified)` for one sampled graph.
pub fn run_trial(spec: &TrialSpec, seed: u64) -> Result<(usize, Option<bool>)> {
    let graph = sample_for(spec, seed)?;
    let truth = graph.x().expect("sampled graphs carry labels").to_vec();
    match spec.detector {
        Detector::Map => {
            let general = spec.params.general();
            let genie = graph.micro_labels(general.m_x)?;
            let opts = DetectionOptions { likelihood: spec.likelihood, keep_scores: false };
            let r = map_detector(spec.scenario, &graph, &general, &genie, &opts)?;
            Ok((r.errors.unwrap_or(0), None))
        }
        Detector::Sdp => {
            let b = spec.params.binary_or_err()?;
            let objective = build_objective(&graph, b, spec.scenario)?;
            let sol = solve(&objective, &SolverOptions { seed, ..spec.solver })?;
            let errors = align_and_score(&spins_to_labels(&sol.x_hat), &truth, Symmetry::GlobalSign)?;
            let certified = if spec.certify {
                Some(certify(&graph, b, spec.scenario, &sol.x_hat)?.is_certified)
            } else {
                None
            };
            Ok((errors, certified))
        }
        Detector::MlBruteforce => {
            let b = spec.params.binary_or_err()?;
            let ml = ml_bruteforce(&graph, b, spec.scenario)?;
            Ok((ml.detection.errors.unwrap_or(0), None))
        }
    }
}

type RecordKey = (usize, Option<u64>, u64);

fn record_key(n: usize, q0: Option<f64>, seed: u64) -> RecordKey {
    (n, q0.map(f64::to_bits), seed)
}

fn load_journal(path: &Path, scenario: Scenario) -> Result<HashMap<RecordKey, TrialRecord>> {
    let mut out = HashMap::new();
    if !path.exists() {
        return Ok(out);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is skipped
        let Ok(rec) = serde_json::from_str::<TrialRecord>(&line) else { continue };
        if rec.scenario == scenario {
            out.insert(record_key(rec.n, rec.q0, rec.seed), rec);
        }
    }
    Ok(out)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::domain(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Run every `(n, q0)` point of `config`, write the CSV (if `out` is set)
/// and return the aggregates.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut done = match &config.journal {
        Some(p) => load_journal(p, config.scenario)?,
        None => HashMap::new(),
    };
    let resumed_before = done.len();
    let mut journal = match &config.journal {
        Some(p) => Some(BufWriter::new(OpenOptions::new().create(true).append(true).open(p)?)),
        None => None,
    };
    let chunk = config.threads.unwrap_or_else(rayon::current_num_threads).max(1) * 4;
    let mut rows = Vec::new();
    let mut resumed = 0;
    for point in config.points() {
        let spec = TrialSpec {
            params: point.binary.map_or_else(|| config.params.clone(), ParamsSpec::Binary),
            scenario: config.scenario,
            detector: config.detector,
            n: point.n,
            certify: config.certify,
            solver: config.solver,
            likelihood: config.likelihood,
            exact_y_count: config.exact_y_count,
        };
        let q0 = point.binary.map(|b| b.q0);
        let mut records = Vec::with_capacity(config.trials);
        let todo: Vec<usize> = (0..config.trials)
            .filter(|&t| {
                let seed = config.base_seed + t as u64;
                match done.remove(&record_key(point.n, q0, seed)) {
                    Some(rec) => {
                        records.push(rec);
                        resumed += 1;
                        false
                    }
                    None => true,
                }
            })
            .collect();
        for batch in todo.chunks(chunk) {
            let fresh: Vec<Result<TrialRecord>> = with_pool(config.threads, || {
                batch
                    .par_iter()
                    .map(|&t| {
                        let seed = config.base_seed + t as u64;
                        let start = Instant::now();
                        let (errors, certified) = run_trial(&spec, seed)?;
                        Ok(TrialRecord {
                            scenario: config.scenario,
                            n: point.n,
                            q0,
                            trial: t,
                            seed,
                            errors,
                            exact: errors == 0,
                            certified,
                            ms: start.elapsed().as_secs_f64() * 1e3,
                        })
                    })
                    .collect()
            })?;
            for rec in fresh {
                let rec = rec?;
                if let Some(j) = journal.as_mut() {
                    serde_json::to_writer(&mut *j, &rec)?;
                    j.write_all(b"\n")?;
                }
                records.push(rec);
            }
            if let Some(j) = journal.as_mut() {
                j.flush()?;
            }
        }
        records.sort_by_key(|r| r.trial);
        rows.push(aggregate(config.scenario, point, &records));
    }
    debug_assert!(resumed <= resumed_before);
    if let Some(out) = &config.out {
        write_csv(out, &rows, config.timing)?;
    }
    Ok(ExperimentReport { rows, resumed })
}

fn aggregate(scenario: Scenario, point: Point, records: &[TrialRecord]) -> AggregateRow {
    let trials = records.len();
    let node_errors: u64 = records.iter().map(|r| r.errors as u64).sum();
    let nodes = (trials * point.n) as u64;
    let aep = node_errors as f64 / nodes as f64;
    let (lo, hi) = wilson_interval(node_errors, nodes);
    let exact = records.iter().filter(|r| r.exact).count() as f64 / trials as f64;
    let certified_rate = records
        .iter()
        .map(|r| r.certified)
        .collect::<Option<Vec<bool>>>()
        .map(|c| c.iter().filter(|&&v| v).count() as f64 / trials as f64);
    AggregateRow {
        scenario,
        n: point.n,
        q0: point.binary.map(|b| b.q0),
        rho: point.binary.map(|b| b.rho),
        xi: point.binary.and_then(|b| b.xi),
        trials,
        aep,
        aep_ci_lo: lo,
        aep_ci_hi: hi,
        aep_is_upper_bound: aep < AEP_RESOLUTION,
        exact_rate: exact,
        certified_rate,
        mean_ms: records.iter().map(|r| r.ms).sum::<f64>() / trials as f64,
    }
}

pub const CSV_HEADER: [&str; 12] =
    ["scenario", "n", "q0", "rho", "xi", "trials", "aep", "aep_ci_lo", "aep_ci_hi", "exact_rate", "certified_rate", "mean_ms"];

fn opt(v: Option<f64>, fmt: fn(f64) -> String) -> String {
    v.map(fmt).unwrap_or_default()
}

/// Write aggregate rows; `mean_ms` stays empty unless `timing` is set.
pub fn write_csv(path: &Path, rows: &[AggregateRow], timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    let fixed = |v: f64| format!("{v:.6}");
    let sci = |v: f64| format!("{v:.6e}");
    for r in rows {
        w.write_record([
            r.scenario.as_str().to_string(),
            r.n.to_string(),
            opt(r.q0, fixed),
            opt(r.rho, fixed),
            opt(r.xi, fixed),
            r.trials.to_string(),
            sci(r.aep),
            sci(r.aep_ci_lo),
            sci(r.aep_ci_hi),
            fixed(r.exact_rate),
            opt(r.certified_rate, fixed),
            if timing { format!("{:.3}", r.mean_ms) } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid shared by the figure sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureGrid {
    pub rho: Vec<f64>,
    pub q0_hi: f64,
}

impl Default for FigureGrid {
    fn default() -> Self {
        FigureGrid { rho: (1..50).map(|k| k as f64 * 0.02).collect(), q0_hi: 400.0 }
    }
}

/// Boundaries of one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureOutput {
    pub name: String,
    pub base: BinaryModelParams,
    pub known: Vec<BoundaryPoint>,
    pub unknown: Vec<BoundaryPoint>,
    /// `ρ` values where the known-`y` boundary exceeds the unknown one.
    pub known_above_unknown: Vec<f64>,
}

/// The four recovery-region figures: `(name, q1, q2, q3, xi)`.
pub const FIGURES: [(&str, f64, f64, f64, Option<f64>); 4] = [
    ("fig2", 1.0, 3.0, 1.0, None),
    ("fig3", 1.0, 1.0, 1.0, None),
    ("fig4", 1.0, 3.0, 1.0, Some(0.1)),
    ("fig5", 1.0, 1.0, 1.0, Some(0.1)),
];

pub fn figure_boundaries(grid: &FigureGrid) -> Result<Vec<FigureOutput>> {
    FIGURES
        .iter()
        .map(|&(name, q1, q2, q3, xi)| {
            let lo = q1.max(q2).max(q3);
            let base = BinaryModelParams::new([lo, q1, q2, q3], 0.5, xi)?;
            let (known_s, unknown_s) = if xi.is_some() {
                (Scenario::CbmKnownY, Scenario::CbmUnknownY)
            } else {
                (Scenario::SbmKnownY, Scenario::SbmUnknownY)
            };
            let known = region_sweep(&base, known_s, &grid.rho, (lo, grid.q0_hi))?;
            let unknown = region_sweep(&base, unknown_s, &grid.rho, (lo, grid.q0_hi))?;
            let known_above_unknown = known
                .iter()
                .zip(&unknown)
                .filter(|(k, u)| k.q0_star > u.q0_star + 1e-6)
                .map(|(k, _)| k.rho)
                .collect();
            Ok(FigureOutput { name: name.to_string(), base, known, unknown, known_above_unknown })
        })
        .collect()
}

/// Boundary CSV in the `rho,q0_star,scenario` layout.
pub fn write_boundary_csv(path: &Path, curves: &[(Scenario, &[BoundaryPoint])]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rho", "q0_star", "scenario"])?;
    for (scenario, points) in curves {
        for p in *points {
            w.write_record([format!("{:.6}", p.rho), format!("{:.6}", p.q0_star), scenario.as_str().to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `figN.csv` for every figure plus `figures.gp`; returns the
/// boundaries.
pub fn reproduce_figures(out_dir: &Path, grid: &FigureGrid) -> Result<Vec<FigureOutput>> {
    fs::create_dir_all(out_dir)?;
    let figures = figure_boundaries(grid)?;
    let mut script = String::from("set datafile separator ','\nset key top left\nset xlabel 'rho'\nset ylabel 'q0'\nset terminal pngcairo size 640,480\n");
    for f in &figures {
        let (ks, us) = if f.base.is_censored() {
            (Scenario::CbmKnownY, Scenario::CbmUnknownY)
        } else {
            (Scenario::SbmKnownY, Scenario::SbmUnknownY)
        };
        write_boundary_csv(&out_dir.join(format!("{}.csv", f.name)), &[(ks, &f.known), (us, &f.unknown)])?;
        let xi = f.base.xi.map(|x| format!(", xi={x}")).unwrap_or_default();
        script.push_str(&format!(
            "set output '{name}.png'\nset title 'q1={q1}, q2={q2}, q3={q3}{xi}'\n\
             plot '{name}.csv' every ::1 using 1:(strcol(3) eq '{ks}' ? $2 : 1/0) with lines title 'y known', \\\n     \
             '{name}.csv' every ::1 using 1:(strcol(3) eq '{us}' ? $2 : 1/0) with lines title 'y unknown'\n",
            name = f.name,
            q1 = f.base.q1,
            q2 = f.base.q2,
            q3 = f.base.q3,
        ));
        if !f.known_above_unknown.is_empty() {
            log::warn!("{}: known-y boundary above unknown-y at rho {:?}", f.name, f.known_above_unknown);
        }
    }
    fs::write(out_dir.join("figures.gp"), script)?;
    Ok(figures)
}

/// One evaluation of the exact-recovery rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub q0: f64,
    pub successes: usize,
    pub trials: usize,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl RateEvaluation {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalThreshold {
    /// Midpoint of the final bracket.
    pub estimate: f64,
    pub bracket: (f64, f64),
    /// Whether the rate was below 0.5 at the lower end and at least 0.5 at
    /// the upper end of the search range.
    pub bracketed: bool,
    /// Evaluations sorted by `q0`.
    pub evaluations: Vec<RateEvaluation>,
    /// Rates are nondecreasing in `q0` up to the Wilson intervals.
    pub monotone: bool,
}

/// Exact-recovery rate of the binary model at `q0` (first `n` of the
/// config, seeds `base_seed + t`).
pub fn exact_rate_at(config: &ExperimentConfig, q0: f64) -> Result<RateEvaluation> {
    let b = config.params.binary_or_err()?.with_q0(q0);
    b.validate()?;
    let spec = TrialSpec {
        params: ParamsSpec::Binary(b),
        scenario: config.scenario,
        detector: config.detector,
        n: config.n[0],
        certify: false,
        solver: config.solver,
        likelihood: config.likelihood,
        exact_y_count: config.exact_y_count,
    };
    let outcomes: Vec<Result<(usize, Option<bool>)>> = with_pool(config.threads, || {
        (0..config.trials).into_par_iter().map(|t| run_trial(&spec, config.base_seed + t as u64)).collect()
    })?;
    let mut successes = 0;
    for o in outcomes {
        if o?.0 == 0 {
            successes += 1;
        }
    }
    let (ci_lo, ci_hi) = wilson_interval(successes as u64, config.trials as u64);
    Ok(RateEvaluation { q0, successes, trials: config.trials, ci_lo, ci_hi })
}

/// Bisection for the `q0` where the exact-recovery rate crosses 0.5.
pub fn empirical_threshold(config: &ExperimentConfig, q0_range: (f64, f64), q0_tol: f64) -> Result<EmpiricalThreshold> {
    config.validate()?;
    let (mut lo, mut hi) = q0_range;
    if !(lo > 0.0 && hi > lo && q0_tol > 0.0) {
        return Err(Error::domain(format!("invalid search range ({lo}, {hi}) or tolerance {q0_tol}")));
    }
    let mut evals = vec![exact_rate_at(config, lo)?, exact_rate_at(config, hi)?];
    let bracketed = evals[0].rate() < 0.5 && evals[1].rate() >= 0.5;
    if bracketed {
        while hi - lo > q0_tol {
            let mid = 0.5 * (lo + hi);
            let e = exact_rate_at(config, mid)?;
            if e.rate() >= 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
            evals.push(e);
        }
    } else if evals[0].rate() >= 0.5 {
        hi = lo;
    } else {
        lo = hi;
    }
    evals.sort_by(|a, b| a.q0.partial_cmp(&b.q0).unwrap());
    let monotone = evals.windows(2).all(|w| w[1].ci_hi >= w[0].ci_lo);
    Ok(EmpiricalThreshold { estimate: 0.5 * (lo + hi), bracket: (lo, hi), bracketed, evaluations: evals, monotone })
}
