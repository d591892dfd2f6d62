//! Likelihood-based detectors.
//!
//! The MAP detectors are genie-aided: every other node's micro-community is
//! supplied, and each node's community is decided from its degree profile
//! (edge counts into every micro-community). This is the per-node hypothesis
//! test whose error exponent is the divergence threshold. Likelihoods are
//! Poisson with mean `P_a·Q[a][b]·log n` by default; the exact binomial law
//! with the genie's group sizes is available for small-`n` checks.
//!
//! [`ml_bruteforce`] enumerates all balanced `±1` labelings for tiny graphs
//! and serves as the ground truth for the semidefinite relaxations.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::{spin_x, LabeledGraph, ModelParams, Scenario};
use crate::sdp::{build_objective, SdpObjective};

/// Relative tolerance under which two hypothesis scores count as tied.
pub const TIE_RTOL: f64 = 1e-12;
/// Largest graph accepted by [`ml_bruteforce`].
pub const ML_MAX_N: usize = 16;

/// Edge counts from one node into every micro-community.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    /// Positive edges (all edges for unsigned graphs).
    pub d: Vec<u32>,
    /// Negative edges; all zero for unsigned graphs.
    pub w: Vec<u32>,
}

/// Profile of node `v` with respect to micro-community labels `labels`
/// (values below `k`; the entry for `v` itself is ignored).
pub fn degree_profile(graph: &LabeledGraph, v: usize, labels: &[usize], k: usize) -> Result<DegreeProfile> {
    if v >= graph.n() {
        return Err(Error::domain(format!("node {v} out of range")));
    }
    if labels.len() != graph.n() {
        return Err(Error::domain("labels must cover every node"));
    }
    let mut d = vec![0u32; k];
    let mut w = vec![0u32; k];
    for &(u, s) in graph.neighbors(v) {
        let a = labels[u as usize];
        if a >= k {
            return Err(Error::domain(format!("label {a} of node {u} out of range")));
        }
        if s > 0 {
            d[a] += 1;
        } else {
            w[a] += 1;
        }
    }
    Ok(DegreeProfile { d, w })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Likelihood {
    #[default]
    Poisson,
    /// Exact binomial (multinomial for signed graphs) counts.
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionOptions {
    pub likelihood: Likelihood,
    /// Keep the per-node log-posterior of every hypothesis.
    pub keep_scores: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub x_hat: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_node_scores: Option<Vec<Vec<f64>>>,
    /// Misclassified nodes against the graph's ground truth, if present.
    pub errors: Option<usize>,
    /// Nodes whose best score was shared by several hypotheses.
    pub ties: usize,
    /// Nodes where every hypothesis had zero likelihood.
    pub degenerate: usize,
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Poisson log-pmf without the `-ln k!` term.
fn poisson_ll(k: u32, mean: f64) -> f64 {
    xlogy(k as f64, mean) - mean
}

/// Log of the multinomial probability of `(d, w, N-d-w)` with cell
/// probabilities `(p⁺, p⁻, 1-p⁺-p⁻)`.
fn multinomial_ll(total: usize, d: u32, w: u32, p_pos: f64, p_neg: f64) -> f64 {
    let (d_, w_) = (d as usize, w as usize);
    if d_ + w_ > total {
        return f64::NEG_INFINITY;
    }
    let rest = (total - d_ - w_) as f64;
    ln_factorial(total as u64) - ln_factorial(d as u64) - ln_factorial(w as u64) - ln_factorial((total - d_ - w_) as u64)
        + xlogy(d as f64, p_pos)
        + xlogy(w as f64, p_neg)
        + xlogy(rest, (1.0 - p_pos - p_neg).max(0.0))
}

/// Exact law of a sum of independent multinomial counts, evaluated at
/// `(d, w)` by truncated convolution.
fn convolved_multinomial_ll(parts: &[(usize, f64, f64)], d: u32, w: u32) -> f64 {
    let (dd, ww) = (d as usize, w as usize);
    let mut acc = vec![0.0; (dd + 1) * (ww + 1)];
    acc[0] = 1.0;
    for &(total, p_pos, p_neg) in parts {
        let mut cell = vec![0.0; (dd + 1) * (ww + 1)];
        for a in 0..=dd.min(total) {
            for b in 0..=ww.min(total - a) {
                cell[a * (ww + 1) + b] = multinomial_ll(total, a as u32, b as u32, p_pos, p_neg).exp();
            }
        }
        let mut next = vec![0.0; (dd + 1) * (ww + 1)];
        for a in 0..=dd {
            for b in 0..=ww {
                let x = acc[a * (ww + 1) + b];
                if x == 0.0 {
                    continue;
                }
                for c in 0..=(dd - a) {
                    for e in 0..=(ww - b) {
                        next[(a + c) * (ww + 1) + b + e] += x * cell[c * (ww + 1) + e];
                    }
                }
            }
        }
        acc = next;
    }
    acc[dd * (ww + 1) + ww].ln()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Fixed per-graph quantities shared by all nodes.
struct MapContext<'a> {
    params: &'a ModelParams,
    prior: Vec<f64>,
    log_n: f64,
    n: usize,
    /// Micro-community sizes under the genie labels.
    group_sizes: Vec<usize>,
    likelihood: Likelihood,
}

impl MapContext<'_> {
    fn xi(&self, a: usize, b: usize) -> f64 {
        self.params.xi.as_ref().map_or(1.0, |xi| xi[a][b])
    }

    /// Log-likelihood of `profile` for a node in micro-community `(i, j)`.
    /// `own` is the node's genie label, removed from the group sizes.
    fn loglik(&self, profile: &DegreeProfile, i: usize, j: usize, own: usize, aggregate: bool) -> f64 {
        let m_x = self.params.m_x;
        let col = j * m_x + i;
        let k = self.params.micro_count();
        let size = |a: usize| self.group_sizes[a] - usize::from(a == own);
        match (self.likelihood, aggregate) {
            (Likelihood::Poisson, false) => (0..k)
                .map(|a| {
                    let mean = self.prior[a] * self.params.q[a][col] * self.log_n;
                    let xi = self.xi(a, col);
                    poisson_ll(profile.d[a], mean * xi) + poisson_ll(profile.w[a], mean * (1.0 - xi))
                })
                .sum(),
            (Likelihood::Poisson, true) => (0..m_x)
                .map(|l| {
                    let (mut dp, mut dn, mut cp, mut cn) = (0.0, 0.0, 0u32, 0u32);
                    for jp in 0..self.params.m_y {
                        let a = jp * m_x + l;
                        let mean = self.prior[a] * self.params.q[a][col] * self.log_n;
                        let xi = self.xi(a, col);
                        dp += mean * xi;
                        dn += mean * (1.0 - xi);
                        cp += profile.d[a];
                        cn += profile.w[a];
                    }
                    poisson_ll(cp, dp) + poisson_ll(cn, dn)
                })
                .sum(),
            (Likelihood::Binomial, false) => (0..k)
                .map(|a| {
                    let p = (self.params.q[a][col] * self.log_n / self.n as f64).min(1.0);
                    let xi = self.xi(a, col);
                    multinomial_ll(size(a), profile.d[a], profile.w[a], p * xi, p * (1.0 - xi))
                })
                .sum(),
            (Likelihood::Binomial, true) => (0..m_x)
                .map(|l| {
                    let mut parts = Vec::with_capacity(self.params.m_y);
                    let (mut cp, mut cn) = (0u32, 0u32);
                    for jp in 0..self.params.m_y {
                        let a = jp * m_x + l;
                        let p = (self.params.q[a][col] * self.log_n / self.n as f64).min(1.0);
                        let xi = self.xi(a, col);
                        parts.push((size(a), p * xi, p * (1.0 - xi)));
                        cp += profile.d[a];
                        cn += profile.w[a];
                    }
                    convolved_multinomial_ll(&parts, cp, cn)
                })
                .sum(),
        }
    }
}

struct NodeDecision {
    label: usize,
    scores: Vec<f64>,
    tie: bool,
    degenerate: bool,
}

fn decide(scores: Vec<f64>) -> NodeDecision {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return NodeDecision { label: 0, scores, tie: true, degenerate: true };
    }
    let tol = TIE_RTOL * best.abs().max(1.0);
    let close: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= best - tol).collect();
    NodeDecision { label: close[0], tie: close.len() > 1, scores, degenerate: false }
}

fn check_map_inputs(graph: &LabeledGraph, params: &ModelParams, genie: &[usize], censored: bool) -> Result<()> {
    params.validate()?;
    if params.is_censored() != censored {
        let want = if censored { "censored (Xi present)" } else { "uncensored (no Xi)" };
        return Err(Error::domain(format!("this detector needs {want} parameters")));
    }
    if graph.is_signed() != censored {
        return Err(Error::domain("graph signedness does not match the detector"));
    }
    if genie.len() != graph.n() {
        return Err(Error::domain("genie labels must cover every node"));
    }
    if let Some(&bad) = genie.iter().find(|&&a| a >= params.micro_count()) {
        return Err(Error::domain(format!("genie label {bad} out of range")));
    }
    Ok(())
}

/// Genie-aided MAP decision for every node; `revealed(v)` selects the
/// known-`y` rule for node `v`.
fn map_detect(
    graph: &LabeledGraph,
    params: &ModelParams,
    genie: &[usize],
    revealed: &(dyn Fn(usize) -> bool + Sync),
    opts: &DetectionOptions,
) -> Result<DetectionResult> {
    let n = graph.n();
    let any_revealed = (0..n).any(revealed);
    let y = graph.y();
    if any_revealed && y.is_none() {
        return Err(Error::domain("known-y detection needs y labels on the graph"));
    }
    let k = params.micro_count();
    let mut group_sizes = vec![0usize; k];
    for &a in genie {
        group_sizes[a] += 1;
    }
    let ctx = MapContext {
        params,
        prior: params.prior_vec(),
        log_n: (n.max(2) as f64).ln(),
        n,
        group_sizes,
        likelihood: opts.likelihood,
    };
    let decisions: Vec<NodeDecision> = (0..n)
        .into_par_iter()
        .map(|v| -> Result<NodeDecision> {
            let profile = degree_profile(graph, v, genie, k)?;
            let scores = (0..params.m_x)
                .map(|i| {
                    if revealed(v) {
                        let j = y.unwrap()[v];
                        ctx.loglik(&profile, i, j, genie[v], false) + params.p[i][j].ln()
                    } else {
                        let terms: Vec<f64> = (0..params.m_y)
                            .map(|j| ctx.loglik(&profile, i, j, genie[v], true) + params.p[i][j].ln())
                            .collect();
                        log_sum_exp(&terms)
                    }
                })
                .collect();
            Ok(decide(scores))
        })
        .collect::<Result<_>>()?;
    let x_hat: Vec<usize> = decisions.iter().map(|d| d.label).collect();
    // the genie fixes the labelling, so errors need no alignment
    let errors = graph.x().map(|x| x.iter().zip(&x_hat).filter(|(a, b)| a != b).count());
    let ties = decisions.iter().filter(|d| d.tie).count();
    let degenerate = decisions.iter().filter(|d| d.degenerate).count();
    let per_node_scores = opts.keep_scores.then(|| decisions.into_iter().map(|d| d.scores).collect());
    Ok(DetectionResult { x_hat, per_node_scores, errors, ties, degenerate })
}

/// MAP with `y` revealed, uncensored model.
pub fn map_known_y(graph: &LabeledGraph, params: &ModelParams, genie: &[usize], opts: &DetectionOptions) -> Result<DetectionResult> {
    check_map_inputs(graph, params, genie, false)?;
    map_detect(graph, params, genie, &|_| true, opts)
}

/// MAP with `y` hidden, uncensored model: community-aggregated counts,
/// marginalised over the node's own `y`.
pub fn map_unknown_y(graph: &LabeledGraph, params: &ModelParams, genie: &[usize], opts: &DetectionOptions) -> Result<DetectionResult> {
    check_map_inputs(graph, params, genie, false)?;
    map_detect(graph, params, genie, &|_| false, opts)
}

pub fn map_cbm_known_y(graph: &LabeledGraph, params: &ModelParams, genie: &[usize], opts: &DetectionOptions) -> Result<DetectionResult> {
    check_map_inputs(graph, params, genie, true)?;
    map_detect(graph, params, genie, &|_| true, opts)
}

pub fn map_cbm_unknown_y(graph: &LabeledGraph, params: &ModelParams, genie: &[usize], opts: &DetectionOptions) -> Result<DetectionResult> {
    check_map_inputs(graph, params, genie, true)?;
    map_detect(graph, params, genie, &|_| false, opts)
}

/// Known-`y` rule where `revealed[v]`, unknown-`y` rule elsewhere; works for
/// either model.
pub fn map_partial_y(
    graph: &LabeledGraph,
    params: &ModelParams,
    genie: &[usize],
    revealed: &[bool],
    opts: &DetectionOptions,
) -> Result<DetectionResult> {
    if revealed.len() != graph.n() {
        return Err(Error::domain("revealed mask must cover every node"));
    }
    check_map_inputs(graph, params, genie, params.is_censored())?;
    map_detect(graph, params, genie, &|v| revealed[v], opts)
}

/// Dispatch on scenario.
pub fn map_detector(
    scenario: Scenario,
    graph: &LabeledGraph,
    params: &ModelParams,
    genie: &[usize],
    opts: &DetectionOptions,
) -> Result<DetectionResult> {
    match scenario {
        Scenario::SbmKnownY => map_known_y(graph, params, genie, opts),
        Scenario::SbmUnknownY => map_unknown_y(graph, params, genie, opts),
        Scenario::CbmKnownY => map_cbm_known_y(graph, params, genie, opts),
        Scenario::CbmUnknownY => map_cbm_unknown_y(graph, params, genie, opts),
    }
}

/// Exact maximiser of `xᵀCx` over balanced `x ∈ {±1}ⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlSolution {
    /// Maximiser with `x[0] = +1`; `-x` is equally optimal.
    pub x: Vec<i8>,
    pub objective: f64,
    /// Optimal labelings, counting `x` and `-x` once.
    pub num_optima: usize,
    pub tie: bool,
    pub detection: DetectionResult,
}

impl MlSolution {
    /// Whether `x` (either sign) attains the optimum.
    pub fn is_optimal(&self, objective: &SdpObjective, x: &[i8]) -> bool {
        let v = objective.quad_form_spins(x);
        v >= self.objective - ml_tolerance(objective)
    }
}

fn ml_tolerance(objective: &SdpObjective) -> f64 {
    1e-9 * objective.abs_sum().max(1.0)
}

/// Brute-force ML for the scenario's quadratic objective.
pub fn ml_bruteforce(graph: &LabeledGraph, params: &crate::model::BinaryModelParams, scenario: Scenario) -> Result<MlSolution> {
    let objective = build_objective(graph, params, scenario)?;
    let mut sol = ml_bruteforce_objective(&objective)?;
    sol.detection.errors = graph.x().map(|x| {
        let truth: Vec<usize> = x.to_vec();
        align_and_score(&sol.detection.x_hat, &truth, Symmetry::GlobalSign).unwrap_or(usize::MAX)
    });
    Ok(sol)
}

/// Brute-force maximiser of a prebuilt objective.
pub fn ml_bruteforce_objective(objective: &SdpObjective) -> Result<MlSolution> {
    let n = objective.n();
    if n % 2 == 1 {
        return Err(Error::domain(format!("n = {n} is odd; no balanced labeling exists")));
    }
    if n == 0 || n > ML_MAX_N {
        return Err(Error::domain(format!("brute force needs 2 <= n <= {ML_MAX_N}, got {n}")));
    }
    let dense = objective.to_dense();
    let tol = ml_tolerance(objective);
    let mut best = f64::NEG_INFINITY;
    let mut best_x = vec![1i8; n];
    let mut count = 0usize;
    let mut x = vec![-1i8; n];
    // node 0 is fixed at +1; choose the other n/2 - 1 positive nodes
    for pos in (1..n).combinations(n / 2 - 1) {
        x.iter_mut().for_each(|s| *s = -1);
        x[0] = 1;
        for &p in &pos {
            x[p] = 1;
        }
        let mut v = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += dense[(i, j)] * x[j] as f64;
            }
            v += x[i] as f64 * row;
        }
        if v > best + tol {
            best = v;
            best_x.copy_from_slice(&x);
            count = 1;
        } else if v >= best - tol {
            count += 1;
        }
    }
    let x_hat: Vec<usize> = best_x.iter().map(|&s| usize::from(s < 0)).collect();
    debug_assert!(best_x.iter().zip(&x_hat).all(|(&s, &l)| spin_x(l) == s));
    let detection = DetectionResult { x_hat, per_node_scores: None, errors: None, ties: usize::from(count > 1), degenerate: 0 };
    Ok(MlSolution { x: best_x, objective: best, num_optima: count, tie: count > 1, detection })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Binary labels up to swapping the two communities.
    GlobalSign,
    /// Labels up to any permutation of community indices.
    LabelPermutation,
}

const MAX_PERMUTED_LABELS: usize = 8;

/// Minimum Hamming distance between `x_hat` and `x_true` over the symmetry
/// group.
pub fn align_and_score(x_hat: &[usize], x_true: &[usize], symmetry: Symmetry) -> Result<usize> {
    if x_hat.len() != x_true.len() {
        return Err(Error::domain("label vectors differ in length"));
    }
    let hamming = |map: &dyn Fn(usize) -> usize| x_hat.iter().zip(x_true).filter(|&(&a, &b)| map(a) != b).count();
    match symmetry {
        Symmetry::GlobalSign => {
            if x_hat.iter().chain(x_true).any(|&l| l > 1) {
                return Err(Error::domain("global-sign alignment needs binary labels"));
            }
            Ok(hamming(&|a| a).min(hamming(&|a| 1 - a)))
        }
        Symmetry::LabelPermutation => {
            let m = x_hat.iter().chain(x_true).copied().max().map_or(0, |v| v + 1);
            if m > MAX_PERMUTED_LABELS {
                return Err(Error::domain(format!("permutation alignment supports at most {MAX_PERMUTED_LABELS} labels")));
            }
            Ok((0..m).permutations(m).map(|perm| hamming(&|a| perm[a])).min().unwrap_or(0))
        }
    }
}

/// Binary spins as labels (`+1 → 0`, `-1 → 1`).
pub fn spins_to_labels(x: &[i8]) -> Vec<usize> {
    x.iter().map(|&s| usize::from(s < 0)).collect()
}
