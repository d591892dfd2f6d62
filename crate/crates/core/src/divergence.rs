//! Chernoff-Hellinger divergence and the exact-recovery thresholds built on
//! it.
//!
//! The divergence between two nonnegative rate vectors is
//!
//! ```text
//! Div(a, b) = max_{t ∈ [0,1]} Σ_i [ t·a_i + (1-t)·b_i - a_i^t · b_i^(1-t) ]
//! ```
//!
//! The objective is concave in `t`, so a golden-section search finds the
//! maximiser. A recovery threshold compares the smallest divergence between
//! the rate vectors of hypotheses that must be told apart against 1.
//!
//! Thresholds come in two families:
//!
//! - general ones (`threshold_*`) evaluated from a [`ModelParams`], covering
//!   micro-community recovery and recovery of `x` with `y` revealed or hidden;
//! - closed forms (`eta1`, `eta2`, [`sdp_threshold`]) for the binary
//!   four-rate model, which also govern the semidefinite relaxations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{split_micro, BinaryModelParams, ModelParams, Scenario};

const GOLDEN_MAX_ITER: usize = 200;
const GOLDEN_TOL: f64 = 1e-12;
/// Threshold values this close to 1 are flagged as critical.
pub const CRITICAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    pub value: f64,
    pub t_star: f64,
    pub iterations: usize,
}

/// `g(t) = Σ_i [t·a_i + (1-t)·b_i - a_i^t·b_i^(1-t)]`, with `0^0 = 1`.
pub fn ch_objective(a: &[f64], b: &[f64], t: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&ai, &bi)| {
            if ai == 0.0 && bi == 0.0 {
                0.0
            } else {
                t * ai + (1.0 - t) * bi - ai.powf(t) * bi.powf(1.0 - t)
            }
        })
        .sum()
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::domain(format!("vector lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::domain("divergence inputs must be finite and nonnegative"));
    }
    Ok(())
}

/// Chernoff-Hellinger divergence of two nonnegative vectors.
pub fn ch_divergence(a: &[f64], b: &[f64]) -> Result<DivergenceResult> {
    check_pair(a, b)?;
    if a == b {
        return Ok(DivergenceResult { value: 0.0, t_star: 0.5, iterations: 0 });
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = ch_objective(a, b, c);
    let mut fd = ch_objective(a, b, d);
    let mut iterations = 0;
    while hi - lo > GOLDEN_TOL && iterations < GOLDEN_MAX_ITER {
        iterations += 1;
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = ch_objective(a, b, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = ch_objective(a, b, d);
        }
    }
    let t_star = 0.5 * (lo + hi);
    let value = ch_objective(a, b, t_star).max(0.0);
    Ok(DivergenceResult { value, t_star, iterations })
}

/// Rate vectors of micro-community `(i, j)`.
///
/// `g`/`h` vectors (positive/negative edge rates) are empty for
/// non-censored models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVectors {
    pub q_vec: Vec<f64>,
    pub q_tilde: Vec<f64>,
    pub g_vec: Vec<f64>,
    pub h_vec: Vec<f64>,
    pub g_tilde: Vec<f64>,
    pub h_tilde: Vec<f64>,
}

impl RateVectors {
    /// `[g, h]` stacked.
    pub fn signed_micro(&self) -> Vec<f64> {
        self.g_vec.iter().chain(&self.h_vec).copied().collect()
    }

    /// `[g̃, h̃]` stacked.
    pub fn signed_community(&self) -> Vec<f64> {
        self.g_tilde.iter().chain(&self.h_tilde).copied().collect()
    }
}

pub fn rate_vectors(params: &ModelParams, i: usize, j: usize) -> Result<RateVectors> {
    let col = crate::model::micro_index(i, j, params.m_x, params.m_y)?;
    let m_x = params.m_x;
    let p = params.prior_vec();
    let k = params.micro_count();
    let q_vec: Vec<f64> = (0..k).map(|a| p[a] * params.q[a][col]).collect();
    let community_sum = |w: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..m_x)
            .map(|ip| (0..params.m_y).map(|jp| params.p[ip][jp] * w(jp * m_x + ip)).sum())
            .collect()
    };
    let q_tilde = community_sum(&|a| params.q[a][col]);
    let (g_vec, h_vec, g_tilde, h_tilde) = match &params.xi {
        Some(xi) => (
            (0..k).map(|a| p[a] * xi[a][col] * params.q[a][col]).collect(),
            (0..k).map(|a| p[a] * (1.0 - xi[a][col]) * params.q[a][col]).collect(),
            community_sum(&|a| xi[a][col] * params.q[a][col]),
            community_sum(&|a| (1.0 - xi[a][col]) * params.q[a][col]),
        ),
        None => Default::default(),
    };
    Ok(RateVectors { q_vec, q_tilde, g_vec, h_vec, g_tilde, h_tilde })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    MicroSbm,
    Gamma1,
    Gamma2,
    MicroCbm,
    Gamma3,
    Gamma4,
    Eta1,
    Eta2,
    PartialReveal,
}

/// Where a threshold's minimum is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ArgMin {
    /// Pair of micro-communities `(i, j)` and `(k, l)`.
    Micro { first: (usize, usize), second: (usize, usize) },
    /// Communities `i ≠ k` sharing auxiliary value `j`.
    SameAux { j: usize, i: usize, k: usize },
    /// The `rho` value (`rho` or `1 - rho`) that binds a binary formula.
    Rho { rho: f64 },
    /// Which term of `min(γ + β₁, γ' + β₂)` binds (1 or 2).
    Term { term: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub which: ThresholdKind,
    pub value: f64,
    pub argmin: Option<ArgMin>,
    pub exact_recovery: bool,
    /// `|value - 1| <= CRITICAL_BAND`: too close to the boundary to call.
    pub critical: bool,
}

impl ThresholdReport {
    pub fn new(which: ThresholdKind, value: f64, argmin: Option<ArgMin>) -> Self {
        ThresholdReport {
            which,
            value,
            argmin,
            exact_recovery: value > 1.0,
            critical: (value - 1.0).abs() <= CRITICAL_BAND,
        }
    }
}

fn all_rate_vectors(params: &ModelParams) -> Result<Vec<RateVectors>> {
    (0..params.micro_count())
        .map(|a| {
            let (i, j) = split_micro(a, params.m_x);
            rate_vectors(params, i, j)
        })
        .collect()
}

fn micro_threshold(params: &ModelParams, which: ThresholdKind, pick: fn(&RateVectors) -> Vec<f64>) -> Result<ThresholdReport> {
    let k = params.micro_count();
    if k < 2 {
        return Err(Error::domain("need at least two micro-communities"));
    }
    let vecs: Vec<Vec<f64>> = all_rate_vectors(params)?.iter().map(pick).collect();
    let mut best = (f64::INFINITY, None);
    for a in 0..k {
        for b in (a + 1)..k {
            let d = ch_divergence(&vecs[a], &vecs[b])?.value;
            if d < best.0 {
                let first = split_micro(a, params.m_x);
                let second = split_micro(b, params.m_x);
                best = (d, Some(ArgMin::Micro { first, second }));
            }
        }
    }
    Ok(ThresholdReport::new(which, best.0, best.1))
}

fn same_aux_threshold(params: &ModelParams, which: ThresholdKind, pick: fn(&RateVectors) -> Vec<f64>) -> Result<ThresholdReport> {
    if params.m_x < 2 {
        return Err(Error::domain("need m_x >= 2 to separate communities"));
    }
    let vecs: Vec<Vec<f64>> = all_rate_vectors(params)?.iter().map(pick).collect();
    let m_x = params.m_x;
    let mut best = (f64::INFINITY, None);
    for j in 0..params.m_y {
        for i in 0..m_x {
            for k in (i + 1)..m_x {
                let d = ch_divergence(&vecs[j * m_x + i], &vecs[j * m_x + k])?.value;
                if d < best.0 {
                    best = (d, Some(ArgMin::SameAux { j, i, k }));
                }
            }
        }
    }
    Ok(ThresholdReport::new(which, best.0, best.1))
}

fn need_censored(params: &ModelParams) -> Result<()> {
    if params.is_censored() {
        Ok(())
    } else {
        Err(Error::domain("censored-model threshold needs Xi"))
    }
}

/// Minimum divergence between the `q` vectors of any two micro-communities.
pub fn threshold_micro_sbm(params: &ModelParams) -> Result<ThresholdReport> {
    micro_threshold(params, ThresholdKind::MicroSbm, |r| r.q_vec.clone())
}

/// `γ₁`: recovery of `x` with `y` revealed.
pub fn threshold_gamma1(params: &ModelParams) -> Result<ThresholdReport> {
    same_aux_threshold(params, ThresholdKind::Gamma1, |r| r.q_vec.clone())
}

/// `γ₂`: recovery of `x` with `y` hidden.
pub fn threshold_gamma2(params: &ModelParams) -> Result<ThresholdReport> {
    same_aux_threshold(params, ThresholdKind::Gamma2, |r| r.q_tilde.clone())
}

pub fn threshold_micro_cbm(params: &ModelParams) -> Result<ThresholdReport> {
    need_censored(params)?;
    micro_threshold(params, ThresholdKind::MicroCbm, RateVectors::signed_micro)
}

/// `γ₃`: censored model, `y` revealed.
pub fn threshold_gamma3(params: &ModelParams) -> Result<ThresholdReport> {
    need_censored(params)?;
    same_aux_threshold(params, ThresholdKind::Gamma3, RateVectors::signed_micro)
}

/// `γ₄`: censored model, `y` hidden.
pub fn threshold_gamma4(params: &ModelParams) -> Result<ThresholdReport> {
    need_censored(params)?;
    same_aux_threshold(params, ThresholdKind::Gamma4, RateVectors::signed_community)
}

/// Every general threshold that applies to `params`.
pub fn all_thresholds(params: &ModelParams) -> Result<Vec<ThresholdReport>> {
    let mut out = vec![threshold_micro_sbm(params)?, threshold_gamma1(params)?, threshold_gamma2(params)?];
    if params.is_censored() {
        out.extend([threshold_micro_cbm(params)?, threshold_gamma3(params)?, threshold_gamma4(params)?]);
    }
    Ok(out)
}

pub fn eta1(q: [f64; 4], rho: f64) -> f64 {
    let d01 = q[0].sqrt() - q[1].sqrt();
    let d23 = q[2].sqrt() - q[3].sqrt();
    rho / 2.0 * d01 * d01 + (1.0 - rho) / 2.0 * d23 * d23
}

pub fn eta2(q: [f64; 4], rho: f64) -> f64 {
    let d = (q[0] * rho + q[2] * (1.0 - rho)).sqrt() - (q[1] * rho + q[3] * (1.0 - rho)).sqrt();
    0.5 * d * d
}

/// Positive-edge rates `[(1-ξ)q0, ξq1, ξq2, ξq3]`.
pub fn positive_rates(q: [f64; 4], xi: f64) -> [f64; 4] {
    [(1.0 - xi) * q[0], xi * q[1], xi * q[2], xi * q[3]]
}

/// Negative-edge rates `[ξq0, (1-ξ)q1, (1-ξ)q2, (1-ξ)q3]`.
pub fn negative_rates(q: [f64; 4], xi: f64) -> [f64; 4] {
    [xi * q[0], (1.0 - xi) * q[1], (1.0 - xi) * q[2], (1.0 - xi) * q[3]]
}

/// Closed-form exact-recovery condition of the binary model, as achieved by
/// the semidefinite relaxations.
///
/// With `y` revealed the formula is evaluated at `rho` when `rho <= 0.5` and
/// at `1 - rho` otherwise; with `y` hidden the smaller of the two is used.
pub fn sdp_threshold(params: &BinaryModelParams, known_y: bool) -> ThresholdReport {
    let q = params.q();
    let eval = |f: fn([f64; 4], f64) -> f64, r: f64| -> f64 {
        match params.xi {
            Some(xi) => f(positive_rates(q, xi), r) + f(negative_rates(q, xi), r),
            None => f(q, r),
        }
    };
    let rho = params.rho;
    if known_y {
        let r = if rho <= 0.5 { rho } else { 1.0 - rho };
        ThresholdReport::new(ThresholdKind::Eta1, eval(eta1, r), Some(ArgMin::Rho { rho: r }))
    } else {
        let (a, b) = (eval(eta2, rho), eval(eta2, 1.0 - rho));
        let (value, r) = if a <= b { (a, rho) } else { (b, 1.0 - rho) };
        ThresholdReport::new(ThresholdKind::Eta2, value, Some(ArgMin::Rho { rho: r }))
    }
}

/// Threshold when `y` is revealed on a `(1-ε)` fraction of nodes, with
/// `β₁ = -lim log(1-ε)/log n` and `β₂ = -lim log ε / log n` (either may be
/// `f64::INFINITY`).
pub fn partial_reveal_threshold(params: &ModelParams, beta1: f64, beta2: f64) -> Result<ThresholdReport> {
    if beta1.is_nan() || beta2.is_nan() || beta1 < 0.0 || beta2 < 0.0 {
        return Err(Error::domain("beta1 and beta2 must be nonnegative"));
    }
    let (known, unknown) = if params.is_censored() {
        (threshold_gamma3(params)?.value, threshold_gamma4(params)?.value)
    } else {
        (threshold_gamma1(params)?.value, threshold_gamma2(params)?.value)
    };
    Ok(partial_reveal_from(known, unknown, beta1, beta2))
}

/// `min(γ_known + β₁, γ_unknown + β₂)`.
pub fn partial_reveal_from(known: f64, unknown: f64, beta1: f64, beta2: f64) -> ThresholdReport {
    let (a, b) = (known + beta1, unknown + beta2);
    let (value, term) = if a <= b { (a, 1) } else { (b, 2) };
    ThresholdReport::new(ThresholdKind::PartialReveal, value, Some(ArgMin::Term { term }))
}

/// One point of a recovery-region boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub rho: f64,
    /// Smallest `q0` for which the scenario's condition exceeds 1.
    pub q0_star: f64,
}

const SWEEP_TOL: f64 = 1e-9;
const MONOTONE_PROBES: usize = 64;

fn scenario_params(base: &BinaryModelParams, scenario: Scenario) -> Result<BinaryModelParams> {
    match (scenario.censored(), base.xi) {
        (true, None) => Err(Error::domain(format!("{scenario} needs xi in the base parameters"))),
        (true, Some(_)) => Ok(*base),
        (false, _) => Ok(BinaryModelParams { xi: None, ..*base }),
    }
}

/// Condition value for `scenario` at `(q0, rho)` with the other rates from `base`.
pub fn scenario_condition(base: &BinaryModelParams, scenario: Scenario, q0: f64, rho: f64) -> Result<f64> {
    let p = scenario_params(base, scenario)?.with_q0(q0).with_rho(rho);
    p.validate()?;
    Ok(sdp_threshold(&p, scenario.known_y()).value)
}

/// Boundary of the exact-recovery region in the `(rho, q0)` plane.
///
/// For every `rho` the smallest `q0` in `q0_bounds` with condition `> 1` is
/// located by bisection. Each grid point first checks that the bounds
/// bracket the boundary and that the condition is nondecreasing in `q0` over
/// the bracket.
pub fn region_sweep(
    base: &BinaryModelParams,
    scenario: Scenario,
    rho_grid: &[f64],
    q0_bounds: (f64, f64),
) -> Result<Vec<BoundaryPoint>> {
    let (lo, hi) = q0_bounds;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain(format!("invalid q0 bounds ({lo}, {hi})")));
    }
    scenario_params(base, scenario)?;
    let results: Vec<std::result::Result<BoundaryPoint, String>> = rho_grid
        .par_iter()
        .map(|&rho| sweep_one(base, scenario, rho, lo, hi))
        .collect();
    let failures: Vec<String> = results.iter().filter_map(|r| r.as_ref().err().cloned()).collect();
    if !failures.is_empty() {
        return Err(Error::domain(format!("region sweep preconditions violated: {}", failures.join("; "))));
    }
    Ok(results.into_iter().map(|r| r.unwrap()).collect())
}

fn sweep_one(base: &BinaryModelParams, scenario: Scenario, rho: f64, lo: f64, hi: f64) -> std::result::Result<BoundaryPoint, String> {
    let cond = |q0: f64| scenario_condition(base, scenario, q0, rho).map_err(|e| format!("rho={rho}: {e}"));
    let (f_lo, f_hi) = (cond(lo)?, cond(hi)?);
    if !(f_lo <= 1.0 && f_hi > 1.0) {
        return Err(format!("rho={rho}: bounds do not bracket (condition {f_lo} at {lo}, {f_hi} at {hi})"));
    }
    let mut prev = f_lo;
    for s in 1..=MONOTONE_PROBES {
        let v = cond(lo + (hi - lo) * s as f64 / MONOTONE_PROBES as f64)?;
        if v < prev - 1e-12 {
            return Err(format!("rho={rho}: condition not monotone in q0 on [{lo}, {hi}]"));
        }
        prev = v;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > SWEEP_TOL * b.max(1.0) {
        let mid = 0.5 * (a + b);
        if cond(mid)? > 1.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(BoundaryPoint { rho, q0_star: b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Reference values computed independently with 30-digit Newton iteration
    // on g'(t) = a - b - a^t b^(1-t) ln(a/b).
    const DIV_4_1: f64 = 0.506_550_749_165_635_6;
    const TSTAR_4_1: f64 = 0.556_864_436_833_026_9;

    #[test]
    fn divergence_identity_is_zero() {
        for v in [vec![0.0], vec![1.0, 2.0, 3.0], vec![0.0, 5.0]] {
            assert_eq!(ch_divergence(&v, &v).unwrap().value, 0.0);
        }
    }

    #[test]
    fn divergence_scalar_matches_newton() {
        let r = ch_divergence(&[4.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(r.value, DIV_4_1, epsilon = 1e-10);
        assert_abs_diff_eq!(r.t_star, TSTAR_4_1, epsilon = 1e-6);
        assert!(r.iterations <= GOLDEN_MAX_ITER);
    }

    #[test]
    fn divergence_symmetric_pair() {
        let r = ch_divergence(&[1.0, 4.0], &[4.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.t_star, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn divergence_zero_entries() {
        // a_i = 0 < b_i: term is (1-t)·b_i for t > 0; maximum pushes t -> 0+
        let r = ch_divergence(&[0.0], &[2.0]).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-9);
        let r = ch_divergence(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn divergence_rejects_bad_input() {
        assert!(ch_divergence(&[1.0], &[1.0, 2.0]).is_err());
        assert!(ch_divergence(&[-1.0], &[1.0]).is_err());
        assert!(ch_divergence(&[f64::NAN], &[1.0]).is_err());
    }

    fn binary(q: [f64; 4], rho: f64) -> ModelParams {
        BinaryModelParams::sbm(q, rho).unwrap().to_general()
    }

    #[test]
    fn rate_vectors_binary() {
        let p = binary([9.0, 1.0, 3.0, 1.0], 0.5);
        let r = rate_vectors(&p, 0, 0).unwrap();
        for (got, want) in r.q_vec.iter().zip([2.25, 0.25, 0.75, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(r.q_tilde[0], 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.q_tilde[1], 0.5, epsilon = 1e-15);
        assert!(r.g_vec.is_empty());
    }

    #[test]
    fn rate_vectors_censored() {
        let p = BinaryModelParams::cbm([6.0, 1.0, 3.0, 1.0], 0.5, 0.1).unwrap().to_general();
        let r = rate_vectors(&p, 0, 0).unwrap();
        let g = [5.4, 0.1, 0.3, 0.1].map(|v| 0.25 * v);
        let h = [0.6, 0.9, 2.7, 0.9].map(|v| 0.25 * v);
        for k in 0..4 {
            assert_abs_diff_eq!(r.g_vec[k], g[k], epsilon = 1e-14);
            assert_abs_diff_eq!(r.h_vec[k], h[k], epsilon = 1e-14);
            assert_abs_diff_eq!(r.g_vec[k] + r.h_vec[k], r.q_vec[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn erdos_renyi_thresholds_vanish() {
        let p = binary([2.0, 2.0, 2.0, 2.0], 0.4);
        for t in all_thresholds(&p).unwrap() {
            assert_abs_diff_eq!(t.value, 0.0, epsilon = 1e-12);
            assert!(!t.exact_recovery);
        }
        let p = binary([5.0, 5.0, 2.0, 2.0], 0.5);
        let g1 = threshold_gamma1(&p).unwrap();
        assert_abs_diff_eq!(g1.value, 0.0, epsilon = 1e-12);
        assert!(!g1.exact_recovery);
    }

    #[test]
    fn gamma1_consistent_with_eta1() {
        let p = binary([9.0, 1.0, 3.0, 1.0], 0.5);
        let g1 = threshold_gamma1(&p).unwrap();
        assert_abs_diff_eq!(g1.value, 1.133_974_596_215_561_4, epsilon = 1e-9);
        assert!(g1.exact_recovery);
        let c = BinaryModelParams::cbm([4.0, 1.0, 3.0, 1.0], 0.5, 0.1).unwrap().to_general();
        let g3 = threshold_gamma3(&c).unwrap();
        assert_abs_diff_eq!(g3.value, 0.783_974_596_215_561_4, epsilon = 1e-9);
        assert!(!g3.exact_recovery);
    }

    #[test]
    fn cbm_thresholds_need_xi() {
        let p = binary([9.0, 1.0, 3.0, 1.0], 0.5);
        assert!(threshold_gamma3(&p).is_err());
        assert!(threshold_micro_cbm(&p).is_err());
    }

    #[test]
    fn eta_values() {
        assert_abs_diff_eq!(eta1([9.0, 1.0, 3.0, 1.0], 0.5), 1.133_974_596_215_561_4, epsilon = 1e-12);
        assert_abs_diff_eq!(eta1([7.0, 1.0, 3.0, 1.0], 0.5), 0.811_098_940_683_266, epsilon = 1e-12);
        assert_abs_diff_eq!(eta2([10.0, 1.0, 3.0, 1.0], 0.5), 1.200_490_243_203_607_6, epsilon = 1e-12);
        assert_eq!(eta2([4.0, 4.0, 2.0, 2.0], 0.3), 0.0);
    }

    #[test]
    fn sdp_threshold_branches() {
        let p = BinaryModelParams::sbm([12.0, 1.0, 3.0, 1.0], 0.3).unwrap();
        let t = sdp_threshold(&p, true);
        assert_abs_diff_eq!(t.value, 1.098_333_950_160_459_5, epsilon = 1e-12);
        assert!(t.exact_recovery);
        let p9 = p.with_q0(9.0);
        assert_abs_diff_eq!(sdp_threshold(&p9, true).value, 0.787_564_434_701_785_9, epsilon = 1e-12);
        let c = BinaryModelParams::cbm([7.0, 1.0, 3.0, 1.0], 0.5, 0.1).unwrap();
        assert_abs_diff_eq!(sdp_threshold(&c, false).value, 1.188_612_047_660_899, epsilon = 1e-12);
        let half = BinaryModelParams::sbm([9.0, 1.0, 3.0, 1.0], 0.5).unwrap();
        let q = half.q();
        assert_eq!(eta1(q, 0.5), eta1(q, 1.0 - 0.5));
    }

    #[test]
    fn partial_reveal() {
        let t = partial_reveal_from(0.9, 1.5, 0.2, 0.0);
        assert_abs_diff_eq!(t.value, 1.1, epsilon = 1e-12);
        assert!(t.exact_recovery);
        let p = binary([9.0, 1.0, 3.0, 1.0], 0.5);
        let g1 = threshold_gamma1(&p).unwrap().value;
        let g2 = threshold_gamma2(&p).unwrap().value;
        assert_eq!(partial_reveal_threshold(&p, 0.0, 0.0).unwrap().value, g1.min(g2));
        let t = partial_reveal_threshold(&p, 0.1, f64::INFINITY).unwrap();
        assert_eq!(t.value, g1 + 0.1);
        assert_eq!(t.argmin, Some(ArgMin::Term { term: 1 }));
        assert!(partial_reveal_threshold(&p, -1.0, 0.0).is_err());
    }

    #[test]
    fn sweep_closed_forms() {
        let base = BinaryModelParams::sbm([1.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        let known = region_sweep(&base, Scenario::SbmKnownY, &[0.5], (1.0, 100.0)).unwrap();
        assert_abs_diff_eq!(known[0].q0_star, 9.0, epsilon = 1e-6);
        let unknown = region_sweep(&base, Scenario::SbmUnknownY, &[0.5], (1.0, 100.0)).unwrap();
        let want = 2.0 * (1.0 + 2f64.sqrt()).powi(2) - 1.0;
        assert_abs_diff_eq!(unknown[0].q0_star, want, epsilon = 1e-6);
    }

    #[test]
    fn sweep_rejects_non_bracketing() {
        let base = BinaryModelParams::sbm([1.0, 1.0, 3.0, 1.0], 0.5).unwrap();
        let err = region_sweep(&base, Scenario::SbmKnownY, &[0.2, 0.5], (3.0, 5.0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rho=0.2") && msg.contains("rho=0.5"), "{msg}");
        assert!(region_sweep(&base, Scenario::CbmKnownY, &[0.5], (3.0, 50.0)).is_err());
    }
}
