//! Truncated brute-force sums of minima of Poisson probabilities, and the
//! divergence bounds they are checked against.
//!
//! `I(a, b) = Σ_d min{P_a(d)·p, P_b(d)·p̂}` over `d ∈ Z₊^m`, where `P_a` is the
//! product Poisson law with means `a`. The paired form sums over `(d, w)`
//! with laws `P_a(d)P_â(w)` and `P_b(d)P_b̂(w)`, which is the single form
//! applied to the stacked vectors `[a, â]` and `[b, b̂]`.
//!
//! The sum runs over a box; the last coordinate is summed in closed form
//! because the likelihood ratio is monotone in it.

use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

use crate::divergence::ch_divergence;
use crate::error::{Error, Result};

/// Total probability allowed outside the truncation box.
pub const TAIL_TOL: f64 = 1e-12;
const MAX_CAP: usize = 10_000;
const MAX_BOX: f64 = 5e8;

fn check_rates(a: &[f64], b: &[f64], p: f64, p_hat: f64) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::domain("rate vectors must be nonempty and of equal length"));
    }
    if a.iter().chain(b).any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::domain("Poisson rates must be positive"));
    }
    if !(p.is_finite() && p > 0.0 && p_hat.is_finite() && p_hat > 0.0) {
        return Err(Error::domain("p and p_hat must be positive"));
    }
    Ok(())
}

fn tail(rate: f64, cap: usize) -> f64 {
    Poisson::new(rate).map(|d| d.sf(cap as u64)).unwrap_or(1.0)
}

/// Upper bound on the mass outside the box `0..=caps[i]`, weighted by
/// `max(p, p̂)` (union bound over coordinates).
pub fn tail_mass(a: &[f64], b: &[f64], p: f64, p_hat: f64, caps: &[usize]) -> f64 {
    let w = p.max(p_hat);
    w * a.iter().zip(b).zip(caps).map(|((&ai, &bi), &k)| tail(ai, k).max(tail(bi, k))).sum::<f64>()
}

/// Smallest per-coordinate caps whose tail mass is below `tol`.
pub fn auto_truncation(a: &[f64], b: &[f64], p: f64, p_hat: f64, tol: f64) -> Result<Vec<usize>> {
    check_rates(a, b, p, p_hat)?;
    let per = tol / (a.len() as f64 * p.max(p_hat));
    a.iter()
        .zip(b)
        .map(|(&ai, &bi)| {
            let rate = ai.max(bi);
            let mut k = rate.ceil() as usize;
            while tail(rate, k) > per {
                k += 1;
                if k > MAX_CAP {
                    return Err(Error::domain(format!("no truncation below {MAX_CAP} for rate {rate}")));
                }
            }
            Ok(k)
        })
        .collect()
}

fn pmf_table(rate: f64, cap: usize) -> Vec<f64> {
    let d = Poisson::new(rate).expect("positive rate");
    (0..=cap as u64).map(|k| d.pmf(k)).collect()
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for &x in v {
        acc += x;
        out.push(acc);
    }
    out
}

/// `I(a, b)` summed over the box `0..=truncation[i]`.
///
/// Errors if the mass outside the box exceeds [`TAIL_TOL`].
pub fn poisson_min_sum(a: &[f64], b: &[f64], p: f64, p_hat: f64, truncation: &[usize]) -> Result<f64> {
    check_rates(a, b, p, p_hat)?;
    if truncation.len() != a.len() {
        return Err(Error::domain("one truncation cap per coordinate is required"));
    }
    let tm = tail_mass(a, b, p, p_hat, truncation);
    if tm > TAIL_TOL {
        return Err(Error::domain(format!("truncation too small: tail mass {tm:e} exceeds {TAIL_TOL:e}")));
    }
    let boxed: f64 = truncation[..truncation.len() - 1].iter().map(|&k| (k + 1) as f64).product();
    if boxed > MAX_BOX {
        return Err(Error::domain(format!("truncation box of {boxed:e} cells is too large")));
    }
    let m = a.len();
    let pa: Vec<Vec<f64>> = (0..m).map(|i| pmf_table(a[i], truncation[i])).collect();
    let pb: Vec<Vec<f64>> = (0..m).map(|i| pmf_table(b[i], truncation[i])).collect();
    let (am, bm, cap) = (a[m - 1], b[m - 1], truncation[m - 1]);
    let ca = prefix_sums(&pa[m - 1]);
    let cb = prefix_sums(&pb[m - 1]);
    // min over the last coordinate given prefix weights (α, β)
    let last = |alpha: f64, beta: f64| -> f64 {
        if alpha == 0.0 || beta == 0.0 {
            return 0.0;
        }
        if am == bm {
            return alpha.min(beta) * ca[cap + 1];
        }
        // r(d) = (α/β)·e^{b-a}·(a/b)^d crosses 1 at d = s
        let s = ((beta / alpha).ln() + am - bm) / (am / bm).ln();
        let k = if s <= 0.0 { 0 } else { (s.ceil() as usize).min(cap + 1) };
        if am > bm {
            // α·pa is the smaller term below k
            alpha * ca[k] + beta * (cb[cap + 1] - cb[k])
        } else {
            beta * cb[k] + alpha * (ca[cap + 1] - ca[k])
        }
    };
    let mut total = 0.0;
    let mut idx = vec![0usize; m - 1];
    loop {
        let mut alpha = p;
        let mut beta = p_hat;
        for (i, &d) in idx.iter().enumerate() {
            alpha *= pa[i][d];
            beta *= pb[i][d];
        }
        total += last(alpha, beta);
        // odometer increment
        let mut i = 0;
        loop {
            if i == m - 1 {
                return Ok(total);
            }
            idx[i] += 1;
            if idx[i] <= truncation[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Paired form `I(a, b, â, b̂)`, summed over `(d, w)`.
pub fn poisson_min_sum_pair(
    a: &[f64],
    b: &[f64],
    a_hat: &[f64],
    b_hat: &[f64],
    p: f64,
    p_hat: f64,
    truncation: &[usize],
) -> Result<f64> {
    if a_hat.len() != a.len() || b_hat.len() != b.len() {
        return Err(Error::domain("paired rate vectors must match in length"));
    }
    poisson_min_sum(&stack(a, a_hat), &stack(b, b_hat), p, p_hat, truncation)
}

fn stack(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().chain(v).copied().collect()
}

/// Sandwich bounds on a Poisson min-sum, with the divergence and `t*` used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinSumBounds {
    pub lower: f64,
    pub upper: f64,
    pub divergence: f64,
    pub t_star: f64,
}

/// `max{p,p̂}e^{-Div}` above and
/// `min{p,p̂}e^{-Div} Π_i e^{-1}(a_i^t* b_i^(1-t*))^{-1/2}` below.
pub fn min_sum_bounds(a: &[f64], b: &[f64], p: f64, p_hat: f64) -> Result<MinSumBounds> {
    check_rates(a, b, p, p_hat)?;
    let div = ch_divergence(a, b)?;
    let t = div.t_star;
    let upper = p.max(p_hat) * (-div.value).exp();
    let factor: f64 = a
        .iter()
        .zip(b)
        .map(|(&ai, &bi)| (-1.0f64).exp() * (ai.powf(t) * bi.powf(1.0 - t)).powf(-0.5))
        .product();
    let lower = p.min(p_hat) * (-div.value).exp() * factor;
    Ok(MinSumBounds { lower, upper, divergence: div.value, t_star: t })
}

/// Bounds for the paired form, with `Div([a, â], [b, b̂])` and the lower
/// factor `Π_i e^{-2}[(a_i â_i)^t* (b_i b̂_i)^(1-t*)]^{-1/2}`.
pub fn pair_min_sum_bounds(
    a: &[f64],
    b: &[f64],
    a_hat: &[f64],
    b_hat: &[f64],
    p: f64,
    p_hat: f64,
) -> Result<MinSumBounds> {
    if a_hat.len() != a.len() || b_hat.len() != b.len() {
        return Err(Error::domain("paired rate vectors must match in length"));
    }
    let (s, t_vec) = (stack(a, a_hat), stack(b, b_hat));
    check_rates(&s, &t_vec, p, p_hat)?;
    let div = ch_divergence(&s, &t_vec)?;
    let t = div.t_star;
    let upper = p.max(p_hat) * (-div.value).exp();
    let factor: f64 = (0..a.len())
        .map(|i| {
            let g = (a[i] * a_hat[i]).powf(t) * (b[i] * b_hat[i]).powf(1.0 - t);
            (-2.0f64).exp() * g.powf(-0.5)
        })
        .product();
    let lower = p.min(p_hat) * (-div.value).exp() * factor;
    Ok(MinSumBounds { lower, upper, divergence: div.value, t_star: t })
}
