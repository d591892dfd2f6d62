//! Low-rank solver for `max ⟨Z, C⟩` subject to `Z ⪰ 0`, `Z_ii = 1`,
//! `⟨Z, J⟩ = 0`.
//!
//! `Z = VVᵀ` with unit-norm rows `v_i ∈ R^r`. The balance constraint becomes
//! `‖Σ_i v_i‖² = 0` and is handled by the exact penalty `μ‖Σ_i v_i‖²`: the
//! solver maximises `⟨Z, C - μJ⟩` and raises `μ` until the iterate is
//! balanced. Each sweep updates the rows in turn with the exact block
//! maximiser `v_i ← normalize(Σ_j C_ij v_j - μ(s - v_i))`, where `s` is the
//! running row sum, so the penalised objective never decreases.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::objective::SdpObjective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Factor rank; `None` uses `⌈√(2n)⌉` (at least 2, at most `n`).
    pub rank: Option<usize>,
    pub max_sweeps: usize,
    /// Stop when the Riemannian gradient norm is below `grad_rtol·‖C‖_F`.
    pub grad_rtol: f64,
    /// Required `⟨Z, J⟩ / n²`.
    pub balance_tol: f64,
    /// Sweeps between gradient evaluations.
    pub check_every: usize,
    pub seed: u64,
    /// Keep the penalised objective after every sweep.
    pub record_trace: bool,
    /// Random-hyperplane roundings tried besides the top eigenvector.
    pub hyperplanes: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rank: None,
            max_sweeps: 100_000,
            grad_rtol: 1e-8,
            balance_tol: 1e-6,
            check_every: 5,
            seed: 0,
            record_trace: false,
            hyperplanes: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub sweeps: usize,
    pub grad_norm: f64,
    /// `⟨Z, J⟩ / n²` at termination.
    pub balance: f64,
    pub mu: f64,
    pub mu_rounds: usize,
    pub converged: bool,
    pub rank: usize,
    /// `1ᵀ sign(score)` before balance repair.
    pub imbalance_before_repair: i64,
    /// Rounding that produced `x_hat`: 0 for the top eigenvector, `k` for
    /// the `k`-th random hyperplane.
    #[serde(default)]
    pub rounding_candidate: usize,
    /// Penalised objective after each sweep, tagged with its `μ` round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    /// Factor rows; `Z = VVᵀ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Vec<f64>>>,
    /// `⟨Z, C⟩`.
    pub objective: f64,
    /// Rounded balanced labels with `x_hat[0] = +1`.
    pub x_hat: Vec<i8>,
    /// `(λ₁ - λ₂)/n` of `Z`; near 1 for a rank-one solution.
    pub eigengap: f64,
    pub diagnostics: SolverDiagnostics,
}

pub fn default_rank(n: usize) -> usize {
    (((2 * n) as f64).sqrt().ceil() as usize).max(2).min(n.max(2))
}

/// Row-major `n × r` factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub n: usize,
    pub r: usize,
    pub data: Vec<f64>,
}

impl Factor {
    fn random(n: usize, r: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * r];
        for row in data.chunks_mut(r) {
            loop {
                for v in row.iter_mut() {
                    *v = rng.random::<f64>() * 2.0 - 1.0;
                }
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 1e-3 {
                    row.iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            }
        }
        Factor { n, r, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.r..(i + 1) * self.r]
    }

    pub fn column_sum(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.r];
        for row in self.data.chunks(self.r) {
            s.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        s
    }

    /// `⟨VVᵀ, C⟩`.
    pub fn objective(&self, c: &SdpObjective) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            let vi = self.row(i);
            for (j, w) in c.row(i) {
                total += w * dot(vi, self.row(j));
            }
        }
        total
    }

    /// Gram matrix `VᵀV` (`r × r`), sharing the nonzero spectrum of `VVᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.r, self.r);
        for row in self.data.chunks(self.r) {
            for a in 0..self.r {
                for b in a..self.r {
                    g[(a, b)] += row[a] * row[b];
                }
            }
        }
        for a in 0..self.r {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.r).map(<[f64]>::to_vec).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Frobenius norm of the projection of `2(C - μJ)V` onto the tangent space
/// of the product of spheres.
fn riemannian_grad_norm(c: &SdpObjective, f: &Factor, s: &[f64], mu: f64) -> f64 {
    let mut g = vec![0.0; f.r];
    let mut total = 0.0;
    for i in 0..f.n {
        g.iter_mut().zip(s).for_each(|(a, &b)| *a = -mu * b);
        for (j, w) in c.row(i) {
            g.iter_mut().zip(f.row(j)).for_each(|(a, &b)| *a += w * b);
        }
        let vi = f.row(i);
        let radial = dot(&g, vi);
        total += g.iter().zip(vi).map(|(&a, &b)| (a - radial * b).powi(2)).sum::<f64>();
    }
    2.0 * total.sqrt()
}

/// Run the penalised block-coordinate ascent and return the factor with its
/// diagnostics (without rounding).
pub fn solve_factor(c: &SdpObjective, opts: &SolverOptions) -> Result<(Factor, SolverDiagnostics)> {
    let n = c.n();
    if n < 2 || n % 2 == 1 {
        return Err(Error::domain(format!("the balanced relaxation needs an even n >= 2, got {n}")));
    }
    let r = opts.rank.unwrap_or_else(|| default_rank(n)).clamp(2, n.max(2));
    let mut f = Factor::random(n, r, opts.seed);
    let mut s = f.column_sum();
    let n2 = (n * n) as f64;
    let c_norm = c.frobenius_norm();
    let grad_tol = opts.grad_rtol * c_norm.max(f64::MIN_POSITIVE);
    let mut mu = (2.0 * c.abs_sum() / n2).max(1.0 / n as f64);
    let mut trace = opts.record_trace.then(Vec::new);
    let mut sweeps = 0;
    let mut mu_rounds = 0;
    let mut g = vec![0.0; r];
    let mut grad_norm = f64::INFINITY;
    let mut converged = false;
    'outer: loop {
        mu_rounds += 1;
        loop {
            if sweeps >= opts.max_sweeps {
                break 'outer;
            }
            sweeps += 1;
            for i in 0..n {
                let base = i * r;
                for k in 0..r {
                    g[k] = -mu * (s[k] - f.data[base + k]);
                }
                for (j, w) in c.row(i) {
                    let vj = &f.data[j * r..(j + 1) * r];
                    g.iter_mut().zip(vj).for_each(|(a, &b)| *a += w * b);
                }
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for k in 0..r {
                        let new = g[k] / norm;
                        s[k] += new - f.data[base + k];
                        f.data[base + k] = new;
                    }
                }
            }
            if let Some(t) = trace.as_mut() {
                let bal = dot(&s, &s);
                t.push((mu_rounds, f.objective(c) - mu * (bal - n as f64)));
            }
            if sweeps % opts.check_every.max(1) == 0 {
                // refresh the running sum against drift
                s = f.column_sum();
                grad_norm = riemannian_grad_norm(c, &f, &s, mu);
                if grad_norm <= grad_tol {
                    break;
                }
            }
        }
        let balance = dot(&s, &s) / n2;
        if balance <= opts.balance_tol {
            converged = true;
            break;
        }
        mu *= 4.0;
    }
    s = f.column_sum();
    let diagnostics = SolverDiagnostics {
        sweeps,
        grad_norm,
        balance: dot(&s, &s) / n2,
        mu,
        mu_rounds,
        converged,
        rank: r,
        imbalance_before_repair: 0,
        rounding_candidate: 0,
        trace,
    };
    Ok((f, diagnostics))
}

/// Balanced `±1` labels from the factor: signs of the top eigenvector of
/// `VVᵀ`, with the lowest-|score| entries of the majority sign flipped
/// (ties by node index) and `x[0] = +1`. Returns labels, eigengap and the
/// pre-repair imbalance.
pub fn round(f: &Factor) -> (Vec<i8>, f64, i64) {
    let gram = f.gram();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..f.r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let top = eig.eigenvectors.column(order[0]);
    let l1 = eig.eigenvalues[order[0]];
    let l2 = if f.r > 1 { eig.eigenvalues[order[1]] } else { 0.0 };
    let score: Vec<f64> = (0..f.n).map(|i| f.row(i).iter().zip(top.iter()).map(|(a, b)| a * b).sum()).collect();
    let (x, imbalance) = round_scores(&score);
    (x, (l1 - l2) / f.n as f64, imbalance)
}

/// Sign rounding with balance repair, exposed for direct use on scores.
pub fn round_scores(score: &[f64]) -> (Vec<i8>, i64) {
    let mut x: Vec<i8> = score.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
    let imbalance: i64 = x.iter().map(|&v| v as i64).sum();
    if imbalance != 0 {
        let major: i8 = if imbalance > 0 { 1 } else { -1 };
        let mut idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] == major).collect();
        idx.sort_by(|&a, &b| score[a].abs().partial_cmp(&score[b].abs()).unwrap().then(a.cmp(&b)));
        for &i in idx.iter().take((imbalance.unsigned_abs() / 2) as usize) {
            x[i] = -major;
        }
    }
    if x.first() == Some(&-1) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    (x, imbalance)
}

/// Best balanced labels among the eigenvector rounding and `hyperplanes`
/// random-hyperplane roundings of `f`, by `xᵀCx`; earlier candidates win
/// ties. Returns `(x, eigengap, imbalance of the eigenvector rounding,
/// winning candidate)`.
pub fn round_best(f: &Factor, c: &SdpObjective, hyperplanes: usize, seed: u64) -> (Vec<i8>, f64, i64, usize) {
    let (mut best, eigengap, imbalance) = round(f);
    let mut best_value = c.quad_form_spins(&best);
    let mut winner = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut g = vec![0.0; f.r];
    for k in 1..=hyperplanes {
        g.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let score: Vec<f64> = (0..f.n).map(|i| f.row(i).iter().zip(&g).map(|(a, b)| a * b).sum()).collect();
        let (x, _) = round_scores(&score);
        let value = c.quad_form_spins(&x);
        if value > best_value {
            (best, best_value, winner) = (x, value, k);
        }
    }
    (best, eigengap, imbalance, winner)
}

/// Solve and round.
pub fn solve(c: &SdpObjective, opts: &SolverOptions) -> Result<SdpSolution> {
    let (f, mut diagnostics) = solve_factor(c, opts)?;
    let (x_hat, eigengap, imbalance, winner) = round_best(&f, c, opts.hyperplanes, opts.seed);
    diagnostics.imbalance_before_repair = imbalance;
    diagnostics.rounding_candidate = winner;
    if !diagnostics.converged {
        log::warn!("SDP solver stopped after {} sweeps without converging", diagnostics.sweeps);
    }
    Ok(SdpSolution { objective: f.objective(c), v: Some(f.to_rows()), x_hat, eigengap, diagnostics })
}
