//! Dual certificate for the rounded labels.
//!
//! For balanced `x`, set `d_i = x_i Σ_j C_ij x_j` and
//! `S = diag(d) + λJ - C`. Then `Sx = 0`, and if `S ⪰ 0` with a simple zero
//! eigenvalue, `Z = xxᵀ` is the unique optimum of the relaxation. Any real
//! `λ` gives a valid certificate, so several candidates are tried.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::objective::{build_objective, SdpObjective};
use crate::error::{Error, Result};
use crate::model::{BinaryModelParams, LabeledGraph, Scenario};

pub const RESIDUAL_RTOL: f64 = 1e-8;
pub const EIGEN_RTOL: f64 = 1e-9;
const LAMBDA_SCALES: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    /// Closed-form lower bound of the scenario.
    Bound,
    /// Mean off-diagonal entry of `C`.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub s_min_eig: f64,
    pub s_second_eig: f64,
    pub residual_norm: f64,
    pub lambda_star: f64,
    pub lambda_source: LambdaSource,
    /// Candidates evaluated, including the reported one.
    pub attempts: usize,
    pub is_certified: bool,
}

/// Scenario lower bound for `λ*`, if one is available.
///
/// `rho_hat` is the empirical fraction of `y = 1`; without it the unknown-`y`
/// bound uses `(2ρ̂ - 1)² = 1`.
pub fn lambda_bound(params: &BinaryModelParams, scenario: Scenario, n: usize, rho_hat: Option<f64>) -> Option<f64> {
    let [q0, q1, q2, q3] = params.q();
    let scale = (n as f64).ln() / n as f64;
    let c1 = scale * (q0 - q2 + q1 - q3);
    let c2 = scale * (q0 + q2 + q1 + q3);
    match scenario {
        Scenario::SbmKnownY => {
            let t1 = (q0 * q3 / (q2 * q1)).ln();
            let t2 = (q0 * q2 / (q1 * q3)).ln();
            let rho = rho_hat.unwrap_or(params.rho);
            Some(0.25 * (t1 * c1 + t2 * c2) * (2.0 * rho - 1.0).powi(2))
        }
        Scenario::SbmUnknownY => {
            let skew = rho_hat.map_or(1.0, |r| (2.0 * r - 1.0).powi(2));
            Some(0.25 * (c1 * skew + c2))
        }
        Scenario::CbmKnownY | Scenario::CbmUnknownY => None,
    }
}

fn check_balanced(x: &[i8], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::domain(format!("labels have length {}, expected {n}", x.len())));
    }
    if x.iter().any(|&v| v != 1 && v != -1) {
        return Err(Error::domain("labels must be ±1"));
    }
    let sum: i64 = x.iter().map(|&v| v as i64).sum();
    if sum != 0 {
        return Err(Error::domain(format!("labels are unbalanced (sum {sum})")));
    }
    Ok(())
}

fn sorted_eigenvalues(s: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Check the certificate for one `λ`.
pub fn certify_with_lambda(objective: &SdpObjective, x: &[i8], lambda: f64) -> Result<(f64, f64, f64, bool)> {
    let n = objective.n();
    check_balanced(x, n)?;
    let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let cx = objective.mul_vec(&xf);
    let c = objective.to_dense();
    let mut s = DMatrix::from_element(n, n, lambda) - c;
    for i in 0..n {
        s[(i, i)] += xf[i] * cx[i];
    }
    let residual = (&s * DVector::from_vec(xf)).norm();
    let ev = sorted_eigenvalues(s);
    let c_norm = objective.frobenius_norm();
    let tol_e = EIGEN_RTOL * c_norm.max(1.0);
    let tol_r = RESIDUAL_RTOL * c_norm.max(1.0);
    let (min, second) = (ev[0], ev.get(1).copied().unwrap_or(f64::INFINITY));
    let ok = residual <= tol_r && min >= -tol_e && second > tol_e;
    Ok((min, second, residual, ok))
}

/// Try `λ ∈ {bound, mean} × {1, 2, 4, 8}` in order and stop at the first
/// that certifies. The bound needs `params` and a scenario-tagged objective.
pub fn certify_objective(
    objective: &SdpObjective,
    params: Option<&BinaryModelParams>,
    x: &[i8],
    rho_hat: Option<f64>,
) -> Result<CertificateReport> {
    let n = objective.n();
    check_balanced(x, n)?;
    let mean = {
        let xs = vec![1.0; n];
        objective.quad_form(&xs) / (n * (n - 1)).max(1) as f64
    };
    let mut candidates = Vec::new();
    if let Some(bound) = objective.scenario().zip(params).and_then(|(s, p)| lambda_bound(p, s, n, rho_hat)) {
        candidates.extend(LAMBDA_SCALES.iter().map(|k| (k * bound, LambdaSource::Bound)));
    }
    candidates.extend(LAMBDA_SCALES.iter().map(|k| (k * mean, LambdaSource::Mean)));
    let mut seen: Vec<f64> = Vec::new();
    let mut last = None;
    let mut attempts = 0;
    for (lambda, source) in candidates {
        if seen.contains(&lambda) {
            continue;
        }
        seen.push(lambda);
        attempts += 1;
        let (min, second, residual, ok) = certify_with_lambda(objective, x, lambda)?;
        let report = CertificateReport {
            s_min_eig: min,
            s_second_eig: second,
            residual_norm: residual,
            lambda_star: lambda,
            lambda_source: source,
            attempts,
            is_certified: ok,
        };
        if ok {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("at least one candidate"))
}

/// Certificate for `x` on `graph`, with `ρ̂` taken from the graph's `y`
/// labels when present.
pub fn certify(graph: &LabeledGraph, params: &BinaryModelParams, scenario: Scenario, x: &[i8]) -> Result<CertificateReport> {
    let objective = build_objective(graph, params, scenario)?;
    let rho_hat = graph.y().map(|y| y.iter().filter(|&&l| l == 1).count() as f64 / y.len().max(1) as f64);
    certify_objective(&objective, Some(params), x, rho_hat)
}
