//! Semidefinite relaxations of the four balanced recovery problems.
//!
//! Each relaxation is `max ⟨Z, C⟩` over `Z ⪰ 0`, `Z_ii = 1`, `⟨Z, J⟩ = 0`
//! for a scenario-specific cost `C` ([`build_objective`]). [`solve`] finds a
//! low-rank optimum and rounds it to balanced labels; [`certify`] checks a
//! dual certificate proving that the rounded labels are the unique optimum.

mod certificate;
mod objective;
mod solver;

pub use certificate::{
    certify, certify_objective, certify_with_lambda, lambda_bound, CertificateReport, LambdaSource, EIGEN_RTOL,
    RESIDUAL_RTOL,
};
pub use objective::{build_adjacency_objective, build_objective, Coefficients, SdpObjective};
pub use solver::{
    default_rank, round, round_best, round_scores, solve, solve_factor, Factor, SdpSolution, SolverDiagnostics, SolverOptions,
};
