use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{spin_y, BinaryModelParams, LabeledGraph, Scenario};

/// Log-ratio coefficients multiplying the matrices of an objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// `log((1-ξ)/ξ)`, censored scenarios only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// `log(q0·q3 / (q2·q1))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    /// `log(q0·q2 / (q1·q3))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
}

impl Coefficients {
    pub fn for_scenario(params: &BinaryModelParams, scenario: Scenario) -> Self {
        let [q0, q1, q2, q3] = params.q();
        let t1 = (q0 * q3 / (q2 * q1)).ln();
        let t2 = (q0 * q2 / (q1 * q3)).ln();
        let t = params.xi.map(|xi| ((1.0 - xi) / xi).ln());
        match scenario {
            Scenario::SbmKnownY => Coefficients { t: None, t1: Some(t1), t2: Some(t2) },
            Scenario::SbmUnknownY => Coefficients::default(),
            Scenario::CbmKnownY => Coefficients { t, t1: Some(t1), t2: Some(t2) },
            Scenario::CbmUnknownY => Coefficients { t, t1: None, t2: Some(t2) },
        }
    }
}

/// Symmetric cost matrix `C` with zero diagonal, stored in CSR form.
///
/// The diagonal is irrelevant under `Z_ii = 1` and is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpObjective {
    scenario: Option<Scenario>,
    coefficients: Coefficients,
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Assemble the objective of `scenario` for `graph`:
///
/// | scenario         | `C`                                        |
/// |------------------|--------------------------------------------|
/// | `sbm_known_y`    | `T₁·(W∘A) + T₂·A`                           |
/// | `sbm_unknown_y`  | `A`                                        |
/// | `cbm_known_y`    | `T·A + T·(A∘W) + T₁·(A∘A∘W) + T₂·(A∘A)`     |
/// | `cbm_unknown_y`  | `T·A + T₂·(A∘A)`                            |
///
/// with `W = yyᵀ` in spin form and `A∘A` the unsigned support.
pub fn build_objective(graph: &LabeledGraph, params: &BinaryModelParams, scenario: Scenario) -> Result<SdpObjective> {
    if scenario.censored() != graph.is_signed() {
        return Err(Error::domain(format!("scenario {scenario} does not match a {:?} graph", graph.kind())));
    }
    if scenario.censored() && params.xi.is_none() {
        return Err(Error::domain(format!("scenario {scenario} needs xi")));
    }
    let y = if scenario.known_y() {
        Some(graph.y().ok_or_else(|| Error::domain(format!("scenario {scenario} needs y labels on the graph")))?)
    } else {
        None
    };
    if let Some(y) = y {
        if let Some(&bad) = y.iter().find(|&&l| l > 1) {
            return Err(Error::domain(format!("binary objectives need y in {{0,1}}, found {bad}")));
        }
    }
    let coefficients = Coefficients::for_scenario(params, scenario);
    let (t, t1, t2) = (coefficients.t.unwrap_or(0.0), coefficients.t1.unwrap_or(0.0), coefficients.t2.unwrap_or(0.0));
    let n = graph.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(2 * graph.num_edges());
    let mut vals = Vec::with_capacity(2 * graph.num_edges());
    row_ptr.push(0);
    for u in 0..n {
        for &(v, s) in graph.neighbors(u) {
            let w = || (spin_y(y.unwrap()[u]) * spin_y(y.unwrap()[v as usize])) as f64;
            let s = s as f64;
            let c = match scenario {
                Scenario::SbmKnownY => t1 * w() + t2,
                Scenario::SbmUnknownY => 1.0,
                Scenario::CbmKnownY => t * s + t * s * w() + t1 * w() + t2,
                Scenario::CbmUnknownY => t * s + t2,
            };
            cols.push(v);
            vals.push(c);
        }
        row_ptr.push(cols.len());
    }
    Ok(SdpObjective { scenario: Some(scenario), coefficients, n, row_ptr, cols, vals })
}

/// The `sbm_unknown_y` objective, which needs no parameters.
pub fn build_adjacency_objective(graph: &LabeledGraph) -> Result<SdpObjective> {
    if graph.is_signed() {
        return Err(Error::domain("the adjacency objective needs an unsigned graph"));
    }
    let n = graph.n();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(2 * graph.num_edges());
    row_ptr.push(0);
    for u in 0..n {
        cols.extend(graph.neighbors(u).iter().map(|&(v, _)| v));
        row_ptr.push(cols.len());
    }
    let vals = vec![1.0; cols.len()];
    Ok(SdpObjective {
        scenario: Some(Scenario::SbmUnknownY),
        coefficients: Coefficients::default(),
        n,
        row_ptr,
        cols,
        vals,
    })
}

impl SdpObjective {
    /// Objective from an explicit symmetric matrix (diagonal ignored).
    pub fn from_dense(c: &DMatrix<f64>) -> Result<Self> {
        let n = c.nrows();
        if c.ncols() != n {
            return Err(Error::domain("cost matrix must be square"));
        }
        let mut row_ptr = vec![0];
        let (mut cols, mut vals) = (Vec::new(), Vec::new());
        for i in 0..n {
            for j in 0..n {
                let v = c[(i, j)];
                if !v.is_finite() {
                    return Err(Error::domain("cost matrix has non-finite entries"));
                }
                if (v - c[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::domain(format!("cost matrix is not symmetric at ({i},{j})")));
                }
                if i != j && v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SdpObjective { scenario: None, coefficients: Coefficients::default(), n, row_ptr, cols, vals })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scenario(&self) -> Option<Scenario> {
        self.scenario
    }

    pub fn coefficients(&self) -> Coefficients {
        self.coefficients
    }

    /// Stored off-diagonal entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries `(j, C_ij)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().zip(&self.vals[range]).map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(k, _)| k == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn abs_sum(&self) -> f64 {
        self.vals.iter().map(|v| v.abs()).sum()
    }

    /// `Cx`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `xᵀCx`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn quad_form_spins(&self, x: &[i8]) -> f64 {
        let xf: Vec<f64> = x.iter().map(|&s| s as f64).collect();
        self.quad_form(&xf)
    }
}
