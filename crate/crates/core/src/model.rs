//! Parameter types for the two-latent-variable block models and their
//! samplers.
//!
//! Every node carries a community label `x ∈ {0..m_x}` and an auxiliary label
//! `y ∈ {0..m_y}`. The pair `(x, y)` is a *micro-community*, flattened to the
//! index `y·m_x + x` which addresses rows and columns of `Q` and `Xi`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PRIOR_SUM_TOL: f64 = 1e-12;

/// Flat index of micro-community `(i, j)`.
pub fn micro_index(i: usize, j: usize, m_x: usize, m_y: usize) -> Result<usize> {
    if i >= m_x || j >= m_y {
        return Err(Error::domain(format!(
            "micro-community ({i},{j}) out of range for m_x={m_x}, m_y={m_y}"
        )));
    }
    Ok(j * m_x + i)
}

/// Inverse of [`micro_index`]: returns `(i, j)`.
pub fn split_micro(idx: usize, m_x: usize) -> (usize, usize) {
    (idx % m_x, idx / m_x)
}

/// Spin encoding of a binary community label: label 0 is `+1`.
pub fn spin_x(label: usize) -> i8 {
    if label == 0 {
        1
    } else {
        -1
    }
}

/// Spin encoding of a binary auxiliary label: label 1 (`y = +1`) is `+1`.
pub fn spin_y(label: usize) -> i8 {
    if label == 1 {
        1
    } else {
        -1
    }
}

/// Full generative description of a two-latent-variable model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelParams")]
pub struct ModelParams {
    pub m_x: usize,
    pub m_y: usize,
    /// `P[i][j] = ℙ(x = i, y = j)`.
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    /// Edge-rate constants; the edge probability is `Q·log n / n`.
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    /// Probability that an existing edge is positive. Present iff censored.
    #[serde(rename = "Xi", default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct RawModelParams {
    m_x: usize,
    m_y: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "Xi", default)]
    xi: Option<Vec<Vec<f64>>>,
}

impl TryFrom<RawModelParams> for ModelParams {
    type Error = Error;

    fn try_from(raw: RawModelParams) -> Result<Self> {
        ModelParams::new(raw.m_x, raw.m_y, raw.p, raw.q, raw.xi)
    }
}

fn check_square_symmetric(name: &str, m: &[Vec<f64>], k: usize) -> Result<()> {
    if m.len() != k || m.iter().any(|row| row.len() != k) {
        return Err(Error::domain(format!("{name} must be {k}x{k}")));
    }
    for a in 0..k {
        for b in 0..k {
            let v = m[a][b];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name}[{a}][{b}] = {v} is not a finite nonnegative value")));
            }
            if (v - m[b][a]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(Error::domain(format!("{name} is not symmetric at ({a},{b})")));
            }
        }
    }
    Ok(())
}

impl ModelParams {
    pub fn new(
        m_x: usize,
        m_y: usize,
        p: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        xi: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let params = ModelParams { m_x, m_y, p, q, xi };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_x == 0 || self.m_y == 0 {
            return Err(Error::domain("alphabet sizes must be positive"));
        }
        if self.p.len() != self.m_x || self.p.iter().any(|row| row.len() != self.m_y) {
            return Err(Error::domain(format!("P must be {}x{}", self.m_x, self.m_y)));
        }
        let mut total = 0.0;
        for row in &self.p {
            for &v in row {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::domain(format!("prior entry {v} is negative or not finite")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(Error::domain(format!("priors sum to {total}, expected 1")));
        }
        let k = self.micro_count();
        check_square_symmetric("Q", &self.q, k)?;
        if let Some(xi) = &self.xi {
            check_square_symmetric("Xi", xi, k)?;
            if xi.iter().flatten().any(|&v| v > 1.0) {
                return Err(Error::domain("Xi entries must lie in [0,1]"));
            }
        }
        Ok(())
    }

    pub fn micro_count(&self) -> usize {
        self.m_x * self.m_y
    }

    pub fn is_censored(&self) -> bool {
        self.xi.is_some()
    }

    /// `p = vec(P)` laid out by micro-community index.
    pub fn prior_vec(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.micro_count()];
        for i in 0..self.m_x {
            for j in 0..self.m_y {
                p[j * self.m_x + i] = self.p[i][j];
            }
        }
        p
    }

    /// Marginal distribution of the auxiliary label.
    pub fn y_marginal(&self) -> Vec<f64> {
        (0..self.m_y).map(|j| (0..self.m_x).map(|i| self.p[i][j]).sum()).collect()
    }

    /// Positive-sign probability between two micro-communities (1 for SBM).
    pub fn positive_fraction(&self, a: usize, b: usize) -> f64 {
        self.xi.as_ref().map_or(1.0, |xi| xi[a][b])
    }
}

/// Four-parameter binary model with `m_x = m_y = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBinaryParams")]
pub struct BinaryModelParams {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    pub rho: f64,
}

#[derive(Deserialize)]
struct RawBinaryParams {
    q0: f64,
    q1: f64,
    q2: f64,
    q3: f64,
    #[serde(default)]
    xi: Option<f64>,
    rho: f64,
}

impl TryFrom<RawBinaryParams> for BinaryModelParams {
    type Error = Error;

    fn try_from(r: RawBinaryParams) -> Result<Self> {
        BinaryModelParams::new([r.q0, r.q1, r.q2, r.q3], r.rho, r.xi)
    }
}

impl BinaryModelParams {
    pub fn new(q: [f64; 4], rho: f64, xi: Option<f64>) -> Result<Self> {
        let params = BinaryModelParams { q0: q[0], q1: q[1], q2: q[2], q3: q[3], xi, rho };
        params.validate()?;
        Ok(params)
    }

    pub fn sbm(q: [f64; 4], rho: f64) -> Result<Self> {
        Self::new(q, rho, None)
    }

    pub fn cbm(q: [f64; 4], rho: f64, xi: f64) -> Result<Self> {
        Self::new(q, rho, Some(xi))
    }

    pub fn validate(&self) -> Result<()> {
        if self.q().iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::domain(format!("rates must be positive, got {:?}", self.q())));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::domain(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        if let Some(xi) = self.xi {
            if !(xi > 0.0 && xi < 0.5) {
                return Err(Error::domain(format!("xi must lie in (0,0.5), got {xi}")));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> [f64; 4] {
        [self.q0, self.q1, self.q2, self.q3]
    }

    pub fn with_q0(&self, q0: f64) -> Self {
        BinaryModelParams { q0, ..*self }
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        BinaryModelParams { rho, ..*self }
    }

    pub fn is_censored(&self) -> bool {
        self.xi.is_some()
    }

    /// Rate constant between micro-communities `(i, j)` and `(k, l)`.
    fn rate(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        match (i == k, j == l) {
            (true, true) => self.q0,
            (false, true) => self.q1,
            (true, false) => self.q2,
            (false, false) => self.q3,
        }
    }

    /// Embed into the general model: balanced `x`, `y` independent of `x`
    /// with `ℙ(y = 1) = rho`.
    pub fn to_general(&self) -> ModelParams {
        let p = vec![
            vec![(1.0 - self.rho) / 2.0, self.rho / 2.0],
            vec![(1.0 - self.rho) / 2.0, self.rho / 2.0],
        ];
        let mut q = vec![vec![0.0; 4]; 4];
        let mut xi = vec![vec![0.0; 4]; 4];
        for a in 0..4 {
            let (i, j) = split_micro(a, 2);
            for b in 0..4 {
                let (k, l) = split_micro(b, 2);
                q[a][b] = self.rate(i, j, k, l);
                if let Some(x) = self.xi {
                    xi[a][b] = if a == b { 1.0 - x } else { x };
                }
            }
        }
        ModelParams { m_x: 2, m_y: 2, p, q, xi: self.xi.map(|_| xi) }
    }

    /// Sample with exactly balanced `x` (the setting of the SDP results).
    pub fn sample(&self, n: usize, seed: u64, exact_y_count: bool) -> Result<Sample> {
        let opts = SamplerOptions { labels: LabelScheme::BalancedX, exact_y_count };
        let general = self.to_general();
        if self.is_censored() {
            sample_cbm(&general, n, seed, &opts)
        } else {
            sample_sbm(&general, n, seed, &opts)
        }
    }
}

/// Either parameterisation, as accepted in JSON inputs. Objects with a `q0`
/// key are binary.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamsSpec {
    Binary(BinaryModelParams),
    General(ModelParams),
}

impl<'de> Deserialize<'de> for ParamsSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        // dispatching on shape keeps validation messages that untagged enums swallow
        let value = serde_json::Value::deserialize(d)?;
        if value.get("q0").is_some() {
            serde_json::from_value(value).map(ParamsSpec::Binary).map_err(D::Error::custom)
        } else {
            serde_json::from_value(value).map(ParamsSpec::General).map_err(D::Error::custom)
        }
    }
}

impl ParamsSpec {
    pub fn general(&self) -> ModelParams {
        match self {
            ParamsSpec::Binary(b) => b.to_general(),
            ParamsSpec::General(g) => g.clone(),
        }
    }

    pub fn binary(&self) -> Option<&BinaryModelParams> {
        match self {
            ParamsSpec::Binary(b) => Some(b),
            ParamsSpec::General(_) => None,
        }
    }

    pub fn binary_or_err(&self) -> Result<&BinaryModelParams> {
        self.binary()
            .ok_or_else(|| Error::domain("this operation needs binary parameters {q0,q1,q2,q3,rho[,xi]}"))
    }
}

/// Recovery setting: stochastic or censored model, `y` revealed or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[serde(alias = "sbm_known")]
    SbmKnownY,
    #[serde(alias = "sbm_unknown")]
    SbmUnknownY,
    #[serde(alias = "cbm_known")]
    CbmKnownY,
    #[serde(alias = "cbm_unknown")]
    CbmUnknownY,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::SbmKnownY, Scenario::SbmUnknownY, Scenario::CbmKnownY, Scenario::CbmUnknownY];

    pub fn known_y(self) -> bool {
        matches!(self, Scenario::SbmKnownY | Scenario::CbmKnownY)
    }

    pub fn censored(self) -> bool {
        matches!(self, Scenario::CbmKnownY | Scenario::CbmUnknownY)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::SbmKnownY => "sbm_known_y",
            Scenario::SbmUnknownY => "sbm_unknown_y",
            Scenario::CbmKnownY => "cbm_known_y",
            Scenario::CbmUnknownY => "cbm_unknown_y",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::domain(format!("unknown scenario '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Sbm,
    Cbm,
}

/// Symmetric graph with zero diagonal and optional ground-truth labels.
///
/// Edges are stored as sorted adjacency lists of `(neighbor, sign)`; the sign
/// is always `+1` for stochastic-model graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    n: usize,
    kind: GraphKind,
    x: Option<Vec<usize>>,
    y: Option<Vec<usize>>,
    adj: Vec<Vec<(u32, i8)>>,
}

impl LabeledGraph {
    pub fn from_edges(
        n: usize,
        kind: GraphKind,
        x: Option<Vec<usize>>,
        y: Option<Vec<usize>>,
        edges: &[(usize, usize, i8)],
    ) -> Result<Self> {
        for (name, labels) in [("x", &x), ("y", &y)] {
            if let Some(l) = labels {
                if l.len() != n {
                    return Err(Error::domain(format!("{name} has length {}, expected {n}", l.len())));
                }
            }
        }
        let mut adj: Vec<Vec<(u32, i8)>> = vec![Vec::new(); n];
        for &(u, v, s) in edges {
            if u >= n || v >= n {
                return Err(Error::domain(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u == v {
                return Err(Error::domain(format!("self-loop at node {u}")));
            }
            let allowed = match kind {
                GraphKind::Sbm => s == 1,
                GraphKind::Cbm => s == 1 || s == -1,
            };
            if !allowed {
                return Err(Error::domain(format!("edge sign {s} not allowed for {kind:?} graph")));
            }
            adj[u].push((v as u32, s));
            adj[v].push((u as u32, s));
        }
        for (v, row) in adj.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(u, _)| u);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::domain(format!("duplicate edge at node {v}")));
            }
        }
        Ok(LabeledGraph { n, kind, x, y, adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_signed(&self) -> bool {
        self.kind == GraphKind::Cbm
    }

    pub fn x(&self) -> Option<&[usize]> {
        self.x.as_deref()
    }

    pub fn y(&self) -> Option<&[usize]> {
        self.y.as_deref()
    }

    pub fn neighbors(&self, v: usize) -> &[(u32, i8)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Entry `A[u][v]` in `{-1, 0, 1}`.
    pub fn get(&self, u: usize, v: usize) -> i8 {
        match self.adj[u].binary_search_by_key(&(v as u32), |&(w, _)| w) {
            Ok(pos) => self.adj[u][pos].1,
            Err(_) => 0,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v, sign)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, i8)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, row)| {
            row.iter().filter(move |&&(v, _)| (v as usize) > u).map(move |&(v, s)| (u, v as usize, s))
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        let mut m = vec![vec![0i8; self.n]; self.n];
        for (u, v, s) in self.edges() {
            m[u][v] = s;
            m[v][u] = s;
        }
        m
    }

    /// Micro-community index of every node from the ground-truth labels.
    pub fn micro_labels(&self, m_x: usize) -> Result<Vec<usize>> {
        let x = self.x().ok_or_else(|| Error::domain("graph has no x labels"))?;
        let y = self.y().ok_or_else(|| Error::domain("graph has no y labels"))?;
        Ok(x.iter().zip(y).map(|(&i, &j)| j * m_x + i).collect())
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            model: self.kind,
            x: self.x.clone(),
            y: self.y.clone(),
            edges: self.edges().map(|(u, v, s)| [u as i64, v as i64, s as i64]).collect(),
        }
    }

    pub fn from_json(doc: GraphJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(doc.edges.len());
        for [u, v, s] in doc.edges {
            if u < 0 || v < 0 || u >= v {
                return Err(Error::domain(format!("edge [{u},{v},{s}] must satisfy 0 <= u < v")));
            }
            if !(-1..=1).contains(&s) || s == 0 {
                return Err(Error::domain(format!("edge sign {s} must be +1 or -1")));
            }
            edges.push((u as usize, v as usize, s as i8));
        }
        LabeledGraph::from_edges(doc.n, doc.model, doc.x, doc.y, &edges)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_json())?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(s)?)
    }
}

/// On-disk graph document: `{n, model, x, y, edges: [[u, v, sign], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub model: GraphKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<usize>>,
    pub edges: Vec<[i64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// Micro-communities drawn i.i.d. from `P`.
    #[default]
    Iid,
    /// Exactly `⌊n/2⌋` nodes with `x = 0`; `y` drawn given `x`.
    BalancedX,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub labels: LabelScheme,
    /// Fix the count of every `y` value to its expected share of `n`.
    pub exact_y_count: bool,
}

/// A sampled graph plus the number of node pairs whose edge probability had
/// to be clipped at 1.
#[derive(Debug, Clone)]
pub struct Sample {
    pub graph: LabeledGraph,
    pub clipped_pairs: u64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const LABEL_STREAM: u64 = 0;
const AUX_STREAM: u64 = 1;
const ROW_STREAM_BASE: u64 = 2;

fn draw_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    // rounding can leave u marginally above the last bucket
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Largest-remainder apportionment of `n` items to shares `w`.
fn exact_counts(n: usize, w: &[f64]) -> Vec<usize> {
    let total: f64 = w.iter().sum();
    let raw: Vec<f64> = w.iter().map(|&v| v / total * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|&v| v.floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[k] += 1;
        left -= 1;
    }
    counts
}

fn assign_by_counts(rng: &mut ChaCha8Rng, counts: &[usize]) -> Vec<usize> {
    let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(k, &c)| std::iter::repeat_n(k, c)).collect();
    labels.shuffle(rng);
    labels
}

fn sample_labels(params: &ModelParams, n: usize, seed: u64, opts: &SamplerOptions) -> Result<(Vec<usize>, Vec<usize>)> {
    let (m_x, m_y) = (params.m_x, params.m_y);
    let mut rng = stream_rng(seed, LABEL_STREAM);
    let mut aux_rng = stream_rng(seed, AUX_STREAM);
    let x_given_y = |j: usize| -> Vec<f64> { (0..m_x).map(|i| params.p[i][j]).collect() };
    let y_given_x = |i: usize| -> Vec<f64> { params.p[i].clone() };
    match opts.labels {
        LabelScheme::Iid => {
            if opts.exact_y_count {
                let y = assign_by_counts(&mut aux_rng, &exact_counts(n, &params.y_marginal()));
                let x = y.iter().map(|&j| draw_index(&mut rng, &x_given_y(j))).collect();
                Ok((x, y))
            } else {
                let p = params.prior_vec();
                let (x, y) = (0..n).map(|_| split_micro(draw_index(&mut rng, &p), m_x)).unzip();
                Ok((x, y))
            }
        }
        LabelScheme::BalancedX => {
            if m_x != 2 {
                return Err(Error::domain("balanced x labels need m_x = 2"));
            }
            let mut x: Vec<usize> = (0..n).map(|v| usize::from(v >= n / 2)).collect();
            x.shuffle(&mut rng);
            let y = if opts.exact_y_count {
                assign_by_counts(&mut aux_rng, &exact_counts(n, &params.y_marginal()))
            } else {
                x.iter().map(|&i| draw_index(&mut aux_rng, &y_given_x(i))).collect()
            };
            debug_assert!(y.iter().all(|&j| j < m_y));
            Ok((x, y))
        }
    }
}

fn sample_graph(params: &ModelParams, n: usize, seed: u64, opts: &SamplerOptions, signed: bool) -> Result<Sample> {
    params.validate()?;
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let (x, y) = sample_labels(params, n, seed, opts)?;
    let micro: Vec<usize> = x.iter().zip(&y).map(|(&i, &j)| j * params.m_x + i).collect();
    let scale = (n as f64).ln() / n as f64;
    let k = params.micro_count();
    let mut clipped_block = vec![false; k * k];
    let mut prob = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let raw = params.q[a][b] * scale;
            clipped_block[a * k + b] = raw > 1.0;
            prob[a * k + b] = raw.min(1.0);
        }
    }
    let xi = params.xi.as_ref();
    let mut edges = Vec::new();
    let mut clipped_pairs = 0u64;
    for v in 0..n {
        let mut rng = stream_rng(seed, ROW_STREAM_BASE + v as u64);
        let a = micro[v];
        for u in (v + 1)..n {
            let b = micro[u];
            if clipped_block[a * k + b] {
                clipped_pairs += 1;
            }
            if rng.random::<f64>() < prob[a * k + b] {
                let sign = match xi {
                    Some(xi) if rng.random::<f64>() >= xi[a][b] => -1,
                    _ => 1,
                };
                edges.push((v, u, sign));
            }
        }
    }
    if clipped_pairs > 0 {
        log::warn!("{clipped_pairs} node pairs had Q·log n/n > 1 and were clipped to probability 1");
    }
    let kind = if signed { GraphKind::Cbm } else { GraphKind::Sbm };
    let graph = LabeledGraph::from_edges(n, kind, Some(x), Some(y), &edges)?;
    Ok(Sample { graph, clipped_pairs })
}

/// Sample a stochastic-block-model graph. Deterministic in `(params, n, seed)`.
pub fn sample_sbm(params: &ModelParams, n: usize, seed: u64, opts: &SamplerOptions) -> Result<Sample> {
    if params.is_censored() {
        return Err(Error::domain("sample_sbm called with censored parameters (Xi present)"));
    }
    sample_graph(params, n, seed, opts, false)
}

/// Sample a censored-block-model graph: edges as in [`sample_sbm`], each
/// existing edge positive with probability `Xi[a][b]`.
pub fn sample_cbm(params: &ModelParams, n: usize, seed: u64, opts: &SamplerOptions) -> Result<Sample> {
    if !params.is_censored() {
        return Err(Error::domain("sample_cbm needs Xi"));
    }
    sample_graph(params, n, seed, opts, true)
}
