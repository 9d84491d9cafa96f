//! State spaces, stochastic matrices, deterministic maps and distributions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row sums may deviate from one by at most this much; smaller deviations are
/// renormalized away.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Finite state space `{0, .., n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateSpace(usize);

impl StateSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self(n))
    }

    pub fn size(self) -> usize {
        self.0
    }

    pub fn states(self) -> std::ops::Range<usize> {
        0..self.0
    }
}

/// A validated row-stochastic matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    n: usize,
    entries: Vec<f64>,
}

/// Validate a square real matrix as row-stochastic.
///
/// Rows whose sum deviates from one by at most [`ROW_SUM_TOL`] are rescaled;
/// anything larger is rejected.
pub fn validate_stochastic(raw: &[Vec<f64>]) -> Result<StochasticMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut entries = Vec::with_capacity(n * n);
    for (row, values) in raw.iter().enumerate() {
        if values.len() != n {
            return Err(Error::NotSquare { row, len: values.len(), expected: n });
        }
        for (col, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
            if value < 0.0 {
                return Err(Error::NegativeEntry { row, col, value });
            }
        }
        let sum: f64 = values.iter().sum();
        let deviation = (sum - 1.0).abs();
        if deviation > ROW_SUM_TOL {
            return Err(Error::RowSumDeviation { row, sum, deviation });
        }
        if deviation == 0.0 {
            entries.extend_from_slice(values);
        } else {
            entries.extend(values.iter().map(|v| v / sum));
        }
    }
    Ok(StochasticMatrix { n, entries })
}

impl StochasticMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        validate_stochastic(rows)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn state_space(&self) -> StateSpace {
        StateSpace(self.n)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `(P f)(i) = Σ_j P_ij f(j)`.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n, "observable length must match state space");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(f).map(|(&p, &v)| v * p).sum())
            .collect()
    }

    /// Row vector times matrix: `π ↦ π P`.
    pub fn push_forward(&self, pi: &[f64]) -> Vec<f64> {
        assert_eq!(pi.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (i, &w) in pi.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += w * p;
            }
        }
        out
    }

    /// Matrix product `self · other`, revalidated.
    pub fn compose(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| self.get(i, k) * other.get(k, j)).sum())
                    .collect()
            })
            .collect();
        validate_stochastic(&rows)
    }

    pub fn max_abs_diff(&self, other: &StochasticMatrix) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The deterministic map this matrix encodes, if it has a single 1 per row.
    pub fn as_deterministic(&self) -> Option<DeterministicMap> {
        let table = (0..self.n)
            .map(|i| {
                let row = self.row(i);
                let j = row.iter().position(|&v| v == 1.0)?;
                row.iter().enumerate().all(|(c, &v)| c == j || v == 0.0).then_some(j)
            })
            .collect::<Option<Vec<_>>>()?;
        Some(DeterministicMap { table })
    }
}

/// Time-indexed stochastic matrices `P(1), P(2), ..`; `P(0)` is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSequence {
    n: usize,
    matrices: Vec<StochasticMatrix>,
}

impl MatrixSequence {
    pub fn new(matrices: Vec<StochasticMatrix>) -> Result<Self> {
        let n = matrices.first().ok_or(Error::EmptyMatrix)?.n();
        if let Some(bad) = matrices.iter().find(|m| m.n() != n) {
            return Err(Error::SizeMismatch { expected: n, got: bad.n() });
        }
        Ok(Self { n, matrices })
    }

    /// `P(t) = p` for `t = 1..=horizon`.
    pub fn homogeneous(p: StochasticMatrix, horizon: usize) -> Self {
        let n = p.n();
        Self { n, matrices: vec![p; horizon.max(1)] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[StochasticMatrix] {
        &self.matrices
    }

    /// True iff every entry equals the first one exactly.
    pub fn is_homogeneous(&self) -> bool {
        self.matrices.windows(2).all(|w| w[0] == w[1])
    }

    /// `P(t)` with `P(0) = 1`.
    pub fn at(&self, t: usize) -> Result<StochasticMatrix> {
        match t {
            0 => Ok(StochasticMatrix::identity(self.n)),
            t if t <= self.matrices.len() => Ok(self.matrices[t - 1].clone()),
            t => Err(Error::HorizonExceeded { requested: t, available: self.matrices.len() }),
        }
    }

    /// `P(1)⋯P(t)`.
    pub fn product(&self, t: usize) -> Result<StochasticMatrix> {
        if t > self.matrices.len() {
            return Err(Error::HorizonExceeded { requested: t, available: self.matrices.len() });
        }
        self.matrices[..t]
            .iter()
            .try_fold(StochasticMatrix::identity(self.n), |acc, p| acc.compose(p))
    }
}

/// `f ↦ P(1)⋯P(t) f`.
pub fn evolve_observable(
    seq: &MatrixSequence,
    f: &[Complex64],
    t: usize,
) -> Result<Vec<Complex64>> {
    if f.len() != seq.n() {
        return Err(Error::SizeMismatch { expected: seq.n(), got: f.len() });
    }
    if t > seq.len() {
        return Err(Error::HorizonExceeded { requested: t, available: seq.len() });
    }
    // innermost factor acts first
    Ok(seq.matrices[..t].iter().rev().fold(f.to_vec(), |acc, p| p.apply(&acc)))
}

/// A map `β: E → E`, stored as its value table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeterministicMap {
    table: Vec<usize>,
}

impl DeterministicMap {
    pub fn new(table: Vec<usize>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if let Some((index, &value)) = table.iter().enumerate().find(|(_, &v)| v >= n) {
            return Err(Error::MapValueOutOfRange { index, value, n });
        }
        Ok(Self { table })
    }

    pub fn identity(n: usize) -> Self {
        Self { table: (0..n).collect() }
    }

    pub fn constant(n: usize, value: usize) -> Self {
        assert!(value < n);
        Self { table: vec![value; n] }
    }

    pub fn n(&self) -> usize {
        self.table.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.table[i]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.table.len()];
        self.table.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    pub fn matrix(&self) -> StochasticMatrix {
        det_matrix(self)
    }
}

/// `D_ij = δ_{β(i), j}`.
pub fn det_matrix(map: &DeterministicMap) -> StochasticMatrix {
    let n = map.n();
    let mut entries = vec![0.0; n * n];
    for (i, &j) in map.table.iter().enumerate() {
        entries[i * n + j] = 1.0;
    }
    StochasticMatrix { n, entries }
}

/// Probability weights on `{0, .., m-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Weights must be nonnegative and sum to one within [`ROW_SUM_TOL`]; the
    /// residual deviation is renormalized away.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if let Some((index, &value)) =
            weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0)
        {
            return Err(Error::InvalidWeight { index, value });
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::WeightSumDeviation { sum });
        }
        let weights = if sum == 1.0 { weights } else { weights.iter().map(|w| w / sum).collect() };
        Ok(Self { weights })
    }

    pub fn point_mass(size: usize, at: usize) -> Self {
        let mut weights = vec![0.0; size];
        weights[at] = 1.0;
        Self { weights }
    }

    pub fn uniform_on(size: usize, support: &[usize]) -> Result<Self> {
        let mut weights = vec![0.0; size];
        for &s in support {
            if s >= size {
                return Err(Error::SizeMismatch { expected: size, got: s + 1 });
            }
            weights[s] += 1.0 / support.len() as f64;
        }
        Self::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices with strictly positive weight, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }

    /// Inverse-CDF draw for `u ∈ [0, 1)`; only support points are ever returned.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}
