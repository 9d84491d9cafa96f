//! Convex decompositions `P = Σ_ℓ p_ℓ D_ℓ` of stochastic matrices into
//! deterministic matrices.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{det_matrix, validate_stochastic, DeterministicMap, StochasticMatrix};
use crate::{Error, Result};

/// Default cap on `N^N` for the full decomposition.
pub const DEFAULT_LABEL_CAP: u128 = 1_000_000;
/// Greedy stops once every residual entry is at most this.
pub const GREEDY_RESIDUAL_TOL: f64 = 1e-12;
/// Tolerance on the total weight of a decomposition.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Index of a deterministic map in the lexicographic enumeration of `E^E`.
///
/// The base-`N` digits of the label, most significant first, are
/// `β(0), .., β(N-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MapLabel(pub u64);

/// `N^N`, or `None` on overflow.
pub fn label_count(n: usize) -> Option<u64> {
    (n as u64).checked_pow(u32::try_from(n).ok()?)
}

pub fn map_from_label(label: MapLabel, n: usize) -> Result<DeterministicMap> {
    match label_count(n) {
        Some(count) if label.0 < count => {}
        _ => return Err(Error::LabelOutOfRange { label: label.0, n }),
    }
    let mut table = vec![0; n];
    let mut rest = label.0;
    for slot in table.iter_mut().rev() {
        *slot = (rest % n as u64) as usize;
        rest /= n as u64;
    }
    DeterministicMap::new(table)
}

pub fn label_of_map(map: &DeterministicMap) -> Result<MapLabel> {
    let n = map.n() as u64;
    if label_count(map.n()).is_none() {
        return Err(Error::LabelSpaceTooLarge { size: u128::MAX, cap: u64::MAX as u128 });
    }
    Ok(MapLabel(map.table().iter().fold(0u64, |acc, &b| acc * n + b as u64)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecompositionMode {
    /// All `N^N` deterministic matrices, zero weights kept.
    Full,
    /// Positive-weight terms only.
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub weight: f64,
    #[serde(rename = "beta")]
    pub map: DeterministicMap,
}

impl Term {
    pub fn label(&self) -> MapLabel {
        label_of_map(&self.map).expect("decomposition maps have representable labels")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDecomposition {
    mode: DecompositionMode,
    terms: Vec<Term>,
}

impl ConvexDecomposition {
    pub fn new(mode: DecompositionMode, terms: Vec<Term>) -> Result<Self> {
        let n = terms
            .first()
            .ok_or_else(|| Error::InvalidDecomposition("no terms".into()))?
            .map
            .n();
        if label_count(n).is_none() {
            return Err(Error::LabelSpaceTooLarge { size: u128::MAX, cap: u64::MAX as u128 });
        }
        let mut seen = BTreeSet::new();
        for (index, term) in terms.iter().enumerate() {
            if term.map.n() != n {
                return Err(Error::SizeMismatch { expected: n, got: term.map.n() });
            }
            if !term.weight.is_finite() || term.weight < 0.0 {
                return Err(Error::InvalidWeight { index, value: term.weight });
            }
            if mode == DecompositionMode::Sparse && term.weight == 0.0 {
                return Err(Error::InvalidDecomposition(format!("term {index} has zero weight")));
            }
            if !seen.insert(term.map.table()) {
                return Err(Error::InvalidDecomposition(format!("term {index} repeats a map")));
            }
        }
        let sum: f64 = terms.iter().map(|t| t.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::WeightSumDeviation { sum });
        }
        Ok(Self { mode, terms })
    }

    pub fn mode(&self) -> DecompositionMode {
        self.mode
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn n(&self) -> usize {
        self.terms[0].map.n()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<MapLabel> {
        self.terms.iter().map(Term::label).collect()
    }

    /// Weight attached to `label`, zero if absent.
    pub fn weight_of(&self, label: MapLabel) -> f64 {
        self.terms.iter().find(|t| t.label() == label).map_or(0.0, |t| t.weight)
    }
}

/// Every deterministic matrix weighted by `p_ℓ = Π_i P_{i, β_ℓ(i)}`.
pub fn decompose_full(p: &StochasticMatrix) -> Result<ConvexDecomposition> {
    decompose_full_capped(p, DEFAULT_LABEL_CAP)
}

pub fn decompose_full_capped(p: &StochasticMatrix, cap: u128) -> Result<ConvexDecomposition> {
    let n = p.n();
    let count = label_count(n)
        .map(u128::from)
        .filter(|&c| c <= cap)
        .ok_or(Error::LabelSpaceTooLarge {
            size: (n as u128).checked_pow(n as u32).unwrap_or(u128::MAX),
            cap,
        })?;
    let terms = (0..count as u64)
        .map(|l| {
            let map = map_from_label(MapLabel(l), n)?;
            let weight = (0..n).map(|i| p.get(i, map.apply(i))).product();
            Ok(Term { weight, map })
        })
        .collect::<Result<Vec<_>>>()?;
    ConvexDecomposition::new(DecompositionMode::Full, terms)
}

/// Greedy residual subtraction.
///
/// Each round picks, per row, the column holding the largest residual (ties go
/// to the smallest column), takes the smallest of those picks as the weight and
/// subtracts that multiple of the corresponding deterministic matrix. The
/// picked minimum becomes exactly zero, so at most `N² − N + 1` rounds occur.
pub fn decompose_greedy(p: &StochasticMatrix) -> Result<ConvexDecomposition> {
    let n = p.n();
    let mut residual: Vec<Vec<f64>> = p.rows();
    let max_rounds = n * n - n + 1;
    let mut terms = Vec::new();
    loop {
        let max_residual = residual.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
        if max_residual <= GREEDY_RESIDUAL_TOL {
            break;
        }
        if terms.len() >= max_rounds {
            return Err(Error::NonConvergence(format!(
                "{} rounds left residual {max_residual:e}",
                terms.len()
            )));
        }
        let columns: Vec<usize> = residual
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                    .0
            })
            .collect();
        let weight = columns
            .iter()
            .enumerate()
            .map(|(i, &j)| residual[i][j])
            .fold(f64::INFINITY, f64::min);
        if weight <= 0.0 {
            return Err(Error::NonConvergence(format!(
                "a row is exhausted while residual {max_residual:e} remains"
            )));
        }
        let before = count_positive(&residual);
        for (i, &j) in columns.iter().enumerate() {
            residual[i][j] -= weight;
            assert!(residual[i][j] >= 0.0, "greedy step produced a negative residual");
        }
        assert!(count_positive(&residual) < before, "greedy step zeroed nothing");
        terms.push(Term { weight, map: DeterministicMap::new(columns)? });
    }
    ConvexDecomposition::new(DecompositionMode::Sparse, terms)
}

fn count_positive(m: &[Vec<f64>]) -> usize {
    m.iter().flatten().filter(|&&v| v > 0.0).count()
}

/// `Σ_ℓ p_ℓ D_ℓ`.
pub fn recombine(dec: &ConvexDecomposition, n: usize) -> Result<StochasticMatrix> {
    if dec.n() != n {
        return Err(Error::SizeMismatch { expected: n, got: dec.n() });
    }
    let mut rows = vec![vec![0.0; n]; n];
    for term in dec.terms() {
        let d = det_matrix(&term.map);
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v += term.weight * d.get(i, j);
            }
        }
    }
    validate_stochastic(&rows)
}
