#![allow(dead_code)]

use markov_dilation::model::StochasticMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Rows drawn uniformly then normalized; each entry is zeroed with
/// probability `sparsity` (never a whole row).
pub fn random_stochastic(n: usize, sparsity: f64, rng: &mut impl Rng) -> StochasticMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let keep = rng.random_range(0..n);
            let raw: Vec<f64> = (0..n)
                .map(|j| if j != keep && rng.random::<f64>() < sparsity { 0.0 } else { rng.random::<f64>() + 1e-3 })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows).expect("normalized rows")
}

/// Proptest strategy for `n × n` stochastic matrices with some zero entries.
pub fn stochastic(n: usize) -> impl Strategy<Value = StochasticMatrix> {
    proptest::collection::vec(proptest::collection::vec((0.0f64..1.0, any::<bool>()), n), n).prop_map(move |raw| {
        let rows: Vec<Vec<f64>> = raw
            .into_iter()
            .map(|row| {
                let mut r: Vec<f64> = row.iter().map(|&(x, zero)| if zero { 0.0 } else { x + 1e-3 }).collect();
                if r.iter().all(|&x| x == 0.0) {
                    r[0] = 1.0;
                }
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        StochasticMatrix::from_rows(&rows).expect("normalized rows")
    })
}

/// `n` in `lo..=hi` paired with a matrix of that size.
pub fn sized_stochastic(lo: usize, hi: usize) -> impl Strategy<Value = StochasticMatrix> {
    (lo..=hi).prop_flat_map(stochastic)
}
