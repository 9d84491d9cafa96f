//! The Markov chain carried by a standard dilation: simulation, exact path
//! laws and exact verification of the Markov property.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decompose::ConvexDecomposition;
use crate::dilation::{induced_transition, DilationSpec, Symbol};
use crate::model::{evolve_observable, MatrixSequence};
use crate::report::{MaxTracker, VerificationReport};
use crate::{Error, Result};

/// Default cap on the number of input sequences an exact enumeration may cover.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// One simulated run: `X_0 = start`, `X_t = φ^E(X_{t-1}, Y_t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrajectoryRecord {
    pub start: usize,
    #[serde(serialize_with = "symbols_as_indices")]
    pub inputs: Vec<Symbol>,
    pub states: Vec<usize>,
}

fn symbols_as_indices<S: serde::Serializer>(v: &[Symbol], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|g| g.0))
}

impl TrajectoryRecord {
    pub fn horizon(&self) -> usize {
        self.inputs.len()
    }

    /// `N^g_t = Σ_{s ≤ t} [Y_s = g]`.
    pub fn noise_count(&self, g: Symbol, t: usize) -> usize {
        self.inputs[..t].iter().filter(|&&y| y == g).count()
    }

    /// The state path `(X_1, .., X_T)`.
    pub fn path(&self) -> &[usize] {
        &self.states[1..]
    }
}

/// Uniform stream for trajectory `index`: the `t`-th draw is word `2(t-1)` of
/// ChaCha8 stream `index` under `seed`, independent of how many trajectories
/// run or in what order.
fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn simulate(
    spec: &DilationSpec,
    k: usize,
    horizon: usize,
    seed: u64,
    n_traj: usize,
) -> Result<Vec<TrajectoryRecord>> {
    if k >= spec.n() {
        return Err(Error::SizeMismatch { expected: spec.n(), got: k + 1 });
    }
    let laws = (1..=horizon)
        .map(|t| spec.q(t).map_err(|_| Error::HorizonExceeded { requested: horizon, available: t - 1 }))
        .collect::<Result<Vec<_>>>()?;
    let coupling = &spec.coupling;
    Ok((0..n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(seed, index);
            let mut states = Vec::with_capacity(horizon + 1);
            let mut inputs = Vec::with_capacity(horizon);
            let mut x = k;
            states.push(x);
            for q in &laws {
                let g = Symbol(q.sample_with(rng.random::<f64>()));
                x = coupling.system_part(x, g);
                inputs.push(g);
                states.push(x);
            }
            TrajectoryRecord { start: k, inputs, states }
        })
        .collect())
}

/// Exact law of `(X_1, .., X_T)` under `ℙ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLaw {
    pub start: usize,
    pub horizon: usize,
    pub probs: BTreeMap<Vec<usize>, f64>,
}

impl PathLaw {
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Law of `X_t`.
    pub fn marginal(&self, t: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if t == 0 {
            out[self.start] = 1.0;
            return out;
        }
        for (path, p) in &self.probs {
            out[path[t - 1]] += p;
        }
        out
    }

    /// `ℙ_k(X_1..X_m = prefix)` for every prefix of length `m`.
    pub fn prefix_law(&self, m: usize) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for (path, p) in &self.probs {
            *out.entry(path[..m].to_vec()).or_insert(0.0) += p;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &PathLaw) -> f64 {
        let keys: std::collections::BTreeSet<&Vec<usize>> =
            self.probs.keys().chain(other.probs.keys()).collect();
        keys.into_iter()
            .map(|k| (self.probs.get(k).unwrap_or(&0.0) - other.probs.get(k).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max)
    }
}

fn enumeration_size(supports: impl Iterator<Item = usize>, cap: u128) -> Result<()> {
    let mut size: u128 = 1;
    for s in supports {
        size = size.saturating_mul(s as u128);
    }
    if size > cap {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    Ok(())
}

/// Exact path law from `δ_k ⊗ (⊗_t q(t))`, enumerating inputs over the
/// supports of the `q(t)`.
pub fn exact_path_law(spec: &DilationSpec, k: usize, horizon: usize) -> Result<PathLaw> {
    exact_path_law_capped(spec, k, horizon, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_path_law_capped(spec: &DilationSpec, k: usize, horizon: usize, cap: u128) -> Result<PathLaw> {
    if k >= spec.n() {
        return Err(Error::SizeMismatch { expected: spec.n(), got: k + 1 });
    }
    let laws = (1..=horizon).map(|t| spec.q(t)).collect::<Result<Vec<_>>>()?;
    let supports: Vec<Vec<usize>> = laws.iter().map(|q| q.support()).collect();
    enumeration_size(supports.iter().map(Vec::len), cap)?;

    // paths sharing a prefix are merged, so the work is bounded by |E|^t per step
    let mut current: BTreeMap<Vec<usize>, f64> = BTreeMap::from([(Vec::new(), 1.0)]);
    for (q, support) in laws.iter().zip(&supports) {
        let mut next = BTreeMap::new();
        for (path, p) in &current {
            let x = path.last().copied().unwrap_or(k);
            for &g in support {
                let mut extended = path.clone();
                extended.push(spec.coupling.system_part(x, Symbol(g)));
                *next.entry(extended).or_insert(0.0) += p * q.weight(g);
            }
        }
        current = next;
    }
    Ok(PathLaw { start: k, horizon, probs: current })
}

/// Path law of the automaton `X_t = β_{ℓ_t}(X_{t-1})` with `ℓ_t ~ p(t)`,
/// enumerating every label sequence explicitly. `decs[t-1]` is `p(t)`; the
/// last one is reused past the end.
pub fn automaton_path_law(decs: &[ConvexDecomposition], k: usize, horizon: usize) -> Result<PathLaw> {
    let first = decs.first().ok_or(Error::MissingDecomposition)?;
    if k >= first.n() {
        return Err(Error::SizeMismatch { expected: first.n(), got: k + 1 });
    }
    let per_step: Vec<&ConvexDecomposition> =
        (0..horizon).map(|t| &decs[t.min(decs.len() - 1)]).collect();
    enumeration_size(per_step.iter().map(|d| d.len()), DEFAULT_ENUMERATION_CAP)?;
    let mut probs = BTreeMap::new();
    let mut choice = vec![0usize; horizon];
    loop {
        let mut x = k;
        let mut p = 1.0;
        let mut path = Vec::with_capacity(horizon);
        for (t, &c) in choice.iter().enumerate() {
            let term = &per_step[t].terms()[c];
            p *= term.weight;
            x = term.map.apply(x);
            path.push(x);
        }
        if p > 0.0 {
            *probs.entry(path).or_insert(0.0) += p;
        }
        // odometer over label choices
        let mut t = horizon;
        loop {
            if t == 0 {
                return Ok(PathLaw { start: k, horizon, probs });
            }
            t -= 1;
            choice[t] += 1;
            if choice[t] < per_step[t].len() {
                break;
            }
            choice[t] = 0;
        }
    }
}

/// Exact check that the dilated process is Markov with transitions `target`.
///
/// For every start `k`, every `t < T` and every positive-probability prefix
/// `(X_0, .., X_t)`, the exact conditional `ℙ_k(X_{t+1} = j | prefix)` is
/// compared with `P(t+1)_{X_t j}`. The induced one-step matrices are compared
/// with `P(t)` as well.
pub fn verify_markov(
    spec: &DilationSpec,
    target: &MatrixSequence,
    horizon: usize,
    tol: f64,
) -> Result<VerificationReport> {
    if target.n() != spec.n() {
        return Err(Error::SizeMismatch { expected: spec.n(), got: target.n() });
    }
    let n = spec.n();
    let mut report = VerificationReport::new();
    for t in 1..=horizon {
        let induced = induced_transition(&spec.coupling, spec.q(t)?)?;
        let wanted = target.at(t)?;
        report.check("induced_transition", Some(t), tol, induced.max_abs_diff(&wanted), Some(format!("t={t}")));
    }
    let laws = (0..n).map(|k| exact_path_law(spec, k, horizon)).collect::<Result<Vec<_>>>()?;
    for t in 0..horizon {
        let wanted = target.at(t + 1)?;
        let mut worst = MaxTracker::default();
        for law in &laws {
            let prefixes = law.prefix_law(t);
            let extended = law.prefix_law(t + 1);
            for (prefix, &mass) in &prefixes {
                if mass <= 0.0 {
                    continue;
                }
                let last = prefix.last().copied().unwrap_or(law.start);
                let mut key = prefix.clone();
                key.push(0);
                for j in 0..n {
                    *key.last_mut().unwrap() = j;
                    let joint = extended.get(&key).copied().unwrap_or(0.0);
                    let dev = (joint / mass - wanted.get(last, j)).abs();
                    worst.observe(dev, || {
                        let mut full = vec![law.start];
                        full.extend(prefix);
                        format!("t={t}, prefix={full:?}, j={j}")
                    });
                }
            }
        }
        report.check("markov_conditional", Some(t + 1), tol, worst.value, worst.location);
    }
    Ok(report)
}

/// `((P(1)⋯P(t) f)(k), E_k[f(X_t)], |difference|)`.
pub fn marginal_consistency(
    spec: &DilationSpec,
    target: &MatrixSequence,
    f: &[Complex64],
    t: usize,
    k: usize,
) -> Result<(Complex64, Complex64, f64)> {
    let lhs = evolve_observable(target, f, t)?[k];
    let law = exact_path_law(spec, k, t)?;
    let rhs: Complex64 = if t == 0 {
        f[k]
    } else {
        law.probs.iter().map(|(path, &p)| f[path[t - 1]] * p).sum()
    };
    Ok((lhs, rhs, (lhs - rhs).norm()))
}

/// Largest `|f(X_t) − Σ_g f(φ^E(X_{t-1}, g)) [Y_t = g]|` along a trajectory.
pub fn stochastic_equation_residual(spec: &DilationSpec, record: &TrajectoryRecord, f: &[Complex64]) -> f64 {
    let c = &spec.coupling;
    (1..=record.horizon())
        .map(|t| {
            let prev = record.states[t - 1];
            let rhs: Complex64 = spec
                .alphabet
                .symbols()
                .map(|g| {
                    let indicator = if record.inputs[t - 1] == g { 1.0 } else { 0.0 };
                    f[c.system_part(prev, g)] * indicator
                })
                .sum();
            (f[record.states[t]] - rhs).norm()
        })
        .fold(0.0, f64::max)
}

/// Empirical frequency of one path against its exact probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFrequency {
    pub path: Vec<usize>,
    pub count: usize,
    pub frequency: f64,
    pub probability: f64,
    pub standard_error: f64,
    /// `|frequency − probability| / standard_error`.
    pub z: f64,
}

/// Compares empirical path frequencies with `law`; paths with `z > sigmas` are
/// flagged. Paths of probability zero must never occur (their `z` is infinite).
pub fn path_frequencies(records: &[TrajectoryRecord], law: &PathLaw, sigmas: f64) -> (Vec<PathFrequency>, Vec<PathFrequency>) {
    let total = records.len() as f64;
    let mut counts: BTreeMap<&[usize], usize> = BTreeMap::new();
    for r in records {
        *counts.entry(r.path()).or_insert(0) += 1;
    }
    let mut rows: Vec<PathFrequency> = law
        .probs
        .iter()
        .map(|(path, &p)| {
            let count = counts.get(path.as_slice()).copied().unwrap_or(0);
            let frequency = count as f64 / total;
            let standard_error = (p * (1.0 - p) / total).sqrt();
            let z = if standard_error > 0.0 {
                (frequency - p).abs() / standard_error
            } else if frequency == p {
                0.0
            } else {
                f64::INFINITY
            };
            PathFrequency { path: path.clone(), count, frequency, probability: p, standard_error, z }
        })
        .collect();
    for (path, &count) in &counts {
        if !law.probs.contains_key(*path) {
            rows.push(PathFrequency {
                path: path.to_vec(),
                count,
                frequency: count as f64 / total,
                probability: 0.0,
                standard_error: 0.0,
                z: f64::INFINITY,
            });
        }
    }
    let flagged = rows.iter().filter(|r| r.z > sigmas).cloned().collect();
    (rows, flagged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{decompose_greedy, MapLabel};
    use crate::dilation::{build_alphabet, build_coupling, build_dilation, AlphabetMode};
    use crate::model::{DeterministicMap, Distribution, StochasticMatrix};

    fn p73() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn point_mass_spec() -> DilationSpec {
        let a = build_alphabet(2, AlphabetMode::Universal, &[]).unwrap();
        let c = build_coupling(&a).unwrap();
        let id = a.symbol(0, MapLabel(1)).unwrap();
        DilationSpec::new(a.clone(), c, vec![Distribution::point_mass(a.size(), id.0)], true).unwrap()
    }

    #[test]
    fn point_mass_inputs_are_deterministic() {
        let spec = point_mass_spec();
        let runs = simulate(&spec, 1, 5, 7, 3).unwrap();
        for r in runs {
            assert_eq!(r.states, vec![1; 6]);
        }
    }

    #[test]
    fn simulation_is_reproducible() {
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Universal).unwrap();
        let a = simulate(&spec, 0, 4, 42, 200).unwrap();
        let b = simulate(&spec, 0, 4, 42, 200).unwrap();
        assert_eq!(a, b);
        // streams do not depend on the batch size
        let c = simulate(&spec, 0, 4, 42, 50).unwrap();
        assert_eq!(&a[..50], &c[..]);
        let d = simulate(&spec, 0, 4, 43, 200).unwrap();
        assert_ne!(a, d);
    }

    #[test]
    fn one_step_frequency() {
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Universal).unwrap();
        let runs = simulate(&spec, 0, 1, 2024, 100_000).unwrap();
        let freq = runs.iter().filter(|r| r.states[1] == 0).count() as f64 / 1e5;
        assert!((freq - 0.7).abs() <= 4.0 * (0.7f64 * 0.3 / 1e5).sqrt());
    }

    #[test]
    fn horizon_exceeded_for_finite_specs() {
        let seq = MatrixSequence::new(vec![p73(), StochasticMatrix::identity(2)]).unwrap();
        let (spec, _) = build_dilation(&seq, AlphabetMode::Minimal).unwrap();
        assert!(matches!(simulate(&spec, 0, 3, 1, 1), Err(Error::HorizonExceeded { .. })));
    }

    #[test]
    fn path_law_examples() {
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Universal).unwrap();
        let law = exact_path_law(&spec, 0, 2).unwrap();
        assert!((law.probs[&vec![1, 0]] - 0.12).abs() < 1e-12);
        assert!((law.total() - 1.0).abs() < 1e-12);
        let one = exact_path_law(&spec, 1, 1).unwrap();
        assert!((one.marginal(1, 2)[0] - 0.4).abs() < 1e-12);
        assert!((one.marginal(1, 2)[1] - 0.6).abs() < 1e-12);

        let swap = DeterministicMap::new(vec![1, 0]).unwrap().matrix();
        let seq = MatrixSequence::new(vec![StochasticMatrix::identity(2), swap]).unwrap();
        let (spec, _) = build_dilation(&seq, AlphabetMode::Universal).unwrap();
        let law = exact_path_law(&spec, 0, 2).unwrap();
        assert_eq!(law.probs.get(&vec![0, 1]), Some(&1.0));
    }

    #[test]
    fn enumeration_cap() {
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Universal).unwrap();
        assert!(matches!(exact_path_law_capped(&spec, 0, 5, 100), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn markov_verification_passes_and_fails() {
        let target = MatrixSequence::homogeneous(p73(), 3);
        let (spec, _) = build_dilation(&target, AlphabetMode::Universal).unwrap();
        let report = verify_markov(&spec, &target, 3, 1e-10).unwrap();
        assert!(report.passed(), "{report:?}");

        let id_target = MatrixSequence::homogeneous(StochasticMatrix::identity(2), 2);
        assert!(verify_markov(&point_mass_spec(), &id_target, 2, 1e-10).unwrap().passed());

        let report = verify_markov(&point_mass_spec(), &target, 2, 1e-10).unwrap();
        assert!(!report.passed());
        let failure = report.failures().find(|f| f.name == "markov_conditional").unwrap();
        assert!(failure.location.as_ref().unwrap().contains("prefix"));
    }

    #[test]
    fn marginal_consistency_examples() {
        let target = MatrixSequence::homogeneous(p73(), 3);
        let (spec, _) = build_dilation(&target, AlphabetMode::Universal).unwrap();
        let (l, r, d) = marginal_consistency(&spec, &target, &[c(1.0), c(1.0)], 3, 1).unwrap();
        assert!((l - c(1.0)).norm() < 1e-12 && (r - c(1.0)).norm() < 1e-12 && d < 1e-12);
        let (l, r, _) = marginal_consistency(&spec, &target, &[c(1.0), c(0.0)], 1, 0).unwrap();
        assert!((l - c(0.7)).norm() < 1e-15 && (r - c(0.7)).norm() < 1e-15);
        let f = [Complex64::new(0.3, -1.0), c(2.5)];
        for k in 0..2 {
            let (_, _, d) = marginal_consistency(&spec, &target, &f, 3, k).unwrap();
            assert!(d < 1e-10);
        }
    }

    #[test]
    fn automaton_matches_dilation_chain() {
        let p = p73();
        let dec = decompose_greedy(&p).unwrap();
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p, 1), AlphabetMode::Minimal).unwrap();
        for k in 0..2 {
            let a = automaton_path_law(std::slice::from_ref(&dec), k, 3).unwrap();
            let b = exact_path_law(&spec, k, 3).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-15);
        }
    }

    #[test]
    fn stochastic_equation_holds_pathwise() {
        let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Universal).unwrap();
        let f = [Complex64::new(1.0, 2.0), c(-3.0)];
        for r in simulate(&spec, 0, 5, 9, 100).unwrap() {
            assert_eq!(stochastic_equation_residual(&spec, &r, &f), 0.0);
            let total: usize = spec.alphabet.symbols().map(|g| r.noise_count(g, 5)).sum();
            assert_eq!(total, 5);
        }
    }
}
