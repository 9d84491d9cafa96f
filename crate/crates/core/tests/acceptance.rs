//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::random_stochastic;
use markov_dilation::chain::{exact_path_law, path_frequencies, simulate, verify_markov};
use markov_dilation::decompose::{decompose_full, decompose_greedy, recombine};
use markov_dilation::dilation::{
    build_alphabet, build_coupling, build_dilation, enumerate_states, induced_transition, universal_q,
    verify_dynamics, AlphabetMode, DilationSpec, EnvironmentWindow, GlobalState, Symbol,
};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};
use markov_dilation::quantum::{
    build_env_vector, build_unitary, check_cqd1, check_cqd2, conditional_expectation, dagger, davis_apply,
    davis_channel, flow, identity, kron, kraus_channel, max_abs_diff, random_matrix, verify_cms_extension,
    verify_davis_equivalence, ComplexMatrix, DiagonalObservable, EnvState, Polynomial, DEFAULT_DENSE_CAP,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn p73() -> StochasticMatrix {
    StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
}

fn minimal_spec(p: &StochasticMatrix) -> DilationSpec {
    build_dilation(&MatrixSequence::homogeneous(p.clone(), 1), AlphabetMode::Minimal).unwrap().0
}

fn universal_spec(p: &StochasticMatrix) -> DilationSpec {
    build_dilation(&MatrixSequence::homogeneous(p.clone(), 1), AlphabetMode::Universal).unwrap().0
}

fn decomposition_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst, mut within_bound) = (0.0f64, 0);
    for i in 0..1000 {
        let n = 2 + i % 3;
        let p = random_stochastic(n, [0.0, 0.3, 0.6][i % 3], &mut rng);
        let full = decompose_full(&p).unwrap();
        let greedy = decompose_greedy(&p).unwrap();
        worst = worst.max(recombine(&full, n).unwrap().max_abs_diff(&p));
        worst = worst.max(recombine(&greedy, n).unwrap().max_abs_diff(&p));
        if greedy.len() <= n * n - n + 1 {
            within_bound += 1;
        }
    }
    outcome(
        worst <= 1e-10 && within_bound == 1000,
        format!("max recombination error {worst:.1e}, greedy within N²−N+1 terms in {within_bound}/1000"),
    )
}

fn universality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let alphabet = build_alphabet(n, AlphabetMode::Universal, &[]).unwrap();
        let coupling = build_coupling(&alphabet).unwrap();
        for i in 0..100 {
            let p = random_stochastic(n, [0.0, 0.4][i % 2], &mut rng);
            let q = universal_q(&decompose_full(&p).unwrap(), &alphabet).unwrap();
            worst = worst.max(induced_transition(&coupling, &q).unwrap().max_abs_diff(&p));
        }
    }
    outcome(worst <= 1e-10, format!("one coupling per N, 200 matrices, max deviation {worst:.1e}"))
}

fn markov_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut cases, mut failed) = (0.0f64, 0, 0);
    for n in [2, 3] {
        for trial in 0..4 {
            let sparsity = [0.0, 0.5][trial % 2];
            let homogeneous = MatrixSequence::homogeneous(random_stochastic(n, sparsity, &mut rng), 4);
            let inhomogeneous =
                MatrixSequence::new((0..3).map(|_| random_stochastic(n, sparsity, &mut rng)).collect()).unwrap();
            for (seq, horizon) in [(homogeneous, 4), (inhomogeneous, 3)] {
                for mode in [AlphabetMode::Universal, AlphabetMode::Minimal] {
                    let (spec, _) = build_dilation(&seq, mode).unwrap();
                    let report = verify_markov(&spec, &seq, horizon, 1e-10).unwrap();
                    worst = worst.max(report.max_deviation());
                    cases += 1;
                    if !report.passed() {
                        failed += 1;
                    }
                }
            }
        }
    }
    outcome(failed == 0, format!("{cases} dilations, {failed} failing, max conditional deviation {worst:.1e}"))
}

/// Every `(X_0, Y_1..Y_3)`, other coordinates of `[-2, 6]` drawn at random.
fn states_for_closed_formula(n: usize, g: usize, rng: &mut ChaCha8Rng) -> Vec<GlobalState> {
    enumerate_states(n, g, 1, 3)
        .unwrap()
        .into_iter()
        .map(|z| {
            let values = (-2..=6i64)
                .map(|c| z.env.get(c).unwrap_or_else(|| Symbol(rng.random_range(0..g))))
                .collect();
            GlobalState::new(z.system, EnvironmentWindow::new(-2, values).unwrap())
        })
        .collect()
}

fn invertibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p3 = random_stochastic(3, 0.2, &mut rng);
    let specs = [universal_spec(&random_stochastic(2, 0.0, &mut rng)), minimal_spec(&p3)];
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let (n, g) = (spec.n(), spec.alphabet.size());
        // exhaustive windows for the round trip
        let round = verify_dynamics(&spec.coupling, &enumerate_states(n, g, -1, 2).unwrap(), 2, NO_COORDS);
        let states = states_for_closed_formula(n, g, &mut rng);
        let closed = verify_dynamics(&spec.coupling, &states, 3, -3..=3);
        let count = |r: &markov_dilation::report::VerificationReport, name: &str| {
            r.notes.iter().find(|x| x.name == name).map_or(0.0, |x| x.value) as usize
        };
        let expected_closed = states.len() * 3 * 7;
        let ok = round.checks[0].pass
            && closed.checks[0].pass
            && closed.checks[1].pass
            && count(&closed, "env_component_compared") == expected_closed
            && count(&round, "alpha_round_trip_compared") > 0;
        pass &= ok;
        lines.push(format!(
            "N={n} |G|={g}: {} round trips, {} closed-formula cases, mismatches {}+{}",
            count(&round, "alpha_round_trip_compared") + count(&closed, "alpha_round_trip_compared"),
            count(&closed, "env_component_compared"),
            round.checks[0].max_abs_deviation + closed.checks[0].max_abs_deviation,
            closed.checks[1].max_abs_deviation,
        ));
    }
    outcome(pass, lines.join("; "))
}

fn cocycle_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let specs = [
        universal_spec(&random_stochastic(2, 0.0, &mut rng)),
        minimal_spec(&random_stochastic(3, 0.2, &mut rng)),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for spec in &specs {
        let (n, g) = (spec.n(), spec.alphabet.size());
        let states = enumerate_states(n, g, 1, 4).unwrap();
        let r = verify_dynamics(&spec.coupling, &states, 2, NO_COORDS);
        let cocycle = r.checks.iter().find(|c| c.name == "cocycle").unwrap();
        let compared = r.notes.iter().find(|x| x.name == "cocycle_compared").unwrap().value as usize;
        pass &= cocycle.pass && compared == states.len() * 4;
        lines.push(format!("N={n} |G|={g}: {compared} cases, {} mismatches", cocycle.max_abs_deviation));
    }
    outcome(pass, lines.join("; "))
}

fn monte_carlo() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = random_stochastic(2, 0.0, &mut rng);
    let spec = universal_spec(&p);
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let records = simulate(&spec, 0, 3, 2024, 100_000).unwrap();
            records.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect()
        })
        .collect();
    let identical = runs[0] == runs[1];
    let records = simulate(&spec, 0, 3, 2024, 100_000).unwrap();
    let law = exact_path_law(&spec, 0, 3).unwrap();
    let (rows, flagged) = path_frequencies(&records, &law, 4.0);
    let max_z = rows.iter().map(|r| r.z).fold(0.0, f64::max);
    outcome(
        identical && flagged.is_empty() && rows.len() == 8,
        format!("{} paths, max |z| {max_z:.2}, {} beyond 4σ, reruns byte-identical: {identical}", rows.len(), flagged.len()),
    )
}

fn quantum_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut matrices = vec![p73()];
    matrices.extend((0..4).map(|i| random_stochastic(2, [0.0, 0.5][i % 2], &mut rng)));
    let (mut ext, mut unit, mut one_step, mut flow_dev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut pass = true;
    for p in &matrices {
        let spec = minimal_spec(p);
        let g = spec.alphabet.size();
        let v = build_unitary(&spec.coupling);
        let upsilon = build_env_vector(spec.q(1).unwrap());
        let channel = kraus_channel(&v, &upsilon).unwrap();
        let report = verify_cms_extension(&channel, p, 1e-10).unwrap();
        pass &= report.passed();
        ext = ext.max(report.checks[0].max_abs_deviation);
        unit = unit.max(report.checks[1].max_abs_deviation);

        // dense oracle: E_υ[V†(a ⊗ 1)V] from explicit matrix products
        let dense = v.dense();
        for s in 0..100 {
            let a = random_matrix(2, s % 2 == 0, &mut rng);
            let lifted = dagger(&dense).dot(&kron(&a, &identity(g))).dot(&dense);
            let reduced = conditional_expectation(&lifted, 2, EnvState::Vector(upsilon.amplitudes())).unwrap();
            one_step = one_step.max(max_abs_diff(&reduced, &channel.apply(&a).unwrap()));
        }
        for t in 1..=3 {
            for s in 0..4 {
                let a = random_matrix(2, s % 2 == 0, &mut rng);
                flow_dev = flow_dev.max(flow(&v, &upsilon, &a, t, DEFAULT_DENSE_CAP).unwrap().deviation);
            }
        }
    }
    pass &= ext <= 1e-10 && unit <= 1e-10 && one_step <= 1e-10 && flow_dev <= 1e-9;
    outcome(
        pass,
        format!(
            "{} matrices: extension {ext:.1e}, unitality {unit:.1e}, one-step (100 a each) {one_step:.1e}, flow t≤3 {flow_dev:.1e}",
            matrices.len()
        ),
    )
}

fn configurations(g: usize, width: usize) -> Vec<Vec<Symbol>> {
    (0..g.pow(width as u32))
        .map(|mut code| {
            let mut v = vec![Symbol(0); width];
            for s in v.iter_mut().rev() {
                *s = Symbol(code % g);
                code /= g;
            }
            v
        })
        .collect()
}

fn cqd1() -> Outcome {
    let spec = minimal_spec(&p73());
    let g = spec.alphabet.size();
    let v = build_unitary(&spec.coupling);
    let windows: [(i64, usize); 6] = [(-1, 1), (0, 1), (1, 1), (-1, 2), (0, 2), (-1, 3)];
    let (mut cases, mut worst, mut failed) = (0, 0.0f64, 0);
    for (lo, width) in windows {
        for config in configurations(g, width) {
            for i in 0..2 {
                let f = DiagonalObservable::indicator(2, g, lo, i, &config).unwrap();
                for t in 0..=2 {
                    let r = check_cqd1(&spec.coupling, &v, &f, t, 1e-10, DEFAULT_DENSE_CAP).unwrap();
                    cases += 1;
                    worst = worst.max(r.max_deviation());
                    if !r.passed() {
                        failed += 1;
                    }
                }
            }
        }
    }
    outcome(failed == 0, format!("{cases} indicator cases (|G|={g}, width ≤ 3, t ≤ 2), max deviation {worst:.1e}"))
}

fn cqd2() -> Outcome {
    let spec = minimal_spec(&p73());
    let g = spec.alphabet.size();
    let q = spec.q(1).unwrap();
    let upsilon = build_env_vector(q);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut cases, mut worst) = (0, 0.0f64);
    let mut record = |r: (markov_dilation::report::VerificationReport, Complex64, Complex64)| {
        cases += 1;
        worst = worst.max(r.0.max_deviation());
    };
    let one = Complex64::new(1.0, 0.0);
    // every indicator on [-1, 1] alone, for each start state
    for k in 0..2 {
        for i in 0..2 {
            for config in configurations(g, 3) {
                let f = DiagonalObservable::indicator(2, g, -1, i, &config).unwrap();
                record(check_cqd2(q, &upsilon, k, &[f], &Polynomial::variable(1, 0), 1e-10, DEFAULT_DENSE_CAP).unwrap());
            }
        }
        // products of single-site indicators at two coordinates
        let product = Polynomial::new(2, vec![(one, vec![1, 1])]).unwrap();
        for a in 0..g {
            for b in 0..g {
                let f1 = DiagonalObservable::indicator(2, g, -1, k, &[Symbol(a)]).unwrap();
                let f2 = DiagonalObservable::indicator(2, g, 1, k, &[Symbol(b)]).unwrap();
                record(check_cqd2(q, &upsilon, k, &[f1, f2], &product, 1e-10, DEFAULT_DENSE_CAP).unwrap());
            }
        }
    }
    // random polynomials of degree ≤ 3 in three random observables
    for _ in 0..20 {
        let fs: Vec<DiagonalObservable> = [(-1i64, 2usize), (0, 1), (0, 2)]
            .iter()
            .map(|&(lo, w)| {
                DiagonalObservable::from_fn(2, g, lo, w, |_, _| {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
                .unwrap()
            })
            .collect();
        let eta = Polynomial::random(3, 3, &mut rng);
        for k in 0..2 {
            record(check_cqd2(q, &upsilon, k, &fs, &eta, 1e-10, DEFAULT_DENSE_CAP).unwrap());
        }
    }
    outcome(worst <= 1e-10, format!("{cases} cases incl. 20 random η of degree ≤ 3, max deviation {worst:.1e}"))
}

fn davis_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut matrices = vec![p73()];
    matrices.extend((0..9).map(|i| random_stochastic(2, [0.0, 0.5][i % 2], &mut rng)));
    let (mut worst, mut oracle) = (0.0f64, 0.0f64);
    for p in &matrices {
        let spec = universal_spec(p);
        let dec = decompose_full(p).unwrap();
        let channel = kraus_channel(&build_unitary(&spec.coupling), &build_env_vector(spec.q(1).unwrap())).unwrap();
        let r = verify_davis_equivalence(&davis_channel(&dec).unwrap(), &channel, 1e-10).unwrap();
        worst = worst.max(r.max_deviation());
        for a in 0..2 {
            for b in 0..2 {
                let mut unit = ComplexMatrix::zeros((2, 2));
                unit[[a, b]] = Complex64::new(1.0, 0.0);
                oracle = oracle.max(max_abs_diff(&davis_apply(&dec, &unit).unwrap(), &channel.apply(&unit).unwrap()));
            }
        }
    }
    outcome(
        worst <= 1e-10 && oracle <= 1e-10,
        format!("{} matrices, all matrix units: Kraus forms {worst:.1e}, direct formula {oracle:.1e}", matrices.len()),
    )
}

// skip the closed-formula comparison
const NO_COORDS: std::ops::RangeInclusive<i64> = std::ops::RangeInclusive::new(1, 0);

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("decomposition round trip", decomposition_round_trip, Some(Duration::from_secs(10))),
        ("universality", universality, Some(Duration::from_secs(30))),
        ("markov property", markov_property, Some(Duration::from_secs(60))),
        ("invertibility and closed formula", invertibility, None),
        ("cocycle law", cocycle_law, None),
        ("monte carlo", monte_carlo, Some(Duration::from_secs(10))),
        ("quantum extension", quantum_extension, Some(Duration::from_secs(60))),
        ("J^t(m_F) = m_(F∘α^t)", cqd1, None),
        ("expectations as traces", cqd2, None),
        ("davis equivalence", davis_equivalence, None),
    ];
    let mut failures = 0;
    for (index, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run));
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = limit.is_none_or(|l| elapsed < l);
        let timing = match limit {
            Some(l) => format!("{:.2} s (limit {} s)", elapsed.as_secs_f64(), l.as_secs()),
            None => format!("{:.2} s", elapsed.as_secs_f64()),
        };
        let ok = pass && in_time;
        if !ok {
            failures += 1;
        }
        println!("criterion {:>2} {} {name}: {detail}; {timing}", index + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
