// Multiplication operators intertwine the classical and quantum dynamics:
// `J^t(m_F) = m_{F∘α^t}`, and expectations under `δ_k ⊗ q^{⊗ℤ}` are traces
// against `|k⟩⟨k| ⊗ |υ^{⊗ℤ}⟩⟨υ^{⊗ℤ}|`.

use markov_dilation::dilation::{build_dilation, AlphabetMode, Symbol};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};
use markov_dilation::quantum::{
    build_env_vector, build_unitary, check_cqd1, check_cqd2, DiagonalObservable, Polynomial, DEFAULT_DENSE_CAP,
};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p, 1), AlphabetMode::Minimal)?;
    let g = spec.alphabet.size();
    let v = build_unitary(&spec.coupling);
    let q = spec.q(1)?;
    let upsilon = build_env_vector(q);

    let f = DiagonalObservable::indicator(2, g, 0, 1, &[Symbol(2)])?;
    for t in 0..=2 {
        let r = check_cqd1(&spec.coupling, &v, &f, t, 1e-10, DEFAULT_DENSE_CAP)?;
        println!("J^{t}(m_F) vs m_(F o alpha^{t}): {:.2e}", r.max_deviation());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fs = [
        DiagonalObservable::from_fn(2, g, -1, 2, |i, y| Complex64::new((i + y[0].0) as f64, -(y[1].0 as f64)))?,
        DiagonalObservable::indicator(2, g, 0, 0, &[Symbol(1)])?,
    ];
    for _ in 0..3 {
        let eta = Polynomial::random(2, 3, &mut rng);
        let (r, classical, quantum) = check_cqd2(q, &upsilon, 0, &fs, &eta, 1e-10, DEFAULT_DENSE_CAP)?;
        println!("E_0[eta(F)] = {classical:.6}, trace = {quantum:.6}, pass = {}", r.passed());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
