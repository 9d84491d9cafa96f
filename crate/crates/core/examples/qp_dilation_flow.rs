// The quantum stochastic flow `j_t` and the automorphism `J` reproduce the
// semigroup `T^t` after tracing out the environment.

use markov_dilation::dilation::{build_dilation, AlphabetMode};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};
use markov_dilation::quantum::{
    automorphism_j, automorphism_j_inverse, build_env_vector, build_unitary, flow, random_matrix, WindowOperator,
    DEFAULT_DENSE_CAP,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p, 1), AlphabetMode::Minimal)?;
    let v = build_unitary(&spec.coupling);
    let upsilon = build_env_vector(spec.q(1)?);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_matrix(2, true, &mut rng);

    for t in 1..=3 {
        let out = flow(&v, &upsilon, &a, t, DEFAULT_DENSE_CAP)?;
        println!("t={t}: j_t(a) is {0}x{0}, |E[j_t(a)] - T^t(a)| = {1:.2e}", out.operator.dim(), out.deviation);
        assert!(out.deviation <= 1e-9);
    }

    let mut j = WindowOperator::system(a.clone(), spec.alphabet.size())?;
    for _ in 0..2 {
        j = automorphism_j(&v, &j, DEFAULT_DENSE_CAP)?;
    }
    let direct = flow(&v, &upsilon, &a, 2, DEFAULT_DENSE_CAP)?.operator;
    println!("J^2(a) on window [{}, {}] matches j_2(a): {:.2e}", j.lo(), j.hi(), j.max_abs_diff(&direct, DEFAULT_DENSE_CAP)?);

    let mut back = j.clone();
    for _ in 0..2 {
        back = automorphism_j_inverse(&v, &back, DEFAULT_DENSE_CAP)?;
    }
    let a_window = WindowOperator::system(a, spec.alphabet.size())?;
    println!("J^-2 J^2 (a) = a: {:.2e}", back.max_abs_diff(&a_window, DEFAULT_DENSE_CAP)?);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
