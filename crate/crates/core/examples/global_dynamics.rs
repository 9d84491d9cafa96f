// The invertible global map `α = θ∘φ₁` on finite windows of `E × G^ℤ`.

use markov_dilation::dilation::{build_dilation, AlphabetMode};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p, 1), AlphabetMode::Universal)?;
    let c = &spec.coupling;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = spec.sample_state(0, -3, 3, &mut rng)?;
    println!("z       : X = {}, Y[-3..=3] = {:?}", z.system, symbols(z.env.values()));

    let z3 = c.alpha_apply(&z, 3)?;
    println!("alpha^3 : X = {}, Y[{}..={}] = {:?}", z3.system, z3.env.lo(), z3.env.hi(), symbols(z3.env.values()));
    let back = c.alpha_apply(&z3, -3)?;
    assert_eq!(back, z);
    println!("alpha^-3 restores z");

    for n in -2..=1 {
        let closed = c.env_component(&z, n, 2)?;
        let direct = c.alpha_apply(&z, 2)?.env.get(n).expect("in window");
        assert_eq!(closed, direct);
        println!("Y_{n} after 2 steps = {} (closed formula agrees)", closed.0);
    }

    let lhs = c.cocycle_apply(&z, 3)?;
    let rhs = c.cocycle_apply(&c.cocycle_apply(&z, 1)?.shifted(1), 2)?.shifted(-1);
    assert_eq!(lhs, rhs);
    println!("cocycle law phi_3 = theta^-1 phi_2 theta phi_1 holds");
    Ok(())
}

fn symbols(v: &[markov_dilation::dilation::Symbol]) -> Vec<usize> {
    v.iter().map(|g| g.0).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
