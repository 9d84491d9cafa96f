// The Kraus channel of a dilation extends `P` to all of `B(H)`.

use markov_dilation::dilation::{build_dilation, AlphabetMode};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};
use markov_dilation::quantum::{
    build_env_vector, build_unitary, davis_channel, kraus_channel, permutation_automorphism, verify_cms_extension,
    verify_davis_equivalence,
};
use num_complex::Complex64;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let (spec, decs) = build_dilation(&MatrixSequence::homogeneous(p.clone(), 1), AlphabetMode::Universal)?;
    let v = build_unitary(&spec.coupling);
    let upsilon = build_env_vector(spec.q(1)?);
    let channel = kraus_channel(&v, &upsilon)?;
    println!("V is a {0}x{0} permutation; {1} Kraus operators", v.dim(), channel.kraus_ops().len());

    let mut report = verify_cms_extension(&channel, &p, 1e-10)?;
    report.extend(verify_davis_equivalence(&davis_channel(&decs[0])?, &channel, 1e-10)?);
    for c in &report.checks {
        println!("{:<20} {:.2e}", c.name, c.max_abs_deviation);
    }
    assert!(report.passed());

    let swap = StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])?;
    let phases = [Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)];
    let (u, r) = permutation_automorphism(&swap, &phases, 1e-10)?;
    println!("swap with phases (i, -1), extension holds: {}", r.passed());
    for row in u.rows() {
        let cells: Vec<String> = row.iter().map(|z| format!("{z:>6}")).collect();
        println!("  [{}]", cells.join(", "));
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
