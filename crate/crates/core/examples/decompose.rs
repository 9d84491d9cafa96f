// Greedy and full convex decompositions of a 2×2 stochastic matrix.

use markov_dilation::decompose::{decompose_full, decompose_greedy, recombine};
use markov_dilation::model::StochasticMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;

    let greedy = decompose_greedy(&p)?;
    println!("greedy decomposition ({} terms):", greedy.len());
    for term in greedy.terms() {
        println!("  {:.3} x beta = {:?}", term.weight, term.map.table());
    }

    let full = decompose_full(&p)?;
    println!("full decomposition (label: weight):");
    for term in full.terms() {
        println!("  {:>2}: {:.3}", term.label().0, term.weight);
    }

    for dec in [&greedy, &full] {
        let back = recombine(dec, p.n())?;
        let err = back.max_abs_diff(&p);
        println!("recombination error: {err:.2e}");
        assert!(err <= 1e-12);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
