// A time-dependent sequence `P(1), P(2), P(3)` driven by one coupling with
// changing input laws, checked for the Markov property by exact enumeration.

use markov_dilation::chain::verify_markov;
use markov_dilation::dilation::{build_dilation, AlphabetMode};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = MatrixSequence::new(vec![
        StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?,
        StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])?,
        StochasticMatrix::from_rows(&[vec![0.5, 0.5], vec![0.9, 0.1]])?,
    ])?;
    for mode in [AlphabetMode::Universal, AlphabetMode::Minimal] {
        let (spec, _) = build_dilation(&seq, mode)?;
        let report = verify_markov(&spec, &seq, 3, 1e-10)?;
        println!("{mode:?}: |G| = {}", spec.alphabet.size());
        for c in &report.checks {
            println!("  {:<20} t={} max deviation {:.2e}", c.name, c.t.unwrap_or(0), c.max_abs_deviation);
        }
        assert!(report.passed());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
