// Monte Carlo trajectories of a dilated chain against the exact path law.

use markov_dilation::chain::{exact_path_law, path_frequencies, simulate};
use markov_dilation::dilation::{build_dilation, AlphabetMode};
use markov_dilation::model::{MatrixSequence, StochasticMatrix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]])?;
    let (spec, _) = build_dilation(&MatrixSequence::homogeneous(p, 3), AlphabetMode::Minimal)?;

    let records = simulate(&spec, 0, 3, 42, 20_000)?;
    let law = exact_path_law(&spec, 0, 3)?;
    let (rows, flagged) = path_frequencies(&records, &law, 4.0);
    println!("{:<10} {:>8} {:>8} {:>6}", "path", "freq", "exact", "z");
    for r in &rows {
        println!("{:<10} {:>8.4} {:>8.4} {:>6.2}", format!("{:?}", r.path), r.frequency, r.probability, r.z);
    }
    println!("{} of {} paths beyond 4 standard errors", flagged.len(), rows.len());
    assert!(flagged.is_empty());
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
