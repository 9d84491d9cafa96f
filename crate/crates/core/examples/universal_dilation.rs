// One coupling on `E × G` reproduces every stochastic matrix on `E`: only
// the environment law changes.

use markov_dilation::decompose::decompose_full;
use markov_dilation::dilation::{build_alphabet, build_coupling, induced_transition, universal_q, AlphabetMode};
use markov_dilation::model::StochasticMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_stochastic(n: usize, rng: &mut impl Rng) -> Result<StochasticMatrix, markov_dilation::Error> {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 3;
    let alphabet = build_alphabet(n, AlphabetMode::Universal, &[])?;
    let coupling = build_coupling(&alphabet)?;
    println!("N = {n}: |G| = {}, |E x G| = {}", alphabet.size(), coupling.point_count());

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let p = random_stochastic(n, &mut rng)?;
        let q = universal_q(&decompose_full(&p)?, &alphabet)?;
        let induced = induced_transition(&coupling, &q)?;
        worst = worst.max(induced.max_abs_diff(&p));
    }
    println!("10 random matrices reproduced, max deviation {worst:.2e}");
    assert!(worst <= 1e-10);
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
