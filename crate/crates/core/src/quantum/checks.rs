//! Classical–quantum agreement for multiplication operators.

use num_complex::Complex64;
use rand::Rng;

use super::{automorphism_j, DiagonalObservable, EnvVector, UnitaryV};
use crate::dilation::{Coupling, Symbol};
use crate::model::Distribution;
use crate::report::{MaxTracker, VerificationReport};
use crate::{Error, Result};

/// `η(x₁,…,x_n) = Σ c · x₁^{e₁} ⋯ x_n^{e_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n_vars: usize,
    terms: Vec<(Complex64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(n_vars: usize, terms: Vec<(Complex64, Vec<u32>)>) -> Result<Self> {
        if let Some((_, e)) = terms.iter().find(|(_, e)| e.len() != n_vars) {
            return Err(Error::DimMismatch(format!("monomial with {} exponents, expected {n_vars}", e.len())));
        }
        Ok(Self { n_vars, terms })
    }

    pub fn constant(n_vars: usize, c: Complex64) -> Self {
        Self { n_vars, terms: vec![(c, vec![0; n_vars])] }
    }

    /// The `i`-th coordinate function.
    pub fn variable(n_vars: usize, i: usize) -> Self {
        let mut e = vec![0; n_vars];
        e[i] = 1;
        Self { n_vars, terms: vec![(Complex64::new(1.0, 0.0), e)] }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> &[(Complex64, Vec<u32>)] {
        &self.terms
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.n_vars);
        self.terms
            .iter()
            .map(|(c, e)| e.iter().zip(x).fold(*c, |acc, (&k, &xi)| acc * xi.powu(k)))
            .sum()
    }

    /// One to four monomials of total degree at most `max_degree`, with
    /// coefficients uniform in the unit square.
    pub fn random<R: Rng>(n_vars: usize, max_degree: u32, rng: &mut R) -> Self {
        let count = rng.random_range(1..=4);
        let terms = (0..count)
            .map(|_| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let mut e = vec![0; n_vars];
                if n_vars > 0 {
                    for _ in 0..rng.random_range(0..=max_degree) {
                        e[rng.random_range(0..n_vars)] += 1;
                    }
                }
                (c, e)
            })
            .collect();
        Self { n_vars, terms }
    }
}

/// `J^t(m_F) = m_{F∘α^t}` over the full diagonal and off-diagonal of the
/// common window.
pub fn check_cqd1(
    coupling: &Coupling,
    v: &UnitaryV,
    f: &DiagonalObservable,
    t: usize,
    tol: f64,
    cap: u128,
) -> Result<VerificationReport> {
    let mut quantum = f.to_operator();
    for _ in 0..t {
        quantum = automorphism_j(v, &quantum, cap)?;
    }
    let classical = f.compose_alpha(coupling, t, cap)?.to_operator();
    let (q, c) = quantum.align(&classical, cap)?;
    let mut max = MaxTracker::default();
    for ((r, col), &val) in q.matrix().indexed_iter() {
        max.observe((val - c.matrix()[[r, col]]).norm(), || {
            format!("entry ({r}, {col}) on window [{}, {}]", q.lo(), q.hi())
        });
    }
    let mut report = VerificationReport::new();
    report.check("cqd1", Some(t), tol, max.value, max.location);
    Ok(report)
}

/// `E_k[η(F₁,…,F_n)] = tr[η(m_{F₁},…,m_{F_n}) |k⟩⟨k| ⊗ |υ^{⊗w}⟩⟨υ^{⊗w}|]`.
///
/// The left side enumerates environment configurations over the support of
/// `q`; the right side contracts the diagonal of `η(m_F…)` with the amplitudes
/// of `|k⟩ ⊗ υ^{⊗w}`.
pub fn check_cqd2(
    q: &Distribution,
    upsilon: &EnvVector,
    k: usize,
    fs: &[DiagonalObservable],
    eta: &Polynomial,
    tol: f64,
    cap: u128,
) -> Result<(VerificationReport, Complex64, Complex64)> {
    if eta.n_vars() != fs.len() {
        return Err(Error::DimMismatch(format!("η has {} variables for {} observables", eta.n_vars(), fs.len())));
    }
    if q.len() != upsilon.len() {
        return Err(Error::DimMismatch(format!("q on {} symbols, υ on {}", q.len(), upsilon.len())));
    }
    let g = q.len();
    let window = fs.iter().filter(|f| !f.is_empty()).fold(None, |acc: Option<(i64, i64)>, f| {
        let (lo, hi) = (f.lo(), f.lo() + f.len() as i64 - 1);
        Some(acc.map_or((lo, hi), |(a, b)| (a.min(lo), b.max(hi))))
    });
    let (lo, hi) = window.unwrap_or((0, -1));
    let width = (hi - lo + 1) as usize;
    let dim = (g as u128).checked_pow(width as u32).unwrap_or(u128::MAX);
    if dim > cap {
        return Err(Error::WindowTooLarge { width, dim, cap });
    }
    let wide = fs
        .iter()
        .map(|f| if width == 0 { Ok(f.clone()) } else { f.extend_to(lo, hi) })
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = wide.first().map(|f| f.values().len() / dim as usize) {
        if k >= n {
            return Err(Error::DimMismatch(format!("state {k} outside 0..{n}")));
        }
    }

    // classical: sum over configurations γ with q^{⊗w}(γ) > 0
    let support = q.support();
    let mut classical = Complex64::new(0.0, 0.0);
    let mut config = vec![0usize; width];
    loop {
        let prob: f64 = config.iter().map(|&s| q.weight(support[s])).product();
        let env: Vec<Symbol> = config.iter().map(|&s| Symbol(support[s])).collect();
        let args: Vec<Complex64> = wide.iter().map(|f| f.value(k, &env)).collect();
        classical += eta.eval(&args) * prob;
        if !advance(&mut config, support.len()) {
            break;
        }
    }

    // quantum: ⟨ψ| diag(η(m_F…)) |ψ⟩ with ψ = |k⟩ ⊗ υ^{⊗w}
    let amps = upsilon.tensor_power(width);
    let offset = k * amps.len();
    let mut quantum = Complex64::new(0.0, 0.0);
    for (x, a) in amps.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let args: Vec<Complex64> = wide.iter().map(|f| f.values()[offset + x]).collect();
        quantum += a.conj() * eta.eval(&args) * a;
    }

    let mut report = VerificationReport::new();
    report.check("cqd2", None, tol, (classical - quantum).norm(), Some(format!("k={k}, window [{lo}, {hi}]")));
    Ok((report, classical, quantum))
}

fn advance(config: &mut [usize], base: usize) -> bool {
    for d in config.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}
