//! Quantum extension of a homogeneous standard dilation.
//!
//! Hilbert spaces are `H = ℂ^E` and `Z = ℂ^G` with their canonical bases.
//! Tensor products are ordered system first, then environment coordinates in
//! ascending order; on `H ⊗ Z` the basis vector `|i, g⟩` has index `i·|G| + g`,
//! the same encoding the coupling tables use.

mod channel;
mod checks;
mod unitary;
mod window;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

pub use channel::{
    davis_apply, davis_channel, heisenberg_apply, kraus_channel, permutation_automorphism,
    verify_cms_extension, verify_davis_equivalence, KrausChannel,
};
pub use checks::{check_cqd1, check_cqd2, Polynomial};
pub use unitary::{build_env_vector, build_unitary, EnvVector, UnitaryV};
pub use window::{automorphism_j, automorphism_j_inverse, flow, DiagonalObservable, FlowOutput, WindowOperator};

pub type ComplexMatrix = Array2<Complex64>;

/// Default cap on dense operator dimensions.
pub const DEFAULT_DENSE_CAP: u128 = 5000;

pub fn identity(n: usize) -> ComplexMatrix {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.t().mapv(|z| z.conj())
}

/// Largest entrywise modulus of `a − b`; infinite on shape mismatch.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.dim() != b.dim() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `m_f`: the diagonal matrix of `f`.
pub fn diag(f: &[Complex64]) -> ComplexMatrix {
    Array2::from_diag(&ndarray::Array1::from(f.to_vec()))
}

/// Real and imaginary parts uniform on `[-1, 1)`; symmetrized when
/// `hermitian` is set.
pub fn random_matrix<R: Rng>(n: usize, hermitian: bool, rng: &mut R) -> ComplexMatrix {
    let a = Array2::from_shape_fn((n, n), |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    if hermitian {
        (&a + &dagger(&a)).mapv(|z| z * 0.5)
    } else {
        a
    }
}

/// Ways an environment factor can be traced out.
#[derive(Debug, Clone, Copy)]
pub enum EnvState<'a> {
    /// `|κ⟩⟨κ|`.
    Vector(&'a [Complex64]),
    /// An arbitrary trace-class operator `τ` on the environment factor.
    Density(&'a ComplexMatrix),
}

/// `E_τ` on `B(H ⊗ K) → B(H)`: `⟨h'| E_τ[A] |h⟩ = tr[A (|h⟩⟨h'| ⊗ τ)]`, which
/// for `τ = |κ⟩⟨κ|` is `⟨h' ⊗ κ| A |h ⊗ κ⟩`.
pub fn conditional_expectation(a: &ComplexMatrix, n_sys: usize, state: EnvState<'_>) -> Result<ComplexMatrix> {
    let k = match state {
        EnvState::Vector(v) => v.len(),
        EnvState::Density(t) => {
            if t.nrows() != t.ncols() {
                return Err(Error::DimMismatch(format!("environment operator is {:?}", t.dim())));
            }
            t.nrows()
        }
    };
    if a.nrows() != n_sys * k || a.ncols() != n_sys * k {
        return Err(Error::DimMismatch(format!(
            "operator {:?} on H ⊗ K with dim H = {n_sys}, dim K = {k}",
            a.dim()
        )));
    }
    let mut out = ComplexMatrix::zeros((n_sys, n_sys));
    for h1 in 0..n_sys {
        for h in 0..n_sys {
            let mut acc = Complex64::new(0.0, 0.0);
            for x1 in 0..k {
                for x in 0..k {
                    let weight = match state {
                        EnvState::Vector(v) => v[x1].conj() * v[x],
                        EnvState::Density(t) => t[[x, x1]],
                    };
                    if weight != Complex64::new(0.0, 0.0) {
                        acc += weight * a[[h1 * k + x1, h * k + x]];
                    }
                }
            }
            out[[h1, h]] = acc;
        }
    }
    Ok(out)
}

/// `a ⊗ b` in the crate's ordering (first factor major).
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ndarray::linalg::kron(a, b)
}
