use ndarray::Array1;
use num_complex::Complex64;

use super::ComplexMatrix;
use crate::dilation::Coupling;
use crate::model::Distribution;
use crate::{Error, Result};

/// `V = Σ_{i,g} |φ(i, g)⟩⟨i, g|` on `H ⊗ Z`, kept as its permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryV {
    n: usize,
    g_count: usize,
    perm: Vec<usize>,
}

pub fn build_unitary(coupling: &Coupling) -> UnitaryV {
    UnitaryV { n: coupling.n(), g_count: coupling.symbol_count(), perm: coupling.forward_table().to_vec() }
}

impl UnitaryV {
    /// From an arbitrary permutation of `0..n·g_count`.
    pub fn from_permutation(n: usize, g_count: usize, perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n * g_count];
        if perm.len() != seen.len() || perm.iter().any(|&y| y >= seen.len() || std::mem::replace(&mut seen[y], true)) {
            return Err(Error::InvalidCoupling("not a permutation".into()));
        }
        Ok(Self { n, g_count, perm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn g_count(&self) -> usize {
        self.g_count
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// `V|x⟩ = |perm[x]⟩`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn dense(&self) -> ComplexMatrix {
        let mut v = ComplexMatrix::zeros((self.dim(), self.dim()));
        for (x, &y) in self.perm.iter().enumerate() {
            v[[y, x]] = Complex64::new(1.0, 0.0);
        }
        v
    }

    /// `V_{gg'} = Σ_{i,j} |i⟩⟨i, g|φ(j, g')⟩⟨j|`, an `N × N` block.
    pub fn block(&self, g: usize, g_prime: usize) -> ComplexMatrix {
        let mut b = ComplexMatrix::zeros((self.n, self.n));
        for j in 0..self.n {
            let y = self.perm[j * self.g_count + g_prime];
            if y % self.g_count == g {
                b[[y / self.g_count, j]] = Complex64::new(1.0, 0.0);
            }
        }
        b
    }

    /// `V† A V`, computed by relabelling: `(V† A V)_{xy} = A_{φ(x) φ(y)}`.
    pub fn conjugate(&self, a: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(a.dim(), (self.dim(), self.dim()));
        ComplexMatrix::from_shape_fn(a.dim(), |(x, y)| a[[self.perm[x], self.perm[y]]])
    }

    /// `V†V = 1` checked on the dense matrix; exact since entries are 0/1.
    pub fn is_unitary(&self) -> bool {
        let v = self.dense();
        super::dagger(&v).dot(&v) == super::identity(self.dim())
    }
}

/// `υ = Σ_g √q_g |g⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvVector {
    amps: Array1<Complex64>,
}

pub fn build_env_vector(q: &Distribution) -> EnvVector {
    EnvVector { amps: q.weights().iter().map(|&w| Complex64::new(w.sqrt(), 0.0)).collect() }
}

impl EnvVector {
    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amps.as_slice().expect("contiguous")
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `υ^{⊗m}`, first factor most significant.
    pub fn tensor_power(&self, m: usize) -> Vec<Complex64> {
        (0..m).fold(vec![Complex64::new(1.0, 0.0)], |acc, _| {
            acc.iter().flat_map(|&a| self.amps.iter().map(move |&b| a * b)).collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose_greedy;
    use crate::dilation::{build_alphabet, build_coupling, AlphabetMode};
    use crate::model::StochasticMatrix;
    use crate::quantum::{diag, max_abs_diff};

    fn minimal_coupling() -> Coupling {
        let p = StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        let a = build_alphabet(2, AlphabetMode::Minimal, &[decompose_greedy(&p).unwrap()]).unwrap();
        build_coupling(&a).unwrap()
    }

    #[test]
    fn identity_coupling_gives_identity() {
        let v = UnitaryV::from_permutation(2, 3, (0..6).collect()).unwrap();
        assert_eq!(v.dense(), crate::quantum::identity(6));
        assert!(UnitaryV::from_permutation(2, 3, vec![0, 0, 1, 2, 3, 4]).is_err());
    }

    #[test]
    fn minimal_unitary_is_a_permutation_matrix() {
        let v = build_unitary(&minimal_coupling());
        let d = v.dense();
        assert_eq!(d.dim(), (12, 12));
        for r in 0..12 {
            assert_eq!(d.row(r).iter().filter(|z| z.re == 1.0).count(), 1);
            assert_eq!(d.column(r).iter().filter(|z| z.re == 1.0).count(), 1);
        }
        assert!(v.is_unitary());
    }

    #[test]
    fn conjugation_matches_dense_product_and_pulls_back_observables() {
        let c = minimal_coupling();
        let v = build_unitary(&c);
        let dense = v.dense();
        for x0 in 0..v.dim() {
            let mut f = vec![Complex64::new(0.0, 0.0); v.dim()];
            f[x0] = Complex64::new(1.0, 0.0);
            let m = diag(&f);
            let direct = crate::quantum::dagger(&dense).dot(&m).dot(&dense);
            assert_eq!(direct, v.conjugate(&m));
            let pulled: Vec<Complex64> = (0..v.dim()).map(|x| f[c.forward_table()[x]]).collect();
            assert!(max_abs_diff(&direct, &diag(&pulled)) == 0.0);
        }
    }

    #[test]
    fn blocks_reassemble_v() {
        let v = build_unitary(&minimal_coupling());
        let g = v.g_count();
        let mut sum = ComplexMatrix::zeros((v.dim(), v.dim()));
        for a in 0..g {
            for b in 0..g {
                let mut unit = ComplexMatrix::zeros((g, g));
                unit[[a, b]] = Complex64::new(1.0, 0.0);
                sum = sum + crate::quantum::kron(&v.block(a, b), &unit);
            }
        }
        assert_eq!(sum, v.dense());
    }

    #[test]
    fn env_vector_examples() {
        let point = build_env_vector(&Distribution::point_mass(4, 2));
        assert_eq!(point.amplitudes()[2], Complex64::new(1.0, 0.0));
        assert_eq!(point.norm_sqr(), 1.0);
        let q = Distribution::new(vec![0.6, 0.3, 0.1, 0.0, 0.0, 0.0]).unwrap();
        let u = build_env_vector(&q);
        let expected = [0.6f64.sqrt(), 0.3f64.sqrt(), 0.1f64.sqrt(), 0.0, 0.0, 0.0];
        for (a, e) in u.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15);
            assert_eq!(a.im, 0.0);
        }
        assert!((u.norm_sqr() - 1.0).abs() < 1e-12);
        let sq: f64 = u.tensor_power(2).iter().map(|a| a.norm_sqr()).sum();
        assert!((sq - 1.0).abs() < 1e-12);
    }
}
