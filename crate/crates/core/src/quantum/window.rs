//! Operators on `H ⊗ Z_lo ⊗ ⋯ ⊗ Z_hi`, acting as the identity on every
//! coordinate outside the window.

use num_complex::Complex64;

use super::{conditional_expectation, heisenberg_apply, kraus_channel, max_abs_diff, ComplexMatrix, EnvState, EnvVector, UnitaryV};
use crate::dilation::{Coupling, EnvironmentWindow, GlobalState, Symbol};
use crate::{Error, Result};

fn dense_dim(n: usize, g_count: usize, len: usize) -> u128 {
    (g_count as u128).checked_pow(len as u32).map_or(u128::MAX, |p| p.saturating_mul(n as u128))
}

fn check_dim(n: usize, g_count: usize, len: usize, cap: u128) -> Result<usize> {
    let dim = dense_dim(n, g_count, len);
    if dim > cap {
        return Err(Error::DimensionTooLarge { dim, cap });
    }
    Ok(dim as usize)
}

/// Splits a window basis index into system state and environment digits
/// (coordinate `lo` first).
fn digits(index: usize, n: usize, g_count: usize, len: usize) -> (usize, Vec<usize>) {
    let mut env = vec![0; len];
    let mut rest = index;
    for slot in env.iter_mut().rev() {
        *slot = rest % g_count;
        rest /= g_count;
    }
    debug_assert!(rest < n);
    (rest, env)
}

fn compose_index(system: usize, env: &[usize], g_count: usize) -> usize {
    env.iter().fold(system, |acc, &g| acc * g_count + g)
}

/// A dense operator on a window `[lo, lo + len)` of environment coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowOperator {
    n: usize,
    g_count: usize,
    lo: i64,
    len: usize,
    matrix: ComplexMatrix,
}

impl WindowOperator {
    pub fn new(n: usize, g_count: usize, lo: i64, len: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = check_dim(n, g_count, len, u128::MAX)?;
        if matrix.dim() != (dim, dim) {
            return Err(Error::DimMismatch(format!("matrix {:?} for window dimension {dim}", matrix.dim())));
        }
        Ok(Self { n, g_count, lo, len, matrix })
    }

    /// `a ⊗ 1` with an empty window.
    pub fn system(a: ComplexMatrix, g_count: usize) -> Result<Self> {
        let n = a.nrows();
        Self::new(n, g_count, 1, 0, a)
    }

    pub fn identity(n: usize, g_count: usize, lo: i64, len: usize) -> Result<Self> {
        let dim = check_dim(n, g_count, len, u128::MAX)?;
        Self::new(n, g_count, lo, len, super::identity(dim))
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.len as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The window after extension to cover `[lo, hi]` (an empty window adopts it).
    fn covering(&self, lo: i64, hi: i64) -> (i64, i64) {
        if self.len == 0 {
            (lo, hi)
        } else {
            (lo.min(self.lo), hi.max(self.hi()))
        }
    }

    /// Tensor with identities so the window covers `[lo, hi]`.
    pub fn extend_to(&self, lo: i64, hi: i64, cap: u128) -> Result<Self> {
        let (new_lo, new_hi) = self.covering(lo, hi);
        if self.len > 0 && new_lo == self.lo && new_hi == self.hi() {
            return Ok(self.clone());
        }
        let new_len = (new_hi - new_lo + 1).max(0) as usize;
        let dim = check_dim(self.n, self.g_count, new_len, cap)?;
        let left = if self.len == 0 { 0 } else { (self.lo - new_lo) as usize };
        let right = new_len - left - self.len;
        let g = self.g_count;
        let (lp, rp) = (g.pow(left as u32), g.pow(right as u32));
        let mid = g.pow(self.len as u32);
        let mut out = ComplexMatrix::zeros((dim, dim));
        for ((r, c), &v) in self.matrix.indexed_iter() {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (ri, rm) = (r / mid, r % mid);
            let (ci, cm) = (c / mid, c % mid);
            for l in 0..lp {
                for s in 0..rp {
                    let row = ((ri * lp + l) * mid + rm) * rp + s;
                    let col = ((ci * lp + l) * mid + cm) * rp + s;
                    out[[row, col]] = v;
                }
            }
        }
        Ok(Self { n: self.n, g_count: g, lo: new_lo, len: new_len, matrix: out })
    }

    /// `Θ̂`: the factor at coordinate `n` moves to `n + 1`.
    pub fn right_shift(&self) -> Self {
        Self { lo: self.lo + 1, ..self.clone() }
    }

    /// `Θ̂⁻¹`.
    pub fn left_shift(&self) -> Self {
        Self { lo: self.lo - 1, ..self.clone() }
    }

    /// Brings two operators to a common window.
    pub fn align(&self, other: &Self, cap: u128) -> Result<(Self, Self)> {
        if self.len == 0 && other.len == 0 {
            return Ok((self.clone(), other.clone()));
        }
        let (lo, hi) = match (self.len, other.len) {
            (0, _) => (other.lo, other.hi()),
            (_, 0) => (self.lo, self.hi()),
            _ => (self.lo.min(other.lo), self.hi().max(other.hi())),
        };
        Ok((self.extend_to(lo, hi, cap)?, other.extend_to(lo, hi, cap)?))
    }

    pub fn max_abs_diff(&self, other: &Self, cap: u128) -> Result<f64> {
        let (a, b) = self.align(other, cap)?;
        Ok(max_abs_diff(&a.matrix, &b.matrix))
    }

    pub fn mul(&self, other: &Self, cap: u128) -> Result<Self> {
        let (a, b) = self.align(other, cap)?;
        Ok(Self { matrix: a.matrix.dot(&b.matrix), ..a })
    }

    pub fn adjoint(&self) -> Self {
        Self { matrix: super::dagger(&self.matrix), ..self.clone() }
    }

    /// Permutation `π` of the window basis induced by `V` on `(H, coordinate 1)`.
    fn v1_permutation(&self, v: &UnitaryV) -> Vec<usize> {
        assert!(self.len > 0 && self.lo <= 1 && 1 <= self.hi(), "coordinate 1 must be in the window");
        let pos = (1 - self.lo) as usize;
        let g = self.g_count;
        (0..self.dim())
            .map(|x| {
                let (i, mut env) = digits(x, self.n, g, self.len);
                let y = v.permutation()[i * g + env[pos]];
                env[pos] = y % g;
                compose_index(y / g, &env, g)
            })
            .collect()
    }

    /// `V₁† A V₁`.
    fn conjugate_v1(&self, v: &UnitaryV) -> Self {
        let pi = self.v1_permutation(v);
        let m = ComplexMatrix::from_shape_fn(self.matrix.dim(), |(x, y)| self.matrix[[pi[x], pi[y]]]);
        Self { matrix: m, ..self.clone() }
    }

    /// `V₁ A V₁†`.
    fn conjugate_v1_inverse(&self, v: &UnitaryV) -> Self {
        let pi = self.v1_permutation(v);
        let mut m = ComplexMatrix::zeros(self.matrix.dim());
        for ((x, y), &val) in self.matrix.indexed_iter() {
            m[[pi[x], pi[y]]] = val;
        }
        Self { matrix: m, ..self.clone() }
    }
}

fn check_compatible(v: &UnitaryV, a: &WindowOperator) -> Result<()> {
    if v.n() != a.n || v.g_count() != a.g_count {
        return Err(Error::DimMismatch(format!(
            "V on (N={}, |G|={}), operator on (N={}, |G|={})",
            v.n(),
            v.g_count(),
            a.n,
            a.g_count
        )));
    }
    Ok(())
}

/// `J(A) = V₁† Θ̂(A) V₁`, the window extended as needed to contain coordinate 1.
pub fn automorphism_j(v: &UnitaryV, a: &WindowOperator, cap: u128) -> Result<WindowOperator> {
    check_compatible(v, a)?;
    let shifted = a.right_shift().extend_to(1, 1, cap)?;
    Ok(shifted.conjugate_v1(v))
}

/// `J⁻¹(A) = Θ̂⁻¹(V₁ A V₁†)`.
pub fn automorphism_j_inverse(v: &UnitaryV, a: &WindowOperator, cap: u128) -> Result<WindowOperator> {
    check_compatible(v, a)?;
    Ok(a.extend_to(1, 1, cap)?.conjugate_v1_inverse(v).left_shift())
}

/// Result of running the quantum stochastic flow.
#[derive(Debug, Clone)]
pub struct FlowOutput {
    /// `j_t(a)` on `H ⊗ Z_1 ⊗ ⋯ ⊗ Z_t`.
    pub operator: WindowOperator,
    /// `E_{υ^{⊗t}}[j_t(a)]`.
    pub reduced: ComplexMatrix,
    /// `T^t(a)`.
    pub semigroup: ComplexMatrix,
    /// `‖E_{υ^{⊗t}}[j_t(a)] − T^t(a)‖_max`.
    pub deviation: f64,
}

/// `j_0 = id`, `j_t(a) = Σ_{z z'} j_{t-1}(E_{|z⟩⟨z'|}[V† (a ⊗ 1) V]) ⊗ |z'⟩⟨z|`,
/// with the new factor `Z_t` appended last; compared against `T^t(a)`.
pub fn flow(v: &UnitaryV, upsilon: &EnvVector, a: &ComplexMatrix, t: usize, cap: u128) -> Result<FlowOutput> {
    let (n, g) = (v.n(), v.g_count());
    if a.dim() != (n, n) {
        return Err(Error::DimMismatch(format!("observable {:?}, expected {n}×{n}", a.dim())));
    }
    check_dim(n, g, t, cap)?;
    let matrix = flow_matrix(v, a, t);
    let operator = WindowOperator::new(n, g, 1, t, matrix)?;
    let env = upsilon.tensor_power(t);
    let reduced = conditional_expectation(operator.matrix(), n, EnvState::Vector(&env))?;
    let channel = kraus_channel(v, upsilon)?;
    let semigroup = heisenberg_apply(&channel, a, t)?;
    let deviation = max_abs_diff(&reduced, &semigroup);
    Ok(FlowOutput { operator, reduced, semigroup, deviation })
}

fn flow_matrix(v: &UnitaryV, a: &ComplexMatrix, t: usize) -> ComplexMatrix {
    if t == 0 {
        return a.clone();
    }
    let (n, g) = (v.n(), v.g_count());
    let lifted = super::kron(a, &super::identity(g));
    let b = v.conjugate(&lifted);
    let prev_dim = n * g.pow(t as u32 - 1);
    let dim = prev_dim * g;
    let mut out = ComplexMatrix::zeros((dim, dim));
    for z1 in 0..g {
        for z in 0..g {
            // E_{|z⟩⟨z'|}[B]: ⟨h'| · |h⟩ = ⟨h', z'| B |h, z⟩
            let slice = ComplexMatrix::from_shape_fn((n, n), |(h1, h)| b[[h1 * g + z1, h * g + z]]);
            if slice.iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let inner = flow_matrix(v, &slice, t - 1);
            for ((r, c), &val) in inner.indexed_iter() {
                out[[r * g + z1, c * g + z]] += val;
            }
        }
    }
    out
}

/// A function `F` on `E × G^{[lo, lo+len)}`, stored by its values over the
/// window basis; its multiplication operator is `m_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    n: usize,
    g_count: usize,
    lo: i64,
    len: usize,
    values: Vec<Complex64>,
}

impl DiagonalObservable {
    pub fn from_fn(
        n: usize,
        g_count: usize,
        lo: i64,
        len: usize,
        mut f: impl FnMut(usize, &[Symbol]) -> Complex64,
    ) -> Result<Self> {
        let dim = check_dim(n, g_count, len, u128::MAX)?;
        let values = (0..dim)
            .map(|x| {
                let (i, env) = digits(x, n, g_count, len);
                let env: Vec<Symbol> = env.into_iter().map(Symbol).collect();
                f(i, &env)
            })
            .collect();
        Ok(Self { n, g_count, lo, len, values })
    }

    /// Indicator of `X = system` and `Y_{lo+m} = config[m]`.
    pub fn indicator(n: usize, g_count: usize, lo: i64, system: usize, config: &[Symbol]) -> Result<Self> {
        Self::from_fn(n, g_count, lo, config.len(), |i, env| {
            Complex64::new(if i == system && env == config { 1.0 } else { 0.0 }, 0.0)
        })
    }

    /// A system function `f(X)`, window empty.
    pub fn system(f: &[Complex64], g_count: usize) -> Self {
        Self { n: f.len(), g_count, lo: 1, len: 0, values: f.to_vec() }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `F(i, γ)` where `env` lists `γ` on this observable's window.
    pub fn value(&self, system: usize, env: &[Symbol]) -> Complex64 {
        assert_eq!(env.len(), self.len);
        let digits: Vec<usize> = env.iter().map(|g| g.0).collect();
        self.values[compose_index(system, &digits, self.g_count)]
    }

    /// `F` evaluated on a global state whose window covers this one.
    pub fn evaluate(&self, z: &GlobalState) -> Result<Complex64> {
        let env = (0..self.len as i64)
            .map(|m| {
                let c = self.lo + m;
                z.env.get(c).ok_or(Error::WindowUnderflow { coordinate: c })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.value(z.system, &env))
    }

    /// `m_F`.
    pub fn to_operator(&self) -> WindowOperator {
        WindowOperator {
            n: self.n,
            g_count: self.g_count,
            lo: self.lo,
            len: self.len,
            matrix: super::diag(&self.values),
        }
    }

    /// `F ∘ α^t`, tabulated on the smallest window containing both the shifted
    /// window of `F` and the coordinates `1..=t` that `α^t` consumes.
    pub fn compose_alpha(&self, coupling: &Coupling, t: usize, cap: u128) -> Result<Self> {
        if t == 0 {
            return Ok(self.clone());
        }
        let t_i = t as i64;
        let (lo, hi) = if self.len == 0 {
            (1, t_i)
        } else {
            ((self.lo + t_i).min(1), (self.hi_coord() + t_i).max(t_i))
        };
        let len = (hi - lo + 1) as usize;
        check_dim(self.n, self.g_count, len, cap)?;
        let mut failure = None;
        let out = Self::from_fn(self.n, self.g_count, lo, len, |i, env| {
            let z = GlobalState::new(i, EnvironmentWindow::new(lo, env.to_vec()).expect("non-empty window"));
            match coupling.alpha_apply(&z, t_i).and_then(|zt| self.evaluate(&zt)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        })?;
        match failure {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    fn hi_coord(&self) -> i64 {
        self.lo + self.len as i64 - 1
    }

    /// The same function viewed on a wider window.
    pub fn extend_to(&self, lo: i64, hi: i64) -> Result<Self> {
        let (new_lo, new_hi) = if self.len == 0 { (lo, hi) } else { (lo.min(self.lo), hi.max(self.hi_coord())) };
        let new_len = (new_hi - new_lo + 1).max(0) as usize;
        let offset = if self.len == 0 { 0 } else { (self.lo - new_lo) as usize };
        Self::from_fn(self.n, self.g_count, new_lo, new_len, |i, env| {
            self.value(i, &env[offset..offset + self.len])
        })
    }
}
