use num_complex::Complex64;

use super::{dagger, diag, identity, max_abs_diff, ComplexMatrix, EnvVector, UnitaryV};
use crate::decompose::ConvexDecomposition;
use crate::model::StochasticMatrix;
use crate::report::{MaxTracker, VerificationReport};
use crate::{Error, Result};

/// Unitality tolerance for Kraus families.
pub const UNITALITY_TOL: f64 = 1e-10;

/// A stochastic map in Heisenberg form, `T(a) = Σ_g K_g† a K_g`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    n: usize,
    ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Rejects families with `‖Σ K†K − 1‖_max > 1e-10`.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let n = ops.first().ok_or_else(|| Error::DimMismatch("no Kraus operators".into()))?.nrows();
        if let Some(k) = ops.iter().find(|k| k.dim() != (n, n)) {
            return Err(Error::DimMismatch(format!("Kraus operator {:?}, expected {n}×{n}", k.dim())));
        }
        let channel = Self { n, ops };
        let deviation = channel.unitality_deviation();
        if deviation.is_nan() || deviation > UNITALITY_TOL {
            return Err(Error::UnitalityViolation { deviation });
        }
        Ok(channel)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn unitality_deviation(&self) -> f64 {
        let sum = self
            .ops
            .iter()
            .fold(ComplexMatrix::zeros((self.n, self.n)), |acc, k| acc + dagger(k).dot(k));
        max_abs_diff(&sum, &identity(self.n))
    }

    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.dim() != (self.n, self.n) {
            return Err(Error::DimMismatch(format!("observable {:?}, expected {}×{}", a.dim(), self.n, self.n)));
        }
        Ok(self
            .ops
            .iter()
            .filter(|k| k.iter().any(|z| z.norm_sqr() > 0.0))
            .fold(ComplexMatrix::zeros((self.n, self.n)), |acc, k| acc + dagger(k).dot(a).dot(k)))
    }
}

/// `K_g = Σ_{g'} υ_{g'} V_{gg'}` so that `T(a) = E_υ[V† (a ⊗ 1) V]`.
pub fn kraus_channel(v: &UnitaryV, upsilon: &EnvVector) -> Result<KrausChannel> {
    let (n, g_count) = (v.n(), v.g_count());
    if upsilon.len() != g_count {
        return Err(Error::DimMismatch(format!("υ has {} entries, |G| = {g_count}", upsilon.len())));
    }
    let amps = upsilon.amplitudes();
    let mut ops = vec![ComplexMatrix::zeros((n, n)); g_count];
    for j in 0..n {
        for (g_prime, &amp) in amps.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let y = v.permutation()[j * g_count + g_prime];
            ops[y % g_count][[y / g_count, j]] += amp;
        }
    }
    KrausChannel::new(ops)
}

/// `T^t(a)`.
pub fn heisenberg_apply(channel: &KrausChannel, a: &ComplexMatrix, t: usize) -> Result<ComplexMatrix> {
    (0..t).try_fold(a.clone(), |acc, _| channel.apply(&acc))
}

/// Checks `T(m_{e_j}) = m_{P e_j}` for every basis indicator `e_j`. The size
/// of `T` on off-diagonal matrix units is recorded as a note.
pub fn verify_cms_extension(channel: &KrausChannel, p: &StochasticMatrix, tol: f64) -> Result<VerificationReport> {
    let n = p.n();
    if channel.n() != n {
        return Err(Error::DimMismatch(format!("channel on {} states, matrix on {n}", channel.n())));
    }
    let mut report = VerificationReport::new();
    let mut worst = MaxTracker::default();
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let lhs = channel.apply(&diag(&e))?;
        let rhs = diag(&p.apply(&e));
        worst.observe(max_abs_diff(&lhs, &rhs), || format!("f=e{j}"));
    }
    report.check("cms_extension", None, tol, worst.value, worst.location);
    report.check("unitality", None, tol, channel.unitality_deviation(), None);

    let mut leakage: f64 = 0.0;
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            let mut unit = ComplexMatrix::zeros((n, n));
            unit[[a, b]] = Complex64::new(1.0, 0.0);
            leakage = leakage.max(channel.apply(&unit)?.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    report.note("offdiagonal_unit_image_max", leakage);
    Ok(report)
}

/// `T(a) = Σ_{ℓ,i} p_ℓ |i⟩⟨β_ℓ(i)| a |β_ℓ(i)⟩⟨i|`, evaluated entrywise.
pub fn davis_apply(dec: &ConvexDecomposition, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = dec.n();
    if a.dim() != (n, n) {
        return Err(Error::DimMismatch(format!("observable {:?}, expected {n}×{n}", a.dim())));
    }
    let mut out = ComplexMatrix::zeros((n, n));
    for term in dec.terms() {
        for i in 0..n {
            let b = term.map.apply(i);
            out[[i, i]] += a[[b, b]] * term.weight;
        }
    }
    Ok(out)
}

/// Kraus family `{√p_ℓ |β_ℓ(i)⟩⟨i|}` of the map [`davis_apply`] evaluates.
pub fn davis_channel(dec: &ConvexDecomposition) -> Result<KrausChannel> {
    let n = dec.n();
    let mut ops = Vec::with_capacity(n * dec.len());
    for term in dec.terms().iter().filter(|t| t.weight > 0.0) {
        for i in 0..n {
            let mut k = ComplexMatrix::zeros((n, n));
            k[[term.map.apply(i), i]] = Complex64::new(term.weight.sqrt(), 0.0);
            ops.push(k);
        }
    }
    KrausChannel::new(ops)
}

/// Compares two channels on every matrix unit `|a⟩⟨b|`.
pub fn verify_davis_equivalence(
    davis: &KrausChannel,
    other: &KrausChannel,
    tol: f64,
) -> Result<VerificationReport> {
    let n = davis.n();
    if other.n() != n {
        return Err(Error::DimMismatch(format!("channels on {n} and {} states", other.n())));
    }
    let mut worst = MaxTracker::default();
    for a in 0..n {
        for b in 0..n {
            let mut unit = ComplexMatrix::zeros((n, n));
            unit[[a, b]] = Complex64::new(1.0, 0.0);
            let d = max_abs_diff(&davis.apply(&unit)?, &other.apply(&unit)?);
            worst.observe(d, || format!("unit=|{a}⟩⟨{b}|"));
        }
    }
    let mut report = VerificationReport::new();
    report.check("davis_equivalence", None, tol, worst.value, worst.location);
    Ok(report)
}

/// For a permutation matrix `P`, the unitary `u|j⟩ = phase_j P†|j⟩` and a check
/// that `a ↦ u† a u` extends `P`.
pub fn permutation_automorphism(
    p: &StochasticMatrix,
    phases: &[Complex64],
    tol: f64,
) -> Result<(ComplexMatrix, VerificationReport)> {
    let sigma = p.as_deterministic().filter(|m| m.is_permutation()).ok_or(Error::NotAPermutation)?;
    let n = p.n();
    if phases.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: phases.len() });
    }
    if let Some(bad) = phases.iter().position(|z| (z.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::BadInput(format!("phase {bad} is not unimodular")));
    }
    // P†|j⟩ = |σ(j)⟩ since P_{j σ(j)} = 1
    let mut u = ComplexMatrix::zeros((n, n));
    for j in 0..n {
        u[[sigma.apply(j), j]] = phases[j];
    }
    let mut worst = MaxTracker::default();
    for j in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[j] = Complex64::new(1.0, 0.0);
        let lhs = dagger(&u).dot(&diag(&e)).dot(&u);
        worst.observe(max_abs_diff(&lhs, &diag(&p.apply(&e))), || format!("f=e{j}"));
    }
    let mut report = VerificationReport::new();
    report.check("permutation_extension", None, tol, worst.value, worst.location);
    report.check("unitarity", None, tol, max_abs_diff(&dagger(&u).dot(&u), &identity(n)), None);
    Ok((u, report))
}
