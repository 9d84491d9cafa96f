//! Standard dilations: environment alphabet `G = E × L`, invertible coupling
//! `φ` on `E × G`, global dynamics `α = θ∘φ₁` on `E × G^ℤ` and the cocycle
//! `φ_t = θ^{-t}∘α^t`.
//!
//! A symbol `g = (j, ℓ)` is encoded as `j·|L| + pos(ℓ)` where `pos` is the
//! position of `ℓ` in the alphabet's ascending label list. A point `(i, g)` of
//! `E × G` is encoded as `i·|G| + g`. The distinguished stratum is `j = 0`.

use std::collections::BTreeSet;

use rand::Rng;

use crate::decompose::{
    decompose_full, decompose_greedy, label_count, map_from_label, ConvexDecomposition, MapLabel,
};
use crate::model::{Distribution, MatrixSequence, StochasticMatrix};
use crate::{Error, Result};

/// Cap on `|E × G|` when building alphabets and coupling tables.
pub const DEFAULT_TABLE_CAP: u128 = 1_000_000;

/// Index of an environment symbol in `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphabetMode {
    /// `L` is every map `E → E`.
    Universal,
    /// `L` is the set of maps used by the given decompositions.
    Minimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentAlphabet {
    n: usize,
    mode: AlphabetMode,
    labels: Vec<MapLabel>,
    maps: Vec<Vec<usize>>,
}

impl EnvironmentAlphabet {
    pub fn new(n: usize, mode: AlphabetMode, labels: Vec<MapLabel>) -> Result<Self> {
        if n == 0 || labels.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let labels: Vec<MapLabel> = labels.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let points = (n as u128) * (n as u128) * labels.len() as u128;
        if points > DEFAULT_TABLE_CAP {
            return Err(Error::LabelSpaceTooLarge { size: points, cap: DEFAULT_TABLE_CAP });
        }
        let maps = labels
            .iter()
            .map(|&l| map_from_label(l, n).map(|m| m.table().to_vec()))
            .collect::<Result<_>>()?;
        Ok(Self { n, mode, labels, maps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> AlphabetMode {
        self.mode
    }

    pub fn labels(&self) -> &[MapLabel] {
        &self.labels
    }

    pub fn label_count(&self) -> usize {
        self.labels.len()
    }

    /// `|G| = N·|L|`.
    pub fn size(&self) -> usize {
        self.n * self.labels.len()
    }

    pub fn label_position(&self, label: MapLabel) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    pub fn symbol(&self, j: usize, label: MapLabel) -> Result<Symbol> {
        let pos = self.label_position(label).ok_or(Error::LabelNotInAlphabet { label: label.0 })?;
        assert!(j < self.n);
        Ok(Symbol(j * self.labels.len() + pos))
    }

    /// `(j, ℓ)` of a symbol.
    pub fn decode(&self, g: Symbol) -> (usize, MapLabel) {
        (g.0 / self.labels.len(), self.labels[g.0 % self.labels.len()])
    }

    /// `β_ℓ(i)` for the label at `pos`.
    pub fn apply_map(&self, pos: usize, i: usize) -> usize {
        self.maps[pos][i]
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        (0..self.size()).map(Symbol)
    }
}

/// `G = E × L` with `L` all maps (universal) or the maps of `decs` (minimal).
pub fn build_alphabet(
    n: usize,
    mode: AlphabetMode,
    decs: &[ConvexDecomposition],
) -> Result<EnvironmentAlphabet> {
    match mode {
        AlphabetMode::Universal => {
            let count = label_count(n).map(u128::from).unwrap_or(u128::MAX);
            let points = count.saturating_mul((n * n) as u128);
            if points > DEFAULT_TABLE_CAP {
                return Err(Error::LabelSpaceTooLarge { size: points, cap: DEFAULT_TABLE_CAP });
            }
            EnvironmentAlphabet::new(n, mode, (0..count as u64).map(MapLabel).collect())
        }
        AlphabetMode::Minimal => {
            if decs.is_empty() {
                return Err(Error::MissingDecomposition);
            }
            if let Some(d) = decs.iter().find(|d| d.n() != n) {
                return Err(Error::SizeMismatch { expected: n, got: d.n() });
            }
            let labels = decs.iter().flat_map(|d| d.labels()).collect();
            EnvironmentAlphabet::new(n, mode, labels)
        }
    }
}

/// Bijection `φ` of `E × G`, stored as forward and inverse index tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    g_count: usize,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Coupling {
    /// A coupling from an explicit forward table over points `i·|G| + g`.
    ///
    /// The table must be a bijection and must agree with
    /// `φ(i, (0, ℓ)) = (β_ℓ(i), (i, ℓ))` on the distinguished stratum.
    pub fn from_forward_table(alphabet: &EnvironmentAlphabet, forward: Vec<usize>) -> Result<Self> {
        let coupling = Self::from_table_unchecked(alphabet.n(), alphabet.size(), forward)?;
        for (i, pos, x) in stratum_points(alphabet) {
            let want = stratum_image(alphabet, i, pos);
            if coupling.forward[x] != want {
                return Err(Error::InvalidCoupling(format!(
                    "point {x} maps to {} instead of {want}",
                    coupling.forward[x]
                )));
            }
        }
        Ok(coupling)
    }

    fn from_table_unchecked(n: usize, g_count: usize, forward: Vec<usize>) -> Result<Self> {
        let size = n * g_count;
        if forward.len() != size {
            return Err(Error::InvalidCoupling(format!(
                "table has {} entries, expected {size}",
                forward.len()
            )));
        }
        let mut inverse = vec![usize::MAX; size];
        for (x, &y) in forward.iter().enumerate() {
            if y >= size || inverse[y] != usize::MAX {
                return Err(Error::InvalidCoupling(format!("point {x} breaks injectivity")));
            }
            inverse[y] = x;
        }
        Ok(Self { n, g_count, forward, inverse })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbol_count(&self) -> usize {
        self.g_count
    }

    /// `|E × G|`.
    pub fn point_count(&self) -> usize {
        self.forward.len()
    }

    pub fn point(&self, i: usize, g: Symbol) -> usize {
        i * self.g_count + g.0
    }

    pub fn split(&self, x: usize) -> (usize, Symbol) {
        (x / self.g_count, Symbol(x % self.g_count))
    }

    pub fn apply(&self, i: usize, g: Symbol) -> (usize, Symbol) {
        self.split(self.forward[self.point(i, g)])
    }

    pub fn apply_inverse(&self, i: usize, g: Symbol) -> (usize, Symbol) {
        self.split(self.inverse[self.point(i, g)])
    }

    /// `φ^E(i, g)`.
    pub fn system_part(&self, i: usize, g: Symbol) -> usize {
        self.forward[self.point(i, g)] / self.g_count
    }

    /// `φ^G(i, g)`.
    pub fn env_part(&self, i: usize, g: Symbol) -> Symbol {
        Symbol(self.forward[self.point(i, g)] % self.g_count)
    }

    pub fn forward_table(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_table(&self) -> &[usize] {
        &self.inverse
    }

    /// One forward step `α = θ∘φ₁`.
    pub fn alpha_step(&self, z: &mut GlobalState) -> Result<()> {
        let g = z.env.get(1).ok_or(Error::WindowUnderflow { coordinate: 1 })?;
        let (i, h) = self.apply(z.system, g);
        z.system = i;
        z.env.set(1, h);
        z.env.shift_left();
        z.clock += 1;
        Ok(())
    }

    /// One backward step `α⁻¹ = φ₁⁻¹∘θ⁻¹`.
    pub fn alpha_step_back(&self, z: &mut GlobalState) -> Result<()> {
        let g = z.env.get(0).ok_or(Error::WindowUnderflow { coordinate: 0 })?;
        z.env.shift_right();
        let (i, h) = self.apply_inverse(z.system, g);
        z.system = i;
        z.env.set(1, h);
        z.clock -= 1;
        Ok(())
    }

    /// `α^steps(z)` for any signed `steps`.
    pub fn alpha_apply(&self, z: &GlobalState, steps: i64) -> Result<GlobalState> {
        let mut out = z.clone();
        for _ in 0..steps.unsigned_abs() {
            if steps > 0 {
                self.alpha_step(&mut out)?;
            } else {
                self.alpha_step_back(&mut out)?;
            }
        }
        Ok(out)
    }

    /// `Y_n ∘ α^t` evaluated on `z0` through the closed formula: the shifted
    /// coordinate `Y_{n+t}` outside `[-t+1, 0]`, and `φ^G(X_{t-1+n}, Y_{n+t})`
    /// inside it.
    pub fn env_component(&self, z0: &GlobalState, n: i64, t: i64) -> Result<Symbol> {
        assert!(t >= 1, "closed formula is stated for t ≥ 1");
        let y = |m: i64| z0.env.get(m).ok_or(Error::WindowUnderflow { coordinate: m });
        if n <= -t || n >= 1 {
            return y(n + t);
        }
        // X_s = φ^E(X_{s-1}, Y_s) of the original configuration
        let mut x = z0.system;
        for s in 1..t + n {
            x = self.system_part(x, y(s)?);
        }
        Ok(self.env_part(x, y(n + t)?))
    }

    /// `φ_t ∘ ⋯ ∘ φ_1`: couples the system with coordinates `1..=t` in turn,
    /// with no shift. Coordinates `≤ 0` are never read or written.
    pub fn cocycle_apply(&self, z: &GlobalState, t: usize) -> Result<GlobalState> {
        let mut out = z.clone();
        for s in 1..=t as i64 {
            let g = out.env.get(s).ok_or(Error::WindowUnderflow { coordinate: s })?;
            let (i, h) = self.apply(out.system, g);
            out.system = i;
            out.env.set(s, h);
            out.clock += 1;
        }
        Ok(out)
    }
}

fn stratum_points(alphabet: &EnvironmentAlphabet) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let g_count = alphabet.size();
    (0..alphabet.n())
        .flat_map(move |i| (0..alphabet.label_count()).map(move |pos| (i, pos, i * g_count + pos)))
}

fn stratum_image(alphabet: &EnvironmentAlphabet, i: usize, pos: usize) -> usize {
    let image_symbol = i * alphabet.label_count() + pos;
    alphabet.apply_map(pos, i) * alphabet.size() + image_symbol
}

/// `φ(i, (0, ℓ)) = (β_ℓ(i), (i, ℓ))` on the distinguished stratum; the rest of
/// the domain is matched to the rest of the codomain in ascending order.
pub fn build_coupling(alphabet: &EnvironmentAlphabet) -> Result<Coupling> {
    let size = alphabet.n() * alphabet.size();
    let mut forward = vec![usize::MAX; size];
    let mut hit = vec![false; size];
    for (i, pos, x) in stratum_points(alphabet) {
        let y = stratum_image(alphabet, i, pos);
        if std::mem::replace(&mut hit[y], true) {
            return Err(Error::CompletionImpossible(format!("stratum image {y} repeated")));
        }
        forward[x] = y;
    }
    let free_domain = (0..size).filter(|&x| forward[x] == usize::MAX);
    let mut free_codomain = (0..size).filter(|&y| !hit[y]);
    let free_domain: Vec<usize> = free_domain.collect();
    for x in free_domain {
        forward[x] = free_codomain
            .next()
            .ok_or_else(|| Error::CompletionImpossible("codomain exhausted".into()))?;
    }
    if free_codomain.next().is_some() {
        return Err(Error::CompletionImpossible("codomain left over".into()));
    }
    Coupling::from_table_unchecked(alphabet.n(), alphabet.size(), forward)
}

/// A finite, contiguous window `[lo, hi]` of environment coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnvironmentWindow {
    lo: i64,
    values: Vec<Symbol>,
}

impl EnvironmentWindow {
    pub fn new(lo: i64, values: Vec<Symbol>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWindow { lo, hi: lo - 1 });
        }
        Ok(Self { lo, values })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.lo..=self.hi()).contains(&n)
    }

    pub fn get(&self, n: i64) -> Option<Symbol> {
        self.contains(n).then(|| self.values[(n - self.lo) as usize])
    }

    fn set(&mut self, n: i64, g: Symbol) {
        let idx = (n - self.lo) as usize;
        self.values[idx] = g;
    }

    /// Materialize coordinates so the window covers `[lo, hi]`; existing values
    /// are never touched.
    pub fn widen(&mut self, lo: i64, hi: i64, mut fill: impl FnMut(i64) -> Symbol) {
        let new_lo = lo.min(self.lo);
        let new_hi = hi.max(self.hi());
        let mut values = Vec::with_capacity((new_hi - new_lo + 1) as usize);
        for n in new_lo..=new_hi {
            values.push(self.get(n).unwrap_or_else(|| fill(n)));
        }
        self.lo = new_lo;
        self.values = values;
    }

    /// `θ`: the value at coordinate `n + 1` moves to `n`.
    pub fn shift_left(&mut self) {
        self.lo -= 1;
    }

    /// `θ⁻¹`: the value at coordinate `n - 1` moves to `n`.
    pub fn shift_right(&mut self) {
        self.lo += 1;
    }
}

/// `(X, Υ)` together with the number of α-steps taken.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GlobalState {
    pub system: usize,
    pub env: EnvironmentWindow,
    pub clock: i64,
}

impl GlobalState {
    pub fn new(system: usize, env: EnvironmentWindow) -> Self {
        Self { system, env, clock: 0 }
    }

    /// `θ^k` for signed `k`; the clock is unaffected.
    pub fn shifted(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.env.lo -= k;
        out
    }
}

/// Law of the coordinates `n ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum NegativeLaw {
    /// `q(1)` on every coordinate `n ≤ 0`.
    FirstInput,
    /// The given law on every coordinate `n ≤ 0`.
    Product(Distribution),
}

/// The term `(G, φ, Q₀ ⊗ (⊗_t q(t)))`.
#[derive(Debug, Clone)]
pub struct DilationSpec {
    pub alphabet: EnvironmentAlphabet,
    pub coupling: Coupling,
    inputs: Vec<Distribution>,
    pub negative_law: NegativeLaw,
    homogeneous: bool,
}

impl DilationSpec {
    /// `inputs[t-1]` is `q(t)`; a homogeneous spec repeats `inputs[0]` forever.
    pub fn new(
        alphabet: EnvironmentAlphabet,
        coupling: Coupling,
        inputs: Vec<Distribution>,
        homogeneous: bool,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::MissingInputLaw { t: 1 });
        }
        if coupling.symbol_count() != alphabet.size() || coupling.n() != alphabet.n() {
            return Err(Error::SizeMismatch { expected: alphabet.size(), got: coupling.symbol_count() });
        }
        if let Some(q) = inputs.iter().find(|q| q.len() != alphabet.size()) {
            return Err(Error::SizeMismatch { expected: alphabet.size(), got: q.len() });
        }
        let homogeneous = homogeneous && inputs.windows(2).all(|w| w[0] == w[1]);
        Ok(Self { alphabet, coupling, inputs, negative_law: NegativeLaw::FirstInput, homogeneous })
    }

    pub fn n(&self) -> usize {
        self.alphabet.n()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    /// Number of explicitly stored input laws.
    pub fn horizon(&self) -> Option<usize> {
        (!self.homogeneous).then_some(self.inputs.len())
    }

    pub fn inputs(&self) -> &[Distribution] {
        &self.inputs
    }

    /// `q(t)` for `t ≥ 1`.
    pub fn q(&self, t: usize) -> Result<&Distribution> {
        if t == 0 {
            return Err(Error::MissingInputLaw { t });
        }
        if self.homogeneous {
            return Ok(&self.inputs[0]);
        }
        self.inputs.get(t - 1).ok_or(Error::MissingInputLaw { t })
    }

    /// Same coupling, with `q(t) ≡ q(1)` on every coordinate.
    pub fn iid(&self) -> Self {
        Self {
            inputs: vec![self.inputs[0].clone()],
            homogeneous: true,
            negative_law: NegativeLaw::FirstInput,
            ..self.clone()
        }
    }

    /// Law of coordinate `n`: `q(n)` for `n ≥ 1`, the negative-side law below.
    pub fn coordinate_law(&self, n: i64) -> Result<&Distribution> {
        if n >= 1 {
            return self.q(n as usize);
        }
        Ok(match &self.negative_law {
            NegativeLaw::FirstInput => &self.inputs[0],
            NegativeLaw::Product(d) => d,
        })
    }

    /// Draws a global state with `X_0 = k` and environment window `[lo, hi]`.
    pub fn sample_state<R: Rng>(&self, k: usize, lo: i64, hi: i64, rng: &mut R) -> Result<GlobalState> {
        if lo > hi {
            return Err(Error::InvalidWindow { lo, hi });
        }
        let values = (lo..=hi)
            .map(|n| Ok(Symbol(self.coordinate_law(n)?.sample_with(rng.random::<f64>()))))
            .collect::<Result<Vec<_>>>()?;
        Ok(GlobalState::new(k, EnvironmentWindow::new(lo, values)?))
    }

    /// The decomposition `p(t)` read off the distinguished stratum of `q(t)`,
    /// or `None` when `q(t)` charges symbols with `j ≠ 0`.
    pub fn stratum_decomposition(&self, t: usize) -> Result<Option<ConvexDecomposition>> {
        use crate::decompose::{DecompositionMode, Term};
        let q = self.q(t)?;
        let l = self.alphabet.label_count();
        if q.weights()[l..].iter().any(|&w| w > 0.0) {
            return Ok(None);
        }
        let terms = (0..l)
            .filter(|&pos| q.weight(pos) > 0.0)
            .map(|pos| {
                Ok(Term { weight: q.weight(pos), map: map_from_label(self.alphabet.labels()[pos], self.n())? })
            })
            .collect::<Result<Vec<_>>>()?;
        ConvexDecomposition::new(DecompositionMode::Sparse, terms).map(Some)
    }
}

/// Exact checks of the global dynamics on the given states, for `1 ≤ t, s ≤ max_t`:
/// `α^{-t}∘α^t = id`, the closed formula for `Y_n∘α^t` against `t` direct steps
/// for `n` in `coords`, and `φ_{t+s} = θ^{-t}∘φ_s∘θ^t∘φ_t`.
///
/// Each deviation is the number of mismatching cases. Cases whose window is
/// too narrow are skipped; the number compared is recorded as a note.
pub fn verify_dynamics(
    coupling: &Coupling,
    states: &[GlobalState],
    max_t: usize,
    coords: std::ops::RangeInclusive<i64>,
) -> crate::report::VerificationReport {
    use crate::report::VerificationReport;

    #[derive(Default)]
    struct Tally {
        compared: usize,
        mismatches: usize,
        first: Option<String>,
    }
    impl Tally {
        fn record(&mut self, equal: bool, location: impl FnOnce() -> String) {
            self.compared += 1;
            if !equal {
                self.mismatches += 1;
                self.first.get_or_insert_with(location);
            }
        }
    }

    let (mut round, mut closed, mut cocycle) = (Tally::default(), Tally::default(), Tally::default());
    let max_t = max_t as i64;
    for (index, z) in states.iter().enumerate() {
        for t in 1..=max_t {
            if let Ok(fwd) = coupling.alpha_apply(z, t) {
                let back = coupling.alpha_apply(&fwd, -t);
                round.record(back.as_ref() == Ok(z), || format!("state {index}, t={t}"));
                for n in coords.clone() {
                    if let (Ok(formula), Some(direct)) = (coupling.env_component(z, n, t), fwd.env.get(n)) {
                        closed.record(formula == direct, || format!("state {index}, n={n}, t={t}"));
                    }
                }
            }
            for s in 1..=max_t {
                let lhs = coupling.cocycle_apply(z, (t + s) as usize);
                let rhs = coupling
                    .cocycle_apply(z, t as usize)
                    .and_then(|w| coupling.cocycle_apply(&w.shifted(t), s as usize))
                    .map(|w| w.shifted(-t));
                if let (Ok(lhs), Ok(rhs)) = (lhs, rhs) {
                    cocycle.record(lhs == rhs, || format!("state {index}, t={t}, s={s}"));
                }
            }
        }
    }
    let mut report = VerificationReport::new();
    for (name, tally) in [("alpha_round_trip", round), ("env_component", closed), ("cocycle", cocycle)] {
        report.check(name, None, 0.0, tally.mismatches as f64, tally.first);
        report.note(format!("{name}_compared"), tally.compared as f64);
    }
    report
}

/// All states with system `0..n` and every configuration of `G` on `[lo, hi]`.
pub fn enumerate_states(n: usize, g_count: usize, lo: i64, hi: i64) -> Result<Vec<GlobalState>> {
    if lo > hi {
        return Err(Error::InvalidWindow { lo, hi });
    }
    let width = (hi - lo + 1) as u32;
    let size = (g_count as u128).checked_pow(width).map_or(u128::MAX, |p| p.saturating_mul(n as u128));
    if size > 10_000_000 {
        return Err(Error::EnumerationTooLarge { size, cap: 10_000_000 });
    }
    let per_system = g_count.pow(width);
    let mut out = Vec::with_capacity(size as usize);
    for i in 0..n {
        for mut code in 0..per_system {
            let mut values = vec![Symbol(0); width as usize];
            for v in values.iter_mut().rev() {
                *v = Symbol(code % g_count);
                code /= g_count;
            }
            out.push(GlobalState::new(i, EnvironmentWindow::new(lo, values)?));
        }
    }
    Ok(out)
}

/// `P_ij = Σ_g q_g [φ^E(i, g) = j]`.
pub fn induced_transition(coupling: &Coupling, q: &Distribution) -> Result<StochasticMatrix> {
    if q.len() != coupling.symbol_count() {
        return Err(Error::SizeMismatch { expected: coupling.symbol_count(), got: q.len() });
    }
    let n = coupling.n();
    let mut rows = vec![vec![0.0; n]; n];
    for g in q.support() {
        for (i, row) in rows.iter_mut().enumerate() {
            row[coupling.system_part(i, Symbol(g))] += q.weight(g);
        }
    }
    StochasticMatrix::from_rows(&rows)
}

/// `q = δ_0 ⊗ p`: mass `p_ℓ` on `(0, ℓ)`.
pub fn universal_q(dec: &ConvexDecomposition, alphabet: &EnvironmentAlphabet) -> Result<Distribution> {
    let mut weights = vec![0.0; alphabet.size()];
    for term in dec.terms() {
        let g = alphabet.symbol(0, term.label())?;
        weights[g.0] += term.weight;
    }
    let total: f64 = weights.iter().sum();
    Distribution::new(weights.into_iter().map(|w| w / total).collect())
}

/// Decomposition used per time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionChoice {
    Full,
    Greedy,
}

/// Builds the standard dilation of `seq` over a universal or minimal alphabet.
///
/// The universal alphabet uses the full decomposition of every `P(t)`; the
/// minimal one uses greedy decompositions and the labels they need.
pub fn build_dilation(seq: &MatrixSequence, mode: AlphabetMode) -> Result<(DilationSpec, Vec<ConvexDecomposition>)> {
    let choice = match mode {
        AlphabetMode::Universal => DecompositionChoice::Full,
        AlphabetMode::Minimal => DecompositionChoice::Greedy,
    };
    build_dilation_with(seq, mode, choice)
}

pub fn build_dilation_with(
    seq: &MatrixSequence,
    mode: AlphabetMode,
    choice: DecompositionChoice,
) -> Result<(DilationSpec, Vec<ConvexDecomposition>)> {
    let homogeneous = seq.is_homogeneous();
    let used = if homogeneous { &seq.matrices()[..1] } else { seq.matrices() };
    let decs = used
        .iter()
        .map(|p| match choice {
            DecompositionChoice::Full => decompose_full(p),
            DecompositionChoice::Greedy => decompose_greedy(p),
        })
        .collect::<Result<Vec<_>>>()?;
    let alphabet = build_alphabet(seq.n(), mode, &decs)?;
    let coupling = build_coupling(&alphabet)?;
    let inputs = decs.iter().map(|d| universal_q(d, &alphabet)).collect::<Result<Vec<_>>>()?;
    Ok((DilationSpec::new(alphabet, coupling, inputs, homogeneous)?, decs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{DecompositionMode, Term};
    use crate::model::DeterministicMap;

    fn p73() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap()
    }

    fn universal(n: usize) -> (EnvironmentAlphabet, Coupling) {
        let a = build_alphabet(n, AlphabetMode::Universal, &[]).unwrap();
        let c = build_coupling(&a).unwrap();
        (a, c)
    }

    #[test]
    fn alphabet_sizes() {
        assert_eq!(build_alphabet(2, AlphabetMode::Universal, &[]).unwrap().size(), 8);
        assert_eq!(build_alphabet(1, AlphabetMode::Universal, &[]).unwrap().size(), 1);
        let dec = decompose_greedy(&p73()).unwrap();
        assert_eq!(build_alphabet(2, AlphabetMode::Minimal, &[dec]).unwrap().size(), 6);
        assert!(matches!(
            build_alphabet(2, AlphabetMode::Minimal, &[]),
            Err(Error::MissingDecomposition)
        ));
        assert!(matches!(
            build_alphabet(7, AlphabetMode::Universal, &[]),
            Err(Error::LabelSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn coupling_examples() {
        let (a, c) = universal(2);
        let swap = a.symbol(0, MapLabel(2)).unwrap();
        assert_eq!(c.apply(1, swap), (0, a.symbol(1, MapLabel(2)).unwrap()));
        let id = a.symbol(0, MapLabel(1)).unwrap();
        assert_eq!(c.apply(0, id), (0, a.symbol(0, MapLabel(1)).unwrap()));

        let mut image: Vec<usize> = c.forward_table().to_vec();
        image.sort_unstable();
        assert_eq!(image, (0..c.point_count()).collect::<Vec<_>>());
    }

    #[test]
    fn coupling_is_bijective_exhaustively() {
        for n in 1..=3 {
            let (_, c) = universal(n);
            for x in 0..c.point_count() {
                let (i, g) = c.split(x);
                let (j, h) = c.apply(i, g);
                assert_eq!(c.apply_inverse(j, h), (i, g));
            }
        }
    }

    #[test]
    fn from_forward_table_validates() {
        let (a, c) = universal(2);
        assert_eq!(Coupling::from_forward_table(&a, c.forward_table().to_vec()).unwrap(), c);
        let mut broken = c.forward_table().to_vec();
        broken[0] = broken[1];
        assert!(Coupling::from_forward_table(&a, broken).is_err());
        // swapping two stratum images keeps bijectivity but breaks the stratum rule
        let mut moved = c.forward_table().to_vec();
        moved.swap(0, 1);
        assert!(Coupling::from_forward_table(&a, moved).is_err());
    }

    fn state(system: usize, lo: i64, values: &[usize]) -> GlobalState {
        GlobalState::new(system, EnvironmentWindow::new(lo, values.iter().map(|&v| Symbol(v)).collect()).unwrap())
    }

    #[test]
    fn alpha_one_step_example() {
        let (a, c) = universal(2);
        let swap = a.symbol(0, MapLabel(2)).unwrap();
        let z = state(0, 0, &[0, swap.0, 3]);
        let z1 = c.alpha_apply(&z, 1).unwrap();
        assert_eq!(z1.system, 1);
        assert_eq!(z1.env.get(0), Some(swap));
        assert_eq!(z1.env.get(1), Some(Symbol(3)));
        assert_eq!(c.alpha_apply(&z, 0).unwrap(), z);
    }

    #[test]
    fn alpha_round_trip_and_underflow() {
        let (_, c) = universal(2);
        let z = state(1, -3, &[5, 2, 7, 0, 1, 6, 4]);
        let fwd = c.alpha_apply(&z, 3).unwrap();
        assert_eq!(c.alpha_apply(&fwd, -3).unwrap(), z);
        assert!(matches!(c.alpha_apply(&z, 4), Err(Error::WindowUnderflow { .. })));
        assert!(c.alpha_apply(&z, -4).is_ok());
        assert!(matches!(c.alpha_apply(&z, -5), Err(Error::WindowUnderflow { .. })));
    }

    #[test]
    fn env_component_examples() {
        let (_, c) = universal(2);
        let z = state(1, -2, &[5, 2, 7, 0, 1, 6]);
        assert_eq!(c.env_component(&z, 2, 1).unwrap(), z.env.get(3).unwrap());
        assert_eq!(c.env_component(&z, 0, 1).unwrap(), c.env_part(1, z.env.get(1).unwrap()));
        assert_eq!(c.env_component(&z, -1, 1).unwrap(), z.env.get(0).unwrap());
        for t in 1..=3 {
            let zt = c.alpha_apply(&z, t).unwrap();
            for n in -4..=3 {
                if let (Ok(closed), Some(direct)) = (c.env_component(&z, n, t), zt.env.get(n)) {
                    assert_eq!(closed, direct, "n={n} t={t}");
                }
            }
        }
    }

    #[test]
    fn cocycle_examples() {
        let (_, c) = universal(2);
        let z = state(0, 1, &[3, 6, 1, 4]);
        let one = c.cocycle_apply(&z, 1).unwrap();
        let (i, h) = c.apply(0, Symbol(3));
        assert_eq!(one.system, i);
        assert_eq!(one.env.values(), &[h, Symbol(6), Symbol(1), Symbol(4)]);
        for t in 1..=4 {
            assert_eq!(
                c.cocycle_apply(&z, t).unwrap().system,
                c.alpha_apply(&z, t as i64).unwrap().system
            );
        }
        assert!(matches!(c.cocycle_apply(&z, 5), Err(Error::WindowUnderflow { coordinate: 5 })));
    }

    #[test]
    fn induced_transition_examples() {
        let (a, c) = universal(2);
        let id = a.symbol(0, MapLabel(1)).unwrap();
        let point = Distribution::point_mass(a.size(), id.0);
        assert_eq!(induced_transition(&c, &point).unwrap(), StochasticMatrix::identity(2));

        let q = universal_q(&decompose_full(&p73()).unwrap(), &a).unwrap();
        assert!(induced_transition(&c, &q).unwrap().max_abs_diff(&p73()) <= 1e-12);

        let swap = a.symbol(0, MapLabel(2)).unwrap();
        let uniform = Distribution::uniform_on(a.size(), &[id.0, swap.0]).unwrap();
        let half = induced_transition(&c, &uniform).unwrap();
        assert!(half.rows().iter().flatten().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn universal_q_examples() {
        let (a, _) = universal(2);
        let single = ConvexDecomposition::new(
            DecompositionMode::Sparse,
            vec![Term { weight: 1.0, map: DeterministicMap::identity(2) }],
        )
        .unwrap();
        let q = universal_q(&single, &a).unwrap();
        assert_eq!(q.support(), vec![a.symbol(0, MapLabel(1)).unwrap().0]);

        let greedy = decompose_greedy(&p73()).unwrap();
        let q = universal_q(&greedy, &a).unwrap();
        let masses: Vec<f64> = greedy.labels().iter().map(|&l| q.weight(a.symbol(0, l).unwrap().0)).collect();
        assert!((masses[0] - 0.6).abs() < 1e-15);
        assert!((masses[1] - 0.3).abs() < 1e-15);
        assert!((masses[2] - 0.1).abs() < 1e-15);
        assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let minimal = build_alphabet(2, AlphabetMode::Minimal, &[single]).unwrap();
        assert!(matches!(universal_q(&greedy, &minimal), Err(Error::LabelNotInAlphabet { .. })));
    }

    #[test]
    fn window_widening_is_monotone() {
        let mut w = EnvironmentWindow::new(0, vec![Symbol(4), Symbol(5)]).unwrap();
        w.widen(-2, 3, |n| Symbol(100 + n as usize % 7));
        assert_eq!(w.lo(), -2);
        assert_eq!(w.hi(), 3);
        assert_eq!(w.get(0), Some(Symbol(4)));
        assert_eq!(w.get(1), Some(Symbol(5)));
        assert!(EnvironmentWindow::new(0, vec![]).is_err());
    }

    #[test]
    fn stratum_decomposition_recovers_weights() {
        let (spec, decs) = build_dilation(&MatrixSequence::homogeneous(p73(), 1), AlphabetMode::Minimal).unwrap();
        let dec = spec.stratum_decomposition(1).unwrap().unwrap();
        for term in decs[0].terms() {
            assert!((dec.weight_of(term.label()) - term.weight).abs() < 1e-15);
        }
    }
}
