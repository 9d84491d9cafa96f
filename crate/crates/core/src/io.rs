//! JSON documents read and written by the command-line tool.
//!
//! * matrix: `{"n": N, "rows": [[..], ..]}`
//! * sequence: `{"n": N, "matrices": [rows | matrix, ..], "homogeneous": bool}`
//! * decomposition: `{"mode": "full"|"sparse", "terms": [{"weight": w, "beta": [..]}]}`
//! * dilation: see [`DilationDoc`]
//! * channel: `{"n": N, "kraus": [[[re, im], ..], ..]}`, one `N × N` matrix per symbol

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decompose::{ConvexDecomposition, DecompositionMode, MapLabel, Term};
use crate::dilation::{AlphabetMode, Coupling, DilationSpec, EnvironmentAlphabet, NegativeLaw};
use crate::model::{Distribution, MatrixSequence, StochasticMatrix};
use crate::quantum::KrausChannel;
use crate::{Error, Result};

pub const SYMBOL_ENCODING: &str = "g = j * label_count + position of the label in `labels`";
pub const POINT_ENCODING: &str = "x = i * symbol_count + g; forward[x] = phi(x), an index pair (x, forward[x]) per point";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&StochasticMatrix> for MatrixDoc {
    fn from(p: &StochasticMatrix) -> Self {
        Self { n: p.n(), rows: p.rows() }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<StochasticMatrix> {
        let p = StochasticMatrix::from_rows(&self.rows)?;
        if p.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: p.n() });
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Rows(Vec<Vec<f64>>),
    Doc(MatrixDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub n: usize,
    pub matrices: Vec<MatrixEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<bool>,
}

impl From<&MatrixSequence> for SequenceDoc {
    fn from(seq: &MatrixSequence) -> Self {
        Self {
            n: seq.n(),
            matrices: seq.matrices().iter().map(|p| MatrixEntry::Rows(p.rows())).collect(),
            homogeneous: Some(seq.is_homogeneous()),
        }
    }
}

impl SequenceDoc {
    pub fn to_sequence(&self) -> Result<MatrixSequence> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| match m {
                MatrixEntry::Rows(rows) => StochasticMatrix::from_rows(rows),
                MatrixEntry::Doc(doc) => doc.to_matrix(),
            })
            .collect::<Result<Vec<_>>>()?;
        let seq = MatrixSequence::new(matrices)?;
        if seq.n() != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: seq.n() });
        }
        if self.homogeneous == Some(true) && !seq.is_homogeneous() {
            return Err(Error::NotHomogeneous);
        }
        Ok(seq)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionDoc {
    pub mode: DecompositionMode,
    pub terms: Vec<Term>,
}

impl From<&ConvexDecomposition> for DecompositionDoc {
    fn from(d: &ConvexDecomposition) -> Self {
        Self { mode: d.mode(), terms: d.terms().to_vec() }
    }
}

impl DecompositionDoc {
    pub fn to_decomposition(&self) -> Result<ConvexDecomposition> {
        ConvexDecomposition::new(self.mode, self.terms.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDoc {
    pub symbol_encoding: String,
    pub point_encoding: String,
    pub forward: Vec<usize>,
}

/// A standard dilation `(G, φ, q(1), q(2), …)`, optionally with the sequence it
/// was built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationDoc {
    pub n: usize,
    /// `"universal"` or `"minimal"`.
    pub mode: String,
    /// Map labels `ℓ` in ascending order; `G = E × labels`.
    pub labels: Vec<MapLabel>,
    pub symbol_count: usize,
    pub coupling: CouplingDoc,
    /// `q[t-1]` is the law of coordinate `t`.
    pub q: Vec<Vec<f64>>,
    pub homogeneous: bool,
    /// Law of coordinates `n ≤ 0`; `null` means `q(1)`.
    #[serde(default)]
    pub negative_law: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SequenceDoc>,
}

pub fn mode_name(mode: AlphabetMode) -> &'static str {
    match mode {
        AlphabetMode::Universal => "universal",
        AlphabetMode::Minimal => "minimal",
    }
}

pub fn parse_mode(s: &str) -> Result<AlphabetMode> {
    match s {
        "universal" => Ok(AlphabetMode::Universal),
        "minimal" => Ok(AlphabetMode::Minimal),
        other => Err(Error::BadInput(format!("unknown alphabet mode {other:?}"))),
    }
}

impl DilationDoc {
    pub fn new(spec: &DilationSpec, target: Option<&MatrixSequence>) -> Self {
        Self {
            n: spec.n(),
            mode: mode_name(spec.alphabet.mode()).to_string(),
            labels: spec.alphabet.labels().to_vec(),
            symbol_count: spec.alphabet.size(),
            coupling: CouplingDoc {
                symbol_encoding: SYMBOL_ENCODING.to_string(),
                point_encoding: POINT_ENCODING.to_string(),
                forward: spec.coupling.forward_table().to_vec(),
            },
            q: spec.inputs().iter().map(|q| q.weights().to_vec()).collect(),
            homogeneous: spec.is_homogeneous(),
            negative_law: match &spec.negative_law {
                NegativeLaw::FirstInput => None,
                NegativeLaw::Product(d) => Some(d.weights().to_vec()),
            },
            target: target.map(SequenceDoc::from),
        }
    }

    /// Rebuilds the dilation, validating the coupling table and every law.
    pub fn to_spec(&self) -> Result<(DilationSpec, Option<MatrixSequence>)> {
        let alphabet = EnvironmentAlphabet::new(self.n, parse_mode(&self.mode)?, self.labels.clone())?;
        if alphabet.size() != self.symbol_count {
            return Err(Error::SizeMismatch { expected: self.symbol_count, got: alphabet.size() });
        }
        let coupling = Coupling::from_forward_table(&alphabet, self.coupling.forward.clone())?;
        let inputs = self.q.iter().cloned().map(Distribution::new).collect::<Result<Vec<_>>>()?;
        let mut spec = DilationSpec::new(alphabet, coupling, inputs, self.homogeneous)?;
        if let Some(w) = &self.negative_law {
            let law = Distribution::new(w.clone())?;
            if law.len() != self.symbol_count {
                return Err(Error::SizeMismatch { expected: self.symbol_count, got: law.len() });
            }
            spec.negative_law = NegativeLaw::Product(law);
        }
        let target = self.target.as_ref().map(SequenceDoc::to_sequence).transpose()?;
        Ok((spec, target))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub n: usize,
    pub kraus: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<&KrausChannel> for ChannelDoc {
    fn from(ch: &KrausChannel) -> Self {
        let kraus = ch
            .kraus_ops()
            .iter()
            .map(|k| k.rows().into_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect())
            .collect();
        Self { n: ch.n(), kraus }
    }
}

impl ChannelDoc {
    pub fn to_channel(&self) -> Result<KrausChannel> {
        let ops = self
            .kraus
            .iter()
            .map(|k| {
                if k.len() != self.n || k.iter().any(|r| r.len() != self.n) {
                    return Err(Error::DimMismatch(format!("Kraus operator is not {0}×{0}", self.n)));
                }
                Ok(crate::quantum::ComplexMatrix::from_shape_fn((self.n, self.n), |(r, c)| {
                    Complex64::new(k[r][c][0], k[r][c][1])
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(ops)
    }
}

/// Any document the tool accepts as `--input`.
#[derive(Debug, Clone)]
pub enum Input {
    Matrix(StochasticMatrix),
    Sequence(MatrixSequence),
    Dilation(Box<DilationSpec>, Option<MatrixSequence>),
}

impl Input {
    /// The sequence to dilate or verify against, if the input carries one.
    pub fn target(&self, horizon: usize) -> Option<MatrixSequence> {
        match self {
            Input::Matrix(p) => Some(MatrixSequence::homogeneous(p.clone(), horizon.max(1))),
            Input::Sequence(s) => Some(s.clone()),
            Input::Dilation(_, t) => t.clone(),
        }
    }
}

fn from_value<T: for<'de> Deserialize<'de>>(v: Value, what: &str) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::BadInput(format!("{what}: {e}")))
}

/// Classifies a document by its keys: `coupling` → dilation, `matrices` →
/// sequence, `rows` → matrix.
pub fn parse_input(v: Value) -> Result<Input> {
    let obj = v.as_object().ok_or_else(|| Error::BadInput("top-level value is not an object".into()))?;
    if obj.contains_key("coupling") {
        let (spec, target) = from_value::<DilationDoc>(v, "dilation")?.to_spec()?;
        Ok(Input::Dilation(Box::new(spec), target))
    } else if obj.contains_key("matrices") {
        Ok(Input::Sequence(from_value::<SequenceDoc>(v, "sequence")?.to_sequence()?))
    } else if obj.contains_key("rows") {
        Ok(Input::Matrix(from_value::<MatrixDoc>(v, "matrix")?.to_matrix()?))
    } else {
        Err(Error::BadInput("expected a matrix, sequence or dilation document".into()))
    }
}

pub fn read_input(path: &Path) -> Result<Input> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::BadInput(format!("{}: {e}", path.display())))?;
    let v = serde_json::from_str(&text).map_err(|e| Error::BadInput(format!("{}: {e}", path.display())))?;
    parse_input(v)
}
