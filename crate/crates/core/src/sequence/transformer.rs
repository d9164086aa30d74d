use nalgebra::{DMatrix, DVector};

use super::{temporal_gram, temporal_local_mean, Sequence};
use crate::adaptive::softmax_rows;
use crate::error::{Error, Result};
use crate::kernel::{Kernel, PositionEncoding};
use crate::points::PointSet;

pub const DEFAULT_DEPTH: usize = 6;

/// softmax(ΦΨᵀ/√d + mask) V. With `causal`, row t sees keys s ≤ t.
pub fn attention_layer(v: &DMatrix<f64>, phi: &DMatrix<f64>, psi: &DMatrix<f64>, causal: bool) -> Result<DMatrix<f64>> {
    let n = v.nrows();
    if phi.nrows() != n || psi.nrows() != n || phi.ncols() != psi.ncols() || phi.ncols() == 0 {
        return Err(Error::shape(format!("values {:?}, queries {:?}, keys {:?}", v.shape(), phi.shape(), psi.shape())));
    }
    let z = phi * psi.transpose() / (phi.ncols() as f64).sqrt();
    let a = softmax_rows(&z, &|i, j| !causal || j <= i);
    Ok(a * v)
}

#[derive(Debug, Clone)]
pub enum Mixing {
    /// Φ = X W_Q, Ψ = X W_K, V = X W_V with softmax attention.
    Qkv { wq: DMatrix<f64>, wk: DMatrix<f64>, wv: DMatrix<f64> },
    /// Temporal local mean under a fixed kernel.
    Kernel { kernel: Kernel, encoding: PositionEncoding },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feedforward {
    Identity,
    /// x ↦ W₂ relu(W₁x + b₁) + b₂, applied to each row.
    Mlp {
        w1: DMatrix<f64>,
        b1: DVector<f64>,
        w2: DMatrix<f64>,
        b2: DVector<f64>,
    },
}

impl Feedforward {
    fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Feedforward::Identity => Ok(x.clone()),
            Feedforward::Mlp { w1, b1, w2, b2 } => {
                if w1.ncols() != x.ncols() || b1.len() != w1.nrows() || w2.ncols() != w1.nrows() || b2.len() != w2.nrows() {
                    return Err(Error::shape("feedforward weights do not chain"));
                }
                let mut hidden = x * w1.transpose();
                for mut r in hidden.row_iter_mut() {
                    r += b1.transpose();
                }
                hidden.apply(|v| *v = v.max(0.0));
                let mut out = hidden * w2.transpose();
                for mut r in out.row_iter_mut() {
                    r += b2.transpose();
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub mixing: Mixing,
    pub feedforward: Feedforward,
}

/// f_L(m_L(··· f₁(m₁(X)) ···)). Residual connections are off unless asked for.
#[derive(Debug, Clone)]
pub struct Transformer {
    pub layers: Vec<Layer>,
    pub causal: bool,
    pub residual: bool,
}

impl Transformer {
    pub fn new(layers: Vec<Layer>, causal: bool) -> Self {
        Self { layers, causal, residual: false }
    }

    /// The same layer repeated `depth` times.
    pub fn repeated(layer: Layer, depth: usize, causal: bool) -> Self {
        Self::new(vec![layer; depth], causal)
    }

    pub fn encode(&self, seq: &Sequence) -> Result<Sequence> {
        let mut x = seq.tokens().to_matrix();
        for layer in &self.layers {
            let mixed = match &layer.mixing {
                Mixing::Qkv { wq, wk, wv } => {
                    if wq.nrows() != x.ncols() || wk.nrows() != x.ncols() || wv.nrows() != x.ncols() {
                        return Err(Error::shape(format!("layer expects width {}, tokens have {}", wq.nrows(), x.ncols())));
                    }
                    attention_layer(&(&x * wv), &(&x * wq), &(&x * wk), self.causal)?
                }
                Mixing::Kernel { kernel, encoding } => {
                    let s = Sequence::new(PointSet::from_matrix(&x)?, Some(seq.times().to_vec()))?;
                    let g = temporal_gram(kernel, encoding.clone(), &s, self.causal)?;
                    temporal_local_mean(&s, &g)?.tokens().to_matrix()
                }
            };
            let mixed = if self.residual && mixed.shape() == x.shape() { mixed + &x } else { mixed };
            let fed = layer.feedforward.apply(&mixed)?;
            x = if self.residual && fed.shape() == mixed.shape() { fed + mixed } else { fed };
        }
        Sequence::new(PointSet::from_matrix(&x)?, Some(seq.times().to_vec()))
    }
}

/// A map from sequences to equally long sequences.
pub trait SequenceModel {
    fn forward(&self, seq: &Sequence) -> Result<Sequence>;
    fn is_causal(&self) -> bool;
}

impl SequenceModel for Transformer {
    fn forward(&self, seq: &Sequence) -> Result<Sequence> {
        self.encode(seq)
    }

    fn is_causal(&self) -> bool {
        self.causal
    }
}

/// Causal temporal local mean under a fixed kernel.
#[derive(Debug, Clone)]
pub struct CausalTemporalMean {
    pub kernel: Kernel,
    pub encoding: PositionEncoding,
}

impl SequenceModel for CausalTemporalMean {
    fn forward(&self, seq: &Sequence) -> Result<Sequence> {
        let g = temporal_gram(&self.kernel, self.encoding.clone(), seq, true)?;
        temporal_local_mean(seq, &g)
    }

    fn is_causal(&self) -> bool {
        true
    }
}

/// Appends `steps` tokens; each is the model output at the last position,
/// stamped one time unit after it.
pub fn autoregressive_complete(prefix: &Sequence, model: &dyn SequenceModel, steps: usize) -> Result<Sequence> {
    if !model.is_causal() {
        return Err(Error::invalid("autoregressive completion needs a causal model"));
    }
    if steps == 0 {
        return Err(Error::invalid("at least one step required"));
    }
    let mut seq = prefix.clone();
    for _ in 0..steps {
        let out = model.forward(&seq)?;
        let next = out.tokens().row(out.len() - 1).to_vec();
        if next.len() != seq.dim() {
            return Err(Error::shape("model output width differs from token width"));
        }
        let t = seq.times()[seq.len() - 1] + 1.0;
        seq.push(&next, t)?;
    }
    Ok(seq)
}
