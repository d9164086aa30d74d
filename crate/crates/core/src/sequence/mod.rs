//! Sequences: temporal local means, attention, the encoder stack,
//! hierarchical local means, autoregressive completion and non-local means.

mod nlm;
mod transformer;

pub use nlm::{gaussian_moving_average, nlm_denoise};
pub use transformer::{
    attention_layer, autoregressive_complete, CausalTemporalMean, Feedforward, Layer, Mixing, SequenceModel, Transformer,
    DEFAULT_DEPTH,
};

use crate::error::{Error, Result};
use crate::kernel::{gram, normalize_rows, Kernel, KernelMatrix, PositionEncoding};
use crate::points::PointSet;

/// Tokens indexed by strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    tokens: PointSet,
    times: Vec<f64>,
}

impl Sequence {
    /// `times` defaults to 0..T.
    pub fn new(tokens: PointSet, times: Option<Vec<f64>>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("a sequence needs at least one token"));
        }
        let times = times.unwrap_or_else(|| (0..tokens.len()).map(|t| t as f64).collect());
        if times.len() != tokens.len() {
            return Err(Error::DimensionMismatch { expected: tokens.len(), found: times.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("times must be finite and strictly increasing"));
        }
        Ok(Self { tokens, times })
    }

    pub fn tokens(&self) -> &PointSet {
        &self.tokens
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tokens.dim()
    }

    /// Rows [token..., t], the layout temporal kernels evaluate.
    pub fn augmented(&self) -> PointSet {
        let p = self.dim();
        let mut data = Vec::with_capacity(self.len() * (p + 1));
        for (r, t) in self.tokens.rows().zip(&self.times) {
            data.extend_from_slice(r);
            data.push(*t);
        }
        PointSet::new(p + 1, data).expect("finite rows")
    }

    /// Same times, new tokens.
    pub fn with_tokens(&self, tokens: PointSet) -> Result<Self> {
        Self::new(tokens, Some(self.times.clone()))
    }

    pub fn push(&mut self, token: &[f64], time: f64) -> Result<()> {
        if token.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: token.len() });
        }
        if !(time > *self.times.last().unwrap()) {
            return Err(Error::invalid("appended time must exceed the last time"));
        }
        let mut data = self.tokens.as_slice().to_vec();
        data.extend_from_slice(token);
        self.tokens = PointSet::new(self.dim(), data)?;
        self.times.push(time);
        Ok(())
    }
}

/// T×T gram of the temporal kernel K₁(x_t, x_s)·K₂(t, s).
pub fn temporal_gram(k: &Kernel, pe: PositionEncoding, seq: &Sequence, causal: bool) -> Result<KernelMatrix> {
    let kt = Kernel::temporal(k, pe, causal)?;
    let aug = seq.augmented();
    gram(&kt, &aug, &aug)
}

/// x̂_t = Σ_s K_ts x_s / Σ_s K_ts. Rows with no weight pass through unchanged.
pub fn temporal_local_mean(seq: &Sequence, g: &KernelMatrix) -> Result<Sequence> {
    let n = seq.len();
    if g.shape() != (n, n) {
        return Err(Error::shape(format!("gram is {:?}, sequence has {n} steps", g.shape())));
    }
    let kt = normalize_rows(g)?;
    let mixed = kt.values.clone() * seq.tokens.to_matrix();
    let mut out = PointSet::from_matrix(&mixed)?;
    if !kt.empty_rows.is_empty() {
        let mut data = out.as_slice().to_vec();
        let p = seq.dim();
        for &i in &kt.empty_rows {
            data[i * p..(i + 1) * p].copy_from_slice(seq.tokens.row(i));
        }
        out = PointSet::new(p, data)?;
    }
    seq.with_tokens(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }
}

fn local_mean_of(k: &Kernel, x: &PointSet) -> Result<PointSet> {
    let kt = normalize_rows(&gram(k, x, x)?)?;
    if let Some(&index) = kt.empty_rows.first() {
        return Err(Error::EmptyNeighborhood { index });
    }
    kt.apply(x)
}

/// X' = f(K̃₁X), then X̂ = K̃₂(X') X' with the second gram taken over X'.
pub fn local_local_mean(x: &PointSet, k1: &Kernel, k2: &Kernel, f: Activation) -> Result<PointSet> {
    let first = local_mean_of(k1, x)?;
    let data: Vec<f64> = first.as_slice().iter().map(|v| f.apply(*v)).collect();
    let inner = PointSet::new(x.dim(), data)?;
    local_mean_of(k2, &inner)
}
