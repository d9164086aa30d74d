use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Differentiable;
use crate::error::{Error, Result};
use crate::points::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QkvForm {
    /// softplus(Φ) softplus(Ψ)ᵀ, row-normalized.
    Linear,
    /// softmax(ΦΨᵀ / √d) by rows.
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkvHead {
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub values: DMatrix<f64>,
    /// p×q decoder W; the head outputs V̂ Wᵀ.
    pub decoder: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkvParams {
    pub form: QkvForm,
    pub heads: Vec<QkvHead>,
    /// Additive position features (N×d), shared by queries and keys.
    pub positions: Option<DMatrix<f64>>,
    pub causal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkvConfig {
    pub d: usize,
    pub form: QkvForm,
    pub lr: f64,
    pub steps: usize,
    pub seed: u64,
    pub heads: usize,
    pub learn_values: bool,
    pub causal: bool,
    /// Mask the diagonal while training.
    pub hollow: bool,
    pub positions: Option<DMatrix<f64>>,
}

impl Default for QkvConfig {
    fn default() -> Self {
        Self {
            d: 2,
            form: QkvForm::Softmax,
            lr: 0.1,
            steps: 500,
            seed: 0,
            heads: 1,
            learn_values: false,
            causal: false,
            hollow: true,
            positions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QkvFit {
    pub params: QkvParams,
    /// Loss before the first step, then after every step.
    pub trace: Vec<f64>,
}

impl QkvFit {
    pub fn initial_loss(&self) -> f64 {
        self.trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.trace.last().unwrap()
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn allowed_mask(n: usize, causal: bool, hollow: bool) -> DMatrix<bool> {
    DMatrix::from_fn(n, n, |i, j| {
        let visible = !causal || j <= i;
        // a row with no other visible key keeps its diagonal
        let lift = causal && i == 0;
        visible && (!hollow || i != j || lift)
    })
}

/// Row-wise softmax over the allowed entries; masked entries get weight 0.
pub fn softmax_rows(logits: &DMatrix<f64>, allowed: &dyn Fn(usize, usize) -> bool) -> DMatrix<f64> {
    let (n, m) = logits.shape();
    let mut a = DMatrix::zeros(n, m);
    for i in 0..n {
        let max = (0..m).filter(|&j| allowed(i, j)).map(|j| logits[(i, j)]).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            continue;
        }
        let mut total = 0.0;
        for j in (0..m).filter(|&j| allowed(i, j)) {
            let e = (logits[(i, j)] - max).exp();
            a[(i, j)] = e;
            total += e;
        }
        for j in 0..m {
            a[(i, j)] /= total;
        }
    }
    a
}

fn with_positions(m: &DMatrix<f64>, positions: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    match positions {
        Some(p) => m + p,
        None => m.clone(),
    }
}

struct Forward {
    a: DMatrix<f64>,
    phi_e: DMatrix<f64>,
    psi_e: DMatrix<f64>,
    rowsum: Vec<f64>,
}

fn forward(
    form: QkvForm,
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    positions: Option<&DMatrix<f64>>,
    mask: &DMatrix<bool>,
) -> Forward {
    let phi_e = with_positions(phi, positions);
    let psi_e = with_positions(psi, positions);
    let n = phi.nrows();
    match form {
        QkvForm::Softmax => {
            let c = 1.0 / (phi.ncols() as f64).sqrt();
            let z = &phi_e * psi_e.transpose() * c;
            let a = softmax_rows(&z, &|i, j| mask[(i, j)]);
            Forward { a, phi_e, psi_e, rowsum: vec![] }
        }
        QkvForm::Linear => {
            let f = phi_e.map(softplus);
            let h = psi_e.map(softplus);
            let mut s = f * h.transpose();
            for i in 0..n {
                for j in 0..n {
                    if !mask[(i, j)] {
                        s[(i, j)] = 0.0;
                    }
                }
            }
            let rowsum: Vec<f64> = (0..n).map(|i| s.row(i).sum()).collect();
            for i in 0..n {
                if rowsum[i] > 0.0 {
                    let r = rowsum[i];
                    s.row_mut(i).iter_mut().for_each(|v| *v /= r);
                }
            }
            Forward { a: s, phi_e, psi_e, rowsum }
        }
    }
}

/// Attention matrix of one head. `hollow` masks the diagonal (except where a
/// causal row would be left empty).
pub fn attention_weights(params: &QkvParams, head: usize, hollow: bool) -> Result<DMatrix<f64>> {
    let h = params.heads.get(head).ok_or_else(|| Error::shape(format!("no head {head}")))?;
    let mask = allowed_mask(h.phi.nrows(), params.causal, hollow);
    Ok(forward(params.form, &h.phi, &h.psi, params.positions.as_ref(), &mask).a)
}

fn head_output(h: &QkvHead, a: &DMatrix<f64>) -> DMatrix<f64> {
    let vhat = a * &h.values;
    match &h.decoder {
        Some(w) => vhat * w.transpose(),
        None => vhat,
    }
}

fn check_shapes(params: &QkvParams) -> Result<()> {
    let first = params.heads.first().ok_or_else(|| Error::shape("no heads"))?;
    let (n, d) = first.phi.shape();
    for h in &params.heads {
        if h.phi.shape() != (n, d) || h.psi.shape() != (n, d) || h.values.nrows() != n {
            return Err(Error::shape("head feature or value shapes disagree"));
        }
        if let Some(w) = &h.decoder {
            if w.ncols() != h.values.ncols() {
                return Err(Error::shape("decoder width differs from value width"));
            }
        }
    }
    if let Some(p) = &params.positions {
        if p.shape() != (n, d) {
            return Err(Error::shape("position features must match the query features"));
        }
    }
    Ok(())
}

/// (1/M) Σ_m V̂_m W_mᵀ with the diagonal mask lifted.
pub fn multihead_reconstruct(params: &QkvParams, x: &PointSet) -> Result<PointSet> {
    check_shapes(params)?;
    let n = params.heads[0].phi.nrows();
    if x.len() != n {
        return Err(Error::shape(format!("{} rows but the heads cover {n}", x.len())));
    }
    let mut out = DMatrix::zeros(n, x.dim());
    for (m, h) in params.heads.iter().enumerate() {
        let y = head_output(h, &attention_weights(params, m, false)?);
        if y.ncols() != x.dim() {
            return Err(Error::shape(format!("head {m} decodes to {} columns, data has {}", y.ncols(), x.dim())));
        }
        out += y;
    }
    out /= params.heads.len() as f64;
    PointSet::from_matrix(&out)
}

/// ‖T − (1/M) Σ_m A_m V_m W_mᵀ‖²_F as a function of the flattened head
/// parameters [Φ, Ψ, (V), (W)] per head, each column-major.
pub struct QkvObjective {
    form: QkvForm,
    n: usize,
    d: usize,
    q: usize,
    p: usize,
    heads: usize,
    values: DMatrix<f64>,
    target: DMatrix<f64>,
    learn_values: bool,
    decoder: bool,
    causal: bool,
    mask: DMatrix<bool>,
    positions: Option<DMatrix<f64>>,
}

impl QkvObjective {
    /// `target` None reconstructs the values themselves; otherwise a decoder
    /// W_m is learned for each head.
    pub fn new(values: &DMatrix<f64>, target: Option<&DMatrix<f64>>, config: &QkvConfig) -> Result<Self> {
        let (n, q) = values.shape();
        if config.d == 0 || config.heads == 0 {
            return Err(Error::invalid("feature dimension and head count must be positive"));
        }
        if n < 2 {
            return Err(Error::invalid("need at least two tokens"));
        }
        if let Some(t) = target {
            if t.nrows() != n {
                return Err(Error::shape(format!("target has {} rows, values {n}", t.nrows())));
            }
        }
        if let Some(p) = &config.positions {
            if p.shape() != (n, config.d) {
                return Err(Error::shape("position features must be N×d"));
            }
        }
        let target_m = target.cloned().unwrap_or_else(|| values.clone());
        Ok(Self {
            form: config.form,
            n,
            d: config.d,
            q,
            p: target_m.ncols(),
            heads: config.heads,
            values: values.clone(),
            target: target_m,
            learn_values: config.learn_values,
            decoder: target.is_some(),
            causal: config.causal,
            mask: allowed_mask(n, config.causal, config.hollow),
            positions: config.positions.clone(),
        })
    }

    fn head_len(&self) -> usize {
        2 * self.n * self.d + if self.learn_values { self.n * self.q } else { 0 } + if self.decoder { self.p * self.q } else { 0 }
    }

    pub fn unpack(&self, params: &[f64]) -> QkvParams {
        let nd = self.n * self.d;
        let heads = params
            .chunks(self.head_len())
            .map(|c| {
                let mut off = 2 * nd;
                let values = if self.learn_values {
                    off += self.n * self.q;
                    DMatrix::from_column_slice(self.n, self.q, &c[2 * nd..off])
                } else {
                    self.values.clone()
                };
                let decoder = self.decoder.then(|| DMatrix::from_column_slice(self.p, self.q, &c[off..]));
                QkvHead {
                    phi: DMatrix::from_column_slice(self.n, self.d, &c[..nd]),
                    psi: DMatrix::from_column_slice(self.n, self.d, &c[nd..2 * nd]),
                    values,
                    decoder,
                }
            })
            .collect();
        QkvParams { form: self.form, heads, positions: self.positions.clone(), causal: self.causal }
    }

    pub fn pack(&self, params: &QkvParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for h in &params.heads {
            out.extend_from_slice(h.phi.as_slice());
            out.extend_from_slice(h.psi.as_slice());
            if self.learn_values {
                out.extend_from_slice(h.values.as_slice());
            }
            if let Some(w) = &h.decoder {
                out.extend_from_slice(w.as_slice());
            }
        }
        out
    }

    fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Vec::with_capacity(self.n_params());
        let nd = self.n * self.d;
        for _ in 0..self.heads {
            p.extend((0..2 * nd).map(|_| rng.random_range(-0.1..0.1)));
            if self.learn_values {
                p.extend_from_slice(self.values.as_slice());
            }
            if self.decoder {
                p.extend((0..self.p * self.q).map(|_| rng.random_range(-0.1..0.1)));
            }
        }
        p
    }

    fn forwards(&self, params: &QkvParams) -> (Vec<Forward>, DMatrix<f64>) {
        let fw: Vec<Forward> =
            params.heads.iter().map(|h| forward(self.form, &h.phi, &h.psi, self.positions.as_ref(), &self.mask)).collect();
        let mut y = DMatrix::zeros(self.n, self.p);
        for (h, f) in params.heads.iter().zip(&fw) {
            y += head_output(h, &f.a);
        }
        y /= self.heads as f64;
        (fw, y)
    }
}

impl Differentiable for QkvObjective {
    fn n_params(&self) -> usize {
        self.heads * self.head_len()
    }

    fn value(&self, params: &[f64]) -> f64 {
        let (_, y) = self.forwards(&self.unpack(params));
        (y - &self.target).norm_squared()
    }

    fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let qp = self.unpack(params);
        let (fw, y) = self.forwards(&qp);
        let gy = (y - &self.target) * 2.0;
        let scale = 1.0 / self.heads as f64;
        let mut out = Vec::with_capacity(self.n_params());
        for (h, f) in qp.heads.iter().zip(&fw) {
            let g_vhat = match &h.decoder {
                Some(w) => &gy * w * scale,
                None => &gy * scale,
            };
            let da = &g_vhat * h.values.transpose();
            let n = self.n;
            let mut dz = DMatrix::zeros(n, n);
            for i in 0..n {
                let inner: f64 = (0..n).map(|k| f.a[(i, k)] * da[(i, k)]).sum();
                for j in 0..n {
                    if !self.mask[(i, j)] {
                        continue;
                    }
                    dz[(i, j)] = match self.form {
                        QkvForm::Softmax => f.a[(i, j)] * (da[(i, j)] - inner),
                        QkvForm::Linear if f.rowsum[i] > 0.0 => (da[(i, j)] - inner) / f.rowsum[i],
                        QkvForm::Linear => 0.0,
                    };
                }
            }
            let (dphi, dpsi) = match self.form {
                QkvForm::Softmax => {
                    let c = 1.0 / (self.d as f64).sqrt();
                    (&dz * &f.psi_e * c, dz.transpose() * &f.phi_e * c)
                }
                QkvForm::Linear => {
                    let fm = f.phi_e.map(softplus);
                    let hm = f.psi_e.map(softplus);
                    let df = &dz * hm;
                    let dh = dz.transpose() * fm;
                    (df.component_mul(&f.phi_e.map(sigmoid)), dh.component_mul(&f.psi_e.map(sigmoid)))
                }
            };
            out.extend_from_slice(dphi.as_slice());
            out.extend_from_slice(dpsi.as_slice());
            if self.learn_values {
                out.extend_from_slice((f.a.transpose() * &g_vhat).as_slice());
            }
            if self.decoder {
                let vhat = &f.a * &h.values;
                out.extend_from_slice((gy.transpose() * vhat * scale).as_slice());
            }
        }
        out
    }
}

/// Plain gradient descent on the QKV self-reconstruction loss. With `target`
/// set, each head also learns a decoder W and reconstructs the target.
pub fn fit_qkv(values: &DMatrix<f64>, target: Option<&DMatrix<f64>>, config: &QkvConfig) -> Result<QkvFit> {
    if !(config.lr > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let obj = QkvObjective::new(values, target, config)?;
    let mut p = obj.init(config.seed);
    let mut trace = vec![obj.value(&p)];
    for step in 0..config.steps {
        let g = obj.gradient(&p);
        p.iter_mut().zip(&g).for_each(|(a, b)| *a -= config.lr * b);
        let loss = obj.value(&p);
        if !loss.is_finite() || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLoss { step, trace });
        }
        trace.push(loss);
    }
    Ok(QkvFit { params: obj.unpack(&p), trace })
}
