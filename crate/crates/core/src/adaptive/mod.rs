//! Kernel learning: bandwidth tuning, multi-kernel weights, discrete QKV
//! fitting and gradient checking.

mod bandwidth;
mod gradcheck;
mod multikernel;
mod qkv;

pub use bandwidth::{tune_bandwidth, BandwidthSearch, TunePredictor, TuneResult};
pub use gradcheck::{finite_diff_gradcheck, Differentiable};
pub use multikernel::{fit_multikernel, multikernel_objective, MultiKernelFit};
pub use qkv::{
    attention_weights, fit_qkv, multihead_reconstruct, softmax_rows, QkvConfig, QkvFit, QkvForm, QkvHead, QkvObjective, QkvParams,
};
