//! Low-dimensional embeddings: LLE, asymmetric MDS, co-occurrence word
//! vectors and triplet (TriMap-style) MDS.

mod amds;
mod lle;
mod trimap;
mod words;

pub use amds::{amds_factorize, AmdsMethod, AmdsResult};
pub use lle::{lle_embed, lle_objective, lle_weights, pca_embed};
pub use trimap::{trimap_embed, trimap_triplets, TrimapLoss, TrimapOptions, TrimapProblem, Triplet};
pub use words::{cooccurrence_embed, sliding_windows, WordEmbedding};

use crate::points::PointSet;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    pub z: PointSet,
    pub objective: f64,
    pub method: String,
    pub iterations: usize,
    /// Objective after each optimization step (empty for closed-form methods).
    pub trace: Vec<f64>,
}
