use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::svd_sorted;

#[derive(Debug, Clone, PartialEq)]
pub struct WordEmbedding {
    /// Sorted vocabulary; row i of each matrix belongs to vocab[i].
    pub vocab: Vec<String>,
    /// U_d S_d^{1/2}.
    pub input: DMatrix<f64>,
    /// V_d S_d^{1/2}.
    pub output: DMatrix<f64>,
    pub counts: DMatrix<f64>,
}

impl WordEmbedding {
    pub fn index(&self, word: &str) -> Option<usize> {
        self.vocab.binary_search_by(|w| w.as_str().cmp(word)).ok()
    }

    /// v_I(a) · v_O(b).
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        Some(self.input.row(i).dot(&self.output.row(j)))
    }
}

/// Lowercased whitespace tokens grouped into overlapping windows of `len`.
pub fn sliding_windows(text: &str, len: usize) -> Vec<Vec<String>> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    if len == 0 || tokens.is_empty() {
        return vec![];
    }
    if tokens.len() <= len {
        return vec![tokens];
    }
    tokens.windows(len).map(<[String]>::to_vec).collect()
}

/// Rank-d SVD of the log(1 + count) co-occurrence matrix, where every ordered
/// pair of distinct positions inside a window counts once.
pub fn cooccurrence_embed(windows: &[Vec<String>], d: usize) -> Result<WordEmbedding> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for w in windows.iter().flatten() {
        index.insert(w.as_str(), 0);
    }
    let vocab: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let n = vocab.len();
    if d == 0 || d > n {
        return Err(Error::invalid(format!("dimension {d} outside 1..={n}")));
    }
    let mut counts = DMatrix::zeros(n, n);
    for w in windows {
        for (a, wa) in w.iter().enumerate() {
            for (b, wb) in w.iter().enumerate() {
                if a != b {
                    counts[(index[wa.as_str()], index[wb.as_str()])] += 1.0;
                }
            }
        }
    }
    if counts.iter().all(|c| *c == 0.0) {
        return Err(Error::EmptyCorpus);
    }
    let damped = counts.map(f64::ln_1p);
    let svd = svd_sorted(&damped)?;
    let mut input = DMatrix::zeros(n, d);
    let mut output = DMatrix::zeros(n, d);
    for c in 0..d {
        let s = svd.s[c].sqrt();
        input.set_column(c, &(svd.u.column(c) * s));
        output.set_column(c, &(svd.v.column(c) * s));
    }
    Ok(WordEmbedding { vocab, input, output, counts })
}
