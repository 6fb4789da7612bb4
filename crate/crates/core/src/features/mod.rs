//! Text → features: normalization and tokenization, TF-IDF sparse vectors,
//! static word-embedding aggregates, and contextual per-token embedding
//! sequences.

pub mod encoder;
mod pipeline;
mod text;
mod tfidf;
mod word2vec;

pub use encoder::{ContextualEncoder, EncoderInit, EncoderMode};
pub use pipeline::{FeatureData, FeatureExtractor, FeatureKind, FeatureSettings};
pub use text::{normalize_text, tokenize};
pub use tfidf::TfidfModel;
pub use word2vec::{fit_word2vec, StaticEmbeddings, W2vConfig};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden size of the default contextual encoder.
pub const CONTEXTUAL_DIM: usize = 768;

/// An ordered list of non-empty tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::InvalidConfig {
                message: "token sequence contains an empty token".into(),
            });
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn n(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A sparse non-negative feature vector over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFeatureVector {
    indices: Vec<u32>,
    values: Vec<f64>,
    vocab_size: usize,
}

impl SparseFeatureVector {
    pub fn new(indices: Vec<u32>, values: Vec<f64>, vocab_size: usize) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidConfig {
                message: "sparse vector indices and values differ in length".into(),
            });
        }
        if indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig {
                message: "sparse vector indices must be strictly increasing".into(),
            });
        }
        if indices.last().map_or(false, |&i| i as usize >= vocab_size) {
            return Err(Error::InvalidConfig {
                message: "sparse vector index out of vocabulary range".into(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite {
                context: "sparse vector values".into(),
            });
        }
        Ok(Self {
            indices,
            values,
            vocab_size,
        })
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Dot product with a dense weight slice of length `vocab_size`.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| v * dense[i as usize])
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// A sequence of per-token embedding vectors (rows), with trailing pad rows
/// masked out by `valid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSequence {
    vectors: Array2<f64>,
    valid: usize,
}

impl EmbeddingSequence {
    /// `vectors` is n x d with the first `valid` rows real; pad rows must
    /// be zero.
    pub fn new(vectors: Array2<f64>, valid: usize) -> Result<Self> {
        let n = vectors.nrows();
        if n == 0 || vectors.ncols() == 0 {
            return Err(Error::EmptyInput {
                context: "embedding sequence".into(),
            });
        }
        if valid == 0 || valid > n {
            return Err(Error::InvalidConfig {
                message: format!("valid length {valid} outside 1..={n}"),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "embedding sequence".into(),
            });
        }
        Ok(Self { vectors, valid })
    }

    /// Embedding dimension d.
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    /// Total rows, including padding.
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    /// Number of real (unpadded) positions.
    pub fn valid_len(&self) -> usize {
        self.valid
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// The real rows only, pad positions excluded.
    pub fn valid_rows(&self) -> ndarray::ArrayView2<'_, f64> {
        self.vectors.slice(ndarray::s![..self.valid, ..])
    }

    /// Extend to `len` rows with zero padding (mask unchanged).
    pub fn pad_to(&self, len: usize) -> Result<Self> {
        if len < self.n() {
            return Err(Error::InvalidConfig {
                message: format!("pad_to({len}) shorter than current length {}", self.n()),
            });
        }
        let mut padded = Array2::zeros((len, self.dim()));
        padded
            .slice_mut(ndarray::s![..self.n(), ..])
            .assign(&self.vectors);
        Self::new(padded, self.valid)
    }

    /// Mean of the valid rows.
    pub fn masked_mean(&self) -> ndarray::Array1<f64> {
        let sum = self.valid_rows().sum_axis(ndarray::Axis(0));
        sum / self.valid as f64
    }
}

/// Which feature representation an encoder produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Tfidf,
    StaticW2v,
    Contextual,
}

/// Binding of a feature representation to its dimensions and artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub encoder_kind: EncoderKind,
    pub d: usize,
    pub max_len: usize,
    /// Path or name of the vocab/model artifact backing this encoder.
    pub artifact: String,
}

impl EncoderConfig {
    pub fn new(
        encoder_kind: EncoderKind,
        d: usize,
        max_len: usize,
        artifact: impl Into<String>,
    ) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::InvalidConfig {
                message: "max_len must be at least 1".into(),
            });
        }
        if encoder_kind == EncoderKind::Contextual && d != CONTEXTUAL_DIM {
            return Err(Error::InvalidConfig {
                message: format!("contextual encoder dimension must be {CONTEXTUAL_DIM}, got {d}"),
            });
        }
        Ok(Self {
            encoder_kind,
            d,
            max_len,
            artifact: artifact.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sparse_vector_rejects_unsorted_indices() {
        assert!(SparseFeatureVector::new(vec![3, 1], vec![1.0, 1.0], 10).is_err());
        assert!(SparseFeatureVector::new(vec![1, 1], vec![1.0, 1.0], 10).is_err());
        assert!(SparseFeatureVector::new(vec![1, 12], vec![1.0, 1.0], 10).is_err());
        assert!(SparseFeatureVector::new(vec![1, 3], vec![1.0, 1.0], 10).is_ok());
    }

    #[test]
    fn embedding_sequence_masked_mean_ignores_padding() {
        let seq = EmbeddingSequence::new(
            array![[1.0, 3.0], [3.0, 5.0], [0.0, 0.0]],
            2,
        )
        .unwrap();
        assert_eq!(seq.masked_mean(), ndarray::arr1(&[2.0, 4.0]));
        assert_eq!(seq.n(), 3);
        assert_eq!(seq.valid_len(), 2);
    }

    #[test]
    fn contextual_config_enforces_768() {
        assert!(EncoderConfig::new(EncoderKind::Contextual, 512, 256, "x").is_err());
        assert!(EncoderConfig::new(EncoderKind::Contextual, 768, 256, "x").is_ok());
        assert!(EncoderConfig::new(EncoderKind::StaticW2v, 300, 256, "x").is_ok());
    }

    #[test]
    fn pad_to_preserves_valid_rows() {
        let seq = EmbeddingSequence::new(array![[1.0, 2.0]], 1).unwrap();
        let padded = seq.pad_to(4).unwrap();
        assert_eq!(padded.n(), 4);
        assert_eq!(padded.valid_len(), 1);
        assert_eq!(padded.masked_mean(), ndarray::arr1(&[1.0, 2.0]));
    }
}
