//! Static word embeddings: skip-gram training with negative sampling, mean
//! aggregation for the classical baselines, and per-token sequences for the
//! sequence models.
//!
//! Training is single-threaded and fully seeded; the same corpus and config
//! always produce the same table.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{EmbeddingSequence, TokenSequence};
use crate::error::{Error, Result};
use crate::persist::{read_f64_array, write_f64_array};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct W2vConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub min_count: usize,
    pub seed: u64,
}

impl Default for W2vConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            window: 5,
            negative: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_count: 1,
            seed: 0,
        }
    }
}

/// A fixed token → vector table.
#[derive(Debug, Clone)]
pub struct StaticEmbeddings {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
}

impl PartialEq for StaticEmbeddings {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.vectors == other.vectors
    }
}

impl StaticEmbeddings {
    pub fn from_table(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput {
                context: "embedding table".into(),
            });
        }
        let dim = entries[0].1.len();
        let mut vocab = Vec::with_capacity(entries.len());
        let mut vectors = Array2::zeros((entries.len(), dim));
        for (row, (token, values)) in entries.into_iter().enumerate() {
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!("embedding for {token}"),
                    expected: dim,
                    actual: values.len(),
                });
            }
            vectors
                .row_mut(row)
                .assign(&Array1::from_vec(values));
            vocab.push(token);
        }
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            vocab,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vector_of(&self, token: &str) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.index.get(token).map(|&i| self.vectors.row(i))
    }

    /// Mean of in-vocabulary token vectors. Returns the zero vector with
    /// the flag set when every token is out of vocabulary.
    pub fn embed_static(&self, tokens: &TokenSequence) -> (Array1<f64>, bool) {
        let mut sum = Array1::zeros(self.dim());
        let mut hits = 0usize;
        for t in tokens.tokens() {
            if let Some(v) = self.vector_of(t) {
                sum += &v;
                hits += 1;
            }
        }
        if hits == 0 {
            (sum, true)
        } else {
            (sum / hits as f64, false)
        }
    }

    /// Per-token vectors as a sequence for the CNN/LSTM baselines,
    /// truncated to `max_len`; out-of-vocabulary tokens map to the zero
    /// vector. Empty sequences become a single zero row so downstream
    /// shape contracts hold.
    pub fn embed_sequence(&self, tokens: &TokenSequence, max_len: usize) -> EmbeddingSequence {
        let n = tokens.n().min(max_len).max(1);
        let mut vectors = Array2::zeros((n, self.dim()));
        for (row, t) in tokens.tokens().iter().take(max_len).enumerate() {
            if let Some(v) = self.vector_of(t) {
                vectors.row_mut(row).assign(&v);
            }
        }
        EmbeddingSequence::new(vectors, n).expect("n >= 1 and finite table")
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        let va = self.vector_of(a)?;
        let vb = self.vector_of(b)?;
        let dot = va.dot(&vb);
        let na = va.dot(&va).sqrt();
        let nb = vb.dot(&vb).sqrt();
        if na == 0.0 || nb == 0.0 {
            return Some(0.0);
        }
        Some(dot / (na * nb))
    }

    /// Persist as `vocab.txt` plus a binary table with a JSON header.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let vocab_path = dir.join("vocab.txt");
        std::fs::write(&vocab_path, self.vocab.join("\n") + "\n")
            .map_err(|e| Error::io(&vocab_path, e))?;
        let flat: Vec<f64> = self.vectors.iter().copied().collect();
        write_f64_array(
            dir,
            "embeddings",
            &flat,
            &[self.vocab_size(), self.dim()],
        )
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocab_path = dir.join("vocab.txt");
        let raw = std::fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let vocab: Vec<String> = raw.lines().map(str::to_string).collect();
        let (data, shape) = read_f64_array(dir, "embeddings")?;
        if shape.len() != 2 || shape[0] != vocab.len() {
            return Err(Error::malformed(
                dir,
                format!("embedding table shape {shape:?} does not match vocabulary"),
            ));
        }
        let vectors = Array2::from_shape_vec((shape[0], shape[1]), data)
            .map_err(|e| Error::malformed(dir, e.to_string()))?;
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            vocab,
            index,
            vectors,
        })
    }
}

/// Train skip-gram-with-negative-sampling embeddings on the given
/// documents (training folds only — callers enforce the split).
pub fn fit_word2vec(documents: &[TokenSequence], config: &W2vConfig) -> Result<StaticEmbeddings> {
    if documents.is_empty() {
        return Err(Error::EmptyInput {
            context: "word2vec fit".into(),
        });
    }

    // Vocabulary ordered by (count desc, token asc) for determinism.
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in documents {
        for t in doc.tokens() {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if entries.is_empty() {
        return Err(Error::EmptyInput {
            context: "word2vec vocabulary after min_count".into(),
        });
    }
    let vocab: Vec<String> = entries.iter().map(|(t, _)| t.to_string()).collect();
    let index: HashMap<&str, usize> = entries
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (*t, i))
        .collect();
    let v = vocab.len();

    // Negative-sampling table over the unigram distribution^0.75.
    let weights: Vec<f64> = entries.iter().map(|(_, c)| (*c as f64).powf(0.75)).collect();
    let cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total_weight = *cumulative.last().expect("non-empty vocab");

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut input = init_matrix(v, config.dim, &mut rng);
    let mut output = Array2::<f64>::zeros((v, config.dim));

    let doc_ids: Vec<Vec<usize>> = documents
        .iter()
        .map(|d| {
            d.tokens()
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect()
        })
        .collect();

    let mut sample_negative = |rng: &mut ChaCha20Rng| -> usize {
        let r = rng.gen::<f64>() * total_weight;
        cumulative.partition_point(|&c| c < r).min(v - 1)
    };

    for epoch in 0..config.epochs {
        // Linear decay per epoch, floored at 1% of the initial rate.
        let lr = (config.learning_rate
            * (1.0 - epoch as f64 / config.epochs.max(1) as f64))
            .max(config.learning_rate * 0.01);
        for ids in &doc_ids {
            for (center_pos, &center) in ids.iter().enumerate() {
                let lo = center_pos.saturating_sub(config.window);
                let hi = (center_pos + config.window + 1).min(ids.len());
                for ctx_pos in lo..hi {
                    if ctx_pos == center_pos {
                        continue;
                    }
                    let context = ids[ctx_pos];
                    sgns_update(&mut input, &mut output, center, context, 1.0, lr);
                    for _ in 0..config.negative {
                        let neg = sample_negative(&mut rng);
                        if neg == context {
                            continue;
                        }
                        sgns_update(&mut input, &mut output, center, neg, 0.0, lr);
                    }
                }
            }
        }
    }

    let table: Vec<(String, Vec<f64>)> = vocab
        .into_iter()
        .enumerate()
        .map(|(i, t)| (t, input.index_axis(Axis(0), i).to_vec()))
        .collect();
    StaticEmbeddings::from_table(table)
}

fn init_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> Array2<f64> {
    let half = 0.5 / cols as f64;
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-half..half))
}

fn sgns_update(
    input: &mut Array2<f64>,
    output: &mut Array2<f64>,
    center: usize,
    target: usize,
    label: f64,
    lr: f64,
) {
    let dot = input.row(center).dot(&output.row(target));
    let pred = 1.0 / (1.0 + (-dot).exp());
    let g = lr * (label - pred);
    let center_vec = input.row(center).to_owned();
    let target_vec = output.row(target).to_owned();
    input
        .row_mut(center)
        .zip_mut_with(&target_vec, |a, &b| *a += g * b);
    output
        .row_mut(target)
        .zip_mut_with(&center_vec, |a, &b| *a += g * b);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::tokenize;
    use approx::assert_abs_diff_eq;

    fn table() -> StaticEmbeddings {
        StaticEmbeddings::from_table(vec![
            ("red".into(), vec![1.0, 0.0]),
            ("blue".into(), vec![0.0, 2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn single_in_vocab_token_is_its_vector() {
        let (v, oov) = table().embed_static(&tokenize("red"));
        assert_eq!(v, ndarray::arr1(&[1.0, 0.0]));
        assert!(!oov);
    }

    #[test]
    fn two_tokens_average() {
        let (v, oov) = table().embed_static(&tokenize("red blue"));
        assert_eq!(v, ndarray::arr1(&[0.5, 1.0]));
        assert!(!oov);
    }

    #[test]
    fn all_oov_is_zero_with_flag() {
        let (v, oov) = table().embed_static(&tokenize("green yellow"));
        assert_eq!(v, ndarray::arr1(&[0.0, 0.0]));
        assert!(oov);
    }

    #[test]
    fn sequence_embedding_truncates_and_zeroes_oov() {
        let seq = table().embed_sequence(&tokenize("red green blue red"), 3);
        assert_eq!(seq.n(), 3);
        assert_eq!(seq.valid_len(), 3);
        assert_eq!(seq.vectors().row(1), ndarray::arr1(&[0.0, 0.0]));
        assert_eq!(seq.vectors().row(2), ndarray::arr1(&[0.0, 2.0]));
    }

    fn topic_corpus() -> Vec<TokenSequence> {
        // Two disjoint topics co-occurring internally.
        let mut docs = Vec::new();
        for _ in 0..60 {
            docs.push(tokenize("cat dog cat dog pet"));
            docs.push(tokenize("dog pet cat"));
            docs.push(tokenize("car bus car bus road"));
            docs.push(tokenize("bus road car"));
        }
        docs
    }

    #[test]
    fn training_separates_topics() {
        let config = W2vConfig {
            dim: 8,
            window: 2,
            negative: 4,
            epochs: 4,
            learning_rate: 0.05,
            min_count: 1,
            seed: 11,
        };
        let emb = fit_word2vec(&topic_corpus(), &config).unwrap();
        let same_topic = emb.cosine("cat", "dog").unwrap();
        let cross_topic = emb.cosine("cat", "car").unwrap();
        assert!(
            same_topic > cross_topic + 0.2,
            "cat~dog {same_topic:.3} vs cat~car {cross_topic:.3}"
        );
    }

    #[test]
    fn training_is_deterministic() {
        let config = W2vConfig {
            dim: 4,
            epochs: 1,
            ..W2vConfig::default()
        };
        let a = fit_word2vec(&topic_corpus(), &config).unwrap();
        let b = fit_word2vec(&topic_corpus(), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn save_load_round_trip() {
        let emb = table();
        let dir = tempfile::tempdir().unwrap();
        emb.save(dir.path()).unwrap();
        let loaded = StaticEmbeddings::load(dir.path()).unwrap();
        assert_eq!(emb, loaded);
    }
}
