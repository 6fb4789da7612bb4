//! The contextual encoder: a bidirectional transformer consumed as a
//! versioned artifact directory, run in inference mode to produce
//! per-token embedding sequences from its final hidden layer.
//!
//! Artifact layout:
//!
//! ```text
//! <dir>/encoder.json   architecture header (dim, layers, heads, ...)
//! <dir>/vocab.txt      subword vocabulary, one piece per line
//! <dir>/weights.bin    named-tensor container
//! <dir>/encoder.lock   { name, revision } — revision pins the weights
//! ```
//!
//! Weights converted from any encoder with this geometry drop in; the
//! [`EncoderInit`] generator builds seeded random-weight artifacts for
//! tests and desk-scale runs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use ndarray::{s, Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{normalize_text, tokenize, EmbeddingSequence};
use crate::error::{Error, Result};
use crate::persist::{read_tensors, sha256_file, write_tensors};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

const ENCODER_SCHEMA_VERSION: u32 = 1;

/// Whether to consume the base artifact or a fine-tuned revision of it.
///
/// Fine-tuning happens out of process; `FineTuned` selects the
/// `fine-tuned/` sub-artifact written by whatever produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    #[default]
    Frozen,
    FineTuned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EncoderHeader {
    schema_version: u32,
    name: String,
    dim: usize,
    layers: usize,
    heads: usize,
    ff_dim: usize,
    max_positions: usize,
    layer_norm_eps: f64,
}

#[derive(Debug, Clone)]
struct LayerNorm {
    gamma: Array1<f64>,
    beta: Array1<f64>,
    eps: f64,
}

impl LayerNorm {
    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            let mean = row.mean().expect("non-empty row");
            let var = row.mapv(|v| (v - mean) * (v - mean)).mean().expect("non-empty");
            let denom = (var + self.eps).sqrt();
            row.zip_mut_with(&self.gamma, |v, &g| *v = (*v - mean) / denom * g);
            row += &self.beta;
        }
        out
    }
}

#[derive(Debug, Clone)]
struct EncoderLayer {
    wq: Array2<f64>,
    bq: Array1<f64>,
    wk: Array2<f64>,
    bk: Array1<f64>,
    wv: Array2<f64>,
    bv: Array1<f64>,
    wo: Array2<f64>,
    bo: Array1<f64>,
    ln1: LayerNorm,
    ff1_w: Array2<f64>,
    ff1_b: Array1<f64>,
    ff2_w: Array2<f64>,
    ff2_b: Array1<f64>,
    ln2: LayerNorm,
}

/// A loaded encoder artifact. Immutable; encoding is pure.
#[derive(Debug, Clone)]
pub struct ContextualEncoder {
    header: EncoderHeader,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    token_emb: Array2<f64>,
    pos_emb: Array2<f64>,
    emb_ln: LayerNorm,
    layers: Vec<EncoderLayer>,
    revision: String,
}

fn gelu(x: f64) -> f64 {
    // tanh approximation
    0.5 * x * (1.0 + ((2.0 / std::f64::consts::PI).sqrt() * (x + 0.044715 * x * x * x)).tanh())
}

impl ContextualEncoder {
    pub fn dim(&self) -> usize {
        self.header.dim
    }

    pub fn name(&self) -> &str {
        &self.header.name
    }

    /// SHA-256 of the weight container; recorded in the lockfile.
    pub fn revision(&self) -> &str {
        &self.revision
    }

    pub fn max_positions(&self) -> usize {
        self.header.max_positions
    }

    /// Load the artifact at `dir`, honoring [`EncoderMode`].
    pub fn load(dir: &Path, mode: EncoderMode) -> Result<Self> {
        let dir: PathBuf = match mode {
            EncoderMode::Frozen => dir.to_path_buf(),
            EncoderMode::FineTuned => dir.join("fine-tuned"),
        };
        let header_path = dir.join("encoder.json");
        if !header_path.is_file() {
            return Err(Error::EncoderArtifactMissing { path: dir });
        }
        let header: EncoderHeader = serde_json::from_str(
            &std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?,
        )?;
        if header.schema_version > ENCODER_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: header.schema_version,
                supported: ENCODER_SCHEMA_VERSION,
            });
        }
        if header.dim % header.heads != 0 {
            return Err(Error::InvalidConfig {
                message: format!(
                    "encoder dim {} not divisible by heads {}",
                    header.dim, header.heads
                ),
            });
        }

        let vocab_path = dir.join("vocab.txt");
        let raw = std::fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let vocab: Vec<String> = raw.lines().map(str::to_string).collect();
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        for special in [PAD, UNK, CLS, SEP] {
            if !index.contains_key(special) {
                return Err(Error::malformed(
                    &vocab_path,
                    format!("vocabulary lacks the {special} token"),
                ));
            }
        }

        let weights_path = dir.join("weights.bin");
        let revision = format!("sha256:{}", sha256_file(&weights_path)?);
        let tensors: HashMap<String, (Vec<f64>, Vec<usize>)> = read_tensors(&weights_path)?
            .into_iter()
            .map(|(n, d, s)| (n, (d, s)))
            .collect();

        let get2 = |name: &str, rows: usize, cols: usize| -> Result<Array2<f64>> {
            let (data, shape) = tensors
                .get(name)
                .ok_or_else(|| Error::malformed(&weights_path, format!("missing tensor {name}")))?;
            if shape != &[rows, cols] {
                return Err(Error::malformed(
                    &weights_path,
                    format!("tensor {name}: expected [{rows}, {cols}], got {shape:?}"),
                ));
            }
            Ok(Array2::from_shape_vec((rows, cols), data.clone()).expect("shape checked"))
        };
        let get1 = |name: &str, len: usize| -> Result<Array1<f64>> {
            let (data, shape) = tensors
                .get(name)
                .ok_or_else(|| Error::malformed(&weights_path, format!("missing tensor {name}")))?;
            if shape != &[len] {
                return Err(Error::malformed(
                    &weights_path,
                    format!("tensor {name}: expected [{len}], got {shape:?}"),
                ));
            }
            Ok(Array1::from_vec(data.clone()))
        };

        let d = header.dim;
        let eps = header.layer_norm_eps;
        let token_emb = get2("embeddings.token", vocab.len(), d)?;
        let pos_emb = get2("embeddings.position", header.max_positions, d)?;
        let emb_ln = LayerNorm {
            gamma: get1("embeddings.ln.gamma", d)?,
            beta: get1("embeddings.ln.beta", d)?,
            eps,
        };
        let mut layers = Vec::with_capacity(header.layers);
        for i in 0..header.layers {
            let p = |suffix: &str| format!("layer.{i}.{suffix}");
            layers.push(EncoderLayer {
                wq: get2(&p("attn.q.w"), d, d)?,
                bq: get1(&p("attn.q.b"), d)?,
                wk: get2(&p("attn.k.w"), d, d)?,
                bk: get1(&p("attn.k.b"), d)?,
                wv: get2(&p("attn.v.w"), d, d)?,
                bv: get1(&p("attn.v.b"), d)?,
                wo: get2(&p("attn.o.w"), d, d)?,
                bo: get1(&p("attn.o.b"), d)?,
                ln1: LayerNorm {
                    gamma: get1(&p("ln1.gamma"), d)?,
                    beta: get1(&p("ln1.beta"), d)?,
                    eps,
                },
                ff1_w: get2(&p("ff.w1"), header.ff_dim, d)?,
                ff1_b: get1(&p("ff.b1"), header.ff_dim)?,
                ff2_w: get2(&p("ff.w2"), d, header.ff_dim)?,
                ff2_b: get1(&p("ff.b2"), d)?,
                ln2: LayerNorm {
                    gamma: get1(&p("ln2.gamma"), d)?,
                    beta: get1(&p("ln2.beta"), d)?,
                    eps,
                },
            });
        }

        Ok(Self {
            header,
            vocab,
            index,
            token_emb,
            pos_emb,
            emb_ln,
            layers,
            revision,
        })
    }

    fn piece_id(&self, piece: &str) -> Option<u32> {
        self.index.get(piece).copied()
    }

    /// Greedy longest-match-first subword split of a single word.
    fn wordpiece(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > 64 {
            out.push(self.piece_id(UNK).expect("vocab has UNK"));
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0usize;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while end > start {
                let mut candidate: String = chars[start..end].iter().collect();
                if start > 0 {
                    candidate = format!("##{candidate}");
                }
                if let Some(id) = self.piece_id(&candidate) {
                    found = Some(id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => {
                    pieces.push(id);
                    start = end;
                }
                None => {
                    out.push(self.piece_id(UNK).expect("vocab has UNK"));
                    return;
                }
            }
        }
        out.extend(pieces);
    }

    /// Normalize, subword-tokenize and wrap with `[CLS]`/`[SEP]`, keeping
    /// at most `max_len` positions.
    pub fn tokenize_ids(&self, text: &str, max_len: usize) -> Vec<u32> {
        let normalized = normalize_text(text);
        let words = tokenize(&normalized);
        let mut ids = vec![self.piece_id(CLS).expect("vocab has CLS")];
        for word in words.tokens() {
            self.wordpiece(word, &mut ids);
        }
        ids.truncate(max_len.saturating_sub(1).max(1));
        ids.push(self.piece_id(SEP).expect("vocab has SEP"));
        ids
    }

    /// Run the encoder stack over token ids; rows of the result are the
    /// final hidden layer.
    pub fn forward_ids(&self, ids: &[u32]) -> Result<Array2<f64>> {
        if ids.is_empty() {
            return Err(Error::EmptyInput {
                context: "encoder forward".into(),
            });
        }
        if ids.len() > self.header.max_positions {
            return Err(Error::InvalidConfig {
                message: format!(
                    "sequence length {} exceeds encoder positional capacity {}",
                    ids.len(),
                    self.header.max_positions
                ),
            });
        }
        let n = ids.len();
        let d = self.header.dim;
        let mut x = Array2::zeros((n, d));
        for (row, &id) in ids.iter().enumerate() {
            let token = self.token_emb.row(id as usize);
            let pos = self.pos_emb.row(row);
            x.row_mut(row).assign(&(&token + &pos));
        }
        x = self.emb_ln.apply(&x);

        let heads = self.header.heads;
        let dk = d / heads;
        let scale = 1.0 / (dk as f64).sqrt();
        for layer in &self.layers {
            let q = x.dot(&layer.wq.t()) + &layer.bq;
            let k = x.dot(&layer.wk.t()) + &layer.bk;
            let v = x.dot(&layer.wv.t()) + &layer.bv;

            let mut ctx = Array2::zeros((n, d));
            for h in 0..heads {
                let cols = s![.., h * dk..(h + 1) * dk];
                let qh = q.slice(cols);
                let kh = k.slice(cols);
                let vh = v.slice(cols);
                let mut scores = qh.dot(&kh.t()) * scale;
                for mut row in scores.rows_mut() {
                    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|s| (s - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|s| s / sum);
                }
                ctx.slice_mut(cols).assign(&scores.dot(&vh));
            }
            let attn = ctx.dot(&layer.wo.t()) + &layer.bo;
            x = layer.ln1.apply(&(&x + &attn));

            let hidden = (x.dot(&layer.ff1_w.t()) + &layer.ff1_b).mapv(gelu);
            let ff = hidden.dot(&layer.ff2_w.t()) + &layer.ff2_b;
            x = layer.ln2.apply(&(&x + &ff));
        }

        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "encoder output".into(),
            });
        }
        Ok(x)
    }

    /// Encode `text` into per-token vectors from the final hidden layer,
    /// truncated to `max_len`. Never empty: even blank text yields the
    /// `[CLS]`/`[SEP]` positions.
    pub fn encode(&self, text: &str, max_len: usize) -> Result<EmbeddingSequence> {
        if max_len > self.header.max_positions {
            return Err(Error::InvalidConfig {
                message: format!(
                    "max_len {} exceeds encoder positional capacity {}",
                    max_len, self.header.max_positions
                ),
            });
        }
        let ids = self.tokenize_ids(text, max_len);
        let hidden = self.forward_ids(&ids)?;
        let n = hidden.nrows();
        EmbeddingSequence::new(hidden, n)
    }
}

/// Convenience wrapper matching the pipeline's operation vocabulary.
pub fn encode_contextual(
    encoder: &ContextualEncoder,
    text: &str,
    max_len: usize,
) -> Result<EmbeddingSequence> {
    encoder.encode(text, max_len)
}

/// Generator for seeded random-weight encoder artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderInit {
    pub name: String,
    pub dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub max_positions: usize,
    pub seed: u64,
}

impl Default for EncoderInit {
    fn default() -> Self {
        Self {
            name: "random-encoder".into(),
            dim: super::CONTEXTUAL_DIM,
            layers: 2,
            heads: 4,
            ff_dim: 1024,
            max_positions: 512,
            seed: 0,
        }
    }
}

impl EncoderInit {
    /// Write a random-initialized artifact whose subword vocabulary is the
    /// special tokens, the given whole words, and `a`-`z` single
    /// characters with their `##` continuations as a fallback.
    pub fn generate(&self, dir: &Path, words: &[String]) -> Result<()> {
        if self.dim % self.heads != 0 {
            return Err(Error::InvalidConfig {
                message: format!("dim {} not divisible by heads {}", self.dim, self.heads),
            });
        }
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut vocab: Vec<String> = vec![PAD.into(), UNK.into(), CLS.into(), SEP.into()];
        for c in 'a'..='z' {
            vocab.push(c.to_string());
            vocab.push(format!("##{c}"));
        }
        for c in '0'..='9' {
            vocab.push(c.to_string());
            vocab.push(format!("##{c}"));
        }
        for w in words {
            if !vocab.iter().any(|v| v == w) {
                vocab.push(w.clone());
            }
        }

        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, 0.02).expect("valid distribution");
        let mut sample = |len: usize| -> Vec<f64> {
            (0..len).map(|_| normal.sample(&mut rng)).collect()
        };
        let d = self.dim;

        let token_emb = sample(vocab.len() * d);
        let pos_emb = sample(self.max_positions * d);
        let ones = vec![1.0; d];
        let zeros = vec![0.0; d];

        let mut owned: Vec<(String, Vec<f64>, Vec<usize>)> = vec![
            ("embeddings.token".into(), token_emb, vec![vocab.len(), d]),
            ("embeddings.position".into(), pos_emb, vec![self.max_positions, d]),
            ("embeddings.ln.gamma".into(), ones.clone(), vec![d]),
            ("embeddings.ln.beta".into(), zeros.clone(), vec![d]),
        ];
        for i in 0..self.layers {
            let p = |suffix: &str| format!("layer.{i}.{suffix}");
            for mat in ["attn.q", "attn.k", "attn.v", "attn.o"] {
                owned.push((p(&format!("{mat}.w")), sample(d * d), vec![d, d]));
                owned.push((p(&format!("{mat}.b")), zeros.clone(), vec![d]));
            }
            owned.push((p("ln1.gamma"), ones.clone(), vec![d]));
            owned.push((p("ln1.beta"), zeros.clone(), vec![d]));
            owned.push((p("ff.w1"), sample(self.ff_dim * d), vec![self.ff_dim, d]));
            owned.push((p("ff.b1"), vec![0.0; self.ff_dim], vec![self.ff_dim]));
            owned.push((p("ff.w2"), sample(d * self.ff_dim), vec![d, self.ff_dim]));
            owned.push((p("ff.b2"), zeros.clone(), vec![d]));
            owned.push((p("ln2.gamma"), ones.clone(), vec![d]));
            owned.push((p("ln2.beta"), zeros.clone(), vec![d]));
        }
        let refs: Vec<(&str, &[f64], &[usize])> = owned
            .iter()
            .map(|(n, d, s)| (n.as_str(), d.as_slice(), s.as_slice()))
            .collect();
        let weights_path = dir.join("weights.bin");
        write_tensors(&weights_path, &refs)?;

        let vocab_path = dir.join("vocab.txt");
        std::fs::write(&vocab_path, vocab.join("\n") + "\n")
            .map_err(|e| Error::io(&vocab_path, e))?;

        let header = EncoderHeader {
            schema_version: ENCODER_SCHEMA_VERSION,
            name: self.name.clone(),
            dim: self.dim,
            layers: self.layers,
            heads: self.heads,
            ff_dim: self.ff_dim,
            max_positions: self.max_positions,
            layer_norm_eps: 1e-12,
        };
        let header_path = dir.join("encoder.json");
        std::fs::write(&header_path, serde_json::to_string_pretty(&header)?)
            .map_err(|e| Error::io(&header_path, e))?;

        let lock = serde_json::json!({
            "name": self.name,
            "revision": format!("sha256:{}", sha256_file(&weights_path)?),
        });
        let lock_path = dir.join("encoder.lock");
        std::fs::write(&lock_path, serde_json::to_string_pretty(&lock)?)
            .map_err(|e| Error::io(&lock_path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_encoder(dir: &Path, layers: usize) -> ContextualEncoder {
        EncoderInit {
            name: "tiny".into(),
            dim: 16,
            layers,
            heads: 2,
            ff_dim: 24,
            max_positions: 32,
            seed: 5,
        }
        .generate(dir, &["hello".into(), "world".into()])
        .unwrap();
        ContextualEncoder::load(dir, EncoderMode::Frozen).unwrap()
    }

    #[test]
    fn encode_has_configured_dim_and_wraps_specials() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 1);
        let seq = enc.encode("hello world", 32).unwrap();
        assert_eq!(seq.dim(), 16);
        // [CLS] hello world [SEP]
        assert_eq!(seq.n(), 4);
        assert_eq!(seq.valid_len(), 4);
    }

    #[test]
    fn truncation_respects_max_len() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 0);
        let long = vec!["hello"; 60].join(" ");
        let seq = enc.encode(&long, 8).unwrap();
        assert_eq!(seq.n(), 8);
    }

    #[test]
    fn encoding_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 2);
        let a = enc.encode("hello world", 32).unwrap();
        let b = enc.encode("hello world", 32).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn embeddings_are_contextual_with_attention_layers() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 1);
        // "hello" at position 1 in two different contexts.
        let a = enc.encode("hello world", 32).unwrap();
        let b = enc.encode("hello hello", 32).unwrap();
        let va = a.vectors().row(1).to_owned();
        let vb = b.vectors().row(1).to_owned();
        assert_ne!(va, vb, "same token in different contexts must differ");
    }

    #[test]
    fn zero_layer_artifact_is_positional_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 0);
        let a = enc.encode("hello world", 32).unwrap();
        let b = enc.encode("hello there", 32).unwrap();
        // Without attention the vector for (token, position) is fixed.
        assert_eq!(a.vectors().row(1), b.vectors().row(1));
    }

    #[test]
    fn wordpiece_falls_back_through_characters_to_unk() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 0);
        // "hi" is not a whole-word entry but h/##i are.
        let ids = enc.tokenize_ids("hi", 32);
        assert_eq!(ids.len(), 4); // CLS h ##i SEP
        // A character outside the vocabulary becomes UNK.
        let ids = enc.tokenize_ids("héllo", 32);
        assert!(ids.contains(&enc.piece_id(UNK).unwrap()));
    }

    #[test]
    fn empty_text_still_encodes() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 0);
        let seq = enc.encode("", 32).unwrap();
        assert_eq!(seq.n(), 2); // CLS SEP
    }

    #[test]
    fn missing_artifact_error_mentions_remediation() {
        let dir = tempfile::tempdir().unwrap();
        let err = ContextualEncoder::load(&dir.path().join("nope"), EncoderMode::Frozen)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("encoder artifact not found"));
        assert!(msg.contains("README"));
    }

    #[test]
    fn fine_tuned_mode_loads_subdirectory() {
        let dir = tempfile::tempdir().unwrap();
        let _ = tiny_encoder(dir.path(), 0);
        assert!(matches!(
            ContextualEncoder::load(dir.path(), EncoderMode::FineTuned),
            Err(Error::EncoderArtifactMissing { .. })
        ));
        EncoderInit {
            name: "tiny-ft".into(),
            dim: 16,
            layers: 0,
            heads: 2,
            ff_dim: 24,
            max_positions: 32,
            seed: 9,
        }
        .generate(&dir.path().join("fine-tuned"), &[])
        .unwrap();
        let ft = ContextualEncoder::load(dir.path(), EncoderMode::FineTuned).unwrap();
        assert_eq!(ft.name(), "tiny-ft");
    }

    #[test]
    fn revision_matches_lockfile() {
        let dir = tempfile::tempdir().unwrap();
        let enc = tiny_encoder(dir.path(), 0);
        let lock: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("encoder.lock")).unwrap(),
        )
        .unwrap();
        assert_eq!(lock["revision"].as_str().unwrap(), enc.revision());
    }
}
