//! Fitting and applying feature extractors.
//!
//! The leakage guard is structural: [`FeatureExtractor::fit`] receives only
//! the training-fold texts, and the resulting extractor is immutable, so a
//! held-out fold can never influence vocabulary, idf or embedding tables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::encoder::{ContextualEncoder, EncoderMode};
use super::tfidf::DEFAULT_VOCAB_CAP;
use super::word2vec::{fit_word2vec, StaticEmbeddings, W2vConfig};
use super::{normalize_text, tokenize, EmbeddingSequence, SparseFeatureVector, TfidfModel};
use crate::error::{Error, Result};

/// Which feature representation to bind a model to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Tfidf,
    W2v,
    Contextual,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FeatureKind::Tfidf => "tfidf",
            FeatureKind::W2v => "w2v",
            FeatureKind::Contextual => "contextual",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(FeatureKind::Tfidf),
            "w2v" => Ok(FeatureKind::W2v),
            "contextual" => Ok(FeatureKind::Contextual),
            other => Err(Error::InvalidConfig {
                message: format!("unknown feature kind {other:?} (expected tfidf|w2v|contextual)"),
            }),
        }
    }
}

/// Feature-extraction hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSettings {
    /// TF-IDF vocabulary cap by document frequency.
    pub tfidf_vocab_cap: usize,
    pub w2v: W2vConfig,
    /// Token cap for embedding sequences.
    pub max_len: usize,
    /// Contextual encoder artifact directory.
    pub encoder_artifact: Option<PathBuf>,
    pub encoder_mode: EncoderMode,
}

impl Default for FeatureSettings {
    fn default() -> Self {
        Self {
            tfidf_vocab_cap: DEFAULT_VOCAB_CAP,
            w2v: W2vConfig::default(),
            max_len: 256,
            encoder_artifact: None,
            encoder_mode: EncoderMode::Frozen,
        }
    }
}

impl FeatureSettings {
    pub fn load_encoder(&self) -> Result<Arc<ContextualEncoder>> {
        let dir = self.encoder_artifact.as_deref().ok_or_else(|| {
            Error::EncoderArtifactMissing {
                path: PathBuf::from("<features.encoder_artifact unset>"),
            }
        })?;
        Ok(Arc::new(ContextualEncoder::load(dir, self.encoder_mode)?))
    }
}

/// Extracted features for a batch of samples, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureData {
    Sparse(Vec<SparseFeatureVector>),
    Dense(Vec<Array1<f64>>),
    Sequences(Vec<EmbeddingSequence>),
}

impl FeatureData {
    pub fn len(&self) -> usize {
        match self {
            FeatureData::Sparse(v) => v.len(),
            FeatureData::Dense(v) => v.len(),
            FeatureData::Sequences(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension of vector features / embedding rows.
    pub fn dim(&self) -> usize {
        match self {
            FeatureData::Sparse(v) => v.first().map_or(0, |x| x.vocab_size()),
            FeatureData::Dense(v) => v.first().map_or(0, |x| x.len()),
            FeatureData::Sequences(v) => v.first().map_or(0, |x| x.dim()),
        }
    }
}

/// A fitted, immutable feature model.
#[derive(Debug, Clone)]
pub enum FeatureExtractor {
    Tfidf(TfidfModel),
    W2v {
        table: StaticEmbeddings,
        max_len: usize,
    },
    Contextual {
        encoder: Arc<ContextualEncoder>,
        max_len: usize,
    },
}

impl FeatureExtractor {
    /// Fit on training texts only. For the contextual kind, `encoder` must
    /// carry the preloaded artifact (it is corpus-independent).
    pub fn fit(
        kind: FeatureKind,
        settings: &FeatureSettings,
        train_texts: &[&str],
        encoder: Option<Arc<ContextualEncoder>>,
    ) -> Result<Self> {
        match kind {
            FeatureKind::Tfidf => {
                let docs: Vec<_> = train_texts
                    .iter()
                    .map(|t| tokenize(&normalize_text(t)))
                    .collect();
                Ok(FeatureExtractor::Tfidf(TfidfModel::fit(
                    &docs,
                    settings.tfidf_vocab_cap,
                )?))
            }
            FeatureKind::W2v => {
                let docs: Vec<_> = train_texts
                    .iter()
                    .map(|t| tokenize(&normalize_text(t)))
                    .collect();
                let table = fit_word2vec(&docs, &settings.w2v)?;
                Ok(FeatureExtractor::W2v {
                    table,
                    max_len: settings.max_len,
                })
            }
            FeatureKind::Contextual => {
                let encoder = match encoder {
                    Some(e) => e,
                    None => settings.load_encoder()?,
                };
                Ok(FeatureExtractor::Contextual {
                    encoder,
                    max_len: settings.max_len,
                })
            }
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureExtractor::Tfidf(_) => FeatureKind::Tfidf,
            FeatureExtractor::W2v { .. } => FeatureKind::W2v,
            FeatureExtractor::Contextual { .. } => FeatureKind::Contextual,
        }
    }

    /// Fixed-length vector features for the classical models.
    pub fn transform_vectors(&self, texts: &[&str]) -> Result<FeatureData> {
        match self {
            FeatureExtractor::Tfidf(model) => Ok(FeatureData::Sparse(
                texts
                    .iter()
                    .map(|t| model.transform(&tokenize(&normalize_text(t))))
                    .collect(),
            )),
            FeatureExtractor::W2v { table, .. } => Ok(FeatureData::Dense(
                texts
                    .iter()
                    .map(|t| table.embed_static(&tokenize(&normalize_text(t))).0)
                    .collect(),
            )),
            FeatureExtractor::Contextual { encoder, max_len } => {
                let mut out = Vec::with_capacity(texts.len());
                for t in texts {
                    out.push(encoder.encode(t, *max_len)?.masked_mean());
                }
                Ok(FeatureData::Dense(out))
            }
        }
    }

    /// Per-token embedding sequences for the sequence models. TF-IDF has
    /// no sequence form.
    pub fn transform_sequences(&self, texts: &[&str]) -> Result<FeatureData> {
        match self {
            FeatureExtractor::Tfidf(_) => Err(Error::UnsupportedPairing {
                model: "sequence model".into(),
                features: "tfidf".into(),
            }),
            FeatureExtractor::W2v { table, max_len } => Ok(FeatureData::Sequences(
                texts
                    .iter()
                    .map(|t| table.embed_sequence(&tokenize(&normalize_text(t)), *max_len))
                    .collect(),
            )),
            FeatureExtractor::Contextual { encoder, max_len } => {
                let mut out = Vec::with_capacity(texts.len());
                for t in texts {
                    out.push(encoder.encode(t, *max_len)?);
                }
                Ok(FeatureData::Sequences(out))
            }
        }
    }

    /// Persist into `dir` so a saved model can re-create its features.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (kind, max_len) = match self {
            FeatureExtractor::Tfidf(model) => {
                model.save(&dir.join("tfidf"))?;
                ("tfidf", None)
            }
            FeatureExtractor::W2v { table, max_len } => {
                table.save(&dir.join("w2v"))?;
                ("w2v", Some(*max_len))
            }
            FeatureExtractor::Contextual { encoder, max_len } => {
                let lock = serde_json::json!({
                    "name": encoder.name(),
                    "revision": encoder.revision(),
                });
                let lock_path = dir.join("encoder.lock");
                std::fs::write(&lock_path, serde_json::to_string_pretty(&lock)?)
                    .map_err(|e| Error::io(&lock_path, e))?;
                ("contextual", Some(*max_len))
            }
        };
        let meta = serde_json::json!({ "kind": kind, "max_len": max_len });
        let meta_path = dir.join("features.json");
        std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
            .map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    /// Load from `dir`. Contextual extractors re-open the encoder artifact
    /// named in `settings` and verify its revision against the lockfile.
    pub fn load(dir: &Path, settings: &FeatureSettings) -> Result<Self> {
        let meta_path = dir.join("features.json");
        let meta: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(&meta_path).map_err(|e| Error::ArtifactMissing {
                path: dir.to_path_buf(),
                message: e.to_string(),
            })?,
        )?;
        let max_len = meta["max_len"].as_u64().map(|v| v as usize);
        match meta["kind"].as_str() {
            Some("tfidf") => Ok(FeatureExtractor::Tfidf(TfidfModel::load(
                &dir.join("tfidf"),
            )?)),
            Some("w2v") => Ok(FeatureExtractor::W2v {
                table: StaticEmbeddings::load(&dir.join("w2v"))?,
                max_len: max_len.unwrap_or(settings.max_len),
            }),
            Some("contextual") => {
                let encoder = settings.load_encoder()?;
                let lock_path = dir.join("encoder.lock");
                let lock: serde_json::Value = serde_json::from_str(
                    &std::fs::read_to_string(&lock_path).map_err(|e| Error::io(&lock_path, e))?,
                )?;
                let expected = lock["revision"].as_str().unwrap_or_default();
                if encoder.revision() != expected {
                    return Err(Error::ChecksumMismatch {
                        file: format!(
                            "encoder artifact (revision {} does not match lockfile {})",
                            encoder.revision(),
                            expected
                        ),
                    });
                }
                Ok(FeatureExtractor::Contextual {
                    encoder,
                    max_len: max_len.unwrap_or(settings.max_len),
                })
            }
            other => Err(Error::malformed(
                &meta_path,
                format!("unknown feature kind {other:?}"),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::encoder::EncoderInit;

    #[test]
    fn tfidf_fit_never_sees_test_texts() {
        // The held-out token is simply absent from the fitted vocabulary.
        let extractor = FeatureExtractor::fit(
            FeatureKind::Tfidf,
            &FeatureSettings::default(),
            &["train token alpha", "train token beta"],
            None,
        )
        .unwrap();
        let FeatureData::Sparse(vecs) = extractor
            .transform_vectors(&["heldout gamma alpha"])
            .unwrap()
        else {
            panic!("tfidf yields sparse vectors");
        };
        assert_eq!(vecs[0].nnz(), 1);
    }

    #[test]
    fn sequences_from_tfidf_are_rejected() {
        let extractor = FeatureExtractor::fit(
            FeatureKind::Tfidf,
            &FeatureSettings::default(),
            &["a b", "c d"],
            None,
        )
        .unwrap();
        assert!(matches!(
            extractor.transform_sequences(&["a"]),
            Err(Error::UnsupportedPairing { .. })
        ));
    }

    #[test]
    fn w2v_round_trip_through_save_load() {
        let settings = FeatureSettings {
            w2v: W2vConfig {
                dim: 4,
                epochs: 1,
                ..W2vConfig::default()
            },
            ..FeatureSettings::default()
        };
        let extractor = FeatureExtractor::fit(
            FeatureKind::W2v,
            &settings,
            &["a b a b", "c d c d"],
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        extractor.save(dir.path()).unwrap();
        let loaded = FeatureExtractor::load(dir.path(), &settings).unwrap();
        let a = extractor.transform_vectors(&["a b"]).unwrap();
        let b = loaded.transform_vectors(&["a b"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn contextual_load_verifies_revision() {
        let enc_dir = tempfile::tempdir().unwrap();
        EncoderInit {
            dim: 8,
            layers: 0,
            heads: 2,
            ff_dim: 8,
            max_positions: 16,
            seed: 1,
            name: "t".into(),
        }
        .generate(enc_dir.path(), &[])
        .unwrap();
        let settings = FeatureSettings {
            encoder_artifact: Some(enc_dir.path().to_path_buf()),
            max_len: 8,
            ..FeatureSettings::default()
        };
        let extractor =
            FeatureExtractor::fit(FeatureKind::Contextual, &settings, &[], None).unwrap();
        let save_dir = tempfile::tempdir().unwrap();
        extractor.save(save_dir.path()).unwrap();
        FeatureExtractor::load(save_dir.path(), &settings).unwrap();

        // Regenerate the artifact with a different seed: revision changes,
        // load must refuse.
        EncoderInit {
            dim: 8,
            layers: 0,
            heads: 2,
            ff_dim: 8,
            max_positions: 16,
            seed: 2,
            name: "t".into(),
        }
        .generate(enc_dir.path(), &[])
        .unwrap();
        assert!(matches!(
            FeatureExtractor::load(save_dir.path(), &settings),
            Err(Error::ChecksumMismatch { .. })
        ));
    }
}
