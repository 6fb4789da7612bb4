//! TF-IDF vectorization.
//!
//! Fitting consumes training-fold documents only; the type system enforces
//! the leakage guard because a [`TfidfModel`] only exists after `fit` and
//! `transform` never updates it. Weights are raw term counts times smoothed
//! idf, L2-normalized per document:
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SparseFeatureVector, TokenSequence};
use crate::error::{Error, Result};
use crate::persist::{read_f64_array, write_f64_array};

/// Default vocabulary cap, keeping the most document-frequent terms.
pub const DEFAULT_VOCAB_CAP: usize = 50_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TfidfModel {
    vocab: Vec<String>,
    idf: Vec<f64>,
    n_documents: usize,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl PartialEq for TfidfModel {
    fn eq(&self, other: &Self) -> bool {
        self.vocab == other.vocab && self.idf == other.idf && self.n_documents == other.n_documents
    }
}

impl TfidfModel {
    /// Fit on training documents, keeping at most `vocab_cap` terms by
    /// descending document frequency (ties broken lexicographically).
    pub fn fit(documents: &[TokenSequence], vocab_cap: usize) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyInput {
                context: "tfidf fit".into(),
            });
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in documents {
            let mut seen: Vec<&str> = doc.tokens().iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for t in seen {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut terms: Vec<(&str, usize)> = df.into_iter().collect();
        terms.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        terms.truncate(vocab_cap);
        // The vocabulary itself is stored sorted so that indices are stable
        // and transform output is ordered.
        let mut vocab: Vec<String> = terms.iter().map(|(t, _)| t.to_string()).collect();
        let df_by_term: HashMap<String, usize> = terms
            .iter()
            .map(|(t, c)| (t.to_string(), *c))
            .collect();
        vocab.sort_unstable();

        let n = documents.len() as f64;
        let idf: Vec<f64> = vocab
            .iter()
            .map(|t| ((1.0 + n) / (1.0 + df_by_term[t] as f64)).ln() + 1.0)
            .collect();
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            vocab,
            idf,
            n_documents: documents.len(),
            index,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn idf_of(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.idf[i as usize])
    }

    /// Transform a token sequence into an L2-normalized tf-idf vector.
    /// Out-of-vocabulary tokens contribute nothing.
    pub fn transform(&self, tokens: &TokenSequence) -> SparseFeatureVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for t in tokens.tokens() {
            if let Some(&i) = self.index.get(t.as_str()) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        let mut indices = Vec::with_capacity(counts.len());
        let mut values = Vec::with_capacity(counts.len());
        for (i, tf) in counts {
            indices.push(i);
            values.push(tf * self.idf[i as usize]);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut values {
                *v /= norm;
            }
        }
        SparseFeatureVector::new(indices, values, self.vocab_size())
            .expect("transform output is well-formed")
    }

    /// Persist as `vocab.txt` (one token per line) plus a binary idf array
    /// with a JSON header.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let vocab_path = dir.join("vocab.txt");
        std::fs::write(&vocab_path, self.vocab.join("\n") + "\n")
            .map_err(|e| Error::io(&vocab_path, e))?;
        write_f64_array(dir, "idf", &self.idf, &[self.idf.len()])?;
        let meta = serde_json::json!({
            "schema_version": 1,
            "kind": "tfidf",
            "n_documents": self.n_documents,
        });
        let meta_path = dir.join("tfidf.json");
        std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)
            .map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocab_path = dir.join("vocab.txt");
        let raw = std::fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
        let vocab: Vec<String> = raw.lines().map(str::to_string).collect();
        let (idf, shape) = read_f64_array(dir, "idf")?;
        if shape != [vocab.len()] {
            return Err(Error::malformed(
                dir,
                format!("idf table length {shape:?} does not match vocabulary {}", vocab.len()),
            ));
        }
        let meta_path = dir.join("tfidf.json");
        let meta: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?,
        )?;
        let n_documents = meta["n_documents"].as_u64().unwrap_or(0) as usize;
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            vocab,
            idf,
            n_documents,
            index,
        })
    }
}
