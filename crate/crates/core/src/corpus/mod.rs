//! The unified labeled corpus: loading the three source datasets, merging
//! them with imbalance statistics, and stratified k-fold splitting.

mod loaders;
mod split;
pub mod synth;

pub use loaders::{
    load_darkweb, load_pan12, load_pan12_with_predators, load_roman_urdu,
    load_roman_urdu_with_mapping, LabelMapping, LoadOutcome, RecordError,
};
pub use split::{stratified_kfold, stratified_kfold_with_tolerance, FoldAssignment,
    DEFAULT_STRATIFICATION_TOLERANCE};

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Binary class label; `Abusive` is the positive class everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Abusive,
    NonAbusive,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Abusive => write!(f, "abusive"),
            Label::NonAbusive => write!(f, "non_abusive"),
        }
    }
}

/// Which of the three source datasets a sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Darkweb,
    Pan12,
    RomanUrdu,
}

impl Source {
    /// Namespace prefix applied to local ids at merge time.
    pub fn prefix(&self) -> &'static str {
        match self {
            Source::Darkweb => "darkweb",
            Source::Pan12 => "pan12",
            Source::RomanUrdu => "roman_urdu",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.prefix())
    }
}

/// One labeled text with source provenance; the corpus atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
}

impl TextSample {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        label: Label,
        source: Source,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidConfig {
                message: "sample text is empty after stripping whitespace".into(),
            });
        }
        Ok(Self {
            id: id.into(),
            text,
            label,
            source,
        })
    }
}

/// Corpus-level class counts and the 1:x imbalance ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_abusive: usize,
    pub n_non_abusive: usize,
    /// `n_non_abusive / n_abusive`, i.e. the x of a 1:x ratio.
    pub ratio: f64,
    /// Per source: (abusive, non_abusive).
    pub per_source_counts: BTreeMap<Source, (usize, usize)>,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.n_abusive + self.n_non_abusive
    }
}

/// An id-unique, deterministically ordered collection of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    samples: Vec<TextSample>,
}

impl Corpus {
    /// Build from already-namespaced samples, enforcing id uniqueness.
    pub fn from_samples(samples: Vec<TextSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.id.as_str()) {
                return Err(Error::DuplicateId { id: s.id.clone() });
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[TextSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn stats(&self) -> CorpusStats {
        compute_stats(&self.samples)
    }

    /// SHA-256 over the canonical JSON Lines serialization; identifies the
    /// corpus a report was computed on.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for s in &self.samples {
            hasher.update(serde_json::to_string(s).expect("sample serializes"));
            hasher.update(b"\n");
        }
        format!("sha256:{:x}", hasher.finalize())
    }

    /// Write as JSON Lines, one `{id, text, label, source}` object per row.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.samples {
            serde_json::to_writer(&mut w, s)?;
            w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut samples = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let sample: TextSample = serde_json::from_str(&line).map_err(|e| {
                Error::MalformedFile {
                    path: "<jsonl>".into(),
                    message: format!("line {}: {}", i + 1, e),
                }
            })?;
            samples.push(sample);
        }
        Self::from_samples(samples)
    }

    pub fn load_jsonl(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

fn compute_stats(samples: &[TextSample]) -> CorpusStats {
    let mut n_abusive = 0;
    let mut n_non_abusive = 0;
    let mut per_source: BTreeMap<Source, (usize, usize)> = BTreeMap::new();
    for s in samples {
        let entry = per_source.entry(s.source).or_insert((0, 0));
        match s.label {
            Label::Abusive => {
                n_abusive += 1;
                entry.0 += 1;
            }
            Label::NonAbusive => {
                n_non_abusive += 1;
                entry.1 += 1;
            }
        }
    }
    let ratio = if n_abusive == 0 {
        f64::INFINITY
    } else {
        n_non_abusive as f64 / n_abusive as f64
    };
    CorpusStats {
        n_abusive,
        n_non_abusive,
        ratio,
        per_source_counts: per_source,
    }
}

/// Concatenate per-source sample lists into one corpus, namespacing ids as
/// `<source>:<local-id>` and ordering by source, then original order.
pub fn merge_corpora(parts: Vec<Vec<TextSample>>) -> Result<(Corpus, CorpusStats)> {
    let mut merged: Vec<TextSample> = Vec::new();
    for part in parts {
        for mut s in part {
            s.id = format!("{}:{}", s.source.prefix(), s.id);
            merged.push(s);
        }
    }
    // Stable sort keeps original order within each source.
    merged.sort_by_key(|s| s.source);
    let corpus = Corpus::from_samples(merged)?;
    let stats = corpus.stats();
    Ok((corpus, stats))
}
