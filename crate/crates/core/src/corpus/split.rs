//! Stratified k-fold assignment.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Label};
use crate::error::{Error, Result};

/// Maximum allowed deviation of any fold's abusive share from the global
/// share, as an absolute fraction (0.01 = one percentage point).
pub const DEFAULT_STRATIFICATION_TOLERANCE: f64 = 0.01;

/// Maps every sample id to a fold index in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    k: usize,
    assignment: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignment.iter().map(|(id, &f)| (id.as_str(), f))
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for (_, f) in self.iter() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Split `corpus` into `k` stratified folds, deterministic for a fixed seed.
pub fn stratified_kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_kfold_with_tolerance(corpus, k, seed, DEFAULT_STRATIFICATION_TOLERANCE)
}

/// [`stratified_kfold`] with an explicit stratification tolerance.
///
/// Per class, members are shuffled and dealt into folds so per-class fold
/// counts differ by at most one; the folds that receive each class's
/// remainder are rotated across classes so overall fold sizes also differ
/// by at most one.
pub fn stratified_kfold_with_tolerance(
    corpus: &Corpus,
    k: usize,
    seed: u64,
    tolerance: f64,
) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidFoldCount { k });
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut assignment: BTreeMap<String, usize> = BTreeMap::new();
    let mut extra_offset = 0usize;

    for class in [Label::Abusive, Label::NonAbusive] {
        let mut members: Vec<&str> = corpus
            .samples()
            .iter()
            .filter(|s| s.label == class)
            .map(|s| s.id.as_str())
            .collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);

        let base = members.len() / k;
        let remainder = members.len() % k;
        let mut cursor = 0usize;
        for fold in 0..k {
            let gets_extra = (k + fold - extra_offset) % k < remainder;
            let quota = base + usize::from(gets_extra);
            for id in &members[cursor..cursor + quota] {
                assignment.insert((*id).to_string(), fold);
            }
            cursor += quota;
        }
        extra_offset = (extra_offset + remainder) % k;
    }

    let folds = FoldAssignment { k, assignment };
    validate_assignment(corpus, &folds, tolerance)?;
    Ok(folds)
}

fn validate_assignment(corpus: &Corpus, folds: &FoldAssignment, tolerance: f64) -> Result<()> {
    debug_assert_eq!(folds.len(), corpus.len());

    let sizes = folds.fold_sizes();
    let (min, max) = (
        *sizes.iter().min().expect("k >= 2"),
        *sizes.iter().max().expect("k >= 2"),
    );
    debug_assert!(max - min <= 1, "fold sizes differ by more than one");

    let mut abusive = vec![0usize; folds.k];
    for s in corpus.samples() {
        if s.label == Label::Abusive {
            abusive[folds.fold_of(&s.id).expect("sample assigned")] += 1;
        }
    }
    let global = corpus.stats().n_abusive as f64 / corpus.len() as f64;
    for (fold, (&a, &size)) in abusive.iter().zip(&sizes).enumerate() {
        let share = a as f64 / size as f64;
        if (share - global).abs() > tolerance {
            return Err(Error::StratificationFailed {
                fold,
                share,
                global,
                tolerance,
            });
        }
    }
    Ok(())
}
