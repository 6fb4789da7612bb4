//! Synthetic fixture corpora with disjoint per-class vocabularies.
//!
//! Used by the test and acceptance suites to exercise the full pipeline at
//! desk scale without any of the real datasets.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::{Corpus, Label, Source, TextSample};

/// Generate a linearly separable corpus: abusive texts draw tokens from
/// `aword00..awordNN`, non-abusive texts from `bword00..bwordNN`, so the
/// class vocabularies are disjoint. Texts are 5-12 tokens long.
pub fn separable_corpus(
    n_abusive: usize,
    n_non_abusive: usize,
    vocab_per_class: usize,
    seed: u64,
) -> Corpus {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n_abusive + n_non_abusive);
    let mut push = |label: Label, prefix: &str, i: usize, rng: &mut ChaCha20Rng| {
        let len = rng.gen_range(5..=12);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let w = rng.gen_range(0..vocab_per_class);
                format!("{prefix}word{w:02}")
            })
            .collect();
        samples.push(
            TextSample::new(
                format!("{prefix}{i}"),
                words.join(" "),
                label,
                Source::Darkweb,
            )
            .expect("synthetic text is non-empty"),
        );
    };
    for i in 0..n_abusive {
        push(Label::Abusive, "a", i, &mut rng);
    }
    for i in 0..n_non_abusive {
        push(Label::NonAbusive, "b", i, &mut rng);
    }
    Corpus::from_samples(samples).expect("synthetic ids are unique")
}

/// The 500-sample desk-scale corpus: 111 abusive / 389 non-abusive, a
/// 1:3.504 imbalance.
pub fn desk_scale_corpus(seed: u64) -> Corpus {
    separable_corpus(111, 389, 50, seed)
}
