//! Synthetic corpora for offline runs and tests.
//!
//! The desk corpus is ~200 keyword-separable texts built from invented
//! pseudo-Bengali tokens (no real slurs), decorated with the digits,
//! punctuation, emoji, and stopwords the cleaning stages are meant to strip.
//! `data/synthetic_corpus.csv` is this generator's output, committed; a test
//! guards against drift.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledRecord, RacismType};

const DESK_SEED: u64 = 9191;
pub const DESK_ROWS_PER_CLASS: usize = 50;

// Class-marker tokens are invented words; fillers are everyday vocabulary.
const REPRESENTATIONAL_MARKERS: [&str; 5] = ["zorbak", "khilpon", "dhamrol", "chitrob", "beshgor"];
const IDEOLOGICAL_MARKERS: [&str; 5] = ["uchhnad", "bornita", "shreskol", "jatvhed", "unchulok"];
const DISCURSIVE_MARKERS: [&str; 5] = ["galmond", "kotubaj", "bikrit", "tuchhelo", "tikrol"];
const NORMAL_MARKERS: [&str; 5] = ["bhalomon", "shantir", "prithila", "anondol", "sohojia"];
const FILLERS: [&str; 10] = [
    "manush", "kotha", "din", "raat", "gaan", "khela", "boi", "path", "jol", "alo",
];
const STOPWORDS: [&str; 6] = ["ami", "tumi", "ar", "o", "tobe", "oh"];
const DECORATIONS: [&str; 8] = ["!!", "...", "😂", "123", "৪৫", "??", "!!!", "🤣"];

fn markers_for(t: RacismType) -> &'static [&'static str; 5] {
    match t {
        RacismType::Representational => &REPRESENTATIONAL_MARKERS,
        RacismType::Ideological => &IDEOLOGICAL_MARKERS,
        RacismType::Discursive => &DISCURSIVE_MARKERS,
        RacismType::Normal => &NORMAL_MARKERS,
    }
}

fn compose_text(t: RacismType, rng: &mut ChaCha8Rng) -> String {
    let markers = markers_for(t);
    let mut tokens: Vec<String> = Vec::new();
    if rng.gen_bool(0.4) {
        tokens.push(STOPWORDS.choose(rng).unwrap().to_string());
    }
    tokens.push(markers.choose(rng).unwrap().to_string());
    for _ in 0..rng.gen_range(2..=4) {
        tokens.push(FILLERS.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.5) {
        tokens.push(markers.choose(rng).unwrap().to_string());
    }
    if rng.gen_bool(0.3) {
        tokens.push(STOPWORDS.choose(rng).unwrap().to_string());
    }
    tokens.shuffle(rng);
    let mut text = tokens.join(" ");
    if rng.gen_bool(0.5) {
        text.push_str(DECORATIONS.choose(rng).unwrap());
    }
    if rng.gen_bool(0.15) {
        // Exercise CSV quoting.
        text.push_str(", thik na");
    }
    text
}

/// The bundled desk-scale corpus: 50 rows per annotation class, 200 total,
/// keyword-separable after cleaning. Deterministic.
pub fn desk_corpus() -> Vec<LabeledRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(DESK_SEED);
    let mut records = Vec::with_capacity(4 * DESK_ROWS_PER_CLASS);
    for _ in 0..DESK_ROWS_PER_CLASS {
        for t in RacismType::ALL {
            let text = compose_text(t, &mut rng);
            records.push(LabeledRecord::new(records.len(), text, t));
        }
    }
    records
}

/// Class counts of the published corpus' distribution table.
pub const PUBLISHED_DISTRIBUTION: [(RacismType, usize); 4] = [
    (RacismType::Representational, 1974),
    (RacismType::Ideological, 1062),
    (RacismType::Discursive, 1905),
    (RacismType::Normal, 1214),
];

/// A 6155-row stand-in with the published per-class counts, for split and
/// distribution checks when the real corpus is unavailable.
pub fn distribution_stand_in() -> Vec<LabeledRecord> {
    let mut records = Vec::with_capacity(6155);
    for (t, count) in PUBLISHED_DISTRIBUTION {
        for i in 0..count {
            let text = format!("{} bhanga kotha {i}", t.as_str());
            records.push(LabeledRecord::new(records.len(), text, t));
        }
    }
    records
}
