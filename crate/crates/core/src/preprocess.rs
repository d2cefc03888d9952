//! Deterministic text cleaning: digit, punctuation, and emoji stripping plus
//! lexicon-driven removal of weak part-of-speech tokens.
//!
//! Stages run in a fixed order (numbers, punctuation, emoji, POS, whitespace)
//! and every stage leaves its output whitespace-normalized, so each stage and
//! the whole pipeline are idempotent.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Character classes targeted by the character-level stages.
#[derive(Debug, Clone)]
pub struct CharSets {
    /// Digit code points deleted in place (ASCII and Bengali by default).
    pub digit_ranges: Vec<RangeInclusive<u32>>,
    /// Punctuation code points (ASCII punctuation plus danda/double danda).
    pub punctuation: BTreeSet<char>,
    /// Emoji code-point ranges, including joiners and variation selectors.
    pub emoji_ranges: Vec<RangeInclusive<u32>>,
}

impl Default for CharSets {
    fn default() -> Self {
        let mut punctuation: BTreeSet<char> =
            (0u32..128).filter_map(char::from_u32).filter(|c| c.is_ascii_punctuation()).collect();
        punctuation.insert('\u{0964}'); // danda
        punctuation.insert('\u{0965}'); // double danda
        CharSets {
            digit_ranges: vec![0x0030..=0x0039, 0x09E6..=0x09EF],
            punctuation,
            emoji_ranges: vec![
                0x1F300..=0x1FAFF,
                0x2600..=0x27BF,
                0xFE0F..=0xFE0F,
                0x200D..=0x200D,
                0x1F1E6..=0x1F1FF,
            ],
        }
    }
}

impl CharSets {
    pub fn is_digit(&self, c: char) -> bool {
        let cp = c as u32;
        self.digit_ranges.iter().any(|r| r.contains(&cp))
    }

    pub fn is_punctuation(&self, c: char) -> bool {
        self.punctuation.contains(&c)
    }

    pub fn is_emoji(&self, c: char) -> bool {
        let cp = c as u32;
        self.emoji_ranges.iter().any(|r| r.contains(&cp))
    }
}

/// Part-of-speech categories carried by the stop lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Pronoun,
    Conjunction,
    Interjection,
    Preposition,
    Noun,
}

impl PosTag {
    pub const ALL: [PosTag; 5] = [
        PosTag::Pronoun,
        PosTag::Conjunction,
        PosTag::Interjection,
        PosTag::Preposition,
        PosTag::Noun,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PosTag::Pronoun => "pronoun",
            PosTag::Conjunction => "conjunction",
            PosTag::Interjection => "interjection",
            PosTag::Preposition => "preposition",
            PosTag::Noun => "noun",
        }
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "pronoun" => Ok(PosTag::Pronoun),
            "conjunction" => Ok(PosTag::Conjunction),
            "interjection" => Ok(PosTag::Interjection),
            "preposition" => Ok(PosTag::Preposition),
            "noun" => Ok(PosTag::Noun),
            other => Err(format!("unknown POS tag '{other}'")),
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exact-match stopword lexicon keyed by POS tag.
///
/// File format: UTF-8 lines of `tag<TAB>word`; `#` starts a comment line.
/// Word sets must be disjoint across tags.
#[derive(Debug, Clone, Default)]
pub struct StopPosLexicon {
    sets: BTreeMap<PosTag, BTreeSet<String>>,
}

impl StopPosLexicon {
    pub fn parse(content: &str) -> Result<Self> {
        let mut sets: BTreeMap<PosTag, BTreeSet<String>> = BTreeMap::new();
        let mut seen: BTreeMap<String, PosTag> = BTreeMap::new();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, word) = line.split_once('\t').ok_or_else(|| {
                Error::Input(format!("lexicon line {}: expected 'tag<TAB>word'", i + 1))
            })?;
            let tag: PosTag = tag.parse().map_err(Error::Input)?;
            let word = word.trim();
            if word.is_empty() {
                return Err(Error::Input(format!("lexicon line {}: empty word", i + 1)));
            }
            if let Some(prev) = seen.insert(word.to_string(), tag) {
                if prev != tag {
                    return Err(Error::Input(format!(
                        "lexicon word '{word}' appears under both {prev} and {tag}"
                    )));
                }
            }
            sets.entry(tag).or_default().insert(word.to_string());
        }
        Ok(StopPosLexicon { sets })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }

    /// Lexicon compiled in from `data/pos_lexicon.tsv`.
    pub fn bundled() -> Self {
        Self::parse(include_str!("../../../data/pos_lexicon.tsv"))
            .expect("bundled lexicon is valid")
    }

    pub fn words(&self, tag: PosTag) -> Option<&BTreeSet<String>> {
        self.sets.get(&tag)
    }

    pub fn contains(&self, tag: PosTag, token: &str) -> bool {
        self.sets.get(&tag).is_some_and(|s| s.contains(token))
    }

    pub fn is_empty(&self) -> bool {
        self.sets.values().all(|s| s.is_empty())
    }
}

/// Pronouns, conjunctions, interjections, and prepositions are dropped by
/// default; nouns stay.
pub fn default_drop_tags() -> BTreeSet<PosTag> {
    [
        PosTag::Pronoun,
        PosTag::Conjunction,
        PosTag::Interjection,
        PosTag::Preposition,
    ]
    .into_iter()
    .collect()
}

/// Names of the pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Numbers,
    Punctuation,
    Emoji,
    Pos,
    Whitespace,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Numbers => "numbers",
            Stage::Punctuation => "punctuation",
            Stage::Emoji => "emoji",
            Stage::Pos => "pos",
            Stage::Whitespace => "whitespace",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of cleaning one text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanText {
    pub original: String,
    pub cleaned: String,
    /// Stages that ran, in order, whether or not they changed the text.
    pub stages_applied: Vec<Stage>,
    /// Stages that actually changed the text.
    pub stages_changed: Vec<Stage>,
    /// Whitespace tokens of the original minus tokens of the cleaned text.
    pub removed_token_count: usize,
    /// True when nothing survives cleaning; such rows are dropped from
    /// training by default.
    pub empty_output: bool,
}

/// Stage toggles plus the character sets and lexicon the stages consult.
#[derive(Debug, Clone)]
pub struct CleanConfig {
    pub numbers: bool,
    pub punctuation: bool,
    pub emoji: bool,
    pub pos: bool,
    pub drop_tags: BTreeSet<PosTag>,
    pub lexicon: StopPosLexicon,
    pub charsets: CharSets,
}

impl Default for CleanConfig {
    fn default() -> Self {
        CleanConfig {
            numbers: true,
            punctuation: true,
            emoji: true,
            pos: true,
            drop_tags: default_drop_tags(),
            lexicon: StopPosLexicon::bundled(),
            charsets: CharSets::default(),
        }
    }
}

fn strip_chars(text: &str, remove: impl Fn(char) -> bool) -> String {
    normalize_whitespace(&text.chars().filter(|c| !remove(*c)).collect::<String>())
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Delete ASCII and Bengali digits in place, even inside words.
pub fn remove_numbers(text: &str) -> String {
    remove_numbers_with(text, &CharSets::default())
}

pub fn remove_numbers_with(text: &str, sets: &CharSets) -> String {
    strip_chars(text, |c| sets.is_digit(c))
}

/// Delete punctuation (ASCII classes plus danda and double danda).
pub fn remove_punctuation(text: &str) -> String {
    remove_punctuation_with(text, &CharSets::default())
}

pub fn remove_punctuation_with(text: &str, sets: &CharSets) -> String {
    strip_chars(text, |c| sets.is_punctuation(c))
}

/// Delete emoji code points, including ZWJ and variation selectors that glue
/// emoji sequences together.
pub fn remove_emoji(text: &str) -> String {
    remove_emoji_with(text, &CharSets::default())
}

pub fn remove_emoji_with(text: &str, sets: &CharSets) -> String {
    strip_chars(text, |c| sets.is_emoji(c))
}

/// Drop whole tokens whose surface form appears under any dropped tag.
pub fn remove_stop_pos(
    text: &str,
    lexicon: &StopPosLexicon,
    drop_tags: &BTreeSet<PosTag>,
) -> String {
    text.split_whitespace()
        .filter(|token| !drop_tags.iter().any(|tag| lexicon.contains(*tag, token)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Run the enabled stages in fixed order and record what happened.
pub fn clean(text: &str, config: &CleanConfig) -> CleanText {
    // Pre-normalizing does not change the result (every stage normalizes);
    // it keeps the per-stage change attribution honest.
    let mut current = normalize_whitespace(text);
    let mut applied = Vec::new();
    let mut changed = Vec::new();

    let mut run = |stage: Stage, out: String, current: &mut String| {
        applied.push(stage);
        if out != *current {
            changed.push(stage);
        }
        *current = out;
    };

    if config.numbers {
        let out = remove_numbers_with(&current, &config.charsets);
        run(Stage::Numbers, out, &mut current);
    }
    if config.punctuation {
        let out = remove_punctuation_with(&current, &config.charsets);
        run(Stage::Punctuation, out, &mut current);
    }
    if config.emoji {
        let out = remove_emoji_with(&current, &config.charsets);
        run(Stage::Emoji, out, &mut current);
    }
    if config.pos {
        let out = remove_stop_pos(&current, &config.lexicon, &config.drop_tags);
        run(Stage::Pos, out, &mut current);
    }
    let out = normalize_whitespace(&current);
    run(Stage::Whitespace, out, &mut current);

    let original_tokens = text.split_whitespace().count();
    let cleaned_tokens = current.split_whitespace().count();
    CleanText {
        original: text.to_string(),
        empty_output: current.is_empty(),
        removed_token_count: original_tokens.saturating_sub(cleaned_tokens),
        cleaned: current,
        stages_applied: applied,
        stages_changed: changed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn digits_are_stripped_even_inside_words() {
        assert_eq!(remove_numbers("12Tar per sb rastay"), "Tar per sb rastay");
        assert_eq!(remove_numbers("no digits here"), "no digits here");
        assert_eq!(remove_numbers("a1b2c3"), "abc");
    }

    #[test]
    fn bengali_digits_are_stripped_too() {
        assert_eq!(remove_numbers("১২টার পরে"), "টার পরে");
    }

    #[test]
    fn punctuation_runs_are_removed() {
        assert_eq!(
            remove_punctuation("bokaram!!!!! dure giya mor......"),
            "bokaram dure giya mor"
        );
        assert_eq!(remove_punctuation("plain words"), "plain words");
        assert_eq!(remove_punctuation("a,b;c!"), "abc");
    }

    #[test]
    fn danda_counts_as_punctuation() {
        assert_eq!(remove_punctuation("dure giya mor......।"), "dure giya mor");
    }

    #[test]
    fn emoji_are_removed_and_words_kept() {
        assert_eq!(remove_emoji("text 😂😂"), "text");
        assert_eq!(remove_emoji("text only"), "text only");
        assert_eq!(remove_emoji("😂 word"), "word");
        // ZWJ sequences and flags disappear completely.
        assert_eq!(remove_emoji("ok 👨‍👩‍👧 🇧🇩 done"), "ok done");
    }

    #[test]
    fn bengali_script_passes_through_emoji_removal() {
        assert_eq!(
            remove_emoji("আপনি একটা ঘোড়ার ডিম 😂😂"),
            "আপনি একটা ঘোড়ার ডিম"
        );
    }

    #[test]
    fn stop_pos_removal_keeps_token_order() {
        let lex = StopPosLexicon::parse("conjunction\tar\npronoun\tami\n").unwrap();
        let drop: BTreeSet<PosTag> = [PosTag::Conjunction].into_iter().collect();
        assert_eq!(remove_stop_pos("x ar y", &lex, &drop), "x y");
        assert_eq!(remove_stop_pos("x ar y", &lex, &BTreeSet::new()), "x ar y");
        let both: BTreeSet<PosTag> = [PosTag::Conjunction, PosTag::Pronoun].into_iter().collect();
        assert_eq!(remove_stop_pos("a ami b ar c", &lex, &both), "a b c");
    }

    #[test]
    fn bundled_lexicon_is_valid_and_covers_the_default_tags() {
        let lex = StopPosLexicon::bundled();
        assert!(lex.contains(PosTag::Conjunction, "ar"));
        assert!(lex.contains(PosTag::Pronoun, "ami"));
        assert!(lex.contains(PosTag::Pronoun, "আমি"));
        assert!(lex.contains(PosTag::Noun, "rahim"));
        for tag in PosTag::ALL {
            assert!(lex.words(tag).is_some_and(|w| !w.is_empty()), "{tag} missing");
        }
    }

    #[test]
    fn lexicon_rejects_cross_tag_duplicates() {
        let err = StopPosLexicon::parse("pronoun\tami\nnoun\tami\n");
        assert!(err.is_err());
    }

    #[test]
    fn whitespace_normalization_examples() {
        assert_eq!(normalize_whitespace("a  b "), "a b");
        assert_eq!(normalize_whitespace(""), "");
        assert_eq!(normalize_whitespace("  "), "");
        assert_eq!(normalize_whitespace("a\t\nb"), "a b");
    }

    #[test]
    fn clean_composes_all_stages() {
        let config = CleanConfig::default();
        let result = clean("12!! x", &config);
        assert_eq!(result.cleaned, "x");
        assert!(!result.empty_output);
        assert_eq!(result.removed_token_count, 1);
    }

    #[test]
    fn clean_records_all_enabled_stages_even_when_nothing_changes() {
        let config = CleanConfig::default();
        let result = clean("already clean text", &config);
        assert_eq!(result.cleaned, "already clean text");
        assert_eq!(
            result.stages_applied,
            vec![Stage::Numbers, Stage::Punctuation, Stage::Emoji, Stage::Pos, Stage::Whitespace]
        );
        assert!(result.stages_changed.is_empty());
    }

    #[test]
    fn clean_flags_texts_that_vanish() {
        let config = CleanConfig::default();
        let result = clean("!!! 😂 ...", &config);
        assert_eq!(result.cleaned, "");
        assert!(result.empty_output);
        assert_eq!(result.removed_token_count, 3);
    }

    #[test]
    fn clean_respects_stage_toggles() {
        let config = CleanConfig {
            emoji: false,
            ..CleanConfig::default()
        };
        let result = clean("hey 😂", &config);
        assert_eq!(result.cleaned, "hey 😂");
        assert!(!result.stages_applied.contains(&Stage::Emoji));
    }

    #[test]
    fn clean_drops_default_pos_tokens_but_keeps_nouns() {
        let config = CleanConfig::default();
        // "ar" is a bundled conjunction, "rahim" a bundled noun.
        let result = clean("rahim ar karim", &config);
        assert_eq!(result.cleaned, "rahim karim");
    }

    #[test]
    fn clean_is_idempotent_on_the_paper_examples() {
        let config = CleanConfig::default();
        for text in [
            "12Tar per sb rastay bistr polapan thake.",
            "bokaram!!!!! dure giya mor......",
            "আপনি একটা ঘোড়ার ডিম 😂😂",
        ] {
            let once = clean(text, &config);
            let twice = clean(&once.cleaned, &config);
            assert_eq!(once.cleaned, twice.cleaned);
        }
    }

    fn corpus_char() -> impl Strategy<Value = char> {
        prop_oneof![
            prop::char::range('a', 'z'),
            prop::char::range('0', '9'),
            prop::char::range('\u{0980}', '\u{09FF}'), // Bengali block
            Just('😂'),
            Just('🇧'),
            Just('\u{200D}'),
            Just('!'),
            Just('.'),
            Just(','),
            Just('।'),
            Just(' '),
            Just('\t'),
            Just('\n'),
        ]
    }

    fn corpus_string() -> impl Strategy<Value = String> {
        prop::collection::vec(corpus_char(), 0..64).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn every_stage_is_idempotent(s in corpus_string()) {
            let config = CleanConfig::default();
            prop_assert_eq!(remove_numbers(&remove_numbers(&s)), remove_numbers(&s));
            prop_assert_eq!(remove_punctuation(&remove_punctuation(&s)), remove_punctuation(&s));
            prop_assert_eq!(remove_emoji(&remove_emoji(&s)), remove_emoji(&s));
            prop_assert_eq!(
                normalize_whitespace(&normalize_whitespace(&s)),
                normalize_whitespace(&s)
            );
            let once = clean(&s, &config);
            let twice = clean(&once.cleaned, &config);
            prop_assert_eq!(&once.cleaned, &twice.cleaned);
        }

        #[test]
        fn character_stages_commute(s in corpus_string()) {
            let npe = remove_emoji(&remove_punctuation(&remove_numbers(&s)));
            let epn = remove_numbers(&remove_punctuation(&remove_emoji(&s)));
            let pen = remove_numbers(&remove_emoji(&remove_punctuation(&s)));
            prop_assert_eq!(&npe, &epn);
            prop_assert_eq!(&npe, &pen);
        }

        #[test]
        fn cleaning_never_introduces_characters(s in corpus_string()) {
            let cleaned = clean(&s, &CleanConfig::default()).cleaned;
            let mut available: std::collections::HashMap<char, usize> = std::collections::HashMap::new();
            for c in s.chars() {
                *available.entry(c).or_default() += 1;
            }
            // Whitespace may be rewritten to plain spaces; count it loosely.
            let ws_budget: usize = s.chars().filter(|c| c.is_whitespace()).count();
            let mut spaces_used = 0usize;
            for c in cleaned.chars() {
                if c == ' ' {
                    spaces_used += 1;
                } else {
                    let n = available.get_mut(&c).expect("introduced character");
                    prop_assert!(*n > 0, "introduced extra '{}'", c);
                    *n -= 1;
                }
            }
            prop_assert!(spaces_used <= ws_budget);
        }

        #[test]
        fn every_stage_is_length_monotone(s in corpus_string()) {
            prop_assert!(remove_numbers(&s).chars().count() <= s.chars().count());
            prop_assert!(remove_punctuation(&s).chars().count() <= s.chars().count());
            prop_assert!(remove_emoji(&s).chars().count() <= s.chars().count());
            prop_assert!(normalize_whitespace(&s).chars().count() <= s.chars().count());
            prop_assert!(
                clean(&s, &CleanConfig::default()).cleaned.chars().count() <= s.chars().count()
            );
        }
    }
}
