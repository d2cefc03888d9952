//! The annotated racism dataset: loading, label mapping, class counts, and
//! the deterministic train/test split.
//!
//! Dataset files are RFC-4180 CSV, UTF-8, with the exact header `text,label`.
//! Labels are one of `representational`, `ideological`, `discursive`,
//! `normal` (case-insensitive).

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four-way annotation taxonomy. Three racism subtypes plus `Normal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RacismType {
    Representational,
    Ideological,
    Discursive,
    Normal,
}

impl RacismType {
    pub const ALL: [RacismType; 4] = [
        RacismType::Representational,
        RacismType::Ideological,
        RacismType::Discursive,
        RacismType::Normal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RacismType::Representational => "representational",
            RacismType::Ideological => "ideological",
            RacismType::Discursive => "discursive",
            RacismType::Normal => "normal",
        }
    }
}

impl FromStr for RacismType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_lowercase().as_str() {
            "representational" => Ok(RacismType::Representational),
            "ideological" => Ok(RacismType::Ideological),
            "discursive" => Ok(RacismType::Discursive),
            "normal" => Ok(RacismType::Normal),
            other => Err(format!(
                "unknown label '{other}' (expected representational|ideological|discursive|normal)"
            )),
        }
    }
}

impl fmt::Display for RacismType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary learning target. Class 1 is racism, class 0 is non-racism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    NonRacism,
    Racism,
}

impl BinaryLabel {
    /// Class index: 0 for non-racism, 1 for racism.
    pub fn class_index(&self) -> usize {
        match self {
            BinaryLabel::NonRacism => 0,
            BinaryLabel::Racism => 1,
        }
    }

    pub fn from_class_index(index: usize) -> Option<BinaryLabel> {
        match index {
            0 => Some(BinaryLabel::NonRacism),
            1 => Some(BinaryLabel::Racism),
            _ => None,
        }
    }

    /// Training target value: 0.0 or 1.0.
    pub fn target(&self) -> f64 {
        self.class_index() as f64
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BinaryLabel::NonRacism => "non-racism",
            BinaryLabel::Racism => "racism",
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `Normal` is the only non-racism annotation; every racism subtype maps to
/// the positive class.
pub fn to_binary_label(t: RacismType) -> BinaryLabel {
    match t {
        RacismType::Normal => BinaryLabel::NonRacism,
        _ => BinaryLabel::Racism,
    }
}

/// One annotated comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    /// Stable index, sequential from 0 in file order.
    pub id: usize,
    pub text: String,
    pub racism_type: RacismType,
    pub binary_label: BinaryLabel,
}

impl LabeledRecord {
    pub fn new(id: usize, text: impl Into<String>, racism_type: RacismType) -> Self {
        LabeledRecord {
            id,
            text: text.into(),
            racism_type,
            binary_label: to_binary_label(racism_type),
        }
    }
}

/// Load a dataset CSV. Rows get sequential ids starting at 0.
///
/// Errors carry the 1-based line number of the offending row. Exact duplicate
/// texts are permitted but logged as a warning.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledRecord>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Schema {
                path: path.to_path_buf(),
                reason: e.to_string(),
            },
        })?;

    let headers = reader.headers().map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let expected = ["text", "label"];
    if headers.len() != 2
        || !headers
            .iter()
            .zip(expected)
            .all(|(h, e)| h.trim().eq_ignore_ascii_case(e))
    {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: format!(
                "expected header 'text,label', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let text = row.get(0).unwrap_or("");
        let label = row.get(1).unwrap_or("");
        if text.trim().is_empty() {
            return Err(Error::Row {
                line,
                reason: "empty text".into(),
            });
        }
        let racism_type: RacismType = label.parse().map_err(|reason| Error::Row { line, reason })?;
        records.push(LabeledRecord::new(records.len(), text, racism_type));
    }

    let duplicates = count_duplicate_texts(&records);
    if duplicates > 0 {
        log::warn!(
            "{duplicates} exact duplicate text(s) in {} ({} records)",
            path.display(),
            records.len()
        );
    }

    Ok(records)
}

/// Number of records whose text is an exact duplicate of an earlier record.
pub fn count_duplicate_texts(records: &[LabeledRecord]) -> usize {
    let mut seen = std::collections::HashSet::new();
    records.iter().filter(|r| !seen.insert(r.text.as_str())).count()
}

/// Write records back out in the dataset CSV format.
pub fn write_dataset(records: &[LabeledRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| {
        Error::io(path, std::io::Error::other(e.to_string()))
    })?;
    writer
        .write_record(["text", "label"])
        .and_then(|_| {
            records.iter().try_for_each(|r| {
                writer.write_record([r.text.as_str(), r.racism_type.as_str()])
            })
        })
        .and_then(|_| writer.flush().map_err(csv::Error::from))
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))
}

/// Per-class and binary counts over a record set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub by_type: BTreeMap<RacismType, usize>,
    pub racism: usize,
    pub non_racism: usize,
    pub total: usize,
}

pub fn class_distribution(records: &[LabeledRecord]) -> ClassDistribution {
    let mut by_type: BTreeMap<RacismType, usize> =
        RacismType::ALL.iter().map(|t| (*t, 0)).collect();
    for r in records {
        *by_type.get_mut(&r.racism_type).expect("all variants present") += 1;
    }
    let non_racism = by_type[&RacismType::Normal];
    ClassDistribution {
        racism: records.len() - non_racism,
        non_racism,
        total: records.len(),
        by_type,
    }
}

/// A train/test partition of the dataset.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledRecord>,
    pub test: Vec<LabeledRecord>,
    pub seed: u64,
    pub ratio: f64,
}

impl DatasetSplit {
    pub fn total(&self) -> usize {
        self.train.len() + self.test.len()
    }

    /// Audit manifest: one `id,partition` row per record, sorted by id.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut rows: Vec<(usize, &str)> = self
            .train
            .iter()
            .map(|r| (r.id, "train"))
            .chain(self.test.iter().map(|r| (r.id, "test")))
            .collect();
        rows.sort_unstable();
        let mut out = String::from("id,partition\n");
        for (id, part) in rows {
            out.push_str(&format!("{id},{part}\n"));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Deterministic shuffled split. `ratio` is the train fraction; the boundary
/// rounds half-up on the train side. With `stratify`, each binary class keeps
/// its train fraction within one record of `ratio` while the overall train
/// size stays exactly `round(ratio * N)`.
pub fn split_train_test(
    records: &[LabeledRecord],
    ratio: f64,
    seed: u64,
    stratify: bool,
) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Input(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    if records.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 records to split, got {}",
            records.len()
        )));
    }

    let total_train = round_half_up(ratio * records.len() as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let train_positions: Vec<usize> = if stratify {
        // Positions per binary class, in dataset order.
        let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for (pos, r) in records.iter().enumerate() {
            classes[r.binary_label.class_index()].push(pos);
        }
        for (idx, class) in classes.iter().enumerate() {
            if class.is_empty() {
                let label = BinaryLabel::from_class_index(idx).unwrap();
                return Err(Error::DegenerateClass {
                    class: label.as_str().into(),
                });
            }
        }

        // Largest-remainder apportionment: per-class floor of the ideal
        // count, then hand out the remaining train slots by descending
        // fractional remainder so the overall train size is exact.
        let ideals: Vec<f64> = classes.iter().map(|c| ratio * c.len() as f64).collect();
        let mut takes: Vec<usize> = ideals.iter().map(|x| x.floor() as usize).collect();
        let mut leftover = total_train.saturating_sub(takes.iter().sum::<usize>());
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = ideals[a] - ideals[a].floor();
            let fb = ideals[b] - ideals[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for idx in order {
            if leftover == 0 {
                break;
            }
            if takes[idx] < classes[idx].len() {
                takes[idx] += 1;
                leftover -= 1;
            }
        }

        let mut train = Vec::with_capacity(total_train);
        for (class, take) in classes.iter_mut().zip(takes) {
            class.shuffle(&mut rng);
            train.extend_from_slice(&class[..take]);
        }
        train
    } else {
        let mut positions: Vec<usize> = (0..records.len()).collect();
        positions.shuffle(&mut rng);
        positions.truncate(total_train);
        positions
    };

    let in_train: std::collections::HashSet<usize> = train_positions.iter().copied().collect();
    let mut train = Vec::with_capacity(total_train);
    let mut test = Vec::with_capacity(records.len() - total_train);
    for (pos, r) in records.iter().enumerate() {
        if in_train.contains(&pos) {
            train.push(r.clone());
        } else {
            test.push(r.clone());
        }
    }

    Ok(DatasetSplit {
        train,
        test,
        seed,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn label_mapping_is_total_and_normal_is_the_only_negative() {
        for t in RacismType::ALL {
            let b = to_binary_label(t);
            assert_eq!(b == BinaryLabel::NonRacism, t == RacismType::Normal);
        }
        assert_eq!(to_binary_label(RacismType::Discursive), BinaryLabel::Racism);
        assert_eq!(to_binary_label(RacismType::Ideological), BinaryLabel::Racism);
    }

    #[test]
    fn load_parses_rows_and_assigns_sequential_ids() {
        let f = write_csv("text,label\n\"some text\",representational\nother,discursive\n");
        let records = load_dataset(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].id, 0);
        assert_eq!(records[0].racism_type, RacismType::Representational);
        assert_eq!(records[0].binary_label, BinaryLabel::Racism);
        assert_eq!(records[1].id, 1);
    }

    #[test]
    fn load_parses_labels_case_insensitively() {
        let f = write_csv("text,label\nx,Normal\ny,DISCURSIVE\n");
        let records = load_dataset(f.path()).unwrap();
        assert_eq!(records[0].binary_label, BinaryLabel::NonRacism);
        assert_eq!(records[1].binary_label, BinaryLabel::Racism);
    }

    #[test]
    fn load_rejects_missing_header() {
        let f = write_csv("body,tag\nx,normal\n");
        match load_dataset(f.path()) {
            Err(Error::Schema { reason, .. }) => assert!(reason.contains("text,label")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_unknown_label_with_line_number() {
        let f = write_csv("text,label\nx,normal\ny,racist\n");
        match load_dataset(f.path()) {
            Err(Error::Row { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("racist"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_empty_text_with_line_number() {
        let f = write_csv("text,label\n\"  \",normal\n");
        match load_dataset(f.path()) {
            Err(Error::Row { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("empty"));
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn load_handles_quoted_commas_and_newlines() {
        let f = write_csv("text,label\n\"a, b\nc\",normal\n");
        let records = load_dataset(f.path()).unwrap();
        assert_eq!(records[0].text, "a, b\nc");
    }

    #[test]
    fn duplicate_texts_are_counted() {
        let records = vec![
            LabeledRecord::new(0, "same", RacismType::Normal),
            LabeledRecord::new(1, "same", RacismType::Discursive),
            LabeledRecord::new(2, "other", RacismType::Normal),
        ];
        assert_eq!(count_duplicate_texts(&records), 1);
    }

    #[test]
    fn distribution_counts_sum_to_total() {
        let records = vec![
            LabeledRecord::new(0, "a", RacismType::Representational),
            LabeledRecord::new(1, "b", RacismType::Representational),
            LabeledRecord::new(2, "c", RacismType::Normal),
        ];
        let d = class_distribution(&records);
        assert_eq!(d.by_type[&RacismType::Representational], 2);
        assert_eq!(d.by_type[&RacismType::Normal], 1);
        assert_eq!(d.racism, 2);
        assert_eq!(d.non_racism, 1);
        assert_eq!(d.total, 3);
    }

    #[test]
    fn distribution_of_empty_list_is_all_zero() {
        let d = class_distribution(&[]);
        assert!(d.by_type.values().all(|&c| c == 0));
        assert_eq!(d.total, 0);
    }

    fn records_per_class(n_pos: usize, n_neg: usize) -> Vec<LabeledRecord> {
        let mut v = Vec::new();
        for i in 0..n_pos {
            v.push(LabeledRecord::new(i, format!("p{i}"), RacismType::Discursive));
        }
        for i in 0..n_neg {
            v.push(LabeledRecord::new(n_pos + i, format!("n{i}"), RacismType::Normal));
        }
        v
    }

    #[test]
    fn split_is_deterministic_for_fixed_seed() {
        let records = records_per_class(5, 5);
        let a = split_train_test(&records, 0.8, 7, true).unwrap();
        let b = split_train_test(&records, 0.8, 7, true).unwrap();
        let ids = |s: &DatasetSplit| {
            (
                s.train.iter().map(|r| r.id).collect::<Vec<_>>(),
                s.test.iter().map(|r| r.id).collect::<Vec<_>>(),
            )
        };
        assert_eq!(ids(&a), ids(&b));
        let c = split_train_test(&records, 0.8, 8, true).unwrap();
        assert!(ids(&a) != ids(&c), "different seeds should reshuffle");
    }

    #[test]
    fn split_partition_is_disjoint_and_exhaustive() {
        let records = records_per_class(13, 7);
        for stratify in [false, true] {
            let s = split_train_test(&records, 0.6, 3, stratify).unwrap();
            let mut ids: Vec<usize> = s
                .train
                .iter()
                .chain(s.test.iter())
                .map(|r| r.id)
                .collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..20).collect::<Vec<_>>());
            assert_eq!(s.train.len(), 12); // round(0.6 * 20)
        }
    }

    #[test]
    fn stratified_split_balances_classes_exactly_on_even_input() {
        let records = records_per_class(5, 5);
        let s = split_train_test(&records, 0.8, 42, true).unwrap();
        let pos_train = s
            .train
            .iter()
            .filter(|r| r.binary_label == BinaryLabel::Racism)
            .count();
        assert_eq!(s.train.len(), 8);
        assert_eq!(pos_train, 4);
        assert_eq!(s.test.len(), 2);
    }

    #[test]
    fn stratified_split_rejects_single_class_data() {
        let records = records_per_class(6, 0);
        match split_train_test(&records, 0.8, 1, true) {
            Err(Error::DegenerateClass { class }) => assert_eq!(class, "non-racism"),
            other => panic!("expected degenerate class error, got {other:?}"),
        }
    }

    #[test]
    fn split_rejects_bad_ratio_and_tiny_input() {
        let records = records_per_class(1, 1);
        assert!(split_train_test(&records, 0.0, 1, false).is_err());
        assert!(split_train_test(&records, 1.0, 1, false).is_err());
        assert!(split_train_test(&records[..1], 0.5, 1, false).is_err());
    }

    #[test]
    fn manifest_lists_every_id_once() {
        let records = records_per_class(3, 3);
        let s = split_train_test(&records, 0.5, 9, true).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        s.write_manifest(f.path()).unwrap();
        let body = std::fs::read_to_string(f.path()).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next(), Some("id,partition"));
        let rest: Vec<_> = lines.collect();
        assert_eq!(rest.len(), 6);
        for (i, line) in rest.iter().enumerate() {
            assert!(line.starts_with(&format!("{i},")));
        }
    }

    #[test]
    fn dataset_round_trips_through_write() {
        let records = vec![
            LabeledRecord::new(0, "a, quoted", RacismType::Ideological),
            LabeledRecord::new(1, "plain", RacismType::Normal),
        ];
        let f = tempfile::NamedTempFile::new().unwrap();
        write_dataset(&records, f.path()).unwrap();
        let loaded = load_dataset(f.path()).unwrap();
        assert_eq!(loaded, records);
    }
}
