//! Human verification protocol: sample annotated sentences, round-trip a
//! verdict sheet through CSV, and score accuracy.
//!
//! Sampling is uniform without replacement and fully reproducible: indices
//! are drawn by a partial Fisher-Yates shuffle driven by SplitMix64 (a
//! published, implementation-independent 64-bit generator) seeded directly
//! with the run seed, so the same `(records, n, seed)` always yields the
//! same sheet, across platforms and reimplementations.

use crate::annotator::AnnotationRecord;
use crate::corpus::{Corpus, CorpusKind};
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("sample of {requested} exceeds the {available} available records")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("record sent_id {0} does not resolve to a corpus sentence")]
    DanglingSentId(u64),
    #[error("sheet has unset verdicts for sent_ids: {0:?}")]
    IncompleteSheet(Vec<u64>),
    #[error("sheet line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("sheet io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct,
    Incorrect,
    Unset,
}

impl Verdict {
    fn as_csv(self) -> &'static str {
        match self {
            Verdict::Correct => "C",
            Verdict::Incorrect => "I",
            Verdict::Unset => "",
        }
    }

    fn from_csv(value: &str, line: usize) -> Result<Self, ReviewError> {
        match value {
            "C" => Ok(Verdict::Correct),
            "I" => Ok(Verdict::Incorrect),
            "" => Ok(Verdict::Unset),
            other => Err(ReviewError::Format {
                line,
                reason: format!("verdict must be C, I or empty, got \"{other}\""),
            }),
        }
    }
}

/// One assigned label awaiting (or carrying) a verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledVerdict {
    /// Wire name of the field, e.g. `topic` or `secondary_function`.
    pub field: String,
    pub label: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewRow {
    pub sent_id: u64,
    pub sentence: String,
    pub fields: Vec<LabeledVerdict>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewSheet {
    pub corpus_kind: CorpusKind,
    pub seed: u64,
    pub rows: Vec<ReviewRow>,
}

/// Primary field wire names in sheet column order, then the secondary.
fn sheet_fields(kind: CorpusKind) -> (Vec<&'static str>, &'static str) {
    match kind {
        CorpusKind::Miami => (vec!["topic", "function"], "secondary_function"),
        CorpusKind::GuaSpa => (vec!["formality", "genre", "topic"], "secondary_topic"),
    }
}

/// Draws a uniform sample of annotated sentences without replacement.
/// Identical inputs produce identical sheets.
pub fn sample_for_review(
    records: &[AnnotationRecord],
    corpus: &Corpus,
    n: usize,
    seed: u64,
) -> Result<ReviewSheet, ReviewError> {
    if n > records.len() {
        return Err(ReviewError::SampleTooLarge {
            requested: n,
            available: records.len(),
        });
    }
    let by_id: HashMap<u64, String> = corpus
        .sentences
        .iter()
        .map(|s| (s.sent_id, s.text()))
        .collect();

    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..records.len()).collect();
    for i in 0..n {
        let remaining = (indices.len() - i) as u64;
        let j = i + (rng.next_u64() % remaining) as usize;
        indices.swap(i, j);
    }

    let (primaries, secondary_name) = sheet_fields(corpus.kind);
    let mut rows = Vec::with_capacity(n);
    for &idx in indices.iter().take(n) {
        let record = &records[idx];
        let sentence = by_id
            .get(&record.sent_id)
            .ok_or(ReviewError::DanglingSentId(record.sent_id))?
            .clone();
        let mut fields = Vec::new();
        for name in &primaries {
            let label = record
                .labels
                .values()
                .find(|l| l.field.wire_name() == *name)
                .map(|l| l.label.clone())
                .unwrap_or_default();
            fields.push(LabeledVerdict {
                field: name.to_string(),
                label,
                verdict: Verdict::Unset,
            });
        }
        if let Some(secondary) = &record.secondary {
            fields.push(LabeledVerdict {
                field: secondary_name.to_string(),
                label: secondary.label.clone(),
                verdict: Verdict::Unset,
            });
        }
        rows.push(ReviewRow {
            sent_id: record.sent_id,
            sentence,
            fields,
        });
    }

    Ok(ReviewSheet {
        corpus_kind: corpus.kind,
        seed,
        rows,
    })
}

/// Writes the sheet as a hand-editable CSV: two comment lines carrying the
/// corpus kind and the seed, a header, then one row per sentence with a
/// label and verdict column (values C/I) per field.
pub fn write_sheet<W: Write>(sheet: &ReviewSheet, mut writer: W) -> Result<(), ReviewError> {
    writeln!(writer, "# kind: {}", sheet.corpus_kind.as_str())?;
    writeln!(writer, "# seed: {}", sheet.seed)?;

    let (primaries, secondary_name) = sheet_fields(sheet.corpus_kind);
    let mut header = vec!["sent_id".to_string(), "sentence".to_string()];
    for name in primaries.iter().chain(std::iter::once(&secondary_name)) {
        header.push(name.to_string());
        header.push(format!("{name}_verdict"));
    }

    let mut csv_writer = csv::Writer::from_writer(&mut writer);
    csv_writer
        .write_record(&header)
        .map_err(|e| ReviewError::Format {
            line: 0,
            reason: e.to_string(),
        })?;
    for row in &sheet.rows {
        let mut record = vec![row.sent_id.to_string(), row.sentence.clone()];
        for name in primaries.iter().chain(std::iter::once(&secondary_name)) {
            match row.fields.iter().find(|f| f.field == *name) {
                Some(f) => {
                    record.push(f.label.clone());
                    record.push(f.verdict.as_csv().to_string());
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        csv_writer
            .write_record(&record)
            .map_err(|e| ReviewError::Format {
                line: 0,
                reason: e.to_string(),
            })?;
    }
    csv_writer.flush().map_err(|e| ReviewError::Format {
        line: 0,
        reason: e.to_string(),
    })?;
    Ok(())
}

/// Reads a sheet written by [`write_sheet`], including hand-filled verdicts.
pub fn read_sheet<R: BufRead>(reader: R) -> Result<ReviewSheet, ReviewError> {
    let mut corpus_kind: Option<CorpusKind> = None;
    let mut seed: Option<u64> = None;
    let mut body = String::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# kind: ") {
            corpus_kind = Some(match rest.trim() {
                "miami" => CorpusKind::Miami,
                "gua_spa" => CorpusKind::GuaSpa,
                other => {
                    return Err(ReviewError::Format {
                        line: idx + 1,
                        reason: format!("unknown corpus kind \"{other}\""),
                    })
                }
            });
        } else if let Some(rest) = line.strip_prefix("# seed: ") {
            seed = Some(rest.trim().parse().map_err(|_| ReviewError::Format {
                line: idx + 1,
                reason: "seed is not an integer".to_string(),
            })?);
        } else if !line.starts_with('#') {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let corpus_kind = corpus_kind.ok_or(ReviewError::Format {
        line: 0,
        reason: "missing \"# kind:\" line".to_string(),
    })?;
    let seed = seed.ok_or(ReviewError::Format {
        line: 0,
        reason: "missing \"# seed:\" line".to_string(),
    })?;

    let (primaries, secondary_name) = sheet_fields(corpus_kind);
    let names: Vec<&str> = primaries
        .iter()
        .copied()
        .chain(std::iter::once(secondary_name))
        .collect();

    let mut reader = csv::ReaderBuilder::new()
        .flexible(false)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (idx, result) in reader.records().enumerate() {
        let line = idx + 2;
        let record = result.map_err(|e| ReviewError::Format {
            line,
            reason: e.to_string(),
        })?;
        let expected = 2 + 2 * names.len();
        if record.len() != expected {
            return Err(ReviewError::Format {
                line,
                reason: format!("expected {expected} columns, got {}", record.len()),
            });
        }
        let sent_id: u64 = record[0].parse().map_err(|_| ReviewError::Format {
            line,
            reason: "sent_id is not an integer".to_string(),
        })?;
        let mut fields = Vec::new();
        for (i, name) in names.iter().enumerate() {
            let label = record[2 + 2 * i].to_string();
            let verdict = Verdict::from_csv(&record[3 + 2 * i], line)?;
            if label.is_empty() {
                continue;
            }
            fields.push(LabeledVerdict {
                field: name.to_string(),
                label,
                verdict,
            });
        }
        rows.push(ReviewRow {
            sent_id,
            sentence: record[1].to_string(),
            fields,
        });
    }
    Ok(ReviewSheet {
        corpus_kind,
        seed,
        rows,
    })
}

/// Correct/total pair with display helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldAccuracy {
    pub correct: u64,
    pub total: u64,
}

impl FieldAccuracy {
    /// Percent at full precision; 0.0 for an empty denominator.
    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64 * 100.0
        }
    }

    /// Percent rounded half-up to two decimals.
    pub fn percent2(&self) -> f64 {
        (self.percent() * 100.0).round() / 100.0
    }
}

/// Per-field and combined accuracy of one sheet.
///
/// The secondary field is scored over the rows that carry a secondary label
/// (that denominator is reported); `secondary_over_all_rows` restates it
/// against the full row count since either denominator is defensible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccuracyReport {
    pub per_field: Vec<(String, FieldAccuracy)>,
    pub combined: FieldAccuracy,
    pub secondary_over_all_rows: Option<FieldAccuracy>,
}

impl AccuracyReport {
    pub fn render_block(&self) -> String {
        let mut out = String::new();
        for (field, acc) in &self.per_field {
            out.push_str(&format!(
                "{field}: {}/{} = {:.2}%\n",
                acc.correct,
                acc.total,
                acc.percent2()
            ));
        }
        out.push_str(&format!(
            "combined: {}/{} = {:.2}%\n",
            self.combined.correct,
            self.combined.total,
            self.combined.percent2()
        ));
        if let Some(acc) = &self.secondary_over_all_rows {
            out.push_str(&format!(
                "secondary over all rows: {}/{} = {:.2}%\n",
                acc.correct,
                acc.total,
                acc.percent2()
            ));
        }
        out
    }
}

/// Scores a completed sheet. Every assigned label must carry a verdict;
/// rows with unset verdicts are rejected as a group.
///
/// The combined figure sums the per-field numerators and denominators: for
/// Miami the jointly reported topic and function fields, for Guaraní-Spanish
/// all four fields including the secondary.
pub fn score_review(sheet: &ReviewSheet) -> Result<AccuracyReport, ReviewError> {
    let mut unset_rows = Vec::new();
    for row in &sheet.rows {
        if row.fields.iter().any(|f| f.verdict == Verdict::Unset) {
            unset_rows.push(row.sent_id);
        }
    }
    if !unset_rows.is_empty() {
        return Err(ReviewError::IncompleteSheet(unset_rows));
    }

    let (primaries, secondary_name) = sheet_fields(sheet.corpus_kind);
    let mut per_field = Vec::new();
    for name in &primaries {
        let mut acc = FieldAccuracy {
            correct: 0,
            total: 0,
        };
        for row in &sheet.rows {
            if let Some(f) = row.fields.iter().find(|f| f.field == *name) {
                acc.total += 1;
                if f.verdict == Verdict::Correct {
                    acc.correct += 1;
                }
            }
        }
        per_field.push((name.to_string(), acc));
    }

    let mut secondary = FieldAccuracy {
        correct: 0,
        total: 0,
    };
    for row in &sheet.rows {
        if let Some(f) = row.fields.iter().find(|f| f.field == secondary_name) {
            secondary.total += 1;
            if f.verdict == Verdict::Correct {
                secondary.correct += 1;
            }
        }
    }
    per_field.push((secondary_name.to_string(), secondary));

    let combined_fields: &[&str] = match sheet.corpus_kind {
        CorpusKind::Miami => &["topic", "function"],
        CorpusKind::GuaSpa => &["formality", "genre", "topic", "secondary_topic"],
    };
    let mut combined = FieldAccuracy {
        correct: 0,
        total: 0,
    };
    for (name, acc) in &per_field {
        if combined_fields.contains(&name.as_str()) {
            combined.correct += acc.correct;
            combined.total += acc.total;
        }
    }

    Ok(AccuracyReport {
        per_field,
        combined,
        secondary_over_all_rows: Some(FieldAccuracy {
            correct: secondary.correct,
            total: sheet.rows.len() as u64,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::{AnnotationRecord, Provenance};
    use crate::corpus::{CoreLangTag, Gender, Sentence, SpeakerMeta, Token};
    use crate::taxonomy::{CanonLabel, FieldKind};
    use std::collections::BTreeMap;

    fn gua_fixture(n: u64) -> (Vec<AnnotationRecord>, Corpus) {
        let sentences: Vec<Sentence> = (1..=n)
            .map(|i| {
                let tokens = vec![
                    Token::new(format!("ñe{i}"), "gn", CoreLangTag::Gn),
                    Token::new(format!("palabra{i}"), "es", CoreLangTag::Spa),
                ];
                let mut s = Sentence {
                    sent_id: i,
                    filename: "tweets".into(),
                    meta: SpeakerMeta {
                        speaker: format!("user{i}"),
                        age: None,
                        gender: Gender::Unknown,
                        situation: "tweet".into(),
                    },
                    lang_tag: String::new(),
                    tokens,
                };
                s.lang_tag = crate::corpus::recompute_lang_tag(&s);
                s
            })
            .collect();
        let records = (1..=n)
            .map(|i| {
                let mut labels = BTreeMap::new();
                labels.insert(
                    FieldKind::Formality,
                    CanonLabel::known(FieldKind::Formality, "Formal"),
                );
                labels.insert(
                    FieldKind::Genre,
                    CanonLabel::known(FieldKind::Genre, "News"),
                );
                labels.insert(
                    FieldKind::GuaTopic,
                    CanonLabel::known(FieldKind::GuaTopic, "Government_Announcement"),
                );
                AnnotationRecord {
                    sent_id: i,
                    corpus_kind: CorpusKind::GuaSpa,
                    labels,
                    secondary: Some(CanonLabel::known(FieldKind::GuaTopic, "Legislation_Policy")),
                    provenance: Provenance {
                        gateway_id: "test".to_string(),
                        cache_key: String::new(),
                        fuzz_corrections: 0,
                    },
                }
            })
            .collect();
        (
            records,
            Corpus {
                kind: CorpusKind::GuaSpa,
                sentences,
            },
        )
    }

    #[test]
    fn empty_sample_is_valid() {
        let (records, corpus) = gua_fixture(5);
        let sheet = sample_for_review(&records, &corpus, 0, 7).unwrap();
        assert!(sheet.rows.is_empty());
    }

    #[test]
    fn oversized_sample_is_rejected() {
        let (records, corpus) = gua_fixture(5);
        assert!(matches!(
            sample_for_review(&records, &corpus, 6, 7),
            Err(ReviewError::SampleTooLarge {
                requested: 6,
                available: 5
            })
        ));
    }

    #[test]
    fn same_seed_same_sheet() {
        let (records, corpus) = gua_fixture(60);
        let one = sample_for_review(&records, &corpus, 30, 7).unwrap();
        let two = sample_for_review(&records, &corpus, 30, 7).unwrap();
        assert_eq!(one, two);
        assert_eq!(one.rows.len(), 30);

        let other = sample_for_review(&records, &corpus, 30, 8).unwrap();
        assert_ne!(one, other);
    }

    #[test]
    fn sample_has_unique_sent_ids() {
        let (records, corpus) = gua_fixture(40);
        let sheet = sample_for_review(&records, &corpus, 30, 3).unwrap();
        let mut ids: Vec<u64> = sheet.rows.iter().map(|r| r.sent_id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 30);
    }

    #[test]
    fn sheet_roundtrips_through_csv() {
        let (records, corpus) = gua_fixture(10);
        let mut sheet = sample_for_review(&records, &corpus, 5, 7).unwrap();
        for row in &mut sheet.rows {
            for field in &mut row.fields {
                field.verdict = Verdict::Correct;
            }
        }
        let mut buf = Vec::new();
        write_sheet(&sheet, &mut buf).unwrap();
        let reread = read_sheet(std::io::Cursor::new(&buf)).unwrap();
        assert_eq!(sheet, reread);
    }

    fn sheet_with_verdicts(kind: CorpusKind, rows: Vec<ReviewRow>) -> ReviewSheet {
        ReviewSheet {
            corpus_kind: kind,
            seed: 0,
            rows,
        }
    }

    fn gua_row(sent_id: u64, verdicts: [Verdict; 4]) -> ReviewRow {
        ReviewRow {
            sent_id,
            sentence: format!("s{sent_id}"),
            fields: vec![
                LabeledVerdict {
                    field: "formality".to_string(),
                    label: "Formal".to_string(),
                    verdict: verdicts[0],
                },
                LabeledVerdict {
                    field: "genre".to_string(),
                    label: "News".to_string(),
                    verdict: verdicts[1],
                },
                LabeledVerdict {
                    field: "topic".to_string(),
                    label: "Government_Announcement".to_string(),
                    verdict: verdicts[2],
                },
                LabeledVerdict {
                    field: "secondary_topic".to_string(),
                    label: "Legislation_Policy".to_string(),
                    verdict: verdicts[3],
                },
            ],
        }
    }

    #[test]
    fn gua_113_of_120_scores_94_17() {
        use Verdict::*;
        // 30 rows x 4 fields = 120 verdicts; make exactly 7 incorrect.
        let rows: Vec<ReviewRow> = (1..=30)
            .map(|i| {
                let verdicts = match i {
                    1 | 2 => [Incorrect, Correct, Correct, Correct],
                    3 | 4 => [Correct, Incorrect, Correct, Correct],
                    5 | 6 => [Correct, Correct, Incorrect, Correct],
                    7 => [Correct, Correct, Correct, Incorrect],
                    _ => [Correct; 4],
                };
                gua_row(i, verdicts)
            })
            .collect();
        let report = score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows)).unwrap();
        assert_eq!(report.combined.correct, 113);
        assert_eq!(report.combined.total, 120);
        assert_eq!(report.combined.percent2(), 94.17);
    }

    fn miami_row(sent_id: u64, secondary: Option<Verdict>) -> ReviewRow {
        let mut fields = vec![
            LabeledVerdict {
                field: "topic".to_string(),
                label: "Casual_EverydayTalk".to_string(),
                verdict: Verdict::Correct,
            },
            LabeledVerdict {
                field: "function".to_string(),
                label: "Narrative".to_string(),
                verdict: Verdict::Correct,
            },
        ];
        if let Some(verdict) = secondary {
            fields.push(LabeledVerdict {
                field: "secondary_function".to_string(),
                label: "StanceEmphasis".to_string(),
                verdict,
            });
        }
        ReviewRow {
            sent_id,
            sentence: format!("s{sent_id}"),
            fields,
        }
    }

    #[test]
    fn miami_18_of_30_secondary_scores_60() {
        use Verdict::*;
        let rows: Vec<ReviewRow> = (1..=30)
            .map(|i| miami_row(i, Some(if i <= 18 { Correct } else { Incorrect })))
            .collect();
        let report = score_review(&sheet_with_verdicts(CorpusKind::Miami, rows)).unwrap();
        let secondary = report
            .per_field
            .iter()
            .find(|(name, _)| name == "secondary_function")
            .unwrap();
        assert_eq!(secondary.1.correct, 18);
        assert_eq!(secondary.1.total, 30);
        assert_eq!(secondary.1.percent2(), 60.00);
        // Combined covers topic and function only.
        assert_eq!(report.combined.total, 60);
        assert_eq!(report.combined.percent2(), 100.00);
    }

    #[test]
    fn secondary_denominator_counts_only_assigned_rows() {
        use Verdict::*;
        let rows: Vec<ReviewRow> = (1..=10)
            .map(|i| miami_row(i, if i <= 4 { Some(Correct) } else { None }))
            .collect();
        let report = score_review(&sheet_with_verdicts(CorpusKind::Miami, rows)).unwrap();
        let secondary = report
            .per_field
            .iter()
            .find(|(name, _)| name == "secondary_function")
            .unwrap();
        assert_eq!(secondary.1.total, 4);
        assert_eq!(report.secondary_over_all_rows.unwrap().total, 10);
    }

    #[test]
    fn all_incorrect_scores_zero() {
        use Verdict::*;
        let rows = vec![gua_row(1, [Incorrect; 4]), gua_row(2, [Incorrect; 4])];
        let report = score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows)).unwrap();
        assert_eq!(report.combined.percent2(), 0.00);
    }

    #[test]
    fn unset_verdicts_are_rejected_with_row_list() {
        use Verdict::*;
        let rows = vec![
            gua_row(1, [Correct; 4]),
            gua_row(2, [Correct, Unset, Correct, Correct]),
        ];
        match score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows)) {
            Err(ReviewError::IncompleteSheet(ids)) => assert_eq!(ids, vec![2]),
            other => panic!("expected IncompleteSheet, got {other:?}"),
        }
    }

    #[test]
    fn score_is_invariant_under_row_permutation() {
        use Verdict::*;
        let mut rows: Vec<ReviewRow> = (1..=12)
            .map(|i| {
                gua_row(
                    i,
                    if i % 3 == 0 {
                        [Incorrect, Correct, Correct, Correct]
                    } else {
                        [Correct; 4]
                    },
                )
            })
            .collect();
        let before = score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows.clone())).unwrap();
        rows.reverse();
        let after = score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn combined_equals_sum_of_per_field() {
        use Verdict::*;
        let rows: Vec<ReviewRow> = (1..=9)
            .map(|i| gua_row(i, [Correct, Incorrect, Correct, Correct]))
            .collect();
        let report = score_review(&sheet_with_verdicts(CorpusKind::GuaSpa, rows)).unwrap();
        let sum_correct: u64 = report.per_field.iter().map(|(_, a)| a.correct).sum();
        let sum_total: u64 = report.per_field.iter().map(|(_, a)| a.total).sum();
        assert_eq!(report.combined.correct, sum_correct);
        assert_eq!(report.combined.total, sum_total);
    }

    #[test]
    fn sampling_is_uniform_at_desk_scale() {
        // Chi-square over a deterministic seed sweep: 16 records, draw 4,
        // 4000 seeds, expected 1000 selections per record, df = 15.
        let (records, corpus) = gua_fixture(16);
        let mut counts = [0u64; 16];
        for seed in 0..4000u64 {
            let sheet = sample_for_review(&records, &corpus, 4, seed).unwrap();
            for row in &sheet.rows {
                counts[(row.sent_id - 1) as usize] += 1;
            }
        }
        let expected = 1000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 99.9th percentile of chi-square with df=15 is 37.7.
        assert!(chi2 < 37.7, "chi2 = {chi2}, counts = {counts:?}");
    }
}
