//! Cross-tabulation of annotation records against metadata and dominance
//! axes, column normalization, small-category aggregation, and table
//! rendering.
//!
//! Sentences whose column value is an excluded bucket (gender `Unknown`,
//! dominance `Balanced`, sentinel formality) are omitted from the counts
//! and surfaced in a footer line instead of silently dropped, so table
//! totals can be reconciled against corpus totals.

use crate::annotator::AnnotationRecord;
use crate::corpus::{Corpus, CorpusKind, Sentence};
use crate::metrics::{dominant_language, round1};
use crate::taxonomy::{builtin_schema, FieldKind};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown axis: {0}")]
    UnknownAxis(String),
    #[error("record sent_id {0} does not resolve to a corpus sentence")]
    DanglingSentId(u64),
    #[error("bad table shape: {0}")]
    BadShape(String),
}

/// A named categorical axis with its ordered labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub labels: Vec<String>,
}

/// Counts of sentences per (row label, column label).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub cells: Vec<Vec<u64>>,
    pub col_totals: Vec<u64>,
    /// Sentences omitted because their column value is an excluded bucket.
    pub excluded: u64,
    /// Human-readable description of the excluded bucket.
    pub excluded_note: String,
}

impl CountTable {
    pub fn new(
        row_axis: Axis,
        col_axis: Axis,
        cells: Vec<Vec<u64>>,
        excluded: u64,
        excluded_note: String,
    ) -> Self {
        let cols = col_axis.labels.len();
        let col_totals = (0..cols)
            .map(|j| cells.iter().map(|row| row[j]).sum())
            .collect();
        CountTable {
            row_axis,
            col_axis,
            cells,
            col_totals,
            excluded,
            excluded_note,
        }
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.cells[row].iter().sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.col_totals.iter().sum()
    }

    /// Hash of the canonical CSV rendering, used as percent-table provenance.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(render_counts(self, TableFormat::Csv).as_bytes());
        hex::encode(hasher.finalize())
    }
}

/// Column-normalized view of a [`CountTable`]. Cells keep full precision;
/// rendering rounds to one decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct PercentTable {
    pub row_axis: Axis,
    pub col_axis: Axis,
    pub cells: Vec<Vec<f64>>,
    pub col_totals: Vec<u64>,
    pub row_totals: Vec<u64>,
    /// Indices of columns whose total was zero (rendered as 0.0 throughout).
    pub zero_columns: Vec<usize>,
    pub excluded: u64,
    pub excluded_note: String,
    /// Content hash of the source count table.
    pub provenance: String,
}

/// How small rows get folded into an `Others` row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Keep the n largest rows, sum the rest.
    TopN(usize),
    /// Merge every row whose total is <= the threshold.
    MinTotal(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationPolicy {
    pub mode: AggregationMode,
    pub others_label: String,
}

impl AggregationPolicy {
    pub fn top_n(n: usize) -> Self {
        AggregationPolicy {
            mode: AggregationMode::TopN(n),
            others_label: "Others".to_string(),
        }
    }

    pub fn min_total(threshold: u64) -> Self {
        AggregationPolicy {
            mode: AggregationMode::MinTotal(threshold),
            others_label: "Others".to_string(),
        }
    }
}

/// Column axis choices for [`crosstab`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnAxis {
    /// Speaker gender; `Unknown` rows are excluded.
    Gender,
    /// Annotated formality (Guaraní-Spanish only); sentinel rows excluded.
    Formality,
    /// Sentence dominance; `Balanced` rows are excluded.
    Dominance,
}

impl ColumnAxis {
    fn axis(self, kind: CorpusKind) -> Result<Axis, AnalysisError> {
        match self {
            ColumnAxis::Gender => Ok(Axis {
                name: "gender".to_string(),
                labels: vec!["Men".to_string(), "Women".to_string()],
            }),
            ColumnAxis::Formality => {
                if kind != CorpusKind::GuaSpa {
                    return Err(AnalysisError::UnknownAxis(format!(
                        "formality is not an axis of {kind} corpora"
                    )));
                }
                Ok(Axis {
                    name: "formality".to_string(),
                    labels: vec!["Formal".to_string(), "Informal".to_string()],
                })
            }
            ColumnAxis::Dominance => Ok(Axis {
                name: "dominance".to_string(),
                labels: match kind {
                    CorpusKind::Miami => {
                        vec!["SpanishDominant".to_string(), "EnglishDominant".to_string()]
                    }
                    CorpusKind::GuaSpa => {
                        vec!["GuaraniDominant".to_string(), "SpanishDominant".to_string()]
                    }
                },
            }),
        }
    }

    fn excluded_note(self) -> &'static str {
        match self {
            ColumnAxis::Gender => "gender=Unknown",
            ColumnAxis::Formality => "formality=UNKNOWN_FORMALITY",
            ColumnAxis::Dominance => "dominance=Balanced",
        }
    }

    fn value_for(self, record: &AnnotationRecord, sentence: &Sentence) -> Option<String> {
        match self {
            ColumnAxis::Gender => sentence.meta.gender.column_label().map(str::to_string),
            ColumnAxis::Formality => record
                .label(FieldKind::Formality)
                .filter(|l| !l.unknown)
                .map(|l| l.label.clone()),
            ColumnAxis::Dominance => {
                let class = dominant_language(sentence);
                if class == crate::corpus::DominanceClass::Balanced {
                    None
                } else {
                    Some(class.as_str().to_string())
                }
            }
        }
    }
}

/// Cross-tabulates records by an annotation field (rows) and a metadata or
/// dominance axis (columns). Rows come out sorted by descending total with
/// ties broken by schema order; all-zero rows are dropped.
pub fn crosstab(
    records: &[AnnotationRecord],
    corpus: &Corpus,
    row_field: FieldKind,
    col_axis: ColumnAxis,
) -> Result<CountTable, AnalysisError> {
    let schema = builtin_schema(corpus.kind);
    let schema_field = schema.field(row_field).ok_or_else(|| {
        AnalysisError::UnknownAxis(format!(
            "{row_field} is not a field of the {} schema",
            corpus.kind
        ))
    })?;
    let columns = col_axis.axis(corpus.kind)?;

    let by_id: HashMap<u64, &Sentence> = corpus.sentences.iter().map(|s| (s.sent_id, s)).collect();

    // Schema order first, sentinel last; tie-breaking relies on this.
    let mut row_labels: Vec<String> = schema_field.labels().map(str::to_string).collect();
    row_labels.push(row_field.sentinel().to_string());
    let row_index: BTreeMap<&str, usize> = row_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let col_index: BTreeMap<&str, usize> = columns
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let mut cells = vec![vec![0u64; columns.labels.len()]; row_labels.len()];
    let mut excluded = 0u64;
    for record in records {
        let sentence = by_id
            .get(&record.sent_id)
            .ok_or(AnalysisError::DanglingSentId(record.sent_id))?;
        let row_label = record
            .label(row_field)
            .map(|l| l.label.clone())
            .unwrap_or_else(|| row_field.sentinel().to_string());
        let row = *row_index
            .get(row_label.as_str())
            .unwrap_or(&(row_labels.len() - 1));
        match col_axis.value_for(record, sentence) {
            Some(value) => {
                let col = *col_index.get(value.as_str()).ok_or_else(|| {
                    AnalysisError::UnknownAxis(format!("unexpected column value {value}"))
                })?;
                cells[row][col] += 1;
            }
            None => excluded += 1,
        }
    }

    let mut order: Vec<usize> = (0..row_labels.len()).collect();
    order.retain(|&i| cells[i].iter().sum::<u64>() > 0);
    order.sort_by_key(|&i| std::cmp::Reverse(cells[i].iter().sum::<u64>()));

    let sorted_labels = order.iter().map(|&i| row_labels[i].clone()).collect();
    let sorted_cells = order.iter().map(|&i| cells[i].clone()).collect();
    Ok(CountTable::new(
        Axis {
            name: row_field.wire_name().to_string(),
            labels: sorted_labels,
        },
        columns,
        sorted_cells,
        excluded,
        col_axis.excluded_note().to_string(),
    ))
}

/// Divides every cell by its column total (x100). Zero-total columns render
/// as 0.0 throughout and are flagged.
pub fn normalize_within_columns(table: &CountTable) -> PercentTable {
    let mut zero_columns = Vec::new();
    let cells = table
        .cells
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &count)| {
                    if table.col_totals[j] == 0 {
                        0.0
                    } else {
                        count as f64 / table.col_totals[j] as f64 * 100.0
                    }
                })
                .collect()
        })
        .collect();
    for (j, &total) in table.col_totals.iter().enumerate() {
        if total == 0 {
            zero_columns.push(j);
        }
    }
    PercentTable {
        row_axis: table.row_axis.clone(),
        col_axis: table.col_axis.clone(),
        cells,
        col_totals: table.col_totals.clone(),
        row_totals: (0..table.cells.len()).map(|i| table.row_total(i)).collect(),
        zero_columns,
        excluded: table.excluded,
        excluded_note: table.excluded_note.clone(),
        provenance: table.content_hash(),
    }
}

/// Folds small rows into a trailing `Others` row. The input must already be
/// sorted by descending row total (as [`crosstab`] produces); the grand
/// total is conserved.
pub fn aggregate_others(table: &CountTable, policy: &AggregationPolicy) -> CountTable {
    let keep: Vec<bool> = match policy.mode {
        AggregationMode::TopN(n) => (0..table.cells.len()).map(|i| i < n).collect(),
        AggregationMode::MinTotal(threshold) => (0..table.cells.len())
            .map(|i| table.row_total(i) > threshold)
            .collect(),
    };
    if keep.iter().all(|&k| k) {
        return table.clone();
    }

    let cols = table.col_axis.labels.len();
    let mut labels = Vec::new();
    let mut cells = Vec::new();
    let mut others = vec![0u64; cols];
    let mut merged_any = false;
    for (i, row) in table.cells.iter().enumerate() {
        if keep[i] {
            labels.push(table.row_axis.labels[i].clone());
            cells.push(row.clone());
        } else {
            merged_any = true;
            for (j, &v) in row.iter().enumerate() {
                others[j] += v;
            }
        }
    }
    if merged_any {
        labels.push(policy.others_label.clone());
        cells.push(others);
    }
    CountTable::new(
        Axis {
            name: table.row_axis.name.clone(),
            labels,
        },
        table.col_axis.clone(),
        cells,
        table.excluded,
        table.excluded_note.clone(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

fn excluded_footer(excluded: u64, note: &str, format: TableFormat) -> String {
    if excluded == 0 {
        return String::new();
    }
    match format {
        TableFormat::Csv => format!("# excluded: {excluded} ({note})\n"),
        TableFormat::Markdown => format!("\n_excluded: {excluded} ({note})_\n"),
    }
}

/// Renders a count table with a row-total column and a final Total row.
pub fn render_counts(table: &CountTable, format: TableFormat) -> String {
    let header: Vec<String> = std::iter::once(table.row_axis.name.clone())
        .chain(table.col_axis.labels.iter().cloned())
        .chain(std::iter::once("Total".to_string()))
        .collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, row) in table.cells.iter().enumerate() {
        let mut out = vec![table.row_axis.labels[i].clone()];
        out.extend(row.iter().map(|v| v.to_string()));
        out.push(table.row_total(i).to_string());
        rows.push(out);
    }
    let mut total = vec!["Total".to_string()];
    total.extend(table.col_totals.iter().map(|v| v.to_string()));
    total.push(table.grand_total().to_string());
    rows.push(total);
    render_grid(&header, &rows, format)
        + &excluded_footer(table.excluded, &table.excluded_note, format)
}

/// Renders a percent table at one decimal, with the source row totals as an
/// `n` column and the column totals as the final row. Zero-total columns
/// are annotated `(n=0)` in the header.
pub fn render_percents(table: &PercentTable, format: TableFormat) -> String {
    let header: Vec<String> = std::iter::once(table.row_axis.name.clone())
        .chain(table.col_axis.labels.iter().enumerate().map(|(j, l)| {
            if table.zero_columns.contains(&j) {
                format!("{l} (n=0)")
            } else {
                format!("{l} (%)")
            }
        }))
        .chain(std::iter::once("Total (n)".to_string()))
        .collect();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for (i, row) in table.cells.iter().enumerate() {
        let mut out = vec![table.row_axis.labels[i].clone()];
        out.extend(row.iter().map(|v| format!("{:.1}", round1(*v))));
        out.push(table.row_totals[i].to_string());
        rows.push(out);
    }
    let mut total = vec!["Total".to_string()];
    total.extend(table.col_totals.iter().map(|v| v.to_string()));
    total.push(table.col_totals.iter().sum::<u64>().to_string());
    rows.push(total);
    render_grid(&header, &rows, format)
        + &excluded_footer(table.excluded, &table.excluded_note, format)
}

fn render_grid(header: &[String], rows: &[Vec<String>], format: TableFormat) -> String {
    match format {
        TableFormat::Csv => {
            let mut out = String::new();
            out.push_str(&csv_row(header));
            for row in rows {
                out.push_str(&csv_row(row));
            }
            out
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            out.push_str(&format!("| {} |\n", header.join(" | ")));
            let mut separators = vec!["---".to_string()];
            separators.extend(std::iter::repeat_n("---:".to_string(), header.len() - 1));
            out.push_str(&format!("| {} |\n", separators.join(" | ")));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out
        }
    }
}

fn csv_row(fields: &[String]) -> String {
    let escaped: Vec<String> = fields
        .iter()
        .map(|f| {
            if f.contains(',') || f.contains('"') || f.contains('\n') {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect();
    format!("{}\n", escaped.join(","))
}
