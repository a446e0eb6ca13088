//! Batch annotation: drive a gateway over many sentences and collect
//! canonicalized records.
//!
//! Failures are collect-and-continue: a sentence whose response stays
//! malformed after the retry budget lands in the failure list and the run
//! moves on. Only [`GatewayError::Unavailable`] aborts the run, returning
//! whatever completed so far. Output ordering is ascending `sent_id`
//! regardless of completion order, so a deterministic gateway yields a
//! deterministic record list at any concurrency level.

use super::gateway::{Gateway, GatewayError};
use super::prompt::{build_prompt, Exemplar, GatewayParams, PromptError};
use super::response::{parse_response, ResponseError};
use super::GatewayPolicy;
use crate::corpus::{CorpusKind, Sentence};
use crate::taxonomy::{
    canonicalize_secondary, validate_record, AnnotationSchema, CanonLabel, FieldKind,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use thiserror::Error;

/// Where a record came from and how much repair it needed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub gateway_id: String,
    pub cache_key: String,
    /// Number of fields repaired by fuzzy label matching.
    pub fuzz_corrections: u32,
}

/// Canonical labels assigned to one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationRecord {
    pub sent_id: u64,
    pub corpus_kind: CorpusKind,
    pub labels: BTreeMap<FieldKind, CanonLabel>,
    pub secondary: Option<CanonLabel>,
    pub provenance: Provenance,
}

impl AnnotationRecord {
    pub fn label(&self, field: FieldKind) -> Option<&CanonLabel> {
        self.labels.get(&field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    SchemaMismatch,
    Gateway,
    ReplayMiss,
    NonStrictJson,
    MissingSentId,
    UnexpectedKey,
    SentIdMismatch,
    MissingRequiredField,
}

/// Terminal failure for one sentence after the retry budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchFailure {
    pub sent_id: u64,
    pub kind: FailureKind,
    pub message: String,
}

/// Result of one batch: records and failures sorted by `sent_id`, plus the
/// abort reason when the gateway became unavailable mid-run (sentences not
/// yet attempted appear in neither list).
#[derive(Debug, Default)]
pub struct BatchOutcome {
    pub records: Vec<AnnotationRecord>,
    pub failures: Vec<BatchFailure>,
    pub aborted: Option<String>,
}

enum SentenceError {
    Fatal(String),
    Failure(FailureKind, String),
}

/// Bundles the schema, exemplars, parameters and policy for a run.
pub struct Annotator<'a> {
    schema: &'a AnnotationSchema,
    exemplars: Vec<Exemplar>,
    params: GatewayParams,
    policy: GatewayPolicy,
}

impl<'a> Annotator<'a> {
    pub fn new(
        schema: &'a AnnotationSchema,
        exemplars: Vec<Exemplar>,
        params: GatewayParams,
        policy: GatewayPolicy,
    ) -> Self {
        Annotator {
            schema,
            exemplars,
            params,
            policy,
        }
    }

    /// Annotates every sentence, retrying failed responses with the
    /// identical bundle up to `max_retries` times.
    pub fn annotate_batch(&self, rows: &[Sentence], gateway: &dyn Gateway) -> BatchOutcome {
        let next = AtomicUsize::new(0);
        let abort: Mutex<Option<String>> = Mutex::new(None);
        let records: Mutex<Vec<AnnotationRecord>> = Mutex::new(Vec::new());
        let failures: Mutex<Vec<BatchFailure>> = Mutex::new(Vec::new());

        let workers = self.policy.max_concurrency.max(1).min(rows.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    if abort.lock().expect("abort flag poisoned").is_some() {
                        break;
                    }
                    let idx = next.fetch_add(1, Ordering::SeqCst);
                    if idx >= rows.len() {
                        break;
                    }
                    let sentence = &rows[idx];
                    match self.annotate_one(sentence, gateway) {
                        Ok(record) => records.lock().expect("records poisoned").push(record),
                        Err(SentenceError::Fatal(message)) => {
                            *abort.lock().expect("abort flag poisoned") = Some(message);
                            break;
                        }
                        Err(SentenceError::Failure(kind, message)) => failures
                            .lock()
                            .expect("failures poisoned")
                            .push(BatchFailure {
                                sent_id: sentence.sent_id,
                                kind,
                                message,
                            }),
                    }
                });
            }
        });

        let mut records = records.into_inner().expect("records poisoned");
        let mut failures = failures.into_inner().expect("failures poisoned");
        records.sort_by_key(|r| r.sent_id);
        failures.sort_by_key(|f| f.sent_id);
        BatchOutcome {
            records,
            failures,
            aborted: abort.into_inner().expect("abort flag poisoned"),
        }
    }

    fn annotate_one(
        &self,
        sentence: &Sentence,
        gateway: &dyn Gateway,
    ) -> Result<AnnotationRecord, SentenceError> {
        let bundle = build_prompt(sentence, self.schema, &self.exemplars, self.params.clone())
            .map_err(|e: PromptError| {
                SentenceError::Failure(FailureKind::SchemaMismatch, e.to_string())
            })?;

        let attempts = self.policy.max_retries + 1;
        let mut last: Option<SentenceError> = None;
        for _ in 0..attempts {
            let text = match gateway.complete(&bundle) {
                Ok(text) => text,
                Err(GatewayError::Unavailable(message)) => {
                    return Err(SentenceError::Fatal(message))
                }
                Err(GatewayError::ReplayMiss { cache_key }) => {
                    last = Some(SentenceError::Failure(
                        FailureKind::ReplayMiss,
                        format!("no recorded response for {cache_key}"),
                    ));
                    continue;
                }
                Err(GatewayError::Response(message)) => {
                    last = Some(SentenceError::Failure(FailureKind::Gateway, message));
                    continue;
                }
            };
            match self.interpret(sentence, &bundle.cache_key, gateway, &text) {
                Ok(record) => return Ok(record),
                Err(failure) => last = Some(failure),
            }
        }
        Err(last.unwrap_or(SentenceError::Failure(
            FailureKind::Gateway,
            "no attempt was made".to_string(),
        )))
    }

    fn interpret(
        &self,
        sentence: &Sentence,
        cache_key: &str,
        gateway: &dyn Gateway,
        text: &str,
    ) -> Result<AnnotationRecord, SentenceError> {
        let raw = parse_response(text, self.schema.corpus_kind).map_err(|e| {
            let kind = match e {
                ResponseError::NonStrictJson(_) | ResponseError::NonStringField(_) => {
                    FailureKind::NonStrictJson
                }
                ResponseError::MissingSentId => FailureKind::MissingSentId,
                ResponseError::UnexpectedKey(_) => FailureKind::UnexpectedKey,
            };
            SentenceError::Failure(kind, e.to_string())
        })?;
        if raw.sent_id != sentence.sent_id {
            return Err(SentenceError::Failure(
                FailureKind::SentIdMismatch,
                format!(
                    "expected sent_id {}, response carried {}",
                    sentence.sent_id, raw.sent_id
                ),
            ));
        }

        let secondary_key = self.schema.secondary_wire_name();
        let mut primary_fields: BTreeMap<FieldKind, String> = BTreeMap::new();
        let mut secondary_raw: Option<String> = None;
        for (key, value) in &raw.fields {
            if secondary_key.as_deref() == Some(key.as_str()) {
                secondary_raw = Some(value.clone());
            } else if let Some(kind) = wire_field(self.schema.corpus_kind, key) {
                primary_fields.insert(kind, value.clone());
            }
        }

        let report = validate_record(&primary_fields, self.schema);
        let missing = report.missing_required();
        if !missing.is_empty() {
            let names: Vec<&str> = missing.iter().map(|k| k.wire_name()).collect();
            return Err(SentenceError::Failure(
                FailureKind::MissingRequiredField,
                format!("missing required field(s): {}", names.join(", ")),
            ));
        }

        let labels: BTreeMap<FieldKind, CanonLabel> = report
            .fields
            .iter()
            .filter_map(|f| f.canonical.clone().map(|c| (f.field, c)))
            .collect();
        let secondary = secondary_raw.and_then(|raw_label| {
            self.schema
                .secondary
                .and_then(|kind| canonicalize_secondary(&raw_label, kind, self.schema))
        });

        Ok(AnnotationRecord {
            sent_id: sentence.sent_id,
            corpus_kind: self.schema.corpus_kind,
            labels,
            secondary,
            provenance: Provenance {
                gateway_id: gateway.id(),
                cache_key: cache_key.to_string(),
                fuzz_corrections: report.fuzz_corrections() as u32,
            },
        })
    }
}

fn wire_field(kind: CorpusKind, key: &str) -> Option<FieldKind> {
    match (kind, key) {
        (CorpusKind::Miami, "topic") => Some(FieldKind::MiamiTopic),
        (CorpusKind::Miami, "function") => Some(FieldKind::MiamiFunction),
        (CorpusKind::GuaSpa, "formality") => Some(FieldKind::Formality),
        (CorpusKind::GuaSpa, "genre") => Some(FieldKind::Genre),
        (CorpusKind::GuaSpa, "topic") => Some(FieldKind::GuaTopic),
        _ => None,
    }
}

#[derive(Debug, Error)]
pub enum RecordIoError {
    #[error("record line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("record io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize, Deserialize)]
struct RecordWire {
    sent_id: u64,
    corpus_kind: CorpusKind,
    labels: BTreeMap<String, String>,
    secondary: Option<String>,
    provenance: Provenance,
}

/// Writes records as UTF-8 JSON lines with stable key order.
pub fn write_records<W: Write>(
    records: &[AnnotationRecord],
    mut writer: W,
) -> Result<(), RecordIoError> {
    for record in records {
        let wire = RecordWire {
            sent_id: record.sent_id,
            corpus_kind: record.corpus_kind,
            labels: record
                .labels
                .iter()
                .map(|(kind, label)| (kind.wire_name().to_string(), label.label.clone()))
                .collect(),
            secondary: record.secondary.as_ref().map(|l| l.label.clone()),
            provenance: record.provenance.clone(),
        };
        let line = serde_json::to_string(&wire).map_err(|e| RecordIoError::Format {
            line: 0,
            reason: e.to_string(),
        })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Reads records written by [`write_records`].
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<AnnotationRecord>, RecordIoError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RecordWire = serde_json::from_str(&line).map_err(|e| RecordIoError::Format {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        let mut labels = BTreeMap::new();
        for (key, label) in wire.labels {
            let kind = wire_field(wire.corpus_kind, &key).ok_or_else(|| RecordIoError::Format {
                line: idx + 1,
                reason: format!("unknown label key \"{key}\" for {}", wire.corpus_kind),
            })?;
            let unknown = label == kind.sentinel();
            labels.insert(
                kind,
                CanonLabel {
                    field: kind,
                    label,
                    unknown,
                },
            );
        }
        let secondary_kind = match wire.corpus_kind {
            CorpusKind::Miami => FieldKind::MiamiFunction,
            CorpusKind::GuaSpa => FieldKind::GuaTopic,
        };
        let secondary = wire.secondary.map(|label| {
            let unknown = label == secondary_kind.sentinel();
            CanonLabel {
                field: secondary_kind,
                label,
                unknown,
            }
        });
        records.push(AnnotationRecord {
            sent_id: wire.sent_id,
            corpus_kind: wire.corpus_kind,
            labels,
            secondary,
            provenance: wire.provenance,
        });
    }
    Ok(records)
}
