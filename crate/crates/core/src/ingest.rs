//! Parsing of the corpus interchange format and tag merging.
//!
//! The interchange format is UTF-8, one JSON record per line:
//!
//! ```text
//! {"sent_id":916,"filename":"sastre9","speaker":"MAR","age":63,"gender":"F",
//!  "situation":"conversation","tokens":[{"text":"ay","raw_tag":"spa"},...]}
//! ```
//!
//! `lang_tag` may appear in records (serialization writes it) but is never
//! trusted: it is recomputed from the merged token tags on every parse.
//! Converters from source-specific formats (CHAT, shared-task columns) live
//! outside this crate; they only need to emit the record shape above.

use crate::corpus::{
    distinct_core_languages, is_content_token, recompute_lang_tag, CoreLangTag, Corpus, CorpusKind,
    Gender, Sentence, SpeakerMeta, Token,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate sent_id {sent_id}")]
    DuplicateSentId { line: usize, sent_id: u64 },
    #[error("line {line}: unmapped raw tag \"{tag}\"")]
    UnmappedTag { line: usize, tag: String },
    #[error("line {line}: sentence {sent_id} has no content tokens")]
    EmptySentence { line: usize, sent_id: u64 },
    #[error("line {line}: tag {tag} is not legal for {kind} corpora")]
    IllegalTag {
        line: usize,
        tag: CoreLangTag,
        kind: CorpusKind,
    },
    #[error("read failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Maps raw source tags onto merged [`CoreLangTag`]s.
///
/// The mapping must cover every raw tag observed, or carry a default;
/// otherwise parsing fails with [`IngestError::UnmappedTag`] rather than
/// guessing.
#[derive(Debug, Clone)]
pub struct TagMapping {
    entries: BTreeMap<String, CoreLangTag>,
    default: Option<CoreLangTag>,
}

impl TagMapping {
    pub fn new(entries: BTreeMap<String, CoreLangTag>, default: Option<CoreLangTag>) -> Self {
        TagMapping { entries, default }
    }

    /// The mapping shipped for each corpus kind.
    ///
    /// Miami transcripts use the four tags `spa`, `eng`, `eng&spa`, `punc`.
    /// The Guaraní-Spanish release merges all Spanish variants and
    /// named-entity tags under `spa`, keeps `gn`, folds mixed tokens into
    /// `gn&spa`, and groups foreign/unclassified tokens, punctuation and
    /// emojis as `other`. Raw tags outside these lists surface as
    /// `UnmappedTag` instead of being silently coerced.
    pub fn builtin(kind: CorpusKind) -> Self {
        let entries: &[(&str, CoreLangTag)] = match kind {
            CorpusKind::Miami => &[
                ("spa", CoreLangTag::Spa),
                ("eng", CoreLangTag::Eng),
                ("eng&spa", CoreLangTag::EngSpa),
                ("punc", CoreLangTag::Punc),
            ],
            CorpusKind::GuaSpa => &[
                ("es", CoreLangTag::Spa),
                ("spa", CoreLangTag::Spa),
                ("ne", CoreLangTag::Spa),
                ("ne_es", CoreLangTag::Spa),
                ("gn", CoreLangTag::Gn),
                ("gn&spa", CoreLangTag::GnSpa),
                ("mix", CoreLangTag::GnSpa),
                ("other", CoreLangTag::Other),
                ("foreign", CoreLangTag::Other),
                ("unk", CoreLangTag::Other),
                ("punct", CoreLangTag::Other),
                ("emoji", CoreLangTag::Other),
            ],
        };
        TagMapping {
            entries: entries
                .iter()
                .map(|(raw, core)| (raw.to_string(), *core))
                .collect(),
            default: None,
        }
    }

    /// Merges one raw tag. Returns the mapped tag, the default when the tag
    /// is absent and a default is set, and `None` otherwise.
    pub fn merge(&self, raw: &str) -> Option<CoreLangTag> {
        self.entries.get(raw).copied().or(self.default)
    }
}

/// Applies a mapping to a single raw tag, with line context for errors.
pub fn merge_raw_tag(
    raw: &str,
    mapping: &TagMapping,
    line: usize,
) -> Result<CoreLangTag, IngestError> {
    mapping.merge(raw).ok_or_else(|| IngestError::UnmappedTag {
        line,
        tag: raw.to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TokenRecord {
    text: String,
    raw_tag: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SentenceRecord {
    sent_id: u64,
    filename: String,
    speaker: String,
    age: Option<u32>,
    gender: Option<String>,
    situation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lang_tag: Option<String>,
    tokens: Vec<TokenRecord>,
}

fn gender_from_record(value: Option<&str>, line: usize) -> Result<Gender, IngestError> {
    match value {
        Some("M") => Ok(Gender::M),
        Some("F") => Ok(Gender::F),
        None => Ok(Gender::Unknown),
        Some(other) => Err(IngestError::Parse {
            line,
            reason: format!("gender must be \"M\", \"F\" or null, got \"{other}\""),
        }),
    }
}

fn gender_to_record(gender: Gender) -> Option<String> {
    match gender {
        Gender::M => Some("M".to_string()),
        Gender::F => Some("F".to_string()),
        Gender::Unknown => None,
    }
}

/// Parses a line-delimited interchange stream into a validated [`Corpus`].
///
/// Every token's merged tag is derived through `mapping`, `lang_tag` is
/// recomputed, duplicate sentence ids are rejected, and sentences without
/// content tokens are rejected.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    kind: CorpusKind,
    mapping: &TagMapping,
) -> Result<Corpus, IngestError> {
    let mut sentences = Vec::new();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::Parse {
                line: line_no,
                reason: e.to_string(),
            })?;
        if !seen_ids.insert(record.sent_id) {
            return Err(IngestError::DuplicateSentId {
                line: line_no,
                sent_id: record.sent_id,
            });
        }
        if record.tokens.is_empty() {
            return Err(IngestError::Parse {
                line: line_no,
                reason: format!("sentence {} has no tokens", record.sent_id),
            });
        }
        let mut tokens = Vec::with_capacity(record.tokens.len());
        for tok in record.tokens {
            if tok.text.is_empty() {
                return Err(IngestError::Parse {
                    line: line_no,
                    reason: format!("sentence {} has a token with empty text", record.sent_id),
                });
            }
            let core = merge_raw_tag(&tok.raw_tag, mapping, line_no)?;
            if !kind.legal_tags().contains(&core) {
                return Err(IngestError::IllegalTag {
                    line: line_no,
                    tag: core,
                    kind,
                });
            }
            tokens.push(Token {
                text: tok.text,
                raw_tag: tok.raw_tag,
                core,
            });
        }
        if !tokens.iter().any(is_content_token) {
            return Err(IngestError::EmptySentence {
                line: line_no,
                sent_id: record.sent_id,
            });
        }
        let gender = gender_from_record(record.gender.as_deref(), line_no)?;
        let mut sentence = Sentence {
            sent_id: record.sent_id,
            filename: record.filename,
            meta: SpeakerMeta {
                speaker: record.speaker,
                age: record.age,
                gender,
                situation: record.situation,
            },
            lang_tag: String::new(),
            tokens,
        };
        sentence.lang_tag = recompute_lang_tag(&sentence);
        sentences.push(sentence);
    }
    Ok(Corpus { kind, sentences })
}

/// Writes a corpus back out in the interchange format, one record per line.
pub fn serialize_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> Result<(), IngestError> {
    for s in &corpus.sentences {
        let record = SentenceRecord {
            sent_id: s.sent_id,
            filename: s.filename.clone(),
            speaker: s.meta.speaker.clone(),
            age: s.meta.age,
            gender: gender_to_record(s.meta.gender),
            situation: s.meta.situation.clone(),
            lang_tag: Some(s.lang_tag.clone()),
            tokens: s
                .tokens
                .iter()
                .map(|t| TokenRecord {
                    text: t.text.clone(),
                    raw_tag: t.raw_tag.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &record).map_err(|e| IngestError::Parse {
            line: 0,
            reason: e.to_string(),
        })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Retains exactly the sentences with two or more distinct core languages,
/// preserving order. Ambiguous tokens establish no second language, so a
/// sentence tagged `[spa, gn&spa]` is dropped.
pub fn filter_intrasentential(corpus: &Corpus) -> Corpus {
    Corpus {
        kind: corpus.kind,
        sentences: corpus
            .sentences
            .iter()
            .filter(|s| distinct_core_languages(s).len() >= 2)
            .cloned()
            .collect(),
    }
}
