//! Annotation schemas and canonicalization of model-emitted labels.
//!
//! Two fixed schemas ship with the crate: the Miami conversational schema
//! (8 topics, 15 discourse functions, optional secondary function) and the
//! Guaraní-Spanish social media schema (2 formality values, 14 genres,
//! 30 topics, optional secondary topic). Label strings are part of the
//! wire contract and must not drift.
//!
//! Raw labels coming back from a model are canonicalized in three steps:
//! exact match, case/separator unification, then nearest-label repair at
//! character edit distance <= 2. Anything further away maps to a per-field
//! `UNKNOWN_*` sentinel, which is a value, not an error.

use crate::corpus::CorpusKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// The annotation dimensions across both schemas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    MiamiTopic,
    MiamiFunction,
    Formality,
    Genre,
    GuaTopic,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::MiamiTopic => "MiamiTopic",
            FieldKind::MiamiFunction => "MiamiFunction",
            FieldKind::Formality => "Formality",
            FieldKind::Genre => "Genre",
            FieldKind::GuaTopic => "GuaTopic",
        }
    }

    /// JSON key used for this field in gateway responses and output records.
    pub fn wire_name(self) -> &'static str {
        match self {
            FieldKind::MiamiTopic | FieldKind::GuaTopic => "topic",
            FieldKind::MiamiFunction => "function",
            FieldKind::Formality => "formality",
            FieldKind::Genre => "genre",
        }
    }

    /// Sentinel label assigned when no schema label is close enough.
    pub fn sentinel(self) -> &'static str {
        match self {
            FieldKind::MiamiTopic | FieldKind::GuaTopic => "UNKNOWN_TOPIC",
            FieldKind::MiamiFunction => "UNKNOWN_FUNCTION",
            FieldKind::Formality => "UNKNOWN_FORMALITY",
            FieldKind::Genre => "UNKNOWN_GENRE",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldKind {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MiamiTopic" => Ok(FieldKind::MiamiTopic),
            "MiamiFunction" => Ok(FieldKind::MiamiFunction),
            "Formality" => Ok(FieldKind::Formality),
            "Genre" => Ok(FieldKind::Genre),
            "GuaTopic" => Ok(FieldKind::GuaTopic),
            other => Err(SchemaError::UnknownFieldKind(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("unknown field kind \"{0}\"")]
    UnknownFieldKind(String),
    #[error("schema text line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("duplicate label \"{label}\" in field {field}")]
    DuplicateLabel { field: FieldKind, label: String },
}

/// One dimension of a schema: its kind, whether a value is required, and
/// the ordered label list with explanatory notes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaField {
    pub kind: FieldKind,
    pub required: bool,
    labels: Vec<(String, String)>,
}

impl SchemaField {
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|(l, _)| l.as_str())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.labels.iter().map(|(l, n)| (l.as_str(), n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn note(&self, label: &str) -> Option<&str> {
        self.labels
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, n)| n.as_str())
    }
}

/// A fixed taxonomy for one corpus kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationSchema {
    pub corpus_kind: CorpusKind,
    pub fields: Vec<SchemaField>,
    /// Field the optional secondary label draws from.
    pub secondary: Option<FieldKind>,
}

impl AnnotationSchema {
    pub fn field(&self, kind: FieldKind) -> Option<&SchemaField> {
        self.fields.iter().find(|f| f.kind == kind)
    }

    pub fn required_fields(&self) -> impl Iterator<Item = FieldKind> + '_ {
        self.fields.iter().filter(|f| f.required).map(|f| f.kind)
    }

    /// JSON key of the optional secondary label, e.g. `secondary_function`.
    pub fn secondary_wire_name(&self) -> Option<String> {
        self.secondary
            .map(|k| format!("secondary_{}", k.wire_name()))
    }
}

const MIAMI_TOPICS: &[(&str, &str)] = &[
    (
        "Workplace_Technical",
        "technical terms, commissioning, CAD, architecture terms.",
    ),
    (
        "Education_YouthOrganizations",
        "school, certificates, scouts, permission slips.",
    ),
    (
        "Architecture_Design",
        "materials, styles, famous architects.",
    ),
    (
        "Office_Logistics",
        "supplies, scheduling, file paths, emails.",
    ),
    (
        "Narratives_Quotations",
        "recounting past events or reported speech.",
    ),
    (
        "Casual_EverydayTalk",
        "greetings, jokes, small talk, banter.",
    ),
    (
        "Affect_Identity",
        "swearing, nicknames, identity/solidarity markers.",
    ),
    (
        "ProperNouns_NamedEntities",
        "sentences dominated by names, places, or awards.",
    ),
];

const MIAMI_FUNCTIONS: &[(&str, &str)] = &[
    (
        "TechnicalTermInsertion",
        "inserting domain-specific words or tool names.",
    ),
    (
        "ProperNounNamedEntity",
        "naming a person, place, brand, or award.",
    ),
    (
        "PrecisionLexicalGap",
        "switching for precise expression or lexical need.",
    ),
    (
        "DiscourseMarker",
        "connective or organizing signals (e.g., you know, so).",
    ),
    ("TopicShift", "marking a new topic or returning to one."),
    ("Narrative", "embedding a story or recounting a past event."),
    ("Quotation", "reproducing or stylizing another's voice."),
    (
        "TurnManagement",
        "backchannels or acknowledgments (mmhm, yeah).",
    ),
    (
        "AddresseeShift",
        "calling attention or changing addressee (hey Bob).",
    ),
    ("Directive", "giving orders, requests, or imperatives."),
    (
        "Repair",
        "rephrasing, searching for a word, or self-correcting.",
    ),
    (
        "Agreement",
        "affirming or echoing another speaker's stance.",
    ),
    (
        "StanceEmphasis",
        "expressing evaluation, certainty, or irony.",
    ),
    ("Humor", "jokes, teasing, or playful language."),
    (
        "SolidarityIdentity",
        "in-group markers or swearing showing closeness.",
    ),
];

const GUA_FORMALITY: &[(&str, &str)] = &[
    (
        "Formal",
        "official or institutional tone; objective or procedural (e.g., announcements, reports, press releases).",
    ),
    (
        "Informal",
        "conversational, personal, humorous, or emotional tone; includes slang, emojis, or direct address.",
    ),
];

const GUA_GENRES: &[(&str, &str)] = &[
    ("News", "objective reports or summaries of events."),
    (
        "Personal",
        "emotions, reflections, or personal experiences.",
    ),
    (
        "Politics",
        "mentions politicians, elections, or government affairs.",
    ),
    (
        "Activism_Protest",
        "references to mobilizations or calls to action.",
    ),
    ("Culture_Arts", "music, literature, art."),
    ("Education", "covers schools, universities, or reforms."),
    ("Health", "health, medicine, or COVID-19."),
    ("Environment", "ecology, nature, conservation."),
    ("Sports", "athletic events or teams."),
    ("Entertainment", "celebs, humor, pop culture."),
    ("Commercial", "ads, business, or products."),
    ("Announcement", "schedules, program info."),
    ("Opinion", "commentary or evaluation of public issues."),
    ("Other", "fallback for unclear categories."),
];

const GUA_TOPICS: &[(&str, &str)] = &[
    (
        "Government_Announcement",
        "official statements from institutions.",
    ),
    (
        "Legislation_Policy",
        "mentions laws, regulations, or legislative actions.",
    ),
    (
        "Protest_Report",
        "reports describing protests or demonstrations.",
    ),
    ("Mobilization_Call", "calls for strikes, activism."),
    ("Corruption_Donations_Procurement", "references of such."),
    (
        "PublicAdministration_Changes",
        "appointments or administrative shifts.",
    ),
    (
        "Procurement_Licitation",
        "references to tenders or contract awards.",
    ),
    (
        "Infrastructure_Contract",
        "mentions construction or development projects.",
    ),
    (
        "Transport_PublicSafety",
        "transportation or safety-related content.",
    ),
    ("Agriculture_Reactivation", "farming or agrarian reform."),
    (
        "Rural_Community_Issues",
        "rural life or community concerns.",
    ),
    (
        "Indigenous_CommunityAid",
        "Indigenous rights or aid programs.",
    ),
    (
        "Education_Policy_University",
        "education reforms or student activism.",
    ),
    (
        "Cultural_Event_Festival",
        "festivals or public celebrations.",
    ),
    (
        "Cultural_Heritage_Archive",
        "heritage preservation or archives.",
    ),
    (
        "Media_Broadcast_Notice",
        "broadcast or program announcements.",
    ),
    ("Legal_Judicial", "courts, rulings, or judicial."),
    ("Crime_Investigation", "mentions crimes or investigations."),
    ("Health_COVID", "COVID-19, vaccines, or health effects."),
    ("PublicHealth_Services", "hospitals or medical access."),
    (
        "Environment_NationalParks",
        "conservation or protected areas.",
    ),
    (
        "Commercial_Product",
        "product promotions or corporate content.",
    ),
    (
        "Shopping_PersonalPurchase",
        "consumer life or buying habits.",
    ),
    (
        "Personal_Emotional",
        "emotional reflections or personal states.",
    ),
    ("Humor_Rant", "jokes, sarcasm, or venting."),
    ("Sports_Event", "matches, scores, or athletes."),
    (
        "Entertainment_Music_Film",
        "mentions music, artists, or movies.",
    ),
    (
        "Opinion_Commentary",
        "subjective political or social commentary.",
    ),
    (
        "UserMention_Request_Response",
        "direct replies, mentions, or user interactions.",
    ),
    ("Other", "unclear or uncategorizable tweets."),
];

fn owned_field(kind: FieldKind, required: bool, data: &[(&str, &str)]) -> SchemaField {
    SchemaField {
        kind,
        required,
        labels: data
            .iter()
            .map(|(l, n)| (l.to_string(), n.to_string()))
            .collect(),
    }
}

/// The fixed schema for a corpus kind; stable across runs.
pub fn builtin_schema(kind: CorpusKind) -> AnnotationSchema {
    match kind {
        CorpusKind::Miami => AnnotationSchema {
            corpus_kind: kind,
            fields: vec![
                owned_field(FieldKind::MiamiTopic, true, MIAMI_TOPICS),
                owned_field(FieldKind::MiamiFunction, true, MIAMI_FUNCTIONS),
            ],
            secondary: Some(FieldKind::MiamiFunction),
        },
        CorpusKind::GuaSpa => AnnotationSchema {
            corpus_kind: kind,
            fields: vec![
                owned_field(FieldKind::Formality, true, GUA_FORMALITY),
                owned_field(FieldKind::Genre, true, GUA_GENRES),
                owned_field(FieldKind::GuaTopic, true, GUA_TOPICS),
            ],
            secondary: Some(FieldKind::GuaTopic),
        },
    }
}

/// A label resolved against a schema. `unknown` means no schema label was
/// close enough and `label` holds the per-field sentinel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonLabel {
    pub field: FieldKind,
    pub label: String,
    pub unknown: bool,
}

impl CanonLabel {
    pub fn known(field: FieldKind, label: impl Into<String>) -> Self {
        CanonLabel {
            field,
            label: label.into(),
            unknown: false,
        }
    }

    pub fn sentinel(field: FieldKind) -> Self {
        CanonLabel {
            field,
            label: field.sentinel().to_string(),
            unknown: true,
        }
    }
}

/// How a raw label was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Exact,
    /// Matched after lowercasing and stripping "_", "-" and spaces.
    Unified,
    /// Matched by nearest edit distance <= 2 on unified forms.
    Fuzzy,
    Sentinel,
}

/// Lowercases and strips the separator characters "_", "-" and space.
fn unify(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '_' | '-' | ' '))
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// Levenshtein distance over characters.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut current = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        current[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            current[j + 1] = substitution.min(prev[j + 1] + 1).min(current[j] + 1);
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

const FUZZY_THRESHOLD: usize = 2;

/// Resolves a raw label against the schema, reporting how the match was
/// made. Ties in the fuzzy step break toward the earlier schema label.
pub fn canonicalize_label_detailed(
    raw: &str,
    field: FieldKind,
    schema: &AnnotationSchema,
) -> (CanonLabel, MatchKind) {
    let raw = raw.trim();
    let schema_field = match schema.field(field) {
        Some(f) => f,
        None => return (CanonLabel::sentinel(field), MatchKind::Sentinel),
    };
    if raw.is_empty() {
        return (CanonLabel::sentinel(field), MatchKind::Sentinel);
    }
    if schema_field.labels().any(|l| l == raw) {
        return (CanonLabel::known(field, raw), MatchKind::Exact);
    }
    let unified = unify(raw);
    for label in schema_field.labels() {
        if unify(label) == unified {
            return (CanonLabel::known(field, label), MatchKind::Unified);
        }
    }
    let mut best: Option<(usize, &str)> = None;
    for label in schema_field.labels() {
        let d = edit_distance(&unified, &unify(label));
        if best.map(|(bd, _)| d < bd).unwrap_or(true) {
            best = Some((d, label));
        }
    }
    match best {
        Some((d, label)) if d <= FUZZY_THRESHOLD => {
            (CanonLabel::known(field, label), MatchKind::Fuzzy)
        }
        _ => (CanonLabel::sentinel(field), MatchKind::Sentinel),
    }
}

/// Maps a raw model-emitted label onto the schema or the sentinel.
pub fn canonicalize_label(raw: &str, field: FieldKind, schema: &AnnotationSchema) -> CanonLabel {
    canonicalize_label_detailed(raw, field, schema).0
}

/// Resolves an optional secondary label. Secondaries are never repaired by
/// fuzzy matching: anything that does not match exactly or by
/// case/separator unification is dropped.
pub fn canonicalize_secondary(
    raw: &str,
    field: FieldKind,
    schema: &AnnotationSchema,
) -> Option<CanonLabel> {
    match canonicalize_label_detailed(raw, field, schema) {
        (label, MatchKind::Exact) | (label, MatchKind::Unified) => Some(label),
        _ => None,
    }
}

/// Per-field outcome of validating one raw annotation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldReport {
    pub field: FieldKind,
    pub missing_required: bool,
    pub canonical: Option<CanonLabel>,
    /// True when the fuzzy (edit distance) step fired.
    pub fuzzy_fired: bool,
    /// True when the stored label differs from the raw input.
    pub corrected: bool,
    pub sentinel_used: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub fields: Vec<FieldReport>,
}

impl ValidationReport {
    pub fn missing_required(&self) -> Vec<FieldKind> {
        self.fields
            .iter()
            .filter(|f| f.missing_required)
            .map(|f| f.field)
            .collect()
    }

    /// Number of fields repaired by the fuzzy step.
    pub fn fuzz_corrections(&self) -> usize {
        self.fields.iter().filter(|f| f.fuzzy_fired).count()
    }
}

/// Validates the primary fields of one raw annotation against the schema:
/// flags missing required fields and canonicalizes the present ones.
pub fn validate_record(
    fields: &BTreeMap<FieldKind, String>,
    schema: &AnnotationSchema,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    for schema_field in &schema.fields {
        let kind = schema_field.kind;
        match fields.get(&kind) {
            None => report.fields.push(FieldReport {
                field: kind,
                missing_required: schema_field.required,
                canonical: None,
                fuzzy_fired: false,
                corrected: false,
                sentinel_used: false,
            }),
            Some(raw) => {
                let (canonical, matched) = canonicalize_label_detailed(raw, kind, schema);
                report.fields.push(FieldReport {
                    field: kind,
                    missing_required: false,
                    corrected: canonical.label != raw.trim(),
                    fuzzy_fired: matched == MatchKind::Fuzzy,
                    sentinel_used: matched == MatchKind::Sentinel,
                    canonical: Some(canonical),
                });
            }
        }
    }
    report
}

/// Renders a schema as the audit text format: a `kind` line, one
/// `[FieldKind required|optional]` section per field with `label<TAB>note`
/// lines, and a trailing `[secondary <FieldKind>]` marker.
pub fn export_schema(schema: &AnnotationSchema) -> String {
    let mut out = String::new();
    out.push_str(&format!("kind {}\n", schema.corpus_kind.as_str()));
    for field in &schema.fields {
        let req = if field.required {
            "required"
        } else {
            "optional"
        };
        out.push_str(&format!("[{} {}]\n", field.kind.name(), req));
        for (label, note) in field.entries() {
            out.push_str(&format!("{label}\t{note}\n"));
        }
    }
    if let Some(secondary) = schema.secondary {
        out.push_str(&format!("[secondary {}]\n", secondary.name()));
    }
    out
}

/// Loads a schema from the audit text format. The only validation applied
/// is label uniqueness within each field.
pub fn load_schema(text: &str) -> Result<AnnotationSchema, SchemaError> {
    let mut corpus_kind: Option<CorpusKind> = None;
    let mut fields: Vec<SchemaField> = Vec::new();
    let mut secondary: Option<FieldKind> = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(kind_name) = line.strip_prefix("kind ") {
            corpus_kind = Some(match kind_name.trim() {
                "miami" => CorpusKind::Miami,
                "gua_spa" => CorpusKind::GuaSpa,
                other => {
                    return Err(SchemaError::Format {
                        line: line_no,
                        reason: format!("unknown corpus kind \"{other}\""),
                    })
                }
            });
        } else if let Some(header) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let mut parts = header.split_whitespace();
            match (parts.next(), parts.next()) {
                (Some("secondary"), Some(kind)) => secondary = Some(kind.parse()?),
                (Some(kind), flag) => {
                    let required = match flag {
                        Some("required") | None => true,
                        Some("optional") => false,
                        Some(other) => {
                            return Err(SchemaError::Format {
                                line: line_no,
                                reason: format!("expected required|optional, got \"{other}\""),
                            })
                        }
                    };
                    fields.push(SchemaField {
                        kind: kind.parse()?,
                        required,
                        labels: Vec::new(),
                    });
                }
                _ => {
                    return Err(SchemaError::Format {
                        line: line_no,
                        reason: "empty section header".to_string(),
                    })
                }
            }
        } else {
            let field = fields.last_mut().ok_or(SchemaError::Format {
                line: line_no,
                reason: "label line before any field section".to_string(),
            })?;
            let (label, note) = line.split_once('\t').unwrap_or((line, ""));
            if field.labels.iter().any(|(l, _)| l == label) {
                return Err(SchemaError::DuplicateLabel {
                    field: field.kind,
                    label: label.to_string(),
                });
            }
            field.labels.push((label.to_string(), note.to_string()));
        }
    }
    Ok(AnnotationSchema {
        corpus_kind: corpus_kind.ok_or(SchemaError::Format {
            line: 0,
            reason: "missing kind line".to_string(),
        })?,
        fields,
        secondary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtin_schemas_have_fixed_label_counts() {
        let miami = builtin_schema(CorpusKind::Miami);
        assert_eq!(miami.field(FieldKind::MiamiTopic).unwrap().len(), 8);
        assert_eq!(miami.field(FieldKind::MiamiFunction).unwrap().len(), 15);
        assert_eq!(miami.secondary, Some(FieldKind::MiamiFunction));

        let gua = builtin_schema(CorpusKind::GuaSpa);
        assert_eq!(gua.field(FieldKind::Formality).unwrap().len(), 2);
        assert_eq!(gua.field(FieldKind::Genre).unwrap().len(), 14);
        assert_eq!(gua.field(FieldKind::GuaTopic).unwrap().len(), 30);
        assert_eq!(gua.secondary, Some(FieldKind::GuaTopic));
    }

    #[test]
    fn builtin_schemas_contain_expected_labels() {
        let miami = builtin_schema(CorpusKind::Miami);
        assert!(miami
            .field(FieldKind::MiamiFunction)
            .unwrap()
            .labels()
            .any(|l| l == "TechnicalTermInsertion"));
        let gua = builtin_schema(CorpusKind::GuaSpa);
        let formality: Vec<&str> = gua.field(FieldKind::Formality).unwrap().labels().collect();
        assert_eq!(formality, vec!["Formal", "Informal"]);
        assert!(gua
            .field(FieldKind::GuaTopic)
            .unwrap()
            .labels()
            .any(|l| l == "Other"));
    }

    #[test]
    fn canonicalize_exact_and_unified() {
        let schema = builtin_schema(CorpusKind::Miami);
        let exact = canonicalize_label("Casual_EverydayTalk", FieldKind::MiamiTopic, &schema);
        assert_eq!(exact.label, "Casual_EverydayTalk");
        assert!(!exact.unknown);

        let (unified, matched) =
            canonicalize_label_detailed("casual everydaytalk", FieldKind::MiamiTopic, &schema);
        assert_eq!(unified.label, "Casual_EverydayTalk");
        assert_eq!(matched, MatchKind::Unified);
    }

    #[test]
    fn canonicalize_garbage_hits_sentinel() {
        let schema = builtin_schema(CorpusKind::Miami);
        let canon = canonicalize_label("zzzz", FieldKind::MiamiFunction, &schema);
        assert!(canon.unknown);
        assert_eq!(canon.label, "UNKNOWN_FUNCTION");
    }

    #[test]
    fn canonicalize_absorbs_single_typo() {
        let schema = builtin_schema(CorpusKind::Miami);
        let (canon, matched) =
            canonicalize_label_detailed("Narrativ", FieldKind::MiamiFunction, &schema);
        assert_eq!(canon.label, "Narrative");
        assert_eq!(matched, MatchKind::Fuzzy);
    }

    #[test]
    fn secondary_never_repairs_by_fuzz() {
        let schema = builtin_schema(CorpusKind::Miami);
        assert_eq!(
            canonicalize_secondary("humor", FieldKind::MiamiFunction, &schema)
                .unwrap()
                .label,
            "Humor"
        );
        assert!(canonicalize_secondary("Humr", FieldKind::MiamiFunction, &schema).is_none());
    }

    #[test]
    fn schema_labels_never_collide_under_unification() {
        for kind in [CorpusKind::Miami, CorpusKind::GuaSpa] {
            let schema = builtin_schema(kind);
            for field in &schema.fields {
                let unified: Vec<String> = field.labels().map(unify).collect();
                for i in 0..unified.len() {
                    for j in (i + 1)..unified.len() {
                        assert_ne!(
                            unified[i], unified[j],
                            "collision in {} between labels {} and {}",
                            field.kind, i, j
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn every_label_canonicalizes_to_itself() {
        for kind in [CorpusKind::Miami, CorpusKind::GuaSpa] {
            let schema = builtin_schema(kind);
            for field in &schema.fields {
                for label in field.labels() {
                    let (canon, matched) = canonicalize_label_detailed(label, field.kind, &schema);
                    assert_eq!(canon.label, label);
                    assert_eq!(matched, MatchKind::Exact);
                    assert!(!canon.unknown);
                }
            }
        }
    }

    #[test]
    fn sentinel_is_not_a_schema_label() {
        for kind in [CorpusKind::Miami, CorpusKind::GuaSpa] {
            let schema = builtin_schema(kind);
            for field in &schema.fields {
                assert!(field.labels().all(|l| l != field.kind.sentinel()));
            }
        }
    }

    #[test]
    fn validate_record_flags_missing_and_corrections() {
        let schema = builtin_schema(CorpusKind::Miami);
        let mut fields = BTreeMap::new();
        fields.insert(FieldKind::MiamiFunction, "Narrative".to_string());
        let report = validate_record(&fields, &schema);
        assert_eq!(report.missing_required(), vec![FieldKind::MiamiTopic]);
        assert_eq!(report.fuzz_corrections(), 0);

        let gua = builtin_schema(CorpusKind::GuaSpa);
        let mut fields = BTreeMap::new();
        fields.insert(FieldKind::Formality, "Formal".to_string());
        fields.insert(FieldKind::Genre, "news".to_string());
        fields.insert(FieldKind::GuaTopic, "Government_Announcement".to_string());
        let report = validate_record(&fields, &gua);
        assert!(report.missing_required().is_empty());
        let genre = report
            .fields
            .iter()
            .find(|f| f.field == FieldKind::Genre)
            .unwrap();
        assert_eq!(genre.canonical.as_ref().unwrap().label, "News");
        assert!(genre.corrected);
        assert!(!genre.fuzzy_fired);
    }

    #[test]
    fn export_then_load_roundtrips() {
        for kind in [CorpusKind::Miami, CorpusKind::GuaSpa] {
            let schema = builtin_schema(kind);
            let text = export_schema(&schema);
            let loaded = load_schema(&text).unwrap();
            assert_eq!(schema, loaded);
        }
    }

    #[test]
    fn load_rejects_duplicate_labels() {
        let text = "kind miami\n[MiamiTopic required]\nA\tnote\nA\tnote\n";
        assert!(matches!(
            load_schema(text),
            Err(SchemaError::DuplicateLabel { .. })
        ));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("", "abc"), 3);
        assert_eq!(edit_distance("abc", "abc"), 0);
        assert_eq!(edit_distance("abc", "abd"), 1);
        assert_eq!(edit_distance("kitten", "sitting"), 3);
    }

    proptest! {
        // Canonicalizing an already-canonical label is the identity.
        #[test]
        fn canonicalize_is_idempotent(idx in 0usize..30) {
            let schema = builtin_schema(CorpusKind::GuaSpa);
            let field = schema.field(FieldKind::GuaTopic).unwrap();
            let label = field.labels().nth(idx % field.len()).unwrap().to_string();
            let first = canonicalize_label(&label, FieldKind::GuaTopic, &schema);
            let second = canonicalize_label(&first.label, FieldKind::GuaTopic, &schema);
            prop_assert_eq!(&first.label, &second.label);
            prop_assert!(!second.unknown);
        }
    }
}
