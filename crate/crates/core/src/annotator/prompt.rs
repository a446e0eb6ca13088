//! Structured prompt construction.
//!
//! Each prompt carries three coordinated parts: a system instruction that
//! fixes the annotator role and the strict-JSON output constraint, a base
//! instruction block naming the input fields and labeling procedure
//! followed by the full label lists with their notes, and the target row
//! rendered as `field: value` lines. Few-shot exemplars sit between the
//! label lists and the target row.

use crate::corpus::{CorpusKind, Gender, Sentence};
use crate::taxonomy::{AnnotationSchema, FieldKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("sentence {sent_id} carries tags not legal for the {kind} schema")]
    SchemaMismatch { sent_id: u64, kind: CorpusKind },
}

/// Request parameters sent with every completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GatewayParams {
    fn default() -> Self {
        GatewayParams {
            model_name: "gpt-4.1-2025-04-14".to_string(),
            temperature: 0.0,
            max_tokens: 200,
        }
    }
}

/// One fully rendered request. `cache_key` is a content hash of the two
/// texts and the parameters, so identical bundles always collide and
/// differing bundles practically never do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    pub params: GatewayParams,
    pub cache_key: String,
}

impl PromptBundle {
    pub fn new(system_text: String, user_text: String, params: GatewayParams) -> Self {
        let cache_key = compute_cache_key(&system_text, &user_text, &params);
        PromptBundle {
            system_text,
            user_text,
            params,
            cache_key,
        }
    }
}

fn compute_cache_key(system_text: &str, user_text: &str, params: &GatewayParams) -> String {
    let mut hasher = Sha256::new();
    // Length-prefix each part so no concatenation of fields is ambiguous.
    for part in [
        params.model_name.as_str(),
        &format!("{:.6}", params.temperature),
        &params.max_tokens.to_string(),
        system_text,
        user_text,
    ] {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// A few-shot example: an input row plus the expected strict-JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Exemplar {
    pub sent_id: u64,
    pub filename: String,
    pub speaker: String,
    pub age: Option<u32>,
    pub gender: Gender,
    pub situation: String,
    pub lang_tag: String,
    pub sentence: String,
    pub expected_json: String,
}

/// The shipped exemplar set: the one documented conversational example for
/// Miami, and a synthetic tweet (filename `synthetic`) for Guaraní-Spanish.
/// Callers may pass their own set to [`build_prompt`] instead.
pub fn default_exemplars(kind: CorpusKind) -> Vec<Exemplar> {
    match kind {
        CorpusKind::Miami => vec![Exemplar {
            sent_id: 916,
            filename: String::new(),
            speaker: String::new(),
            age: Some(63),
            gender: Gender::F,
            situation: String::new(),
            lang_tag: "spa+eng".to_string(),
            sentence: "ay ay yo vi los kneepads.".to_string(),
            expected_json: r#"{"sent_id": 916, "topic": "Casual_EverydayTalk", "function": "TechnicalTermInsertion"}"#
                .to_string(),
        }],
        CorpusKind::GuaSpa => vec![Exemplar {
            sent_id: 1,
            filename: "synthetic".to_string(),
            speaker: "user".to_string(),
            age: None,
            gender: Gender::Unknown,
            situation: "tweet".to_string(),
            lang_tag: "spa+gn".to_string(),
            sentence: "Upéicha amigo, mañana arranca el partido!".to_string(),
            expected_json: r#"{"sent_id": 1, "formality": "Informal", "genre": "Sports", "topic": "Sports_Event"}"#
                .to_string(),
        }],
    }
}

fn gender_value(gender: Gender) -> &'static str {
    match gender {
        Gender::M => "M",
        Gender::F => "F",
        Gender::Unknown => "unknown",
    }
}

struct RowView<'a> {
    sent_id: u64,
    filename: &'a str,
    speaker: &'a str,
    age: Option<u32>,
    gender: Gender,
    situation: &'a str,
    lang_tag: &'a str,
    sentence: &'a str,
}

impl<'a> RowView<'a> {
    fn from_sentence(sentence: &'a Sentence, text: &'a str) -> Self {
        RowView {
            sent_id: sentence.sent_id,
            filename: &sentence.filename,
            speaker: &sentence.meta.speaker,
            age: sentence.meta.age,
            gender: sentence.meta.gender,
            situation: &sentence.meta.situation,
            lang_tag: &sentence.lang_tag,
            sentence: text,
        }
    }

    fn from_exemplar(exemplar: &'a Exemplar) -> Self {
        RowView {
            sent_id: exemplar.sent_id,
            filename: &exemplar.filename,
            speaker: &exemplar.speaker,
            age: exemplar.age,
            gender: exemplar.gender,
            situation: &exemplar.situation,
            lang_tag: &exemplar.lang_tag,
            sentence: &exemplar.sentence,
        }
    }

    fn render(&self) -> String {
        let age = self
            .age
            .map(|a| a.to_string())
            .unwrap_or_else(|| "unknown".to_string());
        format!(
            "sent_id: {}\nfilename: {}\nspeaker: {}\nage: {age}\ngender: {}\nsituation: {}\nlang_tag: {}\nsentence: {}\n",
            self.sent_id,
            self.filename,
            self.speaker,
            gender_value(self.gender),
            self.situation,
            self.lang_tag,
            self.sentence,
        )
    }
}

fn system_text(schema: &AnnotationSchema) -> String {
    match schema.corpus_kind {
        CorpusKind::Miami => "You are a careful Spanish-English discourse annotator.\n\
             Given a sentence and short metadata, assign exactly one primary topic and one primary function,\n\
             and optionally a secondary_function if clearly present.\n\
             Be conservative: choose the label that best captures the discourse-level purpose of the sentence.\n\
             Return only strict JSON no extra text or explanations."
            .to_string(),
        CorpusKind::GuaSpa => "You are a careful Spanish-Guarani discourse annotator.\n\
             Given a sentence and short metadata, assign exactly one formality, one genre and one primary topic,\n\
             and optionally a secondary_topic if clearly present.\n\
             Be conservative: choose the labels that best capture the discourse-level purpose of the sentence.\n\
             Return only strict JSON no extra text or explanations."
            .to_string(),
    }
}

fn base_instructions(schema: &AnnotationSchema) -> String {
    let mut out = String::from(
        "Input fields: sent_id, filename, speaker, age, gender, situation, lang_tag, sentence.\n\
         Read the sentence and metadata carefully and select the most fitting labels:\n",
    );
    match schema.corpus_kind {
        CorpusKind::Miami => {
            out.push_str("- topic: 1 primary domain label\n");
            out.push_str("- function: 1 primary discourse/pragmatic label\n");
            out.push_str(
                "- secondary_function: optional, only if an additional pragmatic role is evident.\n",
            );
        }
        CorpusKind::GuaSpa => {
            out.push_str("- formality: 1 register label\n");
            out.push_str("- genre: 1 genre label\n");
            out.push_str("- topic: 1 primary domain label\n");
            out.push_str("- secondary_topic: optional, only if an additional topic is evident.\n");
        }
    }
    out.push_str("Use exact category strings from the provided instruction lists.\n");
    out
}

fn field_heading(kind: FieldKind) -> &'static str {
    match kind {
        FieldKind::MiamiTopic | FieldKind::GuaTopic => "Topic labels:",
        FieldKind::MiamiFunction => "Function labels:",
        FieldKind::Formality => "Formality labels:",
        FieldKind::Genre => "Genre labels:",
    }
}

fn instruction_lists(schema: &AnnotationSchema) -> String {
    let mut out = String::new();
    for field in &schema.fields {
        out.push_str(field_heading(field.kind));
        out.push('\n');
        for (label, note) in field.entries() {
            out.push_str(&format!("- {label}: {note}\n"));
        }
        out.push('\n');
    }
    out
}

/// Builds the full prompt for one sentence. Fails with `SchemaMismatch`
/// when the sentence carries tags outside the schema's corpus kind.
pub fn build_prompt(
    sentence: &Sentence,
    schema: &AnnotationSchema,
    exemplars: &[Exemplar],
    params: GatewayParams,
) -> Result<PromptBundle, PromptError> {
    let legal = schema.corpus_kind.legal_tags();
    if sentence.tokens.iter().any(|t| !legal.contains(&t.core)) {
        return Err(PromptError::SchemaMismatch {
            sent_id: sentence.sent_id,
            kind: schema.corpus_kind,
        });
    }

    let mut user_text = base_instructions(schema);
    user_text.push('\n');
    user_text.push_str(&instruction_lists(schema));
    for exemplar in exemplars {
        user_text.push_str("Example input:\n");
        user_text.push_str(&RowView::from_exemplar(exemplar).render());
        user_text.push_str("Example output:\n");
        user_text.push_str(&exemplar.expected_json);
        user_text.push_str("\n\n");
    }
    user_text.push_str("Annotate this row:\n");
    let text = sentence.text();
    user_text.push_str(&RowView::from_sentence(sentence, &text).render());

    Ok(PromptBundle::new(system_text(schema), user_text, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CoreLangTag, SpeakerMeta, Token};
    use crate::taxonomy::builtin_schema;

    fn kneepads_sentence() -> Sentence {
        use CoreLangTag::*;
        let mut s = Sentence {
            sent_id: 916,
            filename: "sastre9".into(),
            meta: SpeakerMeta {
                speaker: "MAR".into(),
                age: Some(63),
                gender: Gender::F,
                situation: "conversation".into(),
            },
            lang_tag: String::new(),
            tokens: vec![
                Token::new("ay", "spa", Spa),
                Token::new("ay", "spa", Spa),
                Token::new("yo", "spa", Spa),
                Token::new("vi", "spa", Spa),
                Token::new("los", "spa", Spa),
                Token::new("kneepads", "eng", Eng),
                Token::new(".", "punc", Punc),
            ],
        };
        s.lang_tag = crate::corpus::recompute_lang_tag(&s);
        s
    }

    #[test]
    fn prompt_contains_sentence_and_metadata() {
        let schema = builtin_schema(CorpusKind::Miami);
        let bundle = build_prompt(
            &kneepads_sentence(),
            &schema,
            &default_exemplars(CorpusKind::Miami),
            GatewayParams::default(),
        )
        .unwrap();
        assert!(bundle
            .user_text
            .contains("sentence: ay ay yo vi los kneepads."));
        assert!(bundle.user_text.contains("age: 63"));
        assert!(bundle.user_text.contains("gender: F"));
        assert!(bundle.user_text.contains("lang_tag: spa+eng"));
        assert!(bundle
            .user_text
            .contains("TechnicalTermInsertion: inserting domain-specific"));
    }

    #[test]
    fn system_text_constrains_output_to_strict_json() {
        let schema = builtin_schema(CorpusKind::GuaSpa);
        let mut s = kneepads_sentence();
        s.tokens = vec![
            Token::new("ha", "gn", CoreLangTag::Gn),
            Token::new("bueno", "es", CoreLangTag::Spa),
        ];
        s.lang_tag = crate::corpus::recompute_lang_tag(&s);
        let bundle = build_prompt(&s, &schema, &[], GatewayParams::default()).unwrap();
        assert!(bundle.system_text.contains("strict JSON"));
    }

    #[test]
    fn zero_exemplars_is_valid() {
        let schema = builtin_schema(CorpusKind::Miami);
        let bundle =
            build_prompt(&kneepads_sentence(), &schema, &[], GatewayParams::default()).unwrap();
        assert!(!bundle.user_text.contains("Example input:"));
        assert!(bundle.user_text.contains("Annotate this row:"));
    }

    #[test]
    fn default_params_are_deterministic_profile() {
        let params = GatewayParams::default();
        assert_eq!(params.temperature, 0.0);
        assert_eq!(params.max_tokens, 200);
    }

    #[test]
    fn mismatched_schema_is_rejected() {
        let schema = builtin_schema(CorpusKind::GuaSpa);
        let err =
            build_prompt(&kneepads_sentence(), &schema, &[], GatewayParams::default()).unwrap_err();
        assert!(matches!(
            err,
            PromptError::SchemaMismatch { sent_id: 916, .. }
        ));
    }

    #[test]
    fn cache_key_is_pure_function_of_contents() {
        let schema = builtin_schema(CorpusKind::Miami);
        let s = kneepads_sentence();
        let a = build_prompt(&s, &schema, &[], GatewayParams::default()).unwrap();
        let b = build_prompt(&s, &schema, &[], GatewayParams::default()).unwrap();
        assert_eq!(a.cache_key, b.cache_key);

        let other_params = GatewayParams {
            max_tokens: 201,
            ..GatewayParams::default()
        };
        let c = build_prompt(&s, &schema, &[], other_params).unwrap();
        assert_ne!(a.cache_key, c.cache_key);
    }

    proptest::proptest! {
        // Differing bundles never collide; equal bundles always do. The
        // length prefixing means even texts that concatenate identically
        // ("ab"+"c" vs "a"+"bc") hash apart.
        #[test]
        fn cache_keys_collide_only_for_identical_bundles(
            system_a in "[a-c]{0,6}", user_a in "[a-c]{0,6}",
            system_b in "[a-c]{0,6}", user_b in "[a-c]{0,6}",
        ) {
            let a = PromptBundle::new(system_a.clone(), user_a.clone(), GatewayParams::default());
            let b = PromptBundle::new(system_b.clone(), user_b.clone(), GatewayParams::default());
            if system_a == system_b && user_a == user_b {
                proptest::prop_assert_eq!(a.cache_key, b.cache_key);
            } else {
                proptest::prop_assert_ne!(a.cache_key, b.cache_key);
            }
        }
    }
}
