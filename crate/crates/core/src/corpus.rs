//! Core data types shared by every other module. No I/O lives here.
//!
//! A [`Corpus`] is a validated, immutable collection of [`Sentence`]s, each
//! carrying ordered [`Token`]s with merged language tags plus speaker
//! metadata. All types are plain value objects and safe to share across
//! threads.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Which source corpus a sentence set belongs to. The kind decides which
/// language tags are legal and which annotation schema applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    Miami,
    GuaSpa,
}

impl CorpusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CorpusKind::Miami => "miami",
            CorpusKind::GuaSpa => "gua_spa",
        }
    }

    /// Tag variants that may appear in a corpus of this kind, in the order
    /// used when reporting proportions.
    pub fn legal_tags(self) -> &'static [CoreLangTag] {
        match self {
            CorpusKind::Miami => &[
                CoreLangTag::Spa,
                CoreLangTag::Eng,
                CoreLangTag::Punc,
                CoreLangTag::EngSpa,
            ],
            CorpusKind::GuaSpa => &[
                CoreLangTag::Spa,
                CoreLangTag::Gn,
                CoreLangTag::Other,
                CoreLangTag::GnSpa,
            ],
        }
    }
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Merged language tag of a token after collapsing source-specific variants.
///
/// `Spa`, `Eng`, `Gn` are core languages. `EngSpa`/`GnSpa` mark tokens
/// ambiguous between the pair and never establish a language on their own.
/// `Punc`/`Other` are non-content (punctuation, special characters, emojis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoreLangTag {
    Spa,
    Eng,
    Gn,
    Punc,
    Other,
    EngSpa,
    GnSpa,
}

impl CoreLangTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CoreLangTag::Spa => "spa",
            CoreLangTag::Eng => "eng",
            CoreLangTag::Gn => "gn",
            CoreLangTag::Punc => "punc",
            CoreLangTag::Other => "other",
            CoreLangTag::EngSpa => "eng&spa",
            CoreLangTag::GnSpa => "gn&spa",
        }
    }

    /// True for Spa/Eng/Gn, the variants that can establish a language.
    pub fn is_core_language(self) -> bool {
        matches!(self, CoreLangTag::Spa | CoreLangTag::Eng | CoreLangTag::Gn)
    }

    pub fn is_ambiguous(self) -> bool {
        matches!(self, CoreLangTag::EngSpa | CoreLangTag::GnSpa)
    }

    pub fn is_non_content(self) -> bool {
        matches!(self, CoreLangTag::Punc | CoreLangTag::Other)
    }

    /// Fixed ordering used when serializing language tag summaries:
    /// spa < eng < gn.
    pub fn summary_rank(self) -> u8 {
        match self {
            CoreLangTag::Spa => 0,
            CoreLangTag::Eng => 1,
            CoreLangTag::Gn => 2,
            _ => u8::MAX,
        }
    }
}

impl fmt::Display for CoreLangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One surface form with its original tag string and the merged tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub raw_tag: String,
    pub core: CoreLangTag,
}

impl Token {
    pub fn new(text: impl Into<String>, raw_tag: impl Into<String>, core: CoreLangTag) -> Self {
        Token {
            text: text.into(),
            raw_tag: raw_tag.into(),
            core,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gender {
    M,
    F,
    Unknown,
}

impl Gender {
    /// Column label used in gender cross-tabulations.
    pub fn column_label(self) -> Option<&'static str> {
        match self {
            Gender::M => Some("Men"),
            Gender::F => Some("Women"),
            Gender::Unknown => None,
        }
    }
}

/// Speaker and situational metadata attached to a sentence.
///
/// `Unknown` gender is a legal value; gender-based analyses exclude those
/// rows and report the exclusion count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerMeta {
    pub speaker: String,
    pub age: Option<u32>,
    pub gender: Gender,
    pub situation: String,
}

/// The annotation unit: ordered tokens plus metadata.
///
/// `lang_tag` is always recomputed from the tokens, never trusted from
/// input: it is the "+"-joined set of distinct core languages present,
/// ordered spa < eng < gn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub sent_id: u64,
    pub filename: String,
    pub meta: SpeakerMeta,
    pub lang_tag: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    /// Renders the sentence for prompts and review sheets: tokens joined by
    /// single spaces, with no space before punctuation tokens.
    pub fn text(&self) -> String {
        let mut out = String::new();
        for tok in &self.tokens {
            if !out.is_empty() && tok.core != CoreLangTag::Punc {
                out.push(' ');
            }
            out.push_str(&tok.text);
        }
        out
    }
}

/// A validated set of sentences from one source corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub kind: CorpusKind,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Which language contributes the strict majority of a sentence's content
/// tokens. Ties (including sentences without core-language tokens) are
/// `Balanced` and excluded from dominance splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DominanceClass {
    SpanishDominant,
    EnglishDominant,
    GuaraniDominant,
    Balanced,
}

impl DominanceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            DominanceClass::SpanishDominant => "SpanishDominant",
            DominanceClass::EnglishDominant => "EnglishDominant",
            DominanceClass::GuaraniDominant => "GuaraniDominant",
            DominanceClass::Balanced => "Balanced",
        }
    }
}

impl fmt::Display for DominanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// True for tokens that occupy speech positions: core-language and
/// ambiguous tags. Punctuation and `other` tokens are non-content.
pub fn is_content_token(token: &Token) -> bool {
    !token.core.is_non_content()
}

/// The set of core-language variants (Spa/Eng/Gn only) occurring in a
/// sentence. Ambiguous and non-content tokens contribute nothing.
pub fn distinct_core_languages(sentence: &Sentence) -> BTreeSet<CoreLangTag> {
    sentence
        .tokens
        .iter()
        .map(|t| t.core)
        .filter(|c| c.is_core_language())
        .collect()
}

/// Serializes a core-language set in the fixed spa < eng < gn order,
/// joined with "+", e.g. `"spa+eng"`.
pub fn lang_tag_summary(langs: &BTreeSet<CoreLangTag>) -> String {
    let mut ordered: Vec<CoreLangTag> = langs.iter().copied().collect();
    ordered.sort_by_key(|t| t.summary_rank());
    ordered
        .iter()
        .map(|t| t.as_str())
        .collect::<Vec<_>>()
        .join("+")
}

/// Recomputed language tag for one sentence.
pub fn recompute_lang_tag(sentence: &Sentence) -> String {
    lang_tag_summary(&distinct_core_languages(sentence))
}
