//! Toolkit for enriching code-switched bilingual corpora.
//!
//! The pipeline: ingest line-delimited corpus files, compute token-level
//! language statistics, drive an LLM gateway to annotate sentences with
//! topic/function/formality/genre labels, cross-tabulate the results
//! against speaker metadata and language dominance, and score human
//! verification sheets.

pub mod analysis;
pub mod annotator;
pub mod chart;
pub mod corpus;
pub mod ingest;
pub mod metrics;
pub mod review;
pub mod taxonomy;

pub use corpus::{
    CoreLangTag, Corpus, CorpusKind, DominanceClass, Gender, Sentence, SpeakerMeta, Token,
};
