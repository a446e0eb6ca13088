//! Prompt construction, gateway drivers and batch annotation.
//!
//! A [`PromptBundle`] is built per sentence and sent through a [`Gateway`].
//! Four gateway implementations exist: a live HTTP client speaking the
//! common chat-completions wire format, a recording wrapper that persists
//! `(cache_key, response)` pairs to an append-only cassette, a replay
//! gateway that serves a cassette offline, and a deterministic rule stub
//! for tests. Responses are parsed as strict JSON, validated against the
//! schema and canonicalized into [`AnnotationRecord`]s.

mod batch;
mod gateway;
mod prompt;
mod response;

pub use batch::{
    read_records, write_records, AnnotationRecord, Annotator, BatchFailure, BatchOutcome,
    FailureKind, Provenance, RecordIoError,
};
pub use gateway::{
    Cassette, CassetteError, Gateway, GatewayError, LiveGateway, RecordGateway, ReplayGateway,
    RuleStubGateway,
};
pub use prompt::{
    build_prompt, default_exemplars, Exemplar, GatewayParams, PromptBundle, PromptError,
};
pub use response::{parse_response, RawAnnotation, ResponseError};

use serde::{Deserialize, Serialize};

/// Operational limits for one annotation run.
///
/// `batch_size` is a checkpointing unit (sentences are always sent one
/// request at a time); the default profile keeps it in the 50..=100 range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GatewayPolicy {
    pub max_retries: u32,
    pub batch_size: usize,
    pub max_concurrency: usize,
}

impl Default for GatewayPolicy {
    fn default() -> Self {
        GatewayPolicy {
            max_retries: 2,
            batch_size: 50,
            max_concurrency: 1,
        }
    }
}
