//! Strict-JSON response parsing.
//!
//! A response must be exactly one JSON object, with nothing but whitespace
//! around it. Key sets are fixed per corpus kind; anything else is
//! rejected so malformed model output never leaks labels downstream.

use crate::corpus::CorpusKind;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ResponseError {
    #[error("response is not a single strict JSON object: {0}")]
    NonStrictJson(String),
    #[error("response object has no integer sent_id")]
    MissingSentId,
    #[error("unexpected key \"{0}\" in response object")]
    UnexpectedKey(String),
    #[error("field \"{0}\" is not a JSON string")]
    NonStringField(String),
}

/// A parsed but not yet validated response: the sentence id, the raw label
/// strings keyed by wire name, and a hash of the exact response text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawAnnotation {
    pub sent_id: u64,
    pub fields: BTreeMap<String, String>,
    pub response_hash: String,
}

fn accepted_keys(kind: CorpusKind) -> &'static [&'static str] {
    match kind {
        CorpusKind::Miami => &["sent_id", "topic", "function", "secondary_function"],
        CorpusKind::GuaSpa => &["sent_id", "formality", "genre", "topic", "secondary_topic"],
    }
}

/// Parses one gateway response. Leading/trailing whitespace is tolerated;
/// prose around the object, multiple objects, non-object payloads, extra
/// keys and non-string label values are all rejected.
pub fn parse_response(text: &str, kind: CorpusKind) -> Result<RawAnnotation, ResponseError> {
    let trimmed = text.trim();
    let value: Value =
        serde_json::from_str(trimmed).map_err(|e| ResponseError::NonStrictJson(e.to_string()))?;
    let object = value
        .as_object()
        .ok_or_else(|| ResponseError::NonStrictJson("payload is not an object".to_string()))?;

    let accepted = accepted_keys(kind);
    for key in object.keys() {
        if !accepted.contains(&key.as_str()) {
            return Err(ResponseError::UnexpectedKey(key.clone()));
        }
    }

    let sent_id = object
        .get("sent_id")
        .and_then(Value::as_u64)
        .ok_or(ResponseError::MissingSentId)?;

    let mut fields = BTreeMap::new();
    for (key, value) in object {
        if key == "sent_id" {
            continue;
        }
        match value {
            Value::String(s) => {
                fields.insert(key.clone(), s.clone());
            }
            // A null optional field is simply absent.
            Value::Null => {}
            _ => return Err(ResponseError::NonStringField(key.clone())),
        }
    }

    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    Ok(RawAnnotation {
        sent_id,
        fields,
        response_hash: hex::encode(hasher.finalize()),
    })
}
