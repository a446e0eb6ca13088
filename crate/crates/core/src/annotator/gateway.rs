//! Gateway implementations: live HTTP, record, replay and rule stub.
//!
//! The replay store is an append-only UTF-8 file with one JSON record per
//! line, `{"cache_key":"<hex>","response":"<text>"}`. Replaying a cassette
//! reproduces responses bit-exactly, which is what makes offline reruns of
//! an annotation run byte-identical.

use super::prompt::PromptBundle;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum GatewayError {
    /// The gateway cannot serve any request; the whole run aborts.
    #[error("gateway unavailable: {0}")]
    Unavailable(String),
    /// One request failed; eligible for retry.
    #[error("gateway response error: {0}")]
    Response(String),
    #[error("no recorded response for cache key {cache_key}")]
    ReplayMiss { cache_key: String },
}

/// One chat completion per call. Implementations must be shareable across
/// the annotator's worker threads.
pub trait Gateway: Sync {
    /// Identifier stored in record provenance, e.g. `replay` or
    /// `live:gpt-4.1-2025-04-14`.
    fn id(&self) -> String;

    fn complete(&self, bundle: &PromptBundle) -> Result<String, GatewayError>;
}

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("cassette line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("cassette io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct CassetteRecord {
    cache_key: String,
    response: String,
}

/// In-memory view of a cassette file. Later entries for the same cache key
/// override earlier ones, so re-recording a bundle is an append.
#[derive(Debug, Default, Clone)]
pub struct Cassette {
    entries: BTreeMap<String, String>,
}

impl Cassette {
    pub fn load(path: &Path) -> Result<Self, CassetteError> {
        let file = File::open(path)?;
        let mut entries = BTreeMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CassetteRecord =
                serde_json::from_str(&line).map_err(|e| CassetteError::Format {
                    line: idx + 1,
                    reason: e.to_string(),
                })?;
            entries.insert(record.cache_key, record.response);
        }
        Ok(Cassette { entries })
    }

    pub fn get(&self, cache_key: &str) -> Option<&str> {
        self.entries.get(cache_key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn render_line(cache_key: &str, response: &str) -> String {
        // serde_json escapes newlines, keeping one record per line.
        serde_json::to_string(&CassetteRecord {
            cache_key: cache_key.to_string(),
            response: response.to_string(),
        })
        .expect("cassette record serializes")
    }
}

/// Live chat-completions client. The endpoint is the full completions URL;
/// the credential is sent as a bearer token.
pub struct LiveGateway {
    endpoint: String,
    credential: String,
    client: reqwest::blocking::Client,
}

impl LiveGateway {
    pub fn new(endpoint: String, credential: String) -> Self {
        LiveGateway {
            endpoint,
            credential,
            client: reqwest::blocking::Client::new(),
        }
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: Vec<ChatMessage<'a>>,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

impl Gateway for LiveGateway {
    fn id(&self) -> String {
        "live".to_string()
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        let request = ChatRequest {
            model: &bundle.params.model_name,
            temperature: bundle.params.temperature,
            max_tokens: bundle.params.max_tokens,
            messages: vec![
                ChatMessage {
                    role: "system",
                    content: &bundle.system_text,
                },
                ChatMessage {
                    role: "user",
                    content: &bundle.user_text,
                },
            ],
        };
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.credential)
            .json(&request)
            .send()
            .map_err(|e| {
                if e.is_connect() || e.is_timeout() {
                    GatewayError::Unavailable(e.to_string())
                } else {
                    GatewayError::Response(e.to_string())
                }
            })?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(GatewayError::Response(format!("HTTP {status}: {body}")));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| GatewayError::Response(format!("bad completion payload: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GatewayError::Response("completion carried no choices".to_string()))
    }
}

/// Wraps another gateway and appends every `(cache_key, response)` pair to
/// the cassette file. Writes are serialized behind a mutex.
pub struct RecordGateway<G> {
    inner: G,
    path: PathBuf,
    file: Mutex<File>,
}

impl<G: Gateway> RecordGateway<G> {
    pub fn create(inner: G, path: &Path) -> Result<Self, CassetteError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordGateway {
            inner,
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<G: Gateway> Gateway for RecordGateway<G> {
    fn id(&self) -> String {
        format!("record({})", self.inner.id())
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        let response = self.inner.complete(bundle)?;
        let line = Cassette::render_line(&bundle.cache_key, &response);
        let mut file = self.file.lock().expect("cassette mutex poisoned");
        writeln!(file, "{line}")
            .map_err(|e| GatewayError::Unavailable(format!("cassette write failed: {e}")))?;
        Ok(response)
    }
}

/// Serves recorded responses; never touches the network.
pub struct ReplayGateway {
    cassette: Cassette,
}

impl ReplayGateway {
    pub fn new(cassette: Cassette) -> Self {
        ReplayGateway { cassette }
    }

    pub fn load(path: &Path) -> Result<Self, CassetteError> {
        Ok(ReplayGateway {
            cassette: Cassette::load(path)?,
        })
    }
}

impl Gateway for ReplayGateway {
    fn id(&self) -> String {
        "replay".to_string()
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        self.cassette
            .get(&bundle.cache_key)
            .map(str::to_string)
            .ok_or_else(|| GatewayError::ReplayMiss {
                cache_key: bundle.cache_key.clone(),
            })
    }
}

/// Deterministic test gateway. Labels are derived from surface cues of the
/// target row (the last `sent_id:`/`sentence:` lines of the prompt) and are
/// always valid schema labels.
pub struct RuleStubGateway;

impl RuleStubGateway {
    fn last_field<'a>(user_text: &'a str, field: &str) -> Option<&'a str> {
        let prefix = format!("{field}: ");
        user_text
            .lines()
            .rev()
            .find_map(|line| line.strip_prefix(prefix.as_str()))
    }
}

impl Gateway for RuleStubGateway {
    fn id(&self) -> String {
        "stub".to_string()
    }

    fn complete(&self, bundle: &PromptBundle) -> Result<String, GatewayError> {
        let sent_id: u64 = Self::last_field(&bundle.user_text, "sent_id")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| GatewayError::Response("prompt carries no sent_id row".to_string()))?;
        let sentence = Self::last_field(&bundle.user_text, "sentence").unwrap_or("");
        let lower = sentence.to_lowercase();
        let gua = bundle.user_text.contains("- formality:");

        let response = if gua {
            let informal = sentence.contains('!') || lower.contains("jaja");
            let formality = if informal { "Informal" } else { "Formal" };
            let genre = if lower.contains("ley") {
                "Politics"
            } else if informal {
                "Personal"
            } else {
                "News"
            };
            let topic = if informal {
                "Personal_Emotional"
            } else {
                "Government_Announcement"
            };
            if lower.contains("covid") {
                format!(
                    r#"{{"sent_id": {sent_id}, "formality": "{formality}", "genre": "{genre}", "topic": "{topic}", "secondary_topic": "Health_COVID"}}"#
                )
            } else {
                format!(
                    r#"{{"sent_id": {sent_id}, "formality": "{formality}", "genre": "{genre}", "topic": "{topic}"}}"#
                )
            }
        } else {
            let topic = if lower.contains("school") {
                "Education_YouthOrganizations"
            } else if sentence.chars().any(|c| c.is_ascii_digit()) {
                "Office_Logistics"
            } else {
                "Casual_EverydayTalk"
            };
            let function = if sentence.contains('"') || lower.contains("dijo") {
                "Quotation"
            } else if lower.contains("you know") {
                "DiscourseMarker"
            } else if sentence.chars().count().is_multiple_of(2) {
                "PrecisionLexicalGap"
            } else {
                "TechnicalTermInsertion"
            };
            if sentence.contains('!') {
                format!(
                    r#"{{"sent_id": {sent_id}, "topic": "{topic}", "function": "{function}", "secondary_function": "StanceEmphasis"}}"#
                )
            } else {
                format!(r#"{{"sent_id": {sent_id}, "topic": "{topic}", "function": "{function}"}}"#)
            }
        };
        Ok(response)
    }
}
