//! Run configuration with the precedence flags > environment > config
//! file > defaults.
//!
//! The config file is flat `key = value` text with `#` comments. Only the
//! gateway endpoint and credential are read from the environment
//! (`CSW_GATEWAY_URL`, `CSW_GATEWAY_TOKEN`); everything else comes from
//! flags, the file, or defaults.

use anyhow::{bail, Context, Result};
use cswitch_core::annotator::{GatewayParams, GatewayPolicy};
use cswitch_core::corpus::CorpusKind;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const ENV_GATEWAY_URL: &str = "CSW_GATEWAY_URL";
pub const ENV_GATEWAY_TOKEN: &str = "CSW_GATEWAY_TOKEN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
    Stub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KindArg {
    Miami,
    #[value(alias = "gua_spa")]
    GuaSpa,
}

impl From<KindArg> for CorpusKind {
    fn from(value: KindArg) -> Self {
        match value {
            KindArg::Miami => CorpusKind::Miami,
            KindArg::GuaSpa => CorpusKind::GuaSpa,
        }
    }
}

/// Flat `key = value` file contents.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("config line {}: expected key = value", idx + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key {key}: {e}")),
        }
    }
}

/// Resolved annotation settings for one run.
#[derive(Debug, Clone)]
pub struct AnnotateConfig {
    pub mode: GatewayMode,
    pub cassette: Option<PathBuf>,
    pub params: GatewayParams,
    pub policy: GatewayPolicy,
    pub gateway_url: Option<String>,
    pub gateway_token: Option<String>,
}

pub struct AnnotateOverrides {
    pub mode: GatewayMode,
    pub cassette: Option<PathBuf>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub batch_size: Option<usize>,
    pub max_concurrency: Option<usize>,
    pub max_retries: Option<u32>,
    pub gateway_url: Option<String>,
}

impl AnnotateConfig {
    /// Applies the precedence chain and validates mode requirements.
    pub fn resolve(overrides: AnnotateOverrides, file: &FileConfig) -> Result<Self> {
        let defaults_params = GatewayParams::default();
        let defaults_policy = GatewayPolicy::default();

        let params = GatewayParams {
            model_name: overrides
                .model
                .or_else(|| file.get("model_name").map(str::to_string))
                .unwrap_or(defaults_params.model_name),
            temperature: match overrides.temperature {
                Some(t) => t,
                None => file
                    .parse("temperature")?
                    .unwrap_or(defaults_params.temperature),
            },
            max_tokens: match overrides.max_tokens {
                Some(t) => t,
                None => file
                    .parse("max_tokens")?
                    .unwrap_or(defaults_params.max_tokens),
            },
        };
        let policy = GatewayPolicy {
            max_retries: match overrides.max_retries {
                Some(r) => r,
                None => file
                    .parse("max_retries")?
                    .unwrap_or(defaults_policy.max_retries),
            },
            batch_size: match overrides.batch_size {
                Some(b) => b,
                None => file
                    .parse("batch_size")?
                    .unwrap_or(defaults_policy.batch_size),
            },
            max_concurrency: match overrides.max_concurrency {
                Some(c) => c,
                None => file
                    .parse("max_concurrency")?
                    .unwrap_or(defaults_policy.max_concurrency),
            },
        };
        if policy.batch_size == 0 {
            bail!("batch_size must be at least 1");
        }

        let gateway_url = overrides
            .gateway_url
            .or_else(|| std::env::var(ENV_GATEWAY_URL).ok())
            .or_else(|| file.get("gateway_url").map(str::to_string));
        let gateway_token = std::env::var(ENV_GATEWAY_TOKEN)
            .ok()
            .or_else(|| file.get("gateway_token").map(str::to_string));

        let config = AnnotateConfig {
            mode: overrides.mode,
            cassette: overrides.cassette,
            params,
            policy,
            gateway_url,
            gateway_token,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        match self.mode {
            GatewayMode::Live | GatewayMode::Record => {
                if self.gateway_url.is_none() {
                    bail!(
                        "{:?} mode needs a gateway endpoint ({} or gateway_url in the config file)",
                        self.mode,
                        ENV_GATEWAY_URL
                    );
                }
                if self.gateway_token.is_none() {
                    bail!(
                        "{:?} mode needs a gateway credential ({} or gateway_token in the config file)",
                        self.mode,
                        ENV_GATEWAY_TOKEN
                    );
                }
                if self.mode == GatewayMode::Record && self.cassette.is_none() {
                    bail!("record mode needs --cassette");
                }
            }
            GatewayMode::Replay => match &self.cassette {
                None => bail!("replay mode needs --cassette"),
                Some(path) if !path.exists() => {
                    bail!("replay cassette {} does not exist", path.display())
                }
                Some(_) => {}
            },
            GatewayMode::Stub => {}
        }
        Ok(())
    }
}

/// Aggregation settings for the analysis tables and charts.
#[derive(Debug, Clone)]
pub struct AggregationConfig {
    pub genre_top_n: usize,
    pub topic_min_total: u64,
    pub chart_genre_top_n: usize,
    pub chart_topic_top_n: usize,
}

impl AggregationConfig {
    pub fn resolve(
        genre_top_n: Option<usize>,
        topic_min_total: Option<u64>,
        file: &FileConfig,
    ) -> Result<Self> {
        Ok(AggregationConfig {
            genre_top_n: match genre_top_n {
                Some(n) => n,
                None => file.parse("genre_top_n")?.unwrap_or(8),
            },
            topic_min_total: match topic_min_total {
                Some(t) => t,
                None => file.parse("topic_min_total")?.unwrap_or(15),
            },
            chart_genre_top_n: file.parse("chart_genre_top_n")?.unwrap_or(10),
            chart_topic_top_n: file.parse("chart_topic_top_n")?.unwrap_or(15),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overrides(mode: GatewayMode) -> AnnotateOverrides {
        AnnotateOverrides {
            mode,
            cassette: None,
            model: None,
            temperature: None,
            max_tokens: None,
            batch_size: None,
            max_concurrency: None,
            max_retries: None,
            gateway_url: None,
        }
    }

    #[test]
    fn defaults_match_deterministic_profile() {
        let config =
            AnnotateConfig::resolve(overrides(GatewayMode::Stub), &FileConfig::default()).unwrap();
        assert_eq!(config.params.temperature, 0.0);
        assert_eq!(config.params.max_tokens, 200);
        assert!(config.policy.batch_size >= 50 && config.policy.batch_size <= 100);
    }

    #[test]
    fn flags_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cswitch.conf");
        std::fs::write(&path, "max_tokens = 150\nmodel_name = other-model\n").unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();

        let mut o = overrides(GatewayMode::Stub);
        o.max_tokens = Some(64);
        let config = AnnotateConfig::resolve(o, &file).unwrap();
        assert_eq!(config.params.max_tokens, 64);
        assert_eq!(config.params.model_name, "other-model");
    }

    #[test]
    fn replay_requires_existing_cassette() {
        let mut o = overrides(GatewayMode::Replay);
        o.cassette = Some(PathBuf::from("/nonexistent/cassette.jsonl"));
        assert!(AnnotateConfig::resolve(o, &FileConfig::default()).is_err());
        assert!(
            AnnotateConfig::resolve(overrides(GatewayMode::Replay), &FileConfig::default())
                .is_err()
        );
    }

    #[test]
    fn live_requires_endpoint_and_credential() {
        // No env in this test process for these names; rely on config file.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cswitch.conf");
        std::fs::write(
            &path,
            "gateway_url = http://localhost:9/v1/chat/completions\n",
        )
        .unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();
        assert!(AnnotateConfig::resolve(overrides(GatewayMode::Live), &file).is_err());

        std::fs::write(
            &path,
            "gateway_url = http://localhost:9/v1/chat/completions\ngateway_token = secret\n",
        )
        .unwrap();
        let file = FileConfig::load(Some(&path)).unwrap();
        assert!(AnnotateConfig::resolve(overrides(GatewayMode::Live), &file).is_ok());
    }
}
