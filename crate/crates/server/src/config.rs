use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use voxchat::memory::{LogStore, SystemClock};
use voxchat::pipeline::{DemoProvider, MockScript, PipelineConfig, Provider, ScriptedProvider};
use voxchat::session::SessionDeps;

use crate::live::LiveProvider;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("mock script {path} is not valid JSON: {source}")]
    Script { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    /// Deterministic replies: a mock script if given, else the built-in demo.
    Mock,
    /// A chat completions endpoint.
    Live,
}

/// Server settings. Every flag can also come from its environment variable.
#[derive(Debug, Clone, Parser)]
#[command(name = "voxchat-server", version, about = "Serve voxchat sessions over HTTP and WebSocket")]
pub struct ServerConfig {
    #[arg(long, env = "VOXCHAT_BIND", default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Session logs are written here as `<session id>.jsonl`.
    #[arg(long, env = "VOXCHAT_LOG_DIR")]
    pub log_dir: Option<PathBuf>,
    #[arg(long, env = "VOXCHAT_PROVIDER", value_enum, default_value = "mock")]
    pub provider: ProviderKind,
    /// JSON file with `analyzer` and `generator` reply lists.
    #[arg(long, env = "VOXCHAT_MOCK_SCRIPT")]
    pub mock_script: Option<PathBuf>,
    #[arg(long, env = "VOXCHAT_LLM_ENDPOINT")]
    pub llm_endpoint: Option<String>,
    #[arg(long, env = "VOXCHAT_LLM_API_KEY", hide_env_values = true)]
    pub llm_api_key: Option<String>,
    #[arg(long, env = "VOXCHAT_LLM_MODEL", default_value = "gpt-4")]
    pub llm_model: String,
    #[arg(long, env = "VOXCHAT_LLM_TIMEOUT_SECS", default_value_t = 60)]
    pub llm_timeout_secs: u64,
    /// Generator attempts per turn, 1 to 5.
    #[arg(long, env = "VOXCHAT_MAX_ATTEMPTS", default_value_t = voxchat::pipeline::MAX_ATTEMPTS)]
    pub max_attempts: u32,
}

impl ServerConfig {
    pub fn provider(&self) -> Result<Arc<dyn Provider>, ConfigError> {
        match self.provider {
            ProviderKind::Mock => match &self.mock_script {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                    let script: MockScript = serde_json::from_str(&text)
                        .map_err(|source| ConfigError::Script { path: path.clone(), source })?;
                    Ok(Arc::new(ScriptedProvider::from_script(script)))
                }
                None => Ok(Arc::new(DemoProvider)),
            },
            ProviderKind::Live => {
                let endpoint = self.llm_endpoint.clone().ok_or_else(|| {
                    ConfigError::Invalid("VOXCHAT_LLM_ENDPOINT is required for the live provider".into())
                })?;
                let live = LiveProvider::new(
                    endpoint,
                    self.llm_api_key.clone(),
                    self.llm_model.clone(),
                    Duration::from_secs(self.llm_timeout_secs),
                )
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Ok(Arc::new(live))
            }
        }
    }

    pub fn session_deps(&self) -> Result<SessionDeps, ConfigError> {
        let pipeline = PipelineConfig { max_attempts: self.max_attempts, ..PipelineConfig::default() };
        pipeline.validate().map_err(ConfigError::Invalid)?;
        let mut deps = SessionDeps::new(Arc::new(SystemClock)).with_provider(self.provider()?);
        deps.pipeline = pipeline;
        if let Some(dir) = &self.log_dir {
            let store = LogStore::new(dir).map_err(|e| ConfigError::Invalid(e.to_string()))?;
            deps = deps.with_store(store);
        }
        Ok(deps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ServerConfig::try_parse_from(["voxchat-server"]).unwrap();
        assert_eq!(c.provider, ProviderKind::Mock);
        assert_eq!(c.max_attempts, 5);
        assert!(c.session_deps().is_ok());
    }

    #[test]
    fn invalid_settings() {
        let c = ServerConfig::try_parse_from(["voxchat-server", "--max-attempts", "9"]).unwrap();
        assert!(matches!(c.session_deps(), Err(ConfigError::Invalid(_))));
        let c = ServerConfig::try_parse_from(["voxchat-server", "--provider", "live"]).unwrap();
        assert!(matches!(c.provider(), Err(ConfigError::Invalid(_))));
        assert!(ServerConfig::try_parse_from(["voxchat-server", "--provider", "banana"]).is_err());
    }
}
