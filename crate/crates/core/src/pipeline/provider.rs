use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Analyzer,
    Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: "user".into(), content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: "assistant".into(), content: content.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub stage: Stage,
    pub system: String,
    pub messages: Vec<Message>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider timed out after {0}s")]
    Timeout(u64),
    #[error("provider misconfigured: {0}")]
    Config(String),
    #[error("mock script has no {0:?} response left")]
    ScriptExhausted(Stage),
}

/// A chat-completion backend: system prompt and messages in, raw text out.
///
/// Implementations must tolerate concurrent calls from different sessions.
pub trait Provider: Send + Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// Canned analyzer reply that restates the request.
pub fn echo_analysis(request: &ProviderRequest) -> String {
    let input = request.messages.last().map(|m| m.content.as_str()).unwrap_or_default();
    serde_json::json!({
        "goal": input,
        "task_type": "other",
        "materials": [],
        "steps": [input],
    })
    .to_string()
}

/// Replays fixed responses per stage. When a stage's queue is down to one
/// response, that response repeats. Analyzer calls without a script get
/// [`echo_analysis`].
#[derive(Debug, Default)]
pub struct ScriptedProvider {
    analyzer: Mutex<VecDeque<String>>,
    generator: Mutex<VecDeque<String>>,
    calls: Mutex<Vec<ProviderRequest>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub analyzer: Vec<String>,
    pub generator: Vec<String>,
}

impl ScriptedProvider {
    pub fn new<I, S>(generator: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_script(MockScript {
            analyzer: Vec::new(),
            generator: generator.into_iter().map(Into::into).collect(),
        })
    }

    pub fn from_script(script: MockScript) -> Self {
        Self {
            analyzer: Mutex::new(script.analyzer.into()),
            generator: Mutex::new(script.generator.into()),
            calls: Mutex::new(Vec::new()),
        }
    }

    pub fn with_analysis(self, analysis: impl Into<String>) -> Self {
        self.analyzer.lock().expect("script lock").push_back(analysis.into());
        self
    }

    /// Every request seen so far, in order.
    pub fn calls(&self) -> Vec<ProviderRequest> {
        self.calls.lock().expect("call log lock").clone()
    }

    pub fn call_count(&self, stage: Stage) -> usize {
        self.calls.lock().expect("call log lock").iter().filter(|r| r.stage == stage).count()
    }
}

fn next_sticky(queue: &Mutex<VecDeque<String>>) -> Option<String> {
    let mut queue = queue.lock().expect("script lock");
    if queue.len() > 1 {
        queue.pop_front()
    } else {
        queue.front().cloned()
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        self.calls.lock().expect("call log lock").push(request.clone());
        match request.stage {
            Stage::Analyzer => Ok(next_sticky(&self.analyzer).unwrap_or_else(|| echo_analysis(request))),
            Stage::Generator => next_sticky(&self.generator).ok_or(ProviderError::ScriptExhausted(Stage::Generator)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Well-formed replies whose commands keep `<x> <y> <z>` placeholders.
    Placeholders,
    /// Text with no sections and no commands.
    Garbage,
    /// Every call fails at the transport level.
    Transport,
}

/// Fails the same way on every generator call.
#[derive(Debug)]
pub struct FaultProvider {
    fault: Fault,
    analyzer_calls: AtomicUsize,
    generator_calls: AtomicUsize,
}

impl FaultProvider {
    pub fn new(fault: Fault) -> Self {
        Self { fault, analyzer_calls: AtomicUsize::new(0), generator_calls: AtomicUsize::new(0) }
    }

    pub fn call_count(&self, stage: Stage) -> usize {
        match stage {
            Stage::Analyzer => self.analyzer_calls.load(Ordering::SeqCst),
            Stage::Generator => self.generator_calls.load(Ordering::SeqCst),
        }
    }
}

pub const PLACEHOLDER_REPLY: &str = "Reflection: Place a stone block.
Planning: Step 1: Place the block.
Instructions:
/setblock <x> <y> <z> stone
Self-check: All coordinates are within (0-100); Correct Minecraft 1.11.2 block IDs used
Final Comment: Done!";

impl Provider for FaultProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<String, ProviderError> {
        let counter = match request.stage {
            Stage::Analyzer => &self.analyzer_calls,
            Stage::Generator => &self.generator_calls,
        };
        counter.fetch_add(1, Ordering::SeqCst);
        match (self.fault, request.stage) {
            (Fault::Transport, _) => Err(ProviderError::Transport("connection refused".into())),
            (_, Stage::Analyzer) => Ok(echo_analysis(request)),
            (Fault::Placeholders, Stage::Generator) => Ok(PLACEHOLDER_REPLY.to_string()),
            (Fault::Garbage, Stage::Generator) => Ok("zxq blorp\nwibble".to_string()),
        }
    }
}
