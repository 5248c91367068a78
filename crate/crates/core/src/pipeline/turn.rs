use serde::{Deserialize, Serialize};

use super::compat::postprocess_compat;
use super::prompt::{compose_analyzer_prompt, compose_generator_prompt, refine_prompt, TaskAnalysis};
use super::provider::{Message, Provider, ProviderRequest, Stage};
use super::response::{parse_response, CotResponse, ParsedResponse};
use super::validate::{validate, ValidationContext, ValidationReport, Violation, ViolationKind};
use crate::commands::{execute, parse_native, ExecStatus, ExecutionResult, NativeCommand};
use crate::memory::{ChatTurn, MEMORY_WINDOW};
use crate::world::WorldState;

/// Hard ceiling on generator calls per turn.
pub const MAX_ATTEMPTS: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Generator calls allowed per turn, 1..=5.
    pub max_attempts: u32,
    /// Radius of the observation sent to the model.
    pub observation_radius: i32,
    pub memory_window: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { max_attempts: MAX_ATTEMPTS, observation_radius: 8, memory_window: MEMORY_WINDOW }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=MAX_ATTEMPTS).contains(&self.max_attempts) {
            return Err(format!("max_attempts must be between 1 and {MAX_ATTEMPTS}, got {}", self.max_attempts));
        }
        if self.observation_radius < 0 {
            return Err("observation_radius must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnStatus {
    Executed,
    Fallback,
    Refused,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutedCommand {
    pub line: String,
    pub result: ExecutionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum FinalResponse {
    Cot(CotResponse),
    Raw(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub status: TurnStatus,
    /// Generator calls made.
    pub attempts: u32,
    pub analysis: TaskAnalysis,
    /// Commands that ran against the world, in order.
    pub executed_commands: Vec<ExecutedCommand>,
    /// Lines whose execution was rejected during an attempt that was then
    /// rolled back.
    pub rejected_commands: Vec<ExecutedCommand>,
    /// Text relayed to the player through chat.
    pub chat_replies: Vec<String>,
    pub final_response: FinalResponse,
    /// Validation reports of failed attempts, oldest first.
    pub reports: Vec<ValidationReport>,
    /// Set when the provider failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum FallbackAction {
    Executed(ExecutedCommand),
    Said { text: String },
}

fn say(world: &mut WorldState, text: &str) -> ExecutionResult {
    execute(&NativeCommand::Say { text: text.to_string() }, world)
}

pub const EMPTY_FALLBACK_NOTICE: &str = "(no response)";

/// Runs `/` lines that parse and relays every other line as chat.
pub fn fallback_execute(raw: &str, world: &mut WorldState) -> Vec<FallbackAction> {
    let mut actions = Vec::new();
    for line in raw.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match line.starts_with('/').then(|| parse_native(line)) {
            Some(Ok(cmd)) => {
                let result = execute(&cmd, world);
                actions.push(FallbackAction::Executed(ExecutedCommand { line: line.to_string(), result }));
            }
            _ => {
                say(world, line);
                actions.push(FallbackAction::Said { text: line.to_string() });
            }
        }
    }
    if actions.is_empty() {
        say(world, EMPTY_FALLBACK_NOTICE);
        actions.push(FallbackAction::Said { text: EMPTY_FALLBACK_NOTICE.into() });
    }
    actions
}

enum Attempt {
    Committed(Vec<ExecutedCommand>),
    Rejected(ExecutedCommand, ValidationReport),
}

/// Runs every line on a copy of the world and keeps the copy only if all of
/// them succeed.
fn execute_all(lines: &[String], world: &mut WorldState) -> Attempt {
    let mut scratch = world.clone();
    let mut done = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        let result = match parse_native(line) {
            Ok(cmd) => execute(&cmd, &mut scratch),
            Err(e) => {
                let report = ValidationReport {
                    violations: vec![Violation {
                        kind: ViolationKind::Syntax,
                        line_index: i,
                        line: line.clone(),
                        detail: e.to_string(),
                    }],
                };
                let result = ExecutionResult {
                    status: ExecStatus::Rejected,
                    message: e.to_string(),
                    blocks_changed: 0,
                    entity_ids: Vec::new(),
                    changes: Vec::new(),
                    error: None,
                };
                return Attempt::Rejected(ExecutedCommand { line: line.clone(), result }, report);
            }
        };
        if !result.is_ok() {
            let kind = result.error.as_ref().map_or(ViolationKind::Syntax, ViolationKind::from_world_error);
            let report = ValidationReport {
                violations: vec![Violation { kind, line_index: i, line: line.clone(), detail: result.message.clone() }],
            };
            return Attempt::Rejected(ExecutedCommand { line: line.clone(), result }, report);
        }
        done.push(ExecutedCommand { line: line.clone(), result });
    }
    *world = scratch;
    Attempt::Committed(done)
}

/// One conversational turn: analyse, generate, check, retry, execute.
///
/// The analyzer runs once. The generator runs at most
/// `config.max_attempts` times; each rejected attempt appends a correction
/// block to its prompt. A turn that ends in fallback or refusal leaves
/// blocks and entities untouched; only chat is added.
pub fn run_turn(
    provider: &dyn Provider,
    world: &mut WorldState,
    memory: &[ChatTurn],
    user_input: &str,
    config: &PipelineConfig,
) -> TurnOutcome {
    let max_attempts = config.max_attempts.clamp(1, MAX_ATTEMPTS);
    let memory = &memory[memory.len().saturating_sub(config.memory_window)..];
    let observation = world.observe(config.observation_radius, config.memory_window);
    let registry = world.registry().clone();

    let analyzer_prompt = compose_analyzer_prompt(user_input, memory, &observation);
    let analysis = provider
        .complete(&ProviderRequest {
            stage: Stage::Analyzer,
            system: analyzer_prompt,
            messages: vec![Message::user(user_input)],
        })
        .ok()
        .and_then(|raw| TaskAnalysis::parse(&raw, &registry))
        .unwrap_or_else(|| TaskAnalysis::fallback(user_input));

    let mut outcome = TurnOutcome {
        status: TurnStatus::Fallback,
        attempts: 0,
        analysis,
        executed_commands: Vec::new(),
        rejected_commands: Vec::new(),
        chat_replies: Vec::new(),
        final_response: FinalResponse::Raw(String::new()),
        reports: Vec::new(),
        error: None,
    };
    let mut prompt = compose_generator_prompt(&outcome.analysis, memory, &observation, world.bound(), &registry);
    let mut last_comment = String::new();

    while outcome.attempts < max_attempts {
        outcome.attempts += 1;
        let request = ProviderRequest {
            stage: Stage::Generator,
            system: prompt.clone(),
            messages: vec![Message::user(user_input)],
        };
        let raw = match provider.complete(&request) {
            Ok(raw) => raw,
            Err(e) => {
                let notice = format!("Sorry, the assistant is unavailable right now ({e}).");
                say(world, &notice);
                outcome.chat_replies.push(notice);
                outcome.error = Some(e.to_string());
                return outcome;
            }
        };

        let parsed = parse_response(&raw);
        let cot = match parsed {
            ParsedResponse::Unparsed(raw) => {
                for action in fallback_execute(&raw, world) {
                    match action {
                        FallbackAction::Said { text } => outcome.chat_replies.push(text),
                        FallbackAction::Executed(cmd) => outcome.executed_commands.push(cmd),
                    }
                }
                outcome.final_response = FinalResponse::Raw(raw);
                return outcome;
            }
            ParsedResponse::Cot(cot) if cot.refusal => {
                say(world, &cot.final_comment);
                outcome.chat_replies.push(cot.final_comment.clone());
                outcome.status = TurnStatus::Refused;
                outcome.final_response = FinalResponse::Cot(cot);
                return outcome;
            }
            ParsedResponse::Cot(cot) => cot,
            ParsedResponse::Calls(payload) => {
                CotResponse { instructions: payload.to_lines(), ..CotResponse::default() }
            }
        };

        let lines: Vec<String> = cot.instructions.iter().map(|l| postprocess_compat(l)).collect();
        last_comment = cot.final_comment.clone();
        outcome.final_response = FinalResponse::Cot(cot);

        let report = validate(&lines, &ValidationContext::from_world(world));
        let report = if report.is_empty() {
            match execute_all(&lines, world) {
                Attempt::Committed(done) => {
                    outcome.executed_commands = done;
                    if !last_comment.is_empty() {
                        say(world, &last_comment);
                        outcome.chat_replies.push(last_comment);
                    }
                    outcome.status = TurnStatus::Executed;
                    return outcome;
                }
                Attempt::Rejected(cmd, report) => {
                    outcome.rejected_commands.push(cmd);
                    report
                }
            }
        } else {
            report
        };
        prompt = refine_prompt(&prompt, &report, outcome.attempts, world.bound());
        outcome.reports.push(report);
    }

    // out of attempts: tell the player, run nothing
    let notice = format!("I couldn't produce valid commands after {} attempts.", outcome.attempts);
    say(world, &notice);
    outcome.chat_replies.push(notice);
    if !last_comment.is_empty() && !last_comment.starts_with('/') {
        say(world, &last_comment);
        outcome.chat_replies.push(last_comment);
    }
    outcome
}
