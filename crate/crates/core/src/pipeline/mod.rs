//! The language-model interface.
//!
//! A turn goes through two model calls: the analyzer turns the request into
//! a [`TaskAnalysis`], then the generator writes commands in a five-section
//! reply (reflection, planning, instructions, self-check, final comment).
//! Instructions are rewritten for version compatibility, validated, and run
//! as one transaction. Rejected attempts are retried with a corrected prompt.

mod compat;
mod demo;
mod prompt;
mod provider;
mod response;
mod turn;
mod validate;

pub use compat::postprocess_compat;
pub use demo::DemoProvider;
pub use prompt::{
    compose_analyzer_prompt, compose_generator_prompt, refine_prompt, render, rule_bounds, TaskAnalysis, TaskType,
    ANALYZER_TEMPLATE, GENERATOR_TEMPLATE, RULE_BLOCKS, RULE_PLACEHOLDERS, SECTION_HEADERS, TEMPLATE_VERSION,
};
pub use provider::{
    echo_analysis, Fault, FaultProvider, Message, MockScript, Provider, ProviderError, ProviderRequest,
    ScriptedProvider, Stage, PLACEHOLDER_REPLY,
};
pub use response::{parse_response, CotResponse, FunctionCall, FunctionCallPayload, ParsedResponse};
pub use turn::{
    fallback_execute, run_turn, ExecutedCommand, FallbackAction, FinalResponse, PipelineConfig, TurnOutcome,
    TurnStatus, EMPTY_FALLBACK_NOTICE, MAX_ATTEMPTS,
};
pub use validate::{validate, ValidationContext, ValidationReport, Violation, ViolationKind};
