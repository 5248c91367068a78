//! A chat session: one world, one log, one ordered event stream.
//!
//! In command mode each message is a study command, expanded and run as a
//! unit. In llm mode each message is a turn of the model pipeline.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::{execute, expand, parse_native, parse_study, CellChange, ExecStatus, NativeCommand};
use crate::memory::{Clock, CommandTier, LogError, LogStore, LogWriter, Mode, Role, SessionLog, MEMORY_WINDOW};
use crate::pipeline::{run_turn, ExecutedCommand, PipelineConfig, Provider, TurnStatus};
use crate::world::{Observation, Position, Registry, Weather, WorldConfig, WorldState, DEFAULT_GROUND_Y, WORLD_BOUND};

pub const WELCOME: &str = "Welcome! Type a request in the chat to start building.";

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("session `{0}` has ended")]
    Ended(String),
    #[error("llm mode needs a provider")]
    NoProvider,
    #[error(transparent)]
    Log(#[from] LogError),
}

/// Session creation parameters, as sent by clients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub mode: Mode,
    #[serde(default)]
    pub world_bound: Option<i32>,
    #[serde(default)]
    pub ground_y: Option<i32>,
    #[serde(default)]
    pub spawn: Option<Position>,
}

impl SessionConfig {
    pub fn new(mode: Mode) -> Self {
        Self { mode, world_bound: None, ground_y: None, spawn: None }
    }

    pub fn world_config(&self) -> WorldConfig {
        let bound = self.world_bound.unwrap_or(WORLD_BOUND);
        let ground_y = self.ground_y.unwrap_or(DEFAULT_GROUND_Y.min(bound - 1));
        let spawn = self.spawn.unwrap_or(Position::new(bound / 2, ground_y + 1, bound / 2));
        WorldConfig { bound, ground_y, spawn }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventBody {
    Chat {
        from: String,
        text: String,
    },
    CommandExecuted {
        line: String,
        blocks_changed: u64,
        entity_ids: Vec<u64>,
        message: String,
    },
    CommandRejected {
        line: String,
        message: String,
    },
    WorldDelta {
        cells: Vec<CellChange>,
    },
    Weather {
        weather: Weather,
    },
    Time {
        time: u32,
    },
    Entity {
        id: u64,
        entity: String,
        x: i32,
        y: i32,
        z: i32,
        name: Option<String>,
    },
    Fallback {
        attempts: u32,
        reason: String,
    },
    Refusal {
        text: String,
    },
    Error {
        message: String,
    },
    /// Closes every chat turn with its overall result.
    Turn {
        turn_index: u64,
        status: TurnResult,
        attempts: Option<u32>,
    },
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Chat { .. } => "chat",
            EventBody::CommandExecuted { .. } => "command_executed",
            EventBody::CommandRejected { .. } => "command_rejected",
            EventBody::WorldDelta { .. } => "world_delta",
            EventBody::Weather { .. } => "weather",
            EventBody::Time { .. } => "time",
            EventBody::Entity { .. } => "entity",
            EventBody::Fallback { .. } => "fallback",
            EventBody::Refusal { .. } => "refusal",
            EventBody::Error { .. } => "error",
            EventBody::Turn { .. } => "turn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Gapless, starting at 0.
    pub seq: u64,
    pub timestamp: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnResult {
    Executed,
    Rejected,
    Fallback,
    Refused,
}

impl From<TurnStatus> for TurnResult {
    fn from(status: TurnStatus) -> Self {
        match status {
            TurnStatus::Executed => TurnResult::Executed,
            TurnStatus::Fallback => TurnResult::Fallback,
            TurnStatus::Refused => TurnResult::Refused,
        }
    }
}

/// What `handle_chat` reports back to the caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnSummary {
    pub turn_index: u64,
    pub status: TurnResult,
    /// Generator calls, llm mode only.
    pub attempts: Option<u32>,
    pub commands_executed: usize,
    pub replies: Vec<String>,
    pub message: Option<String>,
    /// Sequence numbers of the events this turn produced, `first..=last`.
    pub first_seq: u64,
    pub last_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndSummary {
    pub session_id: String,
    pub log_path: Option<PathBuf>,
    pub turns: usize,
    pub commands: usize,
}

/// Shared services a session needs.
#[derive(Clone)]
pub struct SessionDeps {
    pub provider: Option<Arc<dyn Provider>>,
    pub clock: Arc<dyn Clock>,
    pub store: Option<LogStore>,
    pub pipeline: PipelineConfig,
    pub registry: Arc<Registry>,
}

impl SessionDeps {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            provider: None,
            clock,
            store: None,
            pipeline: PipelineConfig::default(),
            registry: Arc::new(Registry::standard()),
        }
    }

    pub fn with_provider(mut self, provider: Arc<dyn Provider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn with_store(mut self, store: LogStore) -> Self {
        self.store = Some(store);
        self
    }
}

impl std::fmt::Debug for SessionDeps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionDeps")
            .field("provider", &self.provider.is_some())
            .field("store", &self.store)
            .field("pipeline", &self.pipeline)
            .finish()
    }
}

pub struct Session {
    id: String,
    mode: Mode,
    world: WorldState,
    log: SessionLog,
    writer: Option<LogWriter>,
    log_path: Option<PathBuf>,
    events: Vec<Event>,
    deps: SessionDeps,
    ended: bool,
}

impl std::fmt::Debug for Session {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("id", &self.id)
            .field("mode", &self.mode)
            .field("events", &self.events.len())
            .field("ended", &self.ended)
            .finish()
    }
}

impl Session {
    pub fn new(id: impl Into<String>, config: &SessionConfig, deps: SessionDeps) -> Result<Self, SessionError> {
        let id = id.into();
        if config.mode == Mode::Llm && deps.provider.is_none() {
            return Err(SessionError::NoProvider);
        }
        deps.pipeline.validate().map_err(SessionError::InvalidConfig)?;
        let world = WorldState::new(config.world_config(), deps.registry.clone())
            .map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        let log = SessionLog::new(id.clone(), config.mode, deps.clock.now_ms());
        let (writer, log_path) = match &deps.store {
            Some(store) => {
                let writer = store.create_writer(&log)?;
                let path = writer.path().to_path_buf();
                (Some(writer), Some(path))
            }
            None => (None, None),
        };
        let mut session =
            Self { id, mode: config.mode, world, log, writer, log_path, events: Vec::new(), deps, ended: false };
        session.emit(EventBody::Chat { from: "system".into(), text: WELCOME.into() });
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn is_ended(&self) -> bool {
        self.ended
    }

    pub fn next_seq(&self) -> u64 {
        self.events.len() as u64
    }

    /// Events with `seq >= from_seq`, in order.
    pub fn events_from(&self, from_seq: u64) -> &[Event] {
        let start = usize::try_from(from_seq).unwrap_or(usize::MAX).min(self.events.len());
        &self.events[start..]
    }

    pub fn get_state(&self, radius: i32) -> Observation {
        self.world.observe(radius, MEMORY_WINDOW)
    }

    fn emit(&mut self, body: EventBody) {
        let event = Event { seq: self.next_seq(), timestamp: self.deps.clock.now_ms(), body };
        self.events.push(event);
    }

    fn storage_failed(&mut self, err: LogError) {
        self.writer = None;
        let notice = format!("Chat log could not be saved: {err}");
        self.world.push_chat(format!("[system] {notice}"));
        self.emit(EventBody::Error { message: notice });
    }

    fn append_turn(&mut self, role: Role, text: &str) -> u64 {
        let turn = self.log.append(role, text, self.deps.clock.now_ms()).clone();
        if let Some(writer) = self.writer.as_mut() {
            if let Err(e) = writer.turn(&turn) {
                self.storage_failed(e);
            }
        }
        turn.turn_index
    }

    fn append_command(&mut self, tier: CommandTier, line: &str, status: ExecStatus, turn_index: u64) {
        let event = self.log.append_command(tier, line, status, turn_index, self.deps.clock.now_ms()).clone();
        if let Some(writer) = self.writer.as_mut() {
            if let Err(e) = writer.command(&event) {
                self.storage_failed(e);
            }
        }
    }

    /// Logs one command that ran and emits its events.
    fn record_executed(&mut self, cmd: Option<&NativeCommand>, executed: &ExecutedCommand, turn_index: u64) {
        let result = &executed.result;
        if !result.is_ok() {
            self.record_rejected(&executed.line, &result.message, turn_index);
            return;
        }
        self.append_command(CommandTier::Native, &executed.line, ExecStatus::Ok, turn_index);
        self.emit(EventBody::CommandExecuted {
            line: executed.line.clone(),
            blocks_changed: result.blocks_changed,
            entity_ids: result.entity_ids.clone(),
            message: result.message.clone(),
        });
        if !result.changes.is_empty() {
            self.emit(EventBody::WorldDelta { cells: result.changes.clone() });
        }
        match cmd {
            Some(NativeCommand::Weather { weather, .. }) => self.emit(EventBody::Weather { weather: *weather }),
            Some(NativeCommand::TimeSet { .. } | NativeCommand::TimeAdd { .. }) => {
                self.emit(EventBody::Time { time: self.world.time() })
            }
            Some(NativeCommand::Say { text }) => {
                self.emit(EventBody::Chat { from: "agent".into(), text: text.clone() })
            }
            _ => {}
        }
        for id in &result.entity_ids {
            if let Some(e) = self.world.entities().iter().find(|e| e.id == *id) {
                let body = EventBody::Entity {
                    id: e.id,
                    entity: e.kind.clone(),
                    x: e.position.x,
                    y: e.position.y,
                    z: e.position.z,
                    name: e.name_tag().map(str::to_string),
                };
                self.emit(body);
            }
        }
    }

    fn record_rejected(&mut self, line: &str, message: &str, turn_index: u64) {
        self.append_command(CommandTier::Native, line, ExecStatus::Rejected, turn_index);
        self.emit(EventBody::CommandRejected { line: line.to_string(), message: message.to_string() });
    }

    /// Handles one chat message. User input never ends the session; bad
    /// input becomes a rejection event.
    pub fn handle_chat(&mut self, text: &str) -> Result<TurnSummary, SessionError> {
        if self.ended {
            return Err(SessionError::Ended(self.id.clone()));
        }
        let first_seq = self.next_seq();
        let memory = self.log.recent(self.deps.pipeline.memory_window).to_vec();
        let turn_index = self.append_turn(Role::User, text);
        self.world.push_chat(format!("<player> {text}"));
        self.emit(EventBody::Chat { from: "player".into(), text: text.to_string() });

        let (status, attempts, executed, replies, message) = match self.mode {
            Mode::Command => self.command_turn(text, turn_index),
            Mode::Llm => self.llm_turn(text, &memory, turn_index),
        };
        self.emit(EventBody::Turn { turn_index, status, attempts });
        Ok(TurnSummary {
            turn_index,
            status,
            attempts,
            commands_executed: executed,
            replies,
            message,
            first_seq,
            last_seq: self.next_seq() - 1,
        })
    }

    fn command_turn(
        &mut self,
        text: &str,
        turn_index: u64,
    ) -> (TurnResult, Option<u32>, usize, Vec<String>, Option<String>) {
        let line = text.trim();
        let planned = parse_study(line)
            .map_err(|e| e.to_string())
            .and_then(|cmd| expand(&cmd, &self.world.registry().blocks).map_err(|e| e.to_string()));
        let natives = match planned {
            Ok(natives) => natives,
            Err(message) => return self.reject_study(line, message, turn_index),
        };

        // dry run so a study command applies completely or not at all
        let mut scratch = self.world.clone();
        let mut executed = Vec::with_capacity(natives.len());
        for cmd in &natives {
            let result = execute(cmd, &mut scratch);
            if !result.is_ok() {
                return self.reject_study(line, format!("{cmd}: {}", result.message), turn_index);
            }
            executed.push(ExecutedCommand { line: cmd.to_string(), result });
        }
        self.world = scratch;
        self.append_command(CommandTier::Study, line, ExecStatus::Ok, turn_index);
        for (cmd, done) in natives.iter().zip(&executed) {
            self.record_executed(Some(cmd), done, turn_index);
        }
        let reply = format!("ok: {} command(s) executed", executed.len());
        self.append_turn(Role::SystemEvent, &reply);
        (TurnResult::Executed, None, executed.len(), Vec::new(), Some(reply))
    }

    fn reject_study(
        &mut self,
        line: &str,
        message: String,
        turn_index: u64,
    ) -> (TurnResult, Option<u32>, usize, Vec<String>, Option<String>) {
        self.append_command(CommandTier::Study, line, ExecStatus::Rejected, turn_index);
        self.emit(EventBody::CommandRejected { line: line.to_string(), message: message.clone() });
        self.append_turn(Role::SystemEvent, &format!("rejected: {message}"));
        (TurnResult::Rejected, None, 0, Vec::new(), Some(message))
    }

    fn llm_turn(
        &mut self,
        text: &str,
        memory: &[crate::memory::ChatTurn],
        turn_index: u64,
    ) -> (TurnResult, Option<u32>, usize, Vec<String>, Option<String>) {
        let provider = self.deps.provider.clone().expect("llm sessions have a provider");
        let config = self.deps.pipeline;
        let outcome = run_turn(provider.as_ref(), &mut self.world, memory, text, &config);

        for rejected in &outcome.rejected_commands {
            self.record_rejected(&rejected.line, &rejected.result.message, turn_index);
        }
        for done in &outcome.executed_commands {
            let cmd = parse_native(&done.line).ok();
            self.record_executed(cmd.as_ref(), done, turn_index);
        }
        match outcome.status {
            TurnStatus::Refused => {
                self.emit(EventBody::Refusal { text: outcome.chat_replies.join("\n") });
            }
            TurnStatus::Fallback => {
                let reason = match &outcome.error {
                    Some(e) => e.clone(),
                    None if outcome.attempts >= config.max_attempts && !outcome.reports.is_empty() => {
                        "no valid commands within the attempt budget".to_string()
                    }
                    None => "reply could not be parsed".to_string(),
                };
                if let Some(e) = &outcome.error {
                    self.emit(EventBody::Error { message: e.clone() });
                }
                self.emit(EventBody::Fallback { attempts: outcome.attempts, reason });
            }
            TurnStatus::Executed => {}
        }
        if outcome.status != TurnStatus::Refused {
            for reply in &outcome.chat_replies {
                self.emit(EventBody::Chat { from: "agent".into(), text: reply.clone() });
            }
        }
        let reply = if outcome.chat_replies.is_empty() {
            format!("({} command(s) executed)", outcome.executed_commands.len())
        } else {
            outcome.chat_replies.join("\n")
        };
        self.append_turn(Role::Assistant, &reply);
        (
            outcome.status.into(),
            Some(outcome.attempts),
            outcome.executed_commands.len(),
            outcome.chat_replies,
            outcome.error,
        )
    }

    /// Marks the session ended and closes its log. Ending twice is an error.
    pub fn end(&mut self) -> Result<EndSummary, SessionError> {
        if self.ended {
            return Err(SessionError::Ended(self.id.clone()));
        }
        self.ended = true;
        let now = self.deps.clock.now_ms();
        self.log.ended_at = Some(now.max(self.log.created_at));
        if let Some(mut writer) = self.writer.take() {
            writer.end(self.log.ended_at.unwrap_or(now))?;
        }
        self.emit(EventBody::Chat { from: "system".into(), text: "Session ended.".into() });
        Ok(EndSummary {
            session_id: self.id.clone(),
            log_path: self.log_path.clone(),
            turns: self.log.turns.len(),
            commands: self.log.command_events.len(),
        })
    }
}

/// Owns every live session. Each session sits behind its own lock, so turns
/// within a session serialize while different sessions run in parallel.
#[derive(Debug)]
pub struct SessionManager {
    deps: SessionDeps,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    counter: AtomicU64,
}

impl SessionManager {
    pub fn new(deps: SessionDeps) -> Self {
        Self { deps, sessions: RwLock::new(HashMap::new()), counter: AtomicU64::new(0) }
    }

    pub fn deps(&self) -> &SessionDeps {
        &self.deps
    }

    pub fn create(&self, config: &SessionConfig) -> Result<String, SessionError> {
        let n = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
        let id = format!("s{:x}-{n:04}", self.deps.clock.now_ms());
        let session = Session::new(id.clone(), config, self.deps.clone())?;
        self.sessions.write().expect("session table lock").insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("session table lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    /// Session logs, ended or not.
    pub fn logs(&self) -> Vec<SessionLog> {
        let sessions: Vec<_> = self.sessions.read().expect("session table lock").values().cloned().collect();
        sessions.iter().map(|s| s.lock().expect("session lock").log().clone()).collect()
    }

    pub fn handle_chat(&self, id: &str, text: &str) -> Result<TurnSummary, SessionError> {
        self.get(id)?.lock().expect("session lock").handle_chat(text)
    }

    pub fn end(&self, id: &str) -> Result<EndSummary, SessionError> {
        self.get(id)?.lock().expect("session lock").end()
    }
}
