//! Interaction memory: the rolling window of recent turns fed to prompts,
//! and the append-only session log persisted as JSONL.
//!
//! Log files live at `<dir>/<session_id>.jsonl`, one record per line:
//!
//! ```text
//! {"v":1,"type":"session","session_id":"s1","mode":"llm","created_at":1700000000000}
//! {"v":1,"type":"turn","role":"user","text":"build a pond","timestamp":1700000000100,"turn_index":0}
//! {"v":1,"type":"command","timestamp":1700000000900,"raw_line":"/fill 1 63 1 3 62 3 water","status":"ok","turn_index":0,"tier":"native"}
//! {"v":1,"type":"end","ended_at":1700000100000}
//! ```

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::ExecStatus;

pub const LOG_SCHEMA_VERSION: u32 = 1;
/// Turns included in prompts.
pub const MEMORY_WINDOW: usize = 10;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("invalid session id `{0}`")]
    InvalidId(String),
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start_ms: u64) -> Self {
        Self(AtomicU64::new(start_ms))
    }

    pub fn advance(&self, ms: u64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }

    pub fn set(&self, ms: u64) {
        self.0.store(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Llm,
    Command,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Llm => "llm",
            Mode::Command => "command",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "llm" => Ok(Mode::Llm),
            "command" => Ok(Mode::Command),
            other => Err(format!("unknown mode `{other}` (expected `llm` or `command`)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
    SystemEvent,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::SystemEvent => "system_event",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub text: String,
    pub timestamp: u64,
    pub turn_index: u64,
}

/// Which language a logged command line is written in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandTier {
    /// A slash command that ran against the world.
    #[default]
    Native,
    /// A command typed by the player in command mode, before expansion.
    Study,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandEvent {
    pub timestamp: u64,
    pub raw_line: String,
    pub status: ExecStatus,
    /// Index of the user turn that caused the command.
    pub turn_index: u64,
    #[serde(default)]
    pub tier: CommandTier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: String,
    pub mode: Mode,
    pub created_at: u64,
    pub ended_at: Option<u64>,
    pub turns: Vec<ChatTurn>,
    pub command_events: Vec<CommandEvent>,
}

impl SessionLog {
    pub fn new(session_id: impl Into<String>, mode: Mode, created_at: u64) -> Self {
        Self {
            session_id: session_id.into(),
            mode,
            created_at,
            ended_at: None,
            turns: Vec::new(),
            command_events: Vec::new(),
        }
    }

    fn last_timestamp(&self) -> u64 {
        let turn = self.turns.last().map_or(0, |t| t.timestamp);
        let cmd = self.command_events.last().map_or(0, |c| c.timestamp);
        self.created_at.max(turn).max(cmd)
    }

    /// Appends a turn; timestamps are clamped so they never go backwards.
    pub fn append(&mut self, role: Role, text: impl Into<String>, timestamp: u64) -> &ChatTurn {
        let turn = ChatTurn {
            role,
            text: text.into(),
            timestamp: timestamp.max(self.last_timestamp()),
            turn_index: self.turns.len() as u64,
        };
        self.turns.push(turn);
        self.turns.last().expect("just pushed")
    }

    pub fn append_command(
        &mut self,
        tier: CommandTier,
        raw_line: impl Into<String>,
        status: ExecStatus,
        turn_index: u64,
        timestamp: u64,
    ) -> &CommandEvent {
        let event = CommandEvent {
            timestamp: timestamp.max(self.last_timestamp()),
            raw_line: raw_line.into(),
            status,
            turn_index,
            tier,
        };
        self.command_events.push(event);
        self.command_events.last().expect("just pushed")
    }

    /// The last `min(k, len)` turns, oldest first.
    pub fn recent(&self, k: usize) -> &[ChatTurn] {
        &self.turns[self.turns.len().saturating_sub(k)..]
    }

    pub fn user_inputs(&self) -> impl Iterator<Item = &ChatTurn> {
        self.turns.iter().filter(|t| t.role == Role::User)
    }

    fn records(&self) -> Vec<Record> {
        let mut records =
            vec![Record::Session { session_id: self.session_id.clone(), mode: self.mode, created_at: self.created_at }];
        // interleave by timestamp, turns first on ties
        let mut turns = self.turns.iter().peekable();
        let mut cmds = self.command_events.iter().peekable();
        loop {
            let take_turn = match (turns.peek(), cmds.peek()) {
                (Some(t), Some(c)) => t.timestamp <= c.timestamp,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_turn {
                records.push(Record::Turn(turns.next().expect("peeked").clone()));
            } else {
                records.push(Record::Command(cmds.next().expect("peeked").clone()));
            }
        }
        if let Some(ended_at) = self.ended_at {
            records.push(Record::End { ended_at });
        }
        records
    }

    /// Writes the whole log to `path`, replacing any existing file.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<(), LogError> {
        let path = path.as_ref();
        let io_err = |source| LogError::Io { path: path.to_path_buf(), source };
        let mut out = io::BufWriter::new(File::create(path).map_err(io_err)?);
        for record in self.records() {
            writeln!(out, "{}", encode(&record)).map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LogError> {
        let path = path.as_ref();
        let io_err = |source| LogError::Io { path: path.to_path_buf(), source };
        let reader = BufReader::new(File::open(path).map_err(io_err)?);
        let mut log: Option<SessionLog> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |reason: String| LogError::Corrupt { path: path.to_path_buf(), line: i + 1, reason };
            let envelope: Envelope = serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            if envelope.v != LOG_SCHEMA_VERSION {
                return Err(corrupt(format!("unsupported schema version {}", envelope.v)));
            }
            match (envelope.record, log.as_mut()) {
                (Record::Session { session_id, mode, created_at }, None) => {
                    log = Some(SessionLog::new(session_id, mode, created_at));
                }
                (Record::Session { .. }, Some(_)) => return Err(corrupt("second session header".into())),
                (_, None) => return Err(corrupt("record before session header".into())),
                (Record::Turn(turn), Some(log)) => log.turns.push(turn),
                (Record::Command(cmd), Some(log)) => log.command_events.push(cmd),
                (Record::End { ended_at }, Some(log)) => log.ended_at = Some(ended_at),
            }
        }
        log.ok_or_else(|| LogError::Corrupt { path: path.to_path_buf(), line: 0, reason: "empty log".into() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Session { session_id: String, mode: Mode, created_at: u64 },
    Turn(ChatTurn),
    Command(CommandEvent),
    End { ended_at: u64 },
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    v: u32,
    #[serde(flatten)]
    record: Record,
}

fn encode(record: &Record) -> String {
    serde_json::to_string(&Envelope { v: LOG_SCHEMA_VERSION, record: record.clone() }).expect("log records serialize")
}

pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Directory of session logs.
#[derive(Debug, Clone)]
pub struct LogStore {
    dir: PathBuf,
}

impl LogStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, LogError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| LogError::Io { path: dir.clone(), source })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session_id: &str) -> Result<PathBuf, LogError> {
        if !valid_session_id(session_id) {
            return Err(LogError::InvalidId(session_id.to_string()));
        }
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }

    pub fn load(&self, session_id: &str) -> Result<SessionLog, LogError> {
        SessionLog::load(self.path_for(session_id)?)
    }

    /// Loads every `*.jsonl` log in the directory, sorted by session id.
    pub fn load_all(&self) -> Result<Vec<SessionLog>, LogError> {
        let entries = fs::read_dir(&self.dir).map_err(|source| LogError::Io { path: self.dir.clone(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|e| e == "jsonl"))
            .collect();
        paths.sort();
        paths.into_iter().map(SessionLog::load).collect()
    }

    /// Opens an append-only writer and writes the session header.
    pub fn create_writer(&self, log: &SessionLog) -> Result<LogWriter, LogError> {
        let path = self.path_for(&log.session_id)?;
        let file = OpenOptions::new()
            .create(true)
            .truncate(true)
            .write(true)
            .open(&path)
            .map_err(|source| LogError::Io { path: path.clone(), source })?;
        let mut writer = LogWriter { path, file };
        writer.write(&Record::Session {
            session_id: log.session_id.clone(),
            mode: log.mode,
            created_at: log.created_at,
        })?;
        Ok(writer)
    }
}

/// Appends records to a session's JSONL file, flushing each one.
#[derive(Debug)]
pub struct LogWriter {
    path: PathBuf,
    file: File,
}

impl LogWriter {
    fn write(&mut self, record: &Record) -> Result<(), LogError> {
        let mut line = encode(record);
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|()| self.file.flush())
            .map_err(|source| LogError::Io { path: self.path.clone(), source })
    }

    pub fn turn(&mut self, turn: &ChatTurn) -> Result<(), LogError> {
        self.write(&Record::Turn(turn.clone()))
    }

    pub fn command(&mut self, event: &CommandEvent) -> Result<(), LogError> {
        self.write(&Record::Command(event.clone()))
    }

    pub fn end(&mut self, ended_at: u64) -> Result<(), LogError> {
        self.write(&Record::End { ended_at })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_with(n: usize) -> SessionLog {
        let mut log = SessionLog::new("s1", Mode::Llm, 1_000);
        for i in 1..=n {
            log.append(
                if i % 2 == 1 { Role::User } else { Role::Assistant },
                format!("message #{i:02}"),
                1_000 + i as u64,
            );
        }
        log
    }

    #[test]
    fn window() {
        let log = log_with(3);
        assert_eq!(log.recent(10).len(), 3);
        assert_eq!(log.recent(10)[0].text, "message #01");

        let log = log_with(25);
        let window: Vec<_> = log.recent(10).iter().map(|t| t.text.as_str()).collect();
        let expected: Vec<_> = (16..=25).map(|i| format!("message #{i:02}")).collect();
        assert_eq!(window, expected);
    }

    #[test]
    fn timestamps_never_decrease() {
        let mut log = SessionLog::new("s1", Mode::Command, 5_000);
        log.append(Role::User, "a", 4_000);
        log.append(Role::User, "b", 6_000);
        log.append_command(CommandTier::Native, "/weather rain", ExecStatus::Ok, 1, 5_500);
        assert_eq!(log.turns[0].timestamp, 5_000);
        assert_eq!(log.command_events[0].timestamp, 6_000);
        assert_eq!(log.turns[1].turn_index, 1);
    }

    #[test]
    fn persist_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = log_with(4);
        log.append_command(CommandTier::Native, "/weather rain", ExecStatus::Ok, 2, 1_003);
        log.append_command(CommandTier::Study, "place 0 200 0 stone 0", ExecStatus::Rejected, 2, 1_003);
        log.ended_at = Some(9_999);
        let path = dir.path().join("s1.jsonl");
        log.persist(&path).unwrap();
        assert_eq!(SessionLog::load(&path).unwrap(), log);
    }

    #[test]
    fn writer_appends_and_loads() {
        let dir = tempfile::tempdir().unwrap();
        let store = LogStore::new(dir.path()).unwrap();
        let mut log = SessionLog::new("abc", Mode::Command, 10);
        let mut writer = store.create_writer(&log).unwrap();
        let turn = log.append(Role::User, "weather rain", 20).clone();
        writer.turn(&turn).unwrap();
        let cmd = log.append_command(CommandTier::Native, "/weather rain", ExecStatus::Ok, 0, 21).clone();
        writer.command(&cmd).unwrap();
        assert_eq!(store.load("abc").unwrap(), log);
        assert_eq!(store.load_all().unwrap(), vec![log]);
        assert!(matches!(store.path_for("../etc"), Err(LogError::InvalidId(_))));
    }

    #[test]
    fn corrupt_logs_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.jsonl");
        fs::write(
            &path,
            "{\"v\":1,\"type\":\"turn\",\"role\":\"user\",\"text\":\"a\",\"timestamp\":1,\"turn_index\":0}\n",
        )
        .unwrap();
        assert!(matches!(SessionLog::load(&path), Err(LogError::Corrupt { line: 1, .. })));
        fs::write(&path, "{\"v\":2,\"type\":\"session\",\"session_id\":\"x\",\"mode\":\"llm\",\"created_at\":0}\n")
            .unwrap();
        assert!(matches!(SessionLog::load(&path), Err(LogError::Corrupt { .. })));
    }
}
