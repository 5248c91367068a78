//! Log metrics and preference scores.
//!
//! A command's identity is its verb plus the number of arguments it was
//! written with, so `weather rain` and `weather clear` count once while
//! `/setblock 1 64 1 wool` and `/setblock 1 64 1 wool 14` count twice.
//! In command-mode sessions the player's own commands are counted; in llm
//! sessions the slash commands that ran.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::lexer::{comment_start, lex, split_coordinates, TokenKind};
use crate::commands::ExecStatus;
use crate::memory::{CommandEvent, CommandTier, LogError, LogStore, Mode, Role, SessionLog};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no sessions to analyse")]
    NoSessions,
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("condition `{condition}` has {sum} rankings but n = {n}")]
    CountMismatch { condition: String, sum: u64, n: u32 },
    #[error("ranking matrix needs at least one respondent")]
    NoRespondents,
    #[error("malformed ranking data: {0}")]
    Malformed(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Log(#[from] LogError),
}

/// `verb/arity`, e.g. `fill/7`, `build house/7`, `summon/5`.
pub fn command_identity(raw_line: &str) -> String {
    let line = raw_line.trim();
    if let Some(body) = line.strip_prefix('/') {
        let verb = body.split_whitespace().next().unwrap_or_default().to_ascii_lowercase();
        if verb == "say" {
            return "say/1".into();
        }
        let code = &line[..comment_start(line).unwrap_or(line.len())];
        let arity = match lex(code) {
            Ok(tokens) => tokens[1..]
                .iter()
                .map(|t| if t.kind == TokenKind::Word { split_coordinates(t.text).len() } else { 1 })
                .sum(),
            Err(_) => code.split_whitespace().count().saturating_sub(1),
        };
        return format!("{verb}/{arity}");
    }
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    let Some(first) = words.first() else {
        return "/0".into();
    };
    let compound =
        matches!((first.as_str(), words.get(1).map(String::as_str)), ("build", Some(_)) | ("place", Some("torch")));
    let verb_len = if compound { 2 } else { 1 };
    format!("{}/{}", words[..verb_len].join(" "), words.len() - verb_len)
}

/// Trimmed, case-folded input text.
pub fn normalize_input(text: &str) -> String {
    text.trim().to_lowercase()
}

fn issued(log: &SessionLog) -> impl Iterator<Item = &CommandEvent> {
    let tier = match log.mode {
        Mode::Command => CommandTier::Study,
        Mode::Llm => CommandTier::Native,
    };
    log.command_events.iter().filter(move |c| c.tier == tier && c.status == ExecStatus::Ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub session_count: usize,
    pub unique_commands_total: usize,
    pub commands_per_session: f64,
    pub unique_commands_per_session: f64,
    /// Distinct inputs over all inputs, pooled across sessions. `None`
    /// without inputs.
    pub input_diversity: Option<f64>,
    /// Mean time from first to last command. `None` if no session has a
    /// command.
    pub seconds_per_session: Option<f64>,
    /// `seconds_per_session` divided by the mean inputs per session, both
    /// over the sessions that have commands.
    pub seconds_per_input: Option<f64>,
    /// Sessions left out of the time metrics for having no commands.
    pub sessions_excluded_from_time: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub overall: Metrics,
    pub per_mode: BTreeMap<Mode, Metrics>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn metrics(logs: &[&SessionLog]) -> Metrics {
    let n = logs.len() as f64;
    let mut all_ids = BTreeSet::new();
    let mut commands = 0usize;
    let mut unique_sum = 0usize;
    let mut inputs_total = 0usize;
    let mut distinct_inputs = BTreeSet::new();
    let mut timed = Vec::new();

    for log in logs {
        let events: Vec<&CommandEvent> = issued(log).collect();
        let ids: BTreeSet<String> = events.iter().map(|c| command_identity(&c.raw_line)).collect();
        commands += events.len();
        unique_sum += ids.len();
        all_ids.extend(ids);

        let inputs: Vec<String> =
            log.turns.iter().filter(|t| t.role == Role::User).map(|t| normalize_input(&t.text)).collect();
        inputs_total += inputs.len();
        let input_count = inputs.len();
        distinct_inputs.extend(inputs);

        if let (Some(first), Some(last)) = (events.first(), events.last()) {
            let seconds = last.timestamp.saturating_sub(first.timestamp) as f64 / 1000.0;
            timed.push((seconds, input_count as f64));
        }
    }

    let seconds_per_session = mean(timed.iter().map(|t| t.0));
    let inputs_per_timed = mean(timed.iter().map(|t| t.1));
    Metrics {
        session_count: logs.len(),
        unique_commands_total: all_ids.len(),
        commands_per_session: commands as f64 / n,
        unique_commands_per_session: unique_sum as f64 / n,
        input_diversity: (inputs_total > 0).then(|| distinct_inputs.len() as f64 / inputs_total as f64),
        seconds_per_session,
        seconds_per_input: match (seconds_per_session, inputs_per_timed) {
            (Some(s), Some(i)) if i > 0.0 => Some(s / i),
            _ => None,
        },
        sessions_excluded_from_time: logs.len() - timed.len(),
    }
}

pub fn compute_metrics(logs: &[SessionLog]) -> Result<MetricsReport, AnalyticsError> {
    if logs.is_empty() {
        return Err(AnalyticsError::NoSessions);
    }
    let mut all: Vec<&SessionLog> = logs.iter().collect();
    all.sort_by_key(|l| (&l.session_id, l.created_at, l.ended_at, l.turns.len(), l.command_events.len()));
    let mut per_mode = BTreeMap::new();
    for mode in [Mode::Command, Mode::Llm] {
        let subset: Vec<&SessionLog> = all.iter().copied().filter(|l| l.mode == mode).collect();
        if !subset.is_empty() {
            per_mode.insert(mode, metrics(&subset));
        }
    }
    Ok(MetricsReport { overall: metrics(&all), per_mode })
}

/// Reads every log in `dir`, optionally keeping one mode.
pub fn load_logs(dir: impl AsRef<Path>, mode: Option<Mode>) -> Result<Vec<SessionLog>, AnalyticsError> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(AnalyticsError::Io {
            path: dir.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let logs = LogStore::new(dir)?.load_all()?;
    Ok(logs.into_iter().filter(|l| mode.is_none_or(|m| l.mode == m)).collect())
}

/// How many respondents put each condition at rank 1, 2, 3 and 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingMatrix {
    pub n: u32,
    pub conditions: BTreeMap<String, [u32; 4]>,
}

impl RankingMatrix {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        if self.n == 0 {
            return Err(AnalyticsError::NoRespondents);
        }
        for (condition, counts) in &self.conditions {
            let sum: u64 = counts.iter().map(|&c| u64::from(c)).sum();
            if sum != u64::from(self.n) {
                return Err(AnalyticsError::CountMismatch { condition: condition.clone(), sum, n: self.n });
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, AnalyticsError> {
        let matrix: Self = serde_json::from_str(text).map_err(|e| AnalyticsError::Malformed(e.to_string()))?;
        matrix.validate()?;
        Ok(matrix)
    }

    /// Columns `condition,rank1,rank2,rank3,rank4` and an optional `n`.
    /// Without `n`, the first row's total is used.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, AnalyticsError> {
        let malformed = |e: csv::Error| AnalyticsError::Malformed(e.to_string());
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = rdr.headers().map_err(malformed)?.iter().map(str::to_ascii_lowercase).collect();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let condition_col =
            col("condition").ok_or_else(|| AnalyticsError::Malformed("missing `condition` column".into()))?;
        let rank_cols = ["rank1", "rank2", "rank3", "rank4"]
            .map(|r| col(r).ok_or_else(|| AnalyticsError::Malformed(format!("missing `{r}` column"))));
        let rank_cols: Vec<usize> = rank_cols.into_iter().collect::<Result<_, _>>()?;
        let n_col = col("n");

        let mut n = None;
        let mut conditions = BTreeMap::new();
        for record in rdr.records() {
            let record = record.map_err(malformed)?;
            let number = |i: usize| -> Result<u32, AnalyticsError> {
                let field = record.get(i).unwrap_or_default();
                field.parse().map_err(|_| AnalyticsError::Malformed(format!("`{field}` is not a count")))
            };
            let mut counts = [0u32; 4];
            for (slot, &i) in counts.iter_mut().zip(&rank_cols) {
                *slot = number(i)?;
            }
            let row_n = match n_col {
                Some(i) => number(i)?,
                None => counts.iter().sum(),
            };
            match n {
                None => n = Some(row_n),
                Some(existing) if n_col.is_some() && existing != row_n => {
                    return Err(AnalyticsError::Malformed(format!("rows disagree on n ({existing} vs {row_n})")));
                }
                Some(_) => {}
            }
            conditions.insert(record.get(condition_col).unwrap_or_default().to_string(), counts);
        }
        let matrix = Self { n: n.unwrap_or(0), conditions };
        matrix.validate()?;
        Ok(matrix)
    }

    /// Picks the format from the extension (`.csv`, anything else is JSON).
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, AnalyticsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| AnalyticsError::Io { path: path.display().to_string(), source })?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(text.as_bytes())
        } else {
            Self::from_json(&text)
        }
    }
}

/// `(1·c1 + 2·c2 + 3·c3 + 4·c4) / n` for one condition.
///
/// ```
/// use std::collections::BTreeMap;
/// use voxchat::analytics::{weighted_rank, RankingMatrix};
///
/// let matrix = RankingMatrix { n: 2, conditions: BTreeMap::from([("llm".to_string(), [0, 1, 0, 1])]) };
/// assert_eq!(weighted_rank(&matrix, "llm").unwrap(), 3.0);
/// ```
pub fn weighted_rank(matrix: &RankingMatrix, condition: &str) -> Result<f64, AnalyticsError> {
    matrix.validate()?;
    let counts =
        matrix.conditions.get(condition).ok_or_else(|| AnalyticsError::UnknownCondition(condition.to_string()))?;
    let weighted: u64 = counts.iter().zip(1u64..).map(|(&c, rank)| rank * u64::from(c)).sum();
    Ok(weighted as f64 / f64::from(matrix.n))
}

pub fn weighted_ranks(matrix: &RankingMatrix) -> Result<BTreeMap<String, f64>, AnalyticsError> {
    matrix.conditions.keys().map(|c| Ok((c.clone(), weighted_rank(matrix, c)?))).collect()
}
