//! The two command tiers.
//!
//! [`StudyCommand`] is the small high-level language typed by players in
//! command mode (`build house 10 64 10 5 5 4 planks`). [`NativeCommand`] is the
//! slash-command layer (`/fill ~5 ~ ~5 ~15 ~10 ~15 stone`) that the language
//! model emits and that the world executes. Study commands reach the world
//! through [`expand`].

mod exec;
mod expand;
pub(crate) mod lexer;
mod native;
mod study;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{FillMode, Position, Tags, Weather};

pub use exec::{execute, CellChange, ExecStatus, ExecutionResult};
pub use expand::expand;
pub use native::{parse_native, INERT_VERBS};
pub use study::parse_study;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("native commands start with `/`")]
    MissingSlash,
    #[error("unknown command `{verb}` at column {column}")]
    UnknownVerb { verb: String, column: usize },
    #[error("`{command}` expects {expected} argument(s), got {found}")]
    Arity { command: String, expected: String, found: usize },
    #[error("expected an integer at column {column}, found `{token}`")]
    NotInteger { token: String, column: usize },
    #[error("`{token}` at column {column} must be a positive dimension")]
    NonPositive { token: String, column: usize },
    #[error("invalid {what} `{token}` at column {column}")]
    InvalidValue { what: &'static str, token: String, column: usize },
    #[error("malformed coordinate `{token}` at column {column}")]
    MalformedCoordinate { token: String, column: usize },
    #[error("malformed tag block at column {column}: {reason}")]
    MalformedTags { column: usize, reason: String },
    #[error("unterminated {what} starting at column {column}")]
    Unterminated { what: &'static str, column: usize },
    #[error("unexpected `{token}` at column {column}")]
    Unexpected { token: String, column: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordKind {
    Absolute,
    Relative,
}

/// One coordinate: absolute, or an offset (`~n`) from the agent anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub kind: CoordKind,
    pub value: i32,
}

impl Coord {
    pub const fn abs(value: i32) -> Self {
        Self { kind: CoordKind::Absolute, value }
    }

    pub const fn rel(value: i32) -> Self {
        Self { kind: CoordKind::Relative, value }
    }

    pub fn resolve(self, anchor: i32) -> i32 {
        match self.kind {
            CoordKind::Absolute => self.value,
            CoordKind::Relative => anchor.saturating_add(self.value),
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.value) {
            (CoordKind::Absolute, v) => write!(f, "{v}"),
            (CoordKind::Relative, 0) => f.write_str("~"),
            (CoordKind::Relative, v) => write!(f, "~{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coord3 {
    pub x: Coord,
    pub y: Coord,
    pub z: Coord,
}

impl Coord3 {
    pub const fn new(x: Coord, y: Coord, z: Coord) -> Self {
        Self { x, y, z }
    }

    pub const fn absolute(p: Position) -> Self {
        Self::new(Coord::abs(p.x), Coord::abs(p.y), Coord::abs(p.z))
    }

    pub const fn here() -> Self {
        Self::new(Coord::rel(0), Coord::rel(0), Coord::rel(0))
    }

    pub fn is_relative(&self) -> bool {
        [self.x, self.y, self.z].iter().any(|c| c.kind == CoordKind::Relative)
    }
}

impl fmt::Display for Coord3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.z)
    }
}

/// Resolves a coordinate triple against the agent anchor. The result is not
/// bounds-checked.
pub fn resolve(coords: Coord3, anchor: Position) -> Position {
    Position::new(coords.x.resolve(anchor.x), coords.y.resolve(anchor.y), coords.z.resolve(anchor.z))
}

/// `daytime` / `time set` argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeValue {
    Ticks(u32),
    Day,
    Noon,
    Night,
    Midnight,
}

impl TimeValue {
    pub fn ticks(self) -> u32 {
        match self {
            TimeValue::Ticks(t) => t,
            TimeValue::Day => 1_000,
            TimeValue::Noon => 6_000,
            TimeValue::Night => 13_000,
            TimeValue::Midnight => 18_000,
        }
    }

    fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "day" => TimeValue::Day,
            "noon" => TimeValue::Noon,
            "night" => TimeValue::Night,
            "midnight" => TimeValue::Midnight,
            _ => {
                let ticks: u32 = token.parse().ok()?;
                if i64::from(ticks) >= crate::world::TICKS_PER_DAY {
                    return None;
                }
                TimeValue::Ticks(ticks)
            }
        })
    }
}

impl fmt::Display for TimeValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeValue::Ticks(t) => write!(f, "{t}"),
            TimeValue::Day => f.write_str("day"),
            TimeValue::Noon => f.write_str("noon"),
            TimeValue::Night => f.write_str("night"),
            TimeValue::Midnight => f.write_str("midnight"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SaplingKind {
    Oak,
    Spruce,
    Birch,
    Jungle,
}

impl SaplingKind {
    pub const ALL: [SaplingKind; 4] = [SaplingKind::Oak, SaplingKind::Spruce, SaplingKind::Birch, SaplingKind::Jungle];

    pub fn as_str(self) -> &'static str {
        match self {
            SaplingKind::Oak => "oak",
            SaplingKind::Spruce => "spruce",
            SaplingKind::Birch => "birch",
            SaplingKind::Jungle => "jungle",
        }
    }

    /// Data value shared by `sapling`, `log` and `leaves`.
    pub fn data(self) -> u8 {
        self as u8
    }

    fn parse(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == token)
    }
}

/// A command of the high-level study language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum StudyCommand {
    Place { pos: Position, block: String, color: u8 },
    Summon { pos: Position, entity: String },
    Daytime { time: TimeValue },
    Tree { pos: Position, sapling: SaplingKind },
    BuildLadder { pos: Position, height: u32 },
    PlaceTorch { pos: Position },
    Weather { weather: Weather },
    Fill { from: Position, to: Position, block: String },
    BuildPond { pos: Position, length: u32, width: u32, depth: u32 },
    BuildCastle { pos: Position, length: u32, width: u32, height: u32, block: String },
    BuildHouse { pos: Position, length: u32, width: u32, height: u32, block: String },
    BuildGarden { pos: Position, length: u32, width: u32 },
    BuildPyramid { pos: Position, base: u32, height: u32, block: String },
}

impl StudyCommand {
    /// Verb as written, including the `build`/`place` sub-keyword.
    pub fn verb(&self) -> &'static str {
        match self {
            StudyCommand::Place { .. } => "place",
            StudyCommand::Summon { .. } => "summon",
            StudyCommand::Daytime { .. } => "daytime",
            StudyCommand::Tree { .. } => "tree",
            StudyCommand::BuildLadder { .. } => "build ladder",
            StudyCommand::PlaceTorch { .. } => "place torch",
            StudyCommand::Weather { .. } => "weather",
            StudyCommand::Fill { .. } => "fill",
            StudyCommand::BuildPond { .. } => "build pond",
            StudyCommand::BuildCastle { .. } => "build castle",
            StudyCommand::BuildHouse { .. } => "build house",
            StudyCommand::BuildGarden { .. } => "build garden",
            StudyCommand::BuildPyramid { .. } => "build pyramid",
        }
    }
}

fn fmt_pos(p: &Position) -> String {
    format!("{} {} {}", p.x, p.y, p.z)
}

impl fmt::Display for StudyCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = self.verb();
        match self {
            StudyCommand::Place { pos, block, color } => write!(f, "{verb} {} {block} {color}", fmt_pos(pos)),
            StudyCommand::Summon { pos, entity } => write!(f, "{verb} {} {entity}", fmt_pos(pos)),
            StudyCommand::Daytime { time } => write!(f, "{verb} {time}"),
            StudyCommand::Tree { pos, sapling } => write!(f, "{verb} {} {}", fmt_pos(pos), sapling.as_str()),
            StudyCommand::BuildLadder { pos, height } => write!(f, "{verb} {} {height}", fmt_pos(pos)),
            StudyCommand::PlaceTorch { pos } => write!(f, "{verb} {}", fmt_pos(pos)),
            StudyCommand::Weather { weather } => write!(f, "{verb} {weather}"),
            StudyCommand::Fill { from, to, block } => {
                write!(f, "{verb} {} {} {block}", fmt_pos(from), fmt_pos(to))
            }
            StudyCommand::BuildPond { pos, length, width, depth } => {
                write!(f, "{verb} {} {length} {width} {depth}", fmt_pos(pos))
            }
            StudyCommand::BuildCastle { pos, length, width, height, block }
            | StudyCommand::BuildHouse { pos, length, width, height, block } => {
                write!(f, "{verb} {} {length} {width} {height} {block}", fmt_pos(pos))
            }
            StudyCommand::BuildGarden { pos, length, width } => {
                write!(f, "{verb} {} {length} {width}", fmt_pos(pos))
            }
            StudyCommand::BuildPyramid { pos, base, height, block } => {
                write!(f, "{verb} {} {base} {height} {block}", fmt_pos(pos))
            }
        }
    }
}

/// Target selector. Only the nearest player and name-tag lookups are supported.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// `@p`, the agent.
    NearestPlayer,
    /// `@e[name="..."]`
    Named(String),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::NearestPlayer => f.write_str("@p"),
            Selector::Named(name) => {
                write!(f, "@e[name={}]", crate::world::TagValue::Str(name.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TpDestination {
    Coords(Coord3),
    Target(Selector),
}

/// A parsed slash command.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum NativeCommand {
    Fill {
        from: Coord3,
        to: Coord3,
        block: String,
        data: Option<u8>,
        mode: Option<FillMode>,
    },
    Setblock {
        pos: Coord3,
        block: String,
        data: Option<u8>,
        mode: Option<FillMode>,
    },
    Summon {
        kind: String,
        pos: Coord3,
        tags: Option<Tags>,
    },
    Weather {
        weather: Weather,
        duration: Option<u32>,
    },
    TimeSet {
        time: TimeValue,
    },
    TimeAdd {
        ticks: u32,
    },
    Say {
        text: String,
    },
    Give {
        target: Selector,
        item: String,
        count: Option<u32>,
    },
    Tp {
        target: Selector,
        destination: TpDestination,
    },
    /// Recognized verb with no effect on the world (`/execute`, `/particle`).
    Noop {
        verb: String,
        raw: String,
    },
}

impl NativeCommand {
    pub fn verb(&self) -> &str {
        match self {
            NativeCommand::Fill { .. } => "fill",
            NativeCommand::Setblock { .. } => "setblock",
            NativeCommand::Summon { .. } => "summon",
            NativeCommand::Weather { .. } => "weather",
            NativeCommand::TimeSet { .. } | NativeCommand::TimeAdd { .. } => "time",
            NativeCommand::Say { .. } => "say",
            NativeCommand::Give { .. } => "give",
            NativeCommand::Tp { .. } => "tp",
            NativeCommand::Noop { verb, .. } => verb,
        }
    }

    /// Block or item name argument, if the command has one.
    pub fn material(&self) -> Option<&str> {
        match self {
            NativeCommand::Fill { block, .. } | NativeCommand::Setblock { block, .. } => Some(block),
            NativeCommand::Give { item, .. } => Some(item),
            _ => None,
        }
    }
}

impl fmt::Display for NativeCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn tail(f: &mut fmt::Formatter<'_>, data: &Option<u8>, mode: &Option<FillMode>) -> fmt::Result {
            if let Some(d) = data {
                write!(f, " {d}")?;
            }
            if let Some(m) = mode {
                write!(f, " {}", m.as_str())?;
            }
            Ok(())
        }
        match self {
            NativeCommand::Fill { from, to, block, data, mode } => {
                write!(f, "/fill {from} {to} {block}")?;
                tail(f, data, mode)
            }
            NativeCommand::Setblock { pos, block, data, mode } => {
                write!(f, "/setblock {pos} {block}")?;
                tail(f, data, mode)
            }
            NativeCommand::Summon { kind, pos, tags } => {
                write!(f, "/summon {kind} {pos}")?;
                if let Some(tags) = tags {
                    f.write_str(" {")?;
                    for (i, (key, value)) in tags.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{key}: {value}")?;
                    }
                    f.write_str("}")?;
                }
                Ok(())
            }
            NativeCommand::Weather { weather, duration } => {
                write!(f, "/weather {weather}")?;
                if let Some(d) = duration {
                    write!(f, " {d}")?;
                }
                Ok(())
            }
            NativeCommand::TimeSet { time } => write!(f, "/time set {time}"),
            NativeCommand::TimeAdd { ticks } => write!(f, "/time add {ticks}"),
            NativeCommand::Say { text } => write!(f, "/say {text}"),
            NativeCommand::Give { target, item, count } => {
                write!(f, "/give {target} {item}")?;
                if let Some(c) = count {
                    write!(f, " {c}")?;
                }
                Ok(())
            }
            NativeCommand::Tp { target, destination } => match destination {
                TpDestination::Coords(c) => write!(f, "/tp {target} {c}"),
                TpDestination::Target(s) => write!(f, "/tp {target} {s}"),
            },
            NativeCommand::Noop { raw, .. } => f.write_str(raw),
        }
    }
}
