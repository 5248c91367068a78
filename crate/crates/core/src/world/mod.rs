//! Deterministic voxel world: sparse blocks over a virtual flat ground plane,
//! entities, time of day, weather and the agent anchor.
//!
//! Every mutation validates fully before writing, so a rejected call leaves
//! the state exactly as it was.

mod registry;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use registry::legacy_block_name;
pub use registry::{BlockInfo, BlockRegistry, EntityRegistry, Registry, RegistryExtension};

/// Inclusive upper bound on every axis.
pub const WORLD_BOUND: i32 = 100;
pub const DEFAULT_GROUND_Y: i32 = 63;
pub const DEFAULT_SPAWN: Position = Position::new(50, 64, 50);
/// Largest box a single fill may touch.
pub const MAX_FILL: u64 = 32_768;
pub const TICKS_PER_DAY: i64 = 24_000;
pub const INITIAL_TIME: u32 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("invalid world configuration: {0}")]
    Config(String),
    #[error("position {pos} is outside the world bounds 0..={bound}")]
    OutOfBounds { pos: Position, bound: i32 },
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("block `{name}` has no data value {data}")]
    InvalidData { name: String, data: u8 },
    #[error("`{0}` is an item and cannot be placed")]
    NotPlaceable(String),
    #[error("unknown entity kind `{0}`")]
    UnknownEntity(String),
    #[error("fill of {volume} blocks exceeds the limit of {limit}")]
    VolumeLimit { volume: u64, limit: u64 },
    #[error("no entity named `{0}`")]
    NoSuchEntity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub const fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        Self::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn in_bounds(self, bound: i32) -> bool {
        [self.x, self.y, self.z].iter().all(|c| (0..=bound).contains(c))
    }

    /// Chebyshev distance.
    pub fn distance(self, other: Position) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs()).max((self.z - other.z).abs())
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A block name plus its 0..=15 data value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BlockId {
    pub name: String,
    pub data: u8,
}

impl BlockId {
    pub fn new(name: impl Into<String>, data: u8) -> Self {
        Self { name: name.into(), data }
    }

    pub fn plain(name: impl Into<String>) -> Self {
        Self::new(name, 0)
    }

    pub fn air() -> Self {
        Self::plain("air")
    }

    pub fn is_air(&self) -> bool {
        self.name == "air"
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data == 0 {
            f.write_str(&self.name)
        } else {
            write!(f, "{} {}", self.name, self.data)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    Clear,
    Rain,
    Thunder,
}

impl Weather {
    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Clear => "clear",
            Weather::Rain => "rain",
            Weather::Thunder => "thunder",
        }
    }
}

impl fmt::Display for Weather {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weather {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "clear" => Ok(Weather::Clear),
            "rain" => Ok(Weather::Rain),
            "thunder" => Ok(Weather::Thunder),
            _ => Err(()),
        }
    }
}

/// Scalar entity tag value (`"text"`, `1`, `1b`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TagValue {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl fmt::Display for TagValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagValue::Bool(b) => write!(f, "{}b", u8::from(*b)),
            TagValue::Int(i) => write!(f, "{i}"),
            TagValue::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
        }
    }
}

pub type Tags = BTreeMap<String, TagValue>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Entity {
    pub id: u64,
    pub kind: String,
    pub position: Position,
    pub tags: Tags,
    /// Items handed over with `give`.
    #[serde(default)]
    pub items: Vec<String>,
}

impl Entity {
    pub fn name_tag(&self) -> Option<&str> {
        match self.tags.get("CustomName") {
            Some(TagValue::Str(name)) => Some(name),
            _ => None,
        }
    }
}

/// How a fill treats the cells of its box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillMode {
    #[default]
    Replace,
    Destroy,
    /// Only air cells are written.
    Keep,
    /// Shell of `block`, interior cleared to air.
    Hollow,
    /// Shell of `block`, interior untouched.
    Outline,
}

impl FillMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FillMode::Replace => "replace",
            FillMode::Destroy => "destroy",
            FillMode::Keep => "keep",
            FillMode::Hollow => "hollow",
            FillMode::Outline => "outline",
        }
    }
}

impl FromStr for FillMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "replace" => FillMode::Replace,
            "destroy" => FillMode::Destroy,
            "keep" => FillMode::Keep,
            "hollow" => FillMode::Hollow,
            "outline" => FillMode::Outline,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FillOutcome {
    /// Cells the fill wrote to (the box volume for `replace`).
    pub written: u64,
    /// Cells whose value actually changed, in box order.
    pub changed: Vec<Position>,
}

/// Parameters for [`WorldState::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub bound: i32,
    pub ground_y: i32,
    pub spawn: Position,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self { bound: WORLD_BOUND, ground_y: DEFAULT_GROUND_Y, spawn: DEFAULT_SPAWN }
    }
}

#[derive(Debug, Clone)]
pub struct WorldState {
    registry: Arc<Registry>,
    bound: i32,
    ground_y: i32,
    // Only cells that differ from the virtual ground/sky are stored.
    blocks: BTreeMap<Position, BlockId>,
    entities: Vec<Entity>,
    next_entity_id: u64,
    time: u32,
    weather: Weather,
    agent: Position,
    inventory: Vec<String>,
    chat: Vec<String>,
}

/// Convenience constructor with the standard registry.
pub fn new_world(bound: i32, ground_y: i32, agent_spawn: Position) -> Result<WorldState, WorldError> {
    WorldState::new(WorldConfig { bound, ground_y, spawn: agent_spawn }, Arc::new(Registry::standard()))
}

impl WorldState {
    pub fn new(config: WorldConfig, registry: Arc<Registry>) -> Result<Self, WorldError> {
        let WorldConfig { bound, ground_y, spawn } = config;
        if bound <= 0 {
            return Err(WorldError::Config(format!("bound must be positive, got {bound}")));
        }
        if !(0 < ground_y && ground_y < bound) {
            return Err(WorldError::Config(format!(
                "ground_y must lie strictly between 0 and {bound}, got {ground_y}"
            )));
        }
        if !spawn.in_bounds(bound) {
            return Err(WorldError::Config(format!("spawn {spawn} is outside 0..={bound}")));
        }
        Ok(Self {
            registry,
            bound,
            ground_y,
            blocks: BTreeMap::new(),
            entities: Vec::new(),
            next_entity_id: 1,
            time: INITIAL_TIME,
            weather: Weather::Clear,
            agent: spawn,
            inventory: Vec::new(),
            chat: Vec::new(),
        })
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn bound(&self) -> i32 {
        self.bound
    }

    pub fn ground_y(&self) -> i32 {
        self.ground_y
    }

    pub fn agent(&self) -> Position {
        self.agent
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn weather(&self) -> Weather {
        self.weather
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn inventory(&self) -> &[String] {
        &self.inventory
    }

    pub fn chat(&self) -> &[String] {
        &self.chat
    }

    /// Player-placed cells (everything that differs from the flat world).
    pub fn placed_blocks(&self) -> impl Iterator<Item = (&Position, &BlockId)> {
        self.blocks.iter()
    }

    fn ground_block(&self, pos: Position) -> BlockId {
        if pos.y == self.ground_y {
            BlockId::plain("grass")
        } else if pos.y < self.ground_y {
            BlockId::plain("dirt")
        } else {
            BlockId::air()
        }
    }

    pub fn block_at(&self, pos: Position) -> BlockId {
        self.blocks.get(&pos).cloned().unwrap_or_else(|| self.ground_block(pos))
    }

    pub fn check_bounds(&self, pos: Position) -> Result<(), WorldError> {
        if pos.in_bounds(self.bound) {
            Ok(())
        } else {
            Err(WorldError::OutOfBounds { pos, bound: self.bound })
        }
    }

    // Writes an already validated block; returns whether the cell changed.
    fn write(&mut self, pos: Position, block: &BlockId) -> bool {
        if self.block_at(pos) == *block {
            return false;
        }
        if self.ground_block(pos) == *block {
            self.blocks.remove(&pos);
        } else {
            self.blocks.insert(pos, block.clone());
        }
        true
    }

    pub fn set_block(&mut self, pos: Position, block: &BlockId) -> Result<bool, WorldError> {
        self.check_bounds(pos)?;
        let block = self.registry.blocks.block(&block.name, block.data)?;
        Ok(self.write(pos, &block))
    }

    /// Fills the box spanned by two corners; returns the number of cells written.
    pub fn fill(&mut self, c1: Position, c2: Position, block: &BlockId) -> Result<u64, WorldError> {
        self.fill_with(c1, c2, block, FillMode::Replace).map(|o| o.written)
    }

    pub fn fill_with(
        &mut self,
        c1: Position,
        c2: Position,
        block: &BlockId,
        mode: FillMode,
    ) -> Result<FillOutcome, WorldError> {
        self.check_bounds(c1)?;
        self.check_bounds(c2)?;
        let volume = box_volume(c1, c2);
        if volume > MAX_FILL {
            return Err(WorldError::VolumeLimit { volume, limit: MAX_FILL });
        }
        let block = self.registry.blocks.block(&block.name, block.data)?;
        let air = BlockId::air();
        let (lo, hi) = box_corners(c1, c2);
        let mut outcome = FillOutcome::default();
        for x in lo.x..=hi.x {
            for y in lo.y..=hi.y {
                for z in lo.z..=hi.z {
                    let pos = Position::new(x, y, z);
                    let shell = x == lo.x || x == hi.x || y == lo.y || y == hi.y || z == lo.z || z == hi.z;
                    let target = match mode {
                        FillMode::Replace | FillMode::Destroy => Some(&block),
                        FillMode::Keep => self.block_at(pos).is_air().then_some(&block),
                        FillMode::Hollow => Some(if shell { &block } else { &air }),
                        FillMode::Outline => shell.then_some(&block),
                    };
                    if let Some(target) = target {
                        outcome.written += 1;
                        if self.write(pos, target) {
                            outcome.changed.push(pos);
                        }
                    }
                }
            }
        }
        Ok(outcome)
    }

    pub fn summon(&mut self, pos: Position, kind: &str, tags: Tags) -> Result<u64, WorldError> {
        self.check_bounds(pos)?;
        let kind = self
            .registry
            .entities
            .canonical_kind(kind)
            .ok_or_else(|| WorldError::UnknownEntity(kind.to_string()))?
            .to_string();
        let id = self.next_entity_id;
        self.next_entity_id += 1;
        self.entities.push(Entity { id, kind, position: pos, tags, items: Vec::new() });
        Ok(id)
    }

    pub fn set_weather(&mut self, weather: Weather) {
        self.weather = weather;
    }

    /// Sets the time of day, wrapping into `[0, 24000)`.
    pub fn set_time(&mut self, ticks: i64) {
        self.time = ticks.rem_euclid(TICKS_PER_DAY) as u32;
    }

    pub fn entity_named(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.name_tag() == Some(name))
    }

    pub fn teleport_entity(&mut self, name: &str, pos: Position) -> Result<u64, WorldError> {
        self.check_bounds(pos)?;
        let entity = self
            .entities
            .iter_mut()
            .find(|e| e.name_tag() == Some(name))
            .ok_or_else(|| WorldError::NoSuchEntity(name.to_string()))?;
        entity.position = pos;
        Ok(entity.id)
    }

    pub fn teleport_agent(&mut self, pos: Position) -> Result<(), WorldError> {
        self.check_bounds(pos)?;
        self.agent = pos;
        Ok(())
    }

    pub fn give_entity(&mut self, name: &str, item: &str) -> Result<u64, WorldError> {
        let item = self.registry.blocks.item(item)?;
        let entity = self
            .entities
            .iter_mut()
            .find(|e| e.name_tag() == Some(name))
            .ok_or_else(|| WorldError::NoSuchEntity(name.to_string()))?;
        entity.items.push(item);
        Ok(entity.id)
    }

    pub fn give_agent(&mut self, item: &str) -> Result<(), WorldError> {
        let item = self.registry.blocks.item(item)?;
        self.inventory.push(item);
        Ok(())
    }

    pub fn push_chat(&mut self, line: impl Into<String>) {
        self.chat.push(line.into());
    }

    pub fn observe(&self, radius: i32, chat_k: usize) -> Observation {
        let radius = radius.max(0);
        let nearby_blocks = self
            .blocks
            .iter()
            .filter(|(pos, _)| pos.distance(self.agent) <= radius)
            .map(|(pos, block)| ObservedBlock {
                x: pos.x,
                y: pos.y,
                z: pos.z,
                block: block.name.clone(),
                data: block.data,
            })
            .collect();
        let entities = self
            .entities
            .iter()
            .map(|e| ObservedEntity {
                id: e.id,
                kind: e.kind.clone(),
                x: e.position.x,
                y: e.position.y,
                z: e.position.z,
                name: e.name_tag().map(str::to_string),
            })
            .collect();
        let skip = self.chat.len().saturating_sub(chat_k);
        Observation {
            agent: self.agent,
            time: self.time,
            weather: self.weather,
            nearby_blocks,
            entities,
            recent_chat: self.chat[skip..].to_vec(),
        }
    }

    /// Hash over the block, entity, time, weather and agent state. Chat is
    /// excluded.
    pub fn content_digest(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        self.hash_content(&mut hasher);
        hasher.finish()
    }

    /// Hash over the complete state, chat included.
    pub fn digest(&self) -> u64 {
        let mut hasher = DefaultHasher::new();
        self.hash_content(&mut hasher);
        self.chat.hash(&mut hasher);
        hasher.finish()
    }

    fn hash_content<H: Hasher>(&self, hasher: &mut H) {
        self.bound.hash(hasher);
        self.ground_y.hash(hasher);
        self.blocks.hash(hasher);
        self.entities.hash(hasher);
        self.next_entity_id.hash(hasher);
        self.time.hash(hasher);
        self.weather.hash(hasher);
        self.agent.hash(hasher);
        self.inventory.hash(hasher);
    }
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
            && self.ground_y == other.ground_y
            && self.blocks == other.blocks
            && self.entities == other.entities
            && self.next_entity_id == other.next_entity_id
            && self.time == other.time
            && self.weather == other.weather
            && self.agent == other.agent
            && self.inventory == other.inventory
            && self.chat == other.chat
    }
}

impl Eq for WorldState {}

pub fn box_corners(c1: Position, c2: Position) -> (Position, Position) {
    (
        Position::new(c1.x.min(c2.x), c1.y.min(c2.y), c1.z.min(c2.z)),
        Position::new(c1.x.max(c2.x), c1.y.max(c2.y), c1.z.max(c2.z)),
    )
}

pub fn box_volume(c1: Position, c2: Position) -> u64 {
    let span = |a: i32, b: i32| (i64::from(a) - i64::from(b)).unsigned_abs() + 1;
    span(c1.x, c2.x) * span(c1.y, c2.y) * span(c1.z, c2.z)
}

/// Serializable world snapshot embedded in prompts and served over the API.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub agent: Position,
    pub time: u32,
    pub weather: Weather,
    pub nearby_blocks: Vec<ObservedBlock>,
    pub entities: Vec<ObservedEntity>,
    pub recent_chat: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedBlock {
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub block: String,
    pub data: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservedEntity {
    pub id: u64,
    pub kind: String,
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub name: Option<String>,
}
