use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::commands::{parse_native, resolve, Coord3, NativeCommand, TpDestination};
use crate::world::{box_volume, Position, Registry, WorldError, WorldState, MAX_FILL};

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>\s]*>").expect("placeholder pattern"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Placeholder,
    OutOfBounds,
    UnknownBlock,
    UnknownEntity,
    Syntax,
    Volume,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::Placeholder => "placeholder",
            ViolationKind::OutOfBounds => "out_of_bounds",
            ViolationKind::UnknownBlock => "unknown_block",
            ViolationKind::UnknownEntity => "unknown_entity",
            ViolationKind::Syntax => "syntax",
            ViolationKind::Volume => "volume",
        }
    }

    /// Kind of a world error raised while executing a validated line.
    pub fn from_world_error(err: &WorldError) -> Self {
        match err {
            WorldError::OutOfBounds { .. } => ViolationKind::OutOfBounds,
            WorldError::UnknownBlock(_) | WorldError::InvalidData { .. } | WorldError::NotPlaceable(_) => {
                ViolationKind::UnknownBlock
            }
            WorldError::UnknownEntity(_) | WorldError::NoSuchEntity(_) => ViolationKind::UnknownEntity,
            WorldError::VolumeLimit { .. } => ViolationKind::Volume,
            WorldError::Config(_) => ViolationKind::Syntax,
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub line_index: usize,
    pub line: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn kinds(&self) -> Vec<ViolationKind> {
        self.violations.iter().map(|v| v.kind).collect()
    }
}

/// What a line is checked against: the anchor for `~` coordinates, the
/// world bound and the registries.
#[derive(Debug, Clone, Copy)]
pub struct ValidationContext<'a> {
    pub anchor: Position,
    pub bound: i32,
    pub registry: &'a Registry,
}

impl<'a> ValidationContext<'a> {
    pub fn from_world(world: &'a WorldState) -> Self {
        Self { anchor: world.agent(), bound: world.bound(), registry: world.registry() }
    }
}

fn has_placeholder(line: &str) -> bool {
    PLACEHOLDER.is_match(line)
}

/// Checks each line for placeholders, syntax, bounds, registry names and
/// fill volume. At most one violation is reported per line.
pub fn validate<S: AsRef<str>>(lines: &[S], ctx: &ValidationContext<'_>) -> ValidationReport {
    let violations = lines
        .iter()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.as_ref();
            check_line(line, ctx).err().map(|(kind, detail)| Violation {
                kind,
                line_index: i,
                line: line.to_string(),
                detail,
            })
        })
        .collect();
    ValidationReport { violations }
}

fn check_line(line: &str, ctx: &ValidationContext<'_>) -> Result<(), (ViolationKind, String)> {
    if has_placeholder(line) {
        return Err((ViolationKind::Placeholder, "contains a placeholder token instead of a number".into()));
    }
    let cmd = parse_native(line).map_err(|e| (ViolationKind::Syntax, e.to_string()))?;

    let in_bounds = |c: Coord3| {
        let pos = resolve(c, ctx.anchor);
        if pos.in_bounds(ctx.bound) {
            Ok(pos)
        } else {
            Err((ViolationKind::OutOfBounds, format!("{pos} is outside 0..={}", ctx.bound)))
        }
    };
    let block = |name: &str, data: Option<u8>| {
        ctx.registry
            .blocks
            .block(name, data.unwrap_or(0))
            .map(drop)
            .map_err(|e| (ViolationKind::UnknownBlock, e.to_string()))
    };

    match &cmd {
        NativeCommand::Fill { from, to, block: name, data, .. } => {
            let (a, b) = (in_bounds(*from)?, in_bounds(*to)?);
            block(name, *data)?;
            let volume = box_volume(a, b);
            if volume > MAX_FILL {
                return Err((ViolationKind::Volume, format!("fill covers {volume} blocks, limit is {MAX_FILL}")));
            }
        }
        NativeCommand::Setblock { pos, block: name, data, .. } => {
            in_bounds(*pos)?;
            block(name, *data)?;
        }
        NativeCommand::Summon { kind, pos, .. } => {
            in_bounds(*pos)?;
            if !ctx.registry.entities.contains(kind) {
                return Err((ViolationKind::UnknownEntity, format!("unknown entity `{kind}`")));
            }
        }
        NativeCommand::Give { item, .. } => {
            ctx.registry.blocks.item(item).map_err(|e| (ViolationKind::UnknownBlock, e.to_string()))?;
        }
        NativeCommand::Tp { destination: TpDestination::Coords(c), .. } => {
            in_bounds(*c)?;
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::new_world;

    fn check(lines: &[&str]) -> ValidationReport {
        let world = new_world(100, 63, Position::new(50, 64, 50)).unwrap();
        validate(lines, &ValidationContext::from_world(&world))
    }

    #[test]
    fn spec_examples() {
        assert_eq!(check(&["/setblock <x> <y> <z> stone"]).kinds(), [ViolationKind::Placeholder]);
        assert!(check(&["/fill 1 64 0 1 64 3 wool 14"]).is_empty());
        assert_eq!(check(&["/setblock 0 150 0 stone"]).kinds(), [ViolationKind::OutOfBounds]);
    }

    #[test]
    fn each_kind() {
        let report = check(&[
            "/setblock ~ ~ ~ stone",
            "/fill 0 64 0 1 64 1 unobtainium",
            "/summon puppy_robot ~ ~1 ~",
            "/frobnicate 1 2 3",
            "/fill 0 0 0 100 100 100 stone",
            "/setblock ~60 ~ ~ stone",
            "/setblock 1 64 1 <block>",
            "/give @p minecraft:diamond_chestplate",
            "/setblock 1 64 1 glass 3",
        ]);
        let got: Vec<_> = report.violations.iter().map(|v| (v.line_index, v.kind)).collect();
        assert_eq!(
            got,
            [
                (1, ViolationKind::UnknownBlock),
                (2, ViolationKind::UnknownEntity),
                (3, ViolationKind::Syntax),
                (4, ViolationKind::Volume),
                (5, ViolationKind::OutOfBounds),
                (6, ViolationKind::Placeholder),
                (8, ViolationKind::UnknownBlock),
            ]
        );
    }

    #[test]
    fn angle_brackets_in_say_text_count() {
        assert_eq!(check(&["/say look at <here>"]).kinds(), [ViolationKind::Placeholder]);
        assert!(check(&["/say 3 < 4 and 5 > 2"]).is_empty());
    }
}
