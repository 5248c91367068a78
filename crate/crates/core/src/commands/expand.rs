use super::{Coord3, NativeCommand, StudyCommand};
use crate::builders::{self, BuildError, PlacementPlan};
use crate::world::{BlockId, BlockRegistry};

fn setblock(pos: crate::world::Position, block: &BlockId) -> NativeCommand {
    NativeCommand::Setblock {
        pos: Coord3::absolute(pos),
        block: block.name.clone(),
        data: (block.data != 0).then_some(block.data),
        mode: None,
    }
}

fn plan_commands(plan: PlacementPlan) -> Vec<NativeCommand> {
    plan.placements.iter().map(|p| setblock(p.pos, &p.block)).collect()
}

/// Expands a study command into the native commands that realize it.
///
/// The registry decides whether `place`'s color applies: blocks without
/// variants drop it. Unknown blocks pass through for execution to reject.
pub fn expand(cmd: &StudyCommand, registry: &BlockRegistry) -> Result<Vec<NativeCommand>, BuildError> {
    Ok(match cmd {
        StudyCommand::Place { pos, block, color } => {
            let has_variants = registry.info(block).is_none_or(|info| info.has_variants);
            let data = if has_variants { *color } else { 0 };
            vec![NativeCommand::Setblock {
                pos: Coord3::absolute(*pos),
                block: block.clone(),
                data: (has_variants).then_some(data),
                mode: None,
            }]
        }
        StudyCommand::PlaceTorch { pos } => vec![setblock(*pos, &BlockId::plain("torch"))],
        StudyCommand::Summon { pos, entity } => {
            vec![NativeCommand::Summon { kind: entity.clone(), pos: Coord3::absolute(*pos), tags: None }]
        }
        StudyCommand::Daytime { time } => vec![NativeCommand::TimeSet { time: *time }],
        StudyCommand::Weather { weather } => vec![NativeCommand::Weather { weather: *weather, duration: None }],
        StudyCommand::Fill { from, to, block } => vec![NativeCommand::Fill {
            from: Coord3::absolute(*from),
            to: Coord3::absolute(*to),
            block: block.clone(),
            data: None,
            mode: None,
        }],
        StudyCommand::Tree { pos, sapling } => plan_commands(builders::tree(*pos, *sapling)?),
        StudyCommand::BuildLadder { pos, height } => plan_commands(builders::ladder(*pos, *height)?),
        StudyCommand::BuildPond { pos, length, width, depth } => {
            plan_commands(builders::pond(*pos, *length, *width, *depth)?)
        }
        StudyCommand::BuildGarden { pos, length, width } => plan_commands(builders::garden(*pos, *length, *width)?),
        StudyCommand::BuildHouse { pos, length, width, height, block } => {
            plan_commands(builders::house(*pos, *length, *width, *height, &BlockId::plain(block.as_str()))?)
        }
        StudyCommand::BuildCastle { pos, length, width, height, block } => {
            plan_commands(builders::castle(*pos, *length, *width, *height, &BlockId::plain(block.as_str()))?)
        }
        StudyCommand::BuildPyramid { pos, base, height, block } => {
            plan_commands(builders::pyramid(*pos, *base, *height, &BlockId::plain(block.as_str()))?)
        }
    })
}
