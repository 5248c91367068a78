use serde::{Deserialize, Serialize};

use super::{resolve, NativeCommand, Selector, TpDestination};
use crate::world::{BlockId, FillMode, Position, WorldError, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecStatus {
    Ok,
    Rejected,
}

/// A cell whose value changed, with its new block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellChange {
    pub x: i32,
    pub y: i32,
    pub z: i32,
    pub block: String,
    pub data: u8,
}

impl CellChange {
    fn at(world: &WorldState, pos: Position) -> Self {
        let block = world.block_at(pos);
        Self { x: pos.x, y: pos.y, z: pos.z, block: block.name, data: block.data }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub status: ExecStatus,
    pub message: String,
    pub blocks_changed: u64,
    pub entity_ids: Vec<u64>,
    pub changes: Vec<CellChange>,
    #[serde(skip)]
    pub error: Option<WorldError>,
}

impl ExecutionResult {
    fn ok(message: impl Into<String>) -> Self {
        Self {
            status: ExecStatus::Ok,
            message: message.into(),
            blocks_changed: 0,
            entity_ids: Vec::new(),
            changes: Vec::new(),
            error: None,
        }
    }

    fn rejected(err: WorldError) -> Self {
        Self {
            status: ExecStatus::Rejected,
            message: err.to_string(),
            blocks_changed: 0,
            entity_ids: Vec::new(),
            changes: Vec::new(),
            error: Some(err),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ExecStatus::Ok
    }
}

/// Runs a native command against the world. Relative coordinates resolve
/// against the agent. A rejected command leaves the world untouched.
pub fn execute(cmd: &NativeCommand, world: &mut WorldState) -> ExecutionResult {
    match apply(cmd, world) {
        Ok(result) => result,
        Err(err) => ExecutionResult::rejected(err),
    }
}

fn apply(cmd: &NativeCommand, world: &mut WorldState) -> Result<ExecutionResult, WorldError> {
    let anchor = world.agent();
    Ok(match cmd {
        NativeCommand::Fill { from, to, block, data, mode } => {
            let block = BlockId::new(block.clone(), data.unwrap_or(0));
            let outcome =
                world.fill_with(resolve(*from, anchor), resolve(*to, anchor), &block, mode.unwrap_or_default())?;
            let mut r = ExecutionResult::ok(format!("filled {} blocks", outcome.written));
            r.changes = outcome.changed.iter().map(|&p| CellChange::at(world, p)).collect();
            r.blocks_changed = r.changes.len() as u64;
            r
        }
        NativeCommand::Setblock { pos, block, data, mode } => {
            let pos = resolve(*pos, anchor);
            let block = BlockId::new(block.clone(), data.unwrap_or(0));
            world.check_bounds(pos)?;
            let changed = if *mode == Some(FillMode::Keep) && !world.block_at(pos).is_air() {
                // validate anyway so bad blocks are still rejected
                world.registry().blocks.block(&block.name, block.data)?;
                false
            } else {
                world.set_block(pos, &block)?
            };
            let mut r = ExecutionResult::ok(if changed { "block placed" } else { "block unchanged" });
            if changed {
                r.changes.push(CellChange::at(world, pos));
                r.blocks_changed = 1;
            }
            r
        }
        NativeCommand::Summon { kind, pos, tags } => {
            let pos = resolve(*pos, anchor);
            let id = world.summon(pos, kind, tags.clone().unwrap_or_default())?;
            let mut r = ExecutionResult::ok(format!("summoned {kind} #{id} at {pos}"));
            r.entity_ids.push(id);
            r
        }
        NativeCommand::Weather { weather, .. } => {
            world.set_weather(*weather);
            ExecutionResult::ok(format!("weather set to {weather}"))
        }
        NativeCommand::TimeSet { time } => {
            world.set_time(i64::from(time.ticks()));
            ExecutionResult::ok(format!("time set to {}", world.time()))
        }
        NativeCommand::TimeAdd { ticks } => {
            world.set_time(i64::from(world.time()) + i64::from(*ticks));
            ExecutionResult::ok(format!("time set to {}", world.time()))
        }
        NativeCommand::Say { text } => {
            world.push_chat(format!("[agent] {text}"));
            ExecutionResult::ok("said")
        }
        NativeCommand::Give { target, item, count } => {
            let count = count.unwrap_or(1).max(1);
            let mut r = ExecutionResult::ok(format!("gave {count} {item} to {target}"));
            match target {
                Selector::NearestPlayer => {
                    for _ in 0..count {
                        world.give_agent(item)?;
                    }
                }
                Selector::Named(name) => {
                    // validate before the first write so failures stay atomic
                    world.registry().blocks.item(item)?;
                    for _ in 0..count {
                        r.entity_ids = vec![world.give_entity(name, item)?];
                    }
                }
            }
            r
        }
        NativeCommand::Tp { target, destination } => {
            let dest = match destination {
                TpDestination::Coords(c) => resolve(*c, anchor),
                TpDestination::Target(Selector::NearestPlayer) => anchor,
                TpDestination::Target(Selector::Named(name)) => {
                    world.entity_named(name).ok_or_else(|| WorldError::NoSuchEntity(name.clone()))?.position
                }
            };
            let mut r = ExecutionResult::ok(format!("teleported {target} to {dest}"));
            match target {
                Selector::NearestPlayer => world.teleport_agent(dest)?,
                Selector::Named(name) => r.entity_ids.push(world.teleport_entity(name, dest)?),
            }
            r
        }
        NativeCommand::Noop { verb, .. } => ExecutionResult::ok(format!("/{verb} has no effect here")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::parse_native;
    use crate::world::{new_world, TagValue};

    fn world() -> WorldState {
        new_world(100, 63, Position::new(50, 64, 50)).unwrap()
    }

    fn run(w: &mut WorldState, line: &str) -> ExecutionResult {
        execute(&parse_native(line).unwrap(), w)
    }

    #[test]
    fn dutch_flag_stripe_changes_four_cells() {
        let mut w = world();
        let r = run(&mut w, "/fill 1 64 0 1 64 3 wool 14");
        assert!(r.is_ok());
        assert_eq!(r.blocks_changed, 4);
        assert_eq!(w.block_at(Position::new(1, 64, 2)), BlockId::new("wool", 14));
    }

    #[test]
    fn noop_changes_nothing() {
        let mut w = world();
        let before = w.clone();
        let r = run(&mut w, "/particle heart ~ ~1 ~ 0.5 0.5 0.5 0.1 5");
        assert!(r.is_ok());
        assert_eq!(r.blocks_changed, 0);
        assert_eq!(w, before);
    }

    #[test]
    fn rejected_leaves_world_unchanged() {
        let mut w = world();
        let before = w.clone();
        for line in [
            "/setblock 0 101 0 stone",
            "/setblock ~ ~ ~ unobtainium",
            "/fill 0 0 0 100 100 100 stone",
            "/summon puppy_robot ~ ~ ~",
            "/give @e[name=\"Nobody\"] diamond",
            "/tp @p ~100 ~ ~",
            "/setblock 1 64 1 glass 3",
        ] {
            let r = run(&mut w, line);
            assert_eq!(r.status, ExecStatus::Rejected, "{line}");
            assert_eq!(w, before, "{line}");
        }
    }

    #[test]
    fn selectors_resolve_by_name() {
        let mut w = world();
        run(&mut w, r#"/summon wolf ~ ~1 ~ {CustomName: "Puppy Robot", Tame: 1}"#);
        let wolf = w.entity_named("Puppy Robot").unwrap();
        assert_eq!(wolf.position, Position::new(50, 65, 50));
        assert_eq!(wolf.tags["Tame"], TagValue::Int(1));

        assert!(run(&mut w, r#"/give @e[name="Puppy Robot"] minecraft:diamond_chestplate"#).is_ok());
        assert_eq!(w.entity_named("Puppy Robot").unwrap().items, ["diamond_chestplate"]);

        assert!(run(&mut w, r#"/tp @e[name="Puppy Robot"] @p"#).is_ok());
        assert_eq!(w.entity_named("Puppy Robot").unwrap().position, w.agent());

        assert!(run(&mut w, "/tp @p 10 70 10").is_ok());
        assert_eq!(w.agent(), Position::new(10, 70, 10));
    }

    #[test]
    fn say_goes_to_chat() {
        let mut w = world();
        run(&mut w, "/say all done");
        assert_eq!(w.chat(), ["[agent] all done"]);
    }

    #[test]
    fn setblock_keep() {
        let mut w = world();
        run(&mut w, "/setblock 5 64 5 stone");
        let r = run(&mut w, "/setblock 5 64 5 glass keep");
        assert!(r.is_ok());
        assert_eq!(w.block_at(Position::new(5, 64, 5)), BlockId::plain("stone"));
    }
}
