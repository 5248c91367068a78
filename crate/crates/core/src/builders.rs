//! Procedural generators for the complex study structures.
//!
//! Each generator returns a [`PlacementPlan`]: an ordered list of cells with
//! no duplicate positions, guaranteed to fit in the world bounds. Plans are
//! ordered foundation first, then walls, roof and finally details.
//!
//! Geometry, with the origin as the minimum corner:
//!
//! * **pyramid**: layer `k` is a `(base - 2k)²` square centered over the
//!   base at `origin.y + k`. Bases must be odd.
//! * **house**: floor slab, hollow perimeter walls, flat roof at
//!   `origin.y + height - 1`, a door gap (up to 2 high) centered on the `-z`
//!   wall and one glass window per wall at `origin.y + (height - 1) / 2`.
//! * **castle**: the house shell plus 2-high corner towers above the roof and
//!   crenellations on every even offset along the roof edge.
//! * **pond**: `depth` layers of water dug out below `origin.y`.
//! * **garden**: grass slab with flowers on every second cell.
//! * **ladder**: stone column with ladders on its `-z` face.
//! * **tree**: 4-log trunk under a 3×3×2 leaf canopy.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commands::SaplingKind;
use crate::world::{BlockId, Position, WORLD_BOUND};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("{structure} {what} must be at least {min}, got {value}")]
    Dimension { structure: &'static str, what: &'static str, value: u32, min: u32 },
    #[error("pyramid base must be odd, got {0}")]
    EvenBase(u32),
    #[error("{structure} footprint {min}..{max} leaves the world bounds 0..={bound}")]
    OutOfBounds { structure: &'static str, min: Position, max: Position, bound: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Position,
    pub max: Position,
}

impl BoundingBox {
    pub fn contains(&self, p: Position) -> bool {
        (self.min.x..=self.max.x).contains(&p.x)
            && (self.min.y..=self.max.y).contains(&p.y)
            && (self.min.z..=self.max.z).contains(&p.z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub pos: Position,
    pub block: BlockId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub label: String,
    pub footprint: BoundingBox,
    pub placements: Vec<Placement>,
}

impl PlacementPlan {
    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn positions(&self) -> BTreeSet<Position> {
        self.placements.iter().map(|p| p.pos).collect()
    }
}

struct PlanBuilder {
    label: &'static str,
    footprint: BoundingBox,
    placements: Vec<Placement>,
    seen: BTreeSet<Position>,
}

impl PlanBuilder {
    fn new(label: &'static str, min: Position, max: Position) -> Result<Self, BuildError> {
        if !min.in_bounds(WORLD_BOUND) || !max.in_bounds(WORLD_BOUND) {
            return Err(BuildError::OutOfBounds { structure: label, min, max, bound: WORLD_BOUND });
        }
        Ok(Self { label, footprint: BoundingBox { min, max }, placements: Vec::new(), seen: BTreeSet::new() })
    }

    fn put(&mut self, pos: Position, block: &BlockId) {
        debug_assert!(self.footprint.contains(pos), "{pos} outside {:?}", self.footprint);
        if self.seen.insert(pos) {
            self.placements.push(Placement { pos, block: block.clone() });
        }
    }

    fn finish(self) -> PlacementPlan {
        PlacementPlan { label: self.label.to_string(), footprint: self.footprint, placements: self.placements }
    }
}

fn at_least(structure: &'static str, what: &'static str, value: u32, min: u32) -> Result<i32, BuildError> {
    if value < min {
        return Err(BuildError::Dimension { structure, what, value, min });
    }
    Ok(value.min(10 * WORLD_BOUND as u32) as i32)
}

pub fn pyramid(origin: Position, base: u32, height: u32, block: &BlockId) -> Result<PlacementPlan, BuildError> {
    let base_len = at_least("pyramid", "base", base, 1)?;
    let height = at_least("pyramid", "height", height, 1)?;
    if base.is_multiple_of(2) {
        return Err(BuildError::EvenBase(base));
    }
    let layers = height.min((base_len + 1) / 2);
    let max = origin.offset(base_len - 1, layers - 1, base_len - 1);
    let mut plan = PlanBuilder::new("pyramid", origin, max)?;
    for k in 0..layers {
        for x in k..base_len - k {
            for z in k..base_len - k {
                plan.put(origin.offset(x, k, z), block);
            }
        }
    }
    Ok(plan.finish())
}

// Floor, walls, roof and openings shared by house and castle.
fn shell(plan: &mut PlanBuilder, origin: Position, l: i32, w: i32, h: i32, block: &BlockId) {
    let glass = BlockId::plain("glass");
    let roof_y = h - 1;
    let door_x = l / 2;
    let door_top = 2.min(h - 2);
    let window_y = (h - 1) / 2;
    let mut windows = vec![(0, w / 2), (l - 1, w / 2), (l / 2, w - 1)];
    if door_x != 1 {
        windows.push((1, 0));
    }

    let on_perimeter = |x: i32, z: i32| x == 0 || x == l - 1 || z == 0 || z == w - 1;
    let is_door = |x: i32, y: i32, z: i32| z == 0 && x == door_x && (1..=door_top).contains(&y);
    let is_window = |x: i32, y: i32, z: i32| y == window_y && windows.contains(&(x, z));

    for x in 0..l {
        for z in 0..w {
            plan.put(origin.offset(x, 0, z), block);
        }
    }
    for y in 1..roof_y {
        for x in 0..l {
            for z in 0..w {
                if on_perimeter(x, z) && !is_door(x, y, z) && !is_window(x, y, z) {
                    plan.put(origin.offset(x, y, z), block);
                }
            }
        }
    }
    for x in 0..l {
        for z in 0..w {
            plan.put(origin.offset(x, roof_y, z), block);
        }
    }
    for &(x, z) in &windows {
        plan.put(origin.offset(x, window_y, z), &glass);
    }
}

pub fn house(
    origin: Position,
    length: u32,
    width: u32,
    height: u32,
    block: &BlockId,
) -> Result<PlacementPlan, BuildError> {
    let l = at_least("house", "length", length, 3)?;
    let w = at_least("house", "width", width, 3)?;
    let h = at_least("house", "height", height, 3)?;
    let mut plan = PlanBuilder::new("house", origin, origin.offset(l - 1, h - 1, w - 1))?;
    shell(&mut plan, origin, l, w, h, block);
    Ok(plan.finish())
}

pub fn castle(
    origin: Position,
    length: u32,
    width: u32,
    height: u32,
    block: &BlockId,
) -> Result<PlacementPlan, BuildError> {
    let l = at_least("castle", "length", length, 5)?;
    let w = at_least("castle", "width", width, 5)?;
    let h = at_least("castle", "height", height, 4)?;
    let mut plan = PlanBuilder::new("castle", origin, origin.offset(l - 1, h + 1, w - 1))?;
    shell(&mut plan, origin, l, w, h, block);
    for (x, z) in [(0, 0), (l - 1, 0), (0, w - 1), (l - 1, w - 1)] {
        for y in h..h + 2 {
            plan.put(origin.offset(x, y, z), block);
        }
    }
    for x in (2..l - 1).step_by(2) {
        plan.put(origin.offset(x, h, 0), block);
        plan.put(origin.offset(x, h, w - 1), block);
    }
    for z in (2..w - 1).step_by(2) {
        plan.put(origin.offset(0, h, z), block);
        plan.put(origin.offset(l - 1, h, z), block);
    }
    Ok(plan.finish())
}

pub fn pond(origin: Position, length: u32, width: u32, depth: u32) -> Result<PlacementPlan, BuildError> {
    let l = at_least("pond", "length", length, 1)?;
    let w = at_least("pond", "width", width, 1)?;
    let d = at_least("pond", "depth", depth, 1)?;
    let water = BlockId::plain("water");
    let mut plan = PlanBuilder::new("pond", origin.offset(0, -d, 0), origin.offset(l - 1, -1, w - 1))?;
    for dy in 1..=d {
        for x in 0..l {
            for z in 0..w {
                plan.put(origin.offset(x, -dy, z), &water);
            }
        }
    }
    Ok(plan.finish())
}

pub fn garden(origin: Position, length: u32, width: u32) -> Result<PlacementPlan, BuildError> {
    let l = at_least("garden", "length", length, 1)?;
    let w = at_least("garden", "width", width, 1)?;
    let grass = BlockId::plain("grass");
    let flowers = [BlockId::plain("yellow_flower"), BlockId::plain("red_flower")];
    let mut plan = PlanBuilder::new("garden", origin, origin.offset(l - 1, 1, w - 1))?;
    for x in 0..l {
        for z in 0..w {
            plan.put(origin.offset(x, 0, z), &grass);
        }
    }
    for x in (0..l).step_by(2) {
        for z in (0..w).step_by(2) {
            let flower = &flowers[((x / 2 + z / 2) % 2) as usize];
            plan.put(origin.offset(x, 1, z), flower);
        }
    }
    Ok(plan.finish())
}

/// Ladder data value 2 faces north (`-z`).
const LADDER_FACING_NORTH: u8 = 2;

pub fn ladder(origin: Position, height: u32) -> Result<PlacementPlan, BuildError> {
    let h = at_least("ladder", "height", height, 1)?;
    let stone = BlockId::plain("stone");
    let rung = BlockId::new("ladder", LADDER_FACING_NORTH);
    let mut plan = PlanBuilder::new("ladder", origin.offset(0, 0, -1), origin.offset(0, h - 1, 0))?;
    for y in 0..h {
        plan.put(origin.offset(0, y, 0), &stone);
    }
    for y in 0..h {
        plan.put(origin.offset(0, y, -1), &rung);
    }
    Ok(plan.finish())
}

pub const TRUNK_HEIGHT: i32 = 4;

pub fn tree(origin: Position, sapling: SaplingKind) -> Result<PlacementPlan, BuildError> {
    let log = BlockId::new("log", sapling.data());
    let leaves = BlockId::new("leaves", sapling.data());
    let mut plan = PlanBuilder::new("tree", origin.offset(-1, 0, -1), origin.offset(1, TRUNK_HEIGHT + 1, 1))?;
    for y in 0..TRUNK_HEIGHT {
        plan.put(origin.offset(0, y, 0), &log);
    }
    for y in TRUNK_HEIGHT..TRUNK_HEIGHT + 2 {
        for dx in -1..=1 {
            for dz in -1..=1 {
                plan.put(origin.offset(dx, y, dz), &leaves);
            }
        }
    }
    Ok(plan.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stone() -> BlockId {
        BlockId::plain("stone")
    }

    fn no_duplicates(plan: &PlacementPlan) {
        assert_eq!(plan.positions().len(), plan.len());
        assert!(plan.placements.iter().all(|p| plan.footprint.contains(p.pos)));
    }

    #[test]
    fn pyramid_layers() {
        let plan = pyramid(Position::new(20, 64, 20), 5, 3, &stone()).unwrap();
        assert_eq!(plan.len(), 35);
        let layer = |y| plan.placements.iter().filter(|p| p.pos.y == y).count();
        assert_eq!([layer(64), layer(65), layer(66)], [25, 9, 1]);
        assert!(plan.positions().contains(&Position::new(22, 66, 22)));
        no_duplicates(&plan);

        assert_eq!(pyramid(Position::new(0, 64, 0), 1, 1, &stone()).unwrap().len(), 1);
        // height beyond the apex is clipped
        assert_eq!(pyramid(Position::new(0, 64, 0), 3, 9, &stone()).unwrap().len(), 10);
        assert!(matches!(pyramid(Position::new(99, 64, 99), 5, 3, &stone()), Err(BuildError::OutOfBounds { .. })));
        assert_eq!(pyramid(Position::new(0, 64, 0), 4, 2, &stone()), Err(BuildError::EvenBase(4)));
    }

    #[test]
    fn house_counts() {
        let o = Position::new(10, 64, 10);
        let plan = house(o, 5, 5, 4, &BlockId::plain("planks")).unwrap();
        assert_eq!(plan.len(), 80);
        no_duplicates(&plan);
        let glass = plan.placements.iter().filter(|p| p.block.name == "glass").count();
        assert_eq!(glass, 4);
        // door gap
        assert!(!plan.positions().contains(&o.offset(2, 1, 0)));
        assert!(!plan.positions().contains(&o.offset(2, 2, 0)));
        assert!(matches!(house(o, 2, 5, 4, &stone()), Err(BuildError::Dimension { .. })));
    }

    #[test]
    fn house_plan_order() {
        let o = Position::new(10, 64, 10);
        let plan = house(o, 5, 5, 4, &stone()).unwrap();
        let ys: Vec<i32> = plan.placements.iter().map(|p| p.pos.y - o.y).collect();
        // floor (25) then walls then roof (25) then windows (4)
        assert!(ys[..25].iter().all(|&y| y == 0));
        assert!(ys[25..51].iter().all(|&y| y == 1 || y == 2));
        assert!(ys[51..76].iter().all(|&y| y == 3));
        assert!(plan.placements[76..].iter().all(|p| p.block.name == "glass"));
    }

    #[test]
    fn castle_towers() {
        let o = Position::new(10, 64, 10);
        let plan = castle(o, 7, 7, 5, &stone()).unwrap();
        no_duplicates(&plan);
        for (x, z) in [(0, 0), (6, 0), (0, 6), (6, 6)] {
            let top =
                plan.placements.iter().filter(|p| p.pos.x == o.x + x && p.pos.z == o.z + z).map(|p| p.pos.y).max();
            assert_eq!(top, Some(o.y + 6));
        }
        assert!(matches!(castle(o, 4, 7, 5, &stone()), Err(BuildError::Dimension { .. })));
    }

    #[test]
    fn small_structures() {
        let o = Position::new(30, 64, 30);
        let p = pond(o, 3, 3, 2).unwrap();
        assert_eq!(p.len(), 18);
        assert!(p.placements.iter().all(|c| c.block.name == "water" && c.pos.y < o.y));

        let l = ladder(o, 3).unwrap();
        assert_eq!(l.placements.iter().filter(|c| c.block.name == "ladder").count(), 3);
        assert_eq!(l.placements.iter().filter(|c| c.block.name == "stone").count(), 3);
        assert!(l.placements.iter().filter(|c| c.block.name == "ladder").all(|c| c.pos.z == o.z - 1));

        let g = garden(o, 1, 1).unwrap();
        assert_eq!(
            g.placements,
            vec![
                Placement { pos: o, block: BlockId::plain("grass") },
                Placement { pos: o.offset(0, 1, 0), block: BlockId::plain("yellow_flower") },
            ]
        );
        let g = garden(o, 4, 4).unwrap();
        assert_eq!(g.len(), 16 + 4);

        let t = tree(o, SaplingKind::Birch).unwrap();
        assert_eq!(t.len(), 4 + 18);
        assert!(t.placements.iter().all(|c| c.block.data == 2));
        assert!(tree(Position::new(0, 64, 0), SaplingKind::Oak).is_err());
    }
}
