//! Rewrites block, item and entity names from other game versions into
//! their 1.11.2 forms. Only the name argument of a command is touched.

use crate::commands::lexer::{comment_start, lex, split_coordinates, Token, TokenKind};
use crate::world::legacy_block_name;

const COLORS: [&str; 16] = [
    "white",
    "orange",
    "magenta",
    "light_blue",
    "yellow",
    "lime",
    "pink",
    "gray",
    "light_gray",
    "cyan",
    "purple",
    "blue",
    "brown",
    "green",
    "red",
    "black",
];

const WOODS: [&str; 6] = ["oak", "spruce", "birch", "jungle", "acacia", "dark_oak"];

// Renames from later versions: (modern, legacy name, data value).
const RENAMES: &[(&str, &str, Option<u8>)] = &[
    ("grass_block", "grass", None),
    ("short_grass", "tallgrass", Some(1)),
    ("tall_grass", "double_plant", Some(2)),
    ("dandelion", "yellow_flower", None),
    ("poppy", "red_flower", Some(0)),
    ("blue_orchid", "red_flower", Some(1)),
    ("allium", "red_flower", Some(2)),
    ("oxeye_daisy", "red_flower", Some(8)),
    ("sunflower", "double_plant", Some(0)),
    ("lilac", "double_plant", Some(1)),
    ("rose_bush", "double_plant", Some(4)),
    ("peony", "double_plant", Some(5)),
    ("granite", "stone", Some(1)),
    ("polished_granite", "stone", Some(2)),
    ("diorite", "stone", Some(3)),
    ("polished_diorite", "stone", Some(4)),
    ("andesite", "stone", Some(5)),
    ("polished_andesite", "stone", Some(6)),
    ("coarse_dirt", "dirt", Some(1)),
    ("podzol", "dirt", Some(2)),
    ("red_sand", "sand", Some(1)),
    ("stone_bricks", "stonebrick", Some(0)),
    ("mossy_stone_bricks", "stonebrick", Some(1)),
    ("cracked_stone_bricks", "stonebrick", Some(2)),
    ("chiseled_stone_bricks", "stonebrick", Some(3)),
    ("chiseled_sandstone", "sandstone", Some(1)),
    ("smooth_sandstone", "sandstone", Some(2)),
    ("cut_sandstone", "sandstone", Some(2)),
    ("terracotta", "hardened_clay", None),
    ("bricks", "brick_block", None),
    ("melon", "melon_block", None),
    ("jack_o_lantern", "lit_pumpkin", None),
    ("carved_pumpkin", "pumpkin", None),
    ("oak_door", "wooden_door", None),
    ("oak_fence", "fence", None),
    ("oak_fence_gate", "fence_gate", None),
    ("oak_trapdoor", "trapdoor", None),
    ("snow_block", "snow", None),
    ("stone_brick_slab", "stone_slab", Some(5)),
    ("cobblestone_slab", "stone_slab", Some(3)),
    ("brick_slab", "stone_slab", Some(4)),
    ("red_bed", "bed", None),
    ("cobweb", "web", None),
];

const ENTITY_RENAMES: &[(&str, &str)] = &[("snow_golem", "snowman"), ("mooshroom", "mushroom_cow")];

/// Legacy name and implied data value for a block name, if it needs rewriting.
fn block_alias(name: &str) -> Option<(String, Option<u8>)> {
    if let Some(legacy) = legacy_block_name(name) {
        return Some((legacy.to_string(), None));
    }
    if let Some(&(_, legacy, data)) = RENAMES.iter().find(|(modern, _, _)| *modern == name) {
        return Some((legacy.to_string(), data));
    }
    for (data, color) in COLORS.iter().enumerate() {
        let Some(kind) = name.strip_prefix(color).and_then(|rest| rest.strip_prefix('_')) else {
            continue;
        };
        let legacy = match kind {
            "wool" => "wool",
            "carpet" => "carpet",
            "stained_glass" => "stained_glass",
            "stained_glass_pane" => "stained_glass_pane",
            "terracotta" => "stained_hardened_clay",
            _ => continue,
        };
        return Some((legacy.to_string(), Some(data as u8)));
    }
    for (data, wood) in WOODS.iter().enumerate() {
        let Some(kind) = name.strip_prefix(wood).and_then(|rest| rest.strip_prefix('_')) else {
            continue;
        };
        let data = data as u8;
        let (legacy, data) = match kind {
            "planks" => ("planks", data),
            "sapling" => ("sapling", data),
            "slab" => ("wooden_slab", data),
            "log" | "leaves" if data >= 4 => (if kind == "log" { "log2" } else { "leaves2" }, data - 4),
            "log" => ("log", data),
            "leaves" => ("leaves", data),
            _ => continue,
        };
        return Some((legacy.to_string(), Some(data)));
    }
    None
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Block,
    Item,
    Entity,
}

/// Index of the name token and what kind of name it holds.
fn name_slot(verb: &str, args: &[Token<'_>]) -> Option<(usize, Slot)> {
    let coords_then_block = |count: usize| {
        let mut parts = 0;
        for (i, token) in args.iter().enumerate() {
            if parts == count {
                return Some((i, Slot::Block));
            }
            if token.kind != TokenKind::Word {
                return None;
            }
            parts += split_coordinates(token.text).len();
            if parts > count {
                return None;
            }
        }
        None
    };
    match verb {
        "fill" => coords_then_block(6),
        "setblock" => coords_then_block(3),
        "summon" => (!args.is_empty()).then_some((0, Slot::Entity)),
        "give" => (args.len() > 1).then_some((1, Slot::Item)),
        _ => None,
    }
}

fn rewrite(name: &str, slot: Slot) -> Option<(String, Option<u8>)> {
    let lowered = name.to_ascii_lowercase();
    let bare = lowered.strip_prefix("minecraft:").unwrap_or(&lowered);
    let alias = match slot {
        Slot::Block | Slot::Item => block_alias(bare),
        Slot::Entity => ENTITY_RENAMES.iter().find(|(m, _)| *m == bare).map(|&(_, l)| (l.to_string(), None)),
    };
    match alias {
        Some((legacy, data)) => Some((legacy, if slot == Slot::Block { data } else { None })),
        None if bare != name => Some((bare.to_string(), None)),
        None => None,
    }
}

/// Maps a command's block, item or entity name to its 1.11.2 spelling.
/// Lines that cannot be lexed, and lines with nothing to rewrite, come back
/// unchanged. Applying it twice gives the same result as applying it once.
///
/// ```
/// use voxchat::pipeline::postprocess_compat;
/// assert_eq!(postprocess_compat("/setblock 1 64 1 minecraft:red_wool"), "/setblock 1 64 1 wool 14");
/// assert_eq!(postprocess_compat("/fill 0 64 0 2 64 2 35 4"), "/fill 0 64 0 2 64 2 wool 4");
/// ```
pub fn postprocess_compat(line: &str) -> String {
    let trimmed = line.trim();
    let Some(body) = trimmed.strip_prefix('/') else {
        return line.to_string();
    };
    let verb_end = body.find(char::is_whitespace).unwrap_or(body.len());
    let verb = body[..verb_end].to_ascii_lowercase();
    let code_end = comment_start(trimmed).unwrap_or(trimmed.len());
    let code = &trimmed[..code_end];
    let Ok(tokens) = lex(code) else {
        return line.to_string();
    };
    let Some((slot_index, slot)) = name_slot(&verb, &tokens[1..]) else {
        return line.to_string();
    };
    let args = &tokens[1..];
    let name = &args[slot_index];
    let Some((legacy, data)) = rewrite(name.text, slot) else {
        return line.to_string();
    };

    let mut replace_end = name.start + name.text.len();
    let mut replacement = legacy;
    if let Some(data) = data {
        // an explicit data value after the name is superseded by the alias
        if let Some(next) = args.get(slot_index + 1).filter(|t| t.text.parse::<u8>().is_ok()) {
            replace_end = next.start + next.text.len();
        }
        replacement = format!("{replacement} {data}");
    }
    format!("{}{}{}", &trimmed[..name.start], replacement, &trimmed[replace_end..])
}
