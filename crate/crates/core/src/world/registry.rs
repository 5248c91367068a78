use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockId, WorldError};

/// Registry metadata for one block or item name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockInfo {
    /// Whether the data value selects a variant (color, wood species, facing).
    pub has_variants: bool,
    pub solid: bool,
    /// Items can be given but never placed in the world.
    #[serde(default)]
    pub item_only: bool,
}

impl BlockInfo {
    const fn block(has_variants: bool, solid: bool) -> Self {
        Self { has_variants, solid, item_only: false }
    }

    const fn item() -> Self {
        Self { has_variants: false, solid: false, item_only: true }
    }
}

/// Block and item names known to the world, keyed by their 1.11.2 canonical names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRegistry {
    entries: BTreeMap<String, BlockInfo>,
    aliases: BTreeMap<String, String>,
}

// (name, has_variants, solid)
const STANDARD_BLOCKS: &[(&str, bool, bool)] = &[
    ("air", false, false),
    ("stone", true, true),
    ("grass", false, true),
    ("dirt", true, true),
    ("cobblestone", false, true),
    ("planks", true, true),
    ("sapling", true, false),
    ("bedrock", false, true),
    ("water", true, false),
    ("lava", true, false),
    ("sand", true, true),
    ("gravel", false, true),
    ("gold_ore", false, true),
    ("iron_ore", false, true),
    ("coal_ore", false, true),
    ("log", true, true),
    ("log2", true, true),
    ("leaves", true, true),
    ("leaves2", true, true),
    ("sponge", true, true),
    ("glass", false, true),
    ("lapis_block", false, true),
    ("sandstone", true, true),
    ("bed", true, false),
    ("wool", true, true),
    ("yellow_flower", false, false),
    ("red_flower", true, false),
    ("tallgrass", true, false),
    ("double_plant", true, false),
    ("gold_block", false, true),
    ("iron_block", false, true),
    ("diamond_block", false, true),
    ("emerald_block", false, true),
    ("coal_block", false, true),
    ("stone_slab", true, true),
    ("wooden_slab", true, true),
    ("brick_block", false, true),
    ("tnt", false, true),
    ("bookshelf", false, true),
    ("mossy_cobblestone", false, true),
    ("obsidian", false, true),
    ("torch", true, false),
    ("oak_stairs", true, true),
    ("stone_stairs", true, true),
    ("stone_brick_stairs", true, true),
    ("chest", true, true),
    ("crafting_table", false, true),
    ("furnace", true, true),
    ("wooden_door", true, false),
    ("ladder", true, false),
    ("fence", false, true),
    ("fence_gate", true, true),
    ("trapdoor", true, false),
    ("iron_bars", false, true),
    ("glass_pane", false, true),
    ("stained_glass", true, true),
    ("stained_glass_pane", true, true),
    ("snow", false, true),
    ("ice", false, true),
    ("packed_ice", false, true),
    ("clay", false, true),
    ("pumpkin", true, true),
    ("lit_pumpkin", true, true),
    ("melon_block", false, true),
    ("glowstone", false, true),
    ("sea_lantern", false, true),
    ("redstone_lamp", false, true),
    ("stonebrick", true, true),
    ("quartz_block", true, true),
    ("hardened_clay", false, true),
    ("stained_hardened_clay", true, true),
    ("carpet", true, false),
    ("hay_block", true, true),
    ("netherrack", false, true),
    ("farmland", true, true),
    ("flower_pot", true, false),
];

const STANDARD_ITEMS: &[&str] = &[
    "diamond_chestplate",
    "diamond_helmet",
    "diamond_leggings",
    "diamond_boots",
    "diamond_sword",
    "iron_sword",
    "iron_chestplate",
    "bow",
    "arrow",
    "apple",
    "bread",
    "bone",
    "diamond",
    "emerald",
    "iron_ingot",
    "gold_ingot",
    "stick",
    "saddle",
    "lead",
    "name_tag",
];

// Legacy numeric block ids from the 1.11.2 data-value table.
const NUMERIC_ALIASES: &[(&str, &str)] = &[
    ("0", "air"),
    ("1", "stone"),
    ("2", "grass"),
    ("3", "dirt"),
    ("4", "cobblestone"),
    ("5", "planks"),
    ("6", "sapling"),
    ("7", "bedrock"),
    ("8", "water"),
    ("9", "water"),
    ("10", "lava"),
    ("11", "lava"),
    ("12", "sand"),
    ("13", "gravel"),
    ("14", "gold_ore"),
    ("15", "iron_ore"),
    ("16", "coal_ore"),
    ("17", "log"),
    ("18", "leaves"),
    ("19", "sponge"),
    ("20", "glass"),
    ("22", "lapis_block"),
    ("24", "sandstone"),
    ("26", "bed"),
    ("35", "wool"),
    ("37", "yellow_flower"),
    ("38", "red_flower"),
    ("41", "gold_block"),
    ("42", "iron_block"),
    ("44", "stone_slab"),
    ("45", "brick_block"),
    ("46", "tnt"),
    ("47", "bookshelf"),
    ("48", "mossy_cobblestone"),
    ("49", "obsidian"),
    ("50", "torch"),
    ("53", "oak_stairs"),
    ("54", "chest"),
    ("57", "diamond_block"),
    ("58", "crafting_table"),
    ("61", "furnace"),
    ("64", "wooden_door"),
    ("65", "ladder"),
    ("67", "stone_stairs"),
    ("78", "snow"),
    ("79", "ice"),
    ("82", "clay"),
    ("85", "fence"),
    ("86", "pumpkin"),
    ("89", "glowstone"),
    ("91", "lit_pumpkin"),
    ("95", "stained_glass"),
    ("96", "trapdoor"),
    ("98", "stonebrick"),
    ("101", "iron_bars"),
    ("102", "glass_pane"),
    ("103", "melon_block"),
    ("107", "fence_gate"),
    ("109", "stone_brick_stairs"),
    ("123", "redstone_lamp"),
    ("126", "wooden_slab"),
    ("133", "emerald_block"),
    ("140", "flower_pot"),
    ("155", "quartz_block"),
    ("159", "stained_hardened_clay"),
    ("160", "stained_glass_pane"),
    ("161", "leaves2"),
    ("162", "log2"),
    ("169", "sea_lantern"),
    ("170", "hay_block"),
    ("171", "carpet"),
    ("172", "hardened_clay"),
    ("173", "coal_block"),
    ("174", "packed_ice"),
    ("175", "double_plant"),
];

/// Looks up a legacy numeric block id (`"35"` is `wool`).
pub(crate) fn legacy_block_name(id: &str) -> Option<&'static str> {
    NUMERIC_ALIASES.iter().find(|(alias, _)| *alias == id).map(|&(_, name)| name)
}

impl BlockRegistry {
    pub fn standard() -> Self {
        let mut entries = BTreeMap::new();
        for &(name, has_variants, solid) in STANDARD_BLOCKS {
            entries.insert(name.to_string(), BlockInfo::block(has_variants, solid));
        }
        for &name in STANDARD_ITEMS {
            entries.insert(name.to_string(), BlockInfo::item());
        }
        let aliases = NUMERIC_ALIASES.iter().map(|&(alias, name)| (alias.to_string(), name.to_string())).collect();
        Self { entries, aliases }
    }

    /// Maps a possibly namespaced or aliased name to its canonical entry name.
    pub fn canonical_name(&self, name: &str) -> Option<&str> {
        let lowered = name.trim().to_ascii_lowercase();
        let bare = lowered.strip_prefix("minecraft:").unwrap_or(&lowered);
        if let Some((key, _)) = self.entries.get_key_value(bare) {
            return Some(key.as_str());
        }
        let target = self.aliases.get(bare)?;
        self.entries.get_key_value(target.as_str()).map(|(key, _)| key.as_str())
    }

    pub fn info(&self, name: &str) -> Option<BlockInfo> {
        self.canonical_name(name).and_then(|n| self.entries.get(n).copied())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.canonical_name(name).is_some()
    }

    /// Validates a placeable block and returns it with its canonical name.
    pub fn block(&self, name: &str, data: u8) -> Result<BlockId, WorldError> {
        let canonical = self.canonical_name(name).ok_or_else(|| WorldError::UnknownBlock(name.to_string()))?;
        let info = self.entries[canonical];
        if info.item_only {
            return Err(WorldError::NotPlaceable(canonical.to_string()));
        }
        if data > 15 || (!info.has_variants && data != 0) {
            return Err(WorldError::InvalidData { name: canonical.to_string(), data });
        }
        Ok(BlockId::new(canonical, data))
    }

    /// Validates a name usable with `give` (any block or item).
    pub fn item(&self, name: &str) -> Result<String, WorldError> {
        self.canonical_name(name).map(str::to_string).ok_or_else(|| WorldError::UnknownBlock(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn placeable_names(&self) -> impl Iterator<Item = &str> {
        self.entries
            .iter()
            .filter(|(name, info)| !info.item_only && name.as_str() != "air")
            .map(|(name, _)| name.as_str())
    }

    pub fn aliases(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, n)| (a.as_str(), n.as_str()))
    }
}

/// Entity kinds that may be summoned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityRegistry {
    kinds: BTreeSet<String>,
}

const STANDARD_ENTITIES: &[&str] = &[
    "wolf",
    "pig",
    "sheep",
    "cow",
    "chicken",
    "zombie",
    "skeleton",
    "horse",
    "rabbit",
    "ocelot",
    "villager",
    "creeper",
    "spider",
    "iron_golem",
    "snowman",
    "llama",
    "polar_bear",
    "bat",
    "squid",
];

impl EntityRegistry {
    pub fn standard() -> Self {
        Self { kinds: STANDARD_ENTITIES.iter().map(|k| k.to_string()).collect() }
    }

    pub fn canonical_kind(&self, kind: &str) -> Option<&str> {
        let lowered = kind.trim().to_ascii_lowercase();
        let bare = lowered.strip_prefix("minecraft:").unwrap_or(&lowered);
        self.kinds.get(bare).map(String::as_str)
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.canonical_kind(kind).is_some()
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.kinds.iter().map(String::as_str)
    }
}

/// Both registries a world validates against. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    pub blocks: BlockRegistry,
    pub entities: EntityRegistry,
}

impl Default for Registry {
    fn default() -> Self {
        Self::standard()
    }
}

/// Registry extension file: extra blocks, aliases and entity kinds merged
/// over the standard set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryExtension {
    #[serde(default)]
    pub blocks: BTreeMap<String, BlockInfo>,
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    #[serde(default)]
    pub entities: Vec<String>,
}

impl Registry {
    pub fn standard() -> Self {
        Self { blocks: BlockRegistry::standard(), entities: EntityRegistry::standard() }
    }

    pub fn extended(extension: RegistryExtension) -> Result<Self, WorldError> {
        let mut registry = Self::standard();
        for (name, info) in extension.blocks {
            registry.blocks.entries.insert(name.to_ascii_lowercase(), info);
        }
        for (alias, name) in extension.aliases {
            let name = name.to_ascii_lowercase();
            if !registry.blocks.entries.contains_key(&name) {
                return Err(WorldError::Config(format!("alias `{alias}` points at unknown block `{name}`")));
            }
            registry.blocks.aliases.insert(alias.to_ascii_lowercase(), name);
        }
        for kind in extension.entities {
            registry.entities.kinds.insert(kind.to_ascii_lowercase());
        }
        Ok(registry)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, WorldError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| WorldError::Config(format!("{}: {e}", path.display())))?;
        let extension: RegistryExtension =
            serde_json::from_str(&text).map_err(|e| WorldError::Config(format!("{}: {e}", path.display())))?;
        Self::extended(extension)
    }
}
