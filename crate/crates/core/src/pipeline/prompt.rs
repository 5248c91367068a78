use serde::{Deserialize, Serialize};

use super::validate::{ValidationReport, ViolationKind};
use crate::memory::ChatTurn;
use crate::world::{Observation, Registry, MAX_FILL};

pub const ANALYZER_TEMPLATE: &str = include_str!("../../prompts/analyzer.v1.txt");
pub const GENERATOR_TEMPLATE: &str = include_str!("../../prompts/generator.v1.txt");
pub const TEMPLATE_VERSION: u32 = 1;

/// The section headers a generated reply must use, in order.
pub const SECTION_HEADERS: [&str; 5] = ["Reflection", "Planning", "Instructions", "Self-check", "Final Comment"];

pub fn rule_bounds(bound: i32) -> String {
    format!("All coordinates are within (0-{bound})")
}
pub const RULE_BLOCKS: &str = "Correct Minecraft 1.11.2 block IDs used";
pub const RULE_PLACEHOLDERS: &str = "No placeholder <x> <y> <z>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Build,
    ModifyEnvironment,
    Summon,
    Query,
    Other,
}

/// Structured reading of a request, produced by the analyzer stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAnalysis {
    pub goal: String,
    pub task_type: TaskType,
    #[serde(default)]
    pub materials: Vec<String>,
    #[serde(default)]
    pub steps: Vec<String>,
    /// Materials the block registry does not know.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknown_materials: Vec<String>,
}

impl TaskAnalysis {
    /// Used when the analyzer reply cannot be read.
    pub fn fallback(user_input: &str) -> Self {
        Self {
            goal: user_input.trim().to_string(),
            task_type: TaskType::Other,
            materials: Vec::new(),
            steps: vec![user_input.trim().to_string()],
            unknown_materials: Vec::new(),
        }
    }

    /// Reads the first JSON object in `raw` and checks its materials.
    pub fn parse(raw: &str, registry: &Registry) -> Option<Self> {
        let start = raw.find('{')?;
        let end = raw.rfind('}')?;
        let mut analysis: TaskAnalysis = serde_json::from_str(raw.get(start..=end)?).ok()?;
        if analysis.steps.is_empty() && matches!(analysis.task_type, TaskType::Build | TaskType::ModifyEnvironment) {
            analysis.steps.push(analysis.goal.clone());
        }
        analysis.unknown_materials =
            analysis.materials.iter().filter(|m| !registry.blocks.contains(m)).cloned().collect();
        Some(analysis)
    }
}

/// Replaces each `{{slot}}` with its value in one pass, so values that
/// contain braces are left alone. Unknown slots are kept verbatim.
pub fn render(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let name = &after[..close];
                match slots.iter().find(|(n, _)| *n == name) {
                    Some((_, value)) => out.push_str(value),
                    None => out.push_str(&rest[open..open + close + 4]),
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn format_memory(window: &[ChatTurn]) -> String {
    if window.is_empty() {
        return "(none)".into();
    }
    window.iter().map(|t| format!("[{}] {}: {}", t.turn_index, t.role.as_str(), t.text)).collect::<Vec<_>>().join("\n")
}

fn format_observation(observation: &Observation) -> String {
    serde_json::to_string(observation).expect("observation serializes")
}

const ANALYSIS_SCHEMA: &str = r#"{"goal": string, "task_type": string, "materials": [string], "steps": [string]}"#;

pub fn compose_analyzer_prompt(user_input: &str, memory: &[ChatTurn], observation: &Observation) -> String {
    render(
        ANALYZER_TEMPLATE,
        &[
            ("schema", ANALYSIS_SCHEMA),
            ("observation", &format_observation(observation)),
            ("memory", &format_memory(memory)),
            ("user_input", user_input),
        ],
    )
}

pub fn compose_generator_prompt(
    analysis: &TaskAnalysis,
    memory: &[ChatTurn],
    observation: &Observation,
    bound: i32,
    registry: &Registry,
) -> String {
    let materials =
        if analysis.materials.is_empty() { "any valid block".to_string() } else { analysis.materials.join(", ") };
    let a = observation.agent;
    render(
        GENERATOR_TEMPLATE,
        &[
            ("rule_bounds", &rule_bounds(bound)),
            ("rule_blocks", RULE_BLOCKS),
            ("rule_placeholders", RULE_PLACEHOLDERS),
            ("anchor", &format!("{} {} {}", a.x, a.y, a.z)),
            ("max_fill", &MAX_FILL.to_string()),
            ("entities", &registry.entities.kinds().collect::<Vec<_>>().join(", ")),
            ("analysis", &serde_json::to_string(analysis).expect("analysis serializes")),
            ("materials", &materials),
            ("observation", &format_observation(observation)),
            ("memory", &format_memory(memory)),
        ],
    )
}

fn fix_for(kind: ViolationKind, bound: i32) -> String {
    match kind {
        ViolationKind::Placeholder => format!("{RULE_PLACEHOLDERS}: write concrete numbers or ~ offsets."),
        ViolationKind::OutOfBounds => format!("{}: move the command inside the world.", rule_bounds(bound)),
        ViolationKind::UnknownBlock => format!("{RULE_BLOCKS}: pick a block name and data value that exist in 1.11.2."),
        ViolationKind::UnknownEntity => "That entity does not exist: choose the closest available entity.".into(),
        ViolationKind::Syntax => "Fix the command syntax; use only the allowed commands.".into(),
        ViolationKind::Volume => format!("Split the fill so each covers at most {MAX_FILL} blocks."),
    }
}

/// Appends a correction block listing every violation. Earlier blocks are
/// kept, so the prompt only grows.
pub fn refine_prompt(prev: &str, report: &ValidationReport, round: u32, bound: i32) -> String {
    let mut out = prev.trim_end().to_string();
    out.push_str(&format!("\n\nCorrection round {round}. Your previous instructions were rejected:\n"));
    for v in &report.violations {
        out.push_str(&format!(
            "- [{}] line {} `{}`: {}. {}\n",
            v.kind,
            v.line_index + 1,
            v.line,
            v.detail,
            fix_for(v.kind, bound)
        ));
    }
    out.push_str("Reply again with all five sections.\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{Mode, Role, SessionLog};
    use crate::pipeline::validate::Violation;
    use crate::world::{new_world, Position, Weather};

    fn observation() -> Observation {
        new_world(100, 63, Position::new(50, 64, 50)).unwrap().observe(4, 5)
    }

    #[test]
    fn analyzer_prompt_embeds_input_schema_and_state() {
        let mut obs = observation();
        let p = compose_analyzer_prompt("build a pond", &[], &obs);
        assert!(p.contains("build a pond"));
        for field in ["goal", "task_type", "materials", "steps"] {
            assert!(p.contains(field), "{field}");
        }
        obs.weather = Weather::Rain;
        assert!(compose_analyzer_prompt("x", &[], &obs).contains("\"weather\":\"rain\""));
    }

    #[test]
    fn analyzer_prompt_holds_last_ten_turns() {
        let mut log = SessionLog::new("s", Mode::Llm, 0);
        for i in 1..=12 {
            log.append(Role::User, format!("turn-{i:02}"), i);
        }
        let p = compose_analyzer_prompt("now", log.recent(10), &observation());
        assert!(!p.contains("turn-01") && !p.contains("turn-02"));
        assert!((3..=12).all(|i| p.contains(&format!("turn-{i:02}"))));
    }

    #[test]
    fn generator_prompt_lists_sections_and_rules() {
        let registry = Registry::standard();
        let mut analysis = TaskAnalysis::fallback("flag");
        analysis.materials = vec!["wool".into()];
        let p = compose_generator_prompt(&analysis, &[], &observation(), 100, &registry);
        let positions: Vec<usize> = SECTION_HEADERS.iter().map(|h| p.find(&format!("{h}:")).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert!(p.contains("within (0-100)"));
        assert!(p.contains(RULE_BLOCKS) && p.contains(RULE_PLACEHOLDERS));
        assert!(p.contains("Materials for this task: wool"));
        assert!(!p.contains("{{"));
    }

    fn violation(kind: ViolationKind, line_index: usize) -> Violation {
        Violation { kind, line_index, line: "/x".into(), detail: "bad".into() }
    }

    #[test]
    fn refine_appends_monotonically() {
        let one = ValidationReport { violations: vec![violation(ViolationKind::Placeholder, 0)] };
        let p1 = refine_prompt("base", &one, 1, 100);
        assert!(p1.starts_with("base") && p1.contains(RULE_PLACEHOLDERS));

        let two = ValidationReport {
            violations: vec![violation(ViolationKind::UnknownEntity, 0), violation(ViolationKind::Volume, 2)],
        };
        let p2 = refine_prompt(&p1, &two, 2, 100);
        assert!(p2.starts_with(p1.trim_end()));
        let block2 = &p2[p2.find("Correction round 2").unwrap()..];
        assert_eq!(block2.lines().filter(|l| l.starts_with("- [")).count(), 2);
        assert!(block2.contains("choose the closest available entity"));
        assert!(p2.find("Correction round 1").unwrap() < p2.find("Correction round 2").unwrap());
    }

    #[test]
    fn render_is_single_pass() {
        let out = render("a {{x}} b {{y}} {{z}}", &[("x", "{{y}}"), ("y", "2")]);
        assert_eq!(out, "a {{y}} b 2 {{z}}");
    }

    #[test]
    fn analysis_parsing() {
        let registry = Registry::standard();
        let raw =
            "Sure!\n{\"goal\":\"flag\",\"task_type\":\"build\",\"materials\":[\"wool\",\"unobtainium\"],\"steps\":[]}";
        let a = TaskAnalysis::parse(raw, &registry).unwrap();
        assert_eq!(a.task_type, TaskType::Build);
        assert_eq!(a.steps, ["flag"]);
        assert_eq!(a.unknown_materials, ["unobtainium"]);
        assert!(TaskAnalysis::parse("no json", &registry).is_none());
    }
}
