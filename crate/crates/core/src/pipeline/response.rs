use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// A reply in the five-section format.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotResponse {
    pub reflection: String,
    pub planning: Vec<String>,
    pub instructions: Vec<String>,
    pub self_check: Vec<String>,
    pub final_comment: String,
    pub refusal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionCall {
    pub name: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionCallPayload {
    pub calls: Vec<FunctionCall>,
}

// Argument order per verb; alternatives separated by `|`.
const ARGUMENT_ORDER: &[(&str, &[&str])] = &[
    ("fill", &["from", "x1", "y1", "z1", "to", "x2", "y2", "z2", "block", "data", "mode"]),
    ("setblock", &["pos|position", "x", "y", "z", "block", "data", "mode"]),
    ("summon", &["entity|kind|type", "pos|position", "x", "y", "z", "tags|nbt"]),
    ("weather", &["weather|type", "duration"]),
    ("time", &["action|op", "value|time"]),
    ("say", &["text|message"]),
    ("give", &["target|player", "item", "count|amount"]),
    ("tp", &["target", "destination|to", "x", "y", "z"]),
];

fn render_value(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(render_value).collect::<Vec<_>>().join(" "),
        Value::Object(map) => {
            let fields: Vec<String> = map
                .iter()
                .map(|(k, v)| match v {
                    Value::String(s) => format!("{k}: {}", Value::String(s.clone())),
                    Value::Bool(b) => format!("{k}: {}b", u8::from(*b)),
                    other => format!("{k}: {}", render_value(other)),
                })
                .collect();
            format!("{{{}}}", fields.join(", "))
        }
        other => other.to_string(),
    }
}

impl FunctionCall {
    /// The slash command this call stands for. A `command` argument holding
    /// a full line is used as is.
    pub fn to_line(&self) -> String {
        if let Some(Value::String(line)) = self.arguments.get("command") {
            return if line.starts_with('/') { line.clone() } else { format!("/{line}") };
        }
        let verb = self.name.trim_start_matches('/').to_ascii_lowercase();
        let mut parts = vec![format!("/{verb}")];
        let order = ARGUMENT_ORDER.iter().find(|(v, _)| *v == verb).map(|(_, o)| *o).unwrap_or(&[]);
        let mut used = Vec::new();
        for keys in order {
            if let Some((key, value)) = keys.split('|').find_map(|k| self.arguments.get_key_value(k)) {
                parts.push(render_value(value));
                used.push(key.as_str());
            }
        }
        // unrecognised arguments keep their given order
        for (key, value) in &self.arguments {
            if !used.contains(&key.as_str()) {
                parts.push(render_value(value));
            }
        }
        parts.join(" ")
    }
}

impl FunctionCallPayload {
    pub fn to_lines(&self) -> Vec<String> {
        self.calls.iter().map(FunctionCall::to_line).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", content = "body", rename_all = "snake_case")]
pub enum ParsedResponse {
    Cot(CotResponse),
    Calls(FunctionCallPayload),
    Unparsed(String),
}

impl ParsedResponse {
    pub fn is_refusal(&self) -> bool {
        matches!(self, ParsedResponse::Cot(c) if c.refusal)
    }

    /// Command lines to validate and run.
    pub fn instructions(&self) -> Vec<String> {
        match self {
            ParsedResponse::Cot(c) => c.instructions.clone(),
            ParsedResponse::Calls(p) => p.to_lines(),
            ParsedResponse::Unparsed(_) => Vec::new(),
        }
    }
}

const REFUSAL_MARKERS: &[&str] = &[
    "can't assist",
    "cannot assist",
    "can't help with",
    "cannot help with",
    "won't help with",
    "against ethical guidelines",
    "unable to comply",
];

fn is_refusal_text(text: &str) -> bool {
    let lowered = text.to_lowercase().replace('\u{2019}', "'");
    REFUSAL_MARKERS.iter().any(|m| lowered.contains(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Reflection,
    Planning,
    Instructions,
    SelfCheck,
    FinalComment,
}

const HEADERS: &[(&str, Section)] = &[
    ("reflection", Section::Reflection),
    ("planning", Section::Planning),
    ("plan", Section::Planning),
    ("instructions", Section::Instructions),
    ("instruction", Section::Instructions),
    ("commands", Section::Instructions),
    ("self-check", Section::SelfCheck),
    ("self check", Section::SelfCheck),
    ("selfcheck", Section::SelfCheck),
    ("final comment", Section::FinalComment),
    ("final comments", Section::FinalComment),
    ("comment", Section::FinalComment),
];

/// Recognises `Reflection:`, `**Planning**:`, `### Instructions` and similar.
/// Returns the section and any text after the header on the same line.
fn header(line: &str) -> Option<(Section, &str)> {
    let stripped = line.trim_start_matches(|c: char| c == '#' || c == '*' || c == '_' || c.is_whitespace());
    let lowered = stripped.to_ascii_lowercase();
    HEADERS.iter().find_map(|&(name, section)| {
        if !lowered.starts_with(name) {
            return None;
        }
        let rest = stripped[name.len()..].trim_start_matches(['*', '_']);
        if rest.trim().is_empty() {
            Some((section, ""))
        } else {
            rest.strip_prefix(':').map(|r| (section, r.trim_start_matches(['*', '_']).trim()))
        }
    })
}

static STEP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bstep\s*\d+\s*[:.)]").expect("step pattern"));
static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:[-*•]\s+|\d+[.)]\s+)").expect("bullet pattern"));

fn split_planning(text: &str) -> Vec<String> {
    let clean = |s: &str| s.trim().trim_end_matches(';').trim().to_string();
    if STEP.is_match(text) {
        let mut steps: Vec<String> = STEP.split(text).skip(1).map(clean).filter(|s| !s.is_empty()).collect();
        let before = STEP.split(text).next().map(clean).unwrap_or_default();
        if !before.is_empty() {
            steps.insert(0, before);
        }
        return steps;
    }
    text.lines().map(|l| clean(&BULLET.replace(l.trim(), ""))).filter(|s| !s.is_empty()).collect()
}

fn instruction_line(line: &str) -> Option<String> {
    let line = BULLET.replace(line.trim(), "");
    let line = line.trim().trim_matches('`').trim();
    (line.starts_with('/') && !line.starts_with("//")).then(|| line.to_string())
}

fn structured(raw: &str) -> Option<FunctionCallPayload> {
    let mut text = raw.trim();
    if let Some(inner) = text.strip_prefix("```") {
        let inner = inner.trim_start_matches(|c: char| c.is_ascii_alphanumeric());
        text = inner.trim().strip_suffix("```").unwrap_or(inner).trim();
    }
    if !(text.starts_with('{') || text.starts_with('[')) {
        return None;
    }
    let value: Value = serde_json::from_str(text).ok()?;
    let calls = match value {
        Value::Object(mut map) if map.contains_key("calls") => match map.remove("calls")? {
            Value::Array(calls) => calls,
            _ => return None,
        },
        Value::Object(map) if map.contains_key("name") => vec![Value::Object(map)],
        Value::Array(calls) => calls,
        _ => return None,
    };
    let calls = calls.into_iter().map(call).collect::<Option<Vec<_>>>()?;
    (!calls.is_empty()).then_some(FunctionCallPayload { calls })
}

fn call(value: Value) -> Option<FunctionCall> {
    let Value::Object(mut map) = value else { return None };
    // OpenAI-style {"type": "function", "function": {...}}
    if let Some(Value::Object(inner)) = map.remove("function") {
        map = inner;
    }
    let name = map.get("name")?.as_str()?.to_string();
    let arguments = match map.remove("arguments") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(args)) => args,
        Some(Value::String(s)) => match serde_json::from_str(&s).ok()? {
            Value::Object(args) => args,
            _ => return None,
        },
        Some(_) => return None,
    };
    Some(FunctionCall { name, arguments })
}

/// Splits a model reply into a structured payload, a sectioned response or
/// nothing usable. Never fails: anything unrecognised is `Unparsed`.
pub fn parse_response(raw: &str) -> ParsedResponse {
    if let Some(payload) = structured(raw) {
        return ParsedResponse::Calls(payload);
    }

    let mut sections: Vec<(Section, Vec<&str>)> = Vec::new();
    let mut preamble: Vec<&str> = Vec::new();
    for line in raw.lines() {
        match header(line) {
            Some((section, rest)) => sections.push((section, if rest.is_empty() { vec![] } else { vec![rest] })),
            None => match sections.last_mut() {
                Some((_, body)) => body.push(line),
                None => preamble.push(line),
            },
        }
    }

    let mut cot = CotResponse::default();
    if sections.is_empty() {
        cot.instructions = raw.lines().filter_map(instruction_line).collect();
        let chat: Vec<&str> =
            raw.lines().map(str::trim).filter(|l| !l.is_empty() && instruction_line(l).is_none()).collect();
        cot.final_comment = chat.join(" ");
    } else {
        let mut comment_lines = Vec::new();
        for (section, body) in &sections {
            let text = body.join("\n");
            match section {
                Section::Reflection => cot.reflection = text.trim().to_string(),
                Section::Planning => cot.planning.extend(split_planning(&text)),
                Section::Instructions => cot.instructions.extend(body.iter().filter_map(|l| instruction_line(l))),
                Section::SelfCheck => {
                    let (checks, comment) = match text.rfind("//") {
                        Some(at) => (&text[..at], text[at + 2..].trim()),
                        None => (text.as_str(), ""),
                    };
                    if !comment.is_empty() {
                        comment_lines.push(comment.to_string());
                    }
                    cot.self_check.extend(
                        checks
                            .split(['\n', ';'])
                            .map(|c| c.trim().trim_end_matches('.').trim())
                            .filter(|c| !c.is_empty())
                            .map(String::from),
                    );
                }
                Section::FinalComment => comment_lines.insert(0, text.trim().to_string()),
            }
        }
        cot.final_comment = comment_lines.into_iter().find(|c| !c.is_empty()).unwrap_or_default();
    }

    if cot.instructions.is_empty() {
        if is_refusal_text(raw) {
            cot.refusal = true;
            if cot.final_comment.is_empty() {
                cot.final_comment = raw.trim().to_string();
            }
            return ParsedResponse::Cot(cot);
        }
        return ParsedResponse::Unparsed(raw.to_string());
    }
    ParsedResponse::Cot(cot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_with_inline_content() {
        let raw = "Reflection: Make it rain.\nPlanning: Step 1: Change weather; Step 2: Confirm\nInstructions:\n/weather rain\nSelf-check: Rule one; Rule two. // All set!";
        let ParsedResponse::Cot(cot) = parse_response(raw) else { panic!("not cot") };
        assert_eq!(cot.reflection, "Make it rain.");
        assert_eq!(cot.planning, ["Change weather", "Confirm"]);
        assert_eq!(cot.instructions, ["/weather rain"]);
        assert_eq!(cot.self_check, ["Rule one", "Rule two"]);
        assert_eq!(cot.final_comment, "All set!");
        assert!(!cot.refusal);
    }

    #[test]
    fn markdown_headers_and_comments() {
        let raw = "**Reflection**: build\n### Instructions\n```\n// Step 1: base\n/fill ~ ~ ~ ~2 ~ ~2 stone\n...\n- `/setblock ~ ~1 ~ torch`\n```\n**Final Comment**: Done";
        let ParsedResponse::Cot(cot) = parse_response(raw) else { panic!("not cot") };
        assert_eq!(cot.instructions, ["/fill ~ ~ ~ ~2 ~ ~2 stone", "/setblock ~ ~1 ~ torch"]);
        assert_eq!(cot.final_comment, "Done");
    }

    #[test]
    fn bare_slash_lines() {
        let ParsedResponse::Cot(cot) = parse_response("/weather clear\nall done") else { panic!() };
        assert_eq!(cot.instructions, ["/weather clear"]);
        assert_eq!(cot.final_comment, "all done");
    }

    #[test]
    fn refusal_and_unparsed() {
        let r = parse_response("Sorry, I can\u{2019}t assist with that.");
        assert!(r.is_refusal());
        assert!(r.instructions().is_empty());
        assert_eq!(parse_response("hello world"), ParsedResponse::Unparsed("hello world".into()));
        assert_eq!(parse_response(""), ParsedResponse::Unparsed(String::new()));
        // commands win over a refusal phrase
        assert!(!parse_response("I can't assist with rain, but:\n/weather clear").is_refusal());
    }

    #[test]
    fn structured_payloads() {
        let raw = r#"{"calls":[{"name":"fill","arguments":{"x1":1,"y1":64,"z1":0,"x2":1,"y2":64,"z2":3,"block":"wool","data":14}}]}"#;
        assert_eq!(parse_response(raw).instructions(), ["/fill 1 64 0 1 64 3 wool 14"]);

        let raw = r#"[{"name":"weather","arguments":"{\"weather\":\"rain\"}"},{"name":"say","arguments":{"text":"hi there"}}]"#;
        assert_eq!(parse_response(raw).instructions(), ["/weather rain", "/say hi there"]);

        let raw = "```json\n{\"name\":\"summon\",\"arguments\":{\"entity\":\"wolf\",\"pos\":\"~ ~1 ~\",\"tags\":{\"CustomName\":\"Puppy Robot\",\"Tame\":1,\"CustomNameVisible\":true}}}\n```";
        assert_eq!(
            parse_response(raw).instructions(),
            ["/summon wolf ~ ~1 ~ {CustomName: \"Puppy Robot\", CustomNameVisible: 1b, Tame: 1}"]
        );

        let raw = r#"{"calls":[{"type":"function","function":{"name":"setblock","arguments":{"command":"setblock 1 64 1 stone"}}}]}"#;
        assert_eq!(parse_response(raw).instructions(), ["/setblock 1 64 1 stone"]);

        // JSON that is not a call list falls through to section parsing
        assert!(matches!(parse_response(r#"{"goal":"x"}"#), ParsedResponse::Unparsed(_)));
    }

    #[test]
    fn header_detection_needs_a_colon_or_line_end() {
        assert_eq!(header("Planning the roof is hard"), None);
        assert_eq!(header("Planning:"), Some((Section::Planning, "")));
        assert_eq!(header("## Self-check"), Some((Section::SelfCheck, "")));
        assert_eq!(header("Self-check: ok"), Some((Section::SelfCheck, "ok")));
    }
}
