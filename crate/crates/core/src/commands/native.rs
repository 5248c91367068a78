use std::collections::BTreeMap;

use super::lexer::{comment_start, lex, split_coordinates, Token, TokenKind};
use super::{Coord, Coord3, NativeCommand, ParseError, Selector, TimeValue, TpDestination};
use crate::world::{FillMode, TagValue, Tags, Weather};

/// Verbs accepted but never executed.
pub const INERT_VERBS: &[&str] = &["execute", "particle", "playsound"];

/// Parses one slash command. Trailing `# comments` are dropped (except for
/// `/say`, whose text is taken verbatim).
pub fn parse_native(line: &str) -> Result<NativeCommand, ParseError> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return Err(ParseError::Empty);
    }
    let Some(body) = trimmed.strip_prefix('/') else {
        return Err(ParseError::MissingSlash);
    };
    let verb_end = body.find(char::is_whitespace).unwrap_or(body.len());
    let verb = body[..verb_end].to_ascii_lowercase();
    if verb.is_empty() {
        return Err(ParseError::UnknownVerb { verb: String::new(), column: 2 });
    }

    if verb == "say" {
        let text = body[verb_end..].trim();
        if text.is_empty() {
            return Err(ParseError::Arity { command: "say".into(), expected: "1 (text)".into(), found: 0 });
        }
        return Ok(NativeCommand::Say { text: text.to_string() });
    }
    if INERT_VERBS.contains(&verb.as_str()) {
        return Ok(NativeCommand::Noop { verb, raw: trimmed.to_string() });
    }

    let code = match comment_start(trimmed) {
        Some(at) => trimmed[..at].trim_end(),
        None => trimmed,
    };
    let tokens = lex(code)?;
    let mut cursor = Cursor { tokens: &tokens[1..], at: 0, verb: &verb };

    let cmd = match verb.as_str() {
        "fill" => {
            let from = cursor.coords()?;
            let to = cursor.coords()?;
            let block = cursor.material("block")?;
            let (data, mode) = cursor.data_and_mode(&[
                FillMode::Replace,
                FillMode::Destroy,
                FillMode::Keep,
                FillMode::Hollow,
                FillMode::Outline,
            ])?;
            NativeCommand::Fill { from, to, block, data, mode }
        }
        "setblock" => {
            let pos = cursor.coords()?;
            let block = cursor.material("block")?;
            let (data, mode) = cursor.data_and_mode(&[FillMode::Replace, FillMode::Destroy, FillMode::Keep])?;
            NativeCommand::Setblock { pos, block, data, mode }
        }
        "summon" => {
            let kind = cursor.material("entity")?;
            let pos = if cursor.peek().is_some_and(|t| t.kind == TokenKind::Word) {
                cursor.coords()?
            } else {
                Coord3::here()
            };
            let tags = match cursor.peek() {
                Some(t) if t.kind == TokenKind::Braces => {
                    cursor.at += 1;
                    Some(parse_tags(t)?)
                }
                _ => None,
            };
            NativeCommand::Summon { kind, pos, tags }
        }
        "weather" => {
            let t = cursor.next("weather type")?;
            let weather: Weather = t.text.to_ascii_lowercase().parse().map_err(|_| invalid(t, "weather type"))?;
            let duration = cursor.optional_u32()?;
            NativeCommand::Weather { weather, duration }
        }
        "time" => {
            let op = cursor.next("`set` or `add`")?;
            match op.text.to_ascii_lowercase().as_str() {
                "set" => {
                    let t = cursor.next("time value")?;
                    let time =
                        TimeValue::parse(&t.text.to_ascii_lowercase()).ok_or_else(|| invalid(t, "time value"))?;
                    NativeCommand::TimeSet { time }
                }
                "add" => {
                    let t = cursor.next("ticks")?;
                    let ticks = t.text.parse().map_err(|_| not_integer(t))?;
                    NativeCommand::TimeAdd { ticks }
                }
                _ => return Err(invalid(op, "time operation")),
            }
        }
        "give" => {
            let target = cursor.selector()?;
            let item = cursor.material("item")?;
            let count = cursor.optional_u32()?;
            NativeCommand::Give { target, item, count }
        }
        "tp" | "teleport" => {
            let first = cursor.peek().ok_or_else(|| cursor.arity("a target or coordinates"))?;
            let target = if first.text.starts_with('@') { cursor.selector()? } else { Selector::NearestPlayer };
            let destination = match cursor.peek() {
                Some(t) if t.text.starts_with('@') => TpDestination::Target(cursor.selector()?),
                _ => TpDestination::Coords(cursor.coords()?),
            };
            NativeCommand::Tp { target, destination }
        }
        _ => return Err(ParseError::UnknownVerb { verb: body[..verb_end].to_string(), column: 1 }),
    };
    cursor.finish()?;
    Ok(cmd)
}

struct Cursor<'t, 'a> {
    tokens: &'t [Token<'a>],
    at: usize,
    verb: &'t str,
}

impl<'t, 'a> Cursor<'t, 'a> {
    fn peek(&self) -> Option<&'t Token<'a>> {
        self.tokens.get(self.at)
    }

    fn arity(&self, expected: &str) -> ParseError {
        ParseError::Arity { command: self.verb.to_string(), expected: expected.to_string(), found: self.at }
    }

    fn next(&mut self, expected: &str) -> Result<&'t Token<'a>, ParseError> {
        let t = self.peek().ok_or_else(|| self.arity(&format!("more ({expected})")))?;
        self.at += 1;
        Ok(t)
    }

    fn coords(&mut self) -> Result<Coord3, ParseError> {
        let mut parts: Vec<(&str, &Token<'_>)> = Vec::with_capacity(3);
        while parts.len() < 3 {
            let t = self.peek().ok_or_else(|| self.arity("three coordinates"))?;
            if t.kind != TokenKind::Word {
                return Err(malformed_coordinate(t.text, t));
            }
            let split = split_coordinates(t.text);
            if parts.len() + split.len() > 3 {
                return Err(malformed_coordinate(t.text, t));
            }
            self.at += 1;
            parts.extend(split.into_iter().map(|p| (p, t)));
        }
        let parse = |(text, token): (&str, &Token<'_>)| -> Result<Coord, ParseError> {
            if let Some(offset) = text.strip_prefix('~') {
                if offset.is_empty() {
                    return Ok(Coord::rel(0));
                }
                return offset.parse().map(Coord::rel).map_err(|_| malformed_coordinate(text, token));
            }
            text.parse().map(Coord::abs).map_err(|_| malformed_coordinate(text, token))
        };
        Ok(Coord3::new(parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
    }

    fn material(&mut self, what: &'static str) -> Result<String, ParseError> {
        let t = self.next(what)?;
        let ok = t.kind == TokenKind::Word
            && t.text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':')
            && !t.text.starts_with('~');
        if ok {
            Ok(t.text.to_string())
        } else {
            Err(invalid(t, what))
        }
    }

    fn data_and_mode(&mut self, modes: &[FillMode]) -> Result<(Option<u8>, Option<FillMode>), ParseError> {
        let mut data = None;
        if let Some(t) = self.peek() {
            if t.text.starts_with(|c: char| c.is_ascii_digit() || c == '-') {
                let value: u8 =
                    t.text.parse().ok().filter(|&d| d <= 15).ok_or_else(|| invalid(t, "data value (0-15)"))?;
                data = Some(value);
                self.at += 1;
            }
        }
        let mut mode = None;
        if let Some(t) = self.peek() {
            if let Ok(m) = t.text.to_ascii_lowercase().parse::<FillMode>() {
                if modes.contains(&m) {
                    mode = Some(m);
                    self.at += 1;
                }
            }
        }
        Ok((data, mode))
    }

    fn optional_u32(&mut self) -> Result<Option<u32>, ParseError> {
        match self.peek() {
            None => Ok(None),
            Some(t) => {
                self.at += 1;
                t.text.parse().map(Some).map_err(|_| not_integer(t))
            }
        }
    }

    fn selector(&mut self) -> Result<Selector, ParseError> {
        let t = self.next("a target selector")?;
        parse_selector(t.text).ok_or_else(|| invalid(t, "selector (@p or @e[name=...])"))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::Unexpected { token: t.text.to_string(), column: t.column() }),
        }
    }
}

fn invalid(t: &Token<'_>, what: &'static str) -> ParseError {
    ParseError::InvalidValue { what, token: t.text.to_string(), column: t.column() }
}

fn not_integer(t: &Token<'_>) -> ParseError {
    ParseError::NotInteger { token: t.text.to_string(), column: t.column() }
}

fn malformed_coordinate(text: &str, t: &Token<'_>) -> ParseError {
    ParseError::MalformedCoordinate { token: text.to_string(), column: t.column() }
}

fn parse_selector(text: &str) -> Option<Selector> {
    if text == "@p" {
        return Some(Selector::NearestPlayer);
    }
    let args = text.strip_prefix("@e[")?.strip_suffix(']')?;
    let value = args.trim().strip_prefix("name")?.trim_start().strip_prefix('=')?.trim();
    let name = match value.strip_prefix('"') {
        Some(quoted) => unescape(quoted.strip_suffix('"')?)?,
        None if !value.is_empty() && !value.contains([',', '"']) => value.to_string(),
        None => return None,
    };
    Some(Selector::Named(name))
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => out.push(chars.next()?),
            '"' => return None,
            c => out.push(c),
        }
    }
    Some(out)
}

// Flat `{Key: value, ...}` tag syntax.
fn parse_tags(t: &Token<'_>) -> Result<Tags, ParseError> {
    let column = t.column();
    let err = |reason: &str| ParseError::MalformedTags { column, reason: reason.to_string() };
    let inner = &t.text[1..t.text.len() - 1];
    let mut tags = BTreeMap::new();
    for entry in split_top_level(inner) {
        let entry = entry.trim();
        if entry.is_empty() {
            if tags.is_empty() && inner.trim().is_empty() {
                continue;
            }
            return Err(err("empty entry"));
        }
        let colon = entry.find(':').ok_or_else(|| err("expected `key: value`"))?;
        let key = entry[..colon].trim();
        let key = match key.strip_prefix('"').and_then(|k| k.strip_suffix('"')) {
            Some(quoted) => unescape(quoted).ok_or_else(|| err("bad key"))?,
            None => key.to_string(),
        };
        if key.is_empty() {
            return Err(err("empty key"));
        }
        let raw = entry[colon + 1..].trim();
        if raw.contains(['{', '[']) {
            return Err(err("nested tags are not supported"));
        }
        let value = if let Some(quoted) = raw.strip_prefix('"') {
            let body = quoted.strip_suffix('"').ok_or_else(|| err("unterminated string"))?;
            TagValue::Str(unescape(body).ok_or_else(|| err("bad string escape"))?)
        } else if raw.is_empty() {
            return Err(err("missing value"));
        } else if let Ok(i) = raw.parse::<i64>() {
            TagValue::Int(i)
        } else if let Some(b) = raw.strip_suffix(['b', 'B']).and_then(|n| n.parse::<i64>().ok()) {
            match b {
                0 => TagValue::Bool(false),
                1 => TagValue::Bool(true),
                n => TagValue::Int(n),
            }
        } else if raw.chars().all(|c| c.is_alphanumeric() || c == '_' || c == ' ' || c == '-') {
            TagValue::Str(raw.to_string())
        } else {
            return Err(err("unsupported value"));
        };
        if tags.insert(key, value).is_some() {
            return Err(err("duplicate key"));
        }
    }
    Ok(tags)
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut in_quote = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        if in_quote {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_quote = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_quote = true,
            ',' => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}
