use super::{ParseError, SaplingKind, StudyCommand, TimeValue};
use crate::world::{Position, Weather};

struct Word<'a> {
    text: &'a str,
    column: usize,
}

fn words(line: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Word { text: &line[s..i], column: s + 1 });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

struct Args<'a> {
    words: &'a [Word<'a>],
}

impl<'a> Args<'a> {
    fn expect(command: &'static str, words: &'a [Word<'a>], names: &str) -> Result<Self, ParseError> {
        let expected = names.split_whitespace().count();
        if words.len() != expected {
            return Err(ParseError::Arity {
                command: command.to_string(),
                expected: format!("{expected} ({names})"),
                found: words.len(),
            });
        }
        Ok(Self { words })
    }

    fn int(&self, i: usize) -> Result<i32, ParseError> {
        let w = &self.words[i];
        w.text.parse().map_err(|_| ParseError::NotInteger { token: w.text.to_string(), column: w.column })
    }

    fn pos(&self, i: usize) -> Result<Position, ParseError> {
        Ok(Position::new(self.int(i)?, self.int(i + 1)?, self.int(i + 2)?))
    }

    fn dim(&self, i: usize) -> Result<u32, ParseError> {
        let v = self.int(i)?;
        let w = &self.words[i];
        u32::try_from(v)
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| ParseError::NonPositive { token: w.text.to_string(), column: w.column })
    }

    fn ident(&self, i: usize, what: &'static str) -> Result<String, ParseError> {
        let w = &self.words[i];
        let ok = !w.text.is_empty()
            && w.text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':')
            && !w.text.starts_with(|c: char| c.is_ascii_digit() || c == '-');
        if ok {
            Ok(w.text.to_ascii_lowercase())
        } else {
            Err(self.invalid(i, what))
        }
    }

    fn invalid(&self, i: usize, what: &'static str) -> ParseError {
        let w = &self.words[i];
        ParseError::InvalidValue { what, token: w.text.to_string(), column: w.column }
    }

    fn color(&self, i: usize) -> Result<u8, ParseError> {
        let v = self.int(i)?;
        u8::try_from(v).ok().filter(|&c| c <= 15).ok_or_else(|| self.invalid(i, "color number (0-15)"))
    }
}

/// Parses one line of the study command language.
pub fn parse_study(line: &str) -> Result<StudyCommand, ParseError> {
    let words = words(line);
    let Some(first) = words.first() else {
        return Err(ParseError::Empty);
    };
    let verb = first.text.to_ascii_lowercase();
    let rest = &words[1..];
    let sub = rest.first().map(|w| w.text.to_ascii_lowercase());

    let cmd = match (verb.as_str(), sub.as_deref()) {
        ("place", Some("torch")) => {
            let a = Args::expect("place torch", &rest[1..], "x y z")?;
            StudyCommand::PlaceTorch { pos: a.pos(0)? }
        }
        ("place", _) => {
            let a = Args::expect("place", rest, "x y z block_type color_number")?;
            StudyCommand::Place { pos: a.pos(0)?, block: a.ident(3, "block type")?, color: a.color(4)? }
        }
        ("summon", _) => {
            let a = Args::expect("summon", rest, "x y z entity_type")?;
            StudyCommand::Summon { pos: a.pos(0)?, entity: a.ident(3, "entity type")? }
        }
        ("daytime", _) => {
            let a = Args::expect("daytime", rest, "time_value")?;
            let time = TimeValue::parse(&rest[0].text.to_ascii_lowercase())
                .ok_or_else(|| a.invalid(0, "time value (0-23999, day, noon, night, midnight)"))?;
            StudyCommand::Daytime { time }
        }
        ("tree", _) => {
            let a = Args::expect("tree", rest, "x y z sapling_type")?;
            let sapling = SaplingKind::parse(&rest[3].text.to_ascii_lowercase())
                .ok_or_else(|| a.invalid(3, "sapling type (oak, spruce, birch, jungle)"))?;
            StudyCommand::Tree { pos: a.pos(0)?, sapling }
        }
        ("weather", _) => {
            let a = Args::expect("weather", rest, "weather_type")?;
            let weather: Weather = rest[0]
                .text
                .to_ascii_lowercase()
                .parse()
                .map_err(|_| a.invalid(0, "weather type (rain, thunder, clear)"))?;
            StudyCommand::Weather { weather }
        }
        ("fill", _) => {
            let a = Args::expect("fill", rest, "x1 y1 z1 x2 y2 z2 block_type")?;
            StudyCommand::Fill { from: a.pos(0)?, to: a.pos(3)?, block: a.ident(6, "block type")? }
        }
        ("build", Some(kind)) => parse_build(kind, &rest[1..], &rest[0])?,
        ("build", None) => {
            return Err(ParseError::Arity {
                command: "build".into(),
                expected: "a structure (ladder, pond, castle, house, garden, pyramid) and".into(),
                found: 0,
            })
        }
        _ => return Err(ParseError::UnknownVerb { verb: first.text.to_string(), column: first.column }),
    };
    Ok(cmd)
}

fn parse_build(kind: &str, rest: &[Word<'_>], kind_word: &Word<'_>) -> Result<StudyCommand, ParseError> {
    Ok(match kind {
        "ladder" => {
            let a = Args::expect("build ladder", rest, "x y z height")?;
            StudyCommand::BuildLadder { pos: a.pos(0)?, height: a.dim(3)? }
        }
        "pond" => {
            let a = Args::expect("build pond", rest, "x y z length width depth")?;
            StudyCommand::BuildPond { pos: a.pos(0)?, length: a.dim(3)?, width: a.dim(4)?, depth: a.dim(5)? }
        }
        "castle" | "house" => {
            let command = if kind == "castle" { "build castle" } else { "build house" };
            let a = Args::expect(command, rest, "x y z length width height block_type")?;
            let (pos, length, width, height, block) =
                (a.pos(0)?, a.dim(3)?, a.dim(4)?, a.dim(5)?, a.ident(6, "block type")?);
            if kind == "castle" {
                StudyCommand::BuildCastle { pos, length, width, height, block }
            } else {
                StudyCommand::BuildHouse { pos, length, width, height, block }
            }
        }
        "garden" => {
            let a = Args::expect("build garden", rest, "x y z length width")?;
            StudyCommand::BuildGarden { pos: a.pos(0)?, length: a.dim(3)?, width: a.dim(4)? }
        }
        "pyramid" => {
            let a = Args::expect("build pyramid", rest, "x y z base_size height block_type")?;
            StudyCommand::BuildPyramid {
                pos: a.pos(0)?,
                base: a.dim(3)?,
                height: a.dim(4)?,
                block: a.ident(5, "block type")?,
            }
        }
        _ => {
            return Err(ParseError::InvalidValue {
                what: "structure (ladder, pond, castle, house, garden, pyramid)",
                token: kind_word.text.to_string(),
                column: kind_word.column,
            })
        }
    })
}
