//! Tokenizer shared by the native command parser and the compatibility pass.
//!
//! Whitespace separates tokens, except inside `"..."`, `[...]` and `{...}`.
//! A `{` always opens a new token so `~{Tag: 1}` lexes as two tokens.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TokenKind {
    Word,
    /// A brace group; `text` holds the braces too.
    Braces,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
    /// Byte offset into the lexed line.
    pub start: usize,
}

impl Token<'_> {
    pub fn column(&self) -> usize {
        self.start + 1
    }
}

pub(crate) fn lex(line: &str) -> Result<Vec<Token<'_>>, ParseError> {
    let bytes = line.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c == b'{' {
            i = skip_group(line, i, b'{', b'}', "tag block")?;
            tokens.push(Token { text: &line[start..i], kind: TokenKind::Braces, start });
            continue;
        }
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'{' {
            match bytes[i] {
                b'[' => i = skip_group(line, i, b'[', b']', "selector arguments")?,
                b'"' => i = skip_quoted(line, i)?,
                _ => i += 1,
            }
        }
        tokens.push(Token { text: &line[start..i], kind: TokenKind::Word, start });
    }
    Ok(tokens)
}

// Returns the index just past the matching close delimiter.
fn skip_group(line: &str, open_at: usize, open: u8, close: u8, what: &'static str) -> Result<usize, ParseError> {
    let bytes = line.as_bytes();
    let mut depth = 0usize;
    let mut i = open_at;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i = skip_quoted(line, i)?;
                continue;
            }
            b if b == open => depth += 1,
            b if b == close => {
                depth -= 1;
                if depth == 0 {
                    return Ok(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    Err(ParseError::Unterminated { what, column: open_at + 1 })
}

fn skip_quoted(line: &str, quote_at: usize) -> Result<usize, ParseError> {
    let bytes = line.as_bytes();
    let mut i = quote_at + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'"' => return Ok(i + 1),
            _ => i += 1,
        }
    }
    Err(ParseError::Unterminated { what: "string", column: quote_at + 1 })
}

/// Byte offset of a trailing `# comment` (a `#` preceded by whitespace and
/// outside quotes or groups), if any.
pub(crate) fn comment_start(line: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if in_quote {
            match c {
                b'\\' => i += 1,
                b'"' => in_quote = false,
                _ => {}
            }
        } else {
            match c {
                b'"' => in_quote = true,
                b'[' | b'{' => depth += 1,
                b']' | b'}' => depth -= 1,
                b'#' if depth <= 0 && i > 0 && bytes[i - 1].is_ascii_whitespace() => return Some(i),
                _ => {}
            }
        }
        i += 1;
    }
    None
}

/// Splits a word like `~~1~` into its coordinate parts (`~`, `~1`, `~`).
pub(crate) fn split_coordinates(word: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    for (i, c) in word.char_indices() {
        if c == '~' && i > start {
            parts.push(&word[start..i]);
            start = i;
        }
    }
    if start < word.len() {
        parts.push(&word[start..]);
    }
    parts
}
