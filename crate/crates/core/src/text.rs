//! Shared machinery for the line-based text formats.
//!
//! All formats are one item per line, whitespace separated, with `#` starting
//! a comment. Errors carry the 1-based line and column of the offending
//! token.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.msg)
    }
}

impl ParseError {
    pub fn new(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }
}

/// A token with its 1-based column.
#[derive(Debug, Clone, Copy)]
pub struct Token<'a> {
    pub col: usize,
    pub text: &'a str,
}

/// Split one line into tokens, dropping everything after `#`.
pub fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        if c == '#' {
            if let Some(s) = start {
                out.push(Token {
                    col: s + 1,
                    text: &line[s..i],
                });
            }
            return out;
        }
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    col: s + 1,
                    text: &line[s..i],
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            col: s + 1,
            text: &line[s..],
        });
    }
    out
}

/// Iterator over non-empty token lines with their line numbers.
pub struct Lines<'a> {
    inner: std::iter::Peekable<std::vec::IntoIter<(usize, Vec<Token<'a>>)>>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        let rows: Vec<(usize, Vec<Token<'a>>)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, tokenize(l)))
            .filter(|(_, toks)| !toks.is_empty())
            .collect();
        Lines {
            inner: rows.into_iter().peekable(),
        }
    }

    pub fn next_line(&mut self) -> Option<(usize, Vec<Token<'a>>)> {
        self.inner.next()
    }

    pub fn peek_keyword(&mut self) -> Option<&str> {
        self.inner.peek().map(|(_, toks)| toks[0].text)
    }
}

/// Expect an exact argument count for a directive line.
pub fn expect_args(
    line: usize,
    toks: &[Token<'_>],
    n: usize,
    usage: &str,
) -> Result<(), ParseError> {
    if toks.len() != n + 1 {
        return Err(ParseError::new(
            line,
            toks[0].col,
            format!("expected `{usage}`, got {} arguments", toks.len() - 1),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_columns_and_comments() {
        let toks = tokenize("  node  a1 Label # trailing");
        assert_eq!(toks.len(), 3);
        assert_eq!(toks[0].text, "node");
        assert_eq!(toks[0].col, 3);
        assert_eq!(toks[2].text, "Label");
        assert!(tokenize("# only comment").is_empty());
    }
}
