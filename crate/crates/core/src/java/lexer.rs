//! Tolerant Java tokenizer.
//!
//! Only distinguishes what brace matching and declaration recognition need:
//! identifiers, single punctuation characters, and opaque literals. Comments
//! and whitespace are dropped, but every token keeps its byte span so callers
//! can slice the original text.

use alloc::vec::Vec;

use super::SplitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    /// Identifier or keyword.
    Ident,
    /// A single punctuation character.
    Punct(char),
    /// String, text block, char or numeric literal.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        &src[self.start..self.end]
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct(c)
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }

    pub fn is_word(&self, src: &str, word: &str) -> bool {
        self.kind == TokenKind::Ident && self.text(src) == word
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SplitError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'*') {
            let start = i;
            i += 2;
            loop {
                if i + 1 >= bytes.len() {
                    return Err(SplitError::UnterminatedLiteral { offset: start });
                }
                if bytes[i] == b'*' && bytes[i + 1] == b'/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        if b == b'"' {
            let start = i;
            if bytes[i..].starts_with(b"\"\"\"") {
                i += 3;
                loop {
                    if i >= bytes.len() {
                        return Err(SplitError::UnterminatedLiteral { offset: start });
                    }
                    if bytes[i] == b'\\' {
                        i += 2;
                        continue;
                    }
                    if bytes[i..].starts_with(b"\"\"\"") {
                        i += 3;
                        break;
                    }
                    i += 1;
                }
            } else {
                i = scan_quoted(bytes, i, b'"')?;
            }
            tokens.push(Token { kind: TokenKind::Literal, start, end: i });
            continue;
        }
        if b == b'\'' {
            let start = i;
            i = scan_quoted(bytes, i, b'\'')?;
            tokens.push(Token { kind: TokenKind::Literal, start, end: i });
            continue;
        }
        if b.is_ascii_digit() {
            let start = i;
            while i < bytes.len()
                && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.')
            {
                i += 1;
            }
            tokens.push(Token { kind: TokenKind::Literal, start, end: i });
            continue;
        }
        // Non-ASCII or ASCII: decode one char.
        let c = src[i..].chars().next().unwrap_or('\u{fffd}');
        if is_ident_start(c) {
            let start = i;
            for (off, ch) in src[i..].char_indices() {
                if !is_ident_continue(ch) {
                    i = start + off;
                    break;
                }
                i = start + off + ch.len_utf8();
            }
            tokens.push(Token { kind: TokenKind::Ident, start, end: i });
            continue;
        }
        let len = c.len_utf8();
        tokens.push(Token { kind: TokenKind::Punct(c), start: i, end: i + len });
        i += len;
    }
    Ok(tokens)
}

fn scan_quoted(bytes: &[u8], start: usize, quote: u8) -> Result<usize, SplitError> {
    let mut i = start + 1;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'\n' => break,
            c if c == quote => return Ok(i + 1),
            _ => i += 1,
        }
    }
    Err(SplitError::UnterminatedLiteral { offset: start })
}
