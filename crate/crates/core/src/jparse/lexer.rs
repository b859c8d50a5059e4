//! Lossless lexer for the supported Java subset.
//!
//! Whitespace and comments are not tokens; they survive as the bytes between
//! consecutive token spans, so the original file can always be rebuilt from
//! the token stream plus the source.

use serde::Serialize;

use super::{LexError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Literal,
    Operator,
    Punctuation,
    /// `$n$` template hole; only produced in [`LexMode::Template`].
    Hole(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.text == text && !matches!(self.kind, TokenKind::Literal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexMode {
    Java,
    Template,
}

const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while",
];

// Longest match first. `>` is deliberately never merged into `>>`/`>>>` so that
// nested generic closers lex uniformly; the parser reassembles shift operators
// from adjacent `>` tokens.
const OPERATORS: &[&str] = &[
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "<<", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "?",
    ":", "&", "|", "^", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@",
];

const PUNCTUATION: &[&str] = &["(", ")", "{", "}", "[", "]", ";", ",", ".", "@", "...", "::"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    tokenize_with(source, LexMode::Java)
}

pub fn tokenize_with(source: &str, mode: LexMode) -> Result<Vec<Token>, LexError> {
    Lexer { src: source, bytes: source.as_bytes(), pos: 0, mode }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    mode: LexMode,
}

impl Lexer<'_> {
    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            if self.pos >= self.bytes.len() {
                return Ok(out);
            }
            out.push(self.next_token()?);
        }
    }

    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        while let Some(b) = self.peek(0) {
            match b {
                b' ' | b'\t' | b'\n' | b'\r' | b'\x0c' => self.pos += 1,
                b'/' if self.peek(1) == Some(b'/') => {
                    while let Some(c) = self.peek(0) {
                        if c == b'\n' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                b'/' if self.peek(1) == Some(b'*') => {
                    let start = self.pos;
                    match self.src[self.pos + 2..].find("*/") {
                        Some(end) => self.pos += end + 4,
                        None => {
                            return Err(LexError::new(start, "unterminated block comment"));
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        let start = self.pos;
        let ch = self.src[start..].chars().next().expect("pos is in bounds");

        if self.mode == LexMode::Template && ch == '$' {
            if let Some(tok) = self.try_hole(start)? {
                return Ok(tok);
            }
        }
        if ch.is_alphabetic() || ch == '_' || ch == '$' {
            while let Some(c) = self.src[self.pos..].chars().next() {
                if c.is_alphanumeric() || c == '_' || c == '$' {
                    self.pos += c.len_utf8();
                } else {
                    break;
                }
            }
            let text = &self.src[start..self.pos];
            let kind = match text {
                "true" | "false" | "null" => TokenKind::Literal,
                t if is_keyword(t) => TokenKind::Keyword,
                _ => TokenKind::Identifier,
            };
            return Ok(self.token(kind, start));
        }
        if ch.is_ascii_digit() || (ch == '.' && self.peek(1).is_some_and(|b| b.is_ascii_digit())) {
            self.number();
            return Ok(self.token(TokenKind::Literal, start));
        }
        if ch == '"' {
            if self.src[start..].starts_with("\"\"\"") {
                self.text_block(start)?;
            } else {
                self.quoted(b'"', start, "unterminated string literal")?;
            }
            return Ok(self.token(TokenKind::Literal, start));
        }
        if ch == '\'' {
            self.quoted(b'\'', start, "unterminated char literal")?;
            return Ok(self.token(TokenKind::Literal, start));
        }
        // Never fuse `>` into shifts, but `>=` is safe: a generic closer is never followed by `=`
        // in the supported subset.
        let rest = &self.src[start..];
        if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            self.pos += op.len();
            let kind = if PUNCTUATION.contains(op) { TokenKind::Punctuation } else { TokenKind::Operator };
            return Ok(self.token(kind, start));
        }
        Err(LexError::new(start, format!("illegal character {ch:?}")))
    }

    fn token(&self, kind: TokenKind, start: usize) -> Token {
        Token { kind, text: self.src[start..self.pos].to_string(), span: Span::new(start, self.pos) }
    }

    fn try_hole(&mut self, start: usize) -> Result<Option<Token>, LexError> {
        let rest = &self.bytes[start + 1..];
        let body_len = rest.iter().take_while(|b| b.is_ascii_alphanumeric() || **b == b'_').count();
        if rest.get(body_len) != Some(&b'$') {
            return Ok(None);
        }
        let body = &self.src[start + 1..start + 1 + body_len];
        let n: u32 = match body.parse() {
            Ok(n) if n > 0 => n,
            Ok(_) => return Err(LexError::new(start, "hole numbers start at 1")),
            Err(_) => return Err(LexError::new(start, format!("non-numeric hole `${body}$`"))),
        };
        self.pos = start + body_len + 2;
        Ok(Some(self.token(TokenKind::Hole(n), start)))
    }

    fn number(&mut self) {
        if self.peek(0) == Some(b'0') && matches!(self.peek(1), Some(b'x' | b'X' | b'b' | b'B')) {
            self.pos += 2;
            while self.peek(0).is_some_and(|b| b.is_ascii_hexdigit() || b == b'_') {
                self.pos += 1;
            }
        } else {
            let digits = |lx: &mut Self| {
                while lx.peek(0).is_some_and(|b| b.is_ascii_digit() || b == b'_') {
                    lx.pos += 1;
                }
            };
            digits(self);
            if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
                digits(self);
            } else if self.peek(0) == Some(b'.') && !self.peek(1).is_some_and(|b| b.is_ascii_alphabetic()) {
                // `1.` is a double literal; `1.foo` is not valid Java anyway.
                self.pos += 1;
            }
            if matches!(self.peek(0), Some(b'e' | b'E')) {
                let sign = usize::from(matches!(self.peek(1), Some(b'+' | b'-')));
                if self.peek(1 + sign).is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1 + sign;
                    digits(self);
                }
            }
        }
        if matches!(self.peek(0), Some(b'l' | b'L' | b'f' | b'F' | b'd' | b'D')) {
            self.pos += 1;
        }
    }

    fn quoted(&mut self, quote: u8, start: usize, msg: &str) -> Result<(), LexError> {
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(LexError::new(start, msg)),
                Some(b'\\') => self.pos += 2,
                Some(b) if b == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn text_block(&mut self, start: usize) -> Result<(), LexError> {
        self.pos += 3;
        loop {
            match self.peek(0) {
                None => return Err(LexError::new(start, "unterminated text block")),
                Some(b'\\') => self.pos += 2,
                Some(b'"') if self.src[self.pos..].starts_with("\"\"\"") => {
                    self.pos += 3;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }
}
