//! Tokens of the subset. Identifiers keep their spelling; keywords are
//! matched case-insensitively by the parser.

use crate::diagnostic::{ImportDiagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Colon,
    DoubleColon,
    Semi,
    Dot,
    Arrow,
    /// `<->`
    BiArrow,
    Comma,
    LParen,
    RParen,
    /// Any other punctuation, kept so the parser can skip unsupported text.
    Other(char),
    /// `{** ... **}`
    Annex,
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub at: Span,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
    }
}

pub fn lex(text: &str) -> (Vec<Token>, Vec<ImportDiagnostic>) {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };

    while i < chars.len() {
        let c = chars[i];
        let at = Span { line, column: col };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
        } else if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
        } else if c == '{' && next == Some('*') && chars.get(i + 2) == Some(&'*') {
            let mut closed = false;
            while i < chars.len() {
                if chars[i] == '*' && chars.get(i + 1) == Some(&'*') && chars.get(i + 2) == Some(&'}') {
                    for _ in 0..3 {
                        advance(&mut i, &mut line, &mut col);
                    }
                    closed = true;
                    break;
                }
                advance(&mut i, &mut line, &mut col);
            }
            if !closed {
                diags.push(ImportDiagnostic::error(at, "unterminated annex block `{** ... **}`"));
            }
            tokens.push(Token { tok: Tok::Annex, at });
        } else if c.is_alphabetic() || c == '_' {
            let mut word = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                word.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            tokens.push(Token { tok: Tok::Ident(word), at });
        } else if c.is_ascii_digit() {
            // numbers only occur inside unsupported property text
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            tokens.push(Token { tok: Tok::Other('0'), at });
        } else {
            let (tok, width) = match (c, next) {
                (':', Some(':')) => (Tok::DoubleColon, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('<', Some('-')) if chars.get(i + 2) == Some(&'>') => (Tok::BiArrow, 3),
                (':', _) => (Tok::Colon, 1),
                (';', _) => (Tok::Semi, 1),
                ('.', _) => (Tok::Dot, 1),
                (',', _) => (Tok::Comma, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                (other, _) => (Tok::Other(other), 1),
            };
            for _ in 0..width {
                advance(&mut i, &mut line, &mut col);
            }
            tokens.push(Token { tok, at });
        }
    }
    tokens.push(Token { tok: Tok::Eof, at: Span { line, column: col } });
    (tokens, diags)
}
