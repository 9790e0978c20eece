//! Tokenizer for the system and expression grammar.

use rug::ops::Pow;
use rug::{Integer, Rational};

use super::DslError;

#[derive(Clone, Debug, PartialEq)]
pub(super) enum Tok {
    Ident(String),
    Number(Rational),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
pub(super) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: tline, column: tcol });
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let int_part: String = chars[start..i].iter().collect();
            let mut value = Rational::from(Integer::from_str_radix(&int_part, 10).expect("digits"));
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                let fstart = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if fstart == i {
                    return Err(DslError::Syntax {
                        line: tline,
                        column: col + (i - start),
                        message: "expected digits after decimal point".into(),
                    });
                }
                let frac: String = chars[fstart..i].iter().collect();
                let num = Integer::from_str_radix(&frac, 10).expect("digits");
                let den = Integer::from(10).pow(frac.len() as u32);
                value += Rational::from((num, den));
            }
            col += i - start;
            out.push(Token { tok: Tok::Number(value), line: tline, column: tcol });
            continue;
        }
        if "+-*/^(){};,:=".contains(c) {
            out.push(Token { tok: Tok::Sym(c), line: tline, column: tcol });
            i += 1;
            col += 1;
            continue;
        }
        return Err(DslError::Syntax { line: tline, column: tcol, message: format!("unexpected character '{c}'") });
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}
