// SPDX-License-Identifier: Apache-2.0

use super::ast::Loc;
use super::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Float {
        value: f64,
        single: bool,
    },
    Punct(&'static str),
    /// Text of a `#pragma HLS ...` line after the `HLS` keyword.
    Pragma(String),
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

const PUNCTS: &[&str] = &[
    "::", "++", "--", "+=", "-=", "*=", "/=", "%=", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "=",
    "!", "&", "(", ")", "[", "]", "{", "}", ";", ",", ":",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    let mut at_line_start = true;

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
                at_line_start = true;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            bump!();
            continue;
        }
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let loc = Loc::new(line, col);
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            loop {
                if i >= chars.len() {
                    return Err(ParseError::Syntax { loc, message: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars.get(i + 1) == Some(&'/') {
                    bump!();
                    bump!();
                    break;
                }
                bump!();
            }
            continue;
        }
        if c == '#' {
            if !at_line_start {
                return Err(ParseError::Syntax { loc, message: "stray `#`".into() });
            }
            let start = i;
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let mut words = text[1..].split_whitespace();
            match (words.next(), words.next()) {
                (Some("pragma"), Some(w)) if w.eq_ignore_ascii_case("hls") => {
                    let rest: Vec<&str> = words.collect();
                    out.push(Token { tok: Tok::Pragma(rest.join(" ")), loc });
                }
                _ => return Err(ParseError::Unsupported { loc, construct: format!("preprocessor line `{}`", text.trim()) }),
            }
            continue;
        }
        at_line_start = false;
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), loc });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut is_float = false;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                if chars[i] == '.' {
                    is_float = true;
                }
                bump!();
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                is_float = true;
                bump!();
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump!();
                }
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump!();
                }
            }
            let text: String = chars[start..i].iter().collect();
            let mut single = false;
            if i < chars.len() && (chars[i] == 'f' || chars[i] == 'F') && is_float {
                single = true;
                bump!();
            }
            // Integer suffixes are accepted and dropped.
            while i < chars.len() && matches!(chars[i], 'u' | 'U' | 'l' | 'L') && !is_float {
                bump!();
            }
            if i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                return Err(ParseError::Syntax { loc, message: format!("malformed number `{text}{}`", chars[i]) });
            }
            let tok = if is_float {
                let value =
                    text.parse::<f64>().map_err(|_| ParseError::Syntax { loc, message: format!("malformed number `{text}`") })?;
                Tok::Float { value, single }
            } else {
                let value = text
                    .parse::<i64>()
                    .map_err(|_| ParseError::Syntax { loc, message: format!("integer literal `{text}` out of range") })?;
                Tok::Int(value)
            };
            out.push(Token { tok, loc });
            continue;
        }
        if c == '"' || c == '\'' {
            return Err(ParseError::Unsupported { loc, construct: "string or character literal".into() });
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(p) = PUNCTS.iter().find(|p| rest.starts_with(**p)) else {
            return Err(ParseError::Syntax { loc, message: format!("unexpected character `{c}`") });
        };
        for _ in 0..p.len() {
            bump!();
        }
        out.push(Token { tok: Tok::Punct(p), loc });
    }
    out.push(Token { tok: Tok::Eof, loc: Loc::new(line, col) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pragma_lines_become_single_tokens() {
        let toks = tokenize("  #pragma HLS pipeline II=1\nx").unwrap();
        assert_eq!(toks[0].tok, Tok::Pragma("pipeline II=1".into()));
        assert_eq!(toks[0].loc.key(), (1, 3));
        assert_eq!(toks[1].tok, Tok::Ident("x".into()));
    }

    #[test]
    fn include_is_unsupported() {
        assert!(matches!(tokenize("#include <stdio.h>\n"), Err(ParseError::Unsupported { .. })));
    }

    #[test]
    fn numbers() {
        let toks = tokenize("3 2.5f 1e-3 7u").unwrap();
        assert_eq!(toks[0].tok, Tok::Int(3));
        assert_eq!(toks[1].tok, Tok::Float { value: 2.5, single: true });
        assert_eq!(toks[2].tok, Tok::Float { value: 1e-3, single: false });
        assert_eq!(toks[3].tok, Tok::Int(7));
    }
}
