//! Line-oriented `.crn` reader.
//!
//! ```text
//! # comment
//! driven S: (0,0) (1,1) (2,0)
//! 0 -> X : 2
//! 2X -> X : 1
//! ```

use thiserror::Error;

use super::{DrivenSignal, ModelError, Reaction, ReactionNetwork, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self { src, pos: 0, line }
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.pos + 1, message: message.into() }
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: pos + 1, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if f(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => Ok(self.take_while(|c| c.is_ascii_alphanumeric() || c == '_')),
            _ => Err(self.err("expected species name")),
        }
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let tok = self.take_while(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+'));
        tok.parse::<f64>().map_err(|_| self.err_at(start, format!("invalid number `{tok}`")))
    }
}

#[derive(Default)]
struct Symbols {
    names: Vec<String>,
}

impl Symbols {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            i
        } else {
            self.names.push(name.to_string());
            self.names.len() - 1
        }
    }
}

fn parse_side(cur: &mut Cursor<'_>, syms: &mut Symbols) -> Result<Vec<(usize, u32)>, ParseError> {
    cur.skip_ws();
    // a lone `0` is the empty side; `0X` would be a zero coefficient
    let rest = &cur.src[cur.pos..];
    if rest.starts_with('0') && !rest[1..].starts_with(|c: char| c.is_ascii_alphanumeric() || c == '_') {
        cur.pos += 1;
        return Ok(Vec::new());
    }
    let mut terms = Vec::new();
    loop {
        cur.skip_ws();
        let start = cur.pos;
        let digits = cur.take_while(|c| c.is_ascii_digit());
        let coeff = if digits.is_empty() {
            1
        } else {
            digits.parse::<u32>().map_err(|_| cur.err_at(start, "stoichiometric coefficient too large"))?
        };
        if coeff == 0 {
            return Err(cur.err_at(start, "stoichiometric coefficient must be positive"));
        }
        let name = cur.ident()?;
        terms.push((syms.intern(name), coeff));
        if !cur.eat("+") {
            break;
        }
    }
    Ok(terms)
}

fn parse_reaction(cur: &mut Cursor<'_>, syms: &mut Symbols) -> Result<Reaction, ParseError> {
    let lhs = parse_side(cur, syms)?;
    cur.expect("->")?;
    let rhs = parse_side(cur, syms)?;
    cur.expect(":")?;
    cur.skip_ws();
    let start = cur.pos;
    let tok = cur.take_while(|c| !c.is_whitespace());
    let rate = match tok.parse::<i64>() {
        Ok(k) if k >= 1 => k,
        _ => return Err(cur.err_at(start, format!("rate must be a positive integer, got `{tok}`"))),
    };
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input"));
    }
    Reaction::new(&lhs, &rhs, rate).map_err(|e| cur.err_at(0, e.to_string()))
}

fn parse_driven(cur: &mut Cursor<'_>, syms: &mut Symbols) -> Result<(usize, Waveform), ParseError> {
    let name = cur.ident()?;
    let species = syms.intern(name);
    cur.expect(":")?;
    let mut points = Vec::new();
    while !cur.at_end() {
        cur.expect("(")?;
        let t = cur.number()?;
        cur.expect(",")?;
        let v = cur.number()?;
        cur.expect(")")?;
        points.push((t, v));
    }
    let wf = Waveform::new(points).map_err(|e| cur.err_at(0, e.to_string()))?;
    Ok((species, wf))
}

/// Parses the `.crn` format. Species are numbered in order of first mention.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, ParseError> {
    let mut syms = Symbols::default();
    let mut reactions = Vec::new();
    let mut driven = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor::new(line, lineno + 1);
        if cur.at_end() {
            continue;
        }
        if line.contains("->") {
            reactions.push(parse_reaction(&mut cur, &mut syms)?);
            continue;
        }
        cur.skip_ws();
        let start = cur.pos;
        let word = cur.ident()?;
        if word != "driven" {
            return Err(cur.err_at(start, format!("unknown directive `{word}`")));
        }
        let (species, waveform) = parse_driven(&mut cur, &mut syms)?;
        driven.push(DrivenSignal { species, waveform });
    }
    ReactionNetwork::new(syms.names, reactions, driven).map_err(|e: ModelError| ParseError {
        line: 0,
        column: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt2_network() {
        let net = parse_network("0 -> X : 2\n2X -> X : 1").unwrap();
        assert_eq!(net.species_names(), &["X".to_string()]);
        assert_eq!(net.reactions().len(), 2);
    }

    #[test]
    fn first_mention_order() {
        let net = parse_network("X + Y -> 2Y : 3").unwrap();
        assert_eq!(net.species_names(), &["X".to_string(), "Y".to_string()]);
        assert_eq!(net.reactions()[0].products, vec![(1, 2)]);
    }

    #[test]
    fn zero_rate_rejected() {
        let err = parse_network("X -> Y : 0").unwrap_err();
        assert!(err.message.contains("positive integer"), "{err}");
        assert_eq!(err.line, 1);
        assert_eq!(err.column, 10);
    }

    #[test]
    fn fractional_and_negative_rates_rejected() {
        assert!(parse_network("X -> Y : 1.5").is_err());
        assert!(parse_network("X -> Y : -2").is_err());
    }

    #[test]
    fn unknown_directive() {
        let err = parse_network("X -> Y : 1\ninit X: 1").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("unknown directive"));
    }

    #[test]
    fn comments_and_whitespace() {
        let net = parse_network("# header\n\n  2 X->X:1   # trailing\n0->  X :2").unwrap();
        assert_eq!(net.reactions().len(), 2);
        assert_eq!(net.reactions()[0].reactants, vec![(0, 2)]);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_network("X -> : 1").unwrap_err();
        assert_eq!((err.line, err.column), (1, 6));
        let err = parse_network("X + -> Y : 1").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn driven_directive() {
        let net = parse_network("driven C: (0, 0) (1, 1)\nC + X -> C + Y : 1").unwrap();
        assert_eq!(net.driven().len(), 1);
        assert_eq!(net.driven()[0].waveform.value(0.5), 0.5);
        assert!(parse_network("driven C: (1, 0) (0, 1)").is_err());
    }

    #[test]
    fn pure_inflow_allowed_empty_rejected() {
        assert!(parse_network("0 -> X : 1").is_ok());
        assert!(parse_network("0 -> 0 : 1").is_err());
    }
}
