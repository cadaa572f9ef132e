//! Text formats: polynomial expressions and chain-definition documents.
//!
//! A chain document has three sections, in this order:
//!
//! ```text
//! [generators]
//! l1 l2 l3 t11 t12 t13 t22 t23
//!
//! [brackets]
//! l1 l2 = i*l3
//! l1 t23 = -i*t11 - 2*i*t22
//!
//! [subalgebra]
//! l1 l2 l3
//! ```
//!
//! `#` starts a comment. Omitted brackets are zero.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::chain::{ChainSpec, LieAlgebraSpec};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{GaussianRational, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '=' => Some(Tok::Eq),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, line, col });
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Num(s.parse().unwrap()), line, col });
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_continue(chars[i]) {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line, col });
        } else {
            return Err(Error::Syntax { line, col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct ExprParser<'a> {
    toks: &'a [Token],
    pos: usize,
    names: &'a HashMap<&'a str, usize>,
    nvars: usize,
    end: (usize, usize),
}

impl<'a> ExprParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.line, t.col)).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax { line, col, msg: msg.into() })
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                -&self.term()?
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.power()?;
                    acc = acc.checked_mul(&rhs)?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.here();
                    let rhs = self.power()?;
                    let c = match (rhs.homogeneous_degree(), rhs.leading_term()) {
                        (Some(0), Some((_, c))) => c.clone(),
                        _ => {
                            return Err(Error::Syntax {
                                line: at.0,
                                col: at.1,
                                msg: "divisor must be a nonzero constant".into(),
                            })
                        }
                    };
                    acc = acc.scale(&c.inv().unwrap());
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.peek().cloned() {
                Some(Tok::Num(e)) => {
                    self.pos += 1;
                    let e = e.to_u32().filter(|&e| e <= 255);
                    match e {
                        Some(e) => {
                            let mut out = Polynomial::one(self.nvars);
                            for _ in 0..e {
                                out = out.checked_mul(&base)?;
                            }
                            Ok(out)
                        }
                        None => self.err("exponent out of range"),
                    }
                }
                _ => self.err("expected an integer exponent"),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let Some(t) = self.toks.get(self.pos).cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match t.tok {
            Tok::Num(n) => Ok(Polynomial::constant(self.nvars, GaussianRational::real(Rational::from_integer(n)))),
            Tok::Ident(name) if name == "i" => Ok(Polynomial::constant(self.nvars, GaussianRational::i())),
            Tok::Ident(name) => match self.names.get(name.as_str()) {
                Some(&k) => Ok(Polynomial::var(self.nvars, k)),
                None => Err(Error::UnknownGenerator { name, line: t.line, col: t.col }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            other => {
                self.pos -= 1;
                self.err(format!("unexpected token {other:?}"))
            }
        }
    }
}

fn parse_expr_tokens(
    toks: &[Token],
    names: &HashMap<&str, usize>,
    nvars: usize,
    end: (usize, usize),
) -> Result<Polynomial> {
    let mut p = ExprParser { toks, pos: 0, names, nvars, end };
    let out = p.expr()?;
    if p.pos != toks.len() {
        return p.err("trailing input");
    }
    Ok(out)
}

fn name_index(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect()
}

/// Parses an expression such as `5/3*q1*qm1 - (1/2+i)*q0^2` over the given
/// coordinate names. `i` is the imaginary unit.
pub fn parse_polynomial(text: &str, names: &[String]) -> Result<Polynomial> {
    let toks = tokenize(text, 1, 1)?;
    let idx = name_index(names);
    parse_expr_tokens(&toks, &idx, names.len(), (1, text.chars().count() + 1))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    None,
    Generators,
    Brackets,
    Subalgebra,
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses and validates a chain-definition document.
pub fn parse_chain_document(text: &str, name: &str) -> Result<ChainSpec> {
    let mut section = Section::None;
    let mut seen = [false; 3];
    let mut generators: Vec<String> = Vec::new();
    let mut gen_pos: Vec<(usize, usize)> = Vec::new();
    let mut bracket_lines: Vec<(usize, usize, Vec<Token>)> = Vec::new();
    let mut sub_tokens: Vec<Token> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let body = strip_comment(raw);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col0 = body.len() - body.trim_start().len() + 1;
        if trimmed.starts_with('[') {
            let next = match trimmed {
                "[generators]" => Section::Generators,
                "[brackets]" => Section::Brackets,
                "[subalgebra]" => Section::Subalgebra,
                _ => {
                    return Err(Error::Syntax { line: line_no, col: col0, msg: format!("unknown section `{trimmed}`") })
                }
            };
            let slot = next as usize - 1;
            if seen[slot] {
                return Err(Error::Syntax { line: line_no, col: col0, msg: format!("duplicate section `{trimmed}`") });
            }
            if next != Section::Generators && !seen[0] {
                return Err(Error::Syntax { line: line_no, col: col0, msg: "`[generators]` must come first".into() });
            }
            seen[slot] = true;
            section = next;
            continue;
        }
        match section {
            Section::None => {
                return Err(Error::Syntax { line: line_no, col: col0, msg: "content outside of a section".into() });
            }
            Section::Generators => {
                for t in tokenize(body, line_no, 1)? {
                    match t.tok {
                        Tok::Ident(n) if n != "i" => {
                            if generators.contains(&n) {
                                return Err(Error::Syntax {
                                    line: t.line,
                                    col: t.col,
                                    msg: format!("duplicate generator `{n}`"),
                                });
                            }
                            generators.push(n);
                            gen_pos.push((t.line, t.col));
                        }
                        _ => {
                            return Err(Error::Syntax {
                                line: t.line,
                                col: t.col,
                                msg: "expected a generator name".into(),
                            })
                        }
                    }
                }
            }
            Section::Brackets => {
                let toks = tokenize(body, line_no, 1)?;
                bracket_lines.push((line_no, body.chars().count() + 1, toks));
            }
            Section::Subalgebra => sub_tokens.extend(tokenize(body, line_no, 1)?),
        }
    }

    if !seen[0] || generators.is_empty() {
        let line = text.lines().count().max(1);
        return Err(Error::Syntax { line, col: 1, msg: "missing or empty `[generators]` section".into() });
    }
    if !seen[2] {
        let line = text.lines().count().max(1);
        return Err(Error::Syntax { line, col: 1, msg: "missing `[subalgebra]` section".into() });
    }
    let _ = gen_pos;
    let n = generators.len();
    let idx = name_index(&generators);

    let mut brackets: BTreeMap<(usize, usize), Vec<(usize, GaussianRational)>> = BTreeMap::new();
    for (line_no, end_col, toks) in &bracket_lines {
        let lookup = |t: &Token| -> Result<usize> {
            match &t.tok {
                Tok::Ident(name) => idx.get(name.as_str()).copied().ok_or_else(|| Error::UnknownGenerator {
                    name: name.clone(),
                    line: t.line,
                    col: t.col,
                }),
                _ => Err(Error::Syntax { line: t.line, col: t.col, msg: "expected a generator name".into() }),
            }
        };
        if toks.len() < 3 {
            return Err(Error::Syntax { line: *line_no, col: 1, msg: "expected `a b = expression`".into() });
        }
        let a = lookup(&toks[0])?;
        let b = lookup(&toks[1])?;
        if toks[2].tok != Tok::Eq {
            return Err(Error::Syntax { line: toks[2].line, col: toks[2].col, msg: "expected `=`".into() });
        }
        if a == b {
            return Err(Error::Syntax {
                line: toks[0].line,
                col: toks[0].col,
                msg: "bracket of a generator with itself".into(),
            });
        }
        let rhs_at = toks.get(3).map(|t| (t.line, t.col)).unwrap_or((*line_no, *end_col));
        let rhs = parse_expr_tokens(&toks[3..], &idx, n, (*line_no, *end_col))?;
        if !rhs.is_zero() && rhs.homogeneous_degree() != Some(1) {
            return Err(Error::Syntax {
                line: rhs_at.0,
                col: rhs_at.1,
                msg: "bracket must be linear in the generators".into(),
            });
        }
        let (key, sign) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
        if brackets.contains_key(&key) {
            return Err(Error::Syntax { line: toks[0].line, col: toks[0].col, msg: "duplicate bracket".into() });
        }
        let terms: Vec<(usize, GaussianRational)> = rhs
            .terms()
            .rev()
            .map(|(m, c)| {
                let k = m.exponents().iter().position(|&e| e == 1).unwrap();
                (k, c.scale_int(sign))
            })
            .collect();
        brackets.insert(key, terms);
    }

    let mut sub = Vec::new();
    for t in &sub_tokens {
        match &t.tok {
            Tok::Ident(name) => match idx.get(name.as_str()) {
                Some(&k) => sub.push(k),
                None => return Err(Error::UnknownGenerator { name: name.clone(), line: t.line, col: t.col }),
            },
            _ => return Err(Error::Syntax { line: t.line, col: t.col, msg: "expected a generator name".into() }),
        }
    }

    let algebra = LieAlgebraSpec::new(name, generators, brackets)?;
    let report = algebra.validate_structure();
    if !report.passed() {
        let g = algebra.generators();
        return Err(Error::Jacobi {
            triples: report
                .failures
                .iter()
                .map(|f| (g[f.triple.0].clone(), g[f.triple.1].clone(), g[f.triple.2].clone()))
                .collect(),
        });
    }
    ChainSpec::new(algebra, sub)
}
