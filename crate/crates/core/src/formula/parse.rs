//! Recursive-descent parser for the ASCII formula grammar.
//!
//! Precedence, loosest first: `->` (right-assoc), `|`, `&`, `U`/`R`
//! (right-assoc), unary operators. Bounds are written `[<=x]` or `[>x]`,
//! optionally with a coordinate suffix `[<=x@2]`.

use super::{Formula, Prop, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(u32),
    Not,
    And,
    Or,
    Implies,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Le,
    Gt,
    At,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'!' => Some(Tok::Not),
            b'&' => Some(Tok::And),
            b'|' => Some(Tok::Or),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b'>' => Some(Tok::Gt),
            b'@' => Some(Tok::At),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, start));
            i += 1;
            continue;
        }
        if src[i..].starts_with("->") {
            out.push((Tok::Implies, start));
            i += 2;
        } else if src[i..].starts_with("<=") {
            out.push((Tok::Le, start));
            i += 2;
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse().map_err(|_| ParseError {
                pos: start,
                msg: "number out of range".into(),
            })?;
            out.push((Tok::Num(n), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            return Err(ParseError {
                pos: start,
                msg: format!("unexpected character '{}'", src[start..].chars().next().unwrap()),
            });
        }
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum BoundKind {
    Le,
    Gt,
}

struct Bound {
    kind: BoundKind,
    var: Var,
    coord: u32,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

const KEYWORDS: &[&str] = &["X", "F", "G", "U", "R", "tt", "ff"];

/// Parses a formula and expands all derived operators.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0 };
    let f = p.implication()?;
    match p.peek() {
        Tok::Eof => Ok(f),
        t => Err(p.error(format!("unexpected token {t:?}"))),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError { pos: self.pos(), msg: msg.into() }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {t:?}, found {:?}", self.peek())))
        }
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == name)
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.binary_temporal()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.binary_temporal()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.unary()?;
        let until = if self.is_ident("U") {
            true
        } else if self.is_ident("R") {
            false
        } else {
            return Ok(lhs);
        };
        self.bump();
        let bound = self.opt_bound()?;
        let rhs = self.binary_temporal()?;
        Ok(match (until, bound) {
            (true, None) => Formula::until(lhs, rhs),
            (false, None) => Formula::release(lhs, rhs),
            (true, Some(b)) => expand_until(lhs, rhs, b),
            (false, Some(b)) => expand_release(lhs, rhs, b),
        })
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Not => Ok(self.unary()?.negate()),
            Tok::LParen => {
                let f = self.implication()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            Tok::At => match self.bump() {
                Tok::Ident(s) if s == "r" => Ok(Formula::Atom(Prop::Reserved)),
                _ => Err(ParseError { pos, msg: "expected '@r'".into() }),
            },
            Tok::Ident(name) => match name.as_str() {
                "X" => Ok(Formula::next(self.unary()?)),
                "F" => {
                    let bound = self.opt_bound()?;
                    let body = self.unary()?;
                    Ok(match bound {
                        None => Formula::eventually(body),
                        Some(b) => expand_eventually(body, b),
                    })
                }
                "G" => {
                    let bound = self.opt_bound()?;
                    let body = self.unary()?;
                    Ok(match bound {
                        None => Formula::always(body),
                        Some(b) => expand_always(body, b),
                    })
                }
                "tt" => Ok(Formula::tt()),
                "ff" => Ok(Formula::ff()),
                "U" | "R" => Err(ParseError { pos, msg: format!("'{name}' needs a left operand") }),
                _ => self.atom(name, pos),
            },
            t => Err(ParseError { pos, msg: format!("unexpected token {t:?}") }),
        }
    }

    fn atom(&mut self, name: String, pos: usize) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::At {
            self.bump();
            return match (name.as_str(), self.bump()) {
                ("p", Tok::Num(i)) if i > 0 => Ok(Formula::Atom(Prop::Color(i))),
                _ => Err(ParseError { pos, msg: "only 'p@<i>' may carry a coordinate".into() }),
            };
        }
        if name == "kappa" {
            return Ok(Formula::kappa(1));
        }
        if let Some(rest) = name.strip_prefix("kappa") {
            if let Ok(i) = rest.parse::<u32>() {
                if i == 0 {
                    return Err(ParseError { pos, msg: "kappa indices start at 1".into() });
                }
                return Ok(Formula::kappa(i));
            }
        }
        Ok(Formula::atom(name))
    }

    fn opt_bound(&mut self) -> Result<Option<Bound>, ParseError> {
        if *self.peek() != Tok::LBracket {
            return Ok(None);
        }
        self.bump();
        let kind = match self.bump() {
            Tok::Le => BoundKind::Le,
            Tok::Gt => BoundKind::Gt,
            _ => return Err(self.error("expected '<=' or '>' in bound")),
        };
        let var = match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Var(s)
            }
            _ => return Err(self.error("expected a variable in bound")),
        };
        let mut coord = 1;
        if *self.peek() == Tok::At {
            self.bump();
            coord = match self.bump() {
                Tok::Num(n) if n > 0 => n,
                _ => return Err(self.error("expected a positive coordinate after '@'")),
            };
        }
        self.expect(Tok::RBracket)?;
        Ok(Some(Bound { kind, var, coord }))
    }
}

/// Parses a single proposition name as it appears in formulas, labels and
/// trace files (`q`, `kappa`, `kappa2`, `p@1`).
pub fn parse_prop(name: &str) -> Result<Prop, ParseError> {
    match parse(name)? {
        Formula::Atom(p) => Ok(p),
        _ => Err(ParseError { pos: 0, msg: format!("'{name}' is not a proposition") }),
    }
}

fn f_le(b: &Bound, body: Formula) -> Formula {
    Formula::FLe { var: b.var.clone(), coord: b.coord, body: Box::new(body) }
}

fn g_le(b: &Bound, body: Formula) -> Formula {
    Formula::GLe { var: b.var.clone(), coord: b.coord, body: Box::new(body) }
}

fn eventually_next(f: Formula) -> Formula {
    Formula::eventually(Formula::next(f))
}

fn always_next(f: Formula) -> Formula {
    Formula::always(Formula::next(f))
}

// F[>y] f  =  G[<=y] F X (kappa & F f)
fn expand_eventually(body: Formula, b: Bound) -> Formula {
    match b.kind {
        BoundKind::Le => f_le(&b, body),
        BoundKind::Gt => {
            let inner = Formula::and(Formula::kappa(b.coord), Formula::eventually(body));
            g_le(&b, eventually_next(inner))
        }
    }
}

// G[>x] f  =  F[<=x] G X (!kappa | G f)
fn expand_always(body: Formula, b: Bound) -> Formula {
    match b.kind {
        BoundKind::Le => g_le(&b, body),
        BoundKind::Gt => {
            let inner = Formula::or(Formula::kappa(b.coord).negate(), Formula::always(body));
            f_le(&b, always_next(inner))
        }
    }
}

// l U[<=x] r  =  l U r & F[<=x] r
// l U[>y] r   =  G[<=y] (l & F X (kappa & l U r))
fn expand_until(l: Formula, r: Formula, b: Bound) -> Formula {
    match b.kind {
        BoundKind::Le => Formula::and(Formula::until(l, r.clone()), f_le(&b, r)),
        BoundKind::Gt => {
            let inner = Formula::and(Formula::kappa(b.coord), Formula::until(l.clone(), r));
            g_le(&b, Formula::and(l, eventually_next(inner)))
        }
    }
}

// l R[<=y] r  =  l R r | G[<=y] r
// l R[>x] r   =  F[<=x] (l | G X (!kappa | l R r))
fn expand_release(l: Formula, r: Formula, b: Bound) -> Formula {
    match b.kind {
        BoundKind::Le => Formula::or(Formula::release(l, r.clone()), g_le(&b, r)),
        BoundKind::Gt => {
            let inner =
                Formula::or(Formula::kappa(b.coord).negate(), Formula::release(l.clone(), r));
            f_le(&b, Formula::or(l, always_next(inner)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::atom("p")
    }

    fn q() -> Formula {
        Formula::atom("q")
    }

    #[test]
    fn request_response_shape() {
        let f = parse("G(q -> F[<=x] p)").unwrap();
        let expected = Formula::release(
            Formula::ff(),
            Formula::or(Formula::neg_atom("q"), Formula::f_le("x", 1, p())),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn literal_conjunction() {
        assert_eq!(parse("p & !p").unwrap(), Formula::and(p(), Formula::neg_atom("p")));
    }

    #[test]
    fn missing_variable_is_an_error() {
        let err = parse("F[<=]p").unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(parse("F[<=x").is_err());
        assert!(parse("p &").is_err());
        assert!(parse("(p").is_err());
        assert!(parse("p q").is_err());
        assert!(parse("F[<=x@0] p").is_err());
        assert!(parse("kappa0").is_err());
        assert!(parse("q@2").is_err());
        assert!(parse("p $ q").is_err());
    }

    #[test]
    fn derived_bounded_operators() {
        assert_eq!(
            parse("p U[<=x] q").unwrap(),
            Formula::and(Formula::until(p(), q()), Formula::f_le("x", 1, q()))
        );
        assert_eq!(
            parse("p R[<=y] q").unwrap(),
            Formula::or(Formula::release(p(), q()), Formula::g_le("y", 1, q()))
        );
        let fy = Formula::g_le(
            "y",
            1,
            Formula::eventually(Formula::next(Formula::and(
                Formula::kappa(1),
                Formula::eventually(p()),
            ))),
        );
        assert_eq!(parse("F[>y] p").unwrap(), fy);
        let gx = Formula::f_le(
            "x",
            2,
            Formula::always(Formula::next(Formula::or(
                Formula::NegAtom(Prop::Kappa(2)),
                Formula::always(p()),
            ))),
        );
        assert_eq!(parse("G[>x@2] p").unwrap(), gx);
        let uy = Formula::g_le(
            "y",
            1,
            Formula::and(
                p(),
                Formula::eventually(Formula::next(Formula::and(
                    Formula::kappa(1),
                    Formula::until(p(), q()),
                ))),
            ),
        );
        assert_eq!(parse("p U[>y] q").unwrap(), uy);
        let rx = Formula::f_le(
            "x",
            1,
            Formula::or(
                p(),
                Formula::always(Formula::next(Formula::or(
                    Formula::NegAtom(Prop::Kappa(1)),
                    Formula::release(p(), q()),
                ))),
            ),
        );
        assert_eq!(parse("p R[>x] q").unwrap(), rx);
    }

    #[test]
    fn unbounded_derived_operators() {
        assert_eq!(parse("F p").unwrap(), Formula::until(Formula::tt(), p()));
        assert_eq!(parse("G p").unwrap(), Formula::release(Formula::ff(), p()));
        assert_eq!(parse("tt").unwrap(), Formula::tt());
        assert_eq!(parse("!tt").unwrap(), Formula::tt().negate());
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(
            parse("p | q & p").unwrap(),
            Formula::or(p(), Formula::and(q(), p()))
        );
        assert_eq!(
            parse("p U q U p").unwrap(),
            Formula::until(p(), Formula::until(q(), p()))
        );
        assert_eq!(
            parse("p & q U p").unwrap(),
            Formula::and(p(), Formula::until(q(), p()))
        );
        assert_eq!(
            parse("X p U q").unwrap(),
            Formula::until(Formula::next(p()), q())
        );
        assert_eq!(
            parse("p -> q -> p").unwrap(),
            Formula::or(Formula::neg_atom("p"), Formula::or(Formula::neg_atom("q"), p()))
        );
    }

    #[test]
    fn kappa_alias_and_coordinates() {
        assert_eq!(parse("kappa").unwrap(), Formula::kappa(1));
        assert_eq!(parse("kappa2").unwrap(), Formula::kappa(2));
        assert_eq!(parse("F[<=x@3] p").unwrap(), Formula::f_le("x", 3, p()));
        assert_eq!(parse("p@2").unwrap(), Formula::Atom(Prop::Color(2)));
    }
}
