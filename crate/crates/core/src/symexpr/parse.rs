//! Text syntax for scalar expressions and differential forms.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | call | "(" expr ")" ;
//! call    = ident "(" expr { "," expr } ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ] ;
//! ```
//!
//! Identifiers resolve to coordinates, parameters or abstract functions of a
//! [`SymbolTable`]. The name `d` followed by a coordinate is the differential of
//! that coordinate and only valid where forms are accepted.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Pow, Zero};
use thiserror::Error;

use super::{AbstractFn, Expr, ExprError, Func, Name, Rational};

pub trait SymbolTable {
    fn is_coordinate(&self, name: &str) -> bool;
    fn is_parameter(&self, name: &str) -> bool;
    /// Argument coordinates of an abstract function.
    fn function_args(&self, name: &str) -> Option<Vec<Name>>;
}

/// Free-standing symbol table.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub coords: Vec<Name>,
    pub params: Vec<Name>,
    pub functions: BTreeMap<Name, Vec<Name>>,
}

impl Scope {
    pub fn new(coords: &[&str], params: &[&str]) -> Self {
        Scope {
            coords: coords.iter().map(|c| Name::from(*c)).collect(),
            params: params.iter().map(|c| Name::from(*c)).collect(),
            functions: BTreeMap::new(),
        }
    }

    pub fn with_function(mut self, name: &str, args: &[&str]) -> Self {
        self.functions
            .insert(name.into(), args.iter().map(|a| Name::from(*a)).collect());
        self
    }
}

impl SymbolTable for Scope {
    fn is_coordinate(&self, name: &str) -> bool {
        self.coords.iter().any(|c| &**c == name)
    }
    fn is_parameter(&self, name: &str) -> bool {
        self.params.iter().any(|c| &**c == name)
    }
    fn function_args(&self, name: &str) -> Option<Vec<Name>> {
        self.functions.get(name).cloned()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unexpected character `{ch}` at {pos}")]
    Lex { pos: usize, ch: char },
    #[error("expected {expected} at {pos}, found {found}")]
    Unexpected {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("`{name}` at {pos} is a differential; differentials are not allowed in a scalar expression")]
    ReservedDifferential { pos: usize, name: String },
    #[error("`{name}` at {pos} takes {expected} argument(s), got {found}")]
    Arity {
        pos: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid derivative at {pos}: {reason}")]
    Derivative { pos: usize, reason: String },
    #[error("exponent `{0}` is not a rational constant")]
    NonConstantExponent(String),
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("{0}")]
    Form(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Builtin {
    fn from_name(s: &str) -> Option<Builtin> {
        Some(match s {
            "sin" => Builtin::Sin,
            "cos" => Builtin::Cos,
            "tan" => Builtin::Tan,
            "exp" => Builtin::Exp,
            "log" => Builtin::Log,
            "sqrt" => Builtin::Sqrt,
            _ => return None,
        })
    }
}

/// Raw syntax tree, before canonicalisation.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Num(Rational),
    Coord(Name),
    Param(Name),
    /// Abstract function, possibly differentiated with respect to `wrt`.
    Function {
        name: Name,
        args: Vec<Name>,
        wrt: Vec<Name>,
    },
    /// `d<coord>`
    Differential(Name),
    Neg(Box<Ast>),
    Add(Box<Ast>, Box<Ast>),
    Sub(Box<Ast>, Box<Ast>),
    Mul(Box<Ast>, Box<Ast>),
    Div(Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, Box<Ast>),
    Call(Builtin, Box<Ast>),
}

/// Canonical expression plus the non-vanishing conditions assumed while
/// cancelling common factors.
#[derive(Clone, Debug, PartialEq)]
pub struct Simplified {
    pub expr: Expr,
    pub side_conditions: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Sym(char),
    End,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            let mut mantissa = String::new();
            let mut frac_digits = 0u32;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                mantissa.push(bytes[i] as char);
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    mantissa.push(bytes[i] as char);
                    frac_digits += 1;
                    i += 1;
                }
            }
            let mut exp: i64 = 0;
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                let mut sign = 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    if bytes[j] == b'-' {
                        sign = -1;
                    }
                    j += 1;
                }
                let ds = j;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j > ds {
                    exp = sign * src[ds..j].parse::<i64>().unwrap_or(0);
                    i = j;
                }
            }
            let m: BigInt = mantissa.parse().map_err(|_| ParseError::Lex { pos: start, ch: c })?;
            let ten = BigInt::from(10);
            let scale = exp - frac_digits as i64;
            let value = if scale >= 0 {
                Rational::from_integer(m * Pow::pow(&ten, scale as u64))
            } else {
                Rational::new(m, Pow::pow(&ten, (-scale) as u64))
            };
            out.push((start, Tok::Num(value)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(ParseError::Lex { pos: i, ch });
        }
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    table: &'a dyn SymbolTable,
    forms: bool,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Sym(c) => format!("`{c}`"),
        Tok::End => "end of input".to_string(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::Unexpected {
                pos: self.pos(),
                expected: format!("`{c}`"),
                found: describe(self.peek()),
            })
        }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Ast::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Ast::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Ast::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Ast::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Ast::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let (pos, tok) = self.bump();
        match tok {
            Tok::Num(n) => Ok(Ast::Num(n)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Sym('(') {
                    self.bump();
                    return self.call(pos, name);
                }
                self.ident(pos, name)
            }
            other => Err(ParseError::Unexpected {
                pos,
                expected: "a number, identifier or `(`".to_string(),
                found: describe(&other),
            }),
        }
    }

    fn ident(&mut self, pos: usize, name: String) -> Result<Ast, ParseError> {
        let t = self.table;
        if t.is_coordinate(&name) {
            return Ok(Ast::Coord(name.into()));
        }
        if t.is_parameter(&name) {
            return Ok(Ast::Param(name.into()));
        }
        if let Some(args) = t.function_args(&name) {
            return Ok(Ast::Function {
                name: name.into(),
                args,
                wrt: Vec::new(),
            });
        }
        if let Some(rest) = name.strip_prefix('d') {
            if t.is_coordinate(rest) {
                if self.forms {
                    return Ok(Ast::Differential(rest.into()));
                }
                return Err(ParseError::ReservedDifferential { pos, name });
            }
        }
        Err(ParseError::UnknownIdentifier { pos, name })
    }

    fn args(&mut self) -> Result<Vec<Ast>, ParseError> {
        let mut out = vec![self.expr()?];
        while self.eat(',') {
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn call(&mut self, pos: usize, name: String) -> Result<Ast, ParseError> {
        if name == "D" {
            return self.derivative(pos);
        }
        let Some(b) = Builtin::from_name(&name) else {
            if self.table.function_args(&name).is_some() {
                return Err(ParseError::Unexpected {
                    pos,
                    expected: format!("`{name}` without an argument list"),
                    found: "`(`".to_string(),
                });
            }
            return Err(ParseError::UnknownIdentifier { pos, name });
        };
        let mut args = self.args()?;
        if args.len() != 1 {
            return Err(ParseError::Arity {
                pos,
                name,
                expected: 1,
                found: args.len(),
            });
        }
        Ok(Ast::Call(b, Box::new(args.remove(0))))
    }

    fn derivative(&mut self, pos: usize) -> Result<Ast, ParseError> {
        let args = self.args()?;
        let err = |reason: &str| ParseError::Derivative {
            pos,
            reason: reason.to_string(),
        };
        let mut it = args.into_iter();
        let Some(Ast::Function {
            name,
            args: fargs,
            mut wrt,
        }) = it.next()
        else {
            return Err(err("first argument must be an abstract function"));
        };
        let rest: Vec<Ast> = it.collect();
        if rest.is_empty() {
            return Err(err("no differentiation variable"));
        }
        for a in rest {
            match a {
                Ast::Coord(c) if fargs.contains(&c) => wrt.push(c),
                Ast::Coord(c) => return Err(err(&format!("`{name}` does not depend on `{c}`"))),
                _ => return Err(err("differentiation variables must be coordinates")),
            }
        }
        Ok(Ast::Function { name, args: fargs, wrt })
    }
}

/// Parses text into a raw syntax tree. With `forms` set, differentials are accepted.
pub fn parse_ast(src: &str, table: &dyn SymbolTable, forms: bool) -> Result<Ast, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        table,
        forms,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(ParseError::Unexpected {
            pos: p.pos(),
            expected: "an operator or end of input".to_string(),
            found: describe(p.peek()),
        });
    }
    Ok(e)
}

/// Parses a scalar expression into canonical form.
pub fn parse_expr(src: &str, table: &dyn SymbolTable) -> Result<Expr, ParseError> {
    Ok(parse_ast(src, table, false)?.simplify()?.expr)
}

impl Ast {
    /// Canonicalises, recording every non-constant divisor as a side condition.
    pub fn simplify(&self) -> Result<Simplified, ParseError> {
        let mut conds = Vec::new();
        let expr = self.reduce(&mut conds)?;
        Ok(Simplified {
            expr,
            side_conditions: conds,
        })
    }

    fn reduce(&self, conds: &mut Vec<Expr>) -> Result<Expr, ParseError> {
        Ok(match self {
            Ast::Num(n) => Expr::constant(n.clone()),
            Ast::Coord(n) => Expr::coord(n),
            Ast::Param(n) => Expr::param(n),
            Ast::Function { name, args, wrt } => {
                let f = AbstractFn {
                    name: name.clone(),
                    args: args.clone().into(),
                    orders: args
                        .iter()
                        .map(|a| wrt.iter().filter(|w| *w == a).count() as u32)
                        .collect(),
                };
                Expr::abstract_fn(f)
            }
            Ast::Differential(n) => {
                return Err(ParseError::ReservedDifferential {
                    pos: 0,
                    name: format!("d{n}"),
                })
            }
            Ast::Neg(a) => -a.reduce(conds)?,
            Ast::Add(a, b) => a.reduce(conds)? + b.reduce(conds)?,
            Ast::Sub(a, b) => a.reduce(conds)? - b.reduce(conds)?,
            Ast::Mul(a, b) => a.reduce(conds)? * b.reduce(conds)?,
            Ast::Div(a, b) => {
                let n = a.reduce(conds)?;
                let d = b.reduce(conds)?;
                note_divisor(&d, conds);
                n.checked_div(&d).ok_or(ParseError::DivisionByZero)?
            }
            Ast::Pow(a, b) => {
                let base = a.reduce(conds)?;
                let e = b.reduce(conds)?;
                let Some(k) = e.as_rational() else {
                    return Err(ParseError::NonConstantExponent(e.to_string()));
                };
                if k < Rational::zero() {
                    note_divisor(&base, conds);
                }
                base.pow(&k).map_err(|_| ParseError::DivisionByZero)?
            }
            Ast::Call(b, a) => {
                let u = a.reduce(conds)?;
                match b {
                    Builtin::Sin => Expr::fun(Func::Sin, u),
                    Builtin::Cos => Expr::fun(Func::Cos, u),
                    Builtin::Tan => Expr::fun(Func::Tan, u),
                    Builtin::Exp => Expr::fun(Func::Exp, u),
                    Builtin::Log => Expr::fun(Func::Log, u),
                    Builtin::Sqrt => u.sqrt(),
                }
            }
        })
    }
}

fn note_divisor(d: &Expr, conds: &mut Vec<Expr>) {
    if d.as_rational().is_none() && !conds.contains(d) {
        conds.push(d.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope() -> Scope {
        Scope::new(&["t", "q", "v", "s"], &["gamma"]).with_function("H", &["q", "s"])
    }

    #[test]
    fn parses_and_canonicalises() {
        let sc = scope();
        let e = parse_expr("t*v - t*v", &sc).unwrap();
        assert!(e.is_zero());
        let e = parse_expr("0.2*q + 1e-1*q", &sc).unwrap();
        assert_eq!(e, Expr::ratio(3, 10) * Expr::coord("q"));
        let e = parse_expr("-q^2", &sc).unwrap();
        assert_eq!(e, -(Expr::coord("q") * Expr::coord("q")));
        let e = parse_expr("2^3^2", &sc).unwrap();
        assert_eq!(e, Expr::int(512));
    }

    #[test]
    fn side_conditions() {
        let sc = scope();
        let s = parse_ast("(s*v)/s", &sc, false).unwrap().simplify().unwrap();
        assert_eq!(s.expr, Expr::coord("v"));
        assert_eq!(s.side_conditions, vec![Expr::coord("s")]);
    }

    #[test]
    fn reserved_prefix() {
        let sc = scope();
        let err = parse_expr("dq + v", &sc).unwrap_err();
        assert!(matches!(err, ParseError::ReservedDifferential { pos: 0, .. }));
        assert!(parse_ast("dq + v", &sc, true).is_ok());
    }

    #[test]
    fn errors() {
        let sc = scope();
        assert!(matches!(parse_expr("q +", &sc), Err(ParseError::Unexpected { .. })));
        assert!(matches!(
            parse_expr("x", &sc),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            parse_expr("q^v", &sc),
            Err(ParseError::NonConstantExponent(_))
        ));
        assert!(matches!(parse_expr("q/0", &sc), Err(ParseError::DivisionByZero)));
        assert!(matches!(parse_expr("q $ 2", &sc), Err(ParseError::Lex { pos: 2, .. })));
        assert!(matches!(parse_expr("sin(q, v)", &sc), Err(ParseError::Arity { .. })));
    }

    #[test]
    fn abstract_functions() {
        let sc = scope();
        let h = parse_expr("D(H, q, s)", &sc).unwrap();
        let base = parse_expr("H", &sc).unwrap();
        assert_eq!(h, base.diff("q").diff("s"));
        assert!(parse_expr("D(H, v)", &sc).is_err());
    }

    #[test]
    fn roundtrip_through_printer() {
        let sc = scope();
        for src in [
            "q*v - 1/2*v^2",
            "(q + 1)/(s^2 + 1)",
            "sin(q)*sqrt(s) + exp(-v)",
            "D(H, q) - gamma*s",
        ] {
            let e = parse_expr(src, &sc).unwrap();
            assert_eq!(parse_expr(&e.to_string(), &sc).unwrap(), e, "{src}");
        }
    }
}
