//! Exact symbolic scalar expressions.
//!
//! Every [`Expr`] is kept in a canonical rational-function form: numerator and
//! denominator are coprime polynomials over the rationals and the denominator
//! has leading coefficient one. Equal canonical forms imply equal expressions,
//! and within the rational fragment the converse holds as well.

mod eval;
mod parse;
mod poly;
mod print;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub use eval::{Compiled, EvalError, Point};
pub use parse::{parse_ast, parse_expr, Ast, Builtin, ParseError, Scope, Simplified, SymbolTable};
pub use zero::{Verdict, ZeroTest};

use poly::{Mono, Poly};

/// Exact rational number used for coefficients.
pub type Rational = BigRational;

/// Interned symbol name.
pub type Name = Arc<str>;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Tan => x.tan(),
            Func::Exp => x.exp(),
            Func::Log => x.ln(),
        }
    }
}

/// An undetermined function of coordinates together with a multi-index of
/// partial derivatives, e.g. `D(H, q, q)` is `orders = [2, 0, 0]` for `H(q, p, s)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct AbstractFn {
    pub name: Name,
    pub args: Arc<[Name]>,
    pub orders: Arc<[u32]>,
}

impl AbstractFn {
    pub fn new(name: &str, args: &[&str]) -> Self {
        AbstractFn {
            name: name.into(),
            args: args.iter().map(|a| Name::from(*a)).collect(),
            orders: vec![0; args.len()].into(),
        }
    }

    fn differentiated(&self, idx: usize) -> Self {
        let mut orders = self.orders.to_vec();
        orders[idx] += 1;
        AbstractFn {
            orders: orders.into(),
            ..self.clone()
        }
    }
}

/// Indeterminate of the polynomial ring underlying [`Expr`].
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Coord(Name),
    Param(Name),
    Abstract(AbstractFn),
    Fun(Func, Expr),
    /// `base^(1/q)` for `q >= 2`.
    Root(Expr, u32),
}

impl Atom {
    fn is_transcendental(&self) -> bool {
        matches!(self, Atom::Fun(..) | Atom::Root(..))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
struct Rf {
    num: Poly,
    den: Poly,
}

/// Canonical exact scalar expression.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Rf>);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("division by an expression that is identically zero")]
    DivisionByZero,
    #[error("cannot substitute `{replacement}` into argument `{arg}` of abstract function `{function}`")]
    AbstractArgument {
        function: String,
        arg: String,
        replacement: String,
    },
}

/// Structural view of an expression for callers that need node kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum ExprView {
    Const(Rational),
    Coord(Name),
    Param(Name),
    Abstract(AbstractFn),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, Rational),
    Quotient(Expr, Expr),
    Fun(Func, Expr),
}

impl Expr {
    fn from_rf(num: Poly, den: Poly) -> Expr {
        Expr(Arc::new(normalize(num, den)))
    }

    fn from_poly(p: Poly) -> Expr {
        Expr(Arc::new(Rf {
            num: p,
            den: Poly::one(),
        }))
    }

    fn from_atom(a: Atom) -> Expr {
        Expr::from_poly(Poly::atom(a))
    }

    pub fn zero() -> Expr {
        Expr::from_poly(Poly::zero())
    }

    pub fn one() -> Expr {
        Expr::from_poly(Poly::one())
    }

    pub fn int(v: i64) -> Expr {
        Expr::constant(poly::q_from_i64(v))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        assert!(d != 0, "zero denominator");
        Expr::constant(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn constant(c: Rational) -> Expr {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn coord(name: &str) -> Expr {
        Expr::from_atom(Atom::Coord(name.into()))
    }

    pub fn param(name: &str) -> Expr {
        Expr::from_atom(Atom::Param(name.into()))
    }

    pub fn abstract_fn(f: AbstractFn) -> Expr {
        Expr::from_atom(Atom::Abstract(f))
    }

    pub fn fun(f: Func, arg: Expr) -> Expr {
        if arg.is_zero() {
            return match f {
                Func::Sin | Func::Tan => Expr::zero(),
                Func::Cos | Func::Exp => Expr::one(),
                Func::Log => Expr::from_atom(Atom::Fun(f, arg)),
            };
        }
        if f == Func::Log && arg.is_one() {
            return Expr::zero();
        }
        Expr::from_atom(Atom::Fun(f, arg))
    }

    pub fn sin(&self) -> Expr {
        Expr::fun(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::fun(Func::Cos, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::fun(Func::Exp, self.clone())
    }

    pub fn log(&self) -> Expr {
        Expr::fun(Func::Log, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        self.root(2)
    }

    /// `self^(1/q)`, exact for rational perfect powers.
    pub fn root(&self, q: u32) -> Expr {
        assert!(q >= 1);
        if q == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_rational() {
            if c.is_zero() || c.is_one() {
                return self.clone();
            }
            if !c.is_negative() || q % 2 == 1 {
                let (n, d) = (c.numer(), c.denom());
                let rn = n.nth_root(q);
                let rd = d.nth_root(q);
                if num_traits::pow(rn.clone(), q as usize) == *n && num_traits::pow(rd.clone(), q as usize) == *d {
                    return Expr::constant(Rational::new(rn, rd));
                }
            }
        }
        Expr::from_atom(Atom::Root(self.clone(), q))
    }

    /// Integer power. Negative exponents of zero are rejected.
    pub fn powi(&self, k: i64) -> Result<Expr, ExprError> {
        let mag = u32::try_from(k.unsigned_abs()).expect("exponent fits u32");
        let num = self.0.num.pow(mag);
        let den = self.0.den.pow(mag);
        if k >= 0 {
            Ok(Expr(Arc::new(Rf { num, den })))
        } else if num.is_zero() {
            Err(ExprError::DivisionByZero)
        } else {
            Ok(Expr::from_rf(den, num))
        }
    }

    /// Rational power `self^(n/d)` as `self^floor * root(self, d)^r`.
    pub fn pow(&self, e: &Rational) -> Result<Expr, ExprError> {
        let n = e.numer().to_i64().expect("exponent fits i64");
        let d = e.denom().to_u32().expect("exponent denominator fits u32");
        if d == 1 {
            return self.powi(n);
        }
        let r = self.root(d);
        r.powi(n)
    }

    pub fn is_zero(&self) -> bool {
        self.0.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.num.is_one() && self.0.den.is_one()
    }

    /// The rational value if the expression is a numeric constant.
    pub fn as_rational(&self) -> Option<Rational> {
        if !self.0.den.is_one() {
            return None;
        }
        if self.0.num.is_zero() {
            return Some(Rational::zero());
        }
        self.0.num.as_constant().cloned()
    }

    pub fn is_polynomial(&self) -> bool {
        self.0.den.is_one()
    }

    pub fn numerator(&self) -> Expr {
        Expr::from_poly(self.0.num.clone())
    }

    pub fn denominator(&self) -> Expr {
        Expr::from_poly(self.0.den.clone())
    }

    fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = self.0.num.atoms();
        out.extend(self.0.den.atoms());
        out
    }

    fn visit_atoms(&self, f: &mut dyn FnMut(&Atom)) {
        for a in self.atoms() {
            f(&a);
            match &a {
                Atom::Fun(_, u) | Atom::Root(u, _) => u.visit_atoms(f),
                _ => {}
            }
        }
    }

    /// Names of coordinates the expression depends on, including through
    /// kernels and abstract function arguments.
    pub fn coordinates(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| match a {
            Atom::Coord(n) => {
                out.insert(n.clone());
            }
            Atom::Abstract(f) => out.extend(f.args.iter().cloned()),
            _ => {}
        });
        out
    }

    pub fn parameters(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            if let Atom::Param(n) = a {
                out.insert(n.clone());
            }
        });
        out
    }

    pub fn depends_on(&self, coord: &str) -> bool {
        self.coordinates().iter().any(|c| &**c == coord)
    }

    /// True when no coordinate appears (parameters may).
    pub fn is_coordinate_free(&self) -> bool {
        self.coordinates().is_empty()
    }

    /// True when the expression contains no kernels or roots, so that the
    /// canonical form decides equality.
    pub fn is_rational_fragment(&self) -> bool {
        let mut ok = true;
        self.visit_atoms(&mut |a| {
            if a.is_transcendental() {
                ok = false;
            }
        });
        ok
    }

    /// Partial derivative with respect to a coordinate.
    pub fn diff(&self, x: &str) -> Expr {
        let dn = diff_poly(&self.0.num, x);
        if self.0.den.is_one() {
            return dn;
        }
        let dd = diff_poly(&self.0.den, x);
        if dd.is_zero() {
            return dn * &Expr::from_rf(Poly::one(), self.0.den.clone());
        }
        let n = Expr::from_poly(self.0.num.clone());
        let d = Expr::from_poly(self.0.den.clone());
        let top = &(&dn * &d) - &(&n * &dd);
        top.checked_div(&(&d * &d)).expect("denominator is non-zero")
    }

    pub fn checked_div(&self, other: &Expr) -> Option<Expr> {
        if other.is_zero() {
            return None;
        }
        let num = self.0.num.mul(&other.0.den);
        let den = self.0.den.mul(&other.0.num);
        Some(Expr::from_rf(num, den))
    }

    pub fn recip(&self) -> Option<Expr> {
        Expr::one().checked_div(self)
    }

    /// Replaces coordinates by expressions. Abstract function arguments may
    /// only be renamed to other coordinates.
    pub fn substitute(&self, map: &BTreeMap<Name, Expr>) -> Result<Expr, ExprError> {
        if map.is_empty() {
            return Ok(self.clone());
        }
        let mut cache: BTreeMap<Atom, Expr> = BTreeMap::new();
        let num = subst_poly(&self.0.num, map, &mut cache)?;
        if self.0.den.is_one() {
            return Ok(num);
        }
        let den = subst_poly(&self.0.den, map, &mut cache)?;
        num.checked_div(&den).ok_or(ExprError::DivisionByZero)
    }

    /// Replaces a single coordinate.
    pub fn substitute_one(&self, name: &str, value: &Expr) -> Result<Expr, ExprError> {
        let map = BTreeMap::from([(Name::from(name), value.clone())]);
        self.substitute(&map)
    }

    /// Replaces parameters by expressions.
    pub fn substitute_params(&self, map: &BTreeMap<Name, Expr>) -> Expr {
        let mut cache = BTreeMap::new();
        let f = |a: &Atom| match a {
            Atom::Param(n) => map.get(n).cloned(),
            _ => None,
        };
        let num = map_poly(&self.0.num, &f, &mut cache);
        let den = map_poly(&self.0.den, &f, &mut cache);
        num.checked_div(&den)
            .expect("parameter substitution made a denominator vanish")
    }

    /// Node-kind view of the canonical form.
    pub fn view(&self) -> ExprView {
        if !self.0.den.is_one() {
            return ExprView::Quotient(self.numerator(), self.denominator());
        }
        let p = &self.0.num;
        if p.is_zero() {
            return ExprView::Const(Rational::zero());
        }
        if p.terms.len() > 1 {
            return ExprView::Sum(
                p.terms
                    .iter()
                    .rev()
                    .map(|(m, c)| Expr::from_poly(Poly::monomial(m.clone(), c.clone())))
                    .collect(),
            );
        }
        let (m, c) = p.terms.iter().next().unwrap();
        if m.is_one() {
            return ExprView::Const(c.clone());
        }
        if c.is_one() && m.0.len() == 1 {
            let (a, k) = &m.0[0];
            if *k == 1 {
                return match a {
                    Atom::Coord(n) => ExprView::Coord(n.clone()),
                    Atom::Param(n) => ExprView::Param(n.clone()),
                    Atom::Abstract(f) => ExprView::Abstract(f.clone()),
                    Atom::Fun(f, u) => ExprView::Fun(*f, u.clone()),
                    Atom::Root(u, q) => ExprView::Power(u.clone(), Rational::new(BigInt::one(), BigInt::from(*q))),
                };
            }
            return ExprView::Power(Expr::from_atom(a.clone()), poly::q_from_i64(*k as i64));
        }
        let mut factors = Vec::new();
        if !c.is_one() {
            factors.push(Expr::constant(c.clone()));
        }
        for (a, k) in &m.0 {
            factors.push(Expr::from_poly(Poly::monomial(
                Mono(vec![(a.clone(), *k)]),
                Rational::one(),
            )));
        }
        ExprView::Product(factors)
    }

    /// Greatest common divisor of the numerators, with leading coefficient one.
    pub fn numerator_gcd(&self, other: &Expr) -> Expr {
        let g = self.0.num.gcd(&other.0.num);
        let lc = g.monic_factor().recip();
        Expr::from_poly(g.scale(&lc))
    }

    /// Leading coefficient of the numerator in the canonical monomial order.
    pub fn leading_coefficient(&self) -> Rational {
        self.0.num.monic_factor()
    }

    /// Conversion of every coefficient to `f64`, for reporting.
    pub fn to_f64(&self) -> Option<f64> {
        self.as_rational().and_then(|c| c.to_f64())
    }
}

fn normalize(num: Poly, den: Poly) -> Rf {
    assert!(!den.is_zero(), "zero denominator");
    if num.is_zero() {
        return Rf { num, den: Poly::one() };
    }
    if let Some(c) = den.as_constant() {
        let inv = c.recip();
        return Rf {
            num: num.scale(&inv),
            den: Poly::one(),
        };
    }
    let g = num.gcd(&den);
    let (num, den) = cancel(num, den, &g);
    monic(num, den)
}

fn cancel(num: Poly, den: Poly, g: &Poly) -> (Poly, Poly) {
    if g.is_constant() {
        (num, den)
    } else {
        (
            num.exact_div(g).expect("gcd divides numerator"),
            den.exact_div(g).expect("gcd divides denominator"),
        )
    }
}

/// Makes the denominator monic; `num` and `den` must be coprime.
fn monic(num: Poly, den: Poly) -> Rf {
    if num.is_zero() {
        return Rf { num, den: Poly::one() };
    }
    let lc = den.monic_factor().recip();
    let num = num.scale(&lc);
    let den = den.scale(&lc);
    Rf { num, den }
}

fn diff_atom(a: &Atom, x: &str) -> Expr {
    match a {
        Atom::Coord(n) => {
            if &**n == x {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Atom::Param(_) => Expr::zero(),
        Atom::Abstract(f) => {
            let mut out = Expr::zero();
            for (i, arg) in f.args.iter().enumerate() {
                if &**arg == x {
                    out = out + Expr::abstract_fn(f.differentiated(i));
                }
            }
            out
        }
        Atom::Fun(f, u) => {
            let du = u.diff(x);
            if du.is_zero() {
                return du;
            }
            let outer = match f {
                Func::Sin => u.cos(),
                Func::Cos => -u.sin(),
                Func::Tan => {
                    let t = Expr::fun(Func::Tan, u.clone());
                    Expr::one() + &t * &t
                }
                Func::Exp => u.exp(),
                Func::Log => u.recip().expect("log argument is not identically zero"),
            };
            outer * du
        }
        Atom::Root(u, q) => {
            let du = u.diff(x);
            if du.is_zero() {
                return du;
            }
            let r = Expr::from_atom(a.clone());
            let k = Expr::ratio(1, *q as i64);
            (k * r * du).checked_div(u).expect("root base is not identically zero")
        }
    }
}

fn diff_poly(p: &Poly, x: &str) -> Expr {
    let mut datoms: BTreeMap<&Atom, Expr> = BTreeMap::new();
    let mut acc = Expr::zero();
    for (m, c) in &p.terms {
        for (idx, (a, k)) in m.0.iter().enumerate() {
            let da = datoms.entry(a).or_insert_with(|| diff_atom(a, x)).clone();
            if da.is_zero() {
                continue;
            }
            let coeff = c * poly::q_from_i64(*k as i64);
            let rest = Expr::from_poly(Poly::monomial(m.lower(idx), coeff));
            acc = acc + rest * da;
        }
    }
    acc
}

fn subst_atom(a: &Atom, map: &BTreeMap<Name, Expr>) -> Result<Option<Expr>, ExprError> {
    match a {
        Atom::Coord(n) => Ok(map.get(n).cloned()),
        Atom::Param(_) => Ok(None),
        Atom::Abstract(f) => {
            let mut changed = false;
            let mut args = Vec::with_capacity(f.args.len());
            for arg in f.args.iter() {
                match map.get(arg) {
                    None => args.push(arg.clone()),
                    Some(e) => match e.view() {
                        ExprView::Coord(n) => {
                            changed |= n != *arg;
                            args.push(n);
                        }
                        _ => {
                            return Err(ExprError::AbstractArgument {
                                function: f.name.to_string(),
                                arg: arg.to_string(),
                                replacement: e.to_string(),
                            })
                        }
                    },
                }
            }
            if !changed {
                return Ok(None);
            }
            Ok(Some(Expr::abstract_fn(AbstractFn {
                name: f.name.clone(),
                args: args.into(),
                orders: f.orders.clone(),
            })))
        }
        Atom::Fun(f, u) => {
            let v = u.substitute(map)?;
            Ok((v != *u).then(|| Expr::fun(*f, v)))
        }
        Atom::Root(u, q) => {
            let v = u.substitute(map)?;
            Ok((v != *u).then(|| v.root(*q)))
        }
    }
}

fn subst_poly(p: &Poly, map: &BTreeMap<Name, Expr>, cache: &mut BTreeMap<Atom, Expr>) -> Result<Expr, ExprError> {
    for a in p.atoms() {
        if let std::collections::btree_map::Entry::Vacant(slot) = cache.entry(a) {
            let a = slot.key();
            let e = subst_atom(a, map)?.unwrap_or_else(|| Expr::from_atom(a.clone()));
            slot.insert(e);
        }
    }
    Ok(rebuild(p, cache))
}

fn map_poly(p: &Poly, f: &dyn Fn(&Atom) -> Option<Expr>, cache: &mut BTreeMap<Atom, Expr>) -> Expr {
    for a in p.atoms() {
        cache
            .entry(a)
            .or_insert_with_key(|a| f(a).unwrap_or_else(|| Expr::from_atom(a.clone())));
    }
    rebuild(p, cache)
}

fn rebuild(p: &Poly, cache: &BTreeMap<Atom, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in &p.terms {
        let mut t = Expr::constant(c.clone());
        for (a, k) in &m.0 {
            let base = &cache[a];
            t = t * base.powi(*k as i64).expect("non-negative power");
        }
        acc = acc + t;
    }
    acc
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Self {
        Expr::int(v)
    }
}

impl From<Rational> for Expr {
    fn from(v: Rational) -> Self {
        Expr::constant(v)
    }
}

fn add_rf(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    if a.0.den.is_one() && b.0.den.is_one() {
        return Expr::from_poly(a.0.num.add(&b.0.num));
    }
    if a.0.den == b.0.den {
        return Expr::from_rf(a.0.num.add(&b.0.num), a.0.den.clone());
    }
    let g = a.0.den.gcd(&b.0.den);
    let (da, db) = cancel(a.0.den.clone(), b.0.den.clone(), &g);
    let num = a.0.num.mul(&db).add(&b.0.num.mul(&da));
    let den = a.0.den.mul(&db);
    // common factors of num and den divide g
    let h = if g.is_constant() { g } else { num.gcd(&g) };
    let (num, den) = cancel(num, den, &h);
    Expr(Arc::new(monic(num, den)))
}

fn mul_rf(a: &Expr, b: &Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::zero();
    }
    if a.0.den.is_one() && b.0.den.is_one() {
        return Expr::from_poly(a.0.num.mul(&b.0.num));
    }
    let (na, db) = cancel(a.0.num.clone(), b.0.den.clone(), &a.0.num.gcd(&b.0.den));
    let (nb, da) = cancel(b.0.num.clone(), a.0.den.clone(), &b.0.num.gcd(&a.0.den));
    Expr(Arc::new(monic(na.mul(&nb), da.mul(&db))))
}

fn neg_rf(a: &Expr) -> Expr {
    Expr(Arc::new(Rf {
        num: a.0.num.neg(),
        den: a.0.den.clone(),
    }))
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl $tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add_rf);
binop!(Mul, mul, mul_rf);
binop!(Sub, sub, |a: &Expr, b: &Expr| add_rf(a, &neg_rf(b)));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg_rf(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg_rf(self)
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}
