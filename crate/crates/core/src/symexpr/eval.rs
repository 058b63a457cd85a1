//! Floating-point evaluation.
//!
//! [`Expr::eval`] and [`Compiled::eval`] share one lowering, so they agree to
//! the last bit on the same inputs.

use std::collections::BTreeMap;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::poly::Poly;
use super::{Atom, Expr, Func, Name};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("`{0}` evaluated outside its domain")]
    Domain(String),
    #[error("no value bound for `{0}`")]
    Unbound(String),
    #[error("abstract function `{0}` has no numeric value")]
    AbstractFunction(String),
    #[error("non-finite result")]
    NonFinite,
}

/// Named numeric values for coordinates and parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point(pub BTreeMap<String, f64>);

impl Point {
    pub fn new() -> Self {
        Point::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<const N: usize> From<[(&str, f64); N]> for Point {
    fn from(v: [(&str, f64); N]) -> Self {
        Point(v.iter().map(|(k, x)| (k.to_string(), *x)).collect())
    }
}

#[derive(Clone, Debug)]
enum Leaf {
    Slot(usize),
    Missing(String),
    Abstract(String),
    Fun(Func, Box<Prog>),
    Root(Box<Prog>, u32),
}

#[derive(Clone, Debug)]
struct PolyProg {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

#[derive(Clone, Debug)]
struct Prog {
    leaves: Vec<Leaf>,
    num: PolyProg,
    den: Option<PolyProg>,
}

/// An expression lowered against a fixed ordering of input names.
#[derive(Clone, Debug)]
pub struct Compiled {
    prog: Prog,
}

fn lower_poly(p: &Poly, leaf_of: &mut dyn FnMut(&Atom) -> usize) -> PolyProg {
    PolyProg {
        terms: p
            .terms
            .iter()
            .rev()
            .map(|(m, c)| {
                let coeff = c.to_f64().unwrap_or(f64::NAN);
                let factors = m.0.iter().map(|(a, k)| (leaf_of(a), *k as i32)).collect();
                (coeff, factors)
            })
            .collect(),
    }
}

fn lower(e: &Expr, resolve: &mut dyn FnMut(&Atom) -> Option<usize>) -> Prog {
    let mut leaves: Vec<Leaf> = Vec::new();
    let mut index: BTreeMap<Atom, usize> = BTreeMap::new();
    let mut leaf_of = |a: &Atom| -> usize {
        if let Some(&i) = index.get(a) {
            return i;
        }
        let leaf = match a {
            Atom::Coord(n) | Atom::Param(n) => match resolve(a) {
                Some(s) => Leaf::Slot(s),
                None => Leaf::Missing(n.to_string()),
            },
            Atom::Abstract(f) => match resolve(a) {
                Some(s) => Leaf::Slot(s),
                None => Leaf::Abstract(f.name.to_string()),
            },
            Atom::Fun(f, u) => Leaf::Fun(*f, Box::new(lower(u, resolve))),
            Atom::Root(u, q) => Leaf::Root(Box::new(lower(u, resolve)), *q),
        };
        leaves.push(leaf);
        index.insert(a.clone(), leaves.len() - 1);
        leaves.len() - 1
    };
    let num = lower_poly(&e.0.num, &mut leaf_of);
    let den = (!e.0.den.is_one()).then(|| lower_poly(&e.0.den, &mut leaf_of));
    Prog { leaves, num, den }
}

impl PolyProg {
    fn run(&self, leaves: &[f64]) -> (f64, f64) {
        let mut acc = 0.0;
        let mut mag = 0.0;
        for (c, fs) in &self.terms {
            let mut t = *c;
            for (i, k) in fs {
                t *= leaves[*i].powi(*k);
            }
            acc += t;
            mag += t.abs();
        }
        (acc, mag)
    }
}

impl Prog {
    /// Value and a magnitude scale (sum of absolute term values).
    fn run(&self, inputs: &[f64]) -> Result<(f64, f64), EvalError> {
        let mut vals = Vec::with_capacity(self.leaves.len());
        for leaf in &self.leaves {
            let v = match leaf {
                Leaf::Slot(i) => inputs[*i],
                Leaf::Missing(n) => return Err(EvalError::Unbound(n.clone())),
                Leaf::Abstract(n) => return Err(EvalError::AbstractFunction(n.clone())),
                Leaf::Fun(f, u) => {
                    let x = u.run(inputs)?.0;
                    match f {
                        Func::Log if x <= 0.0 => return Err(EvalError::Domain(format!("log({x})"))),
                        Func::Tan if x.cos().abs() < 1e-300 => return Err(EvalError::Domain(format!("tan({x})"))),
                        _ => {}
                    }
                    f.apply(x)
                }
                Leaf::Root(u, q) => {
                    let x = u.run(inputs)?.0;
                    if x < 0.0 {
                        if q % 2 == 0 {
                            return Err(EvalError::Domain(format!("root({x}, {q})")));
                        }
                        -(-x).powf(1.0 / *q as f64)
                    } else if *q == 2 {
                        x.sqrt()
                    } else {
                        x.powf(1.0 / *q as f64)
                    }
                }
            };
            vals.push(v);
        }
        let (n, nm) = self.num.run(&vals);
        let (v, m) = match &self.den {
            None => (n, nm),
            Some(d) => {
                let (dv, _) = d.run(&vals);
                if dv == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                (n / dv, nm / dv.abs())
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok((v, m))
    }
}

impl Compiled {
    pub fn eval(&self, inputs: &[f64]) -> Result<f64, EvalError> {
        self.prog.run(inputs).map(|r| r.0)
    }

    pub(crate) fn eval_scaled(&self, inputs: &[f64]) -> Result<(f64, f64), EvalError> {
        self.prog.run(inputs)
    }
}

impl Expr {
    /// Evaluates at a point. Every coordinate and parameter must be bound.
    pub fn eval(&self, point: &Point) -> Result<f64, EvalError> {
        let names: Vec<&String> = point.0.keys().collect();
        let values: Vec<f64> = point.0.values().copied().collect();
        let c = self.compile_with(&mut |a| match a {
            Atom::Coord(n) | Atom::Param(n) => names.iter().position(|k| k.as_str() == &**n),
            _ => None,
        });
        c.eval(&values)
    }

    /// Lowers the expression against positional inputs named by `names`.
    pub fn compile(&self, names: &[Name]) -> Compiled {
        self.compile_with(&mut |a| match a {
            Atom::Coord(n) | Atom::Param(n) => names.iter().position(|k| k == n),
            _ => None,
        })
    }

    pub(crate) fn compile_with(&self, resolve: &mut dyn FnMut(&Atom) -> Option<usize>) -> Compiled {
        Compiled {
            prog: lower(self, resolve),
        }
    }
}
