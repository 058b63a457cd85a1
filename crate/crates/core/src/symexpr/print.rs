use std::fmt::{self, Write};

use num_traits::{One, Signed};

use super::poly::{Mono, Poly, Q};
use super::{Atom, Expr};

fn write_atom(out: &mut String, a: &Atom) {
    match a {
        Atom::Coord(n) | Atom::Param(n) => out.push_str(n),
        Atom::Abstract(f) => {
            if f.orders.iter().all(|&k| k == 0) {
                out.push_str(&f.name);
            } else {
                let _ = write!(out, "D({}", f.name);
                for (arg, k) in f.args.iter().zip(f.orders.iter()) {
                    for _ in 0..*k {
                        let _ = write!(out, ", {arg}");
                    }
                }
                out.push(')');
            }
        }
        Atom::Fun(f, u) => {
            let _ = write!(out, "{}({})", f.name(), u);
        }
        Atom::Root(u, 2) => {
            let _ = write!(out, "sqrt({u})");
        }
        Atom::Root(u, q) => {
            let _ = write!(out, "(({u})^(1/{q}))");
        }
    }
}

fn write_mono(out: &mut String, m: &Mono) {
    for (i, (a, k)) in m.0.iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        write_atom(out, a);
        if *k > 1 {
            let _ = write!(out, "^{k}");
        }
    }
}

fn write_rational(out: &mut String, c: &Q) {
    if c.is_integer() {
        let _ = write!(out, "{}", c.numer());
    } else {
        let _ = write!(out, "{}/{}", c.numer(), c.denom());
    }
}

fn poly_string(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms.iter().rev().enumerate() {
        let neg = c.is_negative();
        let mag = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if m.is_one() {
            write_rational(&mut out, &mag);
        } else {
            if !mag.is_one() {
                write_rational(&mut out, &mag);
                out.push('*');
            }
            write_mono(&mut out, m);
        }
    }
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = poly_string(&self.0.num);
        if self.0.den.is_one() {
            return f.write_str(&num);
        }
        let den = poly_string(&self.0.den);
        let num_wrap = self.0.num.terms.len() > 1;
        let den_wrap = self.0.den.terms.len() > 1 || self.0.den.terms.keys().next().is_some_and(|m| m.0.len() > 1);
        match (num_wrap, den_wrap) {
            (true, true) => write!(f, "({num})/({den})"),
            (true, false) => write!(f, "({num})/{den}"),
            (false, true) => write!(f, "{num}/({den})"),
            (false, false) => write!(f, "{num}/{den}"),
        }
    }
}
