//! Sparse multivariate polynomials over the rationals.
//!
//! Variables are [`Atom`]s: coordinates, parameters, abstract function jets and
//! opaque kernels such as `sin(q)`. Monomials are ordered lexicographically with
//! the smallest atom most significant, which makes the order multiplicative and
//! gives every polynomial a well-defined leading term.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::Atom;

pub(crate) type Q = BigRational;

/// Power product of atoms, sorted by atom, exponents strictly positive.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub(crate) struct Mono(pub(crate) Vec<(Atom, u32)>);

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        loop {
            match (a.get(i), b.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((x, ex)), Some((y, ey))) => match x.cmp(y) {
                    Ordering::Equal => {
                        if ex != ey {
                            return ex.cmp(ey);
                        }
                        i += 1;
                        j += 1;
                    }
                    // x is present in `a` but absent (exponent 0) in `b`
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                },
            }
        }
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Mono {
    pub(crate) fn one() -> Self {
        Mono(Vec::new())
    }

    pub(crate) fn atom(a: Atom) -> Self {
        Mono(vec![(a, 1)])
    }

    pub(crate) fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((a[i].0.clone(), a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Mono(out)
    }

    /// Monomial with one power of `idx`-th factor removed.
    pub(crate) fn lower(&self, idx: usize) -> Mono {
        let mut v = self.0.clone();
        if v[idx].1 == 1 {
            v.remove(idx);
        } else {
            v[idx].1 -= 1;
        }
        Mono(v)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub(crate) struct Poly {
    pub(crate) terms: BTreeMap<Mono, Q>,
}

impl Poly {
    pub(crate) fn zero() -> Self {
        Poly::default()
    }

    pub(crate) fn constant(c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Mono::one(), c);
        }
        Poly { terms }
    }

    pub(crate) fn one() -> Self {
        Poly::constant(Q::one())
    }

    pub(crate) fn atom(a: Atom) -> Self {
        Poly::monomial(Mono::atom(a), Q::one())
    }

    pub(crate) fn monomial(m: Mono, c: Q) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    pub(crate) fn as_constant(&self) -> Option<&Q> {
        match self.terms.len() {
            0 => None,
            1 => self.terms.get(&Mono::one()),
            _ => None,
        }
    }

    pub(crate) fn is_constant(&self) -> bool {
        self.is_zero() || self.as_constant().is_some()
    }

    pub(crate) fn leading(&self) -> Option<(&Mono, &Q)> {
        self.terms.iter().next_back()
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    pub(crate) fn add(&self, other: &Poly) -> Poly {
        let (big, small) = if self.terms.len() >= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = big.clone();
        for (m, c) in &small.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub(crate) fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub(crate) fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub(crate) fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        if let Some(c) = self.as_constant() {
            return other.scale(c);
        }
        if let Some(c) = other.as_constant() {
            return self.scale(c);
        }
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub(crate) fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub(crate) fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                out.insert(a.clone());
            }
        }
        out
    }

    /// Divides by the leading coefficient. Returns the factor used.
    pub(crate) fn monic_factor(&self) -> Q {
        self.leading().map(|(_, c)| c.clone()).unwrap_or_else(Q::one)
    }

    /// Exact division, `None` when `d` does not divide `self`.
    pub(crate) fn exact_div(&self, d: &Poly) -> Option<Poly> {
        if let Some(c) = d.as_constant() {
            return Some(self.scale(&c.recip()));
        }
        let local = Local::new(&[self, d]);
        let a = local.to_mp(self);
        let b = local.to_mp(d);
        mp_exact_div(&a, &b).map(|q| local.to_poly(&q))
    }

    /// Greatest common divisor up to a rational unit.
    pub(crate) fn gcd(&self, other: &Poly) -> Poly {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.is_constant() || other.is_constant() {
            return Poly::one();
        }
        // disjoint supports have trivial gcd unless one side has a monomial content
        let local = Local::new(&[self, other]);
        let a = local.to_mp(self);
        let b = local.to_mp(other);
        let g = mp_gcd(&a, &b, 0, local.atoms.len());
        local.to_poly(&g)
    }
}

/// Dense exponent vectors over a local, sorted atom list.
struct Local {
    atoms: Vec<Atom>,
}

type Mp = BTreeMap<Vec<u32>, Q>;

impl Local {
    fn new(ps: &[&Poly]) -> Self {
        let mut set = BTreeSet::new();
        for p in ps {
            set.extend(p.atoms());
        }
        Local {
            atoms: set.into_iter().collect(),
        }
    }

    fn to_mp(&self, p: &Poly) -> Mp {
        let n = self.atoms.len();
        p.terms
            .iter()
            .map(|(m, c)| {
                let mut e = vec![0u32; n];
                for (a, k) in &m.0 {
                    let i = self.atoms.binary_search(a).expect("atom in local basis");
                    e[i] = *k;
                }
                (e, c.clone())
            })
            .collect()
    }

    fn to_poly(&self, p: &Mp) -> Poly {
        let mut out = Poly::zero();
        for (e, c) in p {
            let m = Mono(
                e.iter()
                    .enumerate()
                    .filter(|(_, k)| **k > 0)
                    .map(|(i, k)| (self.atoms[i].clone(), *k))
                    .collect(),
            );
            out.add_term(m, c.clone());
        }
        out
    }
}

fn mp_add_term(p: &mut Mp, e: Vec<u32>, c: Q) {
    if c.is_zero() {
        return;
    }
    match p.entry(e) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

fn mp_mul(a: &Mp, b: &Mp) -> Mp {
    let mut out = Mp::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            mp_add_term(&mut out, e, ca * cb);
        }
    }
    out
}

fn mp_sub(a: &Mp, b: &Mp) -> Mp {
    let mut out = a.clone();
    for (e, c) in b {
        mp_add_term(&mut out, e.clone(), -c);
    }
    out
}

fn mp_is_const(a: &Mp) -> bool {
    a.is_empty() || (a.len() == 1 && a.keys().next().unwrap().iter().all(|&k| k == 0))
}

fn mp_exact_div(a: &Mp, b: &Mp) -> Option<Mp> {
    let (lb_e, lb_c) = b.iter().next_back()?;
    let mut r = a.clone();
    let mut q = Mp::new();
    while let Some((le, lc)) = r.iter().next_back() {
        if le.iter().zip(lb_e).any(|(x, y)| x < y) {
            return None;
        }
        let e: Vec<u32> = le.iter().zip(lb_e).map(|(x, y)| x - y).collect();
        let c = lc / lb_c;
        let t: Mp = [(e.clone(), c.clone())].into_iter().collect();
        r = mp_sub(&r, &mp_mul(&t, b));
        mp_add_term(&mut q, e, c);
    }
    Some(q)
}

fn deg_in(a: &Mp, k: usize) -> u32 {
    a.keys().map(|e| e[k]).max().unwrap_or(0)
}

/// Coefficients of `a` viewed as univariate in variable `k`.
fn coeffs_in(a: &Mp, k: usize) -> BTreeMap<u32, Mp> {
    let mut out: BTreeMap<u32, Mp> = BTreeMap::new();
    for (e, c) in a {
        let d = e[k];
        let mut e2 = e.clone();
        e2[k] = 0;
        out.entry(d).or_default().insert(e2, c.clone());
    }
    out
}

fn shift(a: &Mp, k: usize, d: u32) -> Mp {
    a.iter()
        .map(|(e, c)| {
            let mut e2 = e.clone();
            e2[k] += d;
            (e2, c.clone())
        })
        .collect()
}

fn content_in(a: &Mp, k: usize, n: usize) -> Mp {
    let mut g: Option<Mp> = None;
    for c in coeffs_in(a, k).into_values() {
        g = Some(match g {
            None => c,
            Some(g0) => mp_gcd(&g0, &c, k + 1, n),
        });
        if g.as_ref().is_some_and(mp_is_const) {
            break;
        }
    }
    g.unwrap_or_default()
}

fn pseudo_rem(a: &Mp, b: &Mp, k: usize) -> Mp {
    let db = deg_in(b, k);
    let lb = coeffs_in(b, k).remove(&db).unwrap_or_default();
    let mut r = a.clone();
    while !r.is_empty() {
        let dr = deg_in(&r, k);
        if dr < db {
            break;
        }
        let lr = coeffs_in(&r, k).remove(&dr).unwrap_or_default();
        let t = shift(&lr, k, dr - db);
        r = mp_sub(&mp_mul(&lb, &r), &mp_mul(&t, b));
    }
    r
}

fn primitive_part(a: &Mp, k: usize, n: usize) -> Mp {
    let c = content_in(a, k, n);
    let p = if mp_is_const(&c) {
        a.clone()
    } else {
        mp_exact_div(a, &c).expect("content divides")
    };
    integer_primitive(&p)
}

/// Scales to integer coefficients with unit gcd.
fn integer_primitive(a: &Mp) -> Mp {
    let mut den = BigInt::one();
    let mut num = BigInt::zero();
    for c in a.values() {
        den = den.lcm(c.denom());
        num = num.gcd(c.numer());
    }
    if num.is_zero() {
        return a.clone();
    }
    let k = Q::new(den, num);
    a.iter().map(|(e, c)| (e.clone(), c * &k)).collect()
}

fn one_mp(n: usize) -> Mp {
    [(vec![0; n], Q::one())].into_iter().collect()
}

/// Recursive primitive-PRS gcd over variables `k..n`; variables before `k`
/// are absent from both inputs.
fn mp_gcd(a: &Mp, b: &Mp, k: usize, n: usize) -> Mp {
    if a.is_empty() {
        return b.clone();
    }
    if b.is_empty() {
        return a.clone();
    }
    if mp_is_const(a) || mp_is_const(b) {
        return one_mp(a.keys().next().unwrap().len());
    }
    if k >= n {
        return one_mp(n);
    }
    if deg_in(a, k) == 0 && deg_in(b, k) == 0 {
        return mp_gcd(a, b, k + 1, n);
    }
    let ca = content_in(a, k, n);
    let cb = content_in(b, k, n);
    let c = mp_gcd(&ca, &cb, k + 1, n);
    let mut p = integer_primitive(&mp_exact_div(a, &ca).expect("content divides"));
    let mut q = integer_primitive(&mp_exact_div(b, &cb).expect("content divides"));
    if deg_in(&p, k) < deg_in(&q, k) {
        std::mem::swap(&mut p, &mut q);
    }
    while !q.is_empty() {
        let r = pseudo_rem(&p, &q, k);
        p = q;
        q = if r.is_empty() { r } else { primitive_part(&r, k, n) };
    }
    let g = if deg_in(&p, k) == 0 { one_mp(n) } else { p };
    mp_mul(&c, &g)
}

pub(crate) fn q_from_i64(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}
