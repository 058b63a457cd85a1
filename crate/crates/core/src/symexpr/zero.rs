//! Zero testing.
//!
//! Within the rational fragment the canonical form decides zero-ness exactly.
//! Expressions containing kernels or roots are sampled at seeded random points;
//! a sample is *singular* when evaluation fails there.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Atom, Expr, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Zero,
    NonZero,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroTest {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest {
            seed: 0,
            trials: 8,
            tol: 1e-9,
        }
    }
}

fn symbols(e: &Expr) -> Vec<Atom> {
    let mut out = BTreeSet::new();
    e.visit_atoms(&mut |a| {
        if matches!(a, Atom::Coord(_) | Atom::Param(_) | Atom::Abstract(_)) {
            out.insert(a.clone());
        }
    });
    out.into_iter().collect()
}

impl ZeroTest {
    pub fn new(seed: u64, trials: usize) -> Self {
        ZeroTest {
            seed,
            trials,
            ..ZeroTest::default()
        }
    }

    pub fn verdict(&self, e: &Expr) -> Verdict {
        if e.is_zero() {
            return Verdict::Zero;
        }
        if e.is_rational_fragment() {
            return Verdict::NonZero;
        }
        match self.sample(e, self.seed) {
            Verdict::Unknown => self.sample(e, self.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
            v => v,
        }
    }

    pub fn is_zero(&self, e: &Expr) -> bool {
        self.verdict(e) == Verdict::Zero
    }

    pub fn is_nonzero(&self, e: &Expr) -> bool {
        self.verdict(e) == Verdict::NonZero
    }

    pub fn equal(&self, a: &Expr, b: &Expr) -> Verdict {
        self.verdict(&(a - b))
    }

    fn sample(&self, e: &Expr, seed: u64) -> Verdict {
        let syms = symbols(e);
        let compiled = e.compile_with(&mut |a| syms.iter().position(|s| s == a));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut regular = 0;
        for _ in 0..self.trials {
            let x: Vec<f64> = syms
                .iter()
                .map(|_| {
                    let m: f64 = rng.gen_range(0.1..3.0);
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            if let Ok((v, mag)) = compiled.eval_scaled(&x) {
                regular += 1;
                if v.abs() > self.tol * mag.max(1.0) {
                    return Verdict::NonZero;
                }
            }
        }
        if regular == 0 {
            Verdict::Unknown
        } else {
            Verdict::Zero
        }
    }

    /// Verdict from caller-supplied sample points only; no structural shortcut.
    pub fn verdict_at(&self, e: &Expr, points: &[Point]) -> Verdict {
        let mut regular = 0;
        for p in points {
            if let Ok(v) = e.eval(p) {
                regular += 1;
                if v.abs() > self.tol {
                    return Verdict::NonZero;
                }
            }
        }
        if regular == 0 {
            Verdict::Unknown
        } else {
            Verdict::Zero
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_and_sampled() {
        let zt = ZeroTest::default();
        let q = Expr::coord("q");
        let ident = q.sin() * q.sin() + q.cos() * q.cos() - Expr::one();
        assert_eq!(zt.verdict(&ident), Verdict::Zero);
        assert_eq!(zt.verdict(&q.sin()), Verdict::NonZero);
        assert_eq!(zt.verdict(&(&q - &q)), Verdict::Zero);
        assert_eq!(zt.verdict(&q), Verdict::NonZero);
    }

    #[test]
    fn all_singular_samples_are_unknown() {
        let zt = ZeroTest::default();
        let s = Expr::coord("s");
        let e = s.recip().unwrap();
        let pts = vec![Point::from([("s", 0.0)]); 8];
        assert_eq!(zt.verdict_at(&e, &pts), Verdict::Unknown);
        assert_eq!(zt.verdict(&e), Verdict::NonZero);
    }

    #[test]
    fn deterministic_for_seed() {
        let q = Expr::coord("q");
        let e = (q.exp() - Expr::one()).sqrt();
        let a = ZeroTest::new(7, 8).verdict(&e);
        let b = ZeroTest::new(7, 8).verdict(&e);
        assert_eq!(a, b);
    }
}
