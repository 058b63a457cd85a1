//! Random expressions, forms and fields for fuzzed identities.

#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use varigeo::excalc::{Chart, Form, VecField};
use varigeo::symexpr::Expr;

/// Chart `(t, q, v, s)` with the usual roles.
pub fn tqvs() -> Arc<Chart> {
    Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .build()
        .unwrap()
}

/// Sparse polynomial with small integer coefficients and degree at most 2 per variable.
pub fn poly(rng: &mut impl Rng, chart: &Arc<Chart>) -> Expr {
    let mut out = Expr::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let mut m = Expr::int(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
        for i in 0..chart.dim() {
            let e = [0, 0, 1, 2][rng.gen_range(0..4)];
            if e > 0 {
                m = &m * &chart.var(i).powi(e).unwrap();
            }
        }
        out = &out + &m;
    }
    out
}

/// Polynomial, sometimes multiplied by `sin` or `exp` of a coordinate.
pub fn expr(rng: &mut impl Rng, chart: &Arc<Chart>) -> Expr {
    let p = poly(rng, chart);
    if rng.gen_bool(0.25) {
        let x = chart.var(rng.gen_range(0..chart.dim()));
        let k = if rng.gen_bool(0.5) { x.sin() } else { x.exp() };
        &p * &k
    } else {
        p
    }
}

pub fn form(rng: &mut impl Rng, chart: &Arc<Chart>, degree: usize) -> Form {
    if degree == 0 {
        return Form::scalar(chart, expr(rng, chart));
    }
    let terms = (0..rng.gen_range(1..=3))
        .map(|_| {
            let idx = sample(rng, chart.dim(), degree).into_vec();
            (idx, expr(rng, chart))
        })
        .collect();
    Form::from_terms(chart, degree, terms)
}

pub fn field(rng: &mut impl Rng, chart: &Arc<Chart>) -> VecField {
    let comps = (0..chart.dim())
        .map(|_| {
            if rng.gen_bool(0.5) {
                poly(rng, chart)
            } else {
                Expr::zero()
            }
        })
        .collect();
    VecField::new(chart, comps)
}

/// `L_X α` from the derivation rule on each term `f dx^I`.
pub fn lie_by_components(alpha: &Form, x: &VecField) -> Form {
    let chart = alpha.chart();
    let mut out = Form::zero(chart, alpha.degree());
    for (idx, c) in alpha.terms() {
        let dxs: Vec<Form> = idx.iter().map(|&i| Form::dx(chart, i)).collect();
        let wedge_all = |fs: &[Form]| fs.iter().fold(Form::scalar(chart, Expr::one()), |a, b| a.wedge(b));
        out = &out + &wedge_all(&dxs).scale(&x.apply(c));
        for k in 0..idx.len() {
            let mut fs = dxs.clone();
            fs[k] = Form::scalar(chart, x.comp(idx[k]).clone()).d();
            out = &out + &wedge_all(&fs).scale(c);
        }
    }
    out
}
