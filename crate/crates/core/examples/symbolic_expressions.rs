//! Parsing, canonical forms, differentiation, the randomized zero test and
//! compiled evaluation.

use varigeo::excalc::Chart;
use varigeo::symexpr::{Point, Verdict, ZeroTest};

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .param("k")
        .function("V", &["q"])
        .build()
        .unwrap();

    let l = c.parse("1/2*v^2 - V - k*q^2/2").unwrap();
    println!("L         = {l}");
    println!("∂L/∂q     = {}", l.diff("q"));
    println!("∂²L/∂v∂v  = {}", l.diff("v").diff("v"));

    // rational functions cancel to lowest terms
    let r = c.parse("(q^2 - v^2)/(q - v)").unwrap();
    println!("(q²−v²)/(q−v) = {r}");

    let zt = ZeroTest::default();
    let trig = c.parse("sin(q)^2 + cos(q)^2 - 1").unwrap();
    let verdict = zt.verdict(&trig);
    assert_eq!(verdict, Verdict::Zero);
    println!("sin²q + cos²q − 1 is {verdict:?} under the sampled zero test");

    let f = c.parse("exp(-t)*cos(q) + k*v").unwrap();
    let names = ["t", "q", "v", "k"].map(Into::into);
    let compiled = f.compile(&names);
    let x = [0.5, 1.0, 2.0, 3.0];
    let fast = compiled.eval(&x).unwrap();
    let slow = f
        .eval(&Point::new().with("t", 0.5).with("q", 1.0).with("v", 2.0).with("k", 3.0))
        .unwrap();
    println!("f(0.5, 1, 2; k = 3) = {fast} (tree walk: {slow})");
}
