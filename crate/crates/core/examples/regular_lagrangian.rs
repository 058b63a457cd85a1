//! Euler-Lagrange dynamics from the Poincaré-Cartan form, symbolic for a
//! generic `L(t, q, v)` and numeric for the harmonic oscillator.

use std::collections::BTreeMap;

use varigeo::eomsolve::derive_dynamics;
use varigeo::excalc::Chart;
use varigeo::geomech::{ConstraintSet, GVProblem, VariationClass, Workbench};
use varigeo::simulate;
use varigeo::symexpr::Expr;

fn lagrangian_problem(wb: &Workbench, l: &Expr) -> GVProblem {
    let cs = ConstraintSet {
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    GVProblem::new(
        wb.poincare_cartan(l).unwrap().d(),
        cs,
        VariationClass::Vertical,
        "lagrangian",
    )
}

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .function("L", &["t", "q", "v"])
        .build()
        .unwrap();
    let wb = Workbench::new(&c);

    let generic = c.parse("L").unwrap();
    println!("Θ_L = {}", wb.poincare_cartan(&generic).unwrap());
    let d = derive_dynamics(&lagrangian_problem(&wb, &generic), wb.zero_test()).unwrap();
    println!("{:?}: Z = {}", d.verdict, d.z.unwrap());

    let l = c.parse("1/2*v^2 - 1/2*q^2").unwrap();
    let d = derive_dynamics(&lagrangian_problem(&wb, &l), wb.zero_test()).unwrap();
    let z = d.z.unwrap();
    println!("harmonic oscillator: Z = {z}");
    println!("energy E_L = {}", wb.lagrangian_energy(&l));

    let rhs = simulate::compile(&z, &BTreeMap::new()).unwrap();
    let traj = simulate::integrate(&rhs, &[0.0, 1.0, 0.0], 10.0, 1e-3).unwrap();
    let end = traj.last();
    println!("q(10) = {:.12} (cos 10 = {:.12})", end[1], 10f64.cos());
}
