//! Degenerate Lagrangians: `L = t v` has no consistent dynamics, `L = v s`
//! leaves a gauge direction that a pinning removes.

use std::collections::BTreeMap;

use varigeo::eomsolve::{derive_dynamics, herglotz_el};
use varigeo::excalc::{Chart, VecField};
use varigeo::geomech::{ConstraintSet, GVProblem, VariationClass, Workbench};
use varigeo::simulate;

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let l = c.parse("t*v").unwrap();
    println!("L = {l}");
    println!("ω_L = {}", wb.lagrangian_two_form(&l).unwrap());
    let cs = ConstraintSet {
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    let p = GVProblem::new(
        wb.poincare_cartan(&l).unwrap().d(),
        cs,
        VariationClass::Vertical,
        "lagrangian",
    );
    let d = derive_dynamics(&p, wb.zero_test()).unwrap();
    println!("{:?}: {}", d.verdict, d.witness.unwrap_or_default());
    let m = wb.modified_precosymplectic(&l).unwrap();
    println!("modified ω = {}, σ_t = {}", m.omega, m.sigma_t);
    assert!(m.omega.interior(&VecField::partial(&c, "t")).is_zero());

    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let l = c.parse("v*s").unwrap();
    let eta = wb.herglotz_constraint(&l).unwrap();
    println!("\nL = {l}, η = {eta}");
    let d = herglotz_el(&wb, &l, &eta, &[]).unwrap();
    let gauge: Vec<String> = d.gauge.iter().map(ToString::to_string).collect();
    println!("{:?}: Z = {}, free directions {gauge:?}", d.verdict, d.z.unwrap());

    let pinned = herglotz_el(&wb, &l, &eta, &[c.parse("v - 1").unwrap()]).unwrap();
    let z = pinned.z.unwrap();
    println!("with v = 1: {:?}, Z = {z}", pinned.verdict);
    let rhs = simulate::compile(&z, &BTreeMap::new()).unwrap();
    let traj = simulate::integrate(&rhs, &[0.0, 0.0, 1.0, 1.0], 10.0, 1e-3).unwrap();
    println!("s(10) = {:.10}, e^10 = {:.10}", traj.last()[3], 10f64.exp());
}
