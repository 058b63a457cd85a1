//! Absorbing holonomy into multiplier momenta: the unified two-form produces
//! the secondary constraint `p = ∂L/∂v` and projects onto the Lagrangian flow.

use varigeo::eomsolve::{derive_dynamics, project_and_compare};
use varigeo::excalc::Chart;
use varigeo::geomech::{ConstraintSet, GVProblem, VariationClass, Workbench};

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = c.parse("1/2*v^2 - 1/2*q^2").unwrap();

    let u = wb.absorb_holonomy(&l).unwrap();
    println!("chart {}", u.chart);
    println!("Ω_U = {}", u.omega_u);
    let p = GVProblem::new(
        u.omega_u.clone(),
        ConstraintSet::default(),
        VariationClass::Vertical,
        "skinner_rusk",
    );
    let d = derive_dynamics(&p, zt).unwrap();
    let secondary: Vec<String> = d.secondary.iter().map(ToString::to_string).collect();
    println!("{:?}: secondary {secondary:?}", d.verdict);
    for (x, e) in &d.surface {
        println!("  on the surface {x} = {e}");
    }
    println!("Z = {}", d.z.as_ref().unwrap());

    let cs = ConstraintSet {
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    let base = derive_dynamics(
        &GVProblem::new(
            wb.poincare_cartan(&l).unwrap().d(),
            cs,
            VariationClass::Vertical,
            "lagrangian",
        ),
        zt,
    )
    .unwrap();
    let pr = project_and_compare(&d, &base, &u.projection, zt).unwrap();
    println!(
        "projection: {} ({})",
        if pr.pass { "agrees" } else { "differs" },
        pr.reason
    );
}
