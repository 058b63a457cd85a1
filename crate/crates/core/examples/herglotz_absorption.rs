//! Action-dependent Lagrangians through absorption: the locally conformally
//! symplectic form Ω̌, its Lee field, projection onto the Herglotz flow, and a
//! Reeb field that exists only on the momentum surface.

use varigeo::eomsolve::{derive_dynamics, herglotz_el, project_and_compare};
use varigeo::excalc::{Chart, Form, VecField};
use varigeo::geomech::{ConstraintSet, GVProblem, VariationClass, Workbench};

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .param("gamma")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = c.parse("1/2*v^2 - 1/2*q^2 - gamma*s").unwrap();
    let eta = wb.herglotz_constraint(&l).unwrap();

    let u = wb.absorb_mixed(&l, std::slice::from_ref(&eta)).unwrap();
    let w = u.omega_check.clone().unwrap();
    println!("η̌ = {}", u.eta_check.as_ref().unwrap());
    println!("Ω̌ = {w}");
    let dps = Form::d_of(&u.chart, "ps");
    println!("dΩ̌ − dp_s∧Ω̌ = 0: {}", (&w.d() - &dps.wedge(&w)).is_zero());
    println!(
        "L_U Ω̌ = 0 for U = ∂ps: {}",
        w.lie(&VecField::partial(&u.chart, "ps")).is_zero()
    );

    let base = herglotz_el(&wb, &l, &eta, &[]).unwrap();
    let p = GVProblem::new(
        w,
        ConstraintSet::default(),
        VariationClass::Vertical,
        "herglotz_absorbed",
    );
    let d = derive_dynamics(&p, zt).unwrap();
    let pr = project_and_compare(&d, &base, &u.projection, zt).unwrap();
    println!("projection onto the Herglotz flow: {}", pr.reason);
    for o in &pr.offsets {
        println!(
            "  constant shift of {} solves: {}",
            o.coordinate, o.constant_shift_solves
        );
    }

    let c2 = Chart::builder()
        .time("t")
        .positions(&["qa", "qb"])
        .velocities(&["va", "vb"])
        .action("s")
        .build()
        .unwrap();
    let wb2 = Workbench::new(&c2);
    let pm = wb2.premulticontact_reeb(&c2.parse("s*va + vb").unwrap()).unwrap();
    println!("\nL = s va + vb");
    println!(
        "sufficient Reeb condition solvable: {}",
        pm.sufficient.particular().is_some()
    );
    println!("ι*η̌ = {}", pm.surface_eta);
    println!("surface Reeb field R = {}", pm.surface_reeb.particular().unwrap());
}
