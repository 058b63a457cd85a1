//! Cocontact Hamiltonian dynamics for an arbitrary `H(t, q, p, s)`: the
//! corrected two-form, its transversal split and the solved vector field.

use varigeo::eomsolve::{check_transversality_reduction, derive_dynamics, Transversality};
use varigeo::excalc::{Chart, Form, VecField};
use varigeo::geomech::{ConstraintSet, GVProblem, VariationClass, Workbench};

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .momenta(&["p"])
        .action("s")
        .function("H", &["t", "q", "p", "s"])
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();

    let eta = Form::parse(&c, "H*dt + ds - p*dq").unwrap();
    let rs = VecField::partial(&c, "s");
    let bar = wb
        .omega_bar_nonholonomic(&eta.d(), std::slice::from_ref(&eta), &[rs])
        .unwrap();
    println!("η   = {eta}");
    println!("Ω̄   = {bar}");

    let rt = VecField::partial(&c, "t");
    let split = wb.split_transversal(&bar, &rt).unwrap();
    println!("ω   = {}", split.omega);
    println!("σ_t = {}", split.sigma_t);

    match check_transversality_reduction(&split.omega, &split.sigma_t, &rt, std::slice::from_ref(&eta), zt).unwrap() {
        Transversality::Exists { x, .. } => println!("X   = {x}"),
        Transversality::NoSolution { witness } => println!("no transversal solution: {witness}"),
    }

    let cs = ConstraintSet {
        nonholonomic: vec![eta],
        ..Default::default()
    };
    let d = derive_dynamics(&GVProblem::new(bar, cs, VariationClass::Vertical, "cocontact"), zt).unwrap();
    println!("{:?}: Z = {}", d.verdict, d.z.unwrap());
}
