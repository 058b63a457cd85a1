//! Differential forms on a chart: wedge, d, interior products, Lie
//! derivatives and pullbacks.

use varigeo::excalc::{Chart, CoordMap, Form, VecField};

fn main() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .build()
        .unwrap();

    let kappa = Form::parse(&c, "dq - v*dt").unwrap();
    let theta = Form::parse(&c, "v*dq - 1/2*v^2*dt").unwrap();
    println!("κ          = {kappa}");
    println!("dκ         = {}", kappa.d());
    println!("κ∧dκ       = {}", kappa.wedge(&kappa.d()));
    println!("dΘ         = {}", theta.d());
    assert!(theta.d().d().is_zero());

    let x = VecField::new(&c, ["1", "v", "-q", "0"].map(|s| c.parse(s).unwrap()).to_vec());
    println!("X          = {x}");
    println!("i_X κ      = {}", kappa.interior(&x));
    println!("L_X Θ      = {}", theta.lie(&x));

    let eta = Form::parse(&c, "ds - v*dq + 1/2*v^2*dt").unwrap();
    println!("η∧dη       = {}", eta.wedge(&eta.d()));

    // polar coordinates into the (q, v) plane, time and action fixed
    let polar = Chart::builder().auxiliary(&["r", "a"]).build().unwrap();
    let comps = ["0", "r*cos(a)", "r*sin(a)", "0"]
        .map(|s| polar.parse(s).unwrap())
        .to_vec();
    let phi = CoordMap::new(&polar, &c, comps);
    let area = Form::parse(&c, "dq^dv").unwrap();
    println!("φ*(dq∧dv)  = {}", area.pullback(&phi).unwrap());
}
