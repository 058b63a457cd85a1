//! The damped oscillator `L = ½v² − ½q² − γs`: Herglotz dynamics, RK4
//! integration with drift monitors, and the trajectory as CSV on stdout.

use std::collections::BTreeMap;

use varigeo::eomsolve::herglotz_el;
use varigeo::excalc::{Chart, Form};
use varigeo::geomech::Workbench;
use varigeo::simulate::{self, Monitor};

fn main() {
    let gamma = 0.2;
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .param("gamma")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let l = c.parse("1/2*v^2 - 1/2*q^2 - gamma*s").unwrap();
    let eta = wb.herglotz_constraint(&l).unwrap();
    let d = herglotz_el(&wb, &l, &eta, &[]).unwrap();
    let z = d.z.unwrap();
    eprintln!("Z = {z}");

    let rhs = simulate::compile(&z, &BTreeMap::from([("gamma".into(), gamma)])).unwrap();
    let mut traj = simulate::integrate(&rhs, &[0.0, 1.0, 0.0, 0.0], 10.0, 1e-2).unwrap();
    let monitors = [
        Monitor::Drift {
            name: "eta".into(),
            form: eta,
        },
        Monitor::Drift {
            name: "dissipation".into(),
            form: Form::parse(&c, "v*dv + q*dq + gamma*v^2*dt").unwrap(),
        },
        Monitor::Function {
            name: "E".into(),
            expr: c.parse("1/2*v^2 + 1/2*q^2").unwrap(),
        },
    ];
    for m in simulate::monitor(&mut traj, &rhs, &monitors).unwrap() {
        eprintln!("max |{}| = {:e}", m.name, m.max_abs);
    }
    let e = traj.channel("E").unwrap().values.last().copied().unwrap();
    eprintln!("E(10) = {e:.8}");
    traj.write_csv(std::io::stdout().lock()).unwrap();
}
