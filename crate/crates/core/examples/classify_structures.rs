//! Structure reports for a few Lagrangians, printed as JSON.

use varigeo::excalc::Chart;
use varigeo::geomech::Workbench;

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
    for src in ["1/2*v^2 - 1/2*q^2", "t*v", "v*s", "1/2*v^2 - 1/2*q^2 - gamma*s"] {
        let r = wb.classify(&c.parse(src).unwrap()).unwrap();
        println!("{}", serde_json::to_string_pretty(&r).unwrap());
    }
}
