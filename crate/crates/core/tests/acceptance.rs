//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varigeo::cli::{self, Command, Options, Report};
use varigeo::eomsolve::{check_transversality_reduction, derive_dynamics, herglotz_el, DynVerdict, Transversality};
use varigeo::excalc::{Chart, CoordMap, Form, VecField};
use varigeo::geomech::{ConstraintSet, GVProblem, ReebSolution, VariationClass, Workbench};
use varigeo::simulate::{self, Monitor};
use varigeo::symexpr::Expr;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ex(c: &Arc<Chart>, s: &str) -> Expr {
    c.parse(s).unwrap()
}

fn lagrangian_chart(action: bool) -> Arc<Chart> {
    let mut b = Chart::builder().time("t").positions(&["q"]).velocities(&["v"]);
    if action {
        b = b.action("s");
    }
    b.param("gamma").function("L", &["t", "q", "v"]).build().unwrap()
}

fn lagrangian_problem(c: &Arc<Chart>, l: &Expr) -> GVProblem {
    let wb = Workbench::new(c);
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

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("problems")
        .join(format!("{name}.toml"))
}

fn cli_run(command: Command, name: &str) -> Result<(i32, Report), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = Options {
        csv: Some(dir.path().join(format!("{name}.csv"))),
        ..Default::default()
    };
    let out = cli::run(command, &problem(name), &opts).map_err(|e| format!("{name}: {e}"))?;
    Ok((out.exit_code, out.report))
}

fn cocontact_golden() -> Outcome {
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
    let bar = wb
        .omega_bar_nonholonomic(&eta.d(), std::slice::from_ref(&eta), &[VecField::partial(&c, "s")])
        .map_err(|e| e.to_string())?;
    let rt = VecField::partial(&c, "t");
    let split = wb.split_transversal(&bar, &rt).map_err(|e| e.to_string())?;
    let tr = check_transversality_reduction(&split.omega, &split.sigma_t, &rt, std::slice::from_ref(&eta), zt)
        .map_err(|e| e.to_string())?;
    let Transversality::Exists { x, .. } = tr else {
        return Err("no transversal solution".into());
    };
    let golden = VecField::new(
        &c,
        vec![
            Expr::zero(),
            -ex(&c, "D(H, p)"),
            ex(&c, "D(H, q) + p*D(H, s)"),
            -ex(&c, "p*D(H, p) - H"),
        ],
    );
    ensure((&x - &golden).is_zero(), || format!("X = {x}"))?;
    let cs = ConstraintSet {
        nonholonomic: vec![eta],
        ..Default::default()
    };
    let d = derive_dynamics(&GVProblem::new(bar, cs, VariationClass::Vertical, "cocontact"), zt)
        .map_err(|e| e.to_string())?;
    let z = d.z.ok_or("no dynamics")?;
    ensure((&z - &(&rt - &golden)).is_zero(), || format!("Z = {z}"))?;
    Ok(format!("X = {x}"))
}

fn regular_lagrangian() -> Outcome {
    let c = lagrangian_chart(false);
    let zt = Workbench::new(&c).zero_test().clone();
    let l = ex(&c, "L");
    let d = derive_dynamics(&lagrangian_problem(&c, &l), &zt).map_err(|e| e.to_string())?;
    ensure(d.verdict == DynVerdict::Unique, || format!("verdict {:?}", d.verdict))?;
    let z = d.z.unwrap();
    let lv = l.diff("v");
    let force = &(&l.diff("q") - &lv.diff("t")) - &(ex(&c, "v") * lv.diff("q"));
    let zv = force.checked_div(&lv.diff("v")).ok_or("singular Hessian")?;
    let golden = VecField::new(&c, vec![Expr::one(), ex(&c, "v"), zv]);
    ensure((&z - &golden).is_zero(), || format!("Z = {z}"))?;

    let d = derive_dynamics(&lagrangian_problem(&c, &ex(&c, "1/2*v^2 - 1/2*q^2")), &zt).map_err(|e| e.to_string())?;
    let z = d.z.ok_or("no dynamics")?;
    let rhs = simulate::compile(&z, &BTreeMap::from([("gamma".to_string(), 0.0)])).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut out = [0.0; 3];
    for _ in 0..100 {
        let x: [f64; 3] = [
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        ];
        rhs.eval(&x, &mut out).map_err(|e| e.to_string())?;
        ensure(out == [1.0, x[2], -x[1]], || format!("Z{x:?} = {out:?}"))?;
    }
    Ok(format!("Z^v = {}", golden.comp(2)))
}

fn time_dependent_singular() -> Outcome {
    let c = lagrangian_chart(false);
    let wb = Workbench::new(&c);
    let l = ex(&c, "t*v");
    let r = wb.classify(&l).map_err(|e| e.to_string())?;
    let reeb = r.cosymplectic_reeb.ok_or("no cosymplectic Reeb report")?;
    ensure(!reeb.exists, || "Reeb field found for (ω_L, τ)".into())?;
    let m = wb.modified_precosymplectic(&l).map_err(|e| e.to_string())?;
    let it = m.omega.interior(&VecField::partial(&c, "t"));
    ensure(it.is_zero(), || format!("i_∂t ω = {it}"))?;
    let d = derive_dynamics(&lagrangian_problem(&c, &l), wb.zero_test()).map_err(|e| e.to_string())?;
    ensure(d.verdict == DynVerdict::Inconsistent, || {
        format!("verdict {:?}", d.verdict)
    })?;
    Ok(format!("{}; {}", reeb.witness, d.witness.unwrap_or_default()))
}

fn action_dependent_singular() -> Outcome {
    let c = lagrangian_chart(true);
    let wb = Workbench::new(&c);
    let l = ex(&c, "v*s");
    let r = wb.classify(&l).map_err(|e| e.to_string())?;
    let reeb = r.contact_reeb.ok_or("no contact Reeb report")?;
    ensure(!reeb.exists, || "Reeb field found for η_L".into())?;
    let eta = wb.herglotz_constraint(&l).map_err(|e| e.to_string())?;
    let d = herglotz_el(&wb, &l, &eta, &[]).map_err(|e| e.to_string())?;
    ensure(d.verdict == DynVerdict::Gauge && d.gauge.len() == 1, || {
        format!("verdict {:?} with {} gauge directions", d.verdict, d.gauge.len())
    })?;
    let zs = d.z.as_ref().unwrap().comp_named("s").clone();
    ensure(zs == ex(&c, "v*s"), || format!("Z^s = {zs}"))?;

    let pinned = herglotz_el(&wb, &l, &eta, &[ex(&c, "v - 1")]).map_err(|e| e.to_string())?;
    let rhs = simulate::compile(
        pinned.z.as_ref().ok_or("pinned dynamics missing")?,
        &BTreeMap::from([("gamma".into(), 0.0)]),
    )
    .map_err(|e| e.to_string())?;
    let s0 = 1.0;
    let traj = simulate::integrate(&rhs, &[0.0, 0.0, 1.0, s0], 10.0, 1e-3).map_err(|e| e.to_string())?;
    let s10 = traj.last()[3];
    let rel = (s10 / (s0 * 10f64.exp()) - 1.0).abs();
    ensure(rel < 1e-5, || format!("s(10) = {s10}, relative error {rel:e}"))?;
    Ok(format!("s(10) = {s10:.10}, relative error {rel:.1e}"))
}

fn split_action() -> Outcome {
    let c = Chart::builder()
        .time("t")
        .positions(&["qa", "qb"])
        .velocities(&["va", "vb"])
        .action("s")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let pm = wb
        .premulticontact_reeb(&ex(&c, "s*va + vb"))
        .map_err(|e| e.to_string())?;
    ensure(matches!(pm.sufficient, ReebSolution::NoSolution { .. }), || {
        "sufficient condition unexpectedly solvable".into()
    })?;
    let r = pm.surface_reeb.particular().ok_or("no Reeb field on the surface")?;
    let want = -&VecField::partial(&pm.surface, "qb");
    ensure(*r == want, || format!("R = {r}"))?;
    Ok(format!("R = {r} for {}", pm.surface_eta))
}

fn equivalences() -> Outcome {
    let mut names = Vec::new();
    for name in [
        "cosymplectic_hamiltonian",
        "cocontact_hamiltonian",
        "damped_oscillator",
        "skinner_rusk",
    ] {
        let (code, report) = cli_run(Command::Verify, name)?;
        ensure(code == 0, || format!("{name}: exit {code}"))?;
        for c in &report.verification {
            ensure(c.pass, || format!("{}: {}", c.name, c.reason))?;
            names.push(c.name.clone());
        }
    }
    for needed in [
        "hamiltonian: vertical vs all fields",
        "cocontact_hamiltonian: nonholonomic reduction",
        "cocontact_hamiltonian: transversality reduction",
        "herglotz: Herglotz-Euler-Lagrange vs Ω̄",
        "skinner_rusk: projection to Lagrangian dynamics",
        "herglotz_absorbed: projection of Ω̌ dynamics: constant offset",
    ] {
        ensure(names.iter().any(|n| n == needed), || {
            format!("missing check `{needed}`")
        })?;
    }
    Ok(format!("{} checks", names.len()))
}

fn algebra_properties() -> Outcome {
    const N: usize = 1000;
    let c = common::tqvs();
    let src = Chart::builder().auxiliary(&["a", "b", "c"]).build().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..N {
        let p = rng.gen_range(0..3);
        let a = common::form(&mut rng, &c, p);
        let dd = a.d().d();
        ensure(dd.is_zero(), || format!("d² ≠ 0 on {a}: {dd}"))?;

        let x = common::field(&mut rng, &c);
        let lhs = a.lie(&x);
        let rhs = common::lie_by_components(&a, &x);
        ensure((&lhs - &rhs).is_zero(), || {
            format!("Cartan formula fails for {a} along {x}")
        })?;

        let q = rng.gen_range(0..3);
        let b = common::form(&mut rng, &c, q);
        let sign = if (p * q) % 2 == 1 { -Expr::one() } else { Expr::one() };
        let gc = &a.wedge(&b) - &b.wedge(&a).scale(&sign);
        ensure(gc.is_zero(), || format!("graded commutativity fails for {a}, {b}"))?;

        let comps = (0..c.dim()).map(|_| common::poly(&mut rng, &src)).collect();
        let phi = CoordMap::new(&src, &c, comps);
        let pd = a.d().pullback(&phi).map_err(|e| e.to_string())?;
        let dp = a.pullback(&phi).map_err(|e| e.to_string())?.d();
        ensure((&pd - &dp).is_zero(), || {
            format!("pullback does not commute with d for {a} (instance {k})")
        })?;
    }
    Ok(format!("{N} instances of each identity"))
}

fn flow_invariants() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in [
        "action_dependent",
        "cosymplectic_hamiltonian",
        "damped_oscillator",
        "harmonic_oscillator",
    ] {
        let (code, report) = cli_run(Command::Integrate, name)?;
        ensure(code == 0, || format!("{name}: exit {code}"))?;
        let integ = report.integration.ok_or("no integration")?;
        let m = integ
            .monitors
            .iter()
            .find(|m| m.name == "sigma_t")
            .ok_or_else(|| format!("{name}: no sigma_t monitor"))?;
        ensure(m.max_abs < 1e-10, || format!("{name}: |i_Z σ_t| = {:e}", m.max_abs))?;
        worst = worst.max(m.max_abs);
    }

    let c = lagrangian_chart(true);
    let wb = Workbench::new(&c);
    let l = ex(&c, "1/2*v^2 - 1/2*q^2 - gamma*s");
    let eta = wb.herglotz_constraint(&l).map_err(|e| e.to_string())?;
    let d = herglotz_el(&wb, &l, &eta, &[]).map_err(|e| e.to_string())?;
    let rhs = simulate::compile(d.z.as_ref().unwrap(), &BTreeMap::from([("gamma".into(), 0.2)]))
        .map_err(|e| e.to_string())?;
    let drift = |h: f64| -> Result<f64, String> {
        let mut traj = simulate::integrate(&rhs, &[0.0, 1.0, 0.0, 0.0], 10.0, h).map_err(|e| e.to_string())?;
        let spec = [Monitor::Drift {
            name: "eta".into(),
            form: eta.clone(),
        }];
        let m = simulate::monitor(&mut traj, &rhs, &spec).map_err(|e| e.to_string())?;
        Ok(m[0].max_abs)
    };
    let (coarse, fine) = (drift(0.1)?, drift(0.05)?);
    let ratio = coarse / fine;
    ensure((ratio / 16.0 - 1.0).abs() <= 0.2, || {
        format!("drift {coarse:e} → {fine:e}, ratio {ratio:.2}")
    })?;
    Ok(format!("max |i_Z σ_t| = {worst:.1e}; η drift ratio {ratio:.2}"))
}

fn dissipation() -> Outcome {
    let g = 0.2;
    let c = lagrangian_chart(true);
    let wb = Workbench::new(&c);
    let l = ex(&c, "1/2*v^2 - 1/2*q^2 - gamma*s");
    let d = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).map_err(|e| e.to_string())?, &[])
        .map_err(|e| e.to_string())?;
    let rhs =
        simulate::compile(d.z.as_ref().unwrap(), &BTreeMap::from([("gamma".into(), g)])).map_err(|e| e.to_string())?;
    let mut traj = simulate::integrate(&rhs, &[0.0, 1.0, 0.0, 0.0], 10.0, 1e-3).map_err(|e| e.to_string())?;
    // E = 1/2 v^2 + 1/2 q^2 obeys dE/dt = -γv²
    let law = Form::parse(&c, "v*dv + q*dq + gamma*v^2*dt").unwrap();
    let spec = [Monitor::Drift {
        name: "dissipation".into(),
        form: law,
    }];
    let drift = simulate::monitor(&mut traj, &rhs, &spec).map_err(|e| e.to_string())?[0].max_abs;
    ensure(drift < 1e-8, || format!("∫(dE + γv² dt) reaches {drift:e}"))?;

    let w = (1.0 - g * g / 4.0f64).sqrt();
    let mut worst: f64 = 0.0;
    for x in &traj.states {
        let t = x[0];
        let q = (-g * t / 2.0).exp() * ((w * t).cos() + g / (2.0 * w) * (w * t).sin());
        worst = worst.max((x[1] - q).abs());
    }
    ensure(worst < 1e-4, || format!("envelope error {worst:e}"))?;
    Ok(format!("dissipation drift {drift:.1e}; envelope error {worst:.1e}"))
}

fn lcs_structure() -> Outcome {
    const N: usize = 20;
    let c = common::tqvs();
    let wb = Workbench::new(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..N {
        let mut l = common::poly(&mut rng, &c);
        if !l.depends_on("s") {
            l = &l + &(ex(&c, "s") * common::poly(&mut rng, &c));
        }
        let eta = wb.herglotz_constraint(&l).map_err(|e| e.to_string())?;
        let u = wb.absorb_mixed(&l, &[eta]).map_err(|e| format!("L = {l}: {e}"))?;
        let w = u.omega_check.as_ref().ok_or("no Ω̌")?;
        let dps = Form::d_of(&u.chart, "ps");
        let lcs = &w.d() - &dps.wedge(w);
        ensure(lcs.is_zero(), || format!("L = {l}: dΩ̌ − dp_s∧Ω̌ = {lcs}"))?;
        let lee = w.lie(&VecField::partial(&u.chart, "ps"));
        ensure(lee.is_zero(), || format!("L = {l}: L_U Ω̌ = {lee}"))?;
    }
    Ok(format!("{N} Lagrangians"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("cocontact Hamiltonian golden field", cocontact_golden),
        ("regular Lagrangian golden field", regular_lagrangian),
        ("L = tv singular suite", time_dependent_singular),
        ("L = vs gauge suite", action_dependent_singular),
        ("L = s va + vb surface Reeb field", split_action),
        ("equivalence and absorption checks", equivalences),
        ("exterior algebra identities", algebra_properties),
        ("invariants along the flow", flow_invariants),
        ("damped oscillator dissipation law", dissipation),
        ("locally conformally symplectic Ω̌", lcs_structure),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
