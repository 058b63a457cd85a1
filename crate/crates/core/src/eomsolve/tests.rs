use super::*;
use crate::geomech::ConstraintSet;

fn chart(action: bool) -> Arc<Chart> {
    let mut b = Chart::builder().time("t").positions(&["q"]).velocities(&["v"]);
    if action {
        b = b.action("s");
    }
    b.param("gamma").function("L", &["t", "q", "v"]).build().unwrap()
}

fn hamiltonian_chart() -> Arc<Chart> {
    Chart::builder()
        .time("t")
        .positions(&["q"])
        .momenta(&["p"])
        .action("s")
        .function("H", &["t", "q", "p", "s"])
        .build()
        .unwrap()
}

fn ex(c: &Arc<Chart>, s: &str) -> Expr {
    c.parse(s).unwrap()
}

fn form(c: &Arc<Chart>, s: &str) -> Form {
    Form::parse(c, s).unwrap()
}

fn field(c: &Arc<Chart>, comps: &[&str]) -> VecField {
    VecField::new(c, comps.iter().map(|s| ex(c, s)).collect())
}

fn same(zt: &ZeroTest, a: &VecField, b: &VecField) -> bool {
    (a - b).zero_verdict(zt) == Verdict::Zero
}

fn lagrangian_problem(c: &Arc<Chart>, l: &str) -> GVProblem {
    let wb = Workbench::new(c);
    let omega = wb.poincare_cartan(&ex(c, l)).unwrap().d();
    let cs = ConstraintSet {
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    GVProblem::new(omega, cs, VariationClass::Vertical, "lagrangian")
}

fn herglotz_problem(c: &Arc<Chart>, l: &str) -> GVProblem {
    let wb = Workbench::new(c);
    let l = ex(c, l);
    let eta = wb.herglotz_constraint(&l).unwrap();
    let rs = VecField::partial(c, "s");
    let omega = wb.omega_bar_mixed(&l, std::slice::from_ref(&eta), &[rs]).unwrap();
    let cs = ConstraintSet {
        nonholonomic: vec![eta],
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    GVProblem::new(omega, cs, VariationClass::AdmissibleReduced, "herglotz")
}

#[test]
fn cocontact_hamiltonian_reduction_and_dynamics() {
    let c = hamiltonian_chart();
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let eta = form(&c, "H*dt + ds - p*dq");
    let rs = VecField::partial(&c, "s");
    let bar = wb
        .omega_bar_nonholonomic(&eta.d(), std::slice::from_ref(&eta), &[rs])
        .unwrap();
    let rt = VecField::partial(&c, "t");
    let split = wb.split_transversal(&bar, &rt).unwrap();
    let x = match check_transversality_reduction(&split.omega, &split.sigma_t, &rt, std::slice::from_ref(&eta), zt)
        .unwrap()
    {
        Transversality::Exists { x, kernel, conditions } => {
            assert!(kernel.is_empty());
            assert!(conditions.is_empty());
            x
        }
        other => panic!("{other:?}"),
    };
    let golden = field(&c, &["0", "-D(H, p)", "D(H, q) + p*D(H, s)", "H - p*D(H, p)"]);
    assert!(same(zt, &x, &golden), "{x}");

    let expected = &rt - &golden;
    for class in [VariationClass::Vertical, VariationClass::AdmissibleReduced] {
        let cs = ConstraintSet {
            nonholonomic: vec![eta.clone()],
            ..Default::default()
        };
        let d = derive_dynamics(&GVProblem::new(bar.clone(), cs, class, "cocontact"), zt).unwrap();
        assert_eq!(d.verdict, DynVerdict::Unique, "{class:?}");
        assert!(same(zt, d.z.as_ref().unwrap(), &expected));
    }
}

#[test]
fn regular_lagrangian_reduction() {
    let c = chart(false);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = ex(&c, "L");
    let rt = wb.lagrangian_reeb_time(&l).unwrap();
    let split = wb.split_transversal(&wb.poincare_cartan(&l).unwrap().d(), &rt).unwrap();
    let kappa = wb.cartan_forms().unwrap();
    let Transversality::Exists { x, kernel, .. } =
        check_transversality_reduction(&split.omega, &split.sigma_t, &rt, &kappa, zt).unwrap()
    else {
        panic!("no transversal solution");
    };
    assert!(kernel.is_empty());
    let lvv = l.diff("v").diff("v");
    let w = Expr::one().checked_div(&lvv).unwrap();
    let xv = -(&w * &(l.diff("q") - ex(&c, "v") * l.diff("v").diff("q")));
    let golden = VecField::new(&c, vec![Expr::zero(), ex(&c, "-v"), xv]);
    assert!(same(zt, &x, &golden), "{x}");

    let z = &rt - &x;
    let d = derive_dynamics(&lagrangian_problem(&c, "L"), zt).unwrap();
    assert_eq!(d.verdict, DynVerdict::Unique);
    assert!(same(zt, d.z.as_ref().unwrap(), &z));
    let el = &l.diff("v").diff("t") + &(ex(&c, "v") * l.diff("v").diff("q")) + z.comp(2) * &lvv - l.diff("q");
    assert_eq!(zt.verdict(&el), Verdict::Zero);
}

#[test]
fn time_dependent_singular_lagrangian_is_inconsistent() {
    let c = chart(false);
    let zt = ZeroTest::default();
    let d = derive_dynamics(&lagrangian_problem(&c, "t*v"), &zt).unwrap();
    assert_eq!(d.verdict, DynVerdict::Inconsistent);
    assert!(d.z.is_none());
    assert!(d.witness.unwrap().contains("0 = "));
}

#[test]
fn action_dependent_singular_lagrangian_has_gauge() {
    let c = chart(true);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = ex(&c, "v*s");
    let d = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).unwrap(), &[]).unwrap();
    assert_eq!(d.verdict, DynVerdict::Gauge);
    assert_eq!(d.gauge.len(), 1);
    assert_eq!(d.z.as_ref().unwrap().comp_named("s"), &ex(&c, "v*s"));
    assert_eq!(d.z.as_ref().unwrap().comp_named("q"), &ex(&c, "v"));
    assert!(same(zt, &d.gauge[0], &VecField::partial(&c, "v")));

    let g = derive_dynamics(&herglotz_problem(&c, "v*s"), zt).unwrap();
    assert_eq!(
        compare_dynamics(&d, &g, zt).unwrap(),
        (true, "solutions agree".to_string())
    );

    let pinned = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).unwrap(), &[ex(&c, "v - 1")]).unwrap();
    assert_eq!(pinned.verdict, DynVerdict::Unique);
    assert_eq!(pinned.surface.get("v"), Some(&Expr::one()));
    assert_eq!(pinned.z.as_ref().unwrap().comp_named("s"), &ex(&c, "s"));
    assert_eq!(pinned.z.as_ref().unwrap().comp_named("v"), &Expr::zero());
}

#[test]
fn damped_oscillator() {
    let c = chart(true);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let src = "1/2*v^2 - 1/2*q^2 - gamma*s";
    let l = ex(&c, src);
    let d = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).unwrap(), &[]).unwrap();
    assert_eq!(d.verdict, DynVerdict::Unique);
    let expected = field(&c, &["1", "v", "-q - gamma*v", src]);
    assert!(same(zt, d.z.as_ref().unwrap(), &expected));

    let g = derive_dynamics(&herglotz_problem(&c, src), zt).unwrap();
    assert_eq!(g.verdict, DynVerdict::Unique);
    assert!(same(zt, g.z.as_ref().unwrap(), &expected));
    assert!(unsatisfied(&herglotz_problem(&c, src), &g, zt).unwrap().is_empty());

    let e = verify_equivalence(
        &herglotz_problem(&c, src),
        &herglotz_problem(&c, src).with_class(VariationClass::AllFields),
        zt,
    )
    .unwrap();
    assert!(e.pass, "{}", e.reason);
    let flipped = verify_equivalence(
        &herglotz_problem(&c, src),
        &herglotz_problem(&c, "1/2*v^2 - 1/2*q^2 + gamma*s"),
        zt,
    )
    .unwrap();
    assert!(!flipped.pass);
    assert!(flipped.reason.starts_with("fields differ"), "{}", flipped.reason);
}

#[test]
fn skinner_rusk_secondary_constraint() {
    let c = chart(false);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let u = wb.absorb_holonomy(&ex(&c, "1/2*v^2")).unwrap();
    let p = GVProblem::new(
        u.omega_u.clone(),
        ConstraintSet::default(),
        VariationClass::Vertical,
        "skinner_rusk",
    );
    let d = derive_dynamics(&p, zt).unwrap();
    assert_eq!(d.verdict, DynVerdict::ConstrainedSurface);
    assert_eq!(d.secondary.len(), 1);
    let sec = &d.secondary[0];
    assert!(*sec == ex(&u.chart, "p - v") || *sec == ex(&u.chart, "v - p"), "{sec}");
    let z = d.z.as_ref().unwrap();
    assert!(z.comp_named("v").is_zero());
    assert_eq!(z.comp_named("q"), &ex(&u.chart, "v"));

    let base = derive_dynamics(&lagrangian_problem(&c, "1/2*v^2"), zt).unwrap();
    let pr = project_and_compare(&d, &base, &u.projection, zt).unwrap();
    assert!(pr.pass, "{}", pr.reason);
    assert_eq!(
        pr.offsets,
        vec![OffsetCheck {
            coordinate: "p".into(),
            constant_shift_solves: false
        }]
    );
}

#[test]
fn herglotz_absorption_projects_to_base() {
    let c = chart(true);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = ex(&c, "1/2*v^2 - 1/2*q^2 - gamma*s");
    let u = wb.absorb_mixed(&l, &[wb.herglotz_constraint(&l).unwrap()]).unwrap();
    let base = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).unwrap(), &[]).unwrap();
    for omega in [u.omega_u.clone(), u.omega_check.clone().unwrap()] {
        let p = GVProblem::new(
            omega,
            ConstraintSet::default(),
            VariationClass::Vertical,
            "herglotz_absorbed",
        );
        let d = derive_dynamics(&p, zt).unwrap();
        let pr = project_and_compare(&d, &base, &u.projection, zt).unwrap();
        assert!(pr.pass, "{} {:?} {:?}", pr.reason, d.verdict, d.secondary);
        let ps = pr.offsets.iter().find(|o| o.coordinate == "ps").unwrap();
        assert!(ps.constant_shift_solves);
    }
}

#[test]
fn corrupted_projection_fails() {
    let c = chart(false);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let u = wb.absorb_holonomy(&ex(&c, "1/2*v^2 - 1/2*q^2")).unwrap();
    let p = GVProblem::new(
        u.omega_u.clone(),
        ConstraintSet::default(),
        VariationClass::Vertical,
        "skinner_rusk",
    );
    let d = derive_dynamics(&p, zt).unwrap();
    let good = derive_dynamics(&lagrangian_problem(&c, "1/2*v^2 - 1/2*q^2"), zt).unwrap();
    assert!(project_and_compare(&d, &good, &u.projection, zt).unwrap().pass);
    let bad = derive_dynamics(&lagrangian_problem(&c, "1/2*v^2 + 1/2*q^2"), zt).unwrap();
    assert!(!project_and_compare(&d, &bad, &u.projection, zt).unwrap().pass);
}

#[test]
fn surface_map_prefers_constant_coefficients() {
    let c = chart(true);
    let zt = ZeroTest::default();
    let m = surface_map(&c, &[ex(&c, "v - 1"), ex(&c, "s*q - v")], &zt).unwrap();
    assert_eq!(m.get("v"), Some(&Expr::one()));
    assert_eq!(m.get("s"), Some(&ex(&c, "1/q")));
    let m = surface_map(&c, &[ex(&c, "2*q - s*v")], &zt).unwrap();
    assert_eq!(m.get("q"), Some(&ex(&c, "1/2*s*v")));
}

#[test]
fn time_dependent_lagrangian_variants_are_inconsistent() {
    let c = chart(true);
    let wb = Workbench::new(&c);
    let zt = wb.zero_test();
    let l = ex(&c, "t*v");
    let d = herglotz_el(&wb, &l, &wb.herglotz_constraint(&l).unwrap(), &[]).unwrap();
    assert_eq!(d.verdict, DynVerdict::Inconsistent);

    let c = chart(false);
    let wb = Workbench::new(&c);
    let m = wb.modified_precosymplectic(&ex(&c, "t*v")).unwrap();
    assert!(m.omega.is_zero());
    let cs = ConstraintSet {
        vakonomic: wb.cartan_forms().unwrap(),
        ..Default::default()
    };
    let p = GVProblem::new(m.two_form(), cs, VariationClass::AllFields, "modified_precosymplectic");
    let d = derive_dynamics(&p, zt).unwrap();
    assert_eq!(d.verdict, DynVerdict::Inconsistent);
    let r = check_transversality_reduction(&m.omega, &m.sigma_t, &m.reeb, &wb.cartan_forms().unwrap(), zt).unwrap();
    assert!(matches!(r, Transversality::NoSolution { .. }));
}
