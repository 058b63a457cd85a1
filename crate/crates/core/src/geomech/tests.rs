use super::*;
use crate::excalc::kernel_basis;

fn tqv() -> Arc<Chart> {
    Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .build()
        .unwrap()
}

fn tqvs() -> Arc<Chart> {
    Chart::builder()
        .time("t")
        .positions(&["q"])
        .velocities(&["v"])
        .action("s")
        .param("gamma")
        .function("L", &["t", "q", "v", "s"])
        .function("A", &["t", "q", "v", "s"])
        .function("B", &["t", "q", "v", "s"])
        .build()
        .unwrap()
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

fn form(c: &Arc<Chart>, s: &str) -> Form {
    Form::parse(c, s).unwrap()
}

fn ex(c: &Arc<Chart>, s: &str) -> Expr {
    c.parse(s).unwrap()
}

#[test]
fn cartan_forms_pair_positions_with_velocities() {
    let c = tqv();
    assert_eq!(Workbench::new(&c).cartan_forms().unwrap(), vec![form(&c, "dq - v*dt")]);
    let c2 = Chart::builder()
        .time("t")
        .positions(&["qa", "qb"])
        .velocities(&["va", "vb"])
        .build()
        .unwrap();
    let k = Workbench::new(&c2).cartan_forms().unwrap();
    assert_eq!(k, vec![form(&c2, "dqa - va*dt"), form(&c2, "dqb - vb*dt")]);
    let c3 = Chart::builder().time("t").positions(&["q"]).build().unwrap();
    assert_eq!(
        Workbench::new(&c3).cartan_forms(),
        Err(GeomError::MissingRole("velocity"))
    );
    let c4 = Chart::builder().positions(&["q"]).velocities(&["v"]).build().unwrap();
    assert_eq!(Workbench::new(&c4).cartan_forms(), Err(GeomError::MissingRole("time")));
}

#[test]
fn energy_and_poincare_cartan() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    assert!(wb.lagrangian_energy(&ex(&c, "t*v")).is_zero());
    assert!(wb.lagrangian_energy(&ex(&c, "v*s")).is_zero());
    assert_eq!(
        wb.lagrangian_energy(&ex(&c, "1/2*v^2 - 1/2*q^2")),
        ex(&c, "1/2*v^2 + 1/2*q^2")
    );
    assert_eq!(wb.poincare_cartan(&ex(&c, "t*v")).unwrap(), form(&c, "t*dq"));
    assert_eq!(
        wb.poincare_cartan(&ex(&c, "1/2*v^2")).unwrap(),
        form(&c, "v*dq - 1/2*v^2*dt")
    );
    assert!(wb.poincare_cartan(&Expr::zero()).unwrap().is_zero());
}

#[test]
fn hessian_inverse_cases() {
    let c = tqv();
    let wb = Workbench::new(&c);
    assert_eq!(
        wb.hessian_inverse(&ex(&c, "1/2*v^2")).unwrap(),
        Hessian::Regular(vec![vec![Expr::one()]])
    );
    let c = tqvs();
    match Workbench::new(&c).hessian_inverse(&ex(&c, "v*s")).unwrap() {
        Hessian::Singular { null_vectors, .. } => assert_eq!(null_vectors, vec![vec![Expr::one()]]),
        h => panic!("expected singular, got {h:?}"),
    }
    let c2 = Chart::builder()
        .time("t")
        .positions(&["q1", "q2"])
        .velocities(&["v1", "v2"])
        .build()
        .unwrap();
    let l = ex(&c2, "1/2*v1^2 + 2*v2^2");
    let wb2 = Workbench::new(&c2);
    let Hessian::Regular(w) = wb2.hessian_inverse(&l).unwrap() else {
        panic!("regular");
    };
    assert_eq!(
        w,
        vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::ratio(1, 4)]]
    );
    let h = wb2.hessian(&l);
    for i in 0..2 {
        for k in 0..2 {
            let p: Expr = (0..2).map(|j| &w[i][j] * &h[j][k]).sum();
            assert_eq!(p, if i == k { Expr::one() } else { Expr::zero() });
        }
    }
}

#[test]
fn herglotz_constraint_examples() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    assert_eq!(wb.herglotz_constraint(&ex(&c, "v*s")).unwrap(), form(&c, "ds - s*dq"));
    // E_L = 1/2 v^2 + 1/2 q^2 + gamma s
    assert_eq!(
        wb.herglotz_constraint(&ex(&c, "1/2*v^2 - 1/2*q^2 - gamma*s")).unwrap(),
        form(&c, "ds + (1/2*v^2 + 1/2*q^2 + gamma*s)*dt - v*dq")
    );
    assert_eq!(wb.herglotz_constraint(&Expr::zero()).unwrap(), form(&c, "ds"));
}

#[test]
fn split_of_cosymplectic_hamiltonian() {
    let c = Chart::builder()
        .time("t")
        .positions(&["q"])
        .momenta(&["p"])
        .function("H", &["t", "q", "p"])
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let dh = Form::scalar(&c, ex(&c, "H")).d();
    let big = &form(&c, "dp^dq") - &dh.wedge(&form(&c, "dt"));
    let s = wb.split_transversal(&big, &VecField::partial(&c, "t")).unwrap();
    assert_eq!(s.omega, form(&c, "dp^dq"));
    assert_eq!(s.sigma_t, &dh - &form(&c, "D(H, t)*dt"));
    let bad = wb.split_transversal(&big, &VecField::partial(&c, "q"));
    assert!(matches!(bad, Err(GeomError::Normalization { .. })));
    let flat = form(&c, "dp^dq");
    let s = wb.split_transversal(&flat, &VecField::partial(&c, "t")).unwrap();
    assert!(s.sigma_t.is_zero());
    assert_eq!(s.omega, flat);
}

#[test]
fn cocontact_hamiltonian_forms() {
    let c = hamiltonian_chart();
    let wb = Workbench::new(&c);
    let eta = form(&c, "H*dt + ds - p*dq");
    let dh = Form::scalar(&c, ex(&c, "H")).d();
    let omega = &dh.wedge(&form(&c, "dt")) - &form(&c, "dp^dq");
    assert_eq!(omega, eta.d());
    let rs = VecField::partial(&c, "s");
    let bar = wb
        .omega_bar_nonholonomic(&omega, std::slice::from_ref(&eta), std::slice::from_ref(&rs))
        .unwrap();
    let sigma_s = form(&c, "D(H, s)*dt");
    assert_eq!(omega.interior(&rs), sigma_s);
    assert_eq!(bar, &eta.d() + &sigma_s.wedge(&eta));
    let s = wb.split_transversal(&bar, &VecField::partial(&c, "t")).unwrap();
    assert_eq!(s.sigma_t, form(&c, "-D(H, p)*dp - (D(H, q) + p*D(H, s))*dq"));
    assert_eq!(s.omega, form(&c, "-dp^dq"));
    assert_eq!(wb.omega_bar_nonholonomic(&omega, &[], &[]).unwrap(), omega);

    // contraction identity on ker τ ∩ ker η
    let tau = wb.tau().unwrap();
    for x in kernel_basis(&c, None, &[tau, eta.clone()], wb.zero_test()).unwrap() {
        assert_eq!(bar.interior(&x), omega.interior(&x));
    }
}

#[test]
fn omega_bar_checks_hypotheses() {
    let c = hamiltonian_chart();
    let wb = Workbench::new(&c);
    let omega = form(&c, "dp^dq");
    let eta = form(&c, "ds - p*dq");
    let err = wb.omega_bar_nonholonomic(&omega, std::slice::from_ref(&eta), &[VecField::partial(&c, "q")]);
    assert!(matches!(err, Err(GeomError::Normalization { .. })));
    let err = wb.omega_bar_nonholonomic(&omega, &[form(&c, "dt")], &[VecField::partial(&c, "s")]);
    assert_eq!(err, Err(GeomError::NotCoOriented));
}

#[test]
fn reeb_solve_examples() {
    let c = tqv();
    let wb = Workbench::new(&c);
    let l = ex(&c, "t*v");
    let wl = wb.lagrangian_two_form(&l).unwrap();
    assert_eq!(wl, form(&c, "-dt^dq"));
    let r = wb.reeb_solve(&[(wb.tau().unwrap(), Expr::one())], &[wl]).unwrap();
    assert!(matches!(r, ReebSolution::NoSolution { .. }));

    let c = Chart::builder()
        .positions(&["q"])
        .momenta(&["p"])
        .action("s")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let eta = form(&c, "ds - p*dq");
    let r = wb.reeb_solve(&[(eta.clone(), Expr::one())], &[eta.d()]).unwrap();
    match r {
        ReebSolution::Family { particular, kernel } => {
            assert_eq!(particular, VecField::partial(&c, "s"));
            assert!(kernel.is_empty());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn function_constraints_lift_to_differentials() {
    let c = tqvs();
    let cs = ConstraintSet {
        functions: vec![ex(&c, "q - 1")],
        ..Default::default()
    };
    let lifted = cs.lift_function_constraints(&c);
    assert_eq!(lifted.nonholonomic, vec![form(&c, "dq")]);
    assert_eq!(lifted.functions, cs.functions);
    let cs = ConstraintSet {
        functions: vec![ex(&c, "q*s")],
        ..Default::default()
    };
    assert_eq!(
        cs.lift_function_constraints(&c).nonholonomic,
        vec![form(&c, "s*dq + q*ds")]
    );
    assert_eq!(
        ConstraintSet::default().lift_function_constraints(&c),
        ConstraintSet::default()
    );
}

#[test]
fn compatibility_conditions() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let kappas = wb.cartan_forms().unwrap();
    let eta = wb.herglotz_constraint(&ex(&c, "L")).unwrap();
    let comp = wb.compatibility_check(&[eta], &kappas).unwrap();
    assert!(comp.holds(), "{comp:?}");
    assert_eq!(comp.independence.witness, "-dt^dq^dv^ds");
    let comp = wb.compatibility_check(&[form(&c, "dv")], &kappas).unwrap();
    assert!(!comp.cartan_annihilates.holds);
    assert_eq!(comp.cartan_annihilates.witness, "i_∂v η0 = 1");
    let c = tqv();
    let wb = Workbench::new(&c);
    assert!(wb
        .compatibility_check(&[], &wb.cartan_forms().unwrap())
        .unwrap()
        .holds());
}

#[test]
fn cartan_form_wedge_its_differential() {
    let c = tqv();
    let k = form(&c, "dq - v*dt");
    assert_eq!(k.wedge(&k.d()), form(&c, "-dt^dq^dv"));
    assert!(form(&c, "dt").wedge(&k).wedge(&k.d()).is_zero());
}

#[test]
fn omega_bar_mixed_regular_action_dependent() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let l = ex(&c, "L");
    let eta = wb.herglotz_constraint(&l).unwrap();
    let rs = wb.lagrangian_reeb_action(&l).unwrap();
    assert_eq!(
        rs,
        VecField::new(
            &c,
            vec![
                Expr::zero(),
                Expr::zero(),
                -ex(&c, "D(L, v, s)/D(L, v, v)"),
                Expr::one()
            ]
        )
    );
    let dtheta = wb.poincare_cartan(&l).unwrap().d();
    let sigma_s = dtheta.interior(&rs);
    assert_eq!(sigma_s, form(&c, "D(L, s)*dt"));
    assert_eq!(dtheta, -&eta.d());
    let bar = wb.omega_bar_mixed(&l, std::slice::from_ref(&eta), &[rs]).unwrap();
    assert_eq!(bar, -&(&eta.d() - &sigma_s.wedge(&eta)));
    assert_eq!(
        wb.omega_bar_mixed(&l, &[], &[]),
        Err(GeomError::Incompatible("0 constraints for 1 action coordinates".into()))
    );
    let c0 = tqv();
    let wb0 = Workbench::new(&c0);
    let l0 = ex(&c0, "1/2*v^2 - q^3");
    assert_eq!(
        wb0.omega_bar_mixed(&l0, &[], &[]).unwrap(),
        wb0.poincare_cartan(&l0).unwrap().d()
    );
}

#[test]
fn generic_reeb_for_singular_action_lagrangian() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let l = ex(&c, "v*s");
    let eta = wb.herglotz_constraint(&l).unwrap();
    let (a, b) = (ex(&c, "A"), ex(&c, "B"));
    let rs = VecField::new(&c, vec![Expr::zero(), a.clone(), b, Expr::one() + &a * ex(&c, "s")]);
    let dtheta = wb.poincare_cartan(&l).unwrap().d();
    let sigma = dtheta.interior(&rs);
    // ∂L/∂s dt + A(∂L/∂q dt − d ∂L/∂v + ∂L/∂s ∂L/∂v dt) + R_s(∂L/∂v) κ
    let kappa = form(&c, "dq - v*dt");
    let expected = &(&form(&c, "v*dt") + &form(&c, "-ds + v*s*dt").scale(&a)) + &kappa.scale(&rs.apply(&ex(&c, "s")));
    assert_eq!(sigma, expected);
    let bar = wb.omega_bar_mixed(&l, std::slice::from_ref(&eta), &[rs]).unwrap();
    assert_eq!(bar, &dtheta + &sigma.wedge(&eta));
}

#[test]
fn absorbed_herglotz_forms() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let l = ex(&c, "L");
    let u = wb.absorb_mixed(&l, &[wb.herglotz_constraint(&l).unwrap()]).unwrap();
    assert_eq!(u.chart.to_string(), "(t, q, v, s, p, ps)");
    let w = u.omega_check.as_ref().unwrap();
    let e = u.eta_check.as_ref().unwrap();
    assert_eq!(*e, form(&u.chart, "ds - p*dq + p*v*dt - L*dt"));
    let dps = form(&u.chart, "dps");
    assert!((&w.d() - &dps.wedge(w)).is_zero());
    assert!(w.lie(&VecField::partial(&u.chart, "ps")).is_zero());

    let c0 = tqv();
    let wb0 = Workbench::new(&c0);
    let l0 = ex(&c0, "1/2*v^2");
    assert_eq!(wb0.absorb_mixed(&l0, &[]).unwrap(), wb0.absorb_holonomy(&l0).unwrap());
    let h = wb0.absorb_holonomy(&l0).unwrap();
    assert_eq!(h.omega_u, form(&h.chart, "v*dv^dt + dp^dq - v*dp^dt - p*dv^dt"));
}

#[test]
fn modified_precosymplectic_examples() {
    let c = tqv();
    let wb = Workbench::new(&c);
    let m = wb.modified_precosymplectic(&ex(&c, "t*v")).unwrap();
    assert!(m.omega.is_zero());
    assert_eq!(m.sigma_t, form(&c, "dq"));
    assert_eq!(m.two_form(), wb.poincare_cartan(&ex(&c, "t*v")).unwrap().d());
    let l = ex(&c, "1/2*v^2 - 1/2*q^2");
    let m = wb.modified_precosymplectic(&l).unwrap();
    assert_eq!(m.omega, form(&c, "dv^dq"));
    assert_eq!(m.omega, -&wb.lagrangian_two_form(&l).unwrap());
    assert_eq!(m.reeb, VecField::partial(&c, "t"));
    let l = ex(&c, "t^2*v^3 - q*v*t");
    let m = wb.modified_precosymplectic(&l).unwrap();
    assert!(m.omega.interior(&m.reeb).is_zero());
    assert!(m.sigma_t.interior(&m.reeb).is_zero());
    let split = wb
        .split_transversal(&wb.poincare_cartan(&l).unwrap().d(), &m.reeb)
        .unwrap();
    assert_eq!(split.omega, m.omega);
    assert_eq!(split.sigma_t, m.sigma_t);
}

#[test]
fn premulticontact_for_split_lagrangian() {
    let c = Chart::builder()
        .time("t")
        .positions(&["qa", "qb"])
        .velocities(&["va", "vb"])
        .action("s")
        .build()
        .unwrap();
    let wb = Workbench::new(&c);
    let pm = wb.premulticontact_reeb(&ex(&c, "s*va + vb")).unwrap();
    assert!(matches!(pm.sufficient, ReebSolution::NoSolution { row: Some(0), .. }));
    assert_eq!(pm.surface_eta, form(&pm.surface, "ds - s*dqa - dqb"));
    assert_eq!(
        pm.surface_reeb.particular().unwrap(),
        &-&VecField::partial(&pm.surface, "qb")
    );
    assert!(pm.holds());
}

#[test]
fn premulticontact_regular_family() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let l = ex(&c, "1/2*v^2*s + q*v*s - gamma*s");
    let pm = wb.premulticontact_reeb(&l).unwrap();
    let ReebSolution::Family { particular, kernel } = &pm.sufficient else {
        panic!("solvable");
    };
    // g = −W ∂²L/∂s∂v
    assert_eq!(*particular.comp_named("v"), -ex(&c, "(v + q)/s"));
    assert_eq!(kernel.len(), 1);
}

#[test]
fn classify_examples() {
    let c = tqvs();
    let wb = Workbench::new(&c);
    let r = wb.classify(&ex(&c, "1/2*v^2 - 1/2*q^2")).unwrap();
    assert_eq!(r.cosymplectic.as_ref().unwrap().holds, Some(true));
    assert!(r.hessian.regular);
    let r = wb.classify(&ex(&c, "v*s")).unwrap();
    let reeb = r.contact_reeb.unwrap();
    assert!(!reeb.exists);
    let pc = r.precontact.unwrap();
    assert_eq!((pc.restricted_rank, pc.kernel_dimension, pc.holds), (0, 1, false));
    assert_eq!(r.lcs.unwrap().holds, Some(true));
    assert_eq!(r.lee.unwrap().holds, Some(true));
    let r = wb.classify(&ex(&c, "t*v")).unwrap();
    assert!(!r.cosymplectic_reeb.unwrap().exists);
    assert_eq!(r.cosymplectic.unwrap().holds, Some(false));
    assert_eq!(r.autonomous.unwrap().holds, Some(true));
}
