use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::eomsolve::{
    check_transversality_reduction, compare_dynamics, derive_dynamics, herglotz_el, project_and_compare,
    verify_equivalence, DynVerdict, Dynamics, Projection,
};
use crate::excalc::{Chart, CoordMap, Form, VecField};
use crate::geomech::{ConstraintSet, GVProblem, Hessian, VariationClass, Workbench};
use crate::simulate::{self, Monitor};
use crate::symexpr::{Expr, ZeroTest};

use super::report::{CheckReport, DynamicsReport, IntegrationReport, Report, StageReport, TransversalityReport};
use super::{CliError, Problem, Stage, EXIT_GAUGE, EXIT_INCONSISTENT, EXIT_OK, EXIT_VERIFY};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Derive,
    Classify,
    Integrate,
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Derive => "derive",
            Command::Classify => "classify",
            Command::Integrate => "integrate",
            Command::Verify => "verify",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    /// Trajectory CSV path; `<stem>.csv` in the working directory by default.
    pub csv: Option<PathBuf>,
}

/// Report together with the process exit code.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

/// Everything a stage produced, for reporting and later commands.
struct Built {
    stage: Stage,
    chart: Arc<Chart>,
    forms: Vec<(String, Form)>,
    dynamics: Option<Dynamics>,
    transversality: Option<TransversalityReport>,
    structure: Option<crate::geomech::StructureReport>,
    /// `(Ω, R_t)` whose `i_Z i_{R_t} Ω` is the dissipation residual.
    split: Option<(Form, VecField)>,
    /// Labelled 1-form constraints of the solved problem.
    constraint_forms: Vec<(String, Form)>,
    functions: Vec<Expr>,
    energy: Option<Expr>,
    checks: Vec<CheckReport>,
}

impl Built {
    fn new(stage: Stage, chart: &Arc<Chart>) -> Self {
        Built {
            stage,
            chart: chart.clone(),
            forms: Vec::new(),
            dynamics: None,
            transversality: None,
            structure: None,
            split: None,
            constraint_forms: Vec::new(),
            functions: Vec::new(),
            energy: None,
            checks: Vec::new(),
        }
    }

    fn report(&self) -> StageReport {
        StageReport {
            stage: self.stage.name().to_string(),
            chart: self.chart.to_string(),
            forms: self.forms.iter().map(|(k, f)| (k.clone(), f.to_string())).collect(),
            dynamics: self.dynamics.as_ref().map(DynamicsReport::from),
            transversality: self.transversality.clone(),
            structure: self.structure.clone(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, reason: String) {
        self.checks.push(CheckReport {
            name: format!("{}: {name}", self.stage),
            pass,
            reason,
        });
    }
}

/// `Ω + 2 (i_{∂t}Ω)∧dt`, which reverses the sign of the time part of `Ω`.
fn corrupt(omega: &Form) -> Form {
    let chart = omega.chart();
    let t = chart.time().expect("time coordinate");
    let sigma = omega.interior(&VecField::basis(chart, t));
    omega + &sigma.wedge(&Form::dx(chart, t)).scale(&Expr::int(2))
}

fn class_for(nonholonomic: &[Form]) -> VariationClass {
    if nonholonomic.is_empty() {
        VariationClass::Vertical
    } else {
        VariationClass::AdmissibleReduced
    }
}

fn labelled(cs: &ConstraintSet, nh_label: &str) -> Vec<(String, Form)> {
    let mut out = Vec::new();
    for (k, a) in cs.nonholonomic.iter().enumerate() {
        out.push((if k == 0 { nh_label.to_string() } else { format!("nh{k}") }, a.clone()));
    }
    for (k, a) in cs.vakonomic.iter().enumerate() {
        out.push((format!("kappa{k}"), a.clone()));
    }
    out
}

struct Ctx<'a> {
    p: &'a Problem,
    wb: Workbench,
    zt: ZeroTest,
    verify: bool,
}

impl Ctx<'_> {
    fn chart(&self) -> &Arc<Chart> {
        &self.p.chart
    }

    fn functions(&self) -> Vec<Expr> {
        self.p.functions.iter().chain(&self.p.pins).cloned().collect()
    }

    fn vakonomic(&self) -> Result<Vec<Form>, CliError> {
        match &self.p.vakonomic {
            Some(v) => Ok(v.clone()),
            None => Ok(self.wb.cartan_forms()?),
        }
    }

    fn maybe_corrupt(&self, omega: &Form) -> Form {
        if self.p.file.verify.corrupt {
            corrupt(omega)
        } else {
            omega.clone()
        }
    }

    fn equivalence(&self, b: &mut Built, name: &str, p1: &GVProblem, p2: &GVProblem) -> Result<(), CliError> {
        let p2 = GVProblem {
            omega: self.maybe_corrupt(&p2.omega),
            ..p2.clone()
        };
        let e = verify_equivalence(p1, &p2, &self.zt)?;
        b.check(name, e.pass, e.reason);
        Ok(())
    }

    fn lagrangian_problem(&self, omega: Form) -> Result<(GVProblem, ConstraintSet), CliError> {
        let cs = ConstraintSet {
            functions: self.functions(),
            nonholonomic: self.p.nonholonomic.clone(),
            vakonomic: self.vakonomic()?,
        };
        let class = class_for(&cs.nonholonomic);
        Ok((GVProblem::new(omega, cs.clone(), class, "lagrangian"), cs))
    }

    fn hamiltonian(&self) -> Result<Built, CliError> {
        let c = self.chart();
        let h = self.p.hamiltonian()?;
        let t = c.time().expect("time");
        let mut theta = Form::dx(c, t).scale(&-h);
        let (qs, ps) = (c.positions(), c.momenta());
        if ps.is_empty() || ps.len() != qs.len() {
            return Err(CliError::Parse(
                "hamiltonian stage needs one momentum per position".into(),
            ));
        }
        for (&q, &p) in qs.iter().zip(&ps) {
            theta = &theta + &Form::dx(c, q).scale(&c.var(p));
        }
        let omega = theta.d();
        let cs = ConstraintSet {
            functions: self.functions(),
            nonholonomic: self.p.nonholonomic.clone(),
            vakonomic: self.p.vakonomic.clone().unwrap_or_default(),
        };
        let problem = GVProblem::new(omega.clone(), cs.clone(), class_for(&cs.nonholonomic), "hamiltonian");
        let rt = VecField::basis(c, t);
        let split = self.wb.split_transversal(&omega, &rt)?;
        let tr = check_transversality_reduction(&split.omega, &split.sigma_t, &rt, &cs.one_forms(), &self.zt)?;
        let mut b = Built::new(Stage::Hamiltonian, c);
        b.forms = vec![
            ("theta_h".into(), theta),
            ("omega".into(), omega.clone()),
            ("omega_t".into(), split.omega),
            ("sigma_t".into(), split.sigma_t),
        ];
        b.transversality = Some((&tr).into());
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        b.split = Some((omega, rt));
        b.constraint_forms = labelled(&cs, "nh0");
        b.functions = cs.functions.clone();
        b.energy = Some(h.clone());
        if self.verify {
            self.equivalence(
                &mut b,
                "vertical vs all fields",
                &problem,
                &problem.with_class(VariationClass::AllFields),
            )?;
        }
        Ok(b)
    }

    fn cocontact(&self) -> Result<Built, CliError> {
        let c = self.chart();
        let h = self.p.hamiltonian()?;
        let t = c.time().expect("time");
        let s = c
            .action()
            .ok_or_else(|| CliError::Parse("cocontact stage needs an action coordinate".into()))?;
        let (qs, ps) = (c.positions(), c.momenta());
        if ps.is_empty() || ps.len() != qs.len() {
            return Err(CliError::Parse(
                "cocontact stage needs one momentum per position".into(),
            ));
        }
        let mut eta = &Form::dx(c, s) + &Form::dx(c, t).scale(h);
        for (&q, &p) in qs.iter().zip(&ps) {
            eta = &eta - &Form::dx(c, q).scale(&c.var(p));
        }
        let omega = eta.d();
        let rs = VecField::basis(c, s);
        let bar = self.wb.omega_bar_nonholonomic(&omega, &[eta.clone()], &[rs])?;
        let mut nh = vec![eta.clone()];
        nh.extend(self.p.nonholonomic.iter().cloned());
        let cs = ConstraintSet {
            functions: self.functions(),
            nonholonomic: nh,
            vakonomic: self.p.vakonomic.clone().unwrap_or_default(),
        };
        let plain = GVProblem::new(
            omega.clone(),
            cs.clone(),
            VariationClass::AdmissibleReduced,
            "cocontact",
        );
        let problem = GVProblem::new(bar.clone(), cs.clone(), VariationClass::Vertical, "cocontact_bar");
        let rt = VecField::basis(c, t);
        let split = self.wb.split_transversal(&bar, &rt)?;
        let tr = check_transversality_reduction(&split.omega, &split.sigma_t, &rt, &cs.one_forms(), &self.zt)?;
        let mut b = Built::new(Stage::CocontactHamiltonian, c);
        b.forms = vec![
            ("eta".into(), eta),
            ("omega".into(), omega),
            ("omega_bar".into(), bar.clone()),
            ("omega_t".into(), split.omega),
            ("sigma_t".into(), split.sigma_t),
        ];
        b.transversality = Some((&tr).into());
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        b.split = Some((bar, rt));
        b.constraint_forms = labelled(&cs, "eta");
        b.functions = cs.functions.clone();
        b.energy = Some(h.clone());
        if self.verify {
            self.equivalence(&mut b, "nonholonomic reduction", &plain, &problem)?;
            self.equivalence(
                &mut b,
                "transversality reduction",
                &problem,
                &problem.with_class(VariationClass::AllFields),
            )?;
        }
        Ok(b)
    }

    fn lagrangian(&self) -> Result<Built, CliError> {
        let c = self.chart();
        let l = self.p.lagrangian()?;
        let t = c.time().expect("time");
        let theta = self.wb.poincare_cartan(l)?;
        let omega = theta.d();
        let (problem, cs) = self.lagrangian_problem(omega.clone())?;
        let mut b = Built::new(Stage::Lagrangian, c);
        b.forms = vec![("theta_l".into(), theta), ("omega".into(), omega.clone())];
        if let Hessian::Regular(_) = self.wb.hessian_inverse(l)? {
            let rt = self.wb.lagrangian_reeb_time(l)?;
            let split = self.wb.split_transversal(&omega, &rt)?;
            let tr = check_transversality_reduction(&split.omega, &split.sigma_t, &rt, &cs.one_forms(), &self.zt)?;
            b.transversality = Some((&tr).into());
            b.forms.push(("omega_t".into(), split.omega));
            b.forms.push(("sigma_t".into(), split.sigma_t));
        }
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        b.split = Some((omega, VecField::basis(c, t)));
        b.constraint_forms = labelled(&cs, "nh0");
        b.functions = cs.functions.clone();
        b.energy = Some(self.wb.lagrangian_energy(l));
        if self.verify {
            self.equivalence(
                &mut b,
                "vertical vs all fields",
                &problem,
                &problem.with_class(VariationClass::AllFields),
            )?;
        }
        Ok(b)
    }

    /// `R_t = ∂t + v^i ∂q^i + L ∂s`, annihilating `η` and every `κ^i`.
    fn herglotz_rt(&self, chart: &Arc<Chart>, l: &Expr) -> VecField {
        let mut r = VecField::basis(chart, chart.time().expect("time"));
        for (q, v) in self.chart().positions().into_iter().zip(self.chart().velocities()) {
            let qi = chart.index(self.chart().name(q)).expect("position");
            r.set(qi, chart.expr(self.chart().name(v)));
        }
        r.set(chart.action().expect("action"), l.clone());
        r
    }

    fn herglotz_base(&self) -> Result<(Dynamics, Form), CliError> {
        let l = self.p.lagrangian()?;
        let eta = self.wb.herglotz_constraint(l)?;
        Ok((herglotz_el(&self.wb, l, &eta, &self.functions())?, eta))
    }

    fn herglotz(&self) -> Result<Built, CliError> {
        let c = self.chart();
        let l = self.p.lagrangian()?;
        let s = c
            .action()
            .ok_or_else(|| CliError::Parse("herglotz stage needs an action coordinate".into()))?;
        let (dynamics, eta) = self.herglotz_base()?;
        let rs = match self.wb.hessian_inverse(l)? {
            Hessian::Regular(_) => self.wb.lagrangian_reeb_action(l)?,
            Hessian::Singular { .. } => VecField::basis(c, s),
        };
        let bar = self
            .wb
            .omega_bar_mixed(l, std::slice::from_ref(&eta), std::slice::from_ref(&rs))?;
        let theta = self.wb.poincare_cartan(l)?;
        let mut nh = vec![eta.clone()];
        nh.extend(self.p.nonholonomic.iter().cloned());
        let cs = ConstraintSet {
            functions: self.functions(),
            nonholonomic: nh,
            vakonomic: self.vakonomic()?,
        };
        let problem = GVProblem::new(
            bar.clone(),
            cs.clone(),
            VariationClass::AdmissibleReduced,
            "herglotz_bar",
        );
        let plain = GVProblem::new(theta.d(), cs.clone(), VariationClass::AdmissibleReduced, "herglotz");
        let rt = self.herglotz_rt(c, l);
        let split = self.wb.split_transversal(&bar, &rt)?;
        let tr = check_transversality_reduction(&split.omega, &split.sigma_t, &rt, &cs.one_forms(), &self.zt)?;
        let mut b = Built::new(Stage::Herglotz, c);
        b.forms = vec![
            ("eta".into(), eta),
            ("theta_l".into(), theta),
            ("omega_bar".into(), bar.clone()),
            ("omega_t".into(), split.omega),
            ("sigma_t".into(), split.sigma_t),
        ];
        b.transversality = Some((&tr).into());
        if self.verify {
            let corrupted = GVProblem {
                omega: self.maybe_corrupt(&bar),
                ..problem.clone()
            };
            let other = derive_dynamics(&corrupted, &self.zt)?;
            let (pass, reason) = compare_dynamics(&dynamics, &other, &self.zt)?;
            b.check("Herglotz-Euler-Lagrange vs Ω̄", pass, reason);
            self.equivalence(&mut b, "nonholonomic reduction", &plain, &problem)?;
            self.equivalence(
                &mut b,
                "transversality reduction",
                &problem,
                &problem.with_class(VariationClass::AllFields),
            )?;
        }
        b.dynamics = Some(dynamics);
        b.split = Some((bar, rt));
        b.constraint_forms = labelled(&cs, "eta");
        b.functions = cs.functions.clone();
        b.energy = Some(self.wb.lagrangian_energy(l));
        Ok(b)
    }

    fn modified(&self) -> Result<Built, CliError> {
        let c = self.chart();
        let l = self.p.lagrangian()?;
        let m = self.wb.modified_precosymplectic(l)?;
        let omega = m.two_form();
        let (lag, cs) = self.lagrangian_problem(self.wb.poincare_cartan(l)?.d())?;
        let problem = GVProblem::new(
            omega.clone(),
            cs.clone(),
            VariationClass::AllFields,
            "modified_precosymplectic",
        );
        let tr = check_transversality_reduction(&m.omega, &m.sigma_t, &m.reeb, &cs.one_forms(), &self.zt)?;
        let mut b = Built::new(Stage::ModifiedPrecosymplectic, c);
        b.forms = vec![
            ("omega".into(), m.omega.clone()),
            ("sigma_t".into(), m.sigma_t.clone()),
            ("two_form".into(), omega.clone()),
        ];
        b.transversality = Some((&tr).into());
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        b.split = Some((omega, m.reeb.clone()));
        b.constraint_forms = labelled(&cs, "nh0");
        b.functions = cs.functions.clone();
        b.energy = Some(self.wb.lagrangian_energy(l));
        if self.verify {
            self.equivalence(&mut b, "modified vs Lagrangian", &lag, &problem)?;
        }
        Ok(b)
    }

    fn lifted(&self, ext: &Arc<Chart>, cs: &ConstraintSet) -> Result<ConstraintSet, CliError> {
        Ok(ConstraintSet {
            functions: cs.functions.clone(),
            nonholonomic: cs
                .nonholonomic
                .iter()
                .map(|f| self.wb.lift_form(f, ext))
                .collect::<Result<_, _>>()?,
            vakonomic: Vec::new(),
        })
    }

    fn projection_check(
        &self,
        b: &mut Built,
        name: &str,
        ext: &GVProblem,
        base: &Dynamics,
        proj: &CoordMap,
    ) -> Result<Projection, CliError> {
        let corrupted = GVProblem {
            omega: self.maybe_corrupt(&ext.omega),
            ..ext.clone()
        };
        let d = derive_dynamics(&corrupted, &self.zt)?;
        let pr = project_and_compare(&d, base, proj, &self.zt)?;
        let offsets: Vec<String> = pr
            .offsets
            .iter()
            .map(|o| {
                format!(
                    "{} shift {}",
                    o.coordinate,
                    if o.constant_shift_solves { "solves" } else { "breaks" }
                )
            })
            .collect();
        let reason = if offsets.is_empty() {
            pr.reason.clone()
        } else {
            format!("{}; {}", pr.reason, offsets.join(", "))
        };
        b.check(name, pr.pass, reason);
        Ok(pr)
    }

    fn skinner_rusk(&self) -> Result<Built, CliError> {
        let l = self.p.lagrangian()?;
        let u = self.wb.absorb_holonomy(l)?;
        let (base_problem, cs) = self.lagrangian_problem(self.wb.poincare_cartan(l)?.d())?;
        let ecs = self.lifted(&u.chart, &cs)?;
        let problem = GVProblem::new(
            u.omega_u.clone(),
            ecs.clone(),
            class_for(&ecs.nonholonomic),
            "skinner_rusk",
        );
        let mut b = Built::new(Stage::SkinnerRusk, &u.chart);
        b.forms = vec![("omega_u".into(), u.omega_u.clone())];
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        if self.verify {
            let base = derive_dynamics(&base_problem, &self.zt)?;
            self.projection_check(
                &mut b,
                "projection to Lagrangian dynamics",
                &problem,
                &base,
                &u.projection,
            )?;
        }
        b.split = Some((
            u.omega_u.clone(),
            VecField::basis(&u.chart, u.chart.time().expect("time")),
        ));
        b.constraint_forms = labelled(&ecs, "nh0");
        b.functions = ecs.functions.clone();
        b.energy = Some(self.wb.lagrangian_energy(l));
        Ok(b)
    }

    fn herglotz_absorbed(&self) -> Result<Built, CliError> {
        let l = self.p.lagrangian()?;
        let (base, eta) = self.herglotz_base()?;
        let u = self.wb.absorb_mixed(l, &[eta])?;
        let omega_check = u.omega_check.clone().expect("Herglotz constraint yields Ω̌");
        let cs = ConstraintSet {
            functions: self.functions(),
            nonholonomic: self.p.nonholonomic.clone(),
            vakonomic: Vec::new(),
        };
        let ecs = self.lifted(&u.chart, &cs)?;
        let class = class_for(&ecs.nonholonomic);
        let problem = GVProblem::new(omega_check.clone(), ecs.clone(), class, "herglotz_absorbed");
        let unified = GVProblem::new(u.omega_u.clone(), ecs.clone(), class, "herglotz_unified");
        let mut b = Built::new(Stage::HerglotzAbsorbed, &u.chart);
        b.forms = vec![
            ("omega_u".into(), u.omega_u.clone()),
            ("eta_check".into(), u.eta_check.clone().expect("η̌")),
            ("omega_check".into(), omega_check.clone()),
        ];
        b.dynamics = Some(derive_dynamics(&problem, &self.zt)?);
        if self.verify {
            for (name, p) in [
                ("projection of Ω̌ dynamics", &problem),
                ("projection of Ω_U dynamics", &unified),
            ] {
                let pr = self.projection_check(&mut b, name, p, &base, &u.projection)?;
                let ps = u.chart.action_momentum().map(|i| u.chart.name(i));
                if let Some(o) = pr.offsets.iter().find(|o| Some(o.coordinate.as_str()) == ps) {
                    b.check(
                        &format!("{name}: constant offset"),
                        o.constant_shift_solves,
                        format!(
                            "{} shifted by a constant {} solve",
                            o.coordinate,
                            if o.constant_shift_solves { "still" } else { "does not" }
                        ),
                    );
                }
            }
        }
        b.split = Some((omega_check, self.herglotz_rt(&u.chart, l)));
        b.constraint_forms = vec![("eta_check".into(), u.eta_check.clone().expect("η̌"))];
        b.functions = ecs.functions.clone();
        b.energy = Some(self.wb.lagrangian_energy(l));
        Ok(b)
    }

    fn classify(&self) -> Result<Built, CliError> {
        let l = self
            .p
            .lagrangian
            .as_ref()
            .ok_or_else(|| CliError::Parse("classification needs a lagrangian".into()))?;
        let mut b = Built::new(Stage::Classify, self.chart());
        b.structure = Some(self.wb.classify(l)?);
        Ok(b)
    }

    fn build(&self, stage: Stage) -> Result<Built, CliError> {
        match stage {
            Stage::Hamiltonian => self.hamiltonian(),
            Stage::CocontactHamiltonian => self.cocontact(),
            Stage::Lagrangian => self.lagrangian(),
            Stage::Herglotz => self.herglotz(),
            Stage::ModifiedPrecosymplectic => self.modified(),
            Stage::SkinnerRusk => self.skinner_rusk(),
            Stage::HerglotzAbsorbed => self.herglotz_absorbed(),
            Stage::Classify => self.classify(),
        }
    }
}

fn integrate(p: &Problem, built: &[Built], opts: &Options) -> Result<(IntegrationReport, Option<i32>), CliError> {
    let spec = p
        .file
        .integrate
        .as_ref()
        .ok_or_else(|| CliError::Parse("problem has no [integrate] section".into()))?;
    let b = match &spec.stage {
        Some(name) => {
            let st: Stage = name.parse()?;
            built
                .iter()
                .find(|b| b.stage == st)
                .ok_or_else(|| CliError::Parse(format!("stage `{name}` is not in the pipeline")))?
        }
        None => built
            .iter()
            .find(|b| b.dynamics.is_some())
            .ok_or_else(|| CliError::Parse("no pipeline stage produces dynamics".into()))?,
    };
    let d = b.dynamics.as_ref().expect("stage has dynamics");
    let csv_path = opts
        .csv
        .clone()
        .or_else(|| spec.csv.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", p.name)));
    let empty = IntegrationReport {
        stage: b.stage.name().to_string(),
        span: spec.span,
        step: spec.step,
        steps: 0,
        csv: String::new(),
        initial_state: BTreeMap::new(),
        final_state: BTreeMap::new(),
        monitors: Vec::new(),
    };
    match d.verdict {
        DynVerdict::Inconsistent => return Ok((empty, Some(EXIT_INCONSISTENT))),
        DynVerdict::Gauge => {
            let dirs: Vec<String> = d.gauge.iter().map(ToString::to_string).collect();
            return Err(CliError::Gauge(format!("free directions {}", dirs.join(", "))));
        }
        DynVerdict::Unique | DynVerdict::ConstrainedSurface => {}
    }
    let z = d.z.as_ref().expect("solution");
    let rhs = simulate::compile(z, &p.file.chart.parameters)?;
    let mut point = crate::symexpr::Point::new();
    for (k, v) in &spec.x0 {
        if b.chart.index(k).is_none() {
            return Err(CliError::Parse(format!(
                "x0 names `{k}`, which is not a coordinate of {}",
                b.chart
            )));
        }
        point.set(k, *v);
    }
    let x0 = rhs.state(&point)?;
    let functions: Vec<Expr> = b.functions.iter().chain(&d.secondary).cloned().collect();
    let forms: Vec<Form> = b.constraint_forms.iter().map(|(_, f)| f.clone()).collect();
    let x0 = rhs.prepare_initial(&x0, &functions, &forms)?;
    let mut traj = simulate::integrate(&rhs, &x0, spec.span, spec.step)?;
    let mut monitors = Vec::new();
    for m in &spec.monitors {
        match m.as_str() {
            "sigma_t" => {
                let (omega, rt) = b
                    .split
                    .as_ref()
                    .ok_or_else(|| CliError::Parse("stage has no σ_t".into()))?;
                let e = omega.interior(rt).interior(z).as_scalar();
                monitors.push(Monitor::Function {
                    name: "sigma_t".into(),
                    expr: d.on_surface(&e).map_err(|e| CliError::Other(e.to_string()))?,
                });
            }
            "drift" => {
                for (label, f) in &b.constraint_forms {
                    monitors.push(Monitor::Drift {
                        name: format!("drift_{label}"),
                        form: f.clone(),
                    });
                }
            }
            "energy" => monitors.push(Monitor::Function {
                name: "energy".into(),
                expr: b
                    .energy
                    .clone()
                    .ok_or_else(|| CliError::Parse("stage has no energy".into()))?,
            }),
            other => return Err(CliError::Parse(format!("unknown monitor `{other}`"))),
        }
    }
    for (name, src) in &spec.observables {
        let expr = b
            .chart
            .parse(src)
            .map_err(|e| CliError::Parse(format!("observable `{name}`: {e}")))?;
        monitors.push(Monitor::Function {
            name: name.clone(),
            expr,
        });
    }
    for (name, src) in &spec.drifts {
        let form = Form::parse(&b.chart, src).map_err(|e| CliError::Parse(format!("drift `{name}`: {e}")))?;
        monitors.push(Monitor::Drift {
            name: name.clone(),
            form,
        });
    }
    let maxima = simulate::monitor(&mut traj, &rhs, &monitors)?;
    let file = std::fs::File::create(&csv_path)?;
    traj.write_csv(std::io::BufWriter::new(file))?;
    let named = |x: &[f64]| traj.names.iter().cloned().zip(x.iter().copied()).collect();
    Ok((
        IntegrationReport {
            stage: b.stage.name().to_string(),
            span: spec.span,
            step: spec.step,
            steps: traj.states.len() - 1,
            csv: csv_path.display().to_string(),
            initial_state: named(&traj.states[0]),
            final_state: named(traj.last()),
            monitors: maxima,
        },
        None,
    ))
}

/// Runs one subcommand on a problem file.
pub fn run(command: Command, path: &Path, opts: &Options) -> Result<Outcome, CliError> {
    let mut zt = ZeroTest::default();
    if let Some(s) = opts.seed {
        zt.seed = s;
    }
    if let Some(t) = opts.trials {
        zt.trials = t;
    }
    let p = Problem::load(path, zt.clone())?;
    let ctx = Ctx {
        wb: Workbench::new(&p.chart).with_zero_test(zt.clone()),
        zt: zt.clone(),
        p: &p,
        verify: command == Command::Verify,
    };
    let stages: Vec<Stage> = if command == Command::Classify {
        vec![Stage::Classify]
    } else {
        p.stages.clone()
    };
    let built = stages.iter().map(|&s| ctx.build(s)).collect::<Result<Vec<_>, _>>()?;
    let mut exit_code = EXIT_OK;
    let mut status = "ok".to_string();
    let inconsistent = built
        .iter()
        .filter_map(|b| b.dynamics.as_ref())
        .any(|d| d.verdict == DynVerdict::Inconsistent);
    let mut integration = None;
    let verification: Vec<CheckReport> = built.iter().flat_map(|b| b.checks.clone()).collect();
    match command {
        Command::Derive | Command::Classify => {
            if inconsistent {
                exit_code = EXIT_INCONSISTENT;
                status = "inconsistent dynamics".into();
            }
        }
        Command::Integrate => match integrate(&p, &built, opts) {
            Ok((r, code)) => {
                if let Some(c) = code {
                    exit_code = c;
                    status = "inconsistent dynamics".into();
                }
                integration = Some(r);
            }
            Err(CliError::Gauge(msg)) => {
                exit_code = EXIT_GAUGE;
                status = format!("gauge freedom requires pinning: {msg}");
            }
            Err(e) => return Err(e),
        },
        Command::Verify => {
            if verification.iter().any(|c| !c.pass) {
                exit_code = EXIT_VERIFY;
                status = "verification failed".into();
            }
        }
    }
    let report = Report {
        tool: "varigeo",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name().into(),
        problem: p.name.clone(),
        seed: zt.seed,
        trials: zt.trials,
        chart: p.chart.to_string(),
        lagrangian: p.lagrangian.as_ref().map(ToString::to_string),
        hamiltonian: p.hamiltonian.as_ref().map(ToString::to_string),
        stages: built.iter().map(Built::report).collect(),
        integration,
        verification,
        status,
        exit_code,
    };
    Ok(Outcome { report, exit_code })
}
