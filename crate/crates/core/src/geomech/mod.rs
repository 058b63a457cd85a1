//! Geometric constructions for constrained variational problems.
//!
//! A [`Workbench`] fixes a chart and a zero test. Lagrangian constructions read
//! the chart roles: one time coordinate, positions `q^i` paired with
//! velocities `v^i` in declaration order, and optional action coordinates.

mod absorb;
mod classify;
mod singular;

use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use absorb::Unified;
pub use classify::{Check, HessianReport, PrecontactReport, PremulticontactReport, ReebReport, StructureReport};
pub use singular::{ModifiedStructure, Premulticontact};

use crate::excalc::{Chart, ChartError, CoordMap, Form, Role, VecField};
use crate::linsolve::{self, SolveError};
use crate::symexpr::{Expr, ExprError, Verdict, ZeroTest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("chart has no {0} coordinate")]
    MissingRole(&'static str),
    #[error("normalization fails: {what} = {value}")]
    Normalization { what: String, value: Expr },
    #[error("constraints are not co-oriented: τ∧η vanishes")]
    NotCoOriented,
    #[error("constraints are incompatible: {0}")]
    Incompatible(String),
    #[error("cannot decide whether `{0}` vanishes")]
    Undecided(Expr),
    #[error("rank undecided: cannot decide whether pivot `{entry}` vanishes")]
    RankUndecided { entry: Expr },
    #[error("constraint is not in adapted form: {0}")]
    NotAdapted(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Chart(#[from] ChartError),
}

impl From<SolveError> for GeomError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Undecided { entry, .. } => GeomError::RankUndecided { entry },
            SolveError::Inconsistent { row, residual } => GeomError::Normalization {
                what: format!("row {row}"),
                value: residual,
            },
        }
    }
}

/// Function constraints `I0`, nonholonomic forms and vakonomic forms on one chart.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    pub functions: Vec<Expr>,
    pub nonholonomic: Vec<Form>,
    pub vakonomic: Vec<Form>,
}

impl ConstraintSet {
    /// All constraint 1-forms, nonholonomic first.
    pub fn one_forms(&self) -> Vec<Form> {
        self.nonholonomic.iter().chain(&self.vakonomic).cloned().collect()
    }

    /// Appends `df` to the nonholonomic forms for each function constraint `f`.
    pub fn lift_function_constraints(&self, chart: &Arc<Chart>) -> ConstraintSet {
        let mut out = self.clone();
        for f in &self.functions {
            let df = Form::scalar(chart, f.clone()).d();
            if !df.is_zero() {
                out.nonholonomic.push(df);
            }
        }
        out
    }
}

/// Which variations a problem admits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VariationClass {
    /// Every vector field.
    AllFields,
    /// Fields with no time component.
    Vertical,
    /// Vertical fields annihilated by every nonholonomic form.
    AdmissibleReduced,
}

/// A 2-form with constraints and admissible variations.
#[derive(Clone, Debug, PartialEq)]
pub struct GVProblem {
    pub chart: Arc<Chart>,
    pub omega: Form,
    pub constraints: ConstraintSet,
    pub class: VariationClass,
    pub provenance: String,
}

impl GVProblem {
    pub fn new(omega: Form, constraints: ConstraintSet, class: VariationClass, provenance: &str) -> Self {
        GVProblem {
            chart: omega.chart().clone(),
            omega,
            constraints,
            class,
            provenance: provenance.to_string(),
        }
    }

    pub fn with_class(&self, class: VariationClass) -> Self {
        GVProblem { class, ..self.clone() }
    }
}

/// Inverse Hessian in velocities, or a null vector when it is singular.
#[derive(Clone, Debug, PartialEq)]
pub enum Hessian {
    Regular(Vec<Vec<Expr>>),
    Singular {
        hessian: Vec<Vec<Expr>>,
        null_vectors: Vec<Vec<Expr>>,
    },
}

/// Split of a 2-form along a transversal field.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub omega: Form,
    pub sigma_t: Form,
}

/// General solution of a Reeb-type linear problem.
#[derive(Clone, Debug, PartialEq)]
pub enum ReebSolution {
    Family {
        particular: VecField,
        kernel: Vec<VecField>,
    },
    NoSolution {
        row: Option<usize>,
        residual: Expr,
    },
}

impl ReebSolution {
    pub fn particular(&self) -> Option<&VecField> {
        match self {
            ReebSolution::Family { particular, .. } => Some(particular),
            ReebSolution::NoSolution { .. } => None,
        }
    }
}

/// One compatibility condition with its verdict and evidence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub holds: bool,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Compatibility {
    pub generators: Condition,
    pub independence: Condition,
    pub cartan_annihilates: Condition,
}

impl Compatibility {
    pub fn holds(&self) -> bool {
        self.generators.holds && self.independence.holds && self.cartan_annihilates.holds
    }
}

/// Chart plus zero test shared by every construction.
#[derive(Clone, Debug)]
pub struct Workbench {
    chart: Arc<Chart>,
    zt: ZeroTest,
}

impl Workbench {
    pub fn new(chart: &Arc<Chart>) -> Self {
        Workbench {
            chart: chart.clone(),
            zt: ZeroTest::default(),
        }
    }

    pub fn with_zero_test(mut self, zt: ZeroTest) -> Self {
        self.zt = zt;
        self
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn zero_test(&self) -> &ZeroTest {
        &self.zt
    }

    fn time(&self) -> Result<usize, GeomError> {
        self.chart.time().ok_or(GeomError::MissingRole("time"))
    }

    fn action(&self) -> Result<usize, GeomError> {
        self.chart.action().ok_or(GeomError::MissingRole("action"))
    }

    /// Position/velocity index pairs.
    fn pairs(&self) -> Result<Vec<(usize, usize)>, GeomError> {
        let q = self.chart.positions();
        let v = self.chart.velocities();
        if v.is_empty() {
            return Err(GeomError::MissingRole("velocity"));
        }
        if q.len() != v.len() {
            return Err(GeomError::Chart(ChartError::Roles(
                "positions and velocities must pair up".into(),
            )));
        }
        Ok(q.into_iter().zip(v).collect())
    }

    /// `τ = dt`.
    pub fn tau(&self) -> Result<Form, GeomError> {
        Ok(Form::dx(&self.chart, self.time()?))
    }

    fn verdict_zero(&self, e: &Expr) -> Result<bool, GeomError> {
        match self.zt.verdict(e) {
            Verdict::Zero => Ok(true),
            Verdict::NonZero => Ok(false),
            Verdict::Unknown => Err(GeomError::Undecided(e.clone())),
        }
    }

    fn form_nonzero(&self, f: &Form) -> Result<bool, GeomError> {
        match f.zero_verdict(&self.zt) {
            Verdict::NonZero => Ok(true),
            Verdict::Zero => Ok(false),
            Verdict::Unknown => Err(GeomError::Undecided(
                f.terms().values().next().cloned().unwrap_or_else(Expr::zero),
            )),
        }
    }

    /// Cartan forms `κ^i = dq^i − v^i dt`.
    pub fn cartan_forms(&self) -> Result<Vec<Form>, GeomError> {
        let t = self.time()?;
        let pairs = self.pairs()?;
        Ok(pairs
            .into_iter()
            .map(|(q, v)| &Form::dx(&self.chart, q) - &Form::dx(&self.chart, t).scale(&self.chart.var(v)))
            .collect())
    }

    /// `E_L = (∂L/∂v^i) v^i − L`.
    pub fn lagrangian_energy(&self, l: &Expr) -> Expr {
        let sum: Expr = self
            .chart
            .velocities()
            .into_iter()
            .map(|v| l.diff(self.chart.name(v)) * self.chart.var(v))
            .sum();
        sum - l
    }

    /// `Θ_L = L dt + (∂L/∂v^i) κ^i`.
    pub fn poincare_cartan(&self, l: &Expr) -> Result<Form, GeomError> {
        let t = self.time()?;
        let pairs = self.pairs()?;
        let mut out = Form::dx(&self.chart, t).scale(l);
        for ((_, v), k) in pairs.iter().zip(self.cartan_forms()?) {
            out = &out + &k.scale(&l.diff(self.chart.name(*v)));
        }
        Ok(out)
    }

    /// Lagrangian 2-form `ω_L = −d(∂L/∂v^i) ∧ dq^i`.
    pub fn lagrangian_two_form(&self, l: &Expr) -> Result<Form, GeomError> {
        let mut out = Form::zero(&self.chart, 2);
        for (q, v) in self.pairs()? {
            let lv = Form::scalar(&self.chart, l.diff(self.chart.name(v))).d();
            out = &out - &lv.wedge(&Form::dx(&self.chart, q));
        }
        Ok(out)
    }

    /// `∂²L/∂v^i∂v^j`.
    pub fn hessian(&self, l: &Expr) -> Vec<Vec<Expr>> {
        let v = self.chart.velocities();
        v.iter()
            .map(|&i| {
                let li = l.diff(self.chart.name(i));
                v.iter().map(|&j| li.diff(self.chart.name(j))).collect()
            })
            .collect()
    }

    /// Inverse `W` with `W^{ij} ∂²L/∂v^j∂v^k = δ^i_k`, or the Hessian null space.
    pub fn hessian_inverse(&self, l: &Expr) -> Result<Hessian, GeomError> {
        let h = self.hessian(l);
        let n = h.len();
        let zeros = vec![Expr::zero(); n];
        let sol = linsolve::solve(&h, &zeros, n, &self.zt)?;
        if sol.pivots.len() < n {
            return Ok(Hessian::Singular {
                hessian: h,
                null_vectors: sol.kernel,
            });
        }
        let mut w = vec![vec![Expr::zero(); n]; n];
        for k in 0..n {
            let mut e = zeros.clone();
            e[k] = Expr::one();
            let col = linsolve::solve(&h, &e, n, &self.zt)?.particular;
            for i in 0..n {
                w[i][k] = col[i].clone();
            }
        }
        Ok(Hessian::Regular(w))
    }

    fn regular_inverse(&self, l: &Expr) -> Result<Vec<Vec<Expr>>, GeomError> {
        match self.hessian_inverse(l)? {
            Hessian::Regular(w) => Ok(w),
            Hessian::Singular { .. } => Err(GeomError::Normalization {
                what: "det ∂²L/∂v∂v".into(),
                value: Expr::zero(),
            }),
        }
    }

    /// `R_t = ∂_t − W^{ij} (∂²L/∂v^i∂t) ∂_{v^j}` for a regular Lagrangian.
    pub fn lagrangian_reeb_time(&self, l: &Expr) -> Result<VecField, GeomError> {
        let t = self.time()?;
        self.regular_correction(l, t)
    }

    /// `R_s = ∂_s − W^{ij} (∂²L/∂s∂v^j) ∂_{v^i}` for a regular Lagrangian.
    pub fn lagrangian_reeb_action(&self, l: &Expr) -> Result<VecField, GeomError> {
        let s = self.action()?;
        self.regular_correction(l, s)
    }

    fn regular_correction(&self, l: &Expr, x: usize) -> Result<VecField, GeomError> {
        let w = self.regular_inverse(l)?;
        let v = self.chart.velocities();
        let xname = self.chart.name(x).to_string();
        let mixed: Vec<Expr> = v.iter().map(|&j| l.diff(self.chart.name(j)).diff(&xname)).collect();
        let mut r = VecField::basis(&self.chart, x);
        for (i, &vi) in v.iter().enumerate() {
            let c: Expr = (0..v.len()).map(|j| &w[i][j] * &mixed[j]).sum();
            r.set(vi, -c);
        }
        Ok(r)
    }

    /// Nonholonomic constraint `η = ds + E_L dt − (∂L/∂v^i) dq^i`.
    pub fn herglotz_constraint(&self, l: &Expr) -> Result<Form, GeomError> {
        let s = self.action()?;
        let t = self.time()?;
        let mut out = &Form::dx(&self.chart, s) + &Form::dx(&self.chart, t).scale(&self.lagrangian_energy(l));
        for (q, v) in self.pairs()? {
            out = &out - &Form::dx(&self.chart, q).scale(&l.diff(self.chart.name(v)));
        }
        Ok(out)
    }

    fn check_normalized(&self, what: String, value: Expr) -> Result<(), GeomError> {
        if self.verdict_zero(&value)? {
            Ok(())
        } else {
            Err(GeomError::Normalization { what, value })
        }
    }

    /// `σ_t = i_{R_t}Ω` and `ω = Ω + σ_t∧τ`, after checking `i_{R_t}τ = 1`.
    pub fn split_transversal(&self, omega: &Form, rt: &VecField) -> Result<Split, GeomError> {
        let tau = self.tau()?;
        self.check_normalized("i_{R_t}τ - 1".into(), tau.interior(rt).as_scalar() - Expr::one())?;
        let sigma_t = omega.interior(rt);
        let omega = omega + &sigma_t.wedge(&tau);
        Ok(Split { omega, sigma_t })
    }

    /// Solves `i_X α = c` for every `(α, c)` together with `i_X ω = 0` for every 2-form.
    pub fn reeb_solve(&self, targets: &[(Form, Expr)], two_forms: &[Form]) -> Result<ReebSolution, GeomError> {
        let n = self.chart.dim();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (a, c) in targets {
            rows.push(a.components());
            rhs.push(c.clone());
        }
        for w in two_forms {
            for r in crate::excalc::annihilator_rows(Some(w), &[]) {
                rows.push(r);
                rhs.push(Expr::zero());
            }
        }
        match linsolve::solve(&rows, &rhs, n, &self.zt) {
            Err(SolveError::Inconsistent { row, residual }) => Ok(ReebSolution::NoSolution {
                row: Some(row),
                residual,
            }),
            Err(e) => Err(e.into()),
            Ok(sol) => {
                if let Some(r) = sol.residuals.first() {
                    return Ok(ReebSolution::NoSolution {
                        row: None,
                        residual: r.clone(),
                    });
                }
                Ok(ReebSolution::Family {
                    particular: VecField::new(&self.chart, sol.particular),
                    kernel: sol.kernel.into_iter().map(|k| VecField::new(&self.chart, k)).collect(),
                })
            }
        }
    }

    /// Checks `i_{R_α}τ = 0` and `i_{R_α}η^β = δ^β_α`.
    pub fn check_reeb_family(&self, etas: &[Form], reebs: &[VecField]) -> Result<(), GeomError> {
        if etas.len() != reebs.len() {
            return Err(GeomError::Normalization {
                what: "number of Reeb fields minus number of constraints".into(),
                value: Expr::int(reebs.len() as i64 - etas.len() as i64),
            });
        }
        let tau = self.tau()?;
        for (a, r) in reebs.iter().enumerate() {
            self.check_normalized(format!("i_R{a} τ"), tau.interior(r).as_scalar())?;
            for (b, eta) in etas.iter().enumerate() {
                let d = if a == b { Expr::one() } else { Expr::zero() };
                self.check_normalized(format!("i_R{a} η{b} - δ"), eta.interior(r).as_scalar() - d)?;
            }
        }
        Ok(())
    }

    /// `τ ∧ η^1 ∧ … ∧ η^k`.
    pub fn coorientation_form(&self, etas: &[Form]) -> Result<Form, GeomError> {
        let mut w = self.tau()?;
        for e in etas {
            w = w.wedge(e);
        }
        Ok(w)
    }

    /// `Ω̄ = Ω + Σ σ_α∧η^α` with `σ_α = i_{R_α}Ω`.
    pub fn omega_bar_nonholonomic(&self, omega: &Form, etas: &[Form], reebs: &[VecField]) -> Result<Form, GeomError> {
        if etas.is_empty() {
            return Ok(omega.clone());
        }
        if !self.form_nonzero(&self.coorientation_form(etas)?)? {
            return Err(GeomError::NotCoOriented);
        }
        self.check_reeb_family(etas, reebs)?;
        Ok(self.add_sigma_terms(omega, etas, reebs))
    }

    fn add_sigma_terms(&self, omega: &Form, etas: &[Form], reebs: &[VecField]) -> Form {
        let mut out = omega.clone();
        for (eta, r) in etas.iter().zip(reebs) {
            out = &out + &omega.interior(r).wedge(eta);
        }
        out
    }

    /// `τ ∧ ⋀η^α ∧ ⋀ i_{∂t}(κ^i∧dκ^i)`.
    pub fn independence_form(&self, etas: &[Form], kappas: &[Form]) -> Result<Form, GeomError> {
        let dt = VecField::basis(&self.chart, self.time()?);
        let mut w = self.coorientation_form(etas)?;
        for k in kappas {
            w = w.wedge(&k.wedge(&k.d()).interior(&dt));
        }
        Ok(w)
    }

    /// Per-condition compatibility of nonholonomic forms with Cartan forms.
    pub fn compatibility_check(&self, etas: &[Form], kappas: &[Form]) -> Result<Compatibility, GeomError> {
        let actions = self.chart.with_role(Role::Action);
        let generators = if etas.len() != actions.len() {
            Condition {
                holds: false,
                witness: format!("{} constraints for {} action coordinates", etas.len(), actions.len()),
            }
        } else {
            let mut bad = None;
            'outer: for (a, eta) in etas.iter().enumerate() {
                for (b, &s) in actions.iter().enumerate() {
                    let want = if a == b { Expr::one() } else { Expr::zero() };
                    let got = eta.coeff(&[s]);
                    if !self.verdict_zero(&(&got - &want))? {
                        bad = Some(format!("coefficient of d{} in η{a} is {got}", self.chart.name(s)));
                        break 'outer;
                    }
                }
            }
            match bad {
                Some(w) => Condition {
                    holds: false,
                    witness: w,
                },
                None => Condition {
                    holds: true,
                    witness: format!("k = {}", etas.len()),
                },
            }
        };
        let w = self.independence_form(etas, kappas)?;
        let independence = Condition {
            holds: self.form_nonzero(&w)?,
            witness: w.to_string(),
        };
        let mut bad = None;
        for v in self.chart.velocities() {
            let dv = VecField::basis(&self.chart, v);
            for (a, eta) in etas.iter().enumerate() {
                let c = eta.interior(&dv).as_scalar();
                if !self.verdict_zero(&c)? {
                    bad = Some(format!("i_∂{} η{a} = {c}", self.chart.name(v)));
                    break;
                }
            }
            if bad.is_some() {
                break;
            }
        }
        let cartan_annihilates = match bad {
            Some(w) => Condition {
                holds: false,
                witness: w,
            },
            None => Condition {
                holds: true,
                witness: "i_∂v η = 0".into(),
            },
        };
        Ok(Compatibility {
            generators,
            independence,
            cartan_annihilates,
        })
    }

    /// `Ω̄ = dΘ_L + Σ σ_α∧η^α` with `σ_α = i_{R_α}dΘ_L`.
    pub fn omega_bar_mixed(&self, l: &Expr, etas: &[Form], reebs: &[VecField]) -> Result<Form, GeomError> {
        let kappas = self.cartan_forms()?;
        let c = self.compatibility_check(etas, &kappas)?;
        if !c.holds() {
            let failing = [&c.generators, &c.independence, &c.cartan_annihilates]
                .into_iter()
                .find(|x| !x.holds)
                .map(|x| x.witness.clone())
                .unwrap_or_default();
            return Err(GeomError::Incompatible(failing));
        }
        self.check_reeb_family(etas, reebs)?;
        let dtheta = self.poincare_cartan(l)?.d();
        Ok(self.add_sigma_terms(&dtheta, etas, reebs))
    }

    /// Lifts a form on this chart to a chart containing it.
    pub fn lift_form(&self, f: &Form, target: &Arc<Chart>) -> Result<Form, GeomError> {
        Ok(f.pullback(&CoordMap::embedding(target, &self.chart, &[]))?)
    }

    /// Lifts a field by the zero section: extra components vanish.
    pub fn lift_field(&self, x: &VecField, target: &Arc<Chart>) -> VecField {
        let comps = (0..target.dim())
            .map(|j| match self.chart.index(target.name(j)) {
                Some(i) => x.comp(i).clone(),
                None => Expr::zero(),
            })
            .collect();
        VecField::new(target, comps)
    }
}

#[cfg(test)]
mod tests;
