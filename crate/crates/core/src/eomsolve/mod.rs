//! Equations of motion for geometric variational problems.
//!
//! A solution field `Z` satisfies `i_Z τ = 1`, `i_Z α = 0` for every
//! constraint form and `i_ξ i_Z Ω = 0` for every admissible variation `ξ`.
//! These are linear in the components of `Z` and are solved by exact
//! elimination. Rows that reduce to `0 = f` with `f` depending on coordinates
//! become secondary constraints; one further pass adds their tangency
//! conditions and restricts to the surface they cut out.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::excalc::{kernel_basis, Chart, CoordMap, Form, Role, VecField};
use crate::geomech::{GVProblem, GeomError, VariationClass, Workbench};
use crate::linsolve::{self, SolveError};
use crate::symexpr::{Expr, ExprError, Name, Verdict, ZeroTest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EomError {
    #[error("chart has no time coordinate")]
    MissingTime,
    #[error("rank undecided: cannot decide whether pivot `{entry}` vanishes")]
    RankUndecided { entry: Expr },
    #[error("problems live on different charts")]
    ChartMismatch,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

impl From<SolveError> for EomError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Undecided { entry, .. } => EomError::RankUndecided { entry },
            SolveError::Inconsistent { .. } => unreachable!("inconsistency is reported as a verdict"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DynVerdict {
    Unique,
    Gauge,
    Inconsistent,
    ConstrainedSurface,
}

/// Solved equations of motion.
#[derive(Clone, Debug, PartialEq)]
pub struct Dynamics {
    pub verdict: DynVerdict,
    /// Particular solution with every gauge coefficient zero, restricted to the surface.
    pub z: Option<VecField>,
    pub gauge: Vec<VecField>,
    pub secondary: Vec<Expr>,
    /// Coordinates eliminated on the constraint surface.
    pub surface: BTreeMap<Name, Expr>,
    /// The row that failed, for inconsistent systems.
    pub witness: Option<String>,
    pub provenance: String,
}

impl Dynamics {
    /// Restricts an expression to the constraint surface.
    pub fn on_surface(&self, e: &Expr) -> Result<Expr, ExprError> {
        if self.surface.is_empty() {
            Ok(e.clone())
        } else {
            e.substitute(&self.surface)
        }
    }

    pub fn field_on_surface(&self, x: &VecField) -> Result<VecField, ExprError> {
        let comps = x.comps().iter().map(|c| self.on_surface(c)).collect::<Result<_, _>>()?;
        Ok(VecField::new(x.chart(), comps))
    }
}

/// Linear system in the components of `Z`.
#[derive(Clone, Debug)]
pub struct System {
    pub chart: Arc<Chart>,
    pub rows: Vec<Vec<Expr>>,
    pub rhs: Vec<Expr>,
    pub labels: Vec<String>,
}

impl System {
    fn new(chart: &Arc<Chart>) -> Self {
        System {
            chart: chart.clone(),
            rows: Vec::new(),
            rhs: Vec::new(),
            labels: Vec::new(),
        }
    }

    fn push(&mut self, label: String, row: Vec<Expr>, rhs: Expr) {
        self.labels.push(label);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    fn push_form(&mut self, label: String, a: &Form, rhs: Expr) {
        self.push(label, a.components(), rhs);
    }

    /// `row · Z − rhs` for every row.
    pub fn residuals(&self, z: &VecField) -> Vec<Expr> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, b)| r.iter().zip(z.comps()).map(|(a, x)| a * x).sum::<Expr>() - b)
            .collect()
    }
}

fn time_index(chart: &Chart) -> Result<usize, EomError> {
    chart.time().ok_or(EomError::MissingTime)
}

/// Column `j` of the matrix of `ω`: the coefficient of `dx^j` in `i_Z ω`.
fn contraction_row(m: &[Vec<Expr>], j: usize) -> Vec<Expr> {
    m.iter().map(|r| r[j].clone()).collect()
}

/// Assembles the equations of a problem.
pub fn equations(p: &GVProblem, zt: &ZeroTest) -> Result<System, EomError> {
    let chart = &p.chart;
    let t = time_index(chart)?;
    let cs = p.constraints.lift_function_constraints(chart);
    let m = p.omega.matrix();
    let mut sys = System::new(chart);
    match p.class {
        VariationClass::AllFields | VariationClass::Vertical => {
            for j in 0..chart.dim() {
                if j == t && p.class == VariationClass::Vertical {
                    continue;
                }
                sys.push(
                    format!("i_Z Ω along ∂{}", chart.name(j)),
                    contraction_row(&m, j),
                    Expr::zero(),
                );
            }
        }
        VariationClass::AdmissibleReduced => {
            let mut ann = vec![Form::dx(chart, t)];
            ann.extend(cs.nonholonomic.iter().cloned());
            for xi in kernel_basis(chart, None, &ann, zt)? {
                let row = (0..chart.dim())
                    .map(|i| (0..chart.dim()).map(|j| &m[i][j] * xi.comp(j)).sum())
                    .collect();
                sys.push(format!("i_Z Ω along {xi}"), row, Expr::zero());
            }
        }
    }
    for (k, a) in cs.nonholonomic.iter().enumerate() {
        sys.push_form(format!("i_Z η{k}"), a, Expr::zero());
    }
    for (k, a) in cs.vakonomic.iter().enumerate() {
        sys.push_form(format!("i_Z κ{k}"), a, Expr::zero());
    }
    sys.push_form("i_Z τ".into(), &Form::dx(chart, t), Expr::one());
    Ok(sys)
}

/// Solves for the equations of motion of a problem.
pub fn derive_dynamics(p: &GVProblem, zt: &ZeroTest) -> Result<Dynamics, EomError> {
    let sys = equations(p, zt)?;
    solve_system(&sys, &p.constraints.functions, &p.provenance, zt)
}

/// Expresses each constraint through one coordinate when it is linear in it.
pub fn surface_map(chart: &Chart, constraints: &[Expr], zt: &ZeroTest) -> Result<BTreeMap<Name, Expr>, ExprError> {
    let mut map: BTreeMap<Name, Expr> = BTreeMap::new();
    for f in constraints {
        let g = if map.is_empty() { f.clone() } else { f.substitute(&map)? };
        if zt.verdict(&g) == Verdict::Zero {
            continue;
        }
        let candidates: Vec<usize> = (0..chart.dim())
            .rev()
            .filter(|&i| chart.role(i) != Role::Time && !map.contains_key(chart.name(i)))
            .collect();
        let pick = |constant_only: bool| {
            candidates.iter().copied().find(|&i| {
                let c = g.diff(chart.name(i));
                !c.is_zero()
                    && c.diff(chart.name(i)).is_zero()
                    && (!constant_only || c.is_coordinate_free())
                    && c.is_rational_fragment()
            })
        };
        let Some(i) = pick(true).or_else(|| pick(false)) else {
            continue;
        };
        let x = chart.name(i);
        let c = g.diff(x);
        let value = chart.var(i) - g.checked_div(&c).expect("coefficient is non-zero");
        let one: BTreeMap<Name, Expr> = [(Name::from(x), value.clone())].into();
        for v in map.values_mut() {
            *v = v.substitute(&one)?;
        }
        map.insert(Name::from(x), value);
    }
    Ok(map)
}

/// Numerator with unit leading coefficient.
fn normalized(e: &Expr) -> Expr {
    let n = e.numerator();
    match Expr::constant(n.leading_coefficient()).recip() {
        Some(inv) => &n * &inv,
        None => n,
    }
}

fn inconsistent(sys: &System, row: usize, residual: &Expr, provenance: &str) -> Dynamics {
    Dynamics {
        verdict: DynVerdict::Inconsistent,
        z: None,
        gauge: Vec::new(),
        secondary: Vec::new(),
        surface: BTreeMap::new(),
        witness: Some(format!("{} reduces to 0 = {residual}", sys.labels[row])),
        provenance: provenance.to_string(),
    }
}

/// Solves a system, restricting once to the surface of secondary and function constraints.
pub fn solve_system(sys: &System, functions: &[Expr], provenance: &str, zt: &ZeroTest) -> Result<Dynamics, EomError> {
    let n = sys.chart.dim();
    let first = match linsolve::solve(&sys.rows, &sys.rhs, n, zt) {
        Err(SolveError::Inconsistent { row, residual }) => return Ok(inconsistent(sys, row, &residual, provenance)),
        Err(e) => return Err(e.into()),
        Ok(s) => s,
    };
    let mut secondary: Vec<Expr> = Vec::new();
    for r in &first.residuals {
        let r = normalized(r);
        if !secondary.contains(&r) {
            secondary.push(r);
        }
    }
    let (sol, surface) = if secondary.is_empty() && functions.is_empty() {
        (first, BTreeMap::new())
    } else {
        let all: Vec<Expr> = functions.iter().chain(&secondary).cloned().collect();
        let surface = surface_map(&sys.chart, &all, zt)?;
        let mut restricted = System::new(&sys.chart);
        let sub = |e: &Expr| -> Result<Expr, ExprError> {
            if surface.is_empty() {
                Ok(e.clone())
            } else {
                e.substitute(&surface)
            }
        };
        for ((label, row), b) in sys.labels.iter().zip(&sys.rows).zip(&sys.rhs) {
            let row = row.iter().map(&sub).collect::<Result<_, _>>()?;
            restricted.push(label.clone(), row, sub(b)?);
        }
        for f in &secondary {
            let row = (0..n)
                .map(|i| sub(&f.diff(sys.chart.name(i))))
                .collect::<Result<_, _>>()?;
            restricted.push(format!("tangency of {f}"), row, Expr::zero());
        }
        let second = match linsolve::solve(&restricted.rows, &restricted.rhs, n, zt) {
            Err(SolveError::Inconsistent { row, residual }) => {
                let mut d = inconsistent(&restricted, row, &residual, provenance);
                d.secondary = secondary;
                d.surface = surface;
                return Ok(d);
            }
            Err(e) => return Err(e.into()),
            Ok(s) => s,
        };
        for r in &second.residuals {
            let r = normalized(&sub(r)?);
            if zt.verdict(&r) != Verdict::Zero && !secondary.contains(&r) {
                secondary.push(r);
            }
        }
        (second, surface)
    };
    let on = |e: &Expr| -> Result<Expr, ExprError> {
        if surface.is_empty() {
            Ok(e.clone())
        } else {
            e.substitute(&surface)
        }
    };
    let z = VecField::new(&sys.chart, sol.particular.iter().map(&on).collect::<Result<_, _>>()?);
    let gauge: Vec<VecField> = sol
        .kernel
        .iter()
        .map(|k| {
            Ok(VecField::new(
                &sys.chart,
                k.iter().map(&on).collect::<Result<_, ExprError>>()?,
            ))
        })
        .collect::<Result<_, ExprError>>()?;
    let verdict = if !gauge.is_empty() {
        DynVerdict::Gauge
    } else if !secondary.is_empty() {
        DynVerdict::ConstrainedSurface
    } else {
        DynVerdict::Unique
    };
    Ok(Dynamics {
        verdict,
        z: Some(z),
        gauge,
        secondary,
        surface,
        witness: None,
        provenance: provenance.to_string(),
    })
}

/// Residuals of every equation at the solved field, restricted to its surface;
/// only entries the zero test does not certify as zero are returned.
pub fn unsatisfied(p: &GVProblem, d: &Dynamics, zt: &ZeroTest) -> Result<Vec<(String, Expr)>, EomError> {
    let Some(z) = &d.z else {
        return Ok(Vec::new());
    };
    let sys = equations(p, zt)?;
    let mut out = Vec::new();
    for (label, r) in sys.labels.iter().zip(sys.residuals(z)) {
        let r = d.on_surface(&r)?;
        if zt.verdict(&r) != Verdict::Zero {
            out.push((label.clone(), r));
        }
    }
    Ok(out)
}

/// Herglotz-Euler-Lagrange equations
/// `Z(∂L/∂v^j) = ∂L/∂q^j + (∂L/∂s)(∂L/∂v^j)` with `i_Zη = 0`, `i_Zκ^i = 0`, `i_Zτ = 1`,
/// plus optional function constraints such as gauge pins.
pub fn herglotz_el(wb: &Workbench, l: &Expr, eta: &Form, functions: &[Expr]) -> Result<Dynamics, EomError> {
    let chart = wb.chart();
    let t = time_index(chart)?;
    let s = chart.action().ok_or(GeomError::MissingRole("action"))?;
    let ls = l.diff(chart.name(s));
    let mut sys = System::new(chart);
    for (&q, &v) in chart.positions().iter().zip(&chart.velocities()) {
        let lv = l.diff(chart.name(v));
        let mut row: Vec<Expr> = (0..chart.dim()).map(|i| lv.diff(chart.name(i))).collect();
        row[t] = &row[t] - &(l.diff(chart.name(q)) + &ls * &lv);
        sys.push(
            format!("Herglotz-Euler-Lagrange for {}", chart.name(q)),
            row,
            Expr::zero(),
        );
    }
    sys.push_form("i_Z η".into(), eta, Expr::zero());
    for (k, a) in wb.cartan_forms()?.iter().enumerate() {
        sys.push_form(format!("i_Z κ{k}"), a, Expr::zero());
    }
    for f in functions {
        sys.push_form(format!("i_Z d({f})"), &Form::scalar(chart, f.clone()).d(), Expr::zero());
    }
    sys.push_form("i_Z τ".into(), &Form::dx(chart, t), Expr::one());
    solve_system(&sys, functions, "herglotz_el", wb.zero_test())
}

/// Outcome of solving `i_Xω = σ_t` for a vertical `X` with `i_{R_t − X}α = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Transversality {
    Exists {
        x: VecField,
        kernel: Vec<VecField>,
        conditions: Vec<Expr>,
    },
    NoSolution {
        witness: String,
    },
}

pub fn check_transversality_reduction(
    omega: &Form,
    sigma_t: &Form,
    rt: &VecField,
    constraints: &[Form],
    zt: &ZeroTest,
) -> Result<Transversality, EomError> {
    let chart = omega.chart();
    let t = time_index(chart)?;
    let m = omega.matrix();
    let sig = sigma_t.components();
    let mut sys = System::new(chart);
    for (j, s) in sig.iter().enumerate() {
        sys.push(
            format!("i_X ω - σ_t along d{}", chart.name(j)),
            contraction_row(&m, j),
            s.clone(),
        );
    }
    for (k, a) in constraints.iter().enumerate() {
        sys.push_form(format!("i_X α{k} - i_R α{k}"), a, a.interior(rt).as_scalar());
    }
    sys.push_form("i_X τ".into(), &Form::dx(chart, t), Expr::zero());
    match linsolve::solve(&sys.rows, &sys.rhs, chart.dim(), zt) {
        Err(SolveError::Inconsistent { row, residual }) => Ok(Transversality::NoSolution {
            witness: format!("{} reduces to 0 = {residual}", sys.labels[row]),
        }),
        Err(e) => Err(e.into()),
        Ok(sol) => Ok(Transversality::Exists {
            x: VecField::new(chart, sol.particular),
            kernel: sol.kernel.into_iter().map(|k| VecField::new(chart, k)).collect(),
            conditions: sol.residuals,
        }),
    }
}

/// Result of comparing two solved problems.
#[derive(Clone, Debug, PartialEq)]
pub struct Equivalence {
    pub pass: bool,
    pub reason: String,
    pub first: Dynamics,
    pub second: Dynamics,
}

/// Solves `Σ c_k g_k = x` for the gauge directions `g_k`.
fn in_span(x: &VecField, basis: &[VecField], zt: &ZeroTest) -> Result<bool, EomError> {
    if x.zero_verdict(zt) == Verdict::Zero {
        return Ok(true);
    }
    if basis.is_empty() {
        return Ok(false);
    }
    let n = x.chart().dim();
    let rows: Vec<Vec<Expr>> = (0..n)
        .map(|i| basis.iter().map(|b| b.comp(i).clone()).collect())
        .collect();
    match linsolve::solve(&rows, x.comps(), basis.len(), zt) {
        Err(SolveError::Inconsistent { .. }) => Ok(false),
        Err(e) => Err(e.into()),
        Ok(sol) => Ok(sol.residuals.iter().all(|r| zt.verdict(r) == Verdict::Zero)),
    }
}

fn surfaces_agree(a: &Dynamics, b: &Dynamics, zt: &ZeroTest) -> Result<Option<String>, EomError> {
    for (x, y) in [(a, b), (b, a)] {
        for f in &x.secondary {
            let g = y.on_surface(f)?;
            if zt.verdict(&g) != Verdict::Zero {
                return Ok(Some(format!(
                    "secondary constraint {f} does not vanish on the other surface"
                )));
            }
        }
    }
    Ok(None)
}

/// Derives both problems and compares their solution sets.
pub fn verify_equivalence(p1: &GVProblem, p2: &GVProblem, zt: &ZeroTest) -> Result<Equivalence, EomError> {
    if p1.chart != p2.chart {
        return Err(EomError::ChartMismatch);
    }
    let first = derive_dynamics(p1, zt)?;
    let second = derive_dynamics(p2, zt)?;
    let (pass, reason) = compare_dynamics(&first, &second, zt)?;
    Ok(Equivalence {
        pass,
        reason,
        first,
        second,
    })
}

/// Compares two solved systems on the same chart: verdicts, surfaces, gauge spans and fields.
pub fn compare_dynamics(a: &Dynamics, b: &Dynamics, zt: &ZeroTest) -> Result<(bool, String), EomError> {
    if a.verdict != b.verdict {
        return Ok((false, format!("verdicts differ: {:?} vs {:?}", a.verdict, b.verdict)));
    }
    if a.verdict == DynVerdict::Inconsistent {
        return Ok((true, "both inconsistent".into()));
    }
    if let Some(r) = surfaces_agree(a, b, zt)? {
        return Ok((false, r));
    }
    let (za, zb) = (a.z.as_ref().expect("solution"), b.z.as_ref().expect("solution"));
    let diff = b.field_on_surface(&a.field_on_surface(&(za - zb))?)?;
    let ga: Vec<VecField> = a
        .gauge
        .iter()
        .map(|g| b.field_on_surface(g))
        .collect::<Result<_, _>>()?;
    if a.gauge.len() != b.gauge.len() {
        return Ok((
            false,
            format!("gauge dimensions differ: {} vs {}", a.gauge.len(), b.gauge.len()),
        ));
    }
    for g in &b.gauge {
        if !in_span(&a.field_on_surface(g)?, &ga, zt)? {
            return Ok((false, format!("gauge direction {g} is not shared")));
        }
    }
    if !in_span(&diff, &ga, zt)? {
        return Ok((false, format!("fields differ by {diff}")));
    }
    Ok((true, "solutions agree".into()))
}

/// Whether translating one coordinate maps solutions to solutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffsetCheck {
    pub coordinate: String,
    pub constant_shift_solves: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub pass: bool,
    pub reason: String,
    /// Components of the pushed-forward field, as functions on the extended chart.
    pub projected: Vec<Expr>,
    pub offsets: Vec<OffsetCheck>,
}

/// Pushes the extended solution through `proj` and compares with the base solution.
pub fn project_and_compare(
    extended: &Dynamics,
    base: &Dynamics,
    proj: &CoordMap,
    zt: &ZeroTest,
) -> Result<Projection, EomError> {
    let ext = proj.source().clone();
    let fail = |reason: String| Projection {
        pass: false,
        reason,
        projected: Vec::new(),
        offsets: Vec::new(),
    };
    let (Some(ze), Some(zb)) = (&extended.z, &base.z) else {
        return Ok(if extended.verdict == base.verdict {
            Projection {
                pass: true,
                reason: "both inconsistent".into(),
                projected: Vec::new(),
                offsets: Vec::new(),
            }
        } else {
            fail("only one problem is solvable".into())
        });
    };
    let pull = proj.substitution();
    let to_ext = |e: &Expr| -> Result<Expr, ExprError> {
        let e = if pull.is_empty() {
            e.clone()
        } else {
            e.substitute(&pull)?
        };
        extended.on_surface(&e)
    };
    let projected: Vec<Expr> = proj
        .components()
        .iter()
        .map(|c| extended.on_surface(&ze.apply(c)))
        .collect::<Result<_, _>>()?;
    let base_pulled: Vec<Expr> = zb.comps().iter().map(&to_ext).collect::<Result<_, _>>()?;
    for f in &base.secondary {
        let g = to_ext(f)?;
        if zt.verdict(&g) != Verdict::Zero {
            return Ok(fail(format!(
                "base constraint {f} does not hold on the extended surface"
            )));
        }
    }
    let target = proj.target();
    let diff = VecField::new(target, projected.iter().zip(&base_pulled).map(|(a, b)| a - b).collect());
    let gauge: Vec<VecField> = base
        .gauge
        .iter()
        .map(|g| {
            Ok(VecField::new(
                target,
                g.comps().iter().map(&to_ext).collect::<Result<_, ExprError>>()?,
            ))
        })
        .collect::<Result<_, EomError>>()?;
    let agree = in_span(&diff, &gauge, zt)?;
    let mut offsets = Vec::new();
    for i in 0..ext.dim() {
        if !matches!(ext.role(i), Role::Momentum | Role::ActionMomentum) {
            continue;
        }
        let x = ext.name(i);
        let pinned = extended.surface.contains_key(x);
        let free = ze.comps().iter().all(|c| zt.verdict(&c.diff(x)) == Verdict::Zero)
            && extended
                .surface
                .values()
                .all(|v| zt.verdict(&v.diff(x)) == Verdict::Zero)
            && extended
                .secondary
                .iter()
                .all(|f| zt.verdict(&f.diff(x)) == Verdict::Zero);
        offsets.push(OffsetCheck {
            coordinate: x.to_string(),
            constant_shift_solves: free && !pinned,
        });
    }
    Ok(Projection {
        pass: agree,
        reason: if agree {
            "projected solutions agree".into()
        } else {
            format!("projected fields differ by {diff}")
        },
        projected,
        offsets,
    })
}

#[cfg(test)]
mod tests;
