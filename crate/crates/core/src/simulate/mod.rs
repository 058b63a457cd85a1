//! Numeric integration of solved vector fields.
//!
//! A field `Z` with `Z^t = 1` is compiled to a right-hand side over the chart
//! coordinates and integrated by classical fixed-step RK4. Monitors evaluate
//! scalar residuals at every node, or accumulate the pullback `∫γ*α` of a
//! 1-form along the discrete trajectory.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::excalc::{Chart, Form, VecField};
use crate::symexpr::{Compiled, EvalError, Expr, Name, Point};

/// Tolerance for initial conditions on constraint surfaces.
pub const INITIAL_TOL: f64 = 1e-10;
/// Largest violation repaired by a projection step.
pub const PROJECTION_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("time component of the field is `{0}`, expected 1")]
    NotTimeParametrised(Expr),
    #[error("no value for parameter `{0}`")]
    MissingParameter(String),
    #[error("initial state has no value for `{0}`")]
    MissingCoordinate(String),
    #[error("step must be positive and span non-negative (h = {h}, span = {span})")]
    BadStep { h: f64, span: f64 },
    #[error("evaluation failed at {state}: {source}")]
    Singular { state: String, source: EvalError },
    #[error("initial condition violates `{constraint}` by {violation:e}")]
    InitialCondition { constraint: String, violation: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn describe(names: &[Name], x: &[f64]) -> String {
    let parts: Vec<String> = names.iter().zip(x).map(|(n, v)| format!("{n} = {v}")).collect();
    format!("({})", parts.join(", "))
}

/// Expressions compiled against chart coordinates followed by parameters.
#[derive(Clone, Debug)]
struct Bound {
    names: Vec<Name>,
    params: Vec<f64>,
}

impl Bound {
    fn new(chart: &Chart, params: &BTreeMap<String, f64>) -> Result<Self, SimError> {
        let mut names = chart.names();
        let mut values = Vec::new();
        for p in chart.params() {
            let v = params
                .get(&**p)
                .ok_or_else(|| SimError::MissingParameter(p.to_string()))?;
            names.push(p.clone());
            values.push(*v);
        }
        Ok(Bound { names, params: values })
    }

    fn compile(&self, e: &Expr) -> Compiled {
        e.compile(&self.names)
    }

    fn eval(&self, c: &Compiled, x: &[f64], buf: &mut Vec<f64>) -> Result<f64, SimError> {
        buf.clear();
        buf.extend_from_slice(x);
        buf.extend_from_slice(&self.params);
        c.eval(buf).map_err(|source| SimError::Singular {
            state: describe(&self.names, x),
            source,
        })
    }
}

/// Numeric right-hand side of a time-parametrised field.
#[derive(Clone, Debug)]
pub struct Rhs {
    chart: Arc<Chart>,
    field: VecField,
    bound: Bound,
    comps: Vec<Compiled>,
}

/// Compiles `Z` after checking `Z^t = 1`.
pub fn compile(z: &VecField, params: &BTreeMap<String, f64>) -> Result<Rhs, SimError> {
    let chart = z.chart().clone();
    if let Some(t) = chart.time() {
        if !z.comp(t).is_one() {
            return Err(SimError::NotTimeParametrised(z.comp(t).clone()));
        }
    }
    let bound = Bound::new(&chart, params)?;
    let comps = z.comps().iter().map(|c| bound.compile(c)).collect();
    Ok(Rhs {
        chart,
        field: z.clone(),
        bound,
        comps,
    })
}

impl Rhs {
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn field(&self) -> &VecField {
        &self.field
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) -> Result<(), SimError> {
        let mut buf = Vec::with_capacity(self.bound.names.len());
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = self.bound.eval(c, x, &mut buf)?;
            if !o.is_finite() {
                return Err(SimError::Singular {
                    state: describe(&self.bound.names, x),
                    source: EvalError::NonFinite,
                });
            }
        }
        Ok(())
    }

    /// State vector in chart order from named values.
    pub fn state(&self, x0: &Point) -> Result<Vec<f64>, SimError> {
        self.chart
            .names()
            .iter()
            .map(|n| x0.get(n).ok_or_else(|| SimError::MissingCoordinate(n.to_string())))
            .collect()
    }

    /// Checks function constraints and the incidence `α(Z) = 0` at `x0`.
    ///
    /// Function constraints violated by less than [`PROJECTION_TOL`] are
    /// repaired by one Gauss-Newton step on the non-time coordinates.
    pub fn prepare_initial(&self, x0: &[f64], functions: &[Expr], forms: &[Form]) -> Result<Vec<f64>, SimError> {
        let mut x = x0.to_vec();
        let mut buf = Vec::new();
        let fs: Vec<Compiled> = functions.iter().map(|f| self.bound.compile(f)).collect();
        let values = |x: &[f64], buf: &mut Vec<f64>| -> Result<Vec<f64>, SimError> {
            fs.iter().map(|c| self.bound.eval(c, x, buf)).collect()
        };
        let worst = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(i, r)| (i, r.abs()))
                .fold((0, 0.0f64), |a, b| if b.1 > a.1 { b } else { a })
        };
        let f0 = values(&x, &mut buf)?;
        let (i, w) = worst(&f0);
        if w > INITIAL_TOL {
            if w >= PROJECTION_TOL {
                return Err(SimError::InitialCondition {
                    constraint: functions[i].to_string(),
                    violation: w,
                });
            }
            let t = self.chart.time();
            let jac: Vec<Vec<f64>> = functions
                .iter()
                .map(|f| {
                    (0..self.dim())
                        .map(|j| {
                            if Some(j) == t {
                                return Ok(0.0);
                            }
                            let c = self.bound.compile(&f.diff(self.chart.name(j)));
                            self.bound.eval(&c, &x, &mut buf)
                        })
                        .collect::<Result<Vec<f64>, SimError>>()
                })
                .collect::<Result<_, _>>()?;
            let dx = least_norm(&jac, &f0);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi -= d;
            }
            let (i, w) = worst(&values(&x, &mut buf)?);
            if w > INITIAL_TOL {
                return Err(SimError::InitialCondition {
                    constraint: functions[i].to_string(),
                    violation: w,
                });
            }
        }
        for a in forms {
            let inc = a.interior(&self.field).as_scalar();
            let v = self.bound.eval(&self.bound.compile(&inc), &x, &mut buf)?;
            if v.abs() > INITIAL_TOL {
                return Err(SimError::InitialCondition {
                    constraint: format!("i_Z ({a})"),
                    violation: v.abs(),
                });
            }
        }
        Ok(x)
    }
}

/// `Jᵀ(JJᵀ)⁻¹f`, the minimum-norm solution of `J dx = f`.
#[allow(clippy::needless_range_loop)]
fn least_norm(j: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    let m = j.len();
    let n = j.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            let mut row: Vec<f64> = (0..m).map(|c| (0..n).map(|k| j[r][k] * j[c][k]).sum()).collect();
            row.push(f[r]);
            row
        })
        .collect();
    for col in 0..m {
        let p = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        if a[p][col].abs() < 1e-300 {
            continue;
        }
        a.swap(col, p);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=m {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let y: Vec<f64> = (0..m)
        .map(|r| if a[r][r].abs() < 1e-300 { 0.0 } else { a[r][m] / a[r][r] })
        .collect();
    (0..n).map(|k| (0..m).map(|r| j[r][k] * y[r]).sum()).collect()
}

/// Named series over the time grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

impl Channel {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// States on a uniform time grid, one row per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub step: f64,
    pub states: Vec<Vec<f64>>,
    /// Field values at each node, used for interpolation.
    pub rates: Vec<Vec<f64>>,
    pub channels: Vec<Channel>,
}

impl Trajectory {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|s| s[i]).collect())
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn point(&self, k: usize) -> Point {
        Point(self.names.iter().cloned().zip(self.states[k].iter().copied()).collect())
    }

    pub fn channel(&self, name: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.name == name)
    }

    /// Header of coordinate then channel names; values with 17 significant digits.
    pub fn write_csv(&self, w: impl Write) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.names.iter().chain(self.channels.iter().map(|c| &c.name)))?;
        for (k, row) in self.states.iter().enumerate() {
            let cells = row
                .iter()
                .copied()
                .chain(self.channels.iter().map(|c| c.values[k]))
                .map(|v| format!("{v:.16e}"));
            out.write_record(cells)?;
        }
        out.flush()
    }
}

/// Classical RK4 with `round(span / h)` steps of size `h`.
pub fn integrate(rhs: &Rhs, x0: &[f64], span: f64, h: f64) -> Result<Trajectory, SimError> {
    if !(h.is_finite() && h > 0.0 && span.is_finite() && span >= 0.0) {
        return Err(SimError::BadStep { h, span });
    }
    let n = rhs.dim();
    let steps = (span / h).round() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut rates = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        rhs.eval(&x, &mut k1)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        rhs.eval(&tmp, &mut k2)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        rhs.eval(&tmp, &mut k3)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        rhs.eval(&tmp, &mut k4)?;
        states.push(x.clone());
        rates.push(k1.clone());
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    rhs.eval(&x, &mut k1)?;
    states.push(x);
    rates.push(k1);
    Ok(Trajectory {
        names: rhs.chart.names().iter().map(|n| n.to_string()).collect(),
        step: h,
        states,
        rates,
        channels: Vec::new(),
    })
}

/// A residual tracked along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum Monitor {
    /// Value of a function at each node.
    Function { name: String, expr: Expr },
    /// Running integral of `γ*α` from the initial node.
    Drift { name: String, form: Form },
}

impl Monitor {
    pub fn name(&self) -> &str {
        match self {
            Monitor::Function { name, .. } | Monitor::Drift { name, .. } => name,
        }
    }
}

/// Per-channel maximum of `|residual|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonitorMax {
    pub name: String,
    pub max_abs: f64,
}

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// Evaluates monitors along a trajectory and attaches them as channels.
///
/// Drift channels integrate `α(x)·ẋ` over the cubic Hermite interpolant of
/// each step with 3-point Gauss-Legendre quadrature.
pub fn monitor(traj: &mut Trajectory, rhs: &Rhs, spec: &[Monitor]) -> Result<Vec<MonitorMax>, SimError> {
    let mut buf = Vec::new();
    let b = &rhs.bound;
    let mut out = Vec::new();
    for m in spec {
        let values = match m {
            Monitor::Function { expr, .. } => {
                let c = b.compile(expr);
                traj.states
                    .iter()
                    .map(|x| b.eval(&c, x, &mut buf))
                    .collect::<Result<Vec<f64>, _>>()?
            }
            Monitor::Drift { form, .. } => {
                let comps: Vec<Compiled> = form.components().iter().map(|c| b.compile(c)).collect();
                let h = traj.step;
                let mut acc = 0.0;
                let mut values = vec![0.0];
                let n = traj.names.len();
                let mut x = vec![0.0; n];
                let mut dx = vec![0.0; n];
                for k in 0..traj.states.len() - 1 {
                    let (x0, x1) = (&traj.states[k], &traj.states[k + 1]);
                    let (f0, f1) = (&traj.rates[k], &traj.rates[k + 1]);
                    let mut step = 0.0;
                    for (node, w) in GAUSS3 {
                        let s = 0.5 * (node + 1.0);
                        let (h00, h10, h01, h11) = (
                            2.0 * s * s * s - 3.0 * s * s + 1.0,
                            s * s * s - 2.0 * s * s + s,
                            -2.0 * s * s * s + 3.0 * s * s,
                            s * s * s - s * s,
                        );
                        let (d00, d10, d01, d11) = (
                            6.0 * s * s - 6.0 * s,
                            3.0 * s * s - 4.0 * s + 1.0,
                            -6.0 * s * s + 6.0 * s,
                            3.0 * s * s - 2.0 * s,
                        );
                        for i in 0..n {
                            x[i] = h00 * x0[i] + h10 * h * f0[i] + h01 * x1[i] + h11 * h * f1[i];
                            dx[i] = (d00 * x0[i] + d01 * x1[i]) / h + d10 * f0[i] + d11 * f1[i];
                        }
                        let mut integrand = 0.0;
                        for (c, d) in comps.iter().zip(&dx) {
                            if *d != 0.0 {
                                integrand += b.eval(c, &x, &mut buf)? * d;
                            }
                        }
                        step += w * integrand;
                    }
                    acc += 0.5 * h * step;
                    values.push(acc);
                }
                values
            }
        };
        let ch = Channel {
            name: m.name().to_string(),
            values,
        };
        out.push(MonitorMax {
            name: ch.name.clone(),
            max_abs: ch.max_abs(),
        });
        traj.channels.retain(|c| c.name != ch.name);
        traj.channels.push(ch);
    }
    Ok(out)
}
