use std::sync::Arc;

use crate::excalc::{momentum_name, Chart, CoordMap, Form, Role, VecField};
use crate::linsolve::{self, SolveError};
use crate::symexpr::Expr;

use super::{GeomError, ReebSolution, Workbench};

/// `(ω, σ_t)` split along `R_t = ∂_t`, valid for any Lagrangian.
#[derive(Clone, Debug, PartialEq)]
pub struct ModifiedStructure {
    pub omega: Form,
    pub sigma_t: Form,
    pub reeb: VecField,
}

impl ModifiedStructure {
    /// `Ω = ω − σ_t∧τ`.
    pub fn two_form(&self) -> Form {
        let chart = self.omega.chart();
        let t = chart.time().expect("time coordinate");
        &self.omega - &self.sigma_t.wedge(&Form::dx(chart, t))
    }
}

/// Reeb data for the constraint-absorbed Herglotz formulation.
#[derive(Clone, Debug, PartialEq)]
pub struct Premulticontact {
    /// Family `∂_s + g^i ∂_{v^i} + G ∂_{p_s}` on the absorbed chart, when
    /// `g^i ∂²L/∂v^i∂v^j + ∂²L/∂s∂v^j = 0` is solvable.
    pub sufficient: ReebSolution,
    /// Chart of the surface `p_i = ∂L/∂v^i`.
    pub surface: Arc<Chart>,
    pub embedding: CoordMap,
    /// `ι*η̌`.
    pub surface_eta: Form,
    /// Solutions of `i_R ι*η̌ = 1`, `i_R dι*η̌ = 0` on the surface.
    pub surface_reeb: ReebSolution,
}

impl Premulticontact {
    pub fn holds(&self) -> bool {
        matches!(self.surface_reeb, ReebSolution::Family { .. })
    }
}

impl Workbench {
    /// `ω = −ω_L − (∂²L/∂t∂v^i) dt∧dq^i` and
    /// `σ_t = −∂_t(E_L) τ + dE_L + (∂²L/∂t∂v^i) dq^i` with Reeb field `∂_t`.
    pub fn modified_precosymplectic(&self, l: &Expr) -> Result<ModifiedStructure, GeomError> {
        let t = self.time()?;
        let tn = self.chart.name(t).to_string();
        let dt = Form::dx(&self.chart, t);
        let mut omega = -&self.lagrangian_two_form(l)?;
        let e = self.lagrangian_energy(l);
        let mut sigma_t = &Form::scalar(&self.chart, e.clone()).d() - &dt.scale(&e.diff(&tn));
        for (q, v) in self.pairs()? {
            let ltv = l.diff(self.chart.name(v)).diff(&tn);
            let dq = Form::dx(&self.chart, q);
            omega = &omega - &dt.wedge(&dq).scale(&ltv);
            sigma_t = &sigma_t + &dq.scale(&ltv);
        }
        Ok(ModifiedStructure {
            omega,
            sigma_t,
            reeb: VecField::basis(&self.chart, t),
        })
    }

    /// Reeb-type fields of `η̌`: the sufficient family and the direct solve on
    /// the surface `p_i = ∂L/∂v^i`.
    pub fn premulticontact_reeb(&self, l: &Expr) -> Result<Premulticontact, GeomError> {
        let s = self.action()?;
        let sname = self.chart.name(s).to_string();
        let unified = self.absorb_mixed(l, &[self.herglotz_constraint(l)?])?;
        let ext = unified.chart.clone();
        let eta_check = unified.eta_check.clone().expect("Herglotz constraint yields η̌");

        let h = self.hessian(l);
        let vel = self.chart.velocities();
        let rhs: Vec<Expr> = vel.iter().map(|&j| -l.diff(self.chart.name(j)).diff(&sname)).collect();
        let sufficient = match linsolve::solve(&h, &rhs, vel.len(), &self.zt) {
            Err(SolveError::Inconsistent { row, residual }) => ReebSolution::NoSolution {
                row: Some(row),
                residual,
            },
            Err(e) => return Err(e.into()),
            Ok(sol) if !sol.residuals.is_empty() => ReebSolution::NoSolution {
                row: None,
                residual: sol.residuals[0].clone(),
            },
            Ok(sol) => {
                let mut r = VecField::partial(&ext, &sname);
                for (g, &v) in sol.particular.iter().zip(&vel) {
                    r.set(ext.index(self.chart.name(v)).expect("velocity"), g.clone());
                }
                let mut kernel = Vec::new();
                for k in &sol.kernel {
                    let mut f = VecField::zero(&ext);
                    for (g, &v) in k.iter().zip(&vel) {
                        f.set(ext.index(self.chart.name(v)).expect("velocity"), g.clone());
                    }
                    kernel.push(f);
                }
                kernel.push(VecField::basis(&ext, ext.action_momentum().expect("p_s")));
                ReebSolution::Family { particular: r, kernel }
            }
        };

        let ps = momentum_name(&sname);
        let surface = self.chart.extended(&[(ps.as_str(), Role::ActionMomentum)])?;
        let overrides: Vec<(String, Expr)> = self
            .pairs()?
            .into_iter()
            .map(|(q, v)| (momentum_name(self.chart.name(q)), l.diff(self.chart.name(v))))
            .collect();
        let overrides: Vec<(&str, Expr)> = overrides.iter().map(|(n, e)| (n.as_str(), e.clone())).collect();
        let embedding = CoordMap::embedding(&surface, &ext, &overrides);
        let surface_eta = eta_check.pullback(&embedding)?;
        let on_surface = Workbench::new(&surface).with_zero_test(self.zt.clone());
        let surface_reeb = on_surface.reeb_solve(&[(surface_eta.clone(), Expr::one())], &[surface_eta.d()])?;
        Ok(Premulticontact {
            sufficient,
            surface,
            embedding,
            surface_eta,
            surface_reeb,
        })
    }
}
