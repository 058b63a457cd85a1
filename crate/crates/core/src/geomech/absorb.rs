use std::sync::Arc;

use crate::excalc::{momentum_name, Chart, CoordMap, Form, Role};
use crate::symexpr::{Expr, Verdict};

use super::{GeomError, Workbench};

/// Unified 2-form on a chart enlarged by multiplier momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct Unified {
    pub chart: Arc<Chart>,
    pub omega_u: Form,
    /// `η̌ = ds − p_i κ^i − L dt`, built for a single Herglotz constraint.
    pub eta_check: Option<Form>,
    /// `Ω̌ = −dη̌ + dp_s∧η̌`.
    pub omega_check: Option<Form>,
    /// Projection forgetting the momenta.
    pub projection: CoordMap,
}

impl Workbench {
    fn momentum_chart(&self, with_action: bool) -> Result<Arc<Chart>, GeomError> {
        let mut extra: Vec<(String, Role)> = self
            .chart
            .positions()
            .into_iter()
            .map(|q| (momentum_name(self.chart.name(q)), Role::Momentum))
            .collect();
        if with_action {
            let s = self.action()?;
            extra.push((momentum_name(self.chart.name(s)), Role::ActionMomentum));
        }
        let extra: Vec<(&str, Role)> = extra.iter().map(|(n, r)| (n.as_str(), *r)).collect();
        Ok(self.chart.extended(&extra)?)
    }

    /// `Ω_U = dL∧dt + d(p_i κ^i)` on the chart extended by `p_i`.
    pub fn absorb_holonomy(&self, l: &Expr) -> Result<Unified, GeomError> {
        let ext = self.momentum_chart(false)?;
        let omega_u = self.holonomy_part(l, &ext)?;
        Ok(Unified {
            projection: CoordMap::embedding(&ext, &self.chart, &[]),
            chart: ext,
            omega_u,
            eta_check: None,
            omega_check: None,
        })
    }

    fn holonomy_part(&self, l: &Expr, ext: &Arc<Chart>) -> Result<Form, GeomError> {
        let dt = Form::dx(ext, ext.time().ok_or(GeomError::MissingRole("time"))?);
        let mut pk = Form::zero(ext, 1);
        for (k, p) in self.cartan_forms()?.iter().zip(ext.momenta()) {
            pk = &pk + &self.lift_form(k, ext)?.scale(&ext.var(p));
        }
        Ok(&Form::scalar(ext, l.clone()).d().wedge(&dt) + &pk.d())
    }

    /// `Ω_U = dL∧dt + d(p_i κ^i) + dp_α∧η^α` on the chart extended by `p_i, p_α`.
    pub fn absorb_mixed(&self, l: &Expr, etas: &[Form]) -> Result<Unified, GeomError> {
        if etas.is_empty() {
            return self.absorb_holonomy(l);
        }
        let c = self.compatibility_check(etas, &self.cartan_forms()?)?;
        if !c.holds() {
            let w = [&c.generators, &c.independence, &c.cartan_annihilates]
                .into_iter()
                .find(|x| !x.holds)
                .map(|x| x.witness.clone())
                .unwrap_or_default();
            return Err(GeomError::Incompatible(w));
        }
        let ext = self.momentum_chart(true)?;
        let mut omega_u = self.holonomy_part(l, &ext)?;
        let pa = ext.action_momentum().expect("extended chart has an action momentum");
        let lifted: Vec<Form> = etas.iter().map(|e| self.lift_form(e, &ext)).collect::<Result<_, _>>()?;
        for eta in &lifted {
            omega_u = &omega_u + &Form::dx(&ext, pa).wedge(eta);
        }
        let herglotz = self.herglotz_constraint(l)?;
        let (eta_check, omega_check) =
            if etas.len() == 1 && (&etas[0] - &herglotz).zero_verdict(&self.zt) == Verdict::Zero {
                let s = ext.action().expect("action coordinate");
                let t = ext.time().expect("time coordinate");
                let mut e = &Form::dx(&ext, s) - &Form::dx(&ext, t).scale(l);
                for (k, p) in self.cartan_forms()?.iter().zip(ext.momenta()) {
                    e = &e - &self.lift_form(k, &ext)?.scale(&ext.var(p));
                }
                let w = &(-&e.d()) + &Form::dx(&ext, pa).wedge(&e);
                (Some(e), Some(w))
            } else {
                (None, None)
            };
        Ok(Unified {
            projection: CoordMap::embedding(&ext, &self.chart, &[]),
            chart: ext,
            omega_u,
            eta_check,
            omega_check,
        })
    }
}
