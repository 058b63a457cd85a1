use serde::Serialize;

use crate::excalc::{kernel_basis, Form, VecField};
use crate::linsolve;
use crate::symexpr::{Expr, Verdict};

use super::{GeomError, Hessian, ReebSolution, Workbench};

/// Verdict with its evidence; `holds` is `None` when the zero test cannot decide.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub holds: Option<bool>,
    pub witness: String,
}

impl Check {
    fn nonzero(f: &Form, v: Verdict) -> Check {
        Check {
            holds: match v {
                Verdict::NonZero => Some(true),
                Verdict::Zero => Some(false),
                Verdict::Unknown => None,
            },
            witness: f.to_string(),
        }
    }

    fn zero(f: &Form, v: Verdict) -> Check {
        Check {
            holds: match v {
                Verdict::Zero => Some(true),
                Verdict::NonZero => Some(false),
                Verdict::Unknown => None,
            },
            witness: f.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianReport {
    pub regular: bool,
    pub inverse: Option<Vec<Vec<String>>>,
    pub null_vectors: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReebReport {
    pub exists: bool,
    pub field: Option<String>,
    pub kernel: Vec<String>,
    pub witness: String,
}

impl From<&ReebSolution> for ReebReport {
    fn from(s: &ReebSolution) -> Self {
        match s {
            ReebSolution::Family { particular, kernel } => ReebReport {
                exists: true,
                field: Some(particular.to_string()),
                kernel: kernel.iter().map(VecField::to_string).collect(),
                witness: format!("R = {particular}"),
            },
            ReebSolution::NoSolution { row, residual } => ReebReport {
                exists: false,
                field: None,
                kernel: Vec::new(),
                witness: match row {
                    Some(r) => format!("row {r} reduces to 0 = {residual}"),
                    None => format!("requires {residual} = 0"),
                },
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecontactReport {
    /// Rank of `dη_L` restricted to `ker η_L` (within `ker τ` when time is present).
    pub restricted_rank: usize,
    /// Dimension of `ker dη_L ∩ ker η_L`.
    pub kernel_dimension: usize,
    pub reeb_exists: bool,
    pub holds: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PremulticontactReport {
    pub sufficient: ReebReport,
    pub surface_eta: String,
    pub surface_reeb: ReebReport,
    pub holds: bool,
}

/// Structure flags of a Lagrangian, each with a symbolic witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureReport {
    pub lagrangian: String,
    pub hessian: HessianReport,
    /// `τ∧ω_L^n ≠ 0`.
    pub cosymplectic: Option<Check>,
    /// `i_Rτ = 1`, `i_Rω_L = 0`.
    pub cosymplectic_reeb: Option<ReebReport>,
    /// `η_L∧(dη_L)^n ≠ 0` for `η_L = ds − (∂L/∂v^i) dq^i`.
    pub contact: Option<Check>,
    /// `i_Rη_L = 1`, `i_R dη_L = 0`.
    pub contact_reeb: Option<ReebReport>,
    pub precontact: Option<PrecontactReport>,
    pub premulticontact: Option<PremulticontactReport>,
    /// `dΩ̌ = dp_s∧Ω̌`.
    pub lcs: Option<Check>,
    /// `L_UΩ̌ = 0` for `U = ∂_{p_s}`.
    pub lee: Option<Check>,
    /// `L_{∂t}ω = 0` and `L_{∂t}σ_t = 0` for the modified structure.
    pub autonomous: Option<Check>,
}

fn strings(m: &[Vec<Expr>]) -> Vec<Vec<String>> {
    m.iter().map(|r| r.iter().map(Expr::to_string).collect()).collect()
}

impl Workbench {
    /// `η_L = ds − (∂L/∂v^i) dq^i`.
    pub fn contact_form(&self, l: &Expr) -> Result<Form, GeomError> {
        let mut out = Form::dx(&self.chart, self.action()?);
        for (q, v) in self.pairs()? {
            out = &out - &Form::dx(&self.chart, q).scale(&l.diff(self.chart.name(v)));
        }
        Ok(out)
    }

    /// Rank of `dη` on `ker η` (and `ker τ` when present) and `dim(ker dη ∩ ker η)`.
    pub fn restricted_rank(&self, eta: &Form) -> Result<(usize, usize), GeomError> {
        let mut ones = vec![eta.clone()];
        if let Ok(tau) = self.tau() {
            ones.push(tau);
        }
        let deta = eta.d();
        let basis = kernel_basis(&self.chart, None, &ones, &self.zt)?;
        let m: Vec<Vec<Expr>> = basis
            .iter()
            .map(|a| basis.iter().map(|b| deta.interior(a).interior(b).as_scalar()).collect())
            .collect();
        let rank = if m.is_empty() {
            0
        } else {
            linsolve::solve(&m, &vec![Expr::zero(); m.len()], m.len(), &self.zt)?
                .pivots
                .len()
        };
        let kdim = kernel_basis(&self.chart, Some(&deta), &ones, &self.zt)?.len();
        Ok((rank, kdim))
    }

    /// Populates every applicable flag for the Lagrangian `l`.
    pub fn classify(&self, l: &Expr) -> Result<StructureReport, GeomError> {
        let zt = &self.zt;
        let hessian = match self.hessian_inverse(l)? {
            Hessian::Regular(w) => HessianReport {
                regular: true,
                inverse: Some(strings(&w)),
                null_vectors: Vec::new(),
            },
            Hessian::Singular { null_vectors, .. } => HessianReport {
                regular: false,
                inverse: None,
                null_vectors: strings(&null_vectors),
            },
        };
        let n = self.pairs()?.len();
        let has_time = self.chart.time().is_some();
        let has_action = self.chart.action().is_some();

        let (mut cosymplectic, mut cosymplectic_reeb, mut autonomous) = (None, None, None);
        if has_time {
            let tau = self.tau()?;
            let wl = self.lagrangian_two_form(l)?;
            let top = tau.wedge(&wl.power(n));
            cosymplectic = Some(Check::nonzero(&top, top.zero_verdict(zt)));
            cosymplectic_reeb = Some(ReebReport::from(&self.reeb_solve(&[(tau, Expr::one())], &[wl])?));
            let m = self.modified_precosymplectic(l)?;
            let lw = m.omega.lie(&m.reeb);
            let ls = m.sigma_t.lie(&m.reeb);
            let v = match (lw.zero_verdict(zt), ls.zero_verdict(zt)) {
                (Verdict::Zero, Verdict::Zero) => Verdict::Zero,
                (Verdict::NonZero, _) | (_, Verdict::NonZero) => Verdict::NonZero,
                _ => Verdict::Unknown,
            };
            let witness = if lw.zero_verdict(zt) == Verdict::NonZero {
                lw
            } else {
                ls
            };
            autonomous = Some(Check::zero(&witness, v));
        }

        let (mut contact, mut contact_reeb, mut precontact, mut premulticontact, mut lcs, mut lee) =
            (None, None, None, None, None, None);
        if has_action {
            let eta = self.contact_form(l)?;
            let deta = eta.d();
            let top = eta.wedge(&deta.power(n));
            contact = Some(Check::nonzero(&top, top.zero_verdict(zt)));
            let reeb = self.reeb_solve(&[(eta.clone(), Expr::one())], &[deta])?;
            let reeb_exists = matches!(reeb, ReebSolution::Family { .. });
            contact_reeb = Some(ReebReport::from(&reeb));
            let (rank, kdim) = self.restricted_rank(&eta)?;
            let holds = reeb_exists && rank % 2 == 0 && rank < 2 * n;
            let note = if !reeb_exists && rank == 0 && kdim > 0 {
                format!(
                    "dη_L restricted to ker η_L vanishes (rank 0), while ker dη_L ∩ ker η_L has dimension {kdim}; \
                     the verdict combines the restricted rank with Reeb existence"
                )
            } else {
                format!("restricted rank {rank}, ker dη_L ∩ ker η_L of dimension {kdim}")
            };
            precontact = Some(PrecontactReport {
                restricted_rank: rank,
                kernel_dimension: kdim,
                reeb_exists,
                holds,
                note,
            });
            if has_time {
                let pm = self.premulticontact_reeb(l)?;
                premulticontact = Some(PremulticontactReport {
                    sufficient: ReebReport::from(&pm.sufficient),
                    surface_eta: pm.surface_eta.to_string(),
                    surface_reeb: ReebReport::from(&pm.surface_reeb),
                    holds: pm.holds(),
                });
                let u = self.absorb_mixed(l, &[self.herglotz_constraint(l)?])?;
                if let Some(w) = &u.omega_check {
                    let ps = u.chart.action_momentum().expect("p_s");
                    let dps = Form::dx(&u.chart, ps);
                    let defect = &w.d() - &dps.wedge(w);
                    lcs = Some(Check::zero(&defect, defect.zero_verdict(zt)));
                    let lie = w.lie(&VecField::basis(&u.chart, ps));
                    lee = Some(Check::zero(&lie, lie.zero_verdict(zt)));
                }
            }
        }

        Ok(StructureReport {
            lagrangian: l.to_string(),
            hessian,
            cosymplectic,
            cosymplectic_reeb,
            contact,
            contact_reeb,
            precontact,
            premulticontact,
            lcs,
            lee,
            autonomous,
        })
    }
}
