//! Exterior calculus on a single coordinate chart.

mod field;
mod form;
mod map;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use field::VecField;
pub use form::Form;
pub use map::CoordMap;

use crate::linsolve::{kernel, numeric_rank, SolveError};
use crate::symexpr::{EvalError, Expr, Name, Point, SymbolTable, ZeroTest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Time,
    Position,
    Velocity,
    Action,
    Auxiliary,
    Momentum,
    ActionMomentum,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coordinate {
    pub name: Name,
    pub role: Role,
}

/// Ordered coordinates with roles, parameters and abstract functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    coords: Vec<Coordinate>,
    params: Vec<Name>,
    functions: BTreeMap<Name, Vec<Name>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChartError {
    #[error("name `{0}` is declared twice")]
    Duplicate(String),
    #[error("name `{0}` is reserved")]
    Reserved(String),
    #[error("name `{name}` collides with the differential of coordinate `{coord}`")]
    DifferentialCollision { name: String, coord: String },
    #[error("{0}")]
    Roles(String),
    #[error("function `{function}` depends on `{arg}`, which is not a coordinate")]
    FunctionArgument { function: String, arg: String },
}

const RESERVED: &[&str] = &["sin", "cos", "tan", "exp", "log", "sqrt", "D"];

/// Momentum conjugate to a position or action coordinate: `q1 -> p1`, `s -> ps`.
pub fn momentum_name(coord: &str) -> String {
    match coord.strip_prefix('q') {
        Some(rest) => format!("p{rest}"),
        None => format!("p{coord}"),
    }
}

#[derive(Clone, Debug, Default)]
pub struct ChartBuilder {
    coords: Vec<Coordinate>,
    params: Vec<Name>,
    functions: Vec<(Name, Vec<Name>)>,
}

impl ChartBuilder {
    pub fn coord(mut self, name: &str, role: Role) -> Self {
        self.coords.push(Coordinate {
            name: name.into(),
            role,
        });
        self
    }

    pub fn time(self, name: &str) -> Self {
        self.coord(name, Role::Time)
    }

    pub fn positions(self, names: &[&str]) -> Self {
        names.iter().fold(self, |b, n| b.coord(n, Role::Position))
    }

    pub fn velocities(self, names: &[&str]) -> Self {
        names.iter().fold(self, |b, n| b.coord(n, Role::Velocity))
    }

    pub fn action(self, name: &str) -> Self {
        self.coord(name, Role::Action)
    }

    pub fn auxiliary(self, names: &[&str]) -> Self {
        names.iter().fold(self, |b, n| b.coord(n, Role::Auxiliary))
    }

    pub fn momenta(self, names: &[&str]) -> Self {
        names.iter().fold(self, |b, n| b.coord(n, Role::Momentum))
    }

    pub fn action_momentum(self, name: &str) -> Self {
        self.coord(name, Role::ActionMomentum)
    }

    pub fn param(mut self, name: &str) -> Self {
        self.params.push(name.into());
        self
    }

    pub fn function(mut self, name: &str, args: &[&str]) -> Self {
        self.functions
            .push((name.into(), args.iter().map(|a| Name::from(*a)).collect()));
        self
    }

    pub fn build(self) -> Result<Arc<Chart>, ChartError> {
        let mut seen = BTreeSet::new();
        let all = self
            .coords
            .iter()
            .map(|c| c.name.clone())
            .chain(self.params.iter().cloned())
            .chain(self.functions.iter().map(|f| f.0.clone()));
        for n in all {
            let valid = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid || RESERVED.contains(&&*n) {
                return Err(ChartError::Reserved(n.to_string()));
            }
            if !seen.insert(n.clone()) {
                return Err(ChartError::Duplicate(n.to_string()));
            }
        }
        for n in &seen {
            if let Some(rest) = n.strip_prefix('d') {
                if self.coords.iter().any(|c| &*c.name == rest) {
                    return Err(ChartError::DifferentialCollision {
                        name: n.to_string(),
                        coord: rest.to_string(),
                    });
                }
            }
        }
        let count = |r: Role| self.coords.iter().filter(|c| c.role == r).count();
        for r in [Role::Time, Role::Action, Role::ActionMomentum] {
            if count(r) > 1 {
                return Err(ChartError::Roles(format!("at most one {r:?} coordinate")));
            }
        }
        let npos = count(Role::Position);
        for r in [Role::Velocity, Role::Momentum] {
            let k = count(r);
            if k != 0 && k != npos {
                return Err(ChartError::Roles(format!("{k} {r:?} coordinates for {npos} positions")));
            }
        }
        for (f, args) in &self.functions {
            for a in args {
                if !self.coords.iter().any(|c| c.name == *a) {
                    return Err(ChartError::FunctionArgument {
                        function: f.to_string(),
                        arg: a.to_string(),
                    });
                }
            }
        }
        Ok(Arc::new(Chart {
            coords: self.coords,
            params: self.params,
            functions: self.functions.into_iter().collect(),
        }))
    }
}

impl Chart {
    pub fn builder() -> ChartBuilder {
        ChartBuilder::default()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn names(&self) -> Vec<Name> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn params(&self) -> &[Name] {
        &self.params
    }

    pub fn functions(&self) -> &BTreeMap<Name, Vec<Name>> {
        &self.functions
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| &*c.name == name)
    }

    pub fn name(&self, i: usize) -> &str {
        &self.coords[i].name
    }

    pub fn role(&self, i: usize) -> Role {
        self.coords[i].role
    }

    pub fn with_role(&self, r: Role) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.role(i) == r).collect()
    }

    pub fn time(&self) -> Option<usize> {
        self.with_role(Role::Time).first().copied()
    }

    pub fn action(&self) -> Option<usize> {
        self.with_role(Role::Action).first().copied()
    }

    pub fn action_momentum(&self) -> Option<usize> {
        self.with_role(Role::ActionMomentum).first().copied()
    }

    pub fn positions(&self) -> Vec<usize> {
        self.with_role(Role::Position)
    }

    pub fn velocities(&self) -> Vec<usize> {
        self.with_role(Role::Velocity)
    }

    pub fn momenta(&self) -> Vec<usize> {
        self.with_role(Role::Momentum)
    }

    pub fn var(&self, i: usize) -> Expr {
        Expr::coord(self.name(i))
    }

    /// Coordinate expression by name; panics on unknown names.
    pub fn expr(&self, name: &str) -> Expr {
        assert!(self.index(name).is_some(), "unknown coordinate `{name}`");
        Expr::coord(name)
    }

    /// Copy of this chart with different parameters kept and extra coordinates appended.
    pub fn extended(&self, extra: &[(&str, Role)]) -> Result<Arc<Chart>, ChartError> {
        let mut b = ChartBuilder {
            coords: self.coords.clone(),
            params: self.params.clone(),
            functions: self.functions.clone().into_iter().collect(),
        };
        for (n, r) in extra {
            b = b.coord(n, *r);
        }
        b.build()
    }

    /// Parses a scalar in this chart.
    pub fn parse(&self, src: &str) -> Result<Expr, crate::symexpr::ParseError> {
        crate::symexpr::parse_expr(src, self)
    }
}

impl SymbolTable for Chart {
    fn is_coordinate(&self, name: &str) -> bool {
        self.index(name).is_some()
    }
    fn is_parameter(&self, name: &str) -> bool {
        self.params.iter().any(|p| &**p == name)
    }
    fn function_args(&self, name: &str) -> Option<Vec<Name>> {
        self.functions.get(name).cloned()
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.coords.iter().map(|c| &*c.name).collect();
        write!(f, "({})", names.join(", "))
    }
}

/// Rows whose null space is `ker ω ∩ ker α_1 ∩ ...` over all chart directions.
pub fn annihilator_rows(two_form: Option<&Form>, one_forms: &[Form]) -> Vec<Vec<Expr>> {
    let mut rows = Vec::new();
    if let Some(w) = two_form {
        let m = w.matrix();
        rows.extend(m.into_iter().map(|r| r.into_iter().map(|e| -e).collect()));
    }
    rows.extend(one_forms.iter().map(Form::components));
    rows
}

/// Basis of the vector fields annihilated by the given forms.
pub fn kernel_basis(
    chart: &Arc<Chart>,
    two_form: Option<&Form>,
    one_forms: &[Form],
    zt: &ZeroTest,
) -> Result<Vec<VecField>, SolveError> {
    let rows = annihilator_rows(two_form, one_forms);
    let k = kernel(&rows, chart.dim(), zt)?;
    Ok(k.into_iter().map(|v| VecField::new(chart, v)).collect())
}

/// Rank of an expression matrix at a point.
pub fn rank_at(rows: &[Vec<Expr>], point: &Point, tol: f64) -> Result<usize, EvalError> {
    let m = rows
        .iter()
        .map(|r| r.iter().map(|e| e.eval(point)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(numeric_rank(&m, tol))
}
