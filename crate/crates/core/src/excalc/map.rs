use std::collections::BTreeMap;
use std::sync::Arc;

use crate::symexpr::{Expr, Name};

use super::Chart;

/// Smooth map between charts given by target coordinates as functions of
/// source coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordMap {
    source: Arc<Chart>,
    target: Arc<Chart>,
    components: Vec<Expr>,
}

impl CoordMap {
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, components: Vec<Expr>) -> Self {
        assert_eq!(components.len(), target.dim(), "one component per target coordinate");
        CoordMap {
            source: source.clone(),
            target: target.clone(),
            components,
        }
    }

    /// Identity on shared names, with the listed target coordinates overridden.
    /// Target coordinates absent from the source must be overridden.
    pub fn embedding(source: &Arc<Chart>, target: &Arc<Chart>, overrides: &[(&str, Expr)]) -> Self {
        let comps = (0..target.dim())
            .map(|j| {
                let n = target.name(j);
                if let Some((_, e)) = overrides.iter().find(|(k, _)| *k == n) {
                    e.clone()
                } else {
                    assert!(source.index(n).is_some(), "target coordinate `{n}` needs a value");
                    Expr::coord(n)
                }
            })
            .collect();
        CoordMap::new(source, target, comps)
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// Target names mapped to their expressions, skipping identities.
    pub fn substitution(&self) -> BTreeMap<Name, Expr> {
        (0..self.target.dim())
            .filter_map(|j| {
                let n = self.target.name(j);
                let e = &self.components[j];
                (*e != Expr::coord(n)).then(|| (Name::from(n), e.clone()))
            })
            .collect()
    }

    /// Pulls a scalar on the target back to the source.
    pub fn pull_scalar(&self, f: &Expr) -> Result<Expr, crate::symexpr::ExprError> {
        f.substitute(&self.substitution())
    }
}
