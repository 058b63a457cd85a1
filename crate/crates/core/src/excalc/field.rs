use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::symexpr::{Expr, ExprView, Verdict, ZeroTest};

use super::Chart;

/// Vector field with one component per chart coordinate.
#[derive(Clone, PartialEq)]
pub struct VecField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VecField {
    pub fn zero(chart: &Arc<Chart>) -> Self {
        VecField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    pub fn basis(chart: &Arc<Chart>, i: usize) -> Self {
        let mut v = VecField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    /// `∂/∂x` by coordinate name; panics on unknown names.
    pub fn partial(chart: &Arc<Chart>, name: &str) -> Self {
        let i = chart
            .index(name)
            .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
        VecField::basis(chart, i)
    }

    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> Self {
        assert_eq!(comps.len(), chart.dim());
        VecField {
            chart: chart.clone(),
            comps,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp_named(&self, name: &str) -> &Expr {
        &self.comps[self.chart.index(name).expect("coordinate exists")]
    }

    pub fn set(&mut self, i: usize, e: Expr) {
        self.comps[i] = e;
    }

    /// Directional derivative `X(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        self.comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| c * f.diff(self.chart.name(i)))
            .sum()
    }

    pub fn bracket(&self, other: &VecField) -> VecField {
        let comps = (0..self.chart.dim())
            .map(|i| self.apply(&other.comps[i]) - other.apply(&self.comps[i]))
            .collect();
        VecField::new(&self.chart, comps)
    }

    pub fn scale(&self, f: &Expr) -> VecField {
        VecField::new(&self.chart, self.comps.iter().map(|c| c * f).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn zero_verdict(&self, zt: &ZeroTest) -> Verdict {
        let mut unknown = false;
        for c in &self.comps {
            match zt.verdict(c) {
                Verdict::NonZero => return Verdict::NonZero,
                Verdict::Unknown => unknown = true,
                Verdict::Zero => {}
            }
        }
        if unknown {
            Verdict::Unknown
        } else {
            Verdict::Zero
        }
    }
}

impl Add<&VecField> for &VecField {
    type Output = VecField;
    fn add(self, rhs: &VecField) -> VecField {
        let comps = self.comps.iter().zip(&rhs.comps).map(|(a, b)| a + b).collect();
        VecField::new(&self.chart, comps)
    }
}

impl Sub<&VecField> for &VecField {
    type Output = VecField;
    fn sub(self, rhs: &VecField) -> VecField {
        let comps = self.comps.iter().zip(&rhs.comps).map(|(a, b)| a - b).collect();
        VecField::new(&self.chart, comps)
    }
}

impl Neg for &VecField {
    type Output = VecField;
    fn neg(self) -> VecField {
        VecField::new(&self.chart, self.comps.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for VecField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let basis = format!("∂{}", self.chart.name(i));
            let s = c.to_string();
            let compound = matches!(c.view(), ExprView::Sum(_) | ExprView::Quotient(..));
            let (neg, mag) = if !compound && s.starts_with('-') {
                (true, (-c).to_string())
            } else {
                (false, s)
            };
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            if mag == "1" {
                f.write_str(&basis)?;
            } else if compound {
                write!(f, "({mag})*{basis}")?;
            } else {
                write!(f, "{mag}*{basis}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VecField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VecField({self})")
    }
}
