use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::sync::Arc;

use crate::symexpr::{parse_ast, Ast, Expr, ExprError, ExprView, ParseError, Verdict, ZeroTest};

use super::{Chart, CoordMap, VecField};

/// Differential form of fixed degree with exact coefficients.
///
/// Terms are keyed by strictly increasing index tuples into the chart.
#[derive(Clone, PartialEq)]
pub struct Form {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sign of the permutation sorting `v`, or `None` on a repeated index.
fn sort_sign(v: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    Some(sign)
}

impl Form {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> Form {
        Form {
            chart: chart.clone(),
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(chart: &Arc<Chart>, f: Expr) -> Form {
        let mut out = Form::zero(chart, 0);
        out.add_term(Vec::new(), f);
        out
    }

    /// `d x^i`
    pub fn dx(chart: &Arc<Chart>, i: usize) -> Form {
        assert!(i < chart.dim());
        let mut out = Form::zero(chart, 1);
        out.add_term(vec![i], Expr::one());
        out
    }

    /// `d x` for a coordinate name; panics on unknown names.
    pub fn d_of(chart: &Arc<Chart>, name: &str) -> Form {
        let i = chart
            .index(name)
            .unwrap_or_else(|| panic!("unknown coordinate `{name}`"));
        Form::dx(chart, i)
    }

    /// Builds a form from (indices, coefficient) pairs in any index order.
    pub fn from_terms(chart: &Arc<Chart>, degree: usize, terms: Vec<(Vec<usize>, Expr)>) -> Form {
        let mut out = Form::zero(chart, degree);
        for (mut idx, c) in terms {
            assert_eq!(idx.len(), degree, "index length must equal degree");
            if let Some(s) = sort_sign(&mut idx) {
                out.add_term(idx, if s < 0 { -c } else { c });
            }
        }
        out
    }

    fn add_term(&mut self, idx: Vec<usize>, c: Expr) {
        if c.is_zero() {
            return;
        }
        match self.terms.get(&idx) {
            None => {
                self.terms.insert(idx, c);
            }
            Some(old) => {
                let s = old + &c;
                if s.is_zero() {
                    self.terms.remove(&idx);
                } else {
                    self.terms.insert(idx, s);
                }
            }
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    pub fn coeff(&self, idx: &[usize]) -> Expr {
        let mut v = idx.to_vec();
        match sort_sign(&mut v) {
            None => Expr::zero(),
            Some(s) => {
                let c = self.terms.get(&v).cloned().unwrap_or_else(Expr::zero);
                if s < 0 {
                    -c
                } else {
                    c
                }
            }
        }
    }

    /// Value of a 0-form.
    pub fn as_scalar(&self) -> Expr {
        assert_eq!(self.degree, 0);
        self.coeff(&[])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Combined verdict over all coefficients.
    pub fn zero_verdict(&self, zt: &ZeroTest) -> Verdict {
        let mut unknown = false;
        for c in self.terms.values() {
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

    fn check_chart(&self, other: &Form) {
        assert!(
            Arc::ptr_eq(&self.chart, &other.chart) || self.chart == other.chart,
            "forms live on different charts"
        );
    }

    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, other: &Form) -> Form {
        self.check_chart(other);
        let mut out = Form::zero(&self.chart, self.degree + other.degree);
        if out.degree > self.chart.dim() {
            return out;
        }
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let mut idx: Vec<usize> = a.iter().chain(b).copied().collect();
                if let Some(s) = sort_sign(&mut idx) {
                    let c = ca * cb;
                    out.add_term(idx, if s < 0 { -c } else { c });
                }
            }
        }
        out
    }

    /// Exterior derivative.
    pub fn d(&self) -> Form {
        let n = self.chart.dim();
        let mut out = Form::zero(&self.chart, self.degree + 1);
        for (idx, c) in &self.terms {
            for j in 0..n {
                if idx.contains(&j) {
                    continue;
                }
                let dc = c.diff(self.chart.name(j));
                if dc.is_zero() {
                    continue;
                }
                let before = idx.iter().filter(|&&i| i < j).count();
                let mut k = idx.clone();
                k.insert(before, j);
                out.add_term(k, if before % 2 == 1 { -dc } else { dc });
            }
        }
        out
    }

    /// Interior product `i_X self`.
    pub fn interior(&self, x: &VecField) -> Form {
        assert!(self.chart == *x.chart(), "field and form live on different charts");
        if self.degree == 0 {
            return Form::zero(&self.chart, 0);
        }
        let mut out = Form::zero(&self.chart, self.degree - 1);
        for (idx, c) in &self.terms {
            for (m, &i) in idx.iter().enumerate() {
                let xi = x.comp(i);
                if xi.is_zero() {
                    continue;
                }
                let mut k = idx.clone();
                k.remove(m);
                let t = c * xi;
                out.add_term(k, if m % 2 == 1 { -t } else { t });
            }
        }
        out
    }

    /// Lie derivative via Cartan's formula.
    pub fn lie(&self, x: &VecField) -> Form {
        if self.degree == 0 {
            return Form::scalar(&self.chart, x.apply(&self.as_scalar()));
        }
        &self.d().interior(x) + &self.interior(x).d()
    }

    /// Pullback along a coordinate map whose target chart is this form's chart.
    pub fn pullback(&self, phi: &CoordMap) -> Result<Form, ExprError> {
        assert!(*phi.target() == self.chart, "map target differs from form chart");
        let src = phi.source().clone();
        let dphi: Vec<Form> = (0..self.chart.dim())
            .map(|j| Form::scalar(&src, phi.components()[j].clone()).d())
            .collect();
        let subst = phi.substitution();
        let mut out = Form::zero(&src, self.degree);
        for (idx, c) in &self.terms {
            let mut t = Form::scalar(&src, c.substitute(&subst)?);
            for &j in idx {
                t = t.wedge(&dphi[j]);
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Applies a coefficient-wise transformation.
    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Result<Expr, ExprError>) -> Result<Form, ExprError> {
        let mut out = Form::zero(&self.chart, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Replaces coordinates in every coefficient, keeping differentials.
    pub fn substitute(&self, map: &BTreeMap<crate::symexpr::Name, Expr>) -> Result<Form, ExprError> {
        self.map_coeffs(|c| c.substitute(map))
    }

    /// Top power `self ∧ ... ∧ self` (`k` factors).
    pub fn power(&self, k: usize) -> Form {
        let mut out = Form::scalar(&self.chart, Expr::one());
        for _ in 0..k {
            out = out.wedge(self);
        }
        out
    }

    /// Matrix `M[i][j]` with `i_{∂_i} self = Σ_j M[i][j] dx^j` for a 2-form.
    pub fn matrix(&self) -> Vec<Vec<Expr>> {
        assert_eq!(self.degree, 2);
        let n = self.chart.dim();
        let mut m = vec![vec![Expr::zero(); n]; n];
        for (idx, c) in &self.terms {
            let (i, j) = (idx[0], idx[1]);
            m[i][j] = c.clone();
            m[j][i] = -c;
        }
        m
    }

    /// Coefficient vector of a 1-form.
    pub fn components(&self) -> Vec<Expr> {
        assert_eq!(self.degree, 1);
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }

    pub fn from_components(chart: &Arc<Chart>, comps: &[Expr]) -> Form {
        let mut out = Form::zero(chart, 1);
        for (i, c) in comps.iter().enumerate() {
            out.add_term(vec![i], c.clone());
        }
        out
    }

    /// Parses a form, `^` acting as the wedge product between forms of positive degree.
    pub fn parse(chart: &Arc<Chart>, src: &str) -> Result<Form, ParseError> {
        let ast = parse_ast(src, &**chart, true)?;
        from_ast(chart, &ast)
    }
}

fn has_differential(a: &Ast) -> bool {
    match a {
        Ast::Differential(_) => true,
        Ast::Neg(x) | Ast::Call(_, x) => has_differential(x),
        Ast::Add(x, y) | Ast::Sub(x, y) | Ast::Mul(x, y) | Ast::Div(x, y) | Ast::Pow(x, y) => {
            has_differential(x) || has_differential(y)
        }
        _ => false,
    }
}

fn from_ast(chart: &Arc<Chart>, a: &Ast) -> Result<Form, ParseError> {
    if !has_differential(a) {
        return Ok(Form::scalar(chart, a.simplify()?.expr));
    }
    let same_degree = |x: &Form, y: &Form| {
        if x.degree != y.degree {
            Err(ParseError::Form(format!(
                "cannot add forms of degree {} and {}",
                x.degree, y.degree
            )))
        } else {
            Ok(())
        }
    };
    match a {
        Ast::Differential(n) => Ok(Form::d_of(chart, n)),
        Ast::Neg(x) => Ok(-from_ast(chart, x)?),
        Ast::Add(x, y) => {
            let (x, y) = (from_ast(chart, x)?, from_ast(chart, y)?);
            same_degree(&x, &y)?;
            Ok(&x + &y)
        }
        Ast::Sub(x, y) => {
            let (x, y) = (from_ast(chart, x)?, from_ast(chart, y)?);
            same_degree(&x, &y)?;
            Ok(&x - &y)
        }
        Ast::Mul(x, y) => {
            let (x, y) = (from_ast(chart, x)?, from_ast(chart, y)?);
            if x.degree > 0 && y.degree > 0 {
                return Err(ParseError::Form(
                    "`*` multiplies by a scalar; use `^` for the wedge product".to_string(),
                ));
            }
            Ok(x.wedge(&y))
        }
        Ast::Pow(x, y) => {
            let (x, y) = (from_ast(chart, x)?, from_ast(chart, y)?);
            Ok(x.wedge(&y))
        }
        Ast::Div(x, y) => {
            let x = from_ast(chart, x)?;
            let y = from_ast(chart, y)?;
            if y.degree > 0 {
                return Err(ParseError::Form("cannot divide by a form".to_string()));
            }
            let inv = y.as_scalar().recip().ok_or(ParseError::DivisionByZero)?;
            Ok(x.scale(&inv))
        }
        Ast::Call(..) => Err(ParseError::Form("function arguments must be scalars".to_string())),
        _ => unreachable!("leaf without differential"),
    }
}

impl Add<&Form> for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        self.check_chart(rhs);
        assert_eq!(self.degree, rhs.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }
}

impl Sub<&Form> for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        self + &(-rhs)
    }
}

impl Add for Form {
    type Output = Form;
    fn add(self, rhs: Form) -> Form {
        &self + &rhs
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(self, rhs: Form) -> Form {
        &self - &rhs
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        Form {
            chart: self.chart.clone(),
            degree: self.degree,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
        }
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        -&self
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        if self.degree == 0 {
            return write!(f, "{}", self.as_scalar());
        }
        for (n, (idx, c)) in self.terms.iter().enumerate() {
            let basis: Vec<String> = idx.iter().map(|&i| format!("d{}", self.chart.name(i))).collect();
            let basis = basis.join("^");
            let (neg, mag) = match c.view() {
                ExprView::Sum(_) | ExprView::Quotient(..) => (false, c.clone()),
                _ if c.to_string().starts_with('-') => (true, -c),
                _ => (false, c.clone()),
            };
            if n == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            if mag.is_one() {
                f.write_str(&basis)?;
            } else if matches!(mag.view(), ExprView::Sum(_) | ExprView::Quotient(..)) {
                write!(f, "({mag})*{basis}")?;
            } else {
                write!(f, "{mag}*{basis}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form[{}]({self})", self.degree)
    }
}
