//! Exterior calculus over a coordinate chart that may include time.
//!
//! Coordinates of a chart are indexed `0..n` in declaration order, and the
//! time coordinate (when present) has index `n`. Forms store coefficients on
//! strictly increasing index tuples; vector fields store one component per
//! index.

mod flow;
mod transform;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::symexpr::{Expr, Symbol, ZeroTest, ZeroTestError};

pub use flow::{straighten_distribution, straighten_flow, straighten_flow_options, FlowNaming, Straightening};
pub use transform::ChartTransform;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExteriorError {
    #[error("objects live on different charts")]
    ChartMismatch,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("flow not solvable in closed form: {0}")]
    NotSolvable(String),
    #[error("invalid chart transform: {0}")]
    InvalidTransform(String),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

/// Ordered coordinates, optionally fibred over time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    coords: Vec<Symbol>,
    time: Option<Symbol>,
}

impl Chart {
    pub fn new(coords: Vec<Symbol>, time: Option<Symbol>) -> Result<Arc<Chart>, ExteriorError> {
        let mut seen = std::collections::HashSet::new();
        for s in coords.iter().chain(time.iter()) {
            if !seen.insert(s.clone()) {
                return Err(ExteriorError::InvalidChart(format!("duplicate coordinate {s}")));
            }
        }
        Ok(Arc::new(Chart { coords, time }))
    }

    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }

    pub fn time(&self) -> Option<&Symbol> {
        self.time.as_ref()
    }

    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    /// Number of indices, including time.
    pub fn dim(&self) -> usize {
        self.coords.len() + usize::from(self.time.is_some())
    }

    pub fn time_index(&self) -> Option<usize> {
        self.time.as_ref().map(|_| self.coords.len())
    }

    pub fn symbol(&self, i: usize) -> &Symbol {
        if i < self.coords.len() {
            &self.coords[i]
        } else {
            self.time.as_ref().expect("index out of range")
        }
    }

    pub fn index_of(&self, s: &Symbol) -> Option<usize> {
        self.coords.iter().position(|c| c == s).or_else(|| match &self.time {
            Some(t) if t == s => Some(self.coords.len()),
            _ => None,
        })
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.index_of(s).is_some()
    }

    /// Coordinates followed by time.
    pub fn symbols(&self) -> Vec<Symbol> {
        self.coords.iter().chain(self.time.iter()).cloned().collect()
    }

    /// A new chart with the given coordinates removed.
    pub fn without(&self, drop: &[Symbol]) -> Arc<Chart> {
        Arc::new(Chart {
            coords: self.coords.iter().filter(|c| !drop.contains(c)).cloned().collect(),
            time: self.time.clone(),
        })
    }

    /// A new chart with coordinates appended.
    pub fn with(&self, extra: &[Symbol]) -> Result<Arc<Chart>, ExteriorError> {
        let mut coords = self.coords.clone();
        coords.extend(extra.iter().cloned());
        Chart::new(coords, self.time.clone())
    }

    /// Name of the differential of index `i`, e.g. `dx1`.
    pub fn differential_name(&self, i: usize) -> String {
        format!("d{}", self.symbol(i))
    }
}

pub(crate) fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn check(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<(), ExteriorError> {
    if same_chart(a, b) {
        Ok(())
    } else {
        Err(ExteriorError::ChartMismatch)
    }
}

/// Sorts an index list, returning the permutation sign, or `None` on a repeat.
fn sort_indices(idx: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

/// A differential k-form.
#[derive(Clone, Debug, PartialEq)]
pub struct KForm {
    chart: Arc<Chart>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// One-forms are degree-1 [`KForm`]s.
pub type OneForm = KForm;

impl KForm {
    pub fn zero(chart: &Arc<Chart>, degree: usize) -> KForm {
        KForm { chart: chart.clone(), degree, terms: BTreeMap::new() }
    }

    /// Builds a form from (index tuple, coefficient) pairs; tuples are sorted
    /// with the permutation sign and repeated indices vanish.
    pub fn from_terms<I: IntoIterator<Item = (Vec<usize>, Expr)>>(chart: &Arc<Chart>, degree: usize, terms: I) -> KForm {
        let mut acc: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for (mut idx, c) in terms {
            assert_eq!(idx.len(), degree, "index tuple of wrong degree");
            assert!(idx.iter().all(|&i| i < chart.dim()), "index out of range");
            if c.is_structurally_zero() {
                continue;
            }
            if let Some(sign) = sort_indices(&mut idx) {
                acc.entry(idx).or_default().push(if sign < 0 { -c } else { c });
            }
        }
        let terms = acc
            .into_iter()
            .map(|(k, v)| (k, Expr::add_all(v)))
            .filter(|(_, c)| !c.is_structurally_zero())
            .collect();
        KForm { chart: chart.clone(), degree, terms }
    }

    /// The 0-form (function) `f`.
    pub fn function(chart: &Arc<Chart>, f: Expr) -> KForm {
        KForm::from_terms(chart, 0, [(vec![], f)])
    }

    /// The 1-form with one coefficient per chart index.
    pub fn one_form(chart: &Arc<Chart>, coeffs: &[Expr]) -> KForm {
        assert_eq!(coeffs.len(), chart.dim(), "coefficient count mismatch");
        KForm::from_terms(chart, 1, coeffs.iter().enumerate().map(|(i, c)| (vec![i], c.clone())))
    }

    /// The differential `ds` of a chart symbol.
    pub fn differential(chart: &Arc<Chart>, s: &Symbol) -> Result<KForm, ExteriorError> {
        let i = chart.index_of(s).ok_or_else(|| ExteriorError::InvalidChart(format!("{s} is not a coordinate")))?;
        Ok(KForm::from_terms(chart, 1, [(vec![i], Expr::one())]))
    }

    /// The exact 1-form `df`.
    pub fn exact(chart: &Arc<Chart>, f: &Expr) -> KForm {
        d(&KForm::function(chart, f.clone()))
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
        self.terms.get(idx).cloned().unwrap_or_else(Expr::zero)
    }

    /// Coefficient vector of a 1-form, one entry per chart index.
    pub fn coeffs(&self) -> Vec<Expr> {
        assert_eq!(self.degree, 1, "coefficient vector of a non-1-form");
        (0..self.chart.dim()).map(|i| self.coeff(&[i])).collect()
    }

    /// Coefficient of `ds` in a 1-form.
    pub fn coeff_of(&self, s: &Symbol) -> Expr {
        match self.chart.index_of(s) {
            Some(i) => self.coeff(&[i]),
            None => Expr::zero(),
        }
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All coefficients vanish under the zero test.
    pub fn is_zero(&self, zt: &ZeroTest) -> Result<bool, ExteriorError> {
        for c in self.terms.values() {
            if !c.is_zero(zt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        check(&self.chart, &other.chart)?;
        assert_eq!(self.degree, other.degree, "degree mismatch");
        let terms = self.terms.iter().chain(other.terms.iter()).map(|(k, v)| (k.clone(), v.clone()));
        Ok(KForm::from_terms(&self.chart, self.degree, terms))
    }

    pub fn sub(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, f: &Expr) -> KForm {
        KForm::from_terms(&self.chart, self.degree, self.terms.iter().map(|(k, v)| (k.clone(), v * f)))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> KForm {
        KForm::from_terms(&self.chart, self.degree, self.terms.iter().map(|(k, v)| (k.clone(), f(v))))
    }

    /// Moves the form onto another chart containing all symbols it uses.
    pub fn reembed(&self, chart: &Arc<Chart>) -> Result<KForm, ExteriorError> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for (idx, c) in &self.terms {
            let mut new_idx = Vec::with_capacity(idx.len());
            for &i in idx {
                let s = self.chart.symbol(i);
                let j = chart.index_of(s).ok_or_else(|| ExteriorError::InvalidChart(format!("{s} missing")))?;
                new_idx.push(j);
            }
            terms.push((new_idx, c.clone()));
        }
        Ok(KForm::from_terms(chart, self.degree, terms))
    }

    /// Value of a 1-form on a vector field.
    pub fn pair(&self, v: &VectorField) -> Result<Expr, ExteriorError> {
        check(&self.chart, &v.chart)?;
        assert_eq!(self.degree, 1, "pairing of a non-1-form");
        Ok(Expr::add_all(self.terms.iter().map(|(k, c)| c * &v.comps[k[0]])))
    }

    /// Value of a 2-form on a pair of vector fields.
    pub fn pair2(&self, v: &VectorField, w: &VectorField) -> Result<Expr, ExteriorError> {
        check(&self.chart, &v.chart)?;
        check(&self.chart, &w.chart)?;
        assert_eq!(self.degree, 2, "pairing of a non-2-form");
        let mut terms = Vec::new();
        for (k, c) in &self.terms {
            let (i, j) = (k[0], k[1]);
            let m = &v.comps[i] * &w.comps[j] - &v.comps[j] * &w.comps[i];
            if !m.is_structurally_zero() {
                terms.push(c * m);
            }
        }
        Ok(Expr::add_all(terms))
    }
}

impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (idx, c) in &self.terms {
            let basis: Vec<String> = idx.iter().map(|&i| self.chart.differential_name(i)).collect();
            let basis = basis.join("^");
            let (neg, mag) = if c.has_negative_sign() { (true, -c) } else { (false, c.clone()) };
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            let coeff = if mag.is_one() {
                String::new()
            } else if matches!(mag.node(), crate::symexpr::Node::Add(_)) {
                format!("({mag})")
            } else {
                format!("{mag}")
            };
            match (coeff.is_empty(), basis.is_empty()) {
                (true, true) => write!(f, "{sep}1")?,
                (true, false) => write!(f, "{sep}{basis}")?,
                (false, true) => write!(f, "{sep}{coeff}")?,
                (false, false) => write!(f, "{sep}{coeff}*{basis}")?,
            }
        }
        Ok(())
    }
}

/// Wedge product.
pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm, ExteriorError> {
    check(&a.chart, &b.chart)?;
    let mut terms = Vec::new();
    for (ia, ca) in &a.terms {
        for (ib, cb) in &b.terms {
            if ia.iter().any(|i| ib.contains(i)) {
                continue;
            }
            let mut idx = ia.clone();
            idx.extend(ib.iter().copied());
            terms.push((idx, ca * cb));
        }
    }
    Ok(KForm::from_terms(&a.chart, a.degree + b.degree, terms))
}

/// Wedge of a list of forms; the empty product is the constant 0-form 1.
pub fn wedge_all(chart: &Arc<Chart>, forms: &[KForm]) -> Result<KForm, ExteriorError> {
    let mut acc = KForm::function(chart, Expr::one());
    for f in forms {
        acc = wedge(&acc, f)?;
    }
    Ok(acc)
}

/// Exterior derivative.
pub fn d(a: &KForm) -> KForm {
    let chart = &a.chart;
    let mut terms = Vec::new();
    for (idx, c) in &a.terms {
        for j in 0..chart.dim() {
            if idx.contains(&j) {
                continue;
            }
            let dc = c.diff(chart.symbol(j));
            if dc.is_structurally_zero() {
                continue;
            }
            let mut new_idx = vec![j];
            new_idx.extend(idx.iter().copied());
            terms.push((new_idx, dc));
        }
    }
    KForm::from_terms(chart, a.degree + 1, terms)
}

/// Interior product `v ⌟ a`.
pub fn contract(v: &VectorField, a: &KForm) -> Result<KForm, ExteriorError> {
    check(&v.chart, &a.chart)?;
    if a.degree == 0 {
        return Ok(KForm::zero(&a.chart, 0));
    }
    let mut terms = Vec::new();
    for (idx, c) in &a.terms {
        for (pos, &i) in idx.iter().enumerate() {
            let vi = &v.comps[i];
            if vi.is_structurally_zero() {
                continue;
            }
            let mut rest = idx.clone();
            rest.remove(pos);
            let t = c * vi;
            terms.push((rest, if pos % 2 == 0 { t } else { -t }));
        }
    }
    Ok(KForm::from_terms(&a.chart, a.degree - 1, terms))
}

/// A vector field with one component per chart index.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, comps: Vec<Expr>) -> VectorField {
        assert_eq!(comps.len(), chart.dim(), "component count mismatch");
        VectorField { chart: chart.clone(), comps }
    }

    pub fn zero(chart: &Arc<Chart>) -> VectorField {
        VectorField::new(chart, vec![Expr::zero(); chart.dim()])
    }

    /// The coordinate field `∂/∂s`.
    pub fn coordinate(chart: &Arc<Chart>, s: &Symbol) -> Result<VectorField, ExteriorError> {
        let i = chart.index_of(s).ok_or_else(|| ExteriorError::InvalidChart(format!("{s} is not a coordinate")))?;
        let mut comps = vec![Expr::zero(); chart.dim()];
        comps[i] = Expr::one();
        Ok(VectorField::new(chart, comps))
    }

    /// Builds a field from (symbol, component) pairs.
    pub fn from_components(chart: &Arc<Chart>, comps: &[(Symbol, Expr)]) -> Result<VectorField, ExteriorError> {
        let mut v = vec![Expr::zero(); chart.dim()];
        for (s, e) in comps {
            let i = chart.index_of(s).ok_or_else(|| ExteriorError::InvalidChart(format!("{s} is not a coordinate")))?;
            v[i] = &v[i] + e;
        }
        Ok(VectorField::new(chart, v))
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn comp_of(&self, s: &Symbol) -> Expr {
        self.chart.index_of(s).map(|i| self.comps[i].clone()).unwrap_or_else(Expr::zero)
    }

    /// Directional derivative `v(f)`.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_structurally_zero() {
                continue;
            }
            let df = f.diff(self.chart.symbol(i));
            if !df.is_structurally_zero() {
                terms.push(c * &df);
            }
        }
        Expr::add_all(terms)
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, ExteriorError> {
        check(&self.chart, &other.chart)?;
        Ok(VectorField::new(&self.chart, self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, f: &Expr) -> VectorField {
        VectorField::new(&self.chart, self.comps.iter().map(|c| c * f).collect())
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.comps.iter().all(Expr::is_structurally_zero)
    }

    pub fn is_zero(&self, zt: &ZeroTest) -> Result<bool, ExteriorError> {
        for c in &self.comps {
            if !c.is_zero(zt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Total node count of the components.
    pub fn size(&self) -> usize {
        self.comps.iter().map(Expr::size).sum()
    }

    /// Indices of structurally nonzero components.
    pub fn support(&self) -> Vec<usize> {
        (0..self.comps.len()).filter(|&i| !self.comps[i].is_structurally_zero()).collect()
    }

    pub fn reembed(&self, chart: &Arc<Chart>) -> Result<VectorField, ExteriorError> {
        let mut comps = vec![Expr::zero(); chart.dim()];
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_structurally_zero() {
                continue;
            }
            let s = self.chart.symbol(i);
            let j = chart.index_of(s).ok_or_else(|| ExteriorError::InvalidChart(format!("{s} missing")))?;
            comps[j] = c.clone();
        }
        Ok(VectorField::new(chart, comps))
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.comps.iter().enumerate() {
            if c.is_structurally_zero() {
                continue;
            }
            let basis = format!("d_{}", self.chart.symbol(i));
            let (neg, mag) = if c.has_negative_sign() { (true, -c) } else { (false, c.clone()) };
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            if mag.is_one() {
                write!(f, "{sep}{basis}")?;
            } else if matches!(mag.node(), crate::symexpr::Node::Add(_)) {
                write!(f, "{sep}({mag})*{basis}")?;
            } else {
                write!(f, "{sep}{mag}*{basis}")?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Lie bracket `[v, w]`.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> Result<VectorField, ExteriorError> {
    check(&v.chart, &w.chart)?;
    let comps = (0..v.chart.dim()).map(|i| v.apply(&w.comps[i]) - w.apply(&v.comps[i])).collect();
    Ok(VectorField::new(&v.chart, comps))
}

/// Symbol-to-expression map for substitutions.
pub fn bindings(symbols: &[Symbol], values: &[Expr]) -> HashMap<Symbol, Expr> {
    symbols.iter().cloned().zip(values.iter().cloned()).collect()
}

#[cfg(test)]
mod tests;
