use std::collections::HashMap;
use std::sync::Arc;

use super::{check, same_chart, Chart, ExteriorError, KForm, VectorField};
use crate::linalg::{rank, ExprMatrix};
use crate::symexpr::{Expr, Symbol, ZeroTest};

/// A change of coordinates `target = forward(source)` with explicit inverse.
///
/// Both charts share the time coordinate, which the transform leaves fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartTransform {
    source: Arc<Chart>,
    target: Arc<Chart>,
    forward: Vec<Expr>,
    inverse: Vec<Expr>,
}

impl ChartTransform {
    /// `forward[i]` expresses target coordinate `i` in source coordinates and
    /// `inverse[j]` expresses source coordinate `j` in target coordinates.
    pub fn new(source: &Arc<Chart>, target: &Arc<Chart>, forward: Vec<Expr>, inverse: Vec<Expr>) -> Result<Self, ExteriorError> {
        if source.time() != target.time() {
            return Err(ExteriorError::InvalidTransform("charts disagree on time".into()));
        }
        if forward.len() != target.n_coords() || inverse.len() != source.n_coords() {
            return Err(ExteriorError::InvalidTransform("map length does not match chart".into()));
        }
        for (e, chart) in forward.iter().map(|e| (e, source)).chain(inverse.iter().map(|e| (e, target))) {
            if let Some(s) = e.free_symbols().into_iter().find(|s| !chart.contains(s)) {
                return Err(ExteriorError::InvalidTransform(format!("{s} is not a coordinate of the domain chart")));
            }
        }
        Ok(ChartTransform { source: source.clone(), target: target.clone(), forward, inverse })
    }

    pub fn identity(chart: &Arc<Chart>) -> Self {
        let ids: Vec<Expr> = chart.coords().iter().map(Expr::var).collect();
        ChartTransform { source: chart.clone(), target: chart.clone(), forward: ids.clone(), inverse: ids }
    }

    pub fn source(&self) -> &Arc<Chart> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Chart> {
        &self.target
    }

    pub fn forward(&self) -> &[Expr] {
        &self.forward
    }

    pub fn inverse(&self) -> &[Expr] {
        &self.inverse
    }

    /// Substitution replacing target coordinates by source expressions.
    pub fn forward_map(&self) -> HashMap<Symbol, Expr> {
        super::bindings(self.target.coords(), &self.forward)
    }

    /// Substitution replacing source coordinates by target expressions.
    pub fn inverse_map(&self) -> HashMap<Symbol, Expr> {
        super::bindings(self.source.coords(), &self.inverse)
    }

    pub fn is_identity(&self) -> bool {
        same_chart(&self.source, &self.target)
            && self.forward.iter().zip(self.target.coords()).all(|(e, s)| e.as_var() == Some(s))
    }

    /// Expresses a function of target coordinates in source coordinates.
    pub fn pullback_function(&self, f: &Expr) -> Expr {
        f.substitute(&self.forward_map())
    }

    /// Expresses a function of source coordinates in target coordinates.
    pub fn pushforward_function(&self, f: &Expr) -> Expr {
        f.substitute(&self.inverse_map())
    }

    /// Pullback of a form living on the target chart.
    pub fn pullback(&self, a: &KForm) -> Result<KForm, ExteriorError> {
        check(a.chart(), &self.target)?;
        let map = self.forward_map();
        let src = &self.source;
        let mut differentials: HashMap<usize, KForm> = HashMap::new();
        let mut result = KForm::zero(src, a.degree());
        for (idx, c) in a.terms() {
            let mut factors = Vec::with_capacity(idx.len());
            for &i in idx {
                let df = differentials.entry(i).or_insert_with(|| {
                    if Some(i) == self.target.time_index() {
                        KForm::from_terms(src, 1, [(vec![src.time_index().unwrap()], Expr::one())])
                    } else {
                        KForm::exact(src, &self.forward[i])
                    }
                });
                factors.push(df.clone());
            }
            let term = super::wedge_all(src, &factors)?.scale(&c.substitute(&map));
            result = result.add(&term)?;
        }
        Ok(result)
    }

    /// Pushforward of a field on the source chart, expressed in target coordinates.
    pub fn pushforward(&self, v: &VectorField) -> Result<VectorField, ExteriorError> {
        check(v.chart(), &self.source)?;
        let inv = self.inverse_map();
        let mut comps = Vec::with_capacity(self.target.dim());
        for f in &self.forward {
            comps.push(v.apply(f).substitute(&inv));
        }
        if let Some(ti) = self.source.time_index() {
            comps.push(v.comp(ti).substitute(&inv));
        }
        Ok(VectorField::new(&self.target, comps))
    }

    /// Expresses a field on the target chart in source coordinates.
    pub fn pullback_field(&self, v: &VectorField) -> Result<VectorField, ExteriorError> {
        check(v.chart(), &self.target)?;
        let fwd = self.forward_map();
        let mut comps = Vec::with_capacity(self.source.dim());
        for g in &self.inverse {
            comps.push(v.apply(g).substitute(&fwd));
        }
        if let Some(ti) = self.target.time_index() {
            comps.push(v.comp(ti).substitute(&fwd));
        }
        Ok(VectorField::new(&self.source, comps))
    }

    /// The transform `self ∘ inner`, mapping `inner.source` to `self.target`.
    pub fn compose(&self, inner: &ChartTransform) -> Result<ChartTransform, ExteriorError> {
        check(&inner.target, &self.source)?;
        let inner_fwd = inner.forward_map();
        let outer_inv = self.inverse_map();
        let forward = self.forward.iter().map(|e| e.substitute(&inner_fwd)).collect();
        let inverse = inner.inverse.iter().map(|e| e.substitute(&outer_inv)).collect();
        Ok(ChartTransform { source: inner.source.clone(), target: self.target.clone(), forward, inverse })
    }

    /// The inverse transform.
    pub fn inverted(&self) -> ChartTransform {
        ChartTransform {
            source: self.target.clone(),
            target: self.source.clone(),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// Extends both charts by coordinates mapped to themselves.
    pub fn extend_identity(&self, extra: &[Symbol]) -> Result<ChartTransform, ExteriorError> {
        let source = self.source.with(extra)?;
        let target = self.target.with(extra)?;
        let mut forward = self.forward.clone();
        let mut inverse = self.inverse.clone();
        forward.extend(extra.iter().map(Expr::var));
        inverse.extend(extra.iter().map(Expr::var));
        Ok(ChartTransform { source, target, forward, inverse })
    }

    /// Renames source coordinates.
    pub fn rename_source(&self, renames: &HashMap<Symbol, Symbol>) -> Result<ChartTransform, ExteriorError> {
        let coords = self.source.coords().iter().map(|s| renames.get(s).cloned().unwrap_or_else(|| s.clone())).collect();
        let source = Chart::new(coords, self.source.time().cloned())?;
        let forward = self.forward.iter().map(|e| e.rename(renames)).collect();
        Ok(ChartTransform { source, target: self.target.clone(), forward, inverse: self.inverse.clone() })
    }

    /// Checks both compositions against the identity and the Jacobian rank.
    pub fn verify(&self, zt: &ZeroTest) -> Result<(), ExteriorError> {
        if self.source.n_coords() != self.target.n_coords() {
            return Err(ExteriorError::InvalidTransform("charts differ in dimension".into()));
        }
        let inv = self.inverse_map();
        for (e, s) in self.forward.iter().zip(self.target.coords()) {
            if !(e.substitute(&inv) - Expr::var(s)).is_zero(zt)? {
                return Err(ExteriorError::InvalidTransform(format!("forward after inverse differs from identity in {s}")));
            }
        }
        let fwd = self.forward_map();
        for (e, s) in self.inverse.iter().zip(self.source.coords()) {
            if !(e.substitute(&fwd) - Expr::var(s)).is_zero(zt)? {
                return Err(ExteriorError::InvalidTransform(format!("inverse after forward differs from identity in {s}")));
            }
        }
        let n = self.source.n_coords();
        let jac = ExprMatrix::from_fn(n, n, |i, j| self.forward[i].diff(&self.source.coords()[j]));
        match rank(&jac, zt) {
            Ok(r) if r == n => Ok(()),
            Ok(_) => Err(ExteriorError::InvalidTransform("Jacobian is singular".into())),
            Err(e) => Err(ExteriorError::InvalidTransform(e.to_string())),
        }
    }
}
