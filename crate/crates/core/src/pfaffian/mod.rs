//! Pfaffian systems and distributions with generic-rank linear algebra.
//!
//! A [`PfaffianSystem`] is a codistribution spanned by generically independent
//! 1-forms on a chart that includes time; a [`Distribution`] is spanned by
//! generically independent vector fields. Membership, annihilators, derived
//! systems and Cauchy characteristics are all reduced to ranks and kernels of
//! coefficient matrices.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::exterior::{contract, d, lie_bracket, same_chart, wedge, wedge_all, Chart, ChartTransform, ExteriorError, KForm, OneForm, VectorField};
use crate::linalg::{clean_vector, in_span, independent_rows, kernel, rank, rref, span_contains, ExprMatrix, LinalgError};
use crate::symexpr::{Expr, Symbol, ZeroTest, ZeroTestError};
use crate::sysdsl::ControlSystem;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PfaffianError {
    #[error("rank decision failed: {0}")]
    RankDecisionFailed(String),
    #[error("system is not reducible: {0}")]
    NotReducible(String),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

impl From<LinalgError> for PfaffianError {
    fn from(e: LinalgError) -> Self {
        let LinalgError::RankDecisionFailed(m) = e;
        PfaffianError::RankDecisionFailed(m)
    }
}

impl From<ZeroTestError> for PfaffianError {
    fn from(e: ZeroTestError) -> Self {
        PfaffianError::RankDecisionFailed(e.to_string())
    }
}

type Result<T> = std::result::Result<T, PfaffianError>;

fn check(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if same_chart(a, b) {
        Ok(())
    } else {
        Err(ExteriorError::ChartMismatch.into())
    }
}

/// Matrix with one column per form and one row per index tuple in use.
fn column_matrix(forms: &[KForm]) -> ExprMatrix {
    let mut rows: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    for f in forms {
        for k in f.terms().keys() {
            let next = rows.len();
            rows.entry(k).or_insert(next);
        }
    }
    let mut m = ExprMatrix::zeros(rows.len(), forms.len());
    for (j, f) in forms.iter().enumerate() {
        for (k, c) in f.terms() {
            m.set(rows[k], j, c.clone());
        }
    }
    m
}

fn cleaned_form(chart: &Arc<Chart>, coeffs: Vec<Expr>, zt: &ZeroTest) -> OneForm {
    KForm::one_form(chart, &clean_vector(coeffs, zt))
}

fn cleaned_field(chart: &Arc<Chart>, comps: Vec<Expr>, zt: &ZeroTest) -> VectorField {
    VectorField::new(chart, clean_vector(comps, zt))
}

/// Codistribution spanned by generically independent 1-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct PfaffianSystem {
    chart: Arc<Chart>,
    generators: Vec<OneForm>,
}

impl PfaffianSystem {
    /// Keeps a maximal independent subset of `forms`, in order.
    pub fn new(chart: &Arc<Chart>, forms: Vec<OneForm>, zt: &ZeroTest) -> Result<Self> {
        for f in &forms {
            check(f.chart(), chart)?;
            assert_eq!(f.degree(), 1, "Pfaffian generators are 1-forms");
        }
        let rows: Vec<Vec<Expr>> = forms.iter().map(KForm::coeffs).collect();
        let keep = independent_rows(&rows, chart.dim(), zt)?;
        let generators = keep.into_iter().map(|i| forms[i].clone()).collect();
        Ok(PfaffianSystem { chart: chart.clone(), generators })
    }

    pub fn empty(chart: &Arc<Chart>) -> Self {
        PfaffianSystem { chart: chart.clone(), generators: Vec::new() }
    }

    /// The forms `dx^α - f^α dt` on the chart `(x, u, t)`.
    pub fn from_control_system(cs: &ControlSystem) -> Self {
        let chart = Chart::new(cs.coordinates(), Some(cs.time.clone())).expect("validated system has distinct symbols");
        let t = chart.time_index().unwrap();
        let generators = cs
            .dynamics
            .iter()
            .enumerate()
            .map(|(a, f)| KForm::from_terms(&chart, 1, [(vec![a], Expr::one()), (vec![t], -f)]))
            .collect();
        PfaffianSystem { chart, generators }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn generators(&self) -> &[OneForm] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    fn rows(&self) -> Vec<Vec<Expr>> {
        self.generators.iter().map(KForm::coeffs).collect()
    }

    /// The top form `ω¹ ∧ … ∧ ω^r`.
    pub fn volume(&self) -> Result<KForm> {
        Ok(wedge_all(&self.chart, &self.generators)?)
    }

    /// Generic membership of a 1-form.
    pub fn contains_form(&self, w: &OneForm, zt: &ZeroTest) -> Result<bool> {
        check(w.chart(), &self.chart)?;
        Ok(in_span(&self.rows(), &w.coeffs(), zt)?)
    }

    /// `other ⊆ self`.
    pub fn contains_system(&self, other: &PfaffianSystem, zt: &ZeroTest) -> Result<bool> {
        check(other.chart(), &self.chart)?;
        Ok(span_contains(&self.rows(), &other.rows(), self.chart.dim(), zt)?)
    }

    /// Equality of codistributions by mutual membership.
    pub fn same_span(&self, other: &PfaffianSystem, zt: &ZeroTest) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.contains_system(other, zt)?)
    }

    /// `k`-form vanishes modulo the system: `a ∧ ω¹ ∧ … ∧ ω^r = 0`.
    pub fn annihilates_mod(&self, a: &KForm, zt: &ZeroTest) -> Result<bool> {
        Ok(wedge(a, &self.volume()?)?.is_zero(zt)?)
    }

    /// The system extended by further forms, dropping dependent ones.
    pub fn extended(&self, forms: &[OneForm], zt: &ZeroTest) -> Result<Self> {
        let mut all = self.generators.clone();
        all.extend(forms.iter().cloned());
        PfaffianSystem::new(&self.chart, all, zt)
    }

    /// The system with generators normalized up to function factors.
    pub fn cleaned(&self, zt: &ZeroTest) -> Self {
        let generators = self.generators.iter().map(|g| cleaned_form(&self.chart, g.coeffs(), zt)).collect();
        PfaffianSystem { chart: self.chart.clone(), generators }
    }

    /// Annihilator `P^⊥`.
    pub fn annihilator(&self, zt: &ZeroTest) -> Result<Distribution> {
        let m = ExprMatrix::from_rows(&self.rows(), self.chart.dim());
        let generators = kernel(&m, zt)?.into_iter().map(|v| VectorField::new(&self.chart, v)).collect();
        Ok(Distribution { chart: self.chart.clone(), generators })
    }

    /// Vertical annihilator: the annihilator of the system together with `dt`.
    pub fn vertical_annihilator(&self, zt: &ZeroTest) -> Result<Distribution> {
        let t = self.chart.time_index().ok_or_else(|| ExteriorError::InvalidChart("chart has no time".into()))?;
        let mut rows = self.rows();
        let mut dt = vec![Expr::zero(); self.chart.dim()];
        dt[t] = Expr::one();
        rows.push(dt);
        let m = ExprMatrix::from_rows(&rows, self.chart.dim());
        let generators = kernel(&m, zt)?.into_iter().map(|v| VectorField::new(&self.chart, v)).collect();
        Ok(Distribution { chart: self.chart.clone(), generators })
    }

    /// First derived system: forms of the system whose exterior derivative
    /// vanishes modulo the system.
    pub fn derived_system(&self, zt: &ZeroTest) -> Result<PfaffianSystem> {
        if self.is_empty() {
            return Ok(self.clone());
        }
        let vol = self.volume()?;
        let mut columns = Vec::with_capacity(self.dim());
        for g in &self.generators {
            columns.push(wedge(&d(g), &vol)?);
        }
        let m = column_matrix(&columns);
        let solutions = kernel(&m, zt)?;
        let mut forms = Vec::with_capacity(solutions.len());
        for a in solutions {
            let mut coeffs = vec![Expr::zero(); self.chart.dim()];
            for (aj, g) in a.iter().zip(&self.generators) {
                if aj.is_structurally_zero() {
                    continue;
                }
                for (c, gc) in coeffs.iter_mut().zip(g.coeffs()) {
                    *c = &*c + aj * gc;
                }
            }
            forms.push(cleaned_form(&self.chart, coeffs, zt));
        }
        PfaffianSystem::new(&self.chart, forms, zt)
    }

    /// Derived flag `P ⊃ P^(1) ⊃ …`, ending at the first repeated dimension.
    pub fn derived_flag(&self, zt: &ZeroTest) -> Result<Vec<PfaffianSystem>> {
        let mut flag = vec![self.clone()];
        loop {
            let last = flag.last().unwrap();
            let next = last.derived_system(zt)?;
            if next.dim() == last.dim() {
                return Ok(flag);
            }
            let done = next.is_empty();
            flag.push(next);
            if done {
                return Ok(flag);
            }
        }
    }

    /// Fields `v` of the given distribution with `v⌟dω ≡ 0` modulo the system
    /// for every generator `ω`; the distribution must annihilate the system.
    pub fn characteristics_within(&self, within: &Distribution, zt: &ZeroTest) -> Result<Distribution> {
        check(within.chart(), &self.chart)?;
        if within.dim() == 0 || self.is_empty() {
            return Ok(within.clone());
        }
        let vol = self.volume()?;
        let dgen: Vec<KForm> = self.generators.iter().map(d).collect();
        let mut blocks: Vec<ExprMatrix> = Vec::new();
        for dw in &dgen {
            let mut cols = Vec::with_capacity(within.dim());
            for e in &within.generators {
                cols.push(wedge(&contract(e, dw)?, &vol)?);
            }
            blocks.push(column_matrix(&cols));
        }
        let mut m = ExprMatrix::zeros(0, within.dim());
        for b in &blocks {
            for i in 0..b.nrows() {
                m.push_row(b.row(i));
            }
        }
        if m.nrows() == 0 {
            return Ok(within.clone());
        }
        let solutions = kernel(&m, zt)?;
        let mut generators = Vec::with_capacity(solutions.len());
        for b in solutions {
            let mut comps = vec![Expr::zero(); self.chart.dim()];
            for (bk, e) in b.iter().zip(&within.generators) {
                if bk.is_structurally_zero() {
                    continue;
                }
                for (c, ec) in comps.iter_mut().zip(e.comps()) {
                    *c = &*c + bk * ec;
                }
            }
            generators.push(cleaned_field(&self.chart, comps, zt));
        }
        Distribution::new(&self.chart, generators, zt)
    }

    /// Cauchy characteristics: `v⌟P = 0` and `v⌟dP ⊆ P`.
    pub fn cauchy_characteristics(&self, zt: &ZeroTest) -> Result<Distribution> {
        let ann = self.annihilator(zt)?;
        self.characteristics_within(&ann, zt)
    }

    /// Whether `v` is a Cauchy characteristic of the system.
    pub fn is_cauchy_characteristic(&self, v: &VectorField, zt: &ZeroTest) -> Result<bool> {
        check(v.chart(), &self.chart)?;
        for g in &self.generators {
            if !g.pair(v)?.is_zero(zt)? {
                return Ok(false);
            }
        }
        if self.is_empty() {
            return Ok(true);
        }
        let vol = self.volume()?;
        for g in &self.generators {
            if !wedge(&contract(v, &d(g))?, &vol)?.is_zero(zt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Frobenius test for the system augmented by `dt`.
    pub fn is_integrable_with_dt(&self, zt: &ZeroTest) -> Result<bool> {
        if self.is_empty() {
            return Ok(true);
        }
        let dt = KForm::differential(&self.chart, self.chart.time().expect("chart with time"))?;
        let top = wedge(&self.volume()?, &dt)?;
        for g in &self.generators {
            if !wedge(&d(g), &top)?.is_zero(zt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Pulls the system back along `phi` and rewrites it on the chart without
    /// `drop`, which requires a basis free of the dropped coordinates.
    pub fn restrict_to_subchart(&self, phi: &ChartTransform, drop: &[Symbol], zt: &ZeroTest) -> Result<PfaffianSystem> {
        check(phi.target(), &self.chart)?;
        let src = phi.source().clone();
        let mut rows = Vec::with_capacity(self.dim());
        for g in &self.generators {
            rows.push(phi.pullback(g)?.coeffs());
        }
        let reduced = src.without(drop);
        if rows.is_empty() {
            return Ok(PfaffianSystem::empty(&reduced));
        }
        let m = ExprMatrix::from_rows(&rows, src.dim());
        let (pivots, basis) = rref(&m, zt)?;
        let drop_idx: Vec<usize> = drop
            .iter()
            .map(|s| src.index_of(s).ok_or_else(|| PfaffianError::NotReducible(format!("{s} is not a coordinate"))))
            .collect::<Result<_>>()?;
        if pivots.iter().any(|p| drop_idx.contains(p)) {
            return Err(PfaffianError::NotReducible("a basis needs the differential of a dropped coordinate".into()));
        }
        let mut forms = Vec::with_capacity(basis.len());
        for row in basis {
            let mut coeffs = vec![Expr::zero(); reduced.dim()];
            for (j, e) in row.into_iter().enumerate() {
                if e.is_structurally_zero() {
                    continue;
                }
                if drop_idx.contains(&j) {
                    if e.is_zero(zt)? {
                        continue;
                    }
                    return Err(PfaffianError::NotReducible(format!("basis contains d{}", src.symbol(j))));
                }
                let free = eliminate(&e, drop, zt)?;
                coeffs[reduced.index_of(src.symbol(j)).unwrap()] = free;
            }
            forms.push(cleaned_form(&reduced, coeffs, zt));
        }
        PfaffianSystem::new(&reduced, forms, zt)
    }

    /// Pullback of every generator, on the source chart of `phi`.
    pub fn pullback(&self, phi: &ChartTransform, zt: &ZeroTest) -> Result<PfaffianSystem> {
        let mut forms = Vec::with_capacity(self.dim());
        for g in &self.generators {
            forms.push(phi.pullback(g)?);
        }
        PfaffianSystem::new(phi.source(), forms, zt)
    }

    /// Moves the system onto a chart that contains every symbol it uses.
    pub fn reembed(&self, chart: &Arc<Chart>) -> Result<PfaffianSystem> {
        let generators = self.generators.iter().map(|g| g.reembed(chart)).collect::<std::result::Result<_, _>>()?;
        Ok(PfaffianSystem { chart: chart.clone(), generators })
    }
}

/// Rewrites `e` without the symbols in `drop`, given that it does not depend
/// on them: they are set to the first constant in 0, 1, 2 where `e` is defined.
fn eliminate(e: &Expr, drop: &[Symbol], zt: &ZeroTest) -> Result<Expr> {
    if !e.contains_any(drop) {
        return Ok(e.clone());
    }
    for d in drop {
        if !e.contains(d) {
            continue;
        }
        if !e.diff(d).is_zero(zt)? {
            return Err(PfaffianError::NotReducible(format!("coefficient {e} depends on {d}")));
        }
    }
    for value in [0, 1, 2] {
        let map = drop.iter().map(|s| (s.clone(), Expr::int(value))).collect();
        let candidate = e.substitute(&map);
        if let Ok(true) = (e - &candidate).is_zero(zt) {
            return Ok(candidate);
        }
    }
    Err(PfaffianError::NotReducible(format!("cannot eliminate the dropped coordinates from {e}")))
}

impl fmt::Display for PfaffianSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "{{{}}}", gens.join(", "))
    }
}

/// Distribution spanned by generically independent vector fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    chart: Arc<Chart>,
    generators: Vec<VectorField>,
}

impl Distribution {
    /// Keeps a maximal independent subset of `fields`, in order.
    pub fn new(chart: &Arc<Chart>, fields: Vec<VectorField>, zt: &ZeroTest) -> Result<Self> {
        for f in &fields {
            check(f.chart(), chart)?;
        }
        let rows: Vec<Vec<Expr>> = fields.iter().map(|f| f.comps().to_vec()).collect();
        let keep = independent_rows(&rows, chart.dim(), zt)?;
        let generators = keep.into_iter().map(|i| fields[i].clone()).collect();
        Ok(Distribution { chart: chart.clone(), generators })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.generators
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    fn rows(&self) -> Vec<Vec<Expr>> {
        self.generators.iter().map(|g| g.comps().to_vec()).collect()
    }

    pub fn contains(&self, v: &VectorField, zt: &ZeroTest) -> Result<bool> {
        check(v.chart(), &self.chart)?;
        Ok(in_span(&self.rows(), v.comps(), zt)?)
    }

    /// `other ⊆ self`.
    pub fn contains_distribution(&self, other: &Distribution, zt: &ZeroTest) -> Result<bool> {
        check(other.chart(), &self.chart)?;
        Ok(span_contains(&self.rows(), &other.rows(), self.chart.dim(), zt)?)
    }

    pub fn same_span(&self, other: &Distribution, zt: &ZeroTest) -> Result<bool> {
        Ok(self.dim() == other.dim() && self.contains_distribution(other, zt)?)
    }

    /// Closed under Lie brackets.
    pub fn is_involutive(&self, zt: &ZeroTest) -> Result<bool> {
        let rows = self.rows();
        for i in 0..self.generators.len() {
            for j in i + 1..self.generators.len() {
                let b = lie_bracket(&self.generators[i], &self.generators[j])?;
                if !in_span(&rows, b.comps(), zt)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Generic rank of the span, for distributions built without filtering.
    pub fn rank(&self, zt: &ZeroTest) -> Result<usize> {
        Ok(rank(&ExprMatrix::from_rows(&self.rows(), self.chart.dim()), zt)?)
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.generators.iter().map(|g| g.to_string()).collect();
        write!(f, "{{{}}}", gens.join(", "))
    }
}
