//! Search for a sequence of splittings `S_k = S_{k+1} ⊕ S_{k+1,c}`.
//!
//! At each level a vertical distribution `F ⊆ 𝒱(S_k)^⊥` is chosen together
//! with a subsystem `S_{k+1}` of codimension `dim F` such that `F` consists of
//! Cauchy characteristics of `S_{k+1}` and the complement is parameterizable
//! with respect to the flow parameters of `F`. Straightening `F` yields a chart
//! in which `S_{k+1}` no longer involves the flow parameters, and the search
//! continues on the reduced chart until the system is empty.
//!
//! Candidates are tried in a fixed order: subsets of `𝒱(S_k)^⊥` paired with
//! the derived system first, then single fields `e_i` and combinations
//! `e_i + m e_j` with `m` taken from a pool of signed rational monomials.

mod ansatz;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::exterior::{
    contract, d, straighten_distribution, straighten_flow_options, wedge, Chart, ChartTransform, ExteriorError, FlowNaming,
    KForm, OneForm, VectorField,
};
use crate::linalg::{clean_vector, kernel};
use crate::pfaffian::{Distribution, PfaffianError, PfaffianSystem};
use crate::symexpr::{Expr, Symbol, ZeroTest};
use crate::sysdsl::ControlSystem;

pub use ansatz::monomial_pool;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DecomposeError {
    #[error("no splitting found within the ansatz budget")]
    AnsatzExhausted,
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

impl From<crate::symexpr::ZeroTestError> for DecomposeError {
    fn from(e: crate::symexpr::ZeroTestError) -> Self {
        DecomposeError::Pfaffian(e.into())
    }
}

impl From<crate::linalg::LinalgError> for DecomposeError {
    fn from(e: crate::linalg::LinalgError) -> Self {
        DecomposeError::Pfaffian(e.into())
    }
}

type Result<T> = std::result::Result<T, DecomposeError>;

/// Budgets and ansatz class of the search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnsatzConfig {
    /// Maximal total degree of the monomials `m` in `e_i + m e_j`.
    pub max_degree: u32,
    /// Maximal number of splittings in a sequence.
    pub max_depth: usize,
    /// Maximal number of splittings explored per level.
    pub branch_width: usize,
    #[serde(skip)]
    pub zero_test: ZeroTest,
    /// Require `S_k^(1) ⊆ S_{k+1}` for ansatz candidates.
    pub assume_derived: bool,
}

impl Default for AnsatzConfig {
    fn default() -> Self {
        AnsatzConfig { max_degree: 2, max_depth: 8, branch_width: 8, zero_test: ZeroTest::default(), assume_derived: true }
    }
}

/// How a splitting's distribution was found.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSource {
    /// `F` spanned by vertical fields, `S_{k+1}` the derived system.
    DerivedFlag,
    /// `F` spanned by one field from the coefficient ansatz.
    Ansatz,
}

/// One reduction step `S_k = S_{k+1} ⊕ S_{k+1,c}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Splitting {
    pub level: usize,
    pub source: SplitSource,
    /// `S_k`, on the level chart.
    pub system: PfaffianSystem,
    pub f: Distribution,
    /// `S_{k+1}`, on the level chart.
    pub s_next: PfaffianSystem,
    /// `S_{k+1,c}`, on the level chart.
    pub s_comp: PfaffianSystem,
    /// Straightening chart: source has the flow parameters, target is the level chart.
    pub transform: ChartTransform,
    /// Flow parameters, the non-derivative variables of this level.
    pub nondrv: Vec<Symbol>,
    /// `S_{k+1}` on the reduced chart without the flow parameters.
    pub reduced: PfaffianSystem,
    /// Whether `{S_k^(1), dt}` is integrable at this level.
    pub shortcut: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Triangularized,
    Inconclusive,
    NotReducible,
}

/// Outcome of an explored branch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BranchOutcome {
    /// The branch completed a decomposition.
    Triangularized,
    /// The splitting is valid but no continuation reduces the next system.
    DeadEnd,
    /// Straightening failed; the fields need a user-supplied chart.
    Suspended { reason: String },
    /// The depth budget ran out below this splitting.
    DepthLimit,
}

/// One explored splitting of the search tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchRecord {
    /// Dotted path of candidate indices from the root.
    pub id: String,
    pub level: usize,
    pub source: SplitSource,
    /// Generators of `F`, rendered on the level chart.
    pub fields: Vec<String>,
    /// Generators of `S_{k+1}`, rendered on the level chart.
    pub s_next: Vec<String>,
    pub outcome: BranchOutcome,
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub status: Status,
    pub initial: PfaffianSystem,
    pub sequence: Vec<Splitting>,
    /// Maps the final coordinates (reduced chart plus all flow parameters) to `(x, u)`.
    pub transform: ChartTransform,
    pub branch_log: Vec<BranchRecord>,
}

/// Candidate distribution at one level.
#[derive(Clone, Debug)]
enum Candidate {
    Derived(Vec<usize>),
    Field(VectorField),
}

/// Necessary-condition solutions for a single ansatz field `v`: the forms
/// `a_j ω^j` with `(v⌟d(a_j ω^j)) ∧ ω¹ ∧ … ∧ ω^r = 0`.
pub fn necessary_condition_solutions(s: &PfaffianSystem, v: &VectorField, zt: &ZeroTest) -> Result<Vec<OneForm>> {
    let vol = s.volume()?;
    let mut columns = Vec::with_capacity(s.dim());
    for g in s.generators() {
        columns.push(wedge(&contract(v, &d(g))?, &vol)?);
    }
    let m = column_matrix(&columns);
    let chart = s.chart();
    let mut forms = Vec::new();
    for a in kernel(&m, zt)? {
        let mut coeffs = vec![Expr::zero(); chart.dim()];
        for (aj, g) in a.iter().zip(s.generators()) {
            if aj.is_structurally_zero() {
                continue;
            }
            for (c, gc) in coeffs.iter_mut().zip(g.coeffs()) {
                *c = &*c + aj * gc;
            }
        }
        forms.push(KForm::one_form(chart, &clean_vector(coeffs, zt)));
    }
    Ok(forms)
}

fn column_matrix(forms: &[KForm]) -> crate::linalg::ExprMatrix {
    let mut rows: BTreeMap<&Vec<usize>, usize> = BTreeMap::new();
    for f in forms {
        for k in f.terms().keys() {
            let next = rows.len();
            rows.entry(k).or_insert(next);
        }
    }
    let mut m = crate::linalg::ExprMatrix::zeros(rows.len(), forms.len());
    for (j, f) in forms.iter().enumerate() {
        for (k, c) in f.terms() {
            m.set(rows[k], j, c.clone());
        }
    }
    m
}

/// Sub-systems of `s` of codimension `codim` among the solutions of the
/// necessary condition, containing `base`.
fn refine_to_cauchy(
    s: &PfaffianSystem,
    f: &Distribution,
    solutions: &[OneForm],
    base: &PfaffianSystem,
    zt: &ZeroTest,
) -> Result<Option<PfaffianSystem>> {
    let target = s.dim() - f.dim();
    let span = PfaffianSystem::new(s.chart(), solutions.to_vec(), zt)?;
    if span.dim() < target || !span.contains_system(base, zt)? {
        return Ok(None);
    }
    let mut options: Vec<PfaffianSystem> = Vec::new();
    if span.dim() == target {
        options.push(span);
    } else {
        let extra: Vec<OneForm> =
            span.generators().iter().filter(|g| !base.contains_form(g, zt).unwrap_or(true)).cloned().collect();
        let need = target.saturating_sub(base.dim());
        for subset in subsets(extra.len(), need) {
            let forms: Vec<OneForm> = subset.iter().map(|&i| extra[i].clone()).collect();
            let cand = base.extended(&forms, zt)?;
            if cand.dim() == target {
                options.push(cand);
            }
        }
    }
    for cand in options {
        if all_characteristic(&cand, f, zt)? {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}

fn all_characteristic(s: &PfaffianSystem, f: &Distribution, zt: &ZeroTest) -> Result<bool> {
    for v in f.generators() {
        if !s.is_cauchy_characteristic(v, zt)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index subsets of size `k` of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Implicit equations `m_α ξ̇^α - n` of a Pfaffian system, with derivative
/// symbols `dot_ξ`, are regular with respect to `nondrv`.
pub fn check_parameterizable(s_comp: &PfaffianSystem, nondrv: &[Symbol], zt: &ZeroTest) -> Result<bool> {
    if s_comp.dim() != nondrv.len() {
        return Ok(false);
    }
    let eqs = implicit_equations(s_comp.generators());
    let n = nondrv.len();
    let jac = crate::linalg::ExprMatrix::from_fn(n, n, |i, j| eqs[i].diff(&nondrv[j]));
    Ok(crate::linalg::rank(&jac, zt)? == n)
}

/// Symbol standing for the time derivative of `s`.
pub fn dot_symbol(s: &Symbol) -> Symbol {
    Symbol::aux(&format!("dot_{}", s.name()))
}

/// The implicit equations `Σ m_α dot_ξ^α + m_t` of the generators.
pub fn implicit_equations(forms: &[OneForm]) -> Vec<Expr> {
    forms
        .iter()
        .map(|g| {
            let chart = g.chart();
            let mut terms = Vec::new();
            for (idx, c) in g.terms() {
                let i = idx[0];
                if Some(i) == chart.time_index() {
                    terms.push(c.clone());
                } else {
                    terms.push(c * Expr::var(&dot_symbol(chart.symbol(i))));
                }
            }
            Expr::add_all(terms)
        })
        .collect()
}

/// Generators of `s` completing `s_next` to a basis of `s`, preferring those
/// with the smallest pullback along `phi`.
fn complement(
    s: &PfaffianSystem,
    s_next: &PfaffianSystem,
    phi: Option<&ChartTransform>,
    zt: &ZeroTest,
) -> Result<PfaffianSystem> {
    let mut ordered: Vec<(usize, &OneForm)> = Vec::with_capacity(s.dim());
    for g in s.generators() {
        let size = match phi {
            Some(phi) => phi.pullback(g)?.coeffs().iter().map(Expr::size).sum(),
            None => 0,
        };
        ordered.push((size, g));
    }
    ordered.sort_by_key(|(size, _)| *size);
    let mut acc = s_next.clone();
    let mut comp = Vec::new();
    for (_, g) in ordered {
        let grown = acc.extended(std::slice::from_ref(g), zt)?;
        if grown.dim() > acc.dim() {
            comp.push(g.clone());
            acc = grown;
        }
    }
    Ok(PfaffianSystem::new(s.chart(), comp, zt)?)
}

/// Number of distinct denominators in the expressions.
fn denominators(exprs: &[Expr]) -> usize {
    let mut bases = std::collections::BTreeSet::new();
    for e in exprs {
        for t in e.terms() {
            for (b, n) in t.factor_powers() {
                if n < 0 {
                    bases.insert(b);
                }
            }
        }
    }
    bases.len()
}

/// Search state shared across levels.
struct Search<'a> {
    cfg: &'a AnsatzConfig,
    log: Vec<BranchRecord>,
}

fn render_fields(f: &Distribution) -> Vec<String> {
    f.generators().iter().map(|g| g.to_string()).collect()
}

fn render_forms(s: &PfaffianSystem) -> Vec<String> {
    s.generators().iter().map(|g| g.to_string()).collect()
}

/// Per-level data computed once and shared by all candidates.
struct Level {
    system: PfaffianSystem,
    vertical: Distribution,
    derived: PfaffianSystem,
    shortcut: bool,
    level: usize,
    /// Maps the level chart plus earlier flow parameters to `(x, u)`.
    total: ChartTransform,
}

impl Level {
    fn new(system: PfaffianSystem, total: ChartTransform, level: usize, zt: &ZeroTest) -> Result<Level> {
        let vertical = system.vertical_annihilator(zt)?;
        let derived = system.derived_system(zt)?;
        let shortcut = derived.is_integrable_with_dt(zt)?;
        Ok(Level { system, vertical, derived, shortcut, level, total })
    }

    fn candidates(&self, cfg: &AnsatzConfig) -> Vec<Candidate> {
        let mut out = Vec::new();
        let dv = self.vertical.dim();
        let r = self.system.dim() - self.derived.dim();
        if r >= 1 && r <= dv {
            for s in subsets(dv, r) {
                out.push(Candidate::Derived(s));
            }
        }
        let chart = self.system.chart();
        let basis = self.vertical.generators();
        let mut seen: Vec<Vec<Expr>> = Vec::new();
        let mut push_field = |comps: Vec<Expr>, out: &mut Vec<Candidate>| {
            let comps = clean_vector(comps, &cfg.zero_test);
            if comps.iter().all(Expr::is_structurally_zero) || seen.contains(&comps) {
                return;
            }
            seen.push(comps.clone());
            out.push(Candidate::Field(VectorField::new(chart, comps)));
        };
        for e in basis {
            push_field(e.comps().to_vec(), &mut out);
        }
        let pool = monomial_pool(chart.coords(), cfg.max_degree);
        let mut combos = Vec::new();
        for (k, m) in pool.iter().enumerate() {
            for i in 0..dv {
                for j in i + 1..dv {
                    combos.push((m.size(), k, i, j));
                }
            }
        }
        combos.sort();
        for (_, k, i, j) in combos {
            let comps = basis[i].comps().iter().zip(basis[j].comps()).map(|(a, b)| a + &pool[k] * b).collect();
            push_field(comps, &mut out);
        }
        out
    }
}

enum Attempt {
    Split(Box<Splitting>),
    Rejected,
    Suspended { f: Distribution, s_next: PfaffianSystem, reason: String },
}

impl Search<'_> {
    fn zt(&self) -> &ZeroTest {
        &self.cfg.zero_test
    }

    fn evaluate(&self, lv: &Level, cand: &Candidate) -> Result<Attempt> {
        let zt = self.zt();
        let s = &lv.system;
        let (f, s_next, source) = match cand {
            Candidate::Derived(idx) => {
                let fields: Vec<VectorField> = idx.iter().map(|&i| lv.vertical.generators()[i].clone()).collect();
                let f = Distribution::new(s.chart(), fields, zt)?;
                if !f.is_involutive(zt)? || !all_characteristic(&lv.derived, &f, zt)? {
                    return Ok(Attempt::Rejected);
                }
                (f, lv.derived.clone(), SplitSource::DerivedFlag)
            }
            Candidate::Field(v) => {
                let f = Distribution::new(s.chart(), vec![v.clone()], zt)?;
                let solutions = necessary_condition_solutions(s, v, zt)?;
                let base = if self.cfg.assume_derived { lv.derived.clone() } else { PfaffianSystem::empty(s.chart()) };
                match refine_to_cauchy(s, &f, &solutions, &base, zt)? {
                    Some(next) => (f, next, SplitSource::Ansatz),
                    None => return Ok(Attempt::Rejected),
                }
            }
        };
        if s.dim() != s_next.dim() + f.dim() {
            return Ok(Attempt::Rejected);
        }
        if complement(s, &s_next, None, zt)?.dim() != f.dim() {
            return Ok(Attempt::Rejected);
        }
        let charts = match self.straighten(lv, &f) {
            Ok(c) => c,
            Err(DecomposeError::Exterior(ExteriorError::NotSolvable(reason))) => {
                return Ok(Attempt::Suspended { f, s_next, reason });
            }
            Err(e) => return Err(e),
        };
        for (transform, nondrv) in charts {
            let reduced = match s_next.restrict_to_subchart(&transform, &nondrv, zt) {
                Ok(r) => r,
                Err(PfaffianError::NotReducible(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let s_comp = complement(s, &s_next, Some(&transform), zt)?;
            let comp_pulled = s_comp.pullback(&transform, zt)?;
            if !check_parameterizable(&comp_pulled, &nondrv, zt)? {
                continue;
            }
            return Ok(Attempt::Split(Box::new(Splitting {
                level: lv.level,
                source,
                system: s.clone(),
                f,
                s_next,
                s_comp,
                transform,
                nondrv,
                reduced,
                shortcut: lv.shortcut,
            })));
        }
        Ok(Attempt::Rejected)
    }

    /// Straightening charts for `f`, preferred first.
    fn straighten(&self, lv: &Level, f: &Distribution) -> Result<Vec<(ChartTransform, Vec<Symbol>)>> {
        let zt = self.zt();
        let k = lv.level;
        if f.dim() == 1 {
            let naming = FlowNaming { param: format!("wh{k}"), prefix: format!("w{k}_") };
            let options = straighten_flow_options(&f.generators()[0], &naming, zt)?;
            let inv = lv.total.inverse_map();
            let mut scored: Vec<(usize, usize, ChartTransform, Vec<Symbol>)> = Vec::new();
            for (pos, o) in options.into_iter().enumerate() {
                let target = o.transform.target();
                let kept: Vec<Expr> = o
                    .transform
                    .source()
                    .coords()
                    .iter()
                    .zip(o.transform.inverse())
                    .filter(|(s, _)| **s != o.param && !target.contains(s))
                    .map(|(_, e)| e.substitute(&inv))
                    .collect();
                scored.push((denominators(&kept), pos, o.transform, vec![o.param]));
            }
            scored.sort_by_key(|(den, pos, _, _)| (*den, *pos));
            return Ok(scored.into_iter().map(|(_, _, t, p)| (t, p)).collect());
        }
        let namings: Vec<FlowNaming> = (0..f.dim())
            .map(|j| FlowNaming { param: format!("wh{k}_{}", j + 1), prefix: format!("w{k}_") })
            .collect();
        let (t, params) = straighten_distribution(f.generators(), &namings, zt)?;
        Ok(vec![(t, params)])
    }

    /// Depth-first search from `lv`; returns the completing sequence if any.
    fn explore(&mut self, lv: Level, path: &str) -> Result<Option<Vec<Splitting>>> {
        if lv.system.is_empty() {
            return Ok(Some(Vec::new()));
        }
        if lv.level >= self.cfg.max_depth {
            return Ok(None);
        }
        let candidates = lv.candidates(self.cfg);
        let mut explored = 0;
        for (ci, cand) in candidates.iter().enumerate() {
            if explored >= self.cfg.branch_width {
                break;
            }
            let id = if path.is_empty() { ci.to_string() } else { format!("{path}.{ci}") };
            let split = match self.evaluate(&lv, cand)? {
                Attempt::Rejected => continue,
                Attempt::Suspended { f, s_next, reason } => {
                    explored += 1;
                    self.log.push(BranchRecord {
                        id,
                        level: lv.level,
                        source: match cand {
                            Candidate::Derived(_) => SplitSource::DerivedFlag,
                            Candidate::Field(_) => SplitSource::Ansatz,
                        },
                        fields: render_fields(&f),
                        s_next: render_forms(&s_next),
                        outcome: BranchOutcome::Suspended { reason },
                    });
                    continue;
                }
                Attempt::Split(s) => *s,
            };
            explored += 1;
            let slot = self.log.len();
            self.log.push(BranchRecord {
                id: id.clone(),
                level: lv.level,
                source: split.source,
                fields: render_fields(&split.f),
                s_next: render_forms(&split.s_next),
                outcome: BranchOutcome::DeadEnd,
            });
            let total = extend_total(&lv.total, &split.transform)?;
            let next_level = lv.level + 1;
            if !split.reduced.is_empty() && next_level >= self.cfg.max_depth {
                self.log[slot].outcome = BranchOutcome::DepthLimit;
                continue;
            }
            let next = Level::new(split.reduced.clone(), total, next_level, self.zt())?;
            if let Some(mut rest) = self.explore(next, &id)? {
                self.log[slot].outcome = BranchOutcome::Triangularized;
                rest.insert(0, split);
                return Ok(Some(rest));
            }
        }
        Ok(None)
    }
}

/// All splittings of `s` found within the budgets, in search order.
pub fn reduce_once(s: &PfaffianSystem, cfg: &AnsatzConfig) -> Result<Vec<Splitting>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    let search = Search { cfg, log: Vec::new() };
    let lv = Level::new(s.clone(), ChartTransform::identity(s.chart()), 0, &cfg.zero_test)?;
    let mut out = Vec::new();
    for cand in lv.candidates(cfg) {
        if out.len() >= cfg.branch_width {
            break;
        }
        if let Attempt::Split(sp) = search.evaluate(&lv, &cand)? {
            out.push(*sp);
        }
    }
    if out.is_empty() {
        return Err(DecomposeError::AnsatzExhausted);
    }
    Ok(out)
}

/// Depth-first search with backtracking for a complete sequence of splittings.
pub fn run_decomposition(cs: &ControlSystem, cfg: &AnsatzConfig) -> Result<DecompositionResult> {
    let initial = PfaffianSystem::from_control_system(cs);
    let identity = ChartTransform::identity(initial.chart());
    let mut search = Search { cfg, log: Vec::new() };
    let found = if cfg.max_depth == 0 || cfg.branch_width == 0 {
        None
    } else {
        let root = Level::new(initial.clone(), identity.clone(), 0, &cfg.zero_test)?;
        search.explore(root, "")?
    };
    let log = search.log;
    Ok(match found {
        Some(sequence) => {
            let transform = compose_sequence(&identity, &sequence)?;
            DecompositionResult { status: Status::Triangularized, initial, sequence, transform, branch_log: log }
        }
        None => {
            let budget_hit = cfg.max_depth == 0
                || cfg.branch_width == 0
                || log.iter().any(|r| !matches!(r.outcome, BranchOutcome::DeadEnd));
            let status = if budget_hit || !log.is_empty() { Status::Inconclusive } else { Status::NotReducible };
            DecompositionResult { status, initial, sequence: Vec::new(), transform: identity, branch_log: log }
        }
    })
}

/// Composes the level transforms, each extended by the earlier flow parameters.
pub fn compose_sequence(base: &ChartTransform, sequence: &[Splitting]) -> Result<ChartTransform> {
    let mut total = base.clone();
    for sp in sequence {
        total = extend_total(&total, &sp.transform)?;
    }
    Ok(total)
}

/// `total ∘ step`, with `step` extended by the coordinates of `total.source`
/// outside its target chart.
fn extend_total(total: &ChartTransform, step: &ChartTransform) -> Result<ChartTransform> {
    let chart = step.target();
    let earlier: Vec<Symbol> = total.source().coords().iter().filter(|s| !chart.contains(s)).cloned().collect();
    let step = reorder_target(&step.extend_identity(&earlier)?, total.source())?;
    Ok(total.compose(&step)?)
}

/// Re-expresses `t` on a target chart with the same coordinates in another order.
fn reorder_target(t: &ChartTransform, chart: &Arc<Chart>) -> Result<ChartTransform> {
    if crate::exterior::same_chart(t.target(), chart) {
        return Ok(t.clone());
    }
    let fwd: BTreeMap<&Symbol, &Expr> = t.target().coords().iter().zip(t.forward()).collect();
    let forward = chart.coords().iter().map(|s| fwd.get(s).map(|e| (*e).clone()).unwrap_or_else(|| Expr::var(s))).collect();
    Ok(ChartTransform::new(t.source(), chart, forward, t.inverse().to_vec())?)
}

/// Transforms from the final chart down to each level chart (extended by the
/// flow parameters of earlier levels), indexed by level.
pub fn level_transforms(sequence: &[Splitting], final_chart: &Arc<Chart>) -> Result<Vec<ChartTransform>> {
    let mut out = vec![ChartTransform::identity(final_chart)];
    for sp in sequence.iter().rev() {
        let lower = out.last().unwrap();
        let chart = sp.transform.source();
        let earlier: Vec<Symbol> = lower.target().coords().iter().filter(|s| !chart.contains(s)).cloned().collect();
        let step = sp.transform.extend_identity(&earlier)?;
        let step = reorder_source(&step, lower.target())?;
        out.push(step.compose(lower)?);
    }
    out.reverse();
    out.remove(out.len() - 1);
    Ok(out)
}

/// Re-expresses `t` on a source chart with the same coordinates in another order.
fn reorder_source(t: &ChartTransform, chart: &Arc<Chart>) -> Result<ChartTransform> {
    if crate::exterior::same_chart(t.source(), chart) {
        return Ok(t.clone());
    }
    let inv = t.inverse_map();
    let inverse = chart.coords().iter().map(|s| inv.get(s).cloned().unwrap_or_else(|| Expr::var(s))).collect();
    Ok(ChartTransform::new(chart, t.target(), t.forward().to_vec(), inverse)?)
}

#[cfg(test)]
mod tests;
