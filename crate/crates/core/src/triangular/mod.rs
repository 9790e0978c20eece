//! Implicit triangular forms, flat outputs and their numeric verification.
//!
//! A decomposition consists of blocks `z^i = (y^i, ẑ^i)` and equations
//! `Ξ^i = a^i_k dz^k - b^i dt` (`k ≤ i`) whose coefficients only involve
//! `z^1 … z^i` and `ẑ^{i+1}`, with `∂Ξ^i/∂ẑ^{i+1}` regular. Given curves for
//! the `y` coordinates, each block `ẑ^{i+1}` follows from `Ξ^i` by the
//! implicit function theorem, so the `y` coordinates are flat outputs.

mod certificate;
pub mod jet;
mod recover;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::decompose::{check_parameterizable, compose_sequence, level_transforms, DecomposeError, Splitting};
use crate::exterior::{Chart, ChartTransform, ExteriorError, OneForm, VectorField};
use crate::pfaffian::{PfaffianError, PfaffianSystem};
use crate::symexpr::{Expr, Symbol, ZeroTest};
use crate::sysdsl::ControlSystem;

pub use certificate::CertificateError;
pub use recover::{
    dynamics_residual, recover_trajectory, verify_flatness_numeric, Polynomial, Sample, TrialOutcome, Verdict,
    VerifyOptions,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TriangularError {
    #[error("structure violation: {0}")]
    StructureViolation(String),
    #[error("found {found} flat outputs for {expected} inputs")]
    OutputCountMismatch { found: usize, expected: usize },
    #[error("decomposition fails validation: {0}")]
    ValidationFailed(String),
    #[error("Newton iteration diverged at t = {t} in block {block}")]
    NewtonDivergence { t: f64, block: usize },
    #[error("singular Jacobian at t = {t} in block {block}")]
    SingularJacobian { t: f64, block: usize },
    #[error("expression uses unknown symbol {0}")]
    UnknownSymbol(String),
    #[error(transparent)]
    Pfaffian(#[from] PfaffianError),
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

impl From<DecomposeError> for TriangularError {
    fn from(e: DecomposeError) -> Self {
        match e {
            DecomposeError::Pfaffian(p) => TriangularError::Pfaffian(p),
            DecomposeError::Exterior(x) => TriangularError::Exterior(x),
            other => TriangularError::StructureViolation(other.to_string()),
        }
    }
}

impl From<crate::symexpr::ZeroTestError> for TriangularError {
    fn from(e: crate::symexpr::ZeroTestError) -> Self {
        TriangularError::Pfaffian(e.into())
    }
}

type Result<T> = std::result::Result<T, TriangularError>;

/// Variables of one block: the free `y` part and the non-derivative `ẑ` part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub y: Vec<Symbol>,
    pub zhat: Vec<Symbol>,
}

impl Block {
    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.y.iter().chain(&self.zhat)
    }
}

/// Blocks `z^1 … z^m` and equations `Ξ^1 … Ξ^{m-1}` on a common chart, with the
/// chart transform back to the original `(x, u)` coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularDecomposition {
    chart: Arc<Chart>,
    blocks: Vec<Block>,
    equations: Vec<Vec<OneForm>>,
    transform: ChartTransform,
}

impl TriangularDecomposition {
    /// Assembles a decomposition; the dependence structure is checked by
    /// [`TriangularDecomposition::check_dependence`].
    pub fn new(blocks: Vec<Block>, equations: Vec<Vec<OneForm>>, transform: ChartTransform) -> Result<Self> {
        let chart = transform.source().clone();
        if blocks.len() != equations.len() + 1 {
            return Err(TriangularError::StructureViolation(format!(
                "{} blocks for {} equation groups",
                blocks.len(),
                equations.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for s in blocks.iter().flat_map(Block::symbols) {
            if !chart.contains(s) || !seen.insert(s.clone()) {
                return Err(TriangularError::StructureViolation(format!("block variable {s} is not a unique chart coordinate")));
            }
        }
        if seen.len() != chart.n_coords() {
            return Err(TriangularError::StructureViolation("blocks do not cover the chart".into()));
        }
        for g in equations.iter().flatten() {
            if !crate::exterior::same_chart(g.chart(), &chart) || g.degree() != 1 {
                return Err(TriangularError::StructureViolation("equations must be 1-forms on the block chart".into()));
            }
        }
        if !blocks[0].zhat.is_empty() {
            return Err(TriangularError::StructureViolation("the first block has no non-derivative part".into()));
        }
        Ok(TriangularDecomposition { chart, blocks, equations, transform })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `Ξ^i` for `i = 1 … n_b`.
    pub fn equations(&self, i: usize) -> &[OneForm] {
        &self.equations[i - 1]
    }

    pub fn all_equations(&self) -> &[Vec<OneForm>] {
        &self.equations
    }

    pub fn transform(&self) -> &ChartTransform {
        &self.transform
    }

    /// Number of equation blocks.
    pub fn n_b(&self) -> usize {
        self.equations.len()
    }

    /// Number of variable blocks, `n_b + 1`.
    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    /// `z^k` for `k = 1 … m`.
    pub fn block(&self, k: usize) -> &Block {
        &self.blocks[k - 1]
    }

    /// Flat output coordinates in block order.
    pub fn outputs(&self) -> Vec<Symbol> {
        self.blocks.iter().flat_map(|b| b.y.iter().cloned()).collect()
    }

    /// `a^i_k`: coefficients of `dz^k` in `Ξ^i`, one row per equation.
    pub fn a_matrix(&self, i: usize, k: usize) -> Vec<Vec<Expr>> {
        let block: Vec<&Symbol> = self.block(k).symbols().collect();
        self.equations(i).iter().map(|g| block.iter().map(|s| g.coeff_of(s)).collect()).collect()
    }

    /// `b^i`: the negated `dt` coefficients of `Ξ^i`.
    pub fn b_vector(&self, i: usize) -> Vec<Expr> {
        let t = self.chart.time_index().expect("block chart has a time coordinate");
        self.equations(i).iter().map(|g| -g.coeff(&[t])).collect()
    }

    /// `S_{d,k} = {Ξ^1, …, Ξ^{n_b-k}}`.
    pub fn subsystem(&self, k: usize, zt: &ZeroTest) -> Result<PfaffianSystem> {
        let forms: Vec<OneForm> = self.equations[..self.n_b() - k].iter().flatten().cloned().collect();
        Ok(PfaffianSystem::new(&self.chart, forms, zt)?)
    }

    /// Checks that `Ξ^i` only involves `z^1 … z^i`, `ẑ^{i+1}` and
    /// differentials of `z^1 … z^i`.
    pub fn check_dependence(&self, zt: &ZeroTest) -> Result<()> {
        for i in 1..=self.n_b() {
            let lower: BTreeSet<&Symbol> = self.blocks[..i].iter().flat_map(Block::symbols).collect();
            let mut allowed = lower.clone();
            allowed.extend(self.block(i + 1).zhat.iter());
            let time = self.chart.time();
            for (e, g) in self.equations(i).iter().enumerate() {
                for (idx, c) in g.terms() {
                    let s = self.chart.symbol(idx[0]);
                    if Some(s) != time && !lower.contains(s) && !c.is_zero(zt)? {
                        return Err(TriangularError::StructureViolation(format!("Ξ^{i}_{} contains d{s}", e + 1)));
                    }
                    for v in c.free_symbols() {
                        if Some(&v) != time && !allowed.contains(&v) && !c.diff(&v).is_zero(zt)? {
                            return Err(TriangularError::StructureViolation(format!(
                                "a coefficient of Ξ^{i}_{} depends on {v}",
                                e + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Relabels a completed sequence of splittings into blocks.
    ///
    /// The flow parameters of level `k` become `ẑ^{n_b-k+1}`, the complement
    /// `S_{k+1,c}` becomes `Ξ^{n_b-k}`, and each remaining coordinate joins the
    /// first block whose equations involve it.
    pub fn from_sequence(seq: &[Splitting], zt: &ZeroTest) -> Result<Self> {
        let last = seq.last().ok_or_else(|| TriangularError::StructureViolation("empty sequence".into()))?;
        if !last.reduced.is_empty() {
            return Err(TriangularError::StructureViolation("sequence does not end with the empty system".into()));
        }
        let n_b = seq.len();
        let base = ChartTransform::identity(seq[0].system.chart());
        let total = compose_sequence(&base, seq)?;
        let full = total.source().clone();
        let lowers = level_transforms(seq, &full)?;
        let mut equations: Vec<Vec<OneForm>> = vec![Vec::new(); n_b];
        for (k, sp) in seq.iter().enumerate() {
            let lower = &lowers[k];
            let mut forms = Vec::new();
            for g in sp.s_comp.generators() {
                forms.push(lower.pullback(&g.reembed(lower.target())?)?);
            }
            let sys = PfaffianSystem::new(&full, forms, zt)?.cleaned(zt);
            equations[n_b - k - 1] = sys.generators().to_vec();
        }

        let mut y_block: Vec<(usize, usize, Symbol)> = Vec::new();
        for (pos, s) in last.reduced.chart().coords().iter().enumerate() {
            let first = (1..=n_b).find(|&i| equations[i - 1].iter().any(|g| involves(g, s))).unwrap_or(1);
            y_block.push((first, pos, s.clone()));
        }
        y_block.sort();

        let mut renames: HashMap<Symbol, Symbol> = HashMap::new();
        let mut blocks: Vec<Block> = (0..=n_b).map(|_| Block { y: Vec::new(), zhat: Vec::new() }).collect();
        for (n, (b, _, s)) in y_block.iter().enumerate() {
            let new = Symbol::aux(&format!("y{}", n + 1));
            renames.insert(s.clone(), new.clone());
            blocks[b - 1].y.push(new);
        }
        for (k, sp) in seq.iter().enumerate() {
            let j = n_b - k + 1;
            for (l, p) in sp.nondrv.iter().enumerate() {
                let name = if sp.nondrv.len() == 1 { format!("zh{j}") } else { format!("zh{j}_{}", l + 1) };
                let new = Symbol::aux(&name);
                renames.insert(p.clone(), new.clone());
                blocks[j - 1].zhat.push(new);
            }
        }
        let coords: Vec<Symbol> = blocks.iter().flat_map(|b| b.y.iter().cloned()).chain(blocks.iter().flat_map(|b| b.zhat.iter().cloned())).collect();
        let chart = Chart::new(coords.clone(), full.time().cloned())?;
        let back: HashMap<&Symbol, &Symbol> = renames.iter().map(|(old, new)| (new, old)).collect();
        let forward = full.coords().iter().map(|s| Expr::var(&renames[s])).collect();
        let inverse = coords.iter().map(|s| Expr::var(back[s])).collect();
        let relabel = ChartTransform::new(&chart, &full, forward, inverse)?;

        let equations = equations
            .iter()
            .map(|forms| forms.iter().map(|g| relabel.pullback(g)).collect::<std::result::Result<Vec<_>, _>>())
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let td = TriangularDecomposition::new(blocks, equations, total.compose(&relabel)?)?;
        td.check_dependence(zt)?;
        Ok(td)
    }

    /// Runs the structural checks (a), (b), (c) and the dependence check.
    pub fn validate(&self, zt: &ZeroTest) -> Result<ValidationReport> {
        let mut items = Vec::new();
        let dependence = self.check_dependence(zt);
        items.push(CheckItem {
            name: "triangular dependence".into(),
            passed: dependence.is_ok(),
            detail: dependence.err().map(|e| e.to_string()).unwrap_or_default(),
        });
        let (n_b, m) = (self.n_b(), self.m());
        for k in 0..n_b {
            let zhat = &self.block(m - k).zhat;
            let s_k = self.subsystem(k, zt)?;
            let s_next = self.subsystem(k + 1, zt)?;
            let mut passed = !zhat.is_empty();
            for z in zhat {
                let v = VectorField::coordinate(&self.chart, z)?;
                let vertical = s_k.generators().iter().map(|g| g.pair(&v)).collect::<std::result::Result<Vec<_>, _>>()?;
                for c in vertical {
                    passed &= c.is_zero(zt)?;
                }
                passed &= s_next.is_cauchy_characteristic(&v, zt)?;
            }
            items.push(CheckItem {
                name: format!("(a) d_zhat{} is vertical for S_d{k} and characteristic for S_d{}", m - k, k + 1),
                passed,
                detail: String::new(),
            });
        }
        for i in 1..=n_b {
            let sys = PfaffianSystem::new(&self.chart, self.equations(i).to_vec(), zt)?;
            let passed = sys.dim() == self.equations(i).len()
                && check_parameterizable(&sys, &self.block(i + 1).zhat, zt).map_err(TriangularError::from)?;
            items.push(CheckItem {
                name: format!("(b) Xi{i} is parameterizable with respect to zhat{}", i + 1),
                passed,
                detail: String::new(),
            });
        }
        for k in 1..=m {
            let y = &self.block(k).y;
            if y.is_empty() {
                continue;
            }
            let sys = self.subsystem(m - k, zt)?;
            let mut passed = true;
            for s in y {
                passed &= sys.is_cauchy_characteristic(&VectorField::coordinate(&self.chart, s)?, zt)?;
            }
            items.push(CheckItem {
                name: format!("(c) d_y{k} is characteristic for S_d{}", m - k),
                passed,
                detail: String::new(),
            });
        }
        Ok(ValidationReport { items })
    }
}

fn involves(g: &OneForm, s: &Symbol) -> bool {
    let i = g.chart().index_of(s);
    g.terms().iter().any(|(idx, c)| Some(idx[0]) == i || c.contains(s))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub items: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }
}

/// Whether the flat outputs depend on the state only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum FlatOrder {
    #[serde(rename = "0-flat")]
    ZeroFlat,
    #[serde(rename = "1-flat")]
    OneFlat,
}

impl std::fmt::Display for FlatOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlatOrder::ZeroFlat => "0-flat",
            FlatOrder::OneFlat => "1-flat",
        })
    }
}

/// A decomposition together with its flat outputs in the original coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessCertificate {
    pub system: ControlSystem,
    pub decomposition: TriangularDecomposition,
    pub outputs: Vec<Expr>,
    pub order: FlatOrder,
}

/// Expresses the `y` coordinates in `(x, u)` and tags the flatness order.
pub fn extract_flat_output(td: &TriangularDecomposition, system: &ControlSystem, zt: &ZeroTest) -> Result<FlatnessCertificate> {
    let report = td.validate(zt)?;
    if let Some(item) = report.items.iter().find(|i| !i.passed) {
        return Err(TriangularError::ValidationFailed(item.name.clone()));
    }
    let ys = td.outputs();
    if ys.len() != system.n_inputs() {
        return Err(TriangularError::OutputCountMismatch { found: ys.len(), expected: system.n_inputs() });
    }
    let inv = td.transform().inverse();
    let outputs: Vec<Expr> = ys.iter().map(|s| inv[td.chart().index_of(s).unwrap()].clone()).collect();
    let order = if outputs.iter().any(|o| o.contains_any(&system.inputs)) { FlatOrder::OneFlat } else { FlatOrder::ZeroFlat };
    Ok(FlatnessCertificate { system: system.clone(), decomposition: td.clone(), outputs, order })
}

#[cfg(test)]
mod tests;
