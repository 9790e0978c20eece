//! Linear algebra over the field of expressions, with generic-rank semantics.
//!
//! Ranks are decided numerically: the matrix is evaluated at the sample points
//! of the zero test and the largest numeric rank found is the generic rank.
//! Pivot rows and columns chosen at a rank-attaining point give a generically
//! nonsingular block, from which kernels and reduced row bases are written
//! down with Cramer's rule. This keeps every result fraction-free.

use std::collections::{BTreeMap, HashMap};

use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::symexpr::{is_negligible_rel, Expr, Node, Symbol, ZeroTest, ZeroTestError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("rank decision failed: {0}")]
    RankDecisionFailed(String),
}

impl From<ZeroTestError> for LinalgError {
    fn from(e: ZeroTestError) -> Self {
        LinalgError::RankDecisionFailed(e.to_string())
    }
}

/// Dense row-major matrix of expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExprMatrix { rows, cols, data: vec![Expr::zero(); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ExprMatrix { rows, cols, data }
    }

    /// Builds a matrix from rows of equal length `cols`.
    pub fn from_rows(rows: &[Vec<Expr>], cols: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "row length mismatch");
            data.extend(r.iter().cloned());
        }
        ExprMatrix { rows: rows.len(), cols, data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn row(&self, i: usize) -> &[Expr] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[Expr]) {
        assert_eq!(row.len(), self.cols, "row length mismatch");
        self.data.extend(row.iter().cloned());
        self.rows += 1;
    }

    pub fn transpose(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        let mut set = std::collections::BTreeSet::new();
        for e in &self.data {
            set.extend(e.free_symbols());
        }
        set.into_iter().collect()
    }

    fn eval_at(&self, symbols: &[Symbol], zt: &ZeroTest, index: usize) -> Option<Vec<Vec<Float>>> {
        let point = zt.sampler().point(symbols, index);
        let mut memo = HashMap::new();
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self.get(i, j).eval_memo(&point, &mut memo).ok()?);
            }
            out.push(row);
        }
        Some(out)
    }
}

/// Generic rank together with a generically nonsingular pivot block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankProfile {
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
    pub pivot_cols: Vec<usize>,
}

/// Column-greedy elimination at one numeric point. Among admissible pivot rows
/// the one whose symbolic entry is smallest is preferred.
fn numeric_profile(a: &mut [Vec<Float>], sizes: &dyn Fn(usize, usize) -> usize) -> RankProfile {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut scale = Float::with_val(crate::symexpr::PRECISION, 1);
    for r in a.iter() {
        for x in r {
            let ax = x.clone().abs();
            if ax > scale {
                scale = ax;
            }
        }
    }
    let mut used = vec![false; rows];
    let mut profile = RankProfile { rank: 0, pivot_rows: Vec::new(), pivot_cols: Vec::new() };
    for j in 0..cols {
        let mut best: Option<usize> = None;
        for i in 0..rows {
            if used[i] || is_negligible_rel(&a[i][j], &scale) {
                continue;
            }
            match best {
                Some(b) if sizes(b, j) <= sizes(i, j) => {}
                _ => best = Some(i),
            }
        }
        let Some(p) = best else { continue };
        used[p] = true;
        profile.rank += 1;
        profile.pivot_rows.push(p);
        profile.pivot_cols.push(j);
        let pivot_row = a[p].clone();
        for i in 0..rows {
            if used[i] {
                continue;
            }
            let factor = Float::with_val(crate::symexpr::PRECISION, &a[i][j] / &pivot_row[j]);
            if factor.is_zero() {
                continue;
            }
            for k in j..cols {
                let delta = Float::with_val(crate::symexpr::PRECISION, &factor * &pivot_row[k]);
                a[i][k] -= delta;
            }
        }
    }
    profile
}

/// Generic rank profile of `m`, maximized over the sample points of `zt`.
pub fn rank_profile(m: &ExprMatrix, zt: &ZeroTest) -> Result<RankProfile, LinalgError> {
    let empty = RankProfile { rank: 0, pivot_rows: Vec::new(), pivot_cols: Vec::new() };
    if m.rows == 0 || m.cols == 0 || m.data.iter().all(Expr::is_structurally_zero) {
        return Ok(empty);
    }
    let full = m.rows.min(m.cols);
    let symbols = m.symbols();
    let sizes = |i: usize, j: usize| m.get(i, j).size();
    let samples = if symbols.is_empty() { 1 } else { zt.samples.max(1) };
    let mut best: Option<RankProfile> = None;
    let mut valid = 0;
    let mut attempt = 0;
    while valid < samples && attempt < zt.max_attempts() {
        let index = attempt;
        attempt += 1;
        let Some(mut a) = m.eval_at(&symbols, zt, index) else { continue };
        valid += 1;
        let p = numeric_profile(&mut a, &sizes);
        if best.as_ref().is_none_or(|b| p.rank > b.rank) {
            best = Some(p);
        }
        if best.as_ref().unwrap().rank == full {
            break;
        }
    }
    best.ok_or_else(|| {
        LinalgError::RankDecisionFailed(format!("no valid sample point for a {}x{} matrix", m.rows, m.cols))
    })
}

pub fn rank(m: &ExprMatrix, zt: &ZeroTest) -> Result<usize, LinalgError> {
    Ok(rank_profile(m, zt)?.rank)
}

/// Determinant by Laplace expansion with memoized minors.
pub fn det(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 0 {
        return Expr::one();
    }
    assert!(n < 64, "determinant too large");
    let mut memo: HashMap<u64, Expr> = HashMap::new();
    det_rec(m, 0, (1u64 << n) - 1, &mut memo)
}

fn det_rec(m: &[Vec<Expr>], k: usize, mask: u64, memo: &mut HashMap<u64, Expr>) -> Expr {
    if k == m.len() {
        return Expr::one();
    }
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let mut terms = Vec::new();
    let mut position = 0;
    for j in 0..m.len() {
        if mask & (1 << j) == 0 {
            continue;
        }
        let entry = &m[k][j];
        if !entry.is_structurally_zero() {
            let minor = det_rec(m, k + 1, mask & !(1 << j), memo);
            if !minor.is_structurally_zero() {
                let t = entry * &minor;
                terms.push(if position % 2 == 0 { t } else { -t });
            }
        }
        position += 1;
    }
    let v = Expr::add_all(terms);
    memo.insert(mask, v.clone());
    v
}

fn block(m: &ExprMatrix, rows: &[usize], cols: &[usize]) -> Vec<Vec<Expr>> {
    rows.iter().map(|&i| cols.iter().map(|&j| m.get(i, j).clone()).collect()).collect()
}

fn with_column(a: &[Vec<Expr>], col: usize, m: &ExprMatrix, rows: &[usize], src: usize) -> Vec<Vec<Expr>> {
    let mut b = a.to_vec();
    for (r, &i) in rows.iter().enumerate() {
        b[r][col] = m.get(i, src).clone();
    }
    b
}

/// Basis of the right null space `{x : m x = 0}`, one vector per free column.
pub fn kernel(m: &ExprMatrix, zt: &ZeroTest) -> Result<Vec<Vec<Expr>>, LinalgError> {
    let p = rank_profile(m, zt)?;
    let n = m.cols;
    let free: Vec<usize> = (0..n).filter(|j| !p.pivot_cols.contains(j)).collect();
    let a = block(m, &p.pivot_rows, &p.pivot_cols);
    let d = det(&a);
    let mut out = Vec::with_capacity(free.len());
    for &f in &free {
        let mut x = vec![Expr::zero(); n];
        x[f] = d.clone();
        for (i, &c) in p.pivot_cols.iter().enumerate() {
            x[c] = -det(&with_column(&a, i, m, &p.pivot_rows, f));
        }
        out.push(clean_vector(x, zt));
    }
    Ok(out)
}

/// Canonical basis of the row space: numerators of the reduced row echelon form,
/// with denominators cleared and common factors removed.
pub fn row_basis(m: &ExprMatrix, zt: &ZeroTest) -> Result<Vec<Vec<Expr>>, LinalgError> {
    let p = rank_profile(m, zt)?;
    let a = block(m, &p.pivot_rows, &p.pivot_cols);
    let d = det(&a);
    let mut out = Vec::with_capacity(p.rank);
    for i in 0..p.rank {
        let mut row = vec![Expr::zero(); m.cols];
        for (j, slot) in row.iter_mut().enumerate() {
            if let Some(k) = p.pivot_cols.iter().position(|&c| c == j) {
                if k == i {
                    *slot = d.clone();
                }
            } else {
                *slot = det(&with_column(&a, i, m, &p.pivot_rows, j));
            }
        }
        out.push(clean_vector(row, zt));
    }
    Ok(out)
}

/// Reduced row echelon form over the function field: the pivot columns and one
/// row per pivot, with entries written as quotients of Cramer determinants.
pub fn rref(m: &ExprMatrix, zt: &ZeroTest) -> Result<(Vec<usize>, Vec<Vec<Expr>>), LinalgError> {
    let p = rank_profile(m, zt)?;
    let a = block(m, &p.pivot_rows, &p.pivot_cols);
    let d_inv = det(&a).recip();
    let mut out = Vec::with_capacity(p.rank);
    for i in 0..p.rank {
        let mut row = vec![Expr::zero(); m.cols];
        for (j, slot) in row.iter_mut().enumerate() {
            if let Some(k) = p.pivot_cols.iter().position(|&c| c == j) {
                if k == i {
                    *slot = Expr::one();
                }
            } else {
                *slot = det(&with_column(&a, i, m, &p.pivot_rows, j)) * &d_inv;
            }
        }
        out.push(row);
    }
    Ok((p.pivot_cols, out))
}

/// Indices of a maximal generically independent subset of rows, greedy in row order.
pub fn independent_rows(rows: &[Vec<Expr>], cols: usize, zt: &ZeroTest) -> Result<Vec<usize>, LinalgError> {
    let mut keep: Vec<usize> = Vec::new();
    let mut current = ExprMatrix::zeros(0, cols);
    for (i, r) in rows.iter().enumerate() {
        let mut trial = current.clone();
        trial.push_row(r);
        if rank(&trial, zt)? == keep.len() + 1 {
            keep.push(i);
            current = trial;
        }
    }
    Ok(keep)
}

/// True when `v` lies in the span of the generically independent rows `basis`.
pub fn in_span(basis: &[Vec<Expr>], v: &[Expr], zt: &ZeroTest) -> Result<bool, LinalgError> {
    if v.iter().all(Expr::is_structurally_zero) {
        return Ok(true);
    }
    let mut m = ExprMatrix::from_rows(basis, v.len());
    m.push_row(v);
    Ok(rank(&m, zt)? == basis.len())
}

/// True when every row of `a` lies in the span of the independent rows `b`.
pub fn span_contains(b: &[Vec<Expr>], a: &[Vec<Expr>], cols: usize, zt: &ZeroTest) -> Result<bool, LinalgError> {
    if a.is_empty() {
        return Ok(true);
    }
    let mut m = ExprMatrix::from_rows(b, cols);
    for r in a {
        m.push_row(r);
    }
    Ok(rank(&m, zt)? == b.len())
}

/// Positive-exponent factors common to every term of `e`, with minimal exponents.
fn monomial_content(e: &Expr) -> BTreeMap<Expr, i64> {
    let mut content: Option<BTreeMap<Expr, i64>> = None;
    for t in e.terms() {
        let here: BTreeMap<Expr, i64> = t.factor_powers().into_iter().filter(|(_, n)| *n > 0).collect();
        content = Some(match content {
            None => here,
            Some(c) => c
                .into_iter()
                .filter_map(|(b, n)| here.get(&b).map(|m| (b, n.min(*m))))
                .collect(),
        });
    }
    content.unwrap_or_default()
}

/// Normalizes a vector up to a nonzero function factor: hidden zeros are
/// replaced by 0, denominators cleared, common monomial and rational content
/// removed, and the leading entry scaled to 1 when it is a rational constant
/// (otherwise its sign is made positive).
pub fn clean_vector(v: Vec<Expr>, zt: &ZeroTest) -> Vec<Expr> {
    let mut v: Vec<Expr> = v
        .into_iter()
        .map(|e| {
            if !e.is_structurally_zero() && e.is_zero(zt).unwrap_or(false) {
                Expr::zero()
            } else {
                e
            }
        })
        .collect();
    if v.iter().all(Expr::is_structurally_zero) {
        return v;
    }
    let mut dens: BTreeMap<Expr, i64> = BTreeMap::new();
    for e in &v {
        for t in e.terms() {
            for (b, n) in t.factor_powers() {
                if n < 0 {
                    let slot = dens.entry(b).or_insert(0);
                    *slot = (*slot).max(-n);
                }
            }
        }
    }
    if !dens.is_empty() {
        let lcd = Expr::mul_all(dens.into_iter().map(|(b, n)| b.pow(n)));
        v = v.into_iter().map(|e| e * &lcd).collect();
    }
    let mut common: Option<BTreeMap<Expr, i64>> = None;
    for e in v.iter().filter(|e| !e.is_structurally_zero()) {
        let c = monomial_content(e);
        common = Some(match common {
            None => c,
            Some(prev) => prev.into_iter().filter_map(|(b, n)| c.get(&b).map(|m| (b, n.min(*m)))).collect(),
        });
    }
    if let Some(c) = common.filter(|c| !c.is_empty()) {
        let inv = Expr::mul_all(c.into_iter().map(|(b, n)| b.pow(-n)));
        v = v.into_iter().map(|e| e * &inv).collect();
    }
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for e in &v {
        for t in e.terms() {
            let (c, _) = t.split_coefficient();
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
    }
    if num != 0 && (num != 1 || den != 1) {
        let scale = Expr::constant(Rational::from((den, num)));
        v = v.into_iter().map(|e| e * &scale).collect();
    }
    let lead = v.iter().find(|e| !e.is_structurally_zero()).cloned().expect("nonzero vector");
    if let Node::Const(c) = lead.node() {
        if *c != 1 {
            let inv = Expr::constant(Rational::from(1) / c);
            v = v.into_iter().map(|e| e * &inv).collect();
        }
    } else if lead.has_negative_sign() {
        v = v.into_iter().map(|e| -e).collect();
    }
    v
}
