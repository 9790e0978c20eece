#![allow(dead_code)]

use std::sync::Arc;

use flatdec::exterior::{Chart, KForm, VectorField};
use flatdec::symexpr::{Expr, Symbol};
use rand::seq::SliceRandom;
use rand::Rng;

pub const FIXTURES: [(&str, &str); 5] = [
    ("sin", include_str!("../../fixtures/sin.fds")),
    ("coupled", include_str!("../../fixtures/coupled.fds")),
    ("chain2", include_str!("../../fixtures/chain2.fds")),
    ("chain3", include_str!("../../fixtures/chain3.fds")),
    ("chain4", include_str!("../../fixtures/chain4.fds")),
];

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.fds"))
}

/// Chart with coordinates `a, b, c` and time `t`.
pub fn chart() -> Arc<Chart> {
    let coords = ["a", "b", "c"].iter().map(|n| Symbol::state(n)).collect();
    Chart::new(coords, Some(Symbol::time("t"))).unwrap()
}

/// Random expression of bounded depth in the chart symbols.
pub fn expr<R: Rng>(rng: &mut R, symbols: &[Symbol], depth: usize) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return if rng.gen_bool(0.3) {
            Expr::int(rng.gen_range(-3..=3))
        } else {
            Expr::var(symbols.choose(rng).unwrap())
        };
    }
    let a = expr(rng, symbols, depth - 1);
    match rng.gen_range(0..6) {
        0 | 1 => &a + &expr(rng, symbols, depth - 1),
        2 | 3 => &a * &expr(rng, symbols, depth - 1),
        4 => a.sin(),
        _ => a.exp(),
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (0..n)
        .flat_map(|first| {
            subsets(n, k - 1).into_iter().filter(move |rest| rest.first().is_none_or(|&r| r > first)).map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Random `degree`-form with up to three terms.
pub fn form<R: Rng>(rng: &mut R, chart: &Arc<Chart>, degree: usize) -> KForm {
    let symbols = chart.symbols();
    let mut basis = subsets(chart.dim(), degree);
    basis.shuffle(rng);
    let n = rng.gen_range(1..=3.min(basis.len()));
    KForm::from_terms(chart, degree, basis.into_iter().take(n).map(|idx| (idx, expr(rng, &symbols, 2))))
}

/// Random vector field with polynomial components.
pub fn field<R: Rng>(rng: &mut R, chart: &Arc<Chart>) -> VectorField {
    let symbols = chart.symbols();
    let comps = (0..chart.dim()).map(|_| if rng.gen_bool(0.3) { Expr::zero() } else { expr(rng, &symbols, 2) }).collect();
    VectorField::new(chart, comps)
}
