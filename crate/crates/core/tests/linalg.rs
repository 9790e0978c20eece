use flatdec::linalg::{det, in_span, independent_rows, kernel, rank, row_basis, rref, ExprMatrix};
use flatdec::symexpr::{Expr, Symbol, ZeroTest};
use flatdec::sysdsl::parse_expr;

fn zt() -> ZeroTest {
    ZeroTest::default()
}

fn matrix(rows: &[&[&str]]) -> ExprMatrix {
    let symbols = [Symbol::state("x"), Symbol::state("y")];
    let rows: Vec<Vec<Expr>> = rows.iter().map(|r| r.iter().map(|t| parse_expr(t, &symbols).unwrap()).collect()).collect();
    ExprMatrix::from_rows(&rows, rows[0].len())
}

fn mul(m: &ExprMatrix, v: &[Expr]) -> Vec<Expr> {
    (0..m.nrows()).map(|i| Expr::add_all((0..m.ncols()).map(|j| m.get(i, j) * &v[j]))).collect()
}

#[test]
fn generic_rank_ignores_special_points() {
    let m = matrix(&[&["x", "y"], &["x*y", "y^2"]]);
    assert_eq!(rank(&m, &zt()).unwrap(), 1);
    let m = matrix(&[&["x", "y"], &["y", "x"]]);
    assert_eq!(rank(&m, &zt()).unwrap(), 2);
    let trig = matrix(&[&["sin(x)^2", "1"], &["1 - cos(x)^2", "1"]]);
    assert_eq!(rank(&trig, &zt()).unwrap(), 1);
    assert_eq!(rank(&ExprMatrix::zeros(3, 2), &zt()).unwrap(), 0);
}

#[test]
fn kernel_vectors_are_annihilated() {
    let m = matrix(&[&["x", "y", "1"], &["x^2", "0", "sin(y)"]]);
    let k = kernel(&m, &zt()).unwrap();
    assert_eq!(k.len(), 1);
    for entry in mul(&m, &k[0]) {
        assert!(entry.is_zero(&zt()).unwrap(), "{entry}");
    }
}

#[test]
fn row_basis_spans_the_rows() {
    let m = matrix(&[&["x", "y", "1"], &["2*x", "2*y", "2"], &["0", "1", "x"]]);
    let basis = row_basis(&m, &zt()).unwrap();
    assert_eq!(basis.len(), 2);
    for i in 0..m.nrows() {
        assert!(in_span(&basis, m.row(i), &zt()).unwrap());
    }
    let outside = matrix(&[&["1", "0", "0"]]);
    assert!(!in_span(&basis, outside.row(0), &zt()).unwrap());
}

#[test]
fn rref_has_identity_pivots() {
    let m = matrix(&[&["x", "y"], &["1", "x"]]);
    let (pivots, rows) = rref(&m, &zt()).unwrap();
    assert_eq!(pivots.len(), 2);
    for (i, row) in rows.iter().enumerate() {
        for (k, &q) in pivots.iter().enumerate() {
            let expected = if i == k { Expr::one() } else { Expr::zero() };
            assert!((&row[q] - &expected).is_zero(&zt()).unwrap());
        }
    }
}

#[test]
fn determinant_and_independent_rows() {
    let m = matrix(&[&["x", "y"], &["1", "x"]]);
    let rows: Vec<Vec<Expr>> = (0..2).map(|i| m.row(i).to_vec()).collect();
    let expected = parse_expr("x^2 - y", &[Symbol::state("x"), Symbol::state("y")]).unwrap();
    assert!((det(&rows) - expected).is_zero(&zt()).unwrap());
    let dependent = matrix(&[&["x", "y"], &["2*x", "2*y"], &["1", "0"]]);
    let rows: Vec<Vec<Expr>> = (0..3).map(|i| dependent.row(i).to_vec()).collect();
    assert_eq!(independent_rows(&rows, 2, &zt()).unwrap(), vec![0, 2]);
}
