use std::collections::HashMap;

use rug::Float;

use super::*;

fn sym(n: &str) -> Symbol {
    Symbol::aux(n)
}

fn v(n: &str) -> Expr {
    Expr::var(&sym(n))
}

fn zt() -> ZeroTest {
    ZeroTest::default()
}

#[test]
fn collects_like_terms() {
    let x = v("x");
    assert_eq!(&x + &x, Expr::int(2) * &x);
    assert_eq!(&x - &x, Expr::zero());
}

#[test]
fn cancels_identical_factors() {
    let (u1, u2) = (v("u1"), v("u2"));
    assert_eq!(&u1 / &u2 * &u2, u1);
}

#[test]
fn keeps_irreducible_transcendentals() {
    let e = (v("u1") / v("u2")).sin();
    assert!(matches!(e.node(), Node::Func(Func::Sin, _)));
    assert_eq!(e.normalize(), e);
}

#[test]
fn expands_products_of_sums() {
    let (a, b) = (v("a"), v("b"));
    let lhs = (&a + &b).pow(2);
    let rhs = &a * &a + Expr::int(2) * &a * &b + &b * &b;
    assert_eq!(lhs, rhs);
}

#[test]
fn negative_powers_of_sums_are_primitive() {
    let (a, b) = (v("a"), v("b"));
    let lhs = (Expr::int(-2) * &a - Expr::int(2) * &b).recip();
    let rhs = Expr::rational(-1, 2) * (&a + &b).recip();
    assert_eq!(lhs, rhs);
    assert_eq!((&a + &b) / (&a + &b), Expr::one());
}

#[test]
fn exp_and_ln_rules() {
    let (x, y) = (v("x"), v("y"));
    assert_eq!(x.ln().exp(), x);
    assert_eq!(x.exp().ln(), x);
    assert_eq!((&x + &y).exp(), x.exp() * y.exp());
    assert_eq!((Expr::int(2) * &x).exp(), x.exp().pow(2));
    assert_eq!((Expr::int(3) * x.ln()).exp(), x.pow(3));
    assert_eq!(x.exp().recip() * x.exp(), Expr::one());
}

#[test]
fn odd_and_even_functions() {
    let x = v("x");
    assert_eq!((-&x).sin(), -x.sin());
    assert_eq!((-&x).cos(), x.cos());
    assert_eq!(Expr::zero().sin(), Expr::zero());
    assert_eq!(Expr::zero().cos(), Expr::one());
    assert_eq!(Expr::rational(9, 4).sqrt(), Expr::rational(3, 2));
    assert!(matches!(Expr::int(2).sqrt().node(), Node::Func(Func::Sqrt, _)));
}

#[test]
fn sqrt_powers() {
    let x = v("x");
    assert_eq!(x.sqrt().pow(2), x);
    assert_eq!(x.sqrt() * x.sqrt() * x.sqrt(), &x * x.sqrt());
}

#[test]
fn diff_examples() {
    let (u1, u2) = (v("u1"), v("u2"));
    let e = (&u1 / &u2).sin();
    assert_eq!(e.diff(&sym("u1")), (&u1 / &u2).cos() / &u2);
    let zh4 = v("zh4");
    assert_eq!(zh4.exp().diff(&sym("zh4")), zh4.exp());
    assert_eq!(v("x1").diff(&sym("u1")), Expr::zero());
}

#[test]
fn diff_of_inverse_trig_matches_formula() {
    let x = v("x");
    let d = x.arcsin().diff(&sym("x"));
    let expected = (Expr::one() - &x * &x).sqrt().recip();
    assert!((d - expected).is_zero(&zt()).unwrap());
    let d = x.arctan().diff(&sym("x"));
    assert!((d - (Expr::one() + &x * &x).recip()).is_zero(&zt()).unwrap());
    let d = x.tan().diff(&sym("x"));
    assert!((d - Expr::one() - x.tan().pow(2)).is_zero(&zt()).unwrap());
}

#[test]
fn substitute_examples() {
    let (u1, u2) = (v("u1"), v("u2"));
    let (zh2, zh4) = (v("zh2"), v("zh4"));
    let e = (&u1 / &u2).sin();
    let mut map = HashMap::new();
    map.insert(sym("u1"), zh4.exp() * &zh2);
    map.insert(sym("u2"), zh4.exp());
    assert_eq!(e.substitute(&map), zh2.sin());

    assert_eq!(v("x3").substitute(&HashMap::new()), v("x3"));

    let zh3 = v("zh3");
    let mut map = HashMap::new();
    map.insert(sym("x1"), &zh2 * &zh3);
    assert_eq!(v("x1").substitute(&map), &zh2 * &zh3);
}

#[test]
fn substitution_is_simultaneous() {
    let (a, b) = (v("a"), v("b"));
    let mut map = HashMap::new();
    map.insert(sym("a"), b.clone());
    map.insert(sym("b"), a.clone());
    assert_eq!((&a - Expr::int(2) * &b).substitute(&map), &b - Expr::int(2) * &a);
}

#[test]
fn is_zero_examples() {
    let (u1, u2, x) = (v("u1"), v("u2"), v("x"));
    assert!((&u2 * (&u1 / &u2) - &u1).is_zero(&zt()).unwrap());
    let pythagoras = x.sin().pow(2) + x.cos().pow(2) - Expr::one();
    assert!(!pythagoras.is_structurally_zero());
    assert!(pythagoras.is_zero(&zt()).unwrap());
    assert!(!(&u1 - &u2).is_zero(&zt()).unwrap());
}

#[test]
fn is_zero_fails_without_valid_points() {
    let x = v("x");
    let e = (&x + Expr::int(1)).arcsin();
    assert!(matches!(e.is_zero(&zt()), Err(ZeroTestError::EvaluationFailed { .. })));
}

#[test]
fn is_zero_resamples_on_domain_errors() {
    // arcsin(x) is undefined for half of the sample range.
    let x = v("x");
    let e = x.arcsin().sin() - &x;
    assert!(e.is_zero(&zt()).unwrap());
}

#[test]
fn eval_examples() {
    let (u1, u2) = (v("u1"), v("u2"));
    let mut p = Point::new();
    p.insert(sym("u1"), Float::with_val(PRECISION, 0));
    p.insert(sym("u2"), Float::with_val(PRECISION, 1));
    assert_eq!((&u1 / &u2).sin().eval(&p).unwrap(), 0);

    let asin = Expr::rational(1, 2).arcsin().eval(&Point::new()).unwrap();
    let reference = "0.52359877559829887307710723054658381403286156656251763682915743";
    let reference = Float::with_val(PRECISION, Float::parse(reference).unwrap());
    let err = Float::with_val(PRECISION, &asin - &reference).abs();
    assert!(err < 1e-55, "arcsin(1/2) = {asin}");

    let mut p = Point::new();
    p.insert(sym("x"), Float::with_val(PRECISION, 0));
    assert!(matches!(v("x").recip().eval(&p), Err(EvalError::Domain(_))));
    let mut p = Point::new();
    p.insert(sym("x"), Float::with_val(PRECISION, -1));
    assert!(matches!(v("x").ln().eval(&p), Err(EvalError::Domain(_))));
}

#[test]
fn symbol_order_uses_index_then_prefix() {
    let mut names = [sym("x2"), sym("u1"), sym("x1"), sym("u2"), sym("t")];
    names.sort();
    let order: Vec<&str> = names.iter().map(|s| s.name()).collect();
    assert_eq!(order, ["t", "u1", "x1", "u2", "x2"]);
}

#[test]
fn free_symbols_and_size() {
    let e = v("x1") * v("u2") / v("u1");
    let names: Vec<String> = e.free_symbols().iter().map(|s| s.name().to_string()).collect();
    assert_eq!(names, ["u1", "x1", "u2"]);
    assert!(e.size() >= 4);
}
