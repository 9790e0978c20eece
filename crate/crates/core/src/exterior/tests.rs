use super::*;
use crate::symexpr::{Expr, Symbol, ZeroTest};
use crate::sysdsl::parse_expr;

fn zt() -> ZeroTest {
    ZeroTest::default()
}

fn chart(names: &[&str]) -> Arc<Chart> {
    Chart::new(names.iter().map(|n| Symbol::aux(n)).collect(), Some(Symbol::time("t"))).unwrap()
}

fn e(c: &Arc<Chart>, text: &str) -> Expr {
    parse_expr(text, &c.symbols()).unwrap()
}

fn dx(c: &Arc<Chart>, name: &str) -> KForm {
    KForm::differential(c, &Symbol::aux(name)).unwrap_or_else(|_| KForm::differential(c, &Symbol::time(name)).unwrap())
}

fn field(c: &Arc<Chart>, comps: &[(&str, &str)]) -> VectorField {
    let pairs: Vec<(Symbol, Expr)> = comps.iter().map(|(s, x)| (c.symbol(c.index_of(&Symbol::aux(s)).unwrap()).clone(), e(c, x))).collect();
    VectorField::from_components(c, &pairs).unwrap()
}

#[test]
fn wedge_examples() {
    let c = chart(&["x1", "x2", "u1", "u2"]);
    let (dx1, dx2, dt) = (dx(&c, "x1"), dx(&c, "x2"), dx(&c, "t"));
    assert!(wedge(&dx1, &dx1).unwrap().is_structurally_zero());
    let a = wedge(&dx1, &dx2).unwrap();
    let b = wedge(&dx2, &dx1).unwrap();
    assert_eq!(a, b.scale(&Expr::int(-1)));
    let w = dx1.scale(&e(&c, "u2")).sub(&dx2.scale(&e(&c, "u1"))).unwrap();
    let lhs = wedge(&w, &dt).unwrap();
    let rhs = wedge(&dx1, &dt).unwrap().scale(&e(&c, "u2")).sub(&wedge(&dx2, &dt).unwrap().scale(&e(&c, "u1"))).unwrap();
    assert_eq!(lhs, rhs);
    assert_eq!(lhs.to_string(), "u2*dx1^dt - u1*dx2^dt");
}

#[test]
fn d_examples() {
    let c = chart(&["x1", "x2", "x3", "u1", "u2"]);
    assert!(d(&dx(&c, "x1")).is_structurally_zero());
    let w = dx(&c, "x1").scale(&e(&c, "u2")).sub(&dx(&c, "x2").scale(&e(&c, "u1"))).unwrap();
    let expected = wedge(&dx(&c, "u2"), &dx(&c, "x1")).unwrap().sub(&wedge(&dx(&c, "u1"), &dx(&c, "x2")).unwrap()).unwrap();
    assert_eq!(d(&w), expected);
    let a = dx(&c, "t").scale(&e(&c, "x3"));
    assert_eq!(d(&a), wedge(&dx(&c, "x3"), &dx(&c, "t")).unwrap());
}

#[test]
fn contract_examples() {
    let c = chart(&["x1", "x2", "u1", "u2"]);
    let d1 = VectorField::coordinate(&c, &Symbol::aux("x1")).unwrap();
    assert_eq!(contract(&d1, &dx(&c, "x1")).unwrap(), KForm::function(&c, Expr::one()));
    let euler = field(&c, &[("u1", "u1"), ("u2", "u2")]);
    let two = wedge(&dx(&c, "u2"), &dx(&c, "x1")).unwrap().sub(&wedge(&dx(&c, "u1"), &dx(&c, "x2")).unwrap()).unwrap();
    let expected = dx(&c, "x1").scale(&e(&c, "u2")).sub(&dx(&c, "x2").scale(&e(&c, "u1"))).unwrap();
    assert_eq!(contract(&euler, &two).unwrap(), expected);
    let du1 = VectorField::coordinate(&c, &Symbol::aux("u1")).unwrap();
    let w = dx(&c, "x1").sub(&dx(&c, "t").scale(&e(&c, "u1"))).unwrap();
    assert!(contract(&du1, &w).unwrap().is_structurally_zero());
}

#[test]
fn lie_bracket_examples() {
    let c = chart(&["w1", "w2", "w3", "w4"]);
    let d = |s: &str| VectorField::coordinate(&c, &Symbol::aux(s)).unwrap();
    assert!(lie_bracket(&d("w1"), &d("w2")).unwrap().is_structurally_zero());
    let v = field(&c, &[("w1", "w1")]);
    assert_eq!(lie_bracket(&v, &d("w1")).unwrap(), d("w1").scale(&Expr::int(-1)));
    let v1 = field(&c, &[("w1", "w4"), ("w2", "1")]);
    assert_eq!(lie_bracket(&v1, &d("w4")).unwrap(), d("w1").scale(&Expr::int(-1)));
}

#[test]
fn pullback_examples() {
    let target = chart(&["x1"]);
    let source = chart(&["zh2", "zh3"]);
    let phi = ChartTransform::new(&source, &target, vec![e(&source, "zh2*zh3")], vec![e(&target, "x1"), Expr::one()]).unwrap();
    let pulled = phi.pullback(&dx(&target, "x1")).unwrap();
    let expected = dx(&source, "zh2").scale(&e(&source, "zh3")).add(&dx(&source, "zh3").scale(&e(&source, "zh2"))).unwrap();
    assert_eq!(pulled, expected);
    assert_eq!(phi.pullback(&dx(&target, "t")).unwrap(), dx(&source, "t"));
}

#[test]
fn pullback_commutes_with_d() {
    let target = chart(&["x1", "x2", "x3", "u1", "u2"]);
    let v0 = field(&target, &[("u1", "u1"), ("u2", "u2")]);
    let phi = straighten_flow(&v0, &zt()).unwrap().transform;
    let forms = [
        "x2 - x1*u2/u1",
        "sin(u1/u2)",
        "x3*exp(u2)",
    ];
    for text in forms {
        let f = e(&target, text);
        let w = KForm::exact(&target, &f).scale(&e(&target, "u1")).add(&dx(&target, "t").scale(&f)).unwrap();
        let lhs = phi.pullback(&d(&w)).unwrap();
        let rhs = d(&phi.pullback(&w).unwrap());
        assert!(lhs.sub(&rhs).unwrap().is_zero(&zt()).unwrap(), "{text}");
    }
}

#[test]
fn straightens_euler_field() {
    let c = chart(&["x1", "x2", "x3", "u1", "u2"]);
    let v0 = field(&c, &[("u1", "u1"), ("u2", "u2")]);
    let s = straighten_flow(&v0, &zt()).unwrap();
    assert_eq!(s.dropped.name(), "u2");
    let src = s.transform.source();
    let names: Vec<&str> = src.coords().iter().map(Symbol::name).collect();
    assert_eq!(names, ["x1", "x2", "x3", "w_u1", "wh"]);
    let f = s.transform.forward();
    assert_eq!(f[3], e(src, "exp(wh)*w_u1"));
    assert_eq!(f[4], e(src, "exp(wh)"));
    assert_eq!(f[0], e(src, "x1"));
    let inv = s.transform.inverse();
    assert_eq!(inv[3], e(&c, "u1/u2"));
    assert_eq!(inv[4], e(&c, "ln(u2)"));
}

#[test]
fn straightens_affine_field() {
    let c = chart(&["w1", "w2", "w3", "w4"]);
    let v1 = field(&c, &[("w1", "w4"), ("w2", "1")]);
    let s = straighten_flow(&v1, &zt()).unwrap();
    assert_eq!(s.dropped.name(), "w1");
    let src = s.transform.source();
    let f = s.transform.forward();
    assert_eq!(f[0], e(src, "wh*w4"));
    assert_eq!(f[1], e(src, "wh + w_w2"));
    assert_eq!(f[2], e(src, "w3"));
    assert_eq!(f[3], e(src, "w4"));

    let options = straighten_flow_options(&v1, &FlowNaming::default(), &zt()).unwrap();
    assert_eq!(options.len(), 2);
    assert_eq!(options[1].dropped.name(), "w2");
}

#[test]
fn coordinate_field_gives_identity() {
    let c = chart(&["x1", "x2"]);
    let v = VectorField::coordinate(&c, &Symbol::aux("x1")).unwrap();
    let s = straighten_flow(&v, &zt()).unwrap();
    assert!(s.transform.is_identity());
    assert_eq!(s.param.name(), "x1");
}

#[test]
fn straightens_polynomial_exponential_chain() {
    let c = chart(&["a", "b", "k"]);
    let v = field(&c, &[("a", "k*a"), ("b", "a")]);
    let s = straighten_flow(&v, &zt()).unwrap();
    let pushed = s.transform.pushforward(&VectorField::coordinate(s.transform.source(), &s.param).unwrap()).unwrap();
    for (p, q) in pushed.comps().iter().zip(v.comps()) {
        assert!((p - q).is_zero(&zt()).unwrap());
    }
    s.transform.verify(&zt()).unwrap();
}

#[test]
fn unsupported_flows_are_reported() {
    let c = chart(&["a", "b"]);
    let v = field(&c, &[("a", "a^2")]);
    assert!(matches!(straighten_flow(&v, &zt()), Err(ExteriorError::NotSolvable(_))));
    let v = field(&c, &[("a", "b"), ("b", "a")]);
    assert!(matches!(straighten_flow(&v, &zt()), Err(ExteriorError::NotSolvable(_))));
    let mut comps = vec![Expr::zero(); 3];
    comps[2] = Expr::one();
    let v = VectorField::new(&c, comps);
    assert!(matches!(straighten_flow(&v, &zt()), Err(ExteriorError::NotSolvable(_))));
}

#[test]
fn straightens_commuting_distribution() {
    let c = chart(&["x1", "x2", "u1", "u2"]);
    let fields = [field(&c, &[("u1", "1")]), field(&c, &[("u2", "1")])];
    let namings = [FlowNaming::default(), FlowNaming { param: "wh2".into(), prefix: "v_".into() }];
    let (t, params) = straighten_distribution(&fields, &namings, &zt()).unwrap();
    assert!(t.is_identity());
    let names: Vec<&str> = params.iter().map(Symbol::name).collect();
    assert_eq!(names, ["u1", "u2"]);
}

#[test]
fn transform_composition_and_inverse() {
    let c = chart(&["w1", "w2", "w3", "w4"]);
    let v1 = field(&c, &[("w1", "w4"), ("w2", "1")]);
    let t = straighten_flow(&v1, &zt()).unwrap().transform;
    let back = t.inverted();
    let id = t.compose(&back).unwrap();
    for (f, s) in id.forward().iter().zip(c.coords()) {
        assert!((f - Expr::var(s)).is_zero(&zt()).unwrap());
    }
    let wrong = ChartTransform::new(t.source(), &c, t.forward().to_vec(), t.forward().iter().map(|_| Expr::one()).collect());
    assert!(wrong.is_err() || wrong.unwrap().verify(&zt()).is_err());
}

#[test]
fn display_of_forms_and_fields() {
    let c = chart(&["x1", "u1"]);
    let w = dx(&c, "x1").sub(&dx(&c, "t").scale(&e(&c, "u1"))).unwrap();
    assert_eq!(w.to_string(), "dx1 - u1*dt");
    let v = field(&c, &[("x1", "u1 + 1"), ("u1", "-1")]);
    assert_eq!(v.to_string(), "(u1 + 1)*d_x1 - d_u1");
}
