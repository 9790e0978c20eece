use super::jet::{derivative, Tape};
use super::*;
use crate::decompose::{run_decomposition, AnsatzConfig, Status};
use crate::exterior::KForm;
use crate::sysdsl::{parse_expr, parse_system};

const SIN: &str = include_str!("../../fixtures/sin.fds");
const COUPLED: &str = include_str!("../../fixtures/coupled.fds");
const CHAIN2: &str = include_str!("../../fixtures/chain2.fds");
const CHAIN3: &str = include_str!("../../fixtures/chain3.fds");

fn zt() -> ZeroTest {
    ZeroTest::default()
}

fn decompose(src: &str) -> (ControlSystem, TriangularDecomposition) {
    let cs = parse_system(src).unwrap();
    let res = run_decomposition(&cs, &AnsatzConfig::default()).unwrap();
    assert_eq!(res.status, Status::Triangularized);
    let td = TriangularDecomposition::from_sequence(&res.sequence, &zt()).unwrap();
    (cs, td)
}

fn certificate(src: &str) -> FlatnessCertificate {
    let (cs, td) = decompose(src);
    extract_flat_output(&td, &cs, &zt()).unwrap()
}

fn on(td: &TriangularDecomposition, text: &str) -> Expr {
    parse_expr(text, &td.chart().symbols()).unwrap()
}

fn same(a: &Expr, b: &Expr) -> bool {
    (a - b).is_zero(&zt()).unwrap()
}

#[test]
fn motivating_example_blocks() {
    let (_, td) = decompose(SIN);
    assert_eq!(td.n_b(), 3);
    assert_eq!(td.m(), 4);
    assert_eq!(td.block(1).y.len(), 1);
    assert_eq!(td.block(2).y.len(), 1);
    assert!(td.block(3).y.is_empty() && td.block(4).y.is_empty());
    assert_eq!(td.a_matrix(1, 1), vec![vec![Expr::one()]]);
    let a22 = &td.a_matrix(2, 2)[0];
    let expected = [on(&td, "-zh2"), on(&td, "zh3")];
    let sign = if same(&a22[0], &expected[0]) { Expr::one() } else { Expr::int(-1) };
    for (a, e) in a22.iter().zip(&expected) {
        assert!(same(a, &(&sign * e)), "{a22:?}");
    }
    assert!(same(&td.b_vector(3)[0], &on(&td, "exp(zh4)")));
    assert!(same(&td.b_vector(1)[0], &on(&td, "sin(zh2)")));
}

#[test]
fn validation_passes_and_detects_violations() {
    let (_, td) = decompose(SIN);
    let report = td.validate(&zt()).unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.items.len(), 1 + 3 + 3 + 2);

    let chart = td.chart().clone();
    let t = chart.time_index().unwrap();
    let y1 = chart.index_of(&td.block(1).y[0]).unwrap();
    let bad = KForm::from_terms(&chart, 1, [(vec![y1], Expr::one()), (vec![t], -on(&td, "sin(zh2)*exp(zh4)"))]);
    let mut eqs = td.all_equations().to_vec();
    eqs[0] = vec![bad];
    let mutated = TriangularDecomposition::new(td.blocks().to_vec(), eqs, td.transform().clone()).unwrap();
    assert!(matches!(mutated.check_dependence(&zt()), Err(TriangularError::StructureViolation(_))));
    let report = mutated.validate(&zt()).unwrap();
    assert!(!report.passed());
    let a0 = report.items.iter().find(|i| i.name.starts_with("(a) d_zhat4")).unwrap();
    assert!(!a0.passed);
}

#[test]
fn brunovsky_chain_blocks() {
    let (cs, td) = decompose(CHAIN3);
    assert!(td.validate(&zt()).unwrap().passed());
    for i in 1..=td.n_b() {
        assert_eq!(td.a_matrix(i, i).len(), 1);
    }
    assert_eq!(td.a_matrix(1, 1), vec![vec![Expr::one()]]);
    assert_eq!(td.a_matrix(2, 2), vec![vec![Expr::one()]]);
    let cert = extract_flat_output(&td, &cs, &zt()).unwrap();
    assert_eq!(cert.outputs, vec![Expr::var(&cs.states[0])]);
    assert_eq!(cert.order, FlatOrder::ZeroFlat);
}

#[test]
fn flat_outputs_of_examples() {
    let cert = certificate(SIN);
    let text: Vec<String> = cert.outputs.iter().map(|o| o.to_string()).collect();
    assert_eq!(text, ["x3", "x2 - x1*u2/u1"]);
    assert_eq!(cert.order, FlatOrder::OneFlat);

    let cert = certificate(COUPLED);
    let mut text: Vec<String> = cert.outputs.iter().map(|o| o.to_string()).collect();
    text.sort();
    assert_eq!(text, ["x1 - u2*x2", "x4"]);
    assert_eq!(cert.order, FlatOrder::OneFlat);
}

#[test]
fn output_count_must_match_inputs() {
    let (_, td) = decompose(CHAIN3);
    let two_inputs = parse_system(SIN).unwrap();
    let err = extract_flat_output(&td, &two_inputs, &zt());
    assert_eq!(err, Err(TriangularError::OutputCountMismatch { found: 1, expected: 2 }));
}

#[test]
fn recovers_motivating_example_at_half() {
    let cert = certificate(SIN);
    let curves = [Polynomial::new(vec![0.0, 0.0, 0.5]), Polynomial::new(vec![1.0, 1.0])];
    let samples = recover_trajectory(&cert, &curves, &[0.5]).unwrap();
    let s = samples[0].as_ref().unwrap();
    let td = &cert.decomposition;
    let value = |name: &str| s.z[td.chart().coords().iter().position(|c| c.name() == name).unwrap()];
    let zh2 = 0.5f64.asin();
    let zh2_dot = 1.0 / (1.0 - 0.25f64).sqrt();
    assert!((value("zh2") - zh2).abs() < 1e-12);
    assert!((value("zh3") - zh2 / zh2_dot).abs() < 1e-12);
    assert!(s.residual < 1e-10);
    assert!((s.x[2] - 0.125).abs() < 1e-12);
    // dot(x3) = sin(u1/u2) equals the slope of y1.
    assert!(((s.u[0] / s.u[1]).sin() - 0.5).abs() < 1e-10);
}

#[test]
fn recovers_integrator_chain_input() {
    let cert = certificate(CHAIN2);
    let curve = [Polynomial::new(vec![0.0, 0.0, 0.0, 1.0])];
    let times = [0.1, 0.4, 0.9];
    for (s, t) in recover_trajectory(&cert, &curve, &times).unwrap().into_iter().zip(times) {
        let s = s.unwrap();
        assert!((s.u[0] - 6.0 * t).abs() < 1e-12);
        assert!((s.x[1] - 3.0 * t * t).abs() < 1e-12);
    }
}

#[test]
fn constant_output_is_singular() {
    let cert = certificate(SIN);
    let curves = [Polynomial::new(vec![0.0, 0.3]), Polynomial::new(vec![1.0, 1.0])];
    let samples = recover_trajectory(&cert, &curves, &[0.5]).unwrap();
    assert!(matches!(samples[0], Err(TriangularError::SingularJacobian { block: 2, .. })));
}

#[test]
fn numeric_verification_of_examples() {
    for src in [SIN, COUPLED, CHAIN3] {
        let cert = certificate(src);
        let verdict = verify_flatness_numeric(&cert, &VerifyOptions::default()).unwrap();
        assert!(verdict.passed, "{verdict:?}");
        assert!(verdict.max_deviation < 1e-6);
        assert!(verdict.regular_fraction >= 0.8);
    }
}

#[test]
fn claimed_outputs_are_checked() {
    let cert = certificate(SIN);
    let coords = cert.system.coordinates();
    let claim = |a: &str, b: &str| VerifyOptions {
        trials: 3,
        claimed: Some(vec![parse_expr(a, &coords).unwrap(), parse_expr(b, &coords).unwrap()]),
        ..VerifyOptions::default()
    };
    assert!(verify_flatness_numeric(&cert, &claim("x2 - x1*u2/u1", "x3")).unwrap().passed);
    let verdict = verify_flatness_numeric(&cert, &claim("x3", "x2")).unwrap();
    assert!(!verdict.passed);
    assert!(verdict.trials.iter().all(|t| matches!(t, TrialOutcome::Failed { .. })));
}

#[test]
fn dynamics_residual_is_small() {
    let cert = certificate(SIN);
    let curves = [Polynomial::new(vec![1.0, 0.2, 0.1]), Polynomial::new(vec![0.5, 0.3, 0.1])];
    let times: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-3).collect();
    let samples: Vec<Sample> = recover_trajectory(&cert, &curves, &times).unwrap().into_iter().map(|s| s.unwrap()).collect();
    assert!(dynamics_residual(&cert.system, &samples).unwrap() < 1e-5);
}

#[test]
fn certificate_round_trip() {
    let cert = certificate(SIN);
    let back = FlatnessCertificate::from_json(&cert.to_json()).unwrap();
    assert_eq!(back.outputs, cert.outputs);
    assert_eq!(back.order, cert.order);
    assert_eq!(back.decomposition.blocks(), cert.decomposition.blocks());
    assert!(back.decomposition.validate(&zt()).unwrap().passed());
    assert!(matches!(FlatnessCertificate::from_json("{}"), Err(CertificateError::Malformed(_))));
}

#[test]
fn jets_match_series() {
    let s = [Symbol::aux("a")];
    let exprs: Vec<Expr> = ["exp(a)", "ln(a)", "sin(a)", "cos(a)", "tan(a)", "sqrt(a)", "arcsin(a)", "arctan(a)", "a^-3"]
        .iter()
        .map(|t| parse_expr(t, &s).unwrap())
        .collect();
    let tape = Tape::compile(&exprs, &s).unwrap();
    let a0 = 0.3;
    let jets = tape.eval_jets(&[vec![a0, 1.0, 0.0, 0.0, 0.0]]);
    for (e, j) in exprs.iter().zip(&jets) {
        let mut d = e.clone();
        let mut fact = 1.0;
        for (k, c) in j.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
                d = d.diff(&s[0]);
            }
            let point = [(s[0].clone(), a0)].into_iter().collect();
            let exact = d.eval_f64(&point).unwrap() / fact;
            assert!((c - exact).abs() < 1e-9 * (1.0 + exact.abs()), "{e} order {k}: {c} vs {exact}");
        }
    }
    assert_eq!(derivative(&[1.0, 2.0, 3.0]), vec![2.0, 6.0]);
}
