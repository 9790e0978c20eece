use super::*;
use crate::sysdsl::{parse_expr, parse_system};

const SIN_EXAMPLE: &str =
    "system s { states: x1,x2,x3; inputs: u1,u2; dot(x1)=u1; dot(x2)=u2; dot(x3)=sin(u1/u2); }";

const COUPLED: &str = "system c { states: x1,x2,x3,x4; inputs: u1,u2; \
    dot(x1)=x2 + x3*u2; dot(x2)=x3 + x1*u2; dot(x3)=u1 + x2*u2; dot(x4)=u2; }";

fn zt() -> ZeroTest {
    ZeroTest::default()
}

fn field(c: &Arc<Chart>, comps: &[(&str, &str)]) -> VectorField {
    let syms = c.symbols();
    let pairs: Vec<(Symbol, Expr)> = comps
        .iter()
        .map(|(s, x)| (syms.iter().find(|y| y.name() == *s).unwrap().clone(), parse_expr(x, &syms).unwrap()))
        .collect();
    VectorField::from_components(c, &pairs).unwrap()
}

fn spans(f: &Distribution, v: &VectorField) -> bool {
    f.dim() == 1 && f.contains(v, &zt()).unwrap()
}

#[test]
fn necessary_condition_for_euler_field() {
    let s0 = PfaffianSystem::from_control_system(&parse_system(SIN_EXAMPLE).unwrap());
    let c = s0.chart().clone();
    let v0 = field(&c, &[("u1", "u1"), ("u2", "u2")]);
    let sols = necessary_condition_solutions(&s0, &v0, &zt()).unwrap();
    let span = PfaffianSystem::new(&c, sols, &zt()).unwrap();
    assert_eq!(span.dim(), 2);
    assert!(span.contains_system(&s0.derived_system(&zt()).unwrap(), &zt()).unwrap());
    assert!(span.is_cauchy_characteristic(&v0, &zt()).unwrap());
}

#[test]
fn parameterizable_complement() {
    let c = Chart::new(vec![Symbol::aux("x"), Symbol::aux("p")], Some(Symbol::time("t"))).unwrap();
    let syms = c.symbols();
    let w = KForm::one_form(&c, &[Expr::one(), Expr::zero(), -parse_expr("exp(p)", &syms).unwrap()]);
    let s = PfaffianSystem::new(&c, vec![w], &zt()).unwrap();
    assert!(check_parameterizable(&s, &[syms[1].clone()], &zt()).unwrap());
    assert!(!check_parameterizable(&s, &[syms[0].clone()], &zt()).unwrap());
    assert!(!check_parameterizable(&s, &[], &zt()).unwrap());
}

#[test]
fn motivating_example_triangularizes() {
    let cs = parse_system(SIN_EXAMPLE).unwrap();
    let res = run_decomposition(&cs, &AnsatzConfig::default()).unwrap();
    assert_eq!(res.status, Status::Triangularized);
    assert_eq!(res.sequence.len(), 3);
    let first = &res.sequence[0];
    let c = first.system.chart().clone();
    assert_eq!(first.source, SplitSource::Ansatz);
    assert!(spans(&first.f, &field(&c, &[("u1", "u1"), ("u2", "u2")])));
    assert_eq!(first.s_next.dim(), 2);
    for (k, sp) in res.sequence.iter().enumerate() {
        assert_eq!(sp.level, k);
        assert_eq!(sp.system.dim(), 3 - k);
        assert_eq!(sp.nondrv.len(), 1);
    }
    assert!(res.sequence[2].reduced.is_empty());
    res.transform.verify(&zt()).unwrap();
    assert!(res.branch_log.iter().any(|r| r.outcome == BranchOutcome::Triangularized));
}

#[test]
fn coupled_example_backtracks_over_derived_flag() {
    let cs = parse_system(COUPLED).unwrap();
    let res = run_decomposition(&cs, &AnsatzConfig::default()).unwrap();
    assert_eq!(res.status, Status::Triangularized);
    let root = &res.branch_log[0];
    assert_eq!(root.level, 0);
    assert_eq!(root.source, SplitSource::DerivedFlag);
    assert_eq!(root.outcome, BranchOutcome::DeadEnd);
    let first = &res.sequence[0];
    let c = first.system.chart().clone();
    assert!(spans(&first.f, &field(&c, &[("u1", "1")])));
    let dims: Vec<usize> = res.sequence.iter().map(|s| s.system.dim()).collect();
    assert_eq!(dims, [4, 3, 2, 1]);
    res.transform.verify(&zt()).unwrap();
}

#[test]
fn integrator_chain_uses_derived_flag() {
    let cs = parse_system("system i { states: x1,x2,x3; inputs: u; dot(x1)=x2; dot(x2)=x3; dot(x3)=u; }").unwrap();
    let res = run_decomposition(&cs, &AnsatzConfig::default()).unwrap();
    assert_eq!(res.status, Status::Triangularized);
    assert_eq!(res.sequence.len(), 3);
    assert!(res.sequence.iter().all(|s| s.source == SplitSource::DerivedFlag));
    let names: Vec<&str> = res.sequence.iter().map(|s| s.nondrv[0].name()).collect();
    assert_eq!(names, ["u", "x3", "x2"]);
}

#[test]
fn budgets_make_search_inconclusive() {
    let cs = parse_system(SIN_EXAMPLE).unwrap();
    let cfg = AnsatzConfig { max_depth: 2, ..AnsatzConfig::default() };
    let res = run_decomposition(&cs, &cfg).unwrap();
    assert_eq!(res.status, Status::Inconclusive);
    assert!(res.sequence.is_empty());
    assert!(res.branch_log.iter().any(|r| r.outcome == BranchOutcome::DepthLimit));
}

#[test]
fn reduce_once_lists_splittings() {
    let s0 = PfaffianSystem::from_control_system(&parse_system(SIN_EXAMPLE).unwrap());
    let splits = reduce_once(&s0, &AnsatzConfig::default()).unwrap();
    assert!(!splits.is_empty());
    for sp in &splits {
        assert_eq!(sp.s_next.dim() + sp.f.dim(), 3);
        assert!(sp.s_next.contains_system(&s0.derived_system(&zt()).unwrap(), &zt()).unwrap());
    }
    let empty = PfaffianSystem::empty(s0.chart());
    assert!(reduce_once(&empty, &AnsatzConfig::default()).unwrap().is_empty());
}
