//! Acceptance criteria, one line per criterion.
//!
//! Run with `cargo test --test acceptance`; the process exits non-zero when a
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use clap::Parser;
use flatdec::cli::{render_report, run, Cli};
use flatdec::decompose::{run_decomposition, AnsatzConfig, BranchOutcome, DecompositionResult, SplitSource, Status};
use flatdec::exterior::{contract, d, lie_bracket, wedge, wedge_all, KForm};
use flatdec::pfaffian::PfaffianSystem;
use flatdec::symexpr::{Expr, ZeroTest};
use flatdec::sysdsl::{parse_expr, parse_system, ControlSystem};
use flatdec::triangular::{extract_flat_output, verify_flatness_numeric, FlatnessCertificate, TriangularDecomposition, VerifyOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SIN_RUNTIME: Duration = Duration::from_secs(10);
const COUPLED_RUNTIME: Duration = Duration::from_secs(30);
const PROPERTY_INSTANCES: usize = 500;
const MAX_DEVIATION: f64 = 1e-6;
const STEP: f64 = 1e-3;
const MIN_REGULAR: f64 = 0.8;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn zt() -> ZeroTest {
    ZeroTest::default()
}

fn fixture(name: &str) -> ControlSystem {
    let (_, src) = common::FIXTURES.iter().find(|(n, _)| *n == name).unwrap();
    parse_system(src).unwrap()
}

fn decompose(cs: &ControlSystem) -> Result<(DecompositionResult, Duration), String> {
    let start = Instant::now();
    let res = run_decomposition(cs, &AnsatzConfig::default()).map_err(|e| e.to_string())?;
    Ok((res, start.elapsed()))
}

fn certify(cs: &ControlSystem, res: &DecompositionResult) -> Result<FlatnessCertificate, String> {
    if res.status != Status::Triangularized {
        return Err(format!("status {:?}", res.status));
    }
    let td = TriangularDecomposition::from_sequence(&res.sequence, &zt()).map_err(|e| e.to_string())?;
    extract_flat_output(&td, cs, &zt()).map_err(|e| e.to_string())
}

/// Every expected output equals a distinct produced output.
fn outputs_match(cs: &ControlSystem, produced: &[Expr], expected: &[&str]) -> Result<(), String> {
    let coords = cs.coordinates();
    let mut unused: Vec<&Expr> = produced.iter().collect();
    for text in expected {
        let e = parse_expr(text, &coords).unwrap();
        let pos = unused
            .iter()
            .position(|p| (*p - &e).is_zero(&zt()).unwrap_or(false))
            .ok_or_else(|| format!("{text} not among {produced:?}"))?;
        unused.remove(pos);
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let cs = fixture("sin");
    let (res, elapsed) = decompose(&cs)?;
    let cert = certify(&cs, &res)?;
    outputs_match(&cs, &cert.outputs, &["x3", "x2 - x1*u2/u1"])?;
    if elapsed >= SIN_RUNTIME {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("outputs {:?} in {elapsed:.2?}", cert.outputs.iter().map(Expr::to_string).collect::<Vec<_>>()))
}

fn criterion_2() -> Outcome {
    let cs = fixture("sin");
    let s0 = PfaffianSystem::from_control_system(&cs);
    let chart = s0.chart().clone();
    let e = |text: &str| parse_expr(text, &chart.symbols()).unwrap();
    let phi = KForm::one_form(
        &chart,
        &[e("-cos(u1/u2)"), e("u1/u2*cos(u1/u2)"), e("u2"), e("0"), e("0"), e("-u2*sin(u1/u2)")],
    );
    let derived = s0.derived_system(&zt()).map_err(|e| e.to_string())?;
    if derived.dim() != 1 {
        return Err(format!("derived system has dimension {}", derived.dim()));
    }
    let expected = PfaffianSystem::new(&chart, vec![phi], &zt()).map_err(|e| e.to_string())?;
    if !derived.same_span(&expected, &zt()).map_err(|e| e.to_string())? {
        return Err(format!("{derived} is not a multiple of Phi"));
    }
    Ok(format!("S0^(1) = {derived}"))
}

fn criterion_3() -> Outcome {
    let cs = fixture("coupled");
    let (res, elapsed) = decompose(&cs)?;
    let cert = certify(&cs, &res)?;
    outputs_match(&cs, &cert.outputs, &["x1 - u2*x2", "x4"])?;
    let dead_end = res.branch_log.iter().any(|b| {
        b.level == 0
            && b.source == SplitSource::DerivedFlag
            && b.outcome == BranchOutcome::DeadEnd
            && b.fields == ["d_u1", "d_u2"]
    });
    if !dead_end {
        return Err("no level-0 derived-flag dead end in the branch log".into());
    }
    if elapsed >= COUPLED_RUNTIME {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("outputs and dead end found in {elapsed:.2?}"))
}

fn criterion_4() -> Outcome {
    let mut checked = Vec::new();
    for (name, _) in common::FIXTURES {
        let cs = fixture(name);
        let flag = PfaffianSystem::from_control_system(&cs).derived_flag(&zt()).map_err(|e| e.to_string())?;
        let mut shortcut = true;
        for s in &flag[1..] {
            shortcut &= s.is_integrable_with_dt(&zt()).map_err(|e| e.to_string())?;
        }
        if !shortcut {
            continue;
        }
        let (res, _) = decompose(&cs)?;
        if res.status != Status::Triangularized {
            return Err(format!("{name}: status {:?}", res.status));
        }
        for sp in &res.sequence {
            let derived = sp.system.derived_system(&zt()).map_err(|e| e.to_string())?;
            if !sp.s_next.same_span(&derived, &zt()).map_err(|e| e.to_string())? {
                return Err(format!("{name}: level {} S_next differs from the derived system", sp.level));
            }
        }
        checked.push(name);
    }
    for required in ["chain2", "chain3", "chain4"] {
        if !checked.contains(&required) {
            return Err(format!("{required} was not checked"));
        }
    }
    Ok(format!("derived flag reproduced on {}", checked.join(", ")))
}

fn criterion_5() -> Outcome {
    let mut checks = 0;
    for (name, _) in common::FIXTURES {
        let cs = fixture(name);
        let (res, _) = decompose(&cs)?;
        let mut systems = vec![PfaffianSystem::from_control_system(&cs)];
        systems.extend(res.sequence.iter().map(|sp| sp.system.clone()));
        for s in &systems {
            let err = |e: flatdec::pfaffian::PfaffianError| e.to_string();
            let vertical = s.vertical_annihilator(&zt()).map_err(err)?;
            let derived = s.derived_system(&zt()).map_err(err)?;
            let volume = wedge_all(s.chart(), s.generators()).map_err(|e| e.to_string())?;
            for v in vertical.generators() {
                for w in derived.generators() {
                    let lhs = contract(v, &d(w)).and_then(|c| wedge(&c, &volume)).map_err(|e| e.to_string())?;
                    if !lhs.is_zero(&zt()).map_err(|e| e.to_string())? {
                        return Err(format!("{name}: v = {v}, omega = {w}"));
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(format!("{checks} checks on {} fixtures", common::FIXTURES.len()))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let chart = common::chart();
    let zero = |f: KForm| f.is_zero(&zt()).map_err(|e| e.to_string());
    let sign = |k: usize| Expr::int(if k.is_multiple_of(2) { 1 } else { -1 });
    let mut counts = [0usize; 4];
    for i in 0..PROPERTY_INSTANCES {
        let p = i % 3;
        let q = (i / 3) % 2 + 1;
        let a = common::form(&mut rng, &chart, p);
        let b = common::form(&mut rng, &chart, q);
        let dd = d(&d(&a));
        if !zero(dd)? {
            return Err(format!("d(d({a})) != 0"));
        }
        counts[0] += 1;

        let ab = wedge(&a, &b).map_err(|e| e.to_string())?;
        let ba = wedge(&b, &a).map_err(|e| e.to_string())?;
        if !zero(ab.sub(&ba.scale(&sign(p * q))).map_err(|e| e.to_string())?)? {
            return Err(format!("wedge antisymmetry fails for {a} and {b}"));
        }
        counts[1] += 1;

        let v = common::field(&mut rng, &chart);
        let lhs = contract(&v, &ab).map_err(|e| e.to_string())?;
        let second = wedge(&a, &contract(&v, &b).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.scale(&sign(p));
        let rhs = if p == 0 {
            second
        } else {
            let first = wedge(&contract(&v, &a).map_err(|e| e.to_string())?, &b).map_err(|e| e.to_string())?;
            first.add(&second).map_err(|e| e.to_string())?
        };
        if !zero(lhs.sub(&rhs).map_err(|e| e.to_string())?)? {
            return Err(format!("contraction is not an antiderivation for {v}, {a}, {b}"));
        }
        counts[2] += 1;

        let (u, w) = (common::field(&mut rng, &chart), common::field(&mut rng, &chart));
        let br = |x, y| lie_bracket(x, y).map_err(|e| e.to_string());
        let terms = [br(&u, &br(&v, &w)?)?, br(&v, &br(&w, &u)?)?, br(&w, &br(&u, &v)?)?];
        let jacobi = terms[0].add(&terms[1]).and_then(|s| s.add(&terms[2])).map_err(|e| e.to_string())?;
        if !jacobi.is_zero(&zt()).map_err(|e| e.to_string())? {
            return Err(format!("Jacobi identity fails for {u}, {v}, {w}"));
        }
        counts[3] += 1;
    }
    Ok(format!("d∘d {}, antisymmetry {}, antiderivation {}, Jacobi {}", counts[0], counts[1], counts[2], counts[3]))
}

fn criterion_7() -> Outcome {
    let opts = VerifyOptions { step: STEP, tolerance: MAX_DEVIATION, min_regular: MIN_REGULAR, ..VerifyOptions::default() };
    let mut lines = Vec::new();
    let mut sin_cert = None;
    for name in ["sin", "coupled"] {
        let cs = fixture(name);
        let (res, _) = decompose(&cs)?;
        let cert = certify(&cs, &res)?;
        let verdict = verify_flatness_numeric(&cert, &opts).map_err(|e| e.to_string())?;
        if !verdict.passed || verdict.max_deviation >= MAX_DEVIATION || verdict.regular_fraction < MIN_REGULAR {
            return Err(format!("{name}: {verdict:?}"));
        }
        lines.push(format!("{name} deviation {:.1e} regular {:.0}%", verdict.max_deviation, verdict.regular_fraction * 100.0));
        if name == "sin" {
            sin_cert = Some(cert);
        }
    }
    let cert = sin_cert.unwrap();
    let coords = cert.system.coordinates();
    let claimed = ["x3", "x2"].iter().map(|t| parse_expr(t, &coords).unwrap()).collect();
    let verdict = verify_flatness_numeric(&cert, &VerifyOptions { claimed: Some(claimed), ..opts }).map_err(|e| e.to_string())?;
    if verdict.passed {
        return Err("corrupted outputs (x3, x2) passed".into());
    }
    lines.push("(x3, x2) rejected".into());
    Ok(lines.join("; "))
}

fn report(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(args).unwrap();
    render_report(&run(&cli.command).report)
}

fn criterion_8() -> Outcome {
    let mut runs = 0;
    for name in ["sin", "coupled", "chain3"] {
        let path = common::fixture_path(name);
        let path = path.to_str().unwrap();
        for args in [vec!["flatdec", "analyze", path], vec!["flatdec", "decompose", path, "--verify", "--seed", "7"]] {
            if report(&args) != report(&args) {
                return Err(format!("reports differ for {}", args[1..].join(" ")));
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} invocations reproduced byte for byte"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("motivating example flat outputs", criterion_1),
        ("motivating example derived system", criterion_2),
        ("coupled example with dead end", criterion_3),
        ("Brunovsky consistency", criterion_4),
        ("vertical characteristic property", criterion_5),
        ("exterior calculus properties", criterion_6),
        ("independent numeric verification", criterion_7),
        ("deterministic reports", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
