//! Search for an implicit triangular decomposition, print the splittings and
//! the branch log, and read off flat outputs.

use flatdec::decompose::{run_decomposition, AnsatzConfig, Status};
use flatdec::symexpr::ZeroTest;
use flatdec::sysdsl::parse_system;
use flatdec::triangular::{extract_flat_output, TriangularDecomposition};

fn main() {
    let zt = ZeroTest::default();
    let cs = parse_system(include_str!("../fixtures/coupled.fds")).unwrap();
    let res = run_decomposition(&cs, &AnsatzConfig::default()).unwrap();
    println!("status: {:?}", res.status);
    for record in &res.branch_log {
        println!("branch {} at level {} via {:?}: {:?}", record.id, record.level, record.source, record.outcome);
        println!("  F = {{{}}}", record.fields.join(", "));
    }
    for sp in &res.sequence {
        println!("level {}: F = {}", sp.level, sp.f);
        println!("  S_next = {}", sp.s_next);
        println!("  S_comp = {}", sp.s_comp);
    }
    if res.status != Status::Triangularized {
        return;
    }
    let td = TriangularDecomposition::from_sequence(&res.sequence, &zt).unwrap();
    for i in 1..=td.n_b() {
        for eq in td.equations(i) {
            println!("Xi{i}: {eq}");
        }
    }
    for item in &td.validate(&zt).unwrap().items {
        println!("[{}] {}", if item.passed { "ok" } else { "FAIL" }, item.name);
    }
    let cert = extract_flat_output(&td, &cs, &zt).unwrap();
    let outputs: Vec<String> = cert.outputs.iter().map(|o| o.to_string()).collect();
    println!("flat outputs ({}): {}", cert.order, outputs.join(", "));
}
