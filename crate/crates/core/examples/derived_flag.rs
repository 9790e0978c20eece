//! Pfaffian representation of a control system, its derived flag and the
//! vertical annihilator.

use flatdec::pfaffian::PfaffianSystem;
use flatdec::symexpr::ZeroTest;
use flatdec::sysdsl::parse_system;

const SYSTEMS: [&str; 2] = [include_str!("../fixtures/sin.fds"), include_str!("../fixtures/chain4.fds")];

fn main() {
    let zt = ZeroTest::default();
    for source in SYSTEMS {
        let cs = parse_system(source).unwrap();
        let s0 = PfaffianSystem::from_control_system(&cs);
        println!("system {}", cs.name);
        println!("  S0 = {s0}");
        println!("  vertical annihilator = {}", s0.vertical_annihilator(&zt).unwrap());
        for (k, s) in s0.derived_flag(&zt).unwrap().iter().enumerate().skip(1) {
            let integrable = s.is_integrable_with_dt(&zt).unwrap();
            println!("  S^({k}) = {s}  (integrable with dt: {integrable})");
        }
    }
}
