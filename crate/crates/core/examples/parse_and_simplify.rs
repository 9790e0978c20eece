//! Parse a control system and a few expressions, then differentiate and
//! compare them with the probabilistic zero test.

use flatdec::symexpr::ZeroTest;
use flatdec::sysdsl::{parse_expr, parse_system, render_expr};

const SOURCE: &str = "
system sin_ratio {
  states: x1, x2, x3;
  inputs: u1, u2;
  dot(x1) = u1;
  dot(x2) = u2;
  dot(x3) = sin(u1/u2);
}
";

fn main() {
    let cs = parse_system(SOURCE).expect("system parses");
    println!("{} with {} states and {} inputs", cs.name, cs.n_states(), cs.n_inputs());
    for (x, f) in cs.states.iter().zip(&cs.dynamics) {
        println!("  dot({x}) = {}", render_expr(f));
    }

    let coords = cs.coordinates();
    let y = parse_expr("x2 - x1*u2/u1", &coords).unwrap();
    println!("y = {}", render_expr(&y));
    for s in &coords {
        let dy = y.diff(s);
        if !dy.is_structurally_zero() {
            println!("  d/d{s} y = {}", render_expr(&dy));
        }
    }

    let zt = ZeroTest::default();
    let lhs = parse_expr("sin(u1)^2 + cos(u1)^2", &coords).unwrap();
    let rhs = parse_expr("1", &coords).unwrap();
    println!("sin^2 + cos^2 - 1 is zero: {}", (&lhs - &rhs).is_zero(&zt).unwrap());
    let e = parse_expr("exp(ln(x1) + ln(x2)) - x1*x2", &coords).unwrap();
    println!("exp(ln x1 + ln x2) - x1*x2 is zero: {}", e.is_zero(&zt).unwrap());
}
