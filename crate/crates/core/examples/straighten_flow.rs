//! Straighten the flow of a vector field: find coordinates in which it
//! becomes a coordinate field, and check the result.

use flatdec::exterior::{straighten_flow, Chart, VectorField};
use flatdec::symexpr::{Symbol, ZeroTest};
use flatdec::sysdsl::{parse_expr, render_expr};

fn main() {
    let zt = ZeroTest::default();
    let coords = vec![Symbol::state("x1"), Symbol::state("x2"), Symbol::input("u1"), Symbol::input("u2")];
    let chart = Chart::new(coords, Some(Symbol::time("t"))).unwrap();
    let e = |text: &str| parse_expr(text, &chart.symbols()).unwrap();

    let fields = [
        VectorField::new(&chart, vec![e("0"), e("0"), e("u1"), e("u2"), e("0")]),
        VectorField::new(&chart, vec![e("u2"), e("1"), e("0"), e("0"), e("0")]),
    ];
    for v in &fields {
        let st = straighten_flow(v, &zt).unwrap();
        println!("field {v}");
        println!("  flow parameter {} replaces {}", st.param, st.dropped);
        let t = &st.transform;
        for (s, f) in t.target().coords().iter().zip(t.forward()) {
            println!("  {s} = {}", render_expr(f));
        }
        t.verify(&zt).unwrap();
        println!("  pulled back: {}", t.pullback_field(v).unwrap());
    }
}
