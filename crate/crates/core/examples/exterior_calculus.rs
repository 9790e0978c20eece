//! Wedge products, exterior derivatives, contractions and Lie brackets on a
//! small chart.

use flatdec::exterior::{contract, d, lie_bracket, wedge, Chart, KForm, VectorField};
use flatdec::symexpr::{Symbol, ZeroTest};
use flatdec::sysdsl::parse_expr;

fn main() {
    let zt = ZeroTest::default();
    let (x, y, z) = (Symbol::state("x"), Symbol::state("y"), Symbol::state("z"));
    let chart = Chart::new(vec![x.clone(), y.clone(), z.clone()], None).unwrap();
    let e = |text: &str| parse_expr(text, &chart.symbols()).unwrap();

    let alpha = KForm::one_form(&chart, &[e("y*z"), e("x"), e("0")]);
    let beta = KForm::one_form(&chart, &[e("0"), e("sin(x)"), e("1")]);
    println!("alpha = {alpha}");
    println!("beta = {beta}");
    println!("alpha ^ beta = {}", wedge(&alpha, &beta).unwrap());
    println!("d alpha = {}", d(&alpha));
    println!("d d alpha is zero: {}", d(&d(&alpha)).is_zero(&zt).unwrap());

    let v = VectorField::new(&chart, vec![e("1"), e("z"), e("-y")]);
    let w = VectorField::new(&chart, vec![e("x*y"), e("0"), e("1")]);
    println!("v = {v}");
    println!("v _| (alpha ^ beta) = {}", contract(&v, &wedge(&alpha, &beta).unwrap()).unwrap());
    println!("[v, w] = {}", lie_bracket(&v, &w).unwrap());

    let dx = KForm::differential(&chart, &x).unwrap();
    let dy = KForm::differential(&chart, &y).unwrap();
    let area = wedge(&dx, &dy).unwrap();
    println!("dx ^ dy + dy ^ dx is zero: {}", area.add(&wedge(&dy, &dx).unwrap()).unwrap().is_zero(&zt).unwrap());
}
