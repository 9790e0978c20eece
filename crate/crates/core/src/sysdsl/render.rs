//! Rendering of expressions in the DSL syntax; `parse_expr(render(e))` reproduces `e`.

use rug::Rational;

use crate::symexpr::{Expr, Node};

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

/// Renders an expression in the textual syntax accepted by [`super::parse_expr`].
pub fn render_expr(e: &Expr) -> String {
    render(e).0
}

fn wrap(s: (String, u8), min: u8) -> String {
    if s.1 < min {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn render_rational(c: &Rational) -> (String, u8) {
    let neg = *c < 0;
    let abs = c.clone().abs();
    let body = if *abs.denom() == 1 {
        (abs.numer().to_string(), PREC_ATOM)
    } else {
        (format!("{}/{}", abs.numer(), abs.denom()), PREC_MUL)
    };
    if neg {
        (format!("-{}", wrap(body, PREC_MUL)), PREC_NEG)
    } else {
        body
    }
}

/// Display degree of a term: total absolute exponent of its factors.
fn degree(e: &Expr) -> i64 {
    e.factor_powers().iter().map(|(_, n)| n.abs()).sum()
}

fn render(e: &Expr) -> (String, u8) {
    match e.node() {
        Node::Const(c) => render_rational(c),
        Node::Var(s) => (s.name().to_string(), PREC_ATOM),
        Node::Func(f, a) => (format!("{}({})", f.name(), render(a).0), PREC_ATOM),
        Node::Pow(b, n) => {
            if *n > 0 {
                (format!("{}^{}", wrap(render(b), PREC_ATOM), n), PREC_POW)
            } else {
                render_product(&Rational::from(1), &[], &[(b.clone(), -n)])
            }
        }
        Node::Mul(_) => {
            let (c, _) = e.split_coefficient();
            let mut num = Vec::new();
            let mut den = Vec::new();
            for (b, n) in e.factor_powers() {
                if n > 0 {
                    num.push((b, n));
                } else {
                    den.push((b, -n));
                }
            }
            render_product(&c, &num, &den)
        }
        Node::Add(ts) => {
            let mut terms: Vec<&Expr> = ts.iter().collect();
            terms.sort_by(|a, b| {
                a.is_const()
                    .cmp(&b.is_const())
                    .then_with(|| degree(a).cmp(&degree(b)))
                    .then_with(|| a.cmp(b))
            });
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                if i == 0 {
                    out.push_str(&wrap(render(t), PREC_MUL));
                } else if t.has_negative_sign() {
                    out.push_str(" - ");
                    out.push_str(&wrap(render(&-*t), PREC_MUL));
                } else {
                    out.push_str(" + ");
                    out.push_str(&wrap(render(t), PREC_MUL));
                }
            }
            (out, PREC_ADD)
        }
    }
}

fn render_power(b: &Expr, n: i64) -> (String, u8) {
    if n == 1 {
        render(b)
    } else {
        (format!("{}^{}", wrap(render(b), PREC_ATOM), n), PREC_POW)
    }
}

fn render_product(c: &Rational, num: &[(Expr, i64)], den: &[(Expr, i64)]) -> (String, u8) {
    let neg = *c < 0;
    let abs = c.clone().abs();
    let mut num_parts: Vec<String> = Vec::new();
    if *abs.numer() != 1 || num.is_empty() {
        num_parts.push(abs.numer().to_string());
    }
    for (b, n) in num {
        num_parts.push(wrap(render_power(b, *n), PREC_POW));
    }
    // A reciprocal power of a sum cannot be written as a denominator power:
    // reparsing would expand the sum first.
    let (den_sums, den): (Vec<_>, Vec<_>) =
        den.iter().partition(|(b, n)| *n >= 2 && matches!(b.node(), Node::Add(_)));
    for (b, n) in &den_sums {
        num_parts.push(format!("({})^-{}", render(b).0, n));
    }
    if num_parts.first().is_some_and(|p| p == "1") && !den_sums.is_empty() {
        num_parts.remove(0);
    }
    let mut den_parts: Vec<(String, u8)> = Vec::new();
    if *abs.denom() != 1 {
        den_parts.push((abs.denom().to_string(), PREC_ATOM));
    }
    for (b, n) in &den {
        den_parts.push(render_power(b, *n));
    }
    let mut s = num_parts.join("*");
    match den_parts.len() {
        0 => {}
        1 => {
            s.push('/');
            s.push_str(&wrap(den_parts.pop().unwrap(), PREC_POW));
        }
        _ => {
            let inner: Vec<String> = den_parts.into_iter().map(|d| wrap(d, PREC_POW)).collect();
            s.push_str(&format!("/({})", inner.join("*")));
        }
    }
    let prec = if num.len() + den.len() + den_sums.len() == 1 && num.len() == 1 && *abs.numer() == 1 && *abs.denom() == 1 {
        render_power(&num[0].0, num[0].1).1
    } else {
        PREC_MUL
    };
    if neg {
        (format!("-{}", wrap((s, prec), PREC_MUL)), PREC_NEG)
    } else {
        (s, prec)
    }
}
