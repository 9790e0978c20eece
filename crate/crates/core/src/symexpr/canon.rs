//! Canonicalizing constructors.

use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Integer, Rational};

use super::{Expr, Func, Node};

/// Sums or powers larger than this many terms are left unexpanded.
const EXPANSION_LIMIT: usize = 4096;

pub(super) fn split_coefficient(e: &Expr) -> (Rational, Expr) {
    match e.node() {
        Node::Const(c) => (c.clone(), Expr::one()),
        Node::Mul(fs) => match fs[0].node() {
            Node::Const(c) => {
                let rest = if fs.len() == 2 {
                    fs[1].clone()
                } else {
                    Expr::raw(Node::Mul(fs[1..].to_vec()))
                };
                (c.clone(), rest)
            }
            _ => (Rational::from(1), e.clone()),
        },
        _ => (Rational::from(1), e.clone()),
    }
}

fn with_coefficient(c: Rational, mono: Expr) -> Expr {
    if c == 1 {
        return mono;
    }
    match mono.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::constant(c));
            v.extend(fs.iter().cloned());
            Expr::raw(Node::Mul(v))
        }
        _ => Expr::raw(Node::Mul(vec![Expr::constant(c), mono])),
    }
}

pub(super) fn add(terms: Vec<Expr>) -> Expr {
    let mut constant = Rational::new();
    let mut monomials: BTreeMap<Expr, Rational> = BTreeMap::new();
    let mut absorb = |t: &Expr, constant: &mut Rational| match t.node() {
        Node::Const(c) => *constant += c,
        _ => {
            let (c, m) = split_coefficient(t);
            *monomials.entry(m).or_default() += c;
        }
    };
    for t in &terms {
        match t.node() {
            Node::Add(ts) => ts.iter().for_each(|x| absorb(x, &mut constant)),
            _ => absorb(t, &mut constant),
        }
    }
    let mut out = Vec::with_capacity(monomials.len() + 1);
    if constant != 0 {
        out.push(Expr::constant(constant));
    }
    for (m, c) in monomials {
        if c != 0 {
            out.push(with_coefficient(c, m));
        }
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::raw(Node::Add(out)),
    }
}

pub(super) fn neg(e: Expr) -> Expr {
    mul(vec![Expr::int(-1), e])
}

fn build_product(coef: Rational, factors: Vec<Expr>) -> Expr {
    if coef == 0 {
        return Expr::zero();
    }
    match (factors.len(), coef == 1) {
        (0, _) => Expr::constant(coef),
        (1, true) => factors.into_iter().next().unwrap(),
        (_, true) => Expr::raw(Node::Mul(factors)),
        _ => {
            let mut v = Vec::with_capacity(factors.len() + 1);
            v.push(Expr::constant(coef));
            v.extend(factors);
            Expr::raw(Node::Mul(v))
        }
    }
}

pub(super) fn mul(factors: Vec<Expr>) -> Expr {
    let mut coef = Rational::from(1);
    let mut powers: BTreeMap<Expr, i64> = BTreeMap::new();
    let mut pending = factors;
    while let Some(f) = pending.pop() {
        match f.node() {
            Node::Const(c) => coef *= c,
            Node::Mul(fs) => pending.extend(fs.iter().cloned()),
            Node::Pow(b, n) => {
                let e = powers.entry(b.clone()).or_insert(0);
                *e = e.saturating_add(*n);
            }
            _ => *powers.entry(f.clone()).or_insert(0) += 1,
        }
    }
    if coef == 0 {
        return Expr::zero();
    }
    let mut simple = Vec::new();
    let mut redo = Vec::new();
    let mut sums = Vec::new();
    for (base, n) in powers {
        if n == 0 {
            continue;
        }
        let p = pow(base.clone(), n);
        match p.node() {
            Node::Const(c) => coef *= c,
            Node::Add(_) => sums.push(p),
            Node::Mul(_) => redo.push(p),
            Node::Pow(b, _) if *b == base => simple.push(p),
            _ if p == base => simple.push(p),
            _ => redo.push(p),
        }
    }
    if coef == 0 {
        return Expr::zero();
    }
    if !redo.is_empty() {
        let mut all = simple;
        all.extend(redo);
        all.extend(sums);
        all.push(Expr::constant(coef));
        return mul(all);
    }
    let product = build_product(coef, simple);
    if sums.is_empty() {
        return product;
    }
    let total: usize = sums.iter().map(|s| s.terms().len()).product();
    if total > EXPANSION_LIMIT {
        // Too large to expand: keep the sums as opaque factors.
        let mut fs = match product.node() {
            Node::Mul(fs) => fs.clone(),
            _ if product.is_one() => Vec::new(),
            _ => vec![product.clone()],
        };
        fs.extend(sums);
        fs.sort_by(|a, b| factor_base(a).cmp(factor_base(b)));
        return Expr::raw(Node::Mul(fs));
    }
    let mut terms = vec![product];
    for s in sums {
        let parts = s.terms();
        let mut next = Vec::with_capacity(terms.len() * parts.len());
        for t in &terms {
            for p in &parts {
                next.push(mul(vec![t.clone(), p.clone()]));
            }
        }
        terms = next;
    }
    add(terms)
}

fn expand_product(a: &Expr, b: &Expr) -> Expr {
    let (ta, tb) = (a.terms(), b.terms());
    let mut out = Vec::with_capacity(ta.len() * tb.len());
    for x in &ta {
        for y in &tb {
            out.push(mul(vec![x.clone(), y.clone()]));
        }
    }
    add(out)
}

fn factor_base(e: &Expr) -> &Expr {
    match e.node() {
        Node::Pow(b, _) => b,
        _ => e,
    }
}

/// Rational content of a sum, signed so that the leading term of the primitive part is positive.
fn sum_content(terms: &[Expr]) -> Rational {
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for t in terms {
        let (c, _) = split_coefficient(t);
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    let mut content = Rational::from((num, den));
    if is_negative_form(&terms[0]) {
        content = -content;
    }
    content
}

pub(super) fn pow(base: Expr, n: i64) -> Expr {
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return base;
    }
    match base.node() {
        Node::Const(c) => {
            if *c == 0 {
                if n > 0 {
                    Expr::zero()
                } else {
                    Expr::raw(Node::Pow(base.clone(), n))
                }
            } else {
                match i32::try_from(n) {
                    Ok(k) => Expr::constant(c.clone().pow(k)),
                    Err(_) => Expr::raw(Node::Pow(base.clone(), n)),
                }
            }
        }
        Node::Pow(b, m) => match m.checked_mul(n) {
            Some(k) => pow(b.clone(), k),
            None => Expr::raw(Node::Pow(base.clone(), n)),
        },
        Node::Mul(fs) => mul(fs.iter().map(|f| pow(f.clone(), n)).collect()),
        Node::Add(ts) => {
            if n > 0 {
                let estimate = ts.len().checked_pow(n.min(64) as u32).unwrap_or(usize::MAX);
                if estimate > EXPANSION_LIMIT * 4 {
                    return Expr::raw(Node::Pow(base.clone(), n));
                }
                let mut acc = base.clone();
                for _ in 1..n {
                    acc = expand_product(&acc, &base);
                }
                acc
            } else {
                let content = sum_content(ts);
                if content == 1 {
                    Expr::raw(Node::Pow(base.clone(), n))
                } else {
                    let inv = Rational::from(1) / &content;
                    let prim = add(ts.iter().map(|t| mul(vec![Expr::constant(inv.clone()), t.clone()])).collect());
                    mul(vec![pow(Expr::constant(content), n), Expr::raw(Node::Pow(prim, n))])
                }
            }
        }
        Node::Func(Func::Sqrt, x) if n.abs() >= 2 => {
            if n % 2 == 0 {
                pow(x.clone(), n / 2)
            } else {
                let r = n.signum();
                mul(vec![pow(x.clone(), (n - r) / 2), pow(base.clone(), r)])
            }
        }
        _ => Expr::raw(Node::Pow(base, n)),
    }
}

pub(super) fn is_negative_form(e: &Expr) -> bool {
    match e.node() {
        Node::Const(c) => *c < 0,
        Node::Mul(fs) => matches!(fs[0].node(), Node::Const(c) if *c < 0),
        Node::Add(ts) => is_negative_form(&ts[0]),
        _ => false,
    }
}

fn perfect_square_root(c: &Rational) -> Option<Rational> {
    if *c < 0 {
        return None;
    }
    let (n, d) = (c.numer(), c.denom());
    if n.is_perfect_square() && d.is_perfect_square() {
        Some(Rational::from((n.clone().sqrt(), d.clone().sqrt())))
    } else {
        None
    }
}

pub(super) fn func(f: Func, arg: Expr) -> Expr {
    let raw = |a: Expr| Expr::raw(Node::Func(f, a));
    if let Node::Const(c) = arg.node() {
        if *c == 0 {
            match f {
                Func::Sin | Func::Tan | Func::Arcsin | Func::Arctan | Func::Sqrt => return Expr::zero(),
                Func::Cos | Func::Exp => return Expr::one(),
                Func::Ln => {}
            }
        }
        if f == Func::Ln && *c == 1 {
            return Expr::zero();
        }
        if f == Func::Sqrt {
            if let Some(r) = perfect_square_root(c) {
                return Expr::constant(r);
            }
        }
    }
    match f {
        Func::Exp => match arg.node() {
            Node::Add(ts) => mul(ts.iter().map(|t| func(Func::Exp, t.clone())).collect()),
            Node::Func(Func::Ln, x) => x.clone(),
            _ => {
                let (c, m) = split_coefficient(&arg);
                if !m.is_one() && c != 1 && *c.denom() == 1 {
                    if let Some(k) = c.numer().to_i64() {
                        return pow(func(Func::Exp, m), k);
                    }
                }
                raw(arg)
            }
        },
        Func::Ln => match arg.node() {
            Node::Func(Func::Exp, x) => x.clone(),
            Node::Pow(b, k) => match b.node() {
                Node::Func(Func::Exp, x) => mul(vec![Expr::int(*k), x.clone()]),
                _ => raw(arg),
            },
            _ => raw(arg),
        },
        Func::Cos => {
            if is_negative_form(&arg) {
                raw(neg(arg))
            } else {
                raw(arg)
            }
        }
        _ if f.is_odd() && is_negative_form(&arg) => neg(func(f, neg(arg))),
        _ => raw(arg),
    }
}
