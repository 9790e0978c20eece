//! Truncated Taylor series arithmetic and compiled expression tapes.

use std::collections::HashMap;

use crate::symexpr::{Expr, Func, Node, Symbol};

/// Taylor coefficients `c_0 + c_1 h + c_2 h^2 + …` of a function around a point.
pub type Jet = Vec<f64>;

/// Jet of the time variable itself at `t`.
pub fn time_jet(t: f64, len: usize) -> Jet {
    let mut j = vec![0.0; len];
    j[0] = t;
    if len > 1 {
        j[1] = 1.0;
    }
    j
}

/// Coefficients of the time derivative, one order shorter.
pub fn derivative(a: &[f64]) -> Jet {
    a.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

fn mul(a: &[f64], b: &[f64]) -> Jet {
    let n = a.len();
    (0..n).map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum()).collect()
}

fn div(a: &[f64], b: &[f64]) -> Jet {
    let n = a.len();
    let mut c = vec![0.0; n];
    for k in 0..n {
        let s: f64 = (1..=k).map(|j| b[j] * c[k - j]).sum();
        c[k] = (a[k] - s) / b[0];
    }
    c
}

fn powi(a: &[f64], e: i64) -> Jet {
    let mut result = vec![0.0; a.len()];
    result[0] = 1.0;
    let mut base = a.to_vec();
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            result = mul(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = mul(&base, &base);
        }
    }
    if e < 0 {
        let mut one = vec![0.0; a.len()];
        one[0] = 1.0;
        div(&one, &result)
    } else {
        result
    }
}

fn exp(a: &[f64]) -> Jet {
    let n = a.len();
    let mut e = vec![0.0; n];
    e[0] = a[0].exp();
    for k in 1..n {
        e[k] = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum::<f64>() / k as f64;
    }
    e
}

fn ln(a: &[f64]) -> Jet {
    let n = a.len();
    let mut l = vec![0.0; n];
    l[0] = a[0].ln();
    for k in 1..n {
        let s: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
        l[k] = (a[k] - s / k as f64) / a[0];
    }
    l
}

fn sin_cos(a: &[f64]) -> (Jet, Jet) {
    let n = a.len();
    let (mut s, mut c) = (vec![0.0; n], vec![0.0; n]);
    s[0] = a[0].sin();
    c[0] = a[0].cos();
    for k in 1..n {
        let kf = k as f64;
        s[k] = (1..=k).map(|j| j as f64 * a[j] * c[k - j]).sum::<f64>() / kf;
        c[k] = -(1..=k).map(|j| j as f64 * a[j] * s[k - j]).sum::<f64>() / kf;
    }
    (s, c)
}

fn sqrt(a: &[f64]) -> Jet {
    let n = a.len();
    let mut r = vec![0.0; n];
    r[0] = a[0].sqrt();
    for k in 1..n {
        let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
        r[k] = (a[k] - s) / (2.0 * r[0]);
    }
    r
}

/// `f(a)` from `f(a_0)` and the jet of `f'(a)·ȧ`.
fn integrate(value: f64, rate: &[f64], len: usize) -> Jet {
    let mut out = vec![0.0; len];
    out[0] = value;
    for k in 1..len {
        out[k] = rate[k - 1] / k as f64;
    }
    out
}

fn func(f: Func, a: &[f64]) -> Jet {
    let n = a.len();
    match f {
        Func::Sin => sin_cos(a).0,
        Func::Cos => sin_cos(a).1,
        Func::Tan => {
            let (s, c) = sin_cos(a);
            div(&s, &c)
        }
        Func::Exp => exp(a),
        Func::Ln => ln(a),
        Func::Sqrt => sqrt(a),
        Func::Arcsin | Func::Arctan => {
            let value = if f == Func::Arcsin { a[0].asin() } else { a[0].atan() };
            if n == 1 {
                return vec![value];
            }
            let da = derivative(a);
            let short = &a[..n - 1];
            let sq = mul(short, short);
            let denom: Jet = if f == Func::Arcsin {
                sqrt(&sq.iter().enumerate().map(|(k, v)| if k == 0 { 1.0 - v } else { -v }).collect::<Jet>())
            } else {
                sq.iter().enumerate().map(|(k, v)| if k == 0 { 1.0 + v } else { *v }).collect()
            };
            integrate(value, &div(&da, &denom), n)
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Input(usize),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    Pow(usize, i64),
    Func(Func, usize),
}

/// A list of expressions compiled to a shared straight-line program.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    n_inputs: usize,
}

impl Tape {
    /// Compiles `exprs` over the input slots `inputs`; other symbols are rejected.
    pub fn compile(exprs: &[Expr], inputs: &[Symbol]) -> Result<Tape, Symbol> {
        let slots: HashMap<&Symbol, usize> = inputs.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut tape = Tape { ops: Vec::new(), outputs: Vec::new(), n_inputs: inputs.len() };
        let mut seen: HashMap<Expr, usize> = HashMap::new();
        for e in exprs {
            let out = tape.push(e, &slots, &mut seen)?;
            tape.outputs.push(out);
        }
        Ok(tape)
    }

    fn push(&mut self, e: &Expr, slots: &HashMap<&Symbol, usize>, seen: &mut HashMap<Expr, usize>) -> Result<usize, Symbol> {
        if let Some(&i) = seen.get(e) {
            return Ok(i);
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(c.to_f64()),
            Node::Var(s) => Op::Input(*slots.get(s).ok_or_else(|| s.clone())?),
            Node::Add(xs) => Op::Add(xs.iter().map(|x| self.push(x, slots, seen)).collect::<Result<_, _>>()?),
            Node::Mul(xs) => Op::Mul(xs.iter().map(|x| self.push(x, slots, seen)).collect::<Result<_, _>>()?),
            Node::Pow(b, n) => Op::Pow(self.push(b, slots, seen)?, *n),
            Node::Func(f, a) => Op::Func(*f, self.push(a, slots, seen)?),
        };
        self.ops.push(op);
        let i = self.ops.len() - 1;
        seen.insert(e.clone(), i);
        Ok(i)
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates all outputs on jets of a common length.
    pub fn eval_jets(&self, inputs: &[Jet]) -> Vec<Jet> {
        assert_eq!(inputs.len(), self.n_inputs, "one jet per input slot");
        let len = inputs.first().map_or(1, Vec::len);
        let mut vals: Vec<Jet> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => {
                    let mut j = vec![0.0; len];
                    j[0] = *c;
                    j
                }
                Op::Input(i) => inputs[*i].clone(),
                Op::Add(xs) => {
                    let mut acc = vec![0.0; len];
                    for &x in xs {
                        acc.iter_mut().zip(&vals[x]).for_each(|(a, b)| *a += b);
                    }
                    acc
                }
                Op::Mul(xs) => xs[1..].iter().fold(vals[xs[0]].clone(), |acc, &x| mul(&acc, &vals[x])),
                Op::Pow(b, n) => powi(&vals[*b], *n),
                Op::Func(f, a) => func(*f, &vals[*a]),
            };
            vals.push(v);
        }
        self.outputs.iter().map(|&o| vals[o].clone()).collect()
    }

    /// Evaluates all outputs at a point.
    pub fn eval(&self, inputs: &[f64]) -> Vec<f64> {
        let jets: Vec<Jet> = inputs.iter().map(|&v| vec![v]).collect();
        self.eval_jets(&jets).into_iter().map(|j| j[0]).collect()
    }
}
