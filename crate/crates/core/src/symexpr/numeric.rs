//! High-precision evaluation and the probabilistic zero test.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::ops::Pow;
use rug::{Float, Rational};
use thiserror::Error;

use super::{Expr, Func, Node, Symbol};

/// Working precision of numeric evaluation, in bits.
pub const PRECISION: u32 = 256;

/// Values whose magnitude is below this threshold are treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-40;

/// Bases smaller than this cannot be inverted.
const SINGULAR_THRESHOLD: f64 = 1e-60;

pub type Point = HashMap<Symbol, Float>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound symbol {0}")]
    Unbound(String),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ZeroTestError {
    #[error("no valid sample point found for {expr} within {attempts} attempts")]
    EvaluationFailed { expr: String, attempts: usize },
}

/// Deterministic source of random rational sample points in [1/2, 2].
///
/// The value of a symbol at sample `index` depends only on the seed, the
/// symbol name and the index, so independent expressions evaluated at the
/// same index see a consistent point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampler {
    pub seed: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { seed }
    }

    pub fn rational(&self, symbol: &Symbol, index: usize) -> Rational {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in symbol.name().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ h);
        rng.set_stream(index as u64);
        let k: i64 = rng.gen_range((1i64 << 19)..=(1i64 << 21));
        Rational::from((k, 1i64 << 20))
    }

    pub fn value(&self, symbol: &Symbol, index: usize) -> Float {
        Float::with_val(PRECISION, self.rational(symbol, index))
    }

    /// Sample point covering the given symbols.
    pub fn point<'a, I: IntoIterator<Item = &'a Symbol>>(&self, symbols: I, index: usize) -> Point {
        symbols.into_iter().map(|s| (s.clone(), self.value(s, index))).collect()
    }
}

/// Parameters of the probabilistic zero test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroTest {
    pub samples: usize,
    pub seed: u64,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { samples: 20, seed: 0 }
    }
}

impl ZeroTest {
    pub fn new(samples: usize, seed: u64) -> Self {
        ZeroTest { samples, seed }
    }

    pub fn sampler(&self) -> Sampler {
        Sampler::new(self.seed)
    }

    pub fn max_attempts(&self) -> usize {
        10 * self.samples.max(1)
    }
}

pub(crate) fn is_negligible(x: &Float) -> bool {
    x.clone().abs() < ZERO_THRESHOLD
}

/// Zero decision relative to a magnitude `scale` (at least 1).
pub fn is_negligible_rel(x: &Float, scale: &Float) -> bool {
    let bound = Float::with_val(PRECISION, scale * ZERO_THRESHOLD);
    x.clone().abs() < bound
}

fn domain(msg: &str) -> EvalError {
    EvalError::Domain(msg.to_string())
}

impl Expr {
    /// Evaluates at a point with [`PRECISION`] bits.
    pub fn eval(&self, point: &Point) -> Result<Float, EvalError> {
        let mut memo = HashMap::new();
        self.eval_memo(point, &mut memo)
    }

    /// Evaluates at sample `index` of `sampler`.
    pub fn eval_sample(&self, sampler: &Sampler, index: usize) -> Result<Float, EvalError> {
        let syms = self.free_symbols();
        self.eval(&sampler.point(&syms, index))
    }

    pub(crate) fn eval_memo(&self, point: &Point, memo: &mut HashMap<usize, Float>) -> Result<Float, EvalError> {
        let key = std::sync::Arc::as_ptr(&self.0) as usize;
        match self.node() {
            Node::Const(c) => return Ok(Float::with_val(PRECISION, c)),
            Node::Var(s) => {
                return point.get(s).cloned().ok_or_else(|| EvalError::Unbound(s.name().to_string()));
            }
            _ => {}
        }
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let v = match self.node() {
            Node::Const(_) | Node::Var(_) => unreachable!(),
            Node::Add(ts) => {
                let mut acc = Float::with_val(PRECISION, 0);
                for t in ts {
                    acc += t.eval_memo(point, memo)?;
                }
                acc
            }
            Node::Mul(fs) => {
                let mut acc = Float::with_val(PRECISION, 1);
                for f in fs {
                    acc *= f.eval_memo(point, memo)?;
                }
                acc
            }
            Node::Pow(b, n) => {
                let base = b.eval_memo(point, memo)?;
                if *n < 0 && base.clone().abs() < SINGULAR_THRESHOLD {
                    return Err(domain("division by zero"));
                }
                let k = i32::try_from(*n).map_err(|_| domain("exponent out of range"))?;
                base.pow(k)
            }
            Node::Func(f, a) => {
                let x = a.eval_memo(point, memo)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        if x.clone().cos().abs() < SINGULAR_THRESHOLD {
                            return Err(domain("tan pole"));
                        }
                        x.tan()
                    }
                    Func::Exp => x.exp(),
                    Func::Ln => {
                        if x <= 0 {
                            return Err(domain("ln of non-positive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0 {
                            return Err(domain("sqrt of negative value"));
                        }
                        x.sqrt()
                    }
                    Func::Arcsin => {
                        if x.clone().abs() > 1 {
                            return Err(domain("arcsin outside [-1, 1]"));
                        }
                        x.asin()
                    }
                    Func::Arctan => x.atan(),
                }
            }
        };
        if !v.is_finite() {
            return Err(domain("non-finite value"));
        }
        memo.insert(key, v.clone());
        Ok(v)
    }

    /// Probabilistic zero test.
    ///
    /// Evaluates at `zt.samples` random points; any value of magnitude at least
    /// [`ZERO_THRESHOLD`] proves non-zero. Points with domain errors are
    /// resampled, up to ten times the budget.
    pub fn is_zero(&self, zt: &ZeroTest) -> Result<bool, ZeroTestError> {
        if let Some(c) = self.as_const() {
            return Ok(*c == 0);
        }
        let sampler = zt.sampler();
        let syms = self.free_symbols();
        let mut valid = 0;
        let mut attempt = 0;
        while valid < zt.samples && attempt < zt.max_attempts() {
            let point = sampler.point(&syms, attempt);
            attempt += 1;
            match self.eval(&point) {
                Ok(v) => {
                    valid += 1;
                    if !is_negligible(&v) {
                        return Ok(false);
                    }
                }
                Err(_) => continue,
            }
        }
        if valid == 0 {
            return Err(ZeroTestError::EvaluationFailed { expr: self.to_string(), attempts: attempt });
        }
        Ok(true)
    }

    /// Zero test that treats evaluation failure as "not provably zero".
    pub fn is_zero_or_false(&self, zt: &ZeroTest) -> bool {
        self.is_zero(zt).unwrap_or(false)
    }

    /// Evaluates in double precision.
    pub fn eval_f64(&self, point: &HashMap<Symbol, f64>) -> Result<f64, EvalError> {
        let p: Point = point.iter().map(|(s, v)| (s.clone(), Float::with_val(PRECISION, *v))).collect();
        self.eval(&p).map(|v| v.to_f64())
    }
}
