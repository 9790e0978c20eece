//! Symbolic expressions over exact rationals with a canonical sum-of-products form.
//!
//! Every [`Expr`] is built through smart constructors that keep it canonical:
//! sums are flattened and like terms collected, products are flattened with
//! powers of equal bases merged, positive integer powers of sums are expanded,
//! and a handful of elementary-function identities are applied. Structural
//! equality of canonical expressions is therefore a cheap sufficient test for
//! semantic equality; the probabilistic [`Expr::is_zero`] is the complete one.

mod calculus;
mod canon;
mod numeric;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rug::Rational;

pub use numeric::{is_negligible_rel, EvalError, Point, Sampler, ZeroTest, ZeroTestError, PRECISION, ZERO_THRESHOLD};

/// Role of a symbol inside a control system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    State,
    Input,
    Time,
    Auxiliary,
    AnsatzCoefficient,
}

/// A named symbol. Equality, hashing and ordering use the name only.
#[derive(Clone)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn new(name: &str, kind: SymbolKind) -> Self {
        Symbol { name: Arc::from(name), kind }
    }

    pub fn state(name: &str) -> Self {
        Self::new(name, SymbolKind::State)
    }

    pub fn input(name: &str) -> Self {
        Self::new(name, SymbolKind::Input)
    }

    pub fn time(name: &str) -> Self {
        Self::new(name, SymbolKind::Time)
    }

    pub fn aux(name: &str) -> Self {
        Self::new(name, SymbolKind::Auxiliary)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn with_kind(&self, kind: SymbolKind) -> Self {
        Symbol { name: self.name.clone(), kind }
    }

    /// Sort key: trailing decimal index first, then the alphabetic prefix.
    fn sort_key(&self) -> (Option<u64>, &str, &str) {
        let name: &str = &self.name;
        let split = name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let index = name[split..].parse::<u64>().ok();
        (index, &name[..split], name)
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for Symbol {}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Elementary functions of one argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Arcsin,
    Arctan,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Arcsin,
        Func::Arctan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Arcsin => "arcsin",
            Func::Arctan => "arctan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn is_odd(self) -> bool {
        matches!(self, Func::Sin | Func::Tan | Func::Arcsin | Func::Arctan)
    }
}

/// Expression node. Division is represented by negative integer powers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Rational),
    Var(Symbol),
    Func(Func, Expr),
    Pow(Expr, i64),
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

/// Immutable, shareable, canonical expression.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        fn rank(n: &Node) -> u8 {
            match n {
                Node::Const(_) => 0,
                Node::Var(_) => 1,
                Node::Func(..) => 2,
                Node::Pow(..) => 3,
                Node::Mul(_) => 4,
                Node::Add(_) => 5,
            }
        }
        match (&*self.0, &*other.0) {
            (Node::Const(a), Node::Const(b)) => a.cmp(b),
            (Node::Var(a), Node::Var(b)) => a.cmp(b),
            (Node::Func(f, a), Node::Func(g, b)) => f.cmp(g).then_with(|| a.cmp(b)),
            (Node::Pow(a, m), Node::Pow(b, n)) => a.cmp(b).then_with(|| m.cmp(n)),
            (Node::Mul(a), Node::Mul(b)) | (Node::Add(a), Node::Add(b)) => a.cmp(b),
            (a, b) => rank(a).cmp(&rank(b)),
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::sysdsl::render_expr(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::sysdsl::render_expr(self))
    }
}

impl Expr {
    pub(crate) fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: Rational) -> Expr {
        Expr::raw(Node::Const(value))
    }

    pub fn int(value: i64) -> Expr {
        Expr::constant(Rational::from(value))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        assert!(den != 0, "rational constant with zero denominator");
        Expr::constant(Rational::from((num, den)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(symbol: &Symbol) -> Expr {
        Expr::raw(Node::Var(symbol.clone()))
    }

    /// Canonical sum.
    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        canon::add(terms.into_iter().collect())
    }

    /// Canonical product.
    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        canon::mul(factors.into_iter().collect())
    }

    /// Canonical integer power.
    pub fn pow(&self, exponent: i64) -> Expr {
        canon::pow(self.clone(), exponent)
    }

    /// Canonical function application.
    pub fn apply(func: Func, arg: Expr) -> Expr {
        canon::func(func, arg)
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }

    pub fn tan(&self) -> Expr {
        Expr::apply(Func::Tan, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::apply(Func::Ln, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self.clone())
    }

    pub fn arcsin(&self) -> Expr {
        Expr::apply(Func::Arcsin, self.clone())
    }

    pub fn arctan(&self) -> Expr {
        Expr::apply(Func::Arctan, self.clone())
    }

    pub fn recip(&self) -> Expr {
        self.pow(-1)
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&Symbol> {
        match self.node() {
            Node::Var(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.as_const().is_some()
    }

    /// Structural zero test (sufficient, not necessary).
    pub fn is_structurally_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if *c == 1)
    }

    /// Rebuilds the expression through the canonical constructors.
    pub fn normalize(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Var(_) => self.clone(),
            Node::Func(f, a) => canon::func(*f, a.normalize()),
            Node::Pow(b, n) => canon::pow(b.normalize(), *n),
            Node::Mul(fs) => canon::mul(fs.iter().map(Expr::normalize).collect()),
            Node::Add(ts) => canon::add(ts.iter().map(Expr::normalize).collect()),
        }
    }

    /// Number of nodes in the expression tree.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Func(_, a) | Node::Pow(a, _) => a.size(),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().map(Expr::size).sum(),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(s) => {
                out.insert(s.clone());
            }
            Node::Func(_, a) | Node::Pow(a, _) => a.collect_symbols(out),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|x| x.collect_symbols(out)),
        }
    }

    pub fn contains(&self, symbol: &Symbol) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(s) => s == symbol,
            Node::Func(_, a) | Node::Pow(a, _) => a.contains(symbol),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().any(|x| x.contains(symbol)),
        }
    }

    pub fn contains_any(&self, symbols: &[Symbol]) -> bool {
        symbols.iter().any(|s| self.contains(s))
    }

    /// Terms of a sum (the expression itself if it is not a sum).
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Add(ts) => ts.clone(),
            _ if self.is_structurally_zero() => Vec::new(),
            _ => vec![self.clone()],
        }
    }

    /// Splits a term into its rational coefficient and the remaining monomial.
    pub fn split_coefficient(&self) -> (Rational, Expr) {
        canon::split_coefficient(self)
    }

    /// Base/exponent pairs of the non-constant factors of a product.
    pub fn factor_powers(&self) -> Vec<(Expr, i64)> {
        let (_, mono) = self.split_coefficient();
        let factors = match mono.node() {
            Node::Mul(fs) => fs.clone(),
            Node::Const(_) => Vec::new(),
            _ => vec![mono.clone()],
        };
        factors
            .into_iter()
            .map(|f| match f.node() {
                Node::Pow(b, n) => (b.clone(), *n),
                _ => (f.clone(), 1),
            })
            .collect()
    }

    /// True when the leading coefficient of the canonical form is negative.
    pub fn has_negative_sign(&self) -> bool {
        canon::is_negative_form(self)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| canon::add(vec![a, b]));
binop!(Sub, sub, |a, b| canon::add(vec![a, canon::neg(b)]));
binop!(Mul, mul, |a, b| canon::mul(vec![a, b]));
binop!(Div, div, |a, b| canon::mul(vec![a, canon::pow(b, -1)]));

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        canon::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        canon::neg(self.clone())
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Expr {
        Expr::var(s)
    }
}

#[cfg(test)]
mod tests;
