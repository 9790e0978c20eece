//! Differentiation and substitution.

use std::collections::HashMap;

use super::{Expr, Func, Node, Symbol};

impl Expr {
    /// Partial derivative with respect to `symbol`, in canonical form.
    pub fn diff(&self, symbol: &Symbol) -> Expr {
        if !self.contains(symbol) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(s) => {
                if s == symbol {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.diff(symbol))),
            Node::Mul(fs) => {
                let mut terms = Vec::new();
                for (i, f) in fs.iter().enumerate() {
                    let df = f.diff(symbol);
                    if df.is_structurally_zero() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = fs
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, g)| g.clone())
                        .collect();
                    prod.push(df);
                    terms.push(Expr::mul_all(prod));
                }
                Expr::add_all(terms)
            }
            Node::Pow(b, n) => Expr::mul_all([Expr::int(*n), b.pow(n - 1), b.diff(symbol)]),
            Node::Func(f, a) => {
                let da = a.diff(symbol);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Tan => a.cos().pow(-2),
                    Func::Exp => self.clone(),
                    Func::Ln => a.recip(),
                    Func::Sqrt => Expr::rational(1, 2) * self.recip(),
                    Func::Arcsin => (Expr::one() - a.pow(2)).sqrt().recip(),
                    Func::Arctan => (Expr::one() + a.pow(2)).recip(),
                };
                outer * da
            }
        }
    }

    /// Simultaneous substitution of symbols by expressions, re-canonicalized.
    pub fn substitute(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut cache = HashMap::new();
        self.subst_cached(map, &mut cache)
    }

    fn subst_cached(&self, map: &HashMap<Symbol, Expr>, cache: &mut HashMap<Expr, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => return self.clone(),
            Node::Var(s) => return map.get(s).cloned().unwrap_or_else(|| self.clone()),
            _ => {}
        }
        if let Some(hit) = cache.get(self) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) | Node::Var(_) => unreachable!(),
            Node::Func(f, a) => Expr::apply(*f, a.subst_cached(map, cache)),
            Node::Pow(b, n) => b.subst_cached(map, cache).pow(*n),
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(|f| f.subst_cached(map, cache)).collect::<Vec<_>>()),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.subst_cached(map, cache)).collect::<Vec<_>>()),
        };
        cache.insert(self.clone(), out.clone());
        out
    }

    /// Substitutes a single symbol.
    pub fn subs(&self, symbol: &Symbol, value: &Expr) -> Expr {
        if !self.contains(symbol) {
            return self.clone();
        }
        let mut map = HashMap::new();
        map.insert(symbol.clone(), value.clone());
        self.substitute(&map)
    }

    /// Renames symbols without changing structure beyond re-canonicalization.
    pub fn rename(&self, renames: &HashMap<Symbol, Symbol>) -> Expr {
        let map: HashMap<Symbol, Expr> = renames.iter().map(|(a, b)| (a.clone(), Expr::var(b))).collect();
        self.substitute(&map)
    }
}
