use crate::symexpr::{Expr, Symbol};

/// Signed monomials `±Π s_i^{k_i}` with `Σ |k_i| ≤ max_degree`, smallest first.
///
/// Exponents may be negative, so the pool contains quotients such as `u2/u1`.
pub fn monomial_pool(symbols: &[Symbol], max_degree: u32) -> Vec<Expr> {
    let mut exponents: Vec<Vec<i64>> = Vec::new();
    let mut cur = vec![0i64; symbols.len()];
    collect(&mut cur, 0, max_degree as i64, &mut exponents);
    let mut pool: Vec<Expr> = Vec::new();
    for ks in exponents {
        let factors: Vec<Expr> =
            symbols.iter().zip(&ks).filter(|(_, k)| **k != 0).map(|(s, k)| Expr::var(s).pow(*k)).collect();
        let m = Expr::mul_all(factors);
        pool.push(m.clone());
        pool.push(-m);
    }
    pool.sort_by_key(|m| (m.size(), m.has_negative_sign()));
    pool.dedup();
    pool
}

fn collect(cur: &mut Vec<i64>, pos: usize, budget: i64, out: &mut Vec<Vec<i64>>) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for k in -budget..=budget {
        cur[pos] = k;
        collect(cur, pos + 1, budget - k.abs(), out);
    }
    cur[pos] = 0;
}
