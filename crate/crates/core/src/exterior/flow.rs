//! Closed-form straightening of vector fields whose flow equations are
//! triangular and linear in the unknown.
//!
//! Along the flow of `v`, coordinates with zero component stay constant. The
//! others are solved one at a time: once every coordinate a component depends
//! on is known as a function of the flow time `s`, the remaining equation is
//! `ξ' = α(s) ξ + β(s)`, integrated in closed form for terms `C s^p e^{λs}`.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rug::Integer;

use super::{Chart, ChartTransform, ExteriorError, VectorField};
use crate::linalg::span_contains;
use crate::symexpr::{Expr, Func, Node, Symbol, ZeroTest};

/// Names for the coordinates introduced by a straightening.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNaming {
    /// Name of the flow parameter.
    pub param: String,
    /// Prefix for moved coordinates that survive into the new chart.
    pub prefix: String,
}

impl Default for FlowNaming {
    fn default() -> Self {
        FlowNaming { param: "wh".into(), prefix: "w_".into() }
    }
}

/// A chart in which a vector field becomes the coordinate field of `param`.
#[derive(Clone, Debug, PartialEq)]
pub struct Straightening {
    pub transform: ChartTransform,
    pub param: Symbol,
    /// Coordinate of the original chart replaced by the flow parameter.
    pub dropped: Symbol,
}

fn not_solvable(msg: impl Into<String>) -> ExteriorError {
    ExteriorError::NotSolvable(msg.into())
}

fn fresh(base: &str, taken: &HashSet<String>) -> Symbol {
    let mut name = base.to_string();
    let mut k = 1;
    while taken.contains(&name) {
        k += 1;
        name = format!("{base}_{k}");
    }
    Symbol::aux(&name)
}

fn base_name<'a>(name: &'a str, prefix: &str) -> &'a str {
    let stripped = name.strip_prefix(prefix).unwrap_or(name);
    match stripped.rsplit_once('_') {
        Some((_, tail)) if !tail.is_empty() && !tail.chars().all(|c| c.is_ascii_digit()) => tail,
        Some((head, _)) if !head.is_empty() => head.rsplit('_').next().unwrap_or(head),
        _ => stripped,
    }
}

fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// `∫₀^s g(σ) dσ` for sums of terms `C s^p e^{λ s}` with `C`, `λ` free of `s`.
pub(crate) fn integrate(g: &Expr, s: &Symbol) -> Result<Expr, ExteriorError> {
    let mut out = Vec::new();
    for term in g.terms() {
        if !term.contains(s) {
            out.push(term * Expr::var(s));
            continue;
        }
        let (c, _) = term.split_coefficient();
        let mut coeff = vec![Expr::constant(c)];
        let mut p: i64 = 0;
        let mut lambda = Vec::new();
        for (base, n) in term.factor_powers() {
            if !base.contains(s) {
                coeff.push(base.pow(n));
                continue;
            }
            match base.node() {
                Node::Var(v) if v == s && n > 0 => p += n,
                Node::Func(Func::Exp, arg) => {
                    let rate = arg.diff(s);
                    if rate.contains(s) {
                        return Err(not_solvable(format!("exponent {arg} is not linear in {s}")));
                    }
                    let offset = arg.subs(s, &Expr::zero());
                    coeff.push(offset.exp().pow(n));
                    lambda.push(rate * Expr::int(n));
                }
                _ => return Err(not_solvable(format!("cannot integrate {term} in {s}"))),
            }
        }
        let coeff = Expr::mul_all(coeff);
        let lambda = Expr::add_all(lambda);
        let sv = Expr::var(s);
        if lambda.is_structurally_zero() {
            out.push(coeff * sv.pow(p + 1) / Expr::int(p + 1));
            continue;
        }
        let p = u32::try_from(p).map_err(|_| not_solvable("polynomial degree out of range"))?;
        let growth = (&lambda * &sv).exp();
        let pf = factorial(p);
        let mut inner = Vec::new();
        for k in 0..=p {
            let falling = Expr::constant((pf.clone() / factorial(p - k)).into());
            let sign = if k % 2 == 0 { Expr::one() } else { Expr::int(-1) };
            inner.push(sign * falling * sv.pow(i64::from(p - k)) * lambda.pow(-(i64::from(k) + 1)));
        }
        let sign = if p % 2 == 0 { Expr::one() } else { Expr::int(-1) };
        let at_zero = sign * Expr::constant(pf.into()) * lambda.pow(-(i64::from(p) + 1));
        out.push(&coeff * (growth * Expr::add_all(inner) - at_zero));
    }
    Ok(Expr::add_all(out))
}

struct Solved {
    /// `exp(∫α)`.
    growth: Expr,
    /// `∫ β exp(-∫α)`.
    offset: Expr,
    /// `α` along the flow.
    alpha: Expr,
    /// `β` along the flow.
    beta: Expr,
}

/// Straightens a single field; the preferred chart is returned.
pub fn straighten_flow(v: &VectorField, zt: &ZeroTest) -> Result<Straightening, ExteriorError> {
    let mut options = straighten_flow_options(v, &FlowNaming::default(), zt)?;
    Ok(options.remove(0))
}

/// All charts straightening `v` that the solver finds, the preferred one first.
///
/// The preferred chart replaces the moved coordinate with the most complex
/// component (ties go to the later coordinate); the others follow in
/// coordinate order.
pub fn straighten_flow_options(v: &VectorField, naming: &FlowNaming, zt: &ZeroTest) -> Result<Vec<Straightening>, ExteriorError> {
    let chart = v.chart().clone();
    let n = chart.n_coords();
    if let Some(ti) = chart.time_index() {
        if !v.comp(ti).is_zero(zt)? {
            return Err(not_solvable("field has a time component"));
        }
    }
    let mut moved = Vec::new();
    for i in 0..n {
        if !v.comp(i).is_zero(zt)? {
            moved.push(i);
        }
    }
    if moved.is_empty() {
        return Err(not_solvable("zero field"));
    }
    if moved.len() == 1 && (v.comp(moved[0]) - Expr::one()).is_zero(zt)? {
        let dropped = chart.symbol(moved[0]).clone();
        return Ok(vec![Straightening { transform: ChartTransform::identity(&chart), param: dropped.clone(), dropped }]);
    }

    let mut taken: HashSet<String> = chart.symbols().iter().map(|s| s.name().to_string()).collect();
    let param = fresh(&naming.param, &taken);
    taken.insert(param.name().to_string());
    let mut eta: HashMap<usize, Symbol> = HashMap::new();
    for &i in &moved {
        let s = fresh(&format!("{}{}", naming.prefix, base_name(chart.symbol(i).name(), &naming.prefix)), &taken);
        taken.insert(s.name().to_string());
        eta.insert(i, s);
    }
    let moved_syms: Vec<Symbol> = moved.iter().map(|&i| chart.symbol(i).clone()).collect();
    let eta_syms: Vec<Symbol> = moved.iter().map(|i| eta[i].clone()).collect();

    let mut solved: HashMap<usize, Solved> = HashMap::new();
    let mut order: Vec<usize> = Vec::new();
    let mut along: HashMap<Symbol, Expr> = HashMap::new();
    while order.len() < moved.len() {
        let mut progress = false;
        for &i in &moved {
            if solved.contains_key(&i) {
                continue;
            }
            let xi = chart.symbol(i);
            let comp = v.comp(i);
            let ready = moved_syms.iter().all(|m| m == xi || !comp.contains(m) || along.contains_key(m));
            if !ready {
                continue;
            }
            let alpha = comp.diff(xi);
            if alpha.contains(xi) && !alpha.diff(xi).is_zero(zt)? {
                return Err(not_solvable(format!("component {comp} is not affine in {xi}")));
            }
            let alpha = alpha.subs(xi, &Expr::zero()).substitute(&along);
            let beta = comp.subs(xi, &Expr::zero()).substitute(&along);
            let integral = integrate(&alpha, &param)?;
            let growth = integral.exp();
            let offset = integrate(&(&beta * (-&integral).exp()), &param)?;
            let value = &growth * (Expr::var(&eta[&i]) + &offset);
            along.insert(xi.clone(), value);
            solved.insert(i, Solved { growth, offset, alpha, beta });
            order.push(i);
            progress = true;
        }
        if !progress {
            return Err(not_solvable("flow equations are not triangular"));
        }
    }

    let mut options = Vec::new();
    for &d in &moved {
        let sol = &solved[&d];
        let xd = Expr::var(chart.symbol(d));
        let (slice, time) = if sol.alpha.is_zero(zt)? {
            let rate = sol.offset.diff(&param);
            if rate.contains(&param) || rate.contains_any(&eta_syms) || rate.is_zero(zt)? {
                continue;
            }
            (Expr::zero(), xd / rate)
        } else if sol.beta.is_zero(zt)? {
            let rate = sol.alpha.clone();
            if rate.contains(&param) || rate.contains_any(&eta_syms) {
                continue;
            }
            (Expr::one(), xd.ln() / rate)
        } else {
            continue;
        };
        match build_option(v, &chart, &moved, &order, &solved, &eta, &param, d, &slice, &time, zt) {
            Ok(s) => options.push(s),
            Err(ExteriorError::ZeroTest(e)) => return Err(e.into()),
            Err(_) => continue,
        }
    }
    if options.is_empty() {
        return Err(not_solvable("no coordinate admits a closed-form slice"));
    }
    let key = |s: &Straightening| {
        let c = v.comp_of(&s.dropped);
        (!c.is_const(), c.size(), chart.index_of(&s.dropped))
    };
    let best = (0..options.len()).max_by_key(|&k| key(&options[k])).unwrap();
    let first = options.remove(best);
    options.insert(0, first);
    Ok(options)
}

#[allow(clippy::too_many_arguments)]
fn build_option(
    v: &VectorField,
    chart: &Arc<Chart>,
    moved: &[usize],
    order: &[usize],
    solved: &HashMap<usize, Solved>,
    eta: &HashMap<usize, Symbol>,
    param: &Symbol,
    d: usize,
    slice: &Expr,
    time: &Expr,
    zt: &ZeroTest,
) -> Result<Straightening, ExteriorError> {
    let n = chart.n_coords();
    let mut source_coords = Vec::with_capacity(n);
    for i in 0..n {
        source_coords.push(if i == d {
            param.clone()
        } else if moved.contains(&i) {
            eta[&i].clone()
        } else {
            chart.symbol(i).clone()
        });
    }
    let source = Chart::new(source_coords, chart.time().cloned())?;

    let mut on_slice: HashMap<Symbol, Expr> = HashMap::new();
    on_slice.insert(eta[&d].clone(), slice.clone());
    let mut forward = Vec::with_capacity(n);
    for i in 0..n {
        forward.push(match solved.get(&i) {
            Some(sol) => (&sol.growth * (Expr::var(&eta[&i]) + &sol.offset)).substitute(&on_slice),
            None => Expr::var(chart.symbol(i)),
        });
    }

    let mut back: HashMap<Symbol, Expr> = HashMap::new();
    back.insert(param.clone(), time.clone());
    back.insert(eta[&d].clone(), slice.clone());
    for &i in order {
        if i == d {
            continue;
        }
        let sol = &solved[&i];
        let eta_i = (Expr::var(chart.symbol(i)) / &sol.growth - &sol.offset).substitute(&back);
        back.insert(eta[&i].clone(), eta_i);
    }
    let mut inverse = Vec::with_capacity(n);
    for i in 0..n {
        inverse.push(if i == d {
            time.clone()
        } else if moved.contains(&i) {
            back[&eta[&i]].clone()
        } else {
            Expr::var(chart.symbol(i))
        });
    }
    let transform = ChartTransform::new(&source, chart, forward, inverse)?;
    transform.verify(zt)?;
    let pushed = transform.pushforward(&VectorField::coordinate(&source, param)?)?;
    for (a, b) in pushed.comps().iter().zip(v.comps()) {
        if !(a - b).is_zero(zt)? {
            return Err(not_solvable("pushforward of the flow parameter differs from the field"));
        }
    }
    Ok(Straightening { transform, param: param.clone(), dropped: chart.symbol(d).clone() })
}

/// Straightens an involutive distribution one field at a time.
///
/// Each field is rewritten in the chart produced so far, stripped of the
/// components along earlier flow parameters and, when it still depends on
/// them, rescaled so its leading component is 1. The composed transform
/// maps the coordinate fields of the returned parameters onto the span of
/// `fields`, which is verified before returning.
pub fn straighten_distribution(
    fields: &[VectorField],
    namings: &[FlowNaming],
    zt: &ZeroTest,
) -> Result<(ChartTransform, Vec<Symbol>), ExteriorError> {
    assert_eq!(fields.len(), namings.len(), "one naming per field");
    let chart = fields.first().ok_or_else(|| not_solvable("empty distribution"))?.chart().clone();
    let mut total = ChartTransform::identity(&chart);
    let mut params: Vec<Symbol> = Vec::new();
    for (f, naming) in fields.iter().zip(namings) {
        let mut g = total.pullback_field(f)?;
        let src = total.source().clone();
        let mut comps = g.comps().to_vec();
        for p in &params {
            comps[src.index_of(p).unwrap()] = Expr::zero();
        }
        g = VectorField::new(&src, comps);
        let depends = g.comps().iter().any(|c| c.contains_any(&params));
        if depends {
            let mut lead = None;
            for c in g.comps() {
                if !c.is_zero(zt)? {
                    lead = Some(c.clone());
                    break;
                }
            }
            let lead = lead.ok_or_else(|| not_solvable("distribution fields are dependent"))?;
            g = g.scale(&lead.recip());
            for c in g.comps() {
                for p in &params {
                    if !c.diff(p).is_zero(zt)? {
                        return Err(not_solvable("distribution is not straightened by sequential flows"));
                    }
                }
            }
        }
        let step = straighten_flow_options(&g, naming, zt)?.remove(0);
        total = total.compose(&step.transform)?;
        params.push(step.param);
    }
    let target = total.target().clone();
    let dim = target.dim();
    let span: Vec<Vec<Expr>> = fields.iter().map(|f| f.comps().to_vec()).collect();
    let mut pushed = Vec::new();
    for p in &params {
        pushed.push(total.pushforward(&VectorField::coordinate(total.source(), p)?)?.comps().to_vec());
    }
    let ok = span_contains(&span, &pushed, dim, zt).map_err(|e| not_solvable(e.to_string()))?
        && span_contains(&pushed, &span, dim, zt).map_err(|e| not_solvable(e.to_string()))?;
    if !ok {
        return Err(not_solvable("sequential flows do not span the distribution"));
    }
    Ok((total, params))
}
