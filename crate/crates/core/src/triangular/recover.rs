//! Block-wise trajectory recovery from flat output curves and the numeric
//! flatness check against the original dynamics.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::jet::{derivative, time_jet, Jet, Tape};
use super::{FlatnessCertificate, Result, TriangularDecomposition, TriangularError};
use crate::decompose::{dot_symbol, implicit_equations};
use crate::symexpr::{Expr, Symbol};
use crate::sysdsl::ControlSystem;

const NEWTON_TOL: f64 = 1e-12;
const ACCEPT_TOL: f64 = 1e-10;
const SINGULAR_DET: f64 = 1e-10;
const MAX_ITER: usize = 60;
const GUESSES: [f64; 6] = [0.5, 1.0, 0.1, -0.5, 2.0, -1.0];

/// A polynomial curve `c_0 + c_1 t + c_2 t^2 + …`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// Taylor coefficients at `t` up to order `len - 1`.
    pub fn taylor(&self, t: f64, len: usize) -> Jet {
        let mut cur = self.coeffs.clone();
        let mut out = Vec::with_capacity(len);
        let mut fact = 1.0;
        for k in 0..len {
            if k > 0 {
                fact *= k as f64;
            }
            let p = Polynomial::new(cur.clone());
            out.push(p.eval(t) / fact);
            cur = derivative(&cur);
        }
        out
    }
}

/// Recovered point of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    /// State values in the order of the system's states.
    pub x: Vec<f64>,
    /// Input values in the order of the system's inputs.
    pub u: Vec<f64>,
    /// Block chart coordinates.
    pub z: Vec<f64>,
    /// Largest residual of the block equations at the solution.
    pub residual: f64,
}

/// Compiled form of a decomposition for repeated solves.
struct Solver {
    n_b: usize,
    n_coords: usize,
    n_states: usize,
    /// Chart indices of the flat outputs.
    outputs: Vec<usize>,
    /// Chart indices of `ẑ^{i+1}` per equation block.
    unknowns: Vec<Vec<usize>>,
    equations: Vec<Tape>,
    jacobians: Vec<Tape>,
    forward: Tape,
}

impl Solver {
    fn new(td: &TriangularDecomposition, system: &ControlSystem) -> Result<Solver> {
        let chart = td.chart();
        let mut slots: Vec<Symbol> = chart.coords().to_vec();
        slots.extend(chart.coords().iter().map(dot_symbol));
        slots.push(chart.time().cloned().unwrap_or_else(|| system.time.clone()));
        let compile = |exprs: &[Expr]| Tape::compile(exprs, &slots).map_err(|s| TriangularError::UnknownSymbol(s.to_string()));
        let mut unknowns = Vec::new();
        let mut equations = Vec::new();
        let mut jacobians = Vec::new();
        for i in 1..=td.n_b() {
            let zhat = &td.block(i + 1).zhat;
            let eqs = implicit_equations(td.equations(i));
            let jac: Vec<Expr> = eqs.iter().flat_map(|e| zhat.iter().map(move |z| e.diff(z))).collect();
            unknowns.push(zhat.iter().map(|z| chart.index_of(z).unwrap()).collect());
            equations.push(compile(&eqs)?);
            jacobians.push(compile(&jac)?);
        }
        let target = td.transform().target();
        let order: Vec<Expr> = system
            .coordinates()
            .iter()
            .map(|s| target.index_of(s).map(|i| td.transform().forward()[i].clone()).ok_or_else(|| TriangularError::UnknownSymbol(s.to_string())))
            .collect::<Result<_>>()?;
        Ok(Solver {
            n_b: td.n_b(),
            n_coords: chart.n_coords(),
            n_states: system.n_states(),
            outputs: td.outputs().iter().map(|s| chart.index_of(s).unwrap()).collect(),
            unknowns,
            equations,
            jacobians,
            forward: compile(&order)?,
        })
    }

    fn inputs(&self, jets: &[Jet], t: f64, len: usize) -> Vec<Jet> {
        let fit = |j: &[f64]| -> Jet { (0..len).map(|k| j.get(k).copied().unwrap_or(0.0)).collect() };
        let mut out: Vec<Jet> = jets.iter().map(|j| fit(j)).collect();
        out.extend(jets.iter().map(|j| fit(&derivative(j))));
        out.push(time_jet(t, len));
        out
    }

    fn values(&self, tape: &Tape, jets: &[Jet], t: f64) -> Vec<f64> {
        tape.eval_jets(&self.inputs(jets, t, 1)).into_iter().map(|j| j[0]).collect()
    }

    /// Newton solve for the order-zero values of `ẑ^{i+1}`.
    fn newton(&self, i: usize, jets: &mut [Jet], t: f64, prev: Option<&[f64]>) -> Result<Vec<f64>> {
        let unknown = &self.unknowns[i];
        let p = unknown.len();
        let mut starts: Vec<Vec<f64>> = prev.into_iter().map(<[f64]>::to_vec).collect();
        starts.extend(GUESSES.iter().map(|g| vec![*g; p]));
        let mut singular = false;
        for start in starts {
            let mut z = start;
            for _ in 0..MAX_ITER {
                for (k, &idx) in unknown.iter().enumerate() {
                    jets[idx] = vec![z[k]];
                }
                let r = self.values(&self.equations[i], jets, t);
                let norm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if !norm.is_finite() {
                    break;
                }
                let jac = DMatrix::from_row_slice(r.len(), p, &self.values(&self.jacobians[i], jets, t));
                let det = if r.len() == p { jac.determinant() } else { 0.0 };
                if det.abs() < SINGULAR_DET || !det.is_finite() {
                    singular = true;
                    break;
                }
                if norm < NEWTON_TOL {
                    return Ok(z);
                }
                let Some(step) = jac.lu().solve(&DVector::from_vec(r.clone())) else {
                    singular = true;
                    break;
                };
                let mut small = true;
                for (zk, dk) in z.iter_mut().zip(step.iter()) {
                    *zk -= dk;
                    small &= dk.abs() <= 1e-15 * (1.0 + zk.abs());
                }
                if small && norm < ACCEPT_TOL {
                    return Ok(z);
                }
            }
        }
        Err(if singular {
            TriangularError::SingularJacobian { t, block: i + 1 }
        } else {
            TriangularError::NewtonDivergence { t, block: i + 1 }
        })
    }

    fn solve(&self, curves: &[Polynomial], t: f64, prev: Option<&[Vec<f64>]>) -> Result<(Sample, Vec<Vec<f64>>)> {
        let mut jets: Vec<Jet> = vec![Vec::new(); self.n_coords];
        for (c, &idx) in curves.iter().zip(&self.outputs) {
            jets[idx] = c.taylor(t, self.n_b + 1);
        }
        let mut solutions = Vec::with_capacity(self.n_b);
        for i in 0..self.n_b {
            let z0 = self.newton(i, &mut jets, t, prev.map(|p| p[i].as_slice()))?;
            let unknown = &self.unknowns[i];
            let jac = DMatrix::from_row_slice(unknown.len(), unknown.len(), &self.values(&self.jacobians[i], &jets, t));
            let lu = jac.lu();
            for r in 1..=self.n_b - i - 1 {
                for &idx in unknown {
                    jets[idx].push(0.0);
                }
                let res = self.equations[i].eval_jets(&self.inputs(&jets, t, r + 1));
                let rhs = DVector::from_iterator(res.len(), res.iter().map(|j| j[r]));
                let c = lu.solve(&rhs).ok_or(TriangularError::SingularJacobian { t, block: i + 1 })?;
                for (k, &idx) in unknown.iter().enumerate() {
                    jets[idx][r] = -c[k];
                }
            }
            solutions.push(z0);
        }
        let mut residual = 0.0f64;
        for tape in &self.equations {
            for v in self.values(tape, &jets, t) {
                residual = residual.max(v.abs());
            }
        }
        let z: Vec<f64> = jets.iter().map(|j| j[0]).collect();
        let mut point = z.clone();
        point.extend(std::iter::repeat_n(0.0, self.n_coords));
        point.push(t);
        let xu = self.forward.eval(&point);
        if xu.iter().any(|v| !v.is_finite()) {
            return Err(TriangularError::NewtonDivergence { t, block: self.n_b });
        }
        let (x, u) = xu.split_at(self.n_states);
        Ok((Sample { t, x: x.to_vec(), u: u.to_vec(), z, residual }, solutions))
    }
}

/// Recovers `(x, u)` at each sample time from curves for the flat outputs.
///
/// Samples are solved in order, each Newton solve starting from the previous
/// solution so that consecutive samples stay on one branch.
pub fn recover_trajectory(cert: &FlatnessCertificate, curves: &[Polynomial], samples: &[f64]) -> Result<Vec<Result<Sample>>> {
    let solver = Solver::new(&cert.decomposition, &cert.system)?;
    if curves.len() != solver.outputs.len() {
        return Err(TriangularError::OutputCountMismatch { found: curves.len(), expected: solver.outputs.len() });
    }
    let mut prev: Option<Vec<Vec<f64>>> = None;
    let mut out = Vec::with_capacity(samples.len());
    for &t in samples {
        match solver.solve(curves, t, prev.as_deref()) {
            Ok((s, sol)) => {
                prev = Some(sol);
                out.push(Ok(s));
            }
            Err(e) => out.push(Err(e)),
        }
    }
    Ok(out)
}

/// Largest deviation of central differences of `x` from `f(x, u)` at interior samples.
pub fn dynamics_residual(system: &ControlSystem, samples: &[Sample]) -> Result<f64> {
    let tape = dynamics_tape(system)?;
    let mut worst = 0.0f64;
    for w in samples.windows(3) {
        let f = tape.eval(&point(&w[1]));
        for (j, fj) in f.iter().enumerate() {
            let dx = (w[2].x[j] - w[0].x[j]) / (w[2].t - w[0].t);
            worst = worst.max((dx - fj).abs());
        }
    }
    Ok(worst)
}

fn dynamics_tape(system: &ControlSystem) -> Result<Tape> {
    let mut slots = system.coordinates();
    slots.push(system.time.clone());
    Tape::compile(&system.dynamics, &slots).map_err(|s| TriangularError::UnknownSymbol(s.to_string()))
}

fn point(s: &Sample) -> Vec<f64> {
    s.x.iter().chain(&s.u).copied().chain(std::iter::once(s.t)).collect()
}

/// Settings of the numeric flatness check.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    /// Integration step on `[0, 1]`.
    pub step: f64,
    /// Largest accepted deviation between integrated and recovered states,
    /// measured as `|dx| / max(1, |x|)` per component.
    pub tolerance: f64,
    /// Smallest fraction of non-singular trials.
    pub min_regular: f64,
    /// Outputs claimed by the user; checked against the certificate curves.
    pub claimed: Option<Vec<Expr>>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { trials: 10, seed: 0, step: 1e-3, tolerance: 1e-6, min_regular: 0.8, claimed: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TrialOutcome {
    Passed { deviation: f64 },
    Failed { deviation: f64, reason: String },
    Singular { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub passed: bool,
    pub max_deviation: f64,
    pub regular_fraction: f64,
    pub trials: Vec<TrialOutcome>,
}

fn random_curve(rng: &mut ChaCha8Rng) -> Polynomial {
    Polynomial::new(vec![
        rng.gen_range(0.5..1.5),
        rng.gen_range(0.1..0.4),
        rng.gen_range(0.05..0.2),
        rng.gen_range(0.0..0.03),
    ])
}

/// Recovers trajectories for random cubic output curves, integrates the
/// original dynamics from the recovered initial state with RK4 and compares.
pub fn verify_flatness_numeric(cert: &FlatnessCertificate, opts: &VerifyOptions) -> Result<Verdict> {
    let solver = Solver::new(&cert.decomposition, &cert.system)?;
    let f = dynamics_tape(&cert.system)?;
    let claimed = match &opts.claimed {
        Some(exprs) => {
            let mut slots = cert.system.coordinates();
            slots.push(cert.system.time.clone());
            Some(Tape::compile(exprs, &slots).map_err(|s| TriangularError::UnknownSymbol(s.to_string()))?)
        }
        None => None,
    };
    let steps = (1.0 / opts.step).round() as usize;
    let times: Vec<f64> = (0..=2 * steps).map(|k| k as f64 * opts.step / 2.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut trials = Vec::with_capacity(opts.trials);
    for _ in 0..opts.trials {
        let curves: Vec<Polynomial> = (0..solver.outputs.len()).map(|_| random_curve(&mut rng)).collect();
        trials.push(run_trial(&solver, &f, claimed.as_ref(), &curves, &times, opts));
    }
    let regular = trials.iter().filter(|t| !matches!(t, TrialOutcome::Singular { .. })).count();
    let passed_count = trials.iter().filter(|t| matches!(t, TrialOutcome::Passed { .. })).count();
    let any_failed = trials.iter().any(|t| matches!(t, TrialOutcome::Failed { .. }));
    let max_deviation = trials
        .iter()
        .map(|t| match t {
            TrialOutcome::Passed { deviation } | TrialOutcome::Failed { deviation, .. } => *deviation,
            TrialOutcome::Singular { .. } => 0.0,
        })
        .fold(0.0, f64::max);
    let regular_fraction = if trials.is_empty() { 0.0 } else { regular as f64 / trials.len() as f64 };
    let passed = !any_failed && passed_count > 0 && regular_fraction >= opts.min_regular;
    Ok(Verdict { passed, max_deviation, regular_fraction, trials })
}

fn run_trial(
    solver: &Solver,
    f: &Tape,
    claimed: Option<&Tape>,
    curves: &[Polynomial],
    times: &[f64],
    opts: &VerifyOptions,
) -> TrialOutcome {
    let mut samples = Vec::with_capacity(times.len());
    let mut prev: Option<Vec<Vec<f64>>> = None;
    for &t in times {
        match solver.solve(curves, t, prev.as_deref()) {
            Ok((s, sol)) => {
                prev = Some(sol);
                samples.push(s);
            }
            Err(e) => return TrialOutcome::Singular { reason: e.to_string() },
        }
    }
    let h = opts.step;
    let mut x = samples[0].x.clone();
    let mut deviation = 0.0f64;
    let eval = |x: &[f64], s: &Sample| -> Vec<f64> {
        let p: Vec<f64> = x.iter().chain(&s.u).copied().chain(std::iter::once(s.t)).collect();
        f.eval(&p)
    };
    for k in 0..(times.len() - 1) / 2 {
        let (s0, sm, s1) = (&samples[2 * k], &samples[2 * k + 1], &samples[2 * k + 2]);
        let k1 = eval(&x, s0);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + h / 2.0 * b).collect();
        let k2 = eval(&x2, sm);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + h / 2.0 * b).collect();
        let k3 = eval(&x3, sm);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = eval(&x4, s1);
        for j in 0..x.len() {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            deviation = deviation.max((x[j] - s1.x[j]).abs() / s1.x[j].abs().max(1.0));
        }
        if !deviation.is_finite() {
            break;
        }
    }
    if deviation.is_nan() || deviation >= opts.tolerance {
        return TrialOutcome::Failed { deviation, reason: "integrated states leave the recovered trajectory".into() };
    }
    if let Some(tape) = claimed {
        if !claimed_outputs_match(tape, curves, &samples, opts.tolerance) {
            return TrialOutcome::Failed { deviation, reason: "claimed outputs differ from the output curves".into() };
        }
    }
    TrialOutcome::Passed { deviation }
}

/// Whether the claimed outputs reproduce the curves under some ordering.
fn claimed_outputs_match(tape: &Tape, curves: &[Polynomial], samples: &[Sample], tol: f64) -> bool {
    if tape.n_outputs() != curves.len() {
        return false;
    }
    let values: Vec<Vec<f64>> = samples.iter().map(|s| tape.eval(&point(s))).collect();
    permutations(curves.len()).into_iter().any(|perm| {
        samples.iter().zip(&values).all(|(s, v)| perm.iter().enumerate().all(|(j, &c)| (v[j] - curves[c].eval(s.t)).abs() < tol))
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
