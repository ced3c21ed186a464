//! Cost-constrained Blahut–Arimoto and the capacity-achieving input set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{dispersion, divergences, mutual_information};
use crate::ehmodel::DmcSpec;
use crate::error::{domain, Error, Result};

const MAX_INNER: usize = 200_000;
const MAX_STEP: f64 = 1e6;

/// Solution of `sup { I(P;W) : 𝔼_P[Λ] ≤ a }`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityCostResult {
    pub optimal_input: Vec<f64>,
    /// Nats.
    pub capacity: f64,
    /// Lagrange multiplier of the cost constraint (nats per unit cost).
    pub multiplier: f64,
    /// Whether the cost constraint is tight.
    pub active: bool,
}

// Maximizes I(P;W) − s𝔼_P[Λ] over inputs supported on `allowed`.
// `trace` receives the Lagrangian value after every update.
//
// The update is the Blahut–Arimoto step raised to a power `step ≥ 1`. The
// power grows while the Lagrangian keeps increasing and drops back towards the
// plain (always monotone) step when it does not; nearly useless channels have
// very flat Lagrangians and the plain step crawls there.
pub(crate) fn ba_lagrangian(
    ch: &DmcSpec,
    s: f64,
    init: &[f64],
    allowed: &[bool],
    tol: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Vec<f64>> {
    let eval = |p: &[f64]| {
        let q = ch.output_law(p);
        let d = divergences(ch, &q);
        let c: Vec<f64> = (0..p.len())
            .map(|x| if allowed[x] { d[x] - s * ch.cost(x) } else { f64::NEG_INFINITY })
            .collect();
        let value: f64 = p.iter().zip(&c).filter(|(&px, _)| px > 0.0).map(|(px, cx)| px * cx).sum();
        (value, c)
    };
    let update = |p: &[f64], c: &[f64], upper: f64, step: f64| {
        let mut next: Vec<f64> = p.iter().zip(c).map(|(px, cx)| px * (step * (cx - upper)).exp()).collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|px| *px /= z);
        next
    };
    let mut p = init.to_vec();
    let (mut value, mut c) = eval(&p);
    let mut step: f64 = 1.0;
    for _ in 0..MAX_INNER {
        if let Some(t) = trace.as_deref_mut() {
            t.push(value);
        }
        let upper = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if upper - value <= tol {
            return Ok(p);
        }
        loop {
            let cand = update(&p, &c, upper, step);
            let (v, cc) = eval(&cand);
            if v >= value || step == 1.0 {
                step = if v >= value { (step * 2.0).min(MAX_STEP) } else { 1.0 };
                (p, value, c) = (cand, v, cc);
                break;
            }
            step = (step / 4.0).max(1.0);
        }
    }
    Err(Error::Computation {
        message: format!("Blahut-Arimoto did not converge in {MAX_INNER} iterations"),
        partial: value,
    })
}

fn mean_cost(ch: &DmcSpec, p: &[f64]) -> f64 {
    p.iter().zip(ch.costs()).map(|(a, b)| a * b).sum()
}

fn allowed_mask(ch: &DmcSpec, a: f64) -> Vec<bool> {
    ch.costs().iter().map(|&c| a > 0.0 || c == 0.0).collect()
}

fn uniform_on(mask: &[bool]) -> Vec<f64> {
    let k = mask.iter().filter(|&&m| m).count() as f64;
    mask.iter().map(|&m| if m { 1.0 / k } else { 0.0 }).collect()
}

fn solve_from(ch: &DmcSpec, a: f64, tol: f64, init: &[f64]) -> Result<CapacityCostResult> {
    if !(a >= 0.0) || !a.is_finite() {
        return domain(format!("cost limit must be a finite nonnegative number, got {a}"));
    }
    if !(tol > 0.0) {
        return domain(format!("tolerance must be positive, got {tol}"));
    }
    let allowed = allowed_mask(ch, a);
    let finish = |p: Vec<f64>, s: f64, active: bool| CapacityCostResult {
        capacity: mutual_information(ch, &p).max(0.0),
        optimal_input: p,
        multiplier: s,
        active,
    };
    let p0 = ba_lagrangian(ch, 0.0, init, &allowed, tol, None)?;
    if mean_cost(ch, &p0) <= a * (1.0 + 1e-12) {
        return Ok(finish(p0, 0.0, false));
    }
    // 𝔼[Λ] under the Lagrangian optimum decreases in s
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut p_hi = ba_lagrangian(ch, hi, &p0, &allowed, tol, None)?;
    while mean_cost(ch, &p_hi) > a {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Computation {
                message: "no multiplier meets the cost constraint".into(),
                partial: mean_cost(ch, &p_hi),
            });
        }
        p_hi = ba_lagrangian(ch, hi, &p_hi, &allowed, tol, None)?;
    }
    let mut p = p_hi.clone();
    let mut s = hi;
    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi {
            break;
        }
        s = 0.5 * (lo + hi);
        p = ba_lagrangian(ch, s, &p, &allowed, tol, None)?;
        let e = mean_cost(ch, &p);
        if (e - a).abs() <= tol * a.max(1.0) {
            break;
        }
        if e > a {
            lo = s;
        } else {
            hi = s;
        }
    }
    // pull any residual excess onto a zero-cost symbol
    let e = mean_cost(ch, &p);
    if e > a {
        let t = (e - a) / e;
        let x0 = ch.costs().iter().position(|&c| c == 0.0).expect("zero-cost symbol");
        p.iter_mut().for_each(|px| *px *= 1.0 - t);
        p[x0] += t;
    }
    Ok(finish(p, s, true))
}

/// Capacity-cost function by Blahut–Arimoto with bisection on the multiplier.
/// `tol` bounds the duality gap of each inner solve and the final constraint
/// residual.
pub fn blahut_arimoto_constrained(ch: &DmcSpec, cost_limit: f64, tol: f64) -> Result<CapacityCostResult> {
    let init = uniform_on(&allowed_mask(ch, cost_limit.max(0.0)));
    solve_from(ch, cost_limit, tol, &init)
}

/// Lagrangian values of an unconstrained-multiplier run, one per iteration.
pub fn ba_objective_trace(ch: &DmcSpec, multiplier: f64, tol: f64) -> Result<Vec<f64>> {
    let allowed = vec![true; ch.input_size()];
    let mut trace = Vec::new();
    ba_lagrangian(ch, multiplier, &uniform_on(&allowed), &allowed, tol, Some(&mut trace))?;
    Ok(trace)
}

/// Derivative of the capacity-cost function at `a`, read off the multiplier.
pub fn capacity_cost_derivative(ch: &DmcSpec, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return domain(format!("cost level must be positive, got {a}"));
    }
    Ok(blahut_arimoto_constrained(ch, a, 1e-13)?.multiplier)
}

/// Capacity-achieving inputs found from several random starts.
#[derive(Debug, Clone, PartialEq)]
pub struct CaidSet {
    pub capacity: f64,
    pub multiplier: f64,
    pub inputs: Vec<Vec<f64>>,
    /// All restarts agreed within 1e-6.
    pub unique: bool,
    /// Nats².
    pub v_min: f64,
    pub v_max: f64,
}

const RESTARTS: usize = 20;

/// Runs the constrained solver from the uniform start and 20 random starts.
/// If every start lands on the same input (sup-norm 1e-6) the set is treated
/// as a singleton; otherwise `v_min`/`v_max` range over the converged inputs,
/// which is a heuristic. Exotic channels are refused.
pub fn caid_set(ch: &DmcSpec, a: f64, tol: f64) -> Result<CaidSet> {
    let rough = blahut_arimoto_constrained(ch, a, tol.max(1e-8))?;
    if let Some(x) = exotic_symbol(ch, &rough) {
        return domain(format!("exotic channel: unused symbol {x} attains capacity with positive variance while the dispersion vanishes"));
    }
    let base = blahut_arimoto_constrained(ch, a, tol)?;
    let mask = allowed_mask(ch, a);
    let mut rng = ChaCha8Rng::seed_from_u64(0x0CA1D);
    let mut inputs = vec![base.optimal_input.clone()];
    for _ in 0..RESTARTS {
        let mut init: Vec<f64> = mask
            .iter()
            .map(|&m| if m { Exp1.sample(&mut rng) } else { 0.0 })
            .collect();
        // keep the start away from the simplex boundary
        init.iter_mut().zip(&mask).for_each(|(v, &m)| {
            if m {
                *v += 1e-3 * rng.random::<f64>()
            }
        });
        let z: f64 = init.iter().sum();
        init.iter_mut().for_each(|v| *v /= z);
        inputs.push(solve_from(ch, a, tol, &init)?.optimal_input);
    }
    let unique = inputs.iter().all(|p| {
        p.iter().zip(&inputs[0]).all(|(u, v)| (u - v).abs() <= 1e-6)
    });
    let vs: Vec<f64> = if unique {
        vec![dispersion(ch, &inputs[0])]
    } else {
        inputs.iter().map(|p| dispersion(ch, p)).collect()
    };
    let v_min = vs.iter().cloned().fold(f64::INFINITY, f64::min);
    let v_max = vs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(CaidSet {
        capacity: base.capacity,
        multiplier: base.multiplier,
        inputs: if unique { vec![base.optimal_input] } else { inputs },
        unique,
        v_min,
        v_max,
    })
}

// Numerical stand-in for "dispersion vanishes, yet an unused symbol attains
// capacity with positive variance". BA only drives such a symbol's mass to
// zero sublinearly, so "unused" means below 1e-3, and the dispersion and
// divergences are taken on the remaining support with matching slack.
fn exotic_symbol(ch: &DmcSpec, r: &CapacityCostResult) -> Option<usize> {
    const LIGHT: f64 = 1e-3;
    let p = &r.optimal_input;
    let z: f64 = p.iter().filter(|&&v| v >= LIGHT).sum();
    let heavy: Vec<f64> = p.iter().map(|&v| if v >= LIGHT { v / z } else { 0.0 }).collect();
    if dispersion(ch, &heavy) > 1e-6 {
        return None;
    }
    let q = ch.output_law(&heavy);
    let d = divergences(ch, &q);
    let allowed = allowed_mask(ch, mean_cost(ch, p));
    let lagr = |x: usize| d[x] - r.multiplier * ch.cost(x);
    let level = (0..ch.input_size()).filter(|&x| allowed[x]).map(lagr).fold(f64::NEG_INFINITY, f64::max);
    (0..ch.input_size()).find(|&x| {
        if p[x] >= LIGHT || !allowed[x] || (lagr(x) - level).abs() > 1e-3 {
            return false;
        }
        let var: f64 = (0..ch.output_size())
            .filter(|&y| ch.w(x, y) > 0.0)
            .map(|y| ch.w(x, y) * ((ch.w(x, y) / q[y]).ln() - d[x]).powi(2))
            .sum();
        var > 1e-9
    })
}
