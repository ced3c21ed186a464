//! Energy-harvesting DMC: information density, dispersion, capacity-cost,
//! second-order bounds and method-of-types tooling.
//!
//! Both bounds here are asymptotic expansions with their remainders dropped,
//! so every [`BoundResult`] they return has `certified = false`.

mod ba;
mod types;

use std::collections::BTreeMap;

pub use ba::{ba_objective_trace, blahut_arimoto_constrained, caid_set, capacity_cost_derivative, CaidSet, CapacityCostResult};
pub use types::{
    all_sequences, beta_type_invariance_check, enumerate_types, sorted_lr_profile, ttt_check, ttt_sides,
    type_of_sequence, TypeVector,
};

use crate::awgn_bounds::{d_epsilon, BoundResult, Lambda, Terms};
use crate::ehmodel::{DmcSpec, EnergyProcess};
use crate::error::{check_open_unit, domain, Result};
use crate::numkernel::{grid_then_golden, norm_inv, norm_inv_deriv};
use crate::units::{nats2_to_bits2, nats_to_bits};

const BA_TOL: f64 = 1e-12;

fn check_input(ch: &DmcSpec, input: &[f64]) -> Result<()> {
    if input.len() != ch.input_size() {
        return domain(format!("input law has {} entries, channel has {} inputs", input.len(), ch.input_size()));
    }
    if input.iter().any(|&p| !(p >= 0.0)) || (input.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return domain("input law must be a probability vector");
    }
    Ok(())
}

/// `ln(W(y|x)/PW(y))` in nats.
pub fn information_density(ch: &DmcSpec, input: &[f64], x: usize, y: usize) -> Result<f64> {
    check_input(ch, input)?;
    if x >= ch.input_size() || y >= ch.output_size() {
        return domain(format!("symbol pair ({x}, {y}) out of range"));
    }
    let q = ch.output_law(input)[y];
    let w = ch.w(x, y);
    if w > 0.0 && q == 0.0 {
        return domain(format!("output {y} has zero probability under the input law"));
    }
    Ok((w / q).ln())
}

// D(W(·|x) ‖ q) for every x; +∞ where q misses W's support.
pub(crate) fn divergences(ch: &DmcSpec, q: &[f64]) -> Vec<f64> {
    ch.rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(q)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &qy)| if qy > 0.0 { w * (w / qy).ln() } else { f64::INFINITY })
                .sum()
        })
        .collect()
}

/// `I(P;W)` in nats. Inputs with zero mass are ignored.
pub fn mutual_information(ch: &DmcSpec, input: &[f64]) -> f64 {
    let q = ch.output_law(input);
    let d = divergences(ch, &q);
    input.iter().zip(&d).filter(|(&p, _)| p > 0.0).map(|(p, d)| p * d).sum()
}

/// Unconditional variance of the information density under `P × W`, nats².
pub fn dispersion(ch: &DmcSpec, input: &[f64]) -> f64 {
    let q = ch.output_law(input);
    let (mut m1, mut m2) = (0.0, 0.0);
    for (x, &px) in input.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (y, &w) in ch.row(x).iter().enumerate() {
            if w > 0.0 {
                let i = (w / q[y]).ln();
                m1 += px * w * i;
                m2 += px * w * i * i;
            }
        }
    }
    (m2 - m1 * m1).max(0.0)
}

fn cost_variance(ch: &DmcSpec, input: &[f64]) -> f64 {
    let m: f64 = input.iter().zip(ch.costs()).map(|(p, c)| p * c).sum();
    input.iter().zip(ch.costs()).map(|(p, c)| p * (c - m).powi(2)).sum()
}

/// `n̂C − √n̂·K_ε·C + √(n̂V/2)·Φ⁻¹(λε) − log₂n̂` with the capacity-cost
/// achiever as input law. `K_ε` uses `Var(E₁ − Λ(X₁))`.
pub fn eh_dmc_achievability(
    ch: &DmcSpec,
    proc: &EnergyProcess,
    n_hat: u64,
    epsilon: f64,
    lambda: Lambda,
) -> Result<BoundResult> {
    if n_hat < 1 {
        return domain("n_hat must be >= 1");
    }
    check_open_unit("epsilon", epsilon)?;
    if let Lambda::Fixed(l) = lambda {
        check_open_unit("lambda", l)?;
    }
    let mean = proc.mean();
    let set = caid_set(ch, mean, BA_TOL)?;
    let input = &set.inputs[0];
    let var_delta = proc.variance() + cost_variance(ch, input);
    let mut notes = vec![
        "approximation, not a certified bound: O(1) remainder dropped".to_string(),
        "consumes E[E1], Var(E1)".to_string(),
    ];
    if !set.unique {
        notes.push("capacity-achieving input not unique: V range is heuristic".to_string());
    }
    // With Var(Δ₁) = 0 the cost per symbol is a constant no larger than the
    // constant harvest, so no saving phase is needed. Keep a √n guard if not.
    let guard = var_delta == 0.0 && ch.costs().iter().zip(input).any(|(&c, &p)| p > 0.0 && c > mean * (1.0 + 1e-12));
    if guard {
        notes.push("zero Var(Delta_1) with cost above harvest: saving phase kept at ceil(sqrt(n))".to_string());
    }
    let k_of = |l: f64| {
        if guard {
            1.0
        } else {
            2.0 * var_delta.sqrt() / (mean * ((1.0 - l) * epsilon).sqrt())
        }
    };
    let c = set.capacity;
    let nf = n_hat as f64;
    let v_of = |l: f64| if epsilon <= 1.0 / (2.0 * l) { set.v_max } else { set.v_min };
    let terms_of = |l: f64| Terms {
        first_order: nf * nats_to_bits(c),
        second_order: nats_to_bits(-nf.sqrt() * k_of(l) * c + (nf * v_of(l) / 2.0).sqrt() * norm_inv(l * epsilon)),
        log: -nf.log2(),
        constant: 0.0,
    };
    let l = match lambda {
        Lambda::Fixed(l) => l,
        Lambda::Auto => grid_then_golden(&|l| terms_of(l).sum(), 0.01, 0.99, 25).0,
    };
    let mut d = BTreeMap::new();
    d.insert("lambda", l);
    d.insert("K_eps", k_of(l));
    d.insert("var_delta", var_delta);
    d.insert("C_ED", nats_to_bits(c));
    d.insert("V_ED", nats2_to_bits2(v_of(l)));
    d.insert("V_min", nats2_to_bits2(set.v_min));
    d.insert("V_max", nats2_to_bits2(set.v_max));
    Ok(BoundResult::valid(terms_of(l), false, d, notes))
}

/// Largest bound on `Φ⁻¹′` over `[ε, ε + (1−ε)/4]`. `Φ⁻¹′` is convex, so the
/// maximum sits at an endpoint.
pub fn taylor_constant(epsilon: f64) -> f64 {
    norm_inv_deriv(epsilon).max(norm_inv_deriv(epsilon + (1.0 - epsilon) / 4.0))
}

fn root_fn(e: f64) -> f64 {
    norm_inv(e) + taylor_constant(e) * (1.0 - e) / 4.0
}

/// Largest root in (0, 1) of `Φ⁻¹(ε) + K_T(ε)(1−ε)/4`.
pub fn epsilon_r() -> f64 {
    let grid: Vec<f64> = (1..4000).map(|i| i as f64 / 4000.0).collect();
    let (mut lo, mut hi) = grid
        .windows(2)
        .rev()
        .find(|w| root_fn(w[0]) <= 0.0 && root_fn(w[1]) > 0.0)
        .map(|w| (w[0], w[1]))
        .expect("sign change");
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if root_fn(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `nC + √n·C′(𝔼E₁)·D_ε + √(nV*)·(Φ⁻¹(ε) + K_T(1−ε)/4)` in bits, the last
/// K_T term present only when arrivals fluctuate. `eta` widens the cost level
/// at which `V*` is taken; default `0.01·𝔼[E₁]`.
pub fn eh_dmc_converse(ch: &DmcSpec, proc: &EnergyProcess, n: u64, epsilon: f64, eta: Option<f64>) -> Result<BoundResult> {
    if n < 1 {
        return domain("n must be >= 1");
    }
    check_open_unit("epsilon", epsilon)?;
    let mean = proc.mean();
    let eta = eta.unwrap_or(0.01 * mean);
    if !(eta > 0.0) || !eta.is_finite() {
        return domain(format!("eta must be positive, got {eta}"));
    }
    let nf = n as f64;
    let base = blahut_arimoto_constrained(ch, mean, BA_TOL)?;
    let c = base.capacity;
    let c_prime = base.multiplier;
    let d_eps = d_epsilon(proc, epsilon);
    let delta = d_eps / nf.sqrt();
    let tau = if proc.variance() == 0.0 { 0.0 } else { proc.variance() / (nf * delta * delta) };
    let k_t = taylor_constant(epsilon);
    let eps_r = epsilon_r();
    let mut d = BTreeMap::new();
    d.insert("C_ED", nats_to_bits(c));
    d.insert("C_prime", nats_to_bits(c_prime));
    d.insert("D_eps", d_eps);
    d.insert("delta_n", delta);
    d.insert("v_n", mean + delta);
    d.insert("tau_n", tau);
    d.insert("K_T", k_t);
    d.insert("eps_R", eps_r);
    d.insert("eta", eta);
    if tau > (1.0 - epsilon) / 4.0 * (1.0 + 1e-12) {
        return Ok(BoundResult::invalid(format!("tau_n = {tau} exceeds (1 - eps)/4"), false, d));
    }
    let set = caid_set(ch, mean + eta, BA_TOL)?;
    let coef = norm_inv(epsilon) + if tau > 0.0 { k_t * (1.0 - epsilon) / 4.0 } else { 0.0 };
    // the smaller dispersion is the larger (safer) bound when the coefficient is negative
    let v_star = if coef <= 0.0 { set.v_min } else { set.v_max };
    d.insert("V_star", nats2_to_bits2(v_star));
    d.insert("V_min", nats2_to_bits2(set.v_min));
    d.insert("V_max", nats2_to_bits2(set.v_max));
    d.insert("sqrt_n_coefficient", nats_to_bits(c_prime * d_eps + v_star.sqrt() * coef));
    let mut notes = vec![
        "approximation, not a certified bound: O(log n) remainder dropped".to_string(),
        "consumes E[E1], Var(E1)".to_string(),
    ];
    if !set.unique {
        notes.push("capacity-achieving input not unique: V range is heuristic".to_string());
    }
    let terms = Terms {
        first_order: nf * nats_to_bits(c),
        second_order: nf.sqrt() * nats_to_bits(c_prime * d_eps + v_star.sqrt() * coef),
        log: 0.0,
        constant: 0.0,
    };
    Ok(BoundResult::valid(terms, false, d, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::LN_2;

    fn random_channel(rng: &mut ChaCha8Rng, nx: usize, ny: usize) -> DmcSpec {
        let w = (0..nx)
            .map(|_| {
                let r: Vec<f64> = (0..ny).map(|_| rng.random::<f64>() + 0.01).collect();
                let z: f64 = r.iter().sum();
                r.into_iter().map(|v| v / z).collect()
            })
            .collect();
        let mut costs: Vec<f64> = (0..nx).map(|_| rng.random::<f64>()).collect();
        costs[0] = 0.0;
        DmcSpec::new(w, costs).unwrap()
    }

    fn entropy(v: &[f64]) -> f64 {
        v.iter().filter(|&&p| p > 0.0).map(|p| -p * p.ln()).sum()
    }

    #[test]
    fn density_examples() {
        let useless = DmcSpec::new(vec![vec![0.3, 0.7], vec![0.3, 0.7]], vec![0.0, 1.0]).unwrap();
        let noiseless = DmcSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 1.0]).unwrap();
        let u = [0.5, 0.5];
        for x in 0..2 {
            for y in 0..2 {
                assert!(information_density(&useless, &u, x, y).unwrap().abs() < 1e-15);
            }
            assert!((information_density(&noiseless, &u, x, x).unwrap() - LN_2).abs() < 1e-15);
        }
        assert_eq!(dispersion(&useless, &u), 0.0);
        assert!(dispersion(&noiseless, &u) < 1e-30);
        assert!(information_density(&noiseless, &[1.0, 0.0], 1, 1).is_err());
    }

    #[test]
    fn mutual_information_matches_entropies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let ch = random_channel(&mut rng, 3, 3);
            let mut p: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let z: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= z);
            let mut by_density = 0.0;
            for x in 0..3 {
                for y in 0..3 {
                    by_density += p[x] * ch.w(x, y) * information_density(&ch, &p, x, y).unwrap();
                }
            }
            let hy = entropy(&ch.output_law(&p));
            let hyx: f64 = (0..3).map(|x| p[x] * entropy(ch.row(x))).sum();
            assert!((by_density - (hy - hyx)).abs() < 1e-10);
            assert!((mutual_information(&ch, &p) - (hy - hyx)).abs() < 1e-10);
            assert!(dispersion(&ch, &p) >= 0.0);
        }
    }

    #[test]
    fn bsc_dispersion_by_simulation() {
        let ch = DmcSpec::bsc(0.11, [0.0, 0.0]).unwrap();
        let v = dispersion(&ch, &[0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (hit, miss) = ((2.0 * 0.89f64).ln(), (2.0 * 0.11f64).ln());
        let trials = 10_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..trials {
            let i = if rng.random::<f64>() < 0.11 { miss } else { hit };
            s1 += i;
            s2 += i * i;
        }
        let m = s1 / trials as f64;
        let var = s2 / trials as f64 - m * m;
        // sd of the sample variance: sqrt((μ₄ − σ⁴)/N); for a two-point law μ₄ = σ⁴/(p(1−p)) − 3σ⁴ + ...
        let p: f64 = 0.11;
        let mu4 = v * v * (1.0 - 3.0 * p * (1.0 - p)) / (p * (1.0 - p));
        let se = ((mu4 - v * v) / trials as f64).sqrt();
        assert!((var - v).abs() < 3.0 * se, "{var} vs {v} (se {se})");
        let closed = 0.11 * 0.89 * (0.89f64 / 0.11).ln().powi(2);
        assert!((v - closed).abs() < 1e-12);
    }

    #[test]
    fn epsilon_r_is_a_root() {
        let r = epsilon_r();
        assert!(root_fn(r).abs() < 1e-9);
        assert!((0.3..0.32).contains(&r), "{r}");
        // negative only on a band below ε_R; K_T blows up as ε → 0
        assert!(root_fn(0.2) < 0.0);
        assert!(root_fn(0.05) > 0.0);
        assert!(root_fn(0.9) > 0.0);
    }

    #[test]
    fn taylor_constant_bounds_the_quantile_increment() {
        for &e in &[0.01, 0.1, 0.3, 0.6] {
            let k = taylor_constant(e);
            for i in 1..=50 {
                let t = (1.0 - e) / 4.0 * i as f64 / 50.0;
                assert!(norm_inv(e + t) <= norm_inv(e) + t * k + 1e-12);
            }
        }
    }

    #[test]
    fn constant_arrivals_reduce_to_cost_constrained_shape() {
        let ch = DmcSpec::bsc(0.11, [0.0, 1.0]).unwrap();
        let proc = EnergyProcess::constant(0.3).unwrap();
        let r = eh_dmc_converse(&ch, &proc, 10_000, 0.1, None).unwrap();
        assert_eq!(r.diag("D_eps"), Some(0.0));
        assert_eq!(r.diag("tau_n"), Some(0.0));
        let c = blahut_arimoto_constrained(&ch, 0.3, 1e-12).unwrap().capacity;
        assert!((r.terms.first_order - 10_000.0 * nats_to_bits(c)).abs() < 1e-6);
        let v = r.diag("V_star").unwrap();
        let want = 100.0 * v.sqrt() * norm_inv(0.1);
        assert!((r.terms.second_order - want).abs() < 1e-9 * want.abs());
        assert!(r.terms.second_order < 0.0);
    }

    #[test]
    fn negative_root_n_coefficient_at_small_epsilon() {
        let ch = DmcSpec::bsc(0.11, [0.0, 1.0]).unwrap();
        let proc = EnergyProcess::uniform(0.2, 0.4).unwrap();
        let r = eh_dmc_converse(&ch, &proc, 100_000, 0.2, None).unwrap();
        assert!(r.diag("sqrt_n_coefficient").unwrap() < 0.0);
        assert!(r.log2_m < r.terms.first_order);
        let tau = r.diag("tau_n").unwrap();
        assert!((tau - 0.8 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn achievability_approaches_capacity() {
        let ch = DmcSpec::bsc(0.11, [0.0, 1.0]).unwrap();
        let proc = EnergyProcess::exponential(1.0 / 0.3).unwrap();
        let grid = [1e4, 1e5, 1e6, 1e7, 1e8];
        let c = blahut_arimoto_constrained(&ch, 0.3, 1e-12).unwrap().capacity;
        let gaps: Vec<f64> = grid
            .iter()
            .map(|&n| {
                let r = eh_dmc_achievability(&ch, &proc, n as u64, 0.1, Lambda::Fixed(0.5)).unwrap();
                nats_to_bits(c) - r.rate(n as u64)
            })
            .collect();
        let lx: Vec<f64> = grid.iter().map(|x: &f64| x.ln()).collect();
        let ly: Vec<f64> = gaps.iter().map(|y| y.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / 5.0, ly.iter().sum::<f64>() / 5.0);
        let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
            / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        assert!((-0.55..=-0.45).contains(&slope), "{slope}");
    }

    #[test]
    fn achievability_falls_with_k_epsilon() {
        // K_ε grows with Var(E₁) at fixed mean
        let ch = DmcSpec::bsc(0.11, [0.0, 1.0]).unwrap();
        let mut last = f64::INFINITY;
        for sd in [0.0, 0.05, 0.1, 0.2] {
            let proc = if sd == 0.0 {
                EnergyProcess::constant(0.5).unwrap()
            } else {
                EnergyProcess::uniform(0.5 - sd * 3f64.sqrt(), 0.5 + sd * 3f64.sqrt()).unwrap()
            };
            let r = eh_dmc_achievability(&ch, &proc, 100_000, 0.1, Lambda::Fixed(0.5)).unwrap();
            assert!(r.log2_m <= last);
            last = r.log2_m;
        }
    }

    #[test]
    fn degenerate_delta_has_no_saving_phase() {
        let ch = DmcSpec::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 0.0]).unwrap();
        let proc = EnergyProcess::constant(1.0).unwrap();
        let r = eh_dmc_achievability(&ch, &proc, 1000, 0.1, Lambda::Fixed(0.5)).unwrap();
        assert_eq!(r.diag("K_eps"), Some(0.0));
        // V = 0 as well, so only the log term remains
        assert!((r.log2_m - (1000.0 - 1000f64.log2())).abs() < 1e-6);
    }

    #[test]
    fn converse_dominates_achievability() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let ch = random_channel(&mut rng, 2, 3);
            let proc = EnergyProcess::exponential(2.0).unwrap();
            for n in [1_000u64, 10_000, 100_000, 1_000_000] {
                let a = eh_dmc_achievability(&ch, &proc, n, 0.1, Lambda::Auto).unwrap();
                let c = eh_dmc_converse(&ch, &proc, n, 0.1, None).unwrap();
                assert!(a.log2_m <= c.log2_m, "n={n}: {} > {}", a.log2_m, c.log2_m);
            }
        }
    }
}
