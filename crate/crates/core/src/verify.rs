//! Brute-force oracle sweeps.
//!
//! Each sweep pits a fast routine of this crate against an exhaustive or
//! closed-form reference and reports the number of cases and violations. The
//! CLI `verify` command and the acceptance tests both drive these.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dmc_bounds::{blahut_arimoto_constrained, beta_type_invariance_check, enumerate_types, ttt_sides};
use crate::ehmodel::DmcSpec;
use crate::error::Result;
use crate::hypotest::{beta_discrete_exact, beta_gaussian_product_exact, beta_lower_bound, discrete_lr_tail, gaussian_lr_tail};
use crate::numkernel::{birge_tail_bound, noncentral_chisq_cdf};

/// How much of each grid to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    /// Coarser grids for quick smoke runs.
    Fast,
}

/// Outcome of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed discrepancy: excess of bound over reference for the
    /// dominance checks, spread or gap for the equality checks.
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn from_gaps(name: &'static str, gaps: &[f64], tolerance: f64) -> Self {
        Self {
            name,
            cases: gaps.len(),
            violations: gaps.iter().filter(|&&g| !(g <= tolerance)).count(),
            worst: gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            tolerance,
        }
    }
}

// Absolute slack for truncated series in the dominance checks.
const SERIES_SLACK: f64 = 1e-12;

/// Exact non-central χ² CDF at Birgé's quantile against its `e^{−t}` bound,
/// over dof 1..50, B̄ in 0..25 (step 0.5) and t in 0.1..10 (step 0.1).
pub fn birge_dominance(scale: Scale) -> Result<Check> {
    let (nc_step, t_step) = match scale {
        Scale::Full => (1, 1),
        Scale::Fast => (4, 5),
    };
    let mut grid = Vec::new();
    for dof in 1..=50u32 {
        for b in (0..=50).step_by(nc_step) {
            for t in (1..=100).step_by(t_step) {
                grid.push((dof, b as f64 * 0.5, t as f64 * 0.1));
            }
        }
    }
    let gaps = grid
        .par_iter()
        .map(|&(dof, nc, t)| {
            let (q, bound) = birge_tail_bound(dof, nc, t)?;
            let exact = if q > 0.0 { noncentral_chisq_cdf(q, dof, nc)? } else { 0.0 };
            Ok(exact - bound)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Check::from_gaps("birge_dominance", &gaps, SERIES_SLACK))
}

fn random_law(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|v| v / s).collect();
    // absorb rounding so the law sums to 1 within the validators' tolerance
    let tail: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - tail;
    p
}

/// `sup_γ (α − P[dP/dQ ≥ γ])/γ ≤ β_α(P, Q)` on random finite triples and on
/// the Gaussian product pair at n ∈ {1, 4, 16}.
pub fn beta_bound_dominance(scale: Scale) -> Result<Check> {
    let triples = match scale {
        Scale::Full => 1000,
        Scale::Fast => 100,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xB37A);
    let mut gaps = Vec::with_capacity(triples + 64);
    let geometric: Vec<f64> = (-80..=80).map(|i| (i as f64 * 0.1).exp()).collect();
    for _ in 0..triples {
        let k = rng.random_range(2..=8);
        let p = random_law(&mut rng, k);
        let q = random_law(&mut rng, k);
        let alpha = rng.random_range(0.01..0.99);
        // the likelihood ratios themselves are where the sup is attained
        let mut grid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a / b).collect();
        grid.extend_from_slice(&geometric);
        let lb = beta_lower_bound(|g| discrete_lr_tail(&p, &q, g), alpha, &grid)?;
        let exact = beta_discrete_exact(&p, &q, alpha)?.beta;
        gaps.push(lb - exact);
    }
    let ln_grid: Vec<f64> = (-100..=150).map(|i| (i as f64 * 0.1).exp()).collect();
    for &n in &[1u32, 4, 16] {
        for &(noise_var, s) in &[(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            for &energy in &[0.25, 1.0, 2.0] {
                for &alpha in &[0.05, 0.5, 0.95] {
                    let x_norm_sq = energy * n as f64 * s;
                    let exact = beta_gaussian_product_exact(x_norm_sq, n, noise_var, s, alpha)?;
                    let tails = ln_grid
                        .iter()
                        .map(|g| gaussian_lr_tail(x_norm_sq, n, noise_var, s, g.ln()))
                        .collect::<Result<Vec<f64>>>()?;
                    let lb = ln_grid
                        .iter()
                        .zip(&tails)
                        .map(|(g, t)| (alpha - t).max(0.0) / g)
                        .fold(0.0, f64::max);
                    gaps.push(lb - exact);
                }
            }
        }
    }
    Ok(Check::from_gaps("beta_bound_dominance", &gaps, SERIES_SLACK))
}

/// Binary-input, binary-output channels used by the invariance sweep.
pub fn binary_test_channels() -> Vec<DmcSpec> {
    let fixed = [
        [[0.89, 0.11], [0.11, 0.89]],
        [[0.7, 0.3], [0.3, 0.7]],
        [[1.0, 0.0], [0.2, 0.8]],
        [[0.9, 0.1], [0.35, 0.65]],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A7E);
    let mut out: Vec<DmcSpec> = fixed
        .iter()
        .map(|m| DmcSpec::new(m.iter().map(|r| r.to_vec()).collect(), vec![0.0, 1.0]).expect("valid channel"))
        .collect();
    for _ in 0..4 {
        let rows = (0..2).map(|_| random_law(&mut rng, 2)).collect();
        out.push(DmcSpec::new(rows, vec![0.0, 1.0]).expect("valid channel"));
    }
    out
}

/// β_α(Wⁿ(·|x), q_yⁿ) is the same for every `x` of a given type.
pub fn beta_type_invariance(scale: Scale) -> Result<Check> {
    let n_max = match scale {
        Scale::Full => 6,
        Scale::Fast => 4,
    };
    let mut gaps = Vec::new();
    for ch in binary_test_channels() {
        let refs = [vec![0.5, 0.5], vec![0.3, 0.7], ch.output_law(&[0.5, 0.5])];
        for q_y in &refs {
            for n in 1..=n_max {
                for ty in enumerate_types(2, n)? {
                    for &alpha in &[0.05, 0.5, 0.95] {
                        gaps.push(beta_type_invariance_check(&ch, q_y, &ty, alpha)?);
                    }
                }
            }
        }
    }
    Ok(Check::from_gaps("beta_type_invariance", &gaps, 1e-9))
}

/// Supremum over cost-feasible sequences equals the supremum over feasible
/// types of the supremum over each class, for random `h` on {0,1}ⁿ.
pub fn type_transformation(scale: Scale) -> Result<Check> {
    let count = match scale {
        Scale::Full => 100,
        Scale::Fast => 20,
    };
    let ch = DmcSpec::bsc(0.11, [0.0, 1.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x777);
    let mut gaps = Vec::with_capacity(count);
    for i in 0..count {
        let n = 1 + i % 8;
        let a = rng.random_range(0.0..1.0);
        let table: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = |x: &[usize]| table[x.iter().fold(0, |acc, &s| acc * 2 + s)];
        let (lhs, rhs) = ttt_sides(&ch, a, n, &h)?;
        gaps.push((lhs - rhs).abs());
    }
    // both sides select the same table entry, so equality is exact
    Ok(Check::from_gaps("type_transformation", &gaps, 0.0))
}

fn binary_input_mi(ch: &DmcSpec, p1: f64) -> f64 {
    let px = [1.0 - p1, p1];
    (0..ch.output_size())
        .map(|y| {
            let qy = px[0] * ch.w(0, y) + px[1] * ch.w(1, y);
            (0..2)
                .filter(|&x| px[x] > 0.0 && ch.w(x, y) > 0.0)
                .map(|x| px[x] * ch.w(x, y) * (ch.w(x, y) / qy).ln())
                .sum::<f64>()
        })
        .sum()
}

/// Capacity-cost by a 10⁴-point search over `P(X = 1) ∈ [0, min(a, 1)]`.
pub fn grid_capacity_cost(ch: &DmcSpec, a: f64) -> f64 {
    let hi = a.min(1.0);
    (0..=10_000).map(|i| binary_input_mi(ch, hi * i as f64 / 10_000.0)).fold(0.0, f64::max)
}

fn binary_entropy_bits(p: f64) -> f64 {
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Constrained Blahut–Arimoto against the grid oracle on random binary-input
/// channels with costs (0, 1), plus the BSC(0.11) closed form.
pub fn ba_vs_grid(scale: Scale) -> Result<Check> {
    let channels = match scale {
        Scale::Full => 10,
        Scale::Fast => 3,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA);
    let mut cases = Vec::new();
    for _ in 0..channels {
        let ny = rng.random_range(2..=3);
        let rows = (0..2).map(|_| random_law(&mut rng, ny)).collect();
        let ch = DmcSpec::new(rows, vec![0.0, 1.0])?;
        for i in 1..=10 {
            cases.push((ch.clone(), i as f64 / 10.0));
        }
    }
    let mut gaps = cases
        .par_iter()
        .map(|(ch, a)| {
            let ba = blahut_arimoto_constrained(ch, *a, 1e-12)?.capacity;
            Ok((ba - grid_capacity_cost(ch, *a)).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let bsc = DmcSpec::bsc(0.11, [0.0, 1.0])?;
    let c_bits = blahut_arimoto_constrained(&bsc, 1.0, 1e-12)?.capacity / std::f64::consts::LN_2;
    gaps.push((c_bits - (1.0 - binary_entropy_bits(0.11))).abs());
    Ok(Check::from_gaps("ba_vs_grid", &gaps, 1e-6))
}

/// Every sweep, in a fixed order.
pub fn run_all(scale: Scale) -> Result<Vec<Check>> {
    Ok(vec![
        beta_bound_dominance(scale)?,
        birge_dominance(scale)?,
        beta_type_invariance(scale)?,
        type_transformation(scale)?,
        ba_vs_grid(scale)?,
    ])
}
