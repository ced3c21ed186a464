//! Binary hypothesis testing: exact Neyman–Pearson β, its likelihood-ratio
//! lower bound, and the Gaussian information-density tail behind the converse.

use crate::error::{check_open_unit, domain, Error, Result};
use crate::numkernel::{birge_tail_bound, noncentral_chisq_cdf_with, Tolerances};

/// Outcome of an optimal randomized Neyman–Pearson test `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpTestResult {
    /// Likelihood-ratio cutoff γ; outcomes above it are accepted outright.
    pub threshold: f64,
    /// Probability of accepting an outcome on the boundary.
    pub randomization: f64,
    /// Q[T = 1].
    pub beta: f64,
    /// P[T = 1].
    pub achieved_power: f64,
}

fn check_distribution(name: &str, d: &[f64]) -> Result<()> {
    if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return domain(format!("{name} has a negative or non-finite entry"));
    }
    let s: f64 = d.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return domain(format!("{name} sums to {s}, not 1"));
    }
    Ok(())
}

/// Outcome indices in test order: likelihood ratio descending, `q = 0 < p`
/// first, ties by index. Outcomes with `p = q = 0` are dropped.
pub(crate) fn np_order(p: &[f64], q: &[f64]) -> Vec<(usize, f64)> {
    let mut order: Vec<(usize, f64)> = p
        .iter()
        .zip(q)
        .enumerate()
        .filter(|(_, (&pi, &qi))| pi > 0.0 || qi > 0.0)
        .map(|(i, (&pi, &qi))| (i, if qi == 0.0 { f64::INFINITY } else { pi / qi }))
        .collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    order
}

/// β_α(P, Q) = min Q[T = 1] over tests with P[T = 1] ≥ α, on a finite alphabet.
pub fn beta_discrete_exact(p: &[f64], q: &[f64], alpha: f64) -> Result<NpTestResult> {
    if p.len() != q.len() || p.is_empty() {
        return domain(format!("p and q must share a nonempty alphabet (got {} and {})", p.len(), q.len()));
    }
    check_distribution("p", p)?;
    check_distribution("q", q)?;
    check_open_unit("alpha", alpha)?;
    let order = np_order(p, q);
    let mut power = 0.0;
    let mut beta = 0.0;
    for &(i, ratio) in &order {
        if p[i] > 0.0 && power + p[i] >= alpha {
            let frac = ((alpha - power) / p[i]).clamp(0.0, 1.0);
            return Ok(NpTestResult {
                threshold: ratio,
                randomization: frac,
                beta: (beta + frac * q[i]).min(1.0),
                achieved_power: alpha,
            });
        }
        power += p[i];
        beta += q[i];
    }
    // p sums to slightly less than alpha through rounding: accept everything
    Ok(NpTestResult {
        threshold: 0.0,
        randomization: 1.0,
        beta: beta.min(1.0),
        achieved_power: power,
    })
}

/// `sup_γ (α − P[dP/dQ ≥ γ])⁺ / γ` over the supplied grid.
pub fn beta_lower_bound(p_tail: impl Fn(f64) -> f64, alpha: f64, gamma_grid: &[f64]) -> Result<f64> {
    if gamma_grid.is_empty() {
        return domain("gamma grid is empty");
    }
    if let Some(g) = gamma_grid.iter().find(|&&g| !(g > 0.0) || !g.is_finite()) {
        return domain(format!("gamma grid entries must be positive and finite, got {g}"));
    }
    Ok(gamma_grid
        .iter()
        .map(|&g| (alpha - p_tail(g)).max(0.0) / g)
        .fold(0.0, f64::max))
}

/// `P[dP/dQ ≥ γ]` for finite distributions.
pub fn discrete_lr_tail(p: &[f64], q: &[f64], gamma: f64) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, &qi)| pi > 0.0 && (qi == 0.0 || pi >= gamma * qi))
        .map(|(&pi, _)| pi)
        .sum()
}

/// Parameters of the Gaussian pair `P = N(x, σ²Iₙ)`, `Q = N(0, (s + σ²)Iₙ)`.
///
/// The log-likelihood ratio is `nC_S + ‖x‖²/(2s) − k·T` with
/// `T = ‖y − x(s+σ²)/s‖²` and `k = s/(2σ²(s+σ²))`, so everything reduces to
/// non-central χ² laws of `T`.
#[derive(Debug, Clone, Copy)]
struct GaussianPair {
    n: u32,
    noise_var: f64,
    s: f64,
    x_norm_sq: f64,
}

impl GaussianPair {
    fn new(x_norm_sq: f64, n: u32, noise_var: f64, s: f64) -> Result<Self> {
        if n < 1 {
            return domain("n must be >= 1");
        }
        if !(x_norm_sq >= 0.0) || !x_norm_sq.is_finite() {
            return domain(format!("x_norm_sq must be finite and >= 0, got {x_norm_sq}"));
        }
        if !(noise_var > 0.0) || !(s > 0.0) || !noise_var.is_finite() || !s.is_finite() {
            return domain(format!("noise_var and s must be > 0, got ({noise_var}, {s})"));
        }
        Ok(Self { n, noise_var, s, x_norm_sq })
    }

    /// Noncentrality of `T/σ²` under P.
    fn nc_p(&self) -> f64 {
        self.x_norm_sq * self.noise_var / (self.s * self.s)
    }

    /// Noncentrality of `T/(s+σ²)` under Q.
    fn nc_q(&self) -> f64 {
        self.x_norm_sq * (self.s + self.noise_var) / (self.s * self.s)
    }

    /// `nC_S` in nats.
    fn n_cap(&self) -> f64 {
        0.5 * self.n as f64 * (self.s / self.noise_var).ln_1p()
    }

    fn k(&self) -> f64 {
        self.s / (2.0 * self.noise_var * (self.s + self.noise_var))
    }

    /// P[ln dP/dQ ≥ ℓ].
    fn lr_tail_log(&self, ell: f64) -> Result<f64> {
        let t = (self.n_cap() + self.x_norm_sq / (2.0 * self.s) - ell) / self.k();
        if t <= 0.0 {
            return Ok(0.0);
        }
        noncentral_chisq_cdf(t / self.noise_var, self.n, self.nc_p())
    }
}

// Poisson(nc/2) mixture; the budget covers ±40 standard deviations of the weights.
fn noncentral_chisq_cdf(x: f64, dof: u32, nc: f64) -> Result<f64> {
    let budget = (40.0 * (0.5 * nc).sqrt()).ceil() as usize;
    let tol = Tolerances::default();
    noncentral_chisq_cdf_with(x, dof, nc, &tol.with_max_iter(budget.max(tol.max_iter)))
}

fn chisq_quantile(p: f64, dof: u32, nc: f64) -> Result<f64> {
    let mean = dof as f64 + nc;
    let mut hi = mean + 10.0 * (2.0 * (dof as f64 + 2.0 * nc)).sqrt() + 10.0;
    let mut grow = 0;
    while noncentral_chisq_cdf(hi, dof, nc)? < p {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::Computation {
                message: format!("could not bracket the {p} quantile of chi2({dof}, {nc})"),
                partial: hi,
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if noncentral_chisq_cdf(mid, dof, nc)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Computation {
        message: format!("bisection for the {p} quantile of chi2({dof}, {nc}) did not converge"),
        partial: 0.5 * (lo + hi),
    })
}

/// Exact β_α between `N(x, σ²Iₙ)` and `N(0, (s+σ²)Iₙ)`; depends on `x` only
/// through `‖x‖²`.
pub fn beta_gaussian_product_exact(x_norm_sq: f64, n: u32, noise_var: f64, s: f64, alpha: f64) -> Result<f64> {
    check_open_unit("alpha", alpha)?;
    let g = GaussianPair::new(x_norm_sq, n, noise_var, s)?;
    // accept the lower tail of T
    let t = noise_var * chisq_quantile(alpha, n, g.nc_p())?;
    noncentral_chisq_cdf(t / (s + noise_var), n, g.nc_q())
}

/// `P[dP/dQ ≥ γ]` for the Gaussian pair, given `ln γ`.
pub fn gaussian_lr_tail(x_norm_sq: f64, n: u32, noise_var: f64, s: f64, ln_gamma: f64) -> Result<f64> {
    GaussianPair::new(x_norm_sq, n, noise_var, s)?.lr_tail_log(ln_gamma)
}

/// Bounds on `P[ln dP/dQ ≥ nC_S − ζ]` for the Gaussian pair, ζ < 0 in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoDensityTail {
    /// From the non-central χ² CDF.
    pub exact: f64,
    /// Birgé's bound at the actual noncentrality.
    pub birge: f64,
    /// `exp(−ζ²/(4ρ²n(1 + 2σ²/s)))`, ρ = s/(2(s+σ²)).
    pub fort1: f64,
    /// `exp(−ζ²/(2nV_S))` with `V_S = s(s+2σ²)/(2(s+σ²)²)`.
    pub chi2: f64,
}

/// Tail of the information density above `nC_S − ζ` and its upper bounds.
pub fn info_density_tail(x_norm_sq: f64, n: u32, noise_var: f64, s: f64, zeta: f64) -> Result<InfoDensityTail> {
    if !(zeta < 0.0) || !zeta.is_finite() {
        return domain(format!("zeta must be negative, got {zeta}"));
    }
    let g = GaussianPair::new(x_norm_sq, n, noise_var, s)?;
    let nf = n as f64;
    if x_norm_sq > nf * s * (1.0 + 1e-12) {
        return domain(format!("x_norm_sq = {x_norm_sq} exceeds n*s = {}", nf * s));
    }
    let exact = g.lr_tail_log(g.n_cap() - zeta)?;
    let rho = s / (2.0 * (s + noise_var));
    let b = g.nc_p();
    // Birgé's quantile n + B̄ − 2√((n+2B̄)t) equals the event's cutoff at this t
    let gap = (nf - x_norm_sq / s).max(0.0) - zeta / rho;
    let t = gap * gap / (4.0 * (nf + 2.0 * b));
    let birge = birge_tail_bound(n, b, t)?.1;
    let fort1 = (-zeta * zeta / (4.0 * rho * rho * nf * (1.0 + 2.0 * noise_var / s))).exp();
    let v_s = s * (s + 2.0 * noise_var) / (2.0 * (s + noise_var).powi(2));
    let chi2 = (-zeta * zeta / (2.0 * nf * v_s)).exp();
    Ok(InfoDensityTail { exact, birge, fort1, chi2 })
}
