use super::gamma::{ln_gamma, reg_lower_gamma};
use super::Tolerances;
use crate::error::{domain, Error, Result};

/// CDF of the central χ² law with `dof` degrees of freedom.
pub fn central_chisq_cdf(x: f64, dof: u32) -> Result<f64> {
    if dof == 0 {
        return domain("chi-squared needs dof >= 1");
    }
    if !(x >= 0.0) {
        return domain(format!("chi-squared CDF needs x >= 0, got {x}"));
    }
    reg_lower_gamma(dof as f64 / 2.0, x / 2.0)
}

/// CDF of the non-central χ² law, default tolerances.
pub fn noncentral_chisq_cdf(x: f64, dof: u32, noncentrality: f64) -> Result<f64> {
    noncentral_chisq_cdf_with(x, dof, noncentrality, &Tolerances::default())
}

/// CDF of the non-central χ² law as the Poisson(nc/2) mixture of central
/// χ²(dof + 2j) CDFs.
///
/// Summation starts at the Poisson mode and walks outward in both directions.
/// Each direction stops once the Poisson mass it has not yet visited, times
/// the largest central CDF it could still meet, drops below `rel_tol` times the
/// running sum; `max_iter` caps the number of terms per direction.
pub fn noncentral_chisq_cdf_with(x: f64, dof: u32, noncentrality: f64, tol: &Tolerances) -> Result<f64> {
    if dof == 0 {
        return domain("non-central chi-squared needs dof >= 1");
    }
    if !(noncentrality >= 0.0) || !noncentrality.is_finite() {
        return domain(format!("noncentrality must be finite and >= 0, got {noncentrality}"));
    }
    if !(x >= 0.0) {
        return domain(format!("non-central chi-squared CDF needs x >= 0, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let half_dof = dof as f64 / 2.0;
    let y = x / 2.0;
    if noncentrality == 0.0 {
        return reg_lower_gamma(half_dof, y);
    }

    let mu = noncentrality / 2.0;
    let mode = mu.floor();
    let log_w_mode = -mu + mode * mu.ln() - ln_gamma(mode + 1.0);
    let w_mode = log_w_mode.exp();

    let mut sum = 0.0;

    // Downward from the mode (inclusive). Central CDFs grow as j falls, so the
    // unvisited contribution is bounded by the remaining Poisson mass alone.
    let mut j = mode;
    let mut w = w_mode;
    let mut steps = 0;
    loop {
        sum += w * reg_lower_gamma(half_dof + j, y)?;
        if j == 0.0 {
            break;
        }
        let ratio = j / mu;
        let below = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if below <= tol.rel_tol * sum || below < f64::MIN_POSITIVE {
            break;
        }
        steps += 1;
        if steps >= tol.max_iter {
            return Err(Error::Computation {
                message: format!(
                    "non-central chi-squared series (x={x}, dof={dof}, nc={noncentrality}) exceeded {} terms below the mode",
                    tol.max_iter
                ),
                partial: sum,
            });
        }
        w *= j / mu;
        j -= 1.0;
    }

    // Upward from mode + 1. Central CDFs shrink as j grows.
    let mut j = mode;
    let mut w = w_mode;
    let mut steps = 0;
    loop {
        j += 1.0;
        w *= mu / j;
        let p = reg_lower_gamma(half_dof + j, y)?;
        sum += w * p;
        let ratio = mu / (j + 1.0);
        let above = if ratio < 1.0 { w * ratio / (1.0 - ratio) } else { f64::INFINITY };
        if p == 0.0 || above * p <= tol.rel_tol * sum {
            break;
        }
        steps += 1;
        if steps >= tol.max_iter {
            return Err(Error::Computation {
                message: format!(
                    "non-central chi-squared series (x={x}, dof={dof}, nc={noncentrality}) exceeded {} terms above the mode",
                    tol.max_iter
                ),
                partial: sum,
            });
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Birgé's lower-tail bound for a non-central χ² variable χ:
/// `Pr(χ ≤ dof + B̄ − 2√((dof + 2B̄)t)) ≤ e^{−t}`.
///
/// Returns the quantile (possibly negative) and the bound.
pub fn birge_tail_bound(dof: u32, noncentrality: f64, t: f64) -> Result<(f64, f64)> {
    if dof == 0 {
        return domain("Birge bound needs dof >= 1");
    }
    if !(noncentrality >= 0.0) {
        return domain(format!("noncentrality must be >= 0, got {noncentrality}"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("Birge bound needs t > 0, got {t}"));
    }
    let n = dof as f64;
    let q = n + noncentrality - 2.0 * ((n + 2.0 * noncentrality) * t).sqrt();
    Ok((q, (-t).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_dof_closed_form() {
        let v = noncentral_chisq_cdf(2.0, 2, 0.0).unwrap();
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((v - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn zero_is_support_boundary() {
        for dof in 1..5 {
            for &nc in &[0.0, 0.5, 30.0] {
                assert_eq!(noncentral_chisq_cdf(0.0, dof, nc).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn central_case_matches_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for dof in [1u32, 2, 3, 7, 20, 64] {
            let d = ChiSquared::new(dof as f64).unwrap();
            for &x in &[0.01, 0.5, 1.0, 3.3, 10.0, 50.0, 100.0] {
                let ours = noncentral_chisq_cdf(x, dof, 0.0).unwrap();
                let theirs = d.cdf(x);
                assert!((ours - theirs).abs() <= 1e-9 * theirs.max(1e-300) + 1e-14, "dof={dof} x={x}");
            }
        }
    }

    #[test]
    fn matches_monte_carlo_oracle() {
        // (Z1 + √1.5)² + Z2² + Z3² ≤ 6
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_161_017);
        let trials = 10_000_000u64;
        let shift = 1.5f64.sqrt();
        let mut hits = 0u64;
        for _ in 0..trials {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let z3: f64 = StandardNormal.sample(&mut rng);
            if (z1 + shift).powi(2) + z2 * z2 + z3 * z3 <= 6.0 {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / trials as f64;
        let se = (p_hat * (1.0 - p_hat) / trials as f64).sqrt();
        let exact = noncentral_chisq_cdf(6.0, 3, 1.5).unwrap();
        assert!((exact - p_hat).abs() <= 3.0 * se, "exact={exact} mc={p_hat} se={se}");
    }

    #[test]
    fn monotone_in_x() {
        for &nc in &[0.3, 4.0, 60.0] {
            let mut last = 0.0;
            for i in 1..400 {
                let v = noncentral_chisq_cdf(i as f64 * 0.5, 5, nc).unwrap();
                assert!(v >= last - 1e-15);
                last = v;
            }
        }
    }

    #[test]
    fn large_noncentrality_converges() {
        // mean dof + nc; the CDF at the mean of a near-Gaussian law is near 1/2
        let v = noncentral_chisq_cdf(2000.0, 1000, 1000.0).unwrap();
        assert!((v - 0.5).abs() < 0.02, "{v}");
        // dominant terms sit far below the Poisson mode; compare with a plain
        // front-to-back sum of the mixture
        let wide = Tolerances::default().with_max_iter(2000);
        let tiny = noncentral_chisq_cdf_with(1.0, 3, 1000.0, &wide).unwrap();
        let naive: f64 = (0..1500)
            .map(|j| {
                let j = j as f64;
                (-500.0 + j * 500f64.ln() - ln_gamma(j + 1.0)).exp() * reg_lower_gamma(1.5 + j, 0.5).unwrap()
            })
            .sum();
        assert!(tiny > 0.0 && (tiny - naive).abs() <= 1e-9 * naive, "{tiny} vs {naive}");
    }

    #[test]
    fn iteration_cap_reports_partial_sum() {
        let tol = Tolerances::default().with_max_iter(2);
        match noncentral_chisq_cdf_with(2000.0, 1000, 1000.0, &tol) {
            Err(Error::Computation { partial, .. }) => assert!(partial > 0.0 && partial < 1.0),
            other => panic!("expected a computation error, got {other:?}"),
        }
    }

    #[test]
    fn birge_examples() {
        let (q, b) = birge_tail_bound(10, 5.0, 1.0).unwrap();
        assert!((q - (15.0 - 2.0 * 20f64.sqrt())).abs() < 1e-12);
        assert!((q - 6.0557).abs() < 1e-4);
        assert!((b - (-1.0f64).exp()).abs() < 1e-15);
        assert!(noncentral_chisq_cdf(q, 10, 5.0).unwrap() <= b);

        let (q, b) = birge_tail_bound(7, 3.0, 1e-12).unwrap();
        assert!((q - 10.0).abs() < 1e-4 && (b - 1.0).abs() < 1e-11);

        let (q, b) = birge_tail_bound(1, 0.0, 5.0).unwrap();
        assert!(q < 0.0);
        assert!(noncentral_chisq_cdf(q.max(0.0), 1, 0.0).unwrap() <= b);

        assert!(birge_tail_bound(3, 1.0, 0.0).is_err());
        assert!(birge_tail_bound(3, 1.0, -1.0).is_err());
    }

    #[test]
    fn birge_dominates_on_coarse_grid() {
        for dof in (1..=50).step_by(7) {
            for k in (0..=50).step_by(5) {
                let nc = 0.5 * k as f64;
                for i in (1..=100).step_by(9) {
                    let t = 0.1 * i as f64;
                    let (q, b) = birge_tail_bound(dof, nc, t).unwrap();
                    let exact = noncentral_chisq_cdf(q.max(0.0), dof, nc).unwrap();
                    assert!(exact <= b, "dof={dof} nc={nc} t={t}");
                }
            }
        }
    }
}
