use std::f64::consts::PI;

use crate::error::{domain, Error, Result};

/// Gauss–Hermite rule for the weight `e^{-x²}`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// E[f(Z)] for Z ~ N(0, 1).
    pub fn expect_normal(&self, f: impl Fn(f64) -> f64) -> f64 {
        let s = std::f64::consts::SQRT_2;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(s * x))
            .sum::<f64>()
            / PI.sqrt()
    }

    /// E[f(U, V)] for independent standard normals U, V.
    pub fn expect_normal_2d(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let s = std::f64::consts::SQRT_2;
        let mut acc = 0.0;
        for (&xu, &wu) in self.nodes.iter().zip(&self.weights) {
            let mut row = 0.0;
            for (&xv, &wv) in self.nodes.iter().zip(&self.weights) {
                row += wv * f(s * xu, s * xv);
            }
            acc += wu * row;
        }
        acc / PI
    }
}

/// Nodes and weights of the `order`-point Gauss–Hermite rule.
///
/// Nodes are the eigenvalues of the Jacobi matrix (zero diagonal, off-diagonal
/// `√(k/2)`), isolated by Sturm-count bisection and polished by Newton steps on
/// the orthonormal Hermite recurrence, which also yields the weights.
pub fn gauss_hermite(order: usize) -> Result<GaussHermite> {
    if order < 1 {
        return domain("Gauss-Hermite order must be >= 1");
    }
    let n = order;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let upper = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    for i in 0..n.div_ceil(2) {
        // x[i] is the (i+1)-th largest eigenvalue: exactly n − 1 − i below it
        let target = n - 1 - i;
        let (mut lo, mut hi) = (0.0f64, upper);
        if n % 2 == 1 && i == n / 2 {
            hi = 0.0;
        }
        while hi - lo > 1e-13 * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if sturm_count(n, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = 0.0;
        for _ in 0..3 {
            let (p1, p2) = hermite_orthonormal(n, z);
            pp = (2.0 * n as f64).sqrt() * p2;
            z -= p1 / pp;
        }
        if !z.is_finite() || !pp.is_finite() {
            return Err(Error::Computation {
                message: format!("Gauss-Hermite node {i} of {n} did not converge"),
                partial: z,
            });
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    Ok(GaussHermite { nodes: x, weights: w })
}

// Number of Jacobi-matrix eigenvalues below `t`.
fn sturm_count(n: usize, t: f64) -> usize {
    let mut count = 0;
    let mut q = -t;
    if q < 0.0 {
        count += 1;
    }
    for k in 1..n {
        let denom = if q == 0.0 { 1e-300 } else { q };
        q = -t - (k as f64 / 2.0) / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

// (h_n(z), h_{n−1}(z)) for the Hermite functions orthonormal under e^{−x²}.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// Moments of the per-letter information density `G = i(X; X + Z)` against the
/// Gaussian output law `N(0, P + σ²)`, with `X ~ N(0, P)` and `Z ~ N(0, σ²)`.
/// Values are in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoDensityMoments {
    pub mean: f64,
    pub variance: f64,
    /// E|G − E G|³.
    pub abs_third_central: f64,
}

impl InfoDensityMoments {
    /// E|G − E G|³ / Var(G)^{3/2}.
    pub fn lyapunov_ratio(&self) -> f64 {
        self.abs_third_central / self.variance.powf(1.5)
    }
}

fn check_positive(mean_energy: f64, noise_var: f64) -> Result<()> {
    if !(mean_energy > 0.0) || !(noise_var > 0.0) || !mean_energy.is_finite() || !noise_var.is_finite() {
        return domain(format!(
            "information-density moments need mean_energy > 0 and noise_var > 0 (got {mean_energy}, {noise_var})"
        ));
    }
    Ok(())
}

// G − C as a quadratic form in standardized (U, V) with X = √P·U, Z = σ·V:
// (√P u + σ v)²/(2(P+σ²)) − v²/2. Returns the symmetric matrix entries.
fn centred_form(p: f64, s2: f64) -> (f64, f64, f64) {
    let k = 0.5 / (p + s2);
    (k * p, k * (p * s2).sqrt(), k * s2 - 0.5)
}

/// All three moments by 2-D Gauss–Hermite quadrature over (X, Z).
pub fn gaussian_info_density_quadrature(mean_energy: f64, noise_var: f64, order: usize) -> Result<InfoDensityMoments> {
    check_positive(mean_energy, noise_var)?;
    let rule = gauss_hermite(order)?;
    let (a, b, d) = centred_form(mean_energy, noise_var);
    let centred = |u: f64, v: f64| a * u * u + 2.0 * b * u * v + d * v * v;
    let m1 = rule.expect_normal_2d(centred);
    let mean = 0.5 * (mean_energy / noise_var).ln_1p() + m1;
    let variance = rule.expect_normal_2d(|u, v| (centred(u, v) - m1).powi(2));
    let abs_third_central = rule.expect_normal_2d(|u, v| (centred(u, v) - m1).abs().powi(3));
    Ok(InfoDensityMoments {
        mean,
        variance,
        abs_third_central,
    })
}

// E|G − E G|³ on a product rule of the given order. The Gaussian measure is
// rotation invariant, so the form is first turned so that its zero set lies
// on the grid axes: the eigenbasis diagonalizes it to λ₁A² + λ₂B² with
// λ₁ = −λ₂, and a further quarter-turn maps that to a multiple of ξη. The
// kink of |·|³ then costs O(n⁻²), which is removed by one Richardson step
// against the double-order rule.
fn abs_third_rotated(mean_energy: f64, noise_var: f64, order: usize) -> Result<f64> {
    let (a, b, d) = centred_form(mean_energy, noise_var);
    let theta = 0.5 * (2.0 * b).atan2(a - d) - 0.25 * PI;
    let (sn, cs) = theta.sin_cos();
    let f = |xi: f64, eta: f64| {
        let u = cs * xi - sn * eta;
        let v = sn * xi + cs * eta;
        (a * u * u + 2.0 * b * u * v + d * v * v).abs().powi(3)
    };
    let coarse = gauss_hermite(order)?.expect_normal_2d(f);
    let fine = gauss_hermite(2 * order)?.expect_normal_2d(f);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Mean `½ln(1 + P/σ²)` and variance `P/(P + σ²)` in closed form; the third
/// absolute central moment by an order-64 Gauss–Hermite product rule.
pub fn gaussian_info_density_moments(mean_energy: f64, noise_var: f64) -> Result<InfoDensityMoments> {
    moments_with_order(mean_energy, noise_var, 64)
}

fn moments_with_order(mean_energy: f64, noise_var: f64, order: usize) -> Result<InfoDensityMoments> {
    check_positive(mean_energy, noise_var)?;
    Ok(InfoDensityMoments {
        mean: 0.5 * (mean_energy / noise_var).ln_1p(),
        variance: mean_energy / (mean_energy + noise_var),
        abs_third_central: abs_third_rotated(mean_energy, noise_var, order)?,
    })
}

/// As [`gaussian_info_density_moments`], additionally re-running the
/// quadrature at order 128 and failing unless both agree to 1e-6 relative.
pub fn gaussian_info_density_moments_verified(mean_energy: f64, noise_var: f64) -> Result<InfoDensityMoments> {
    let lo = moments_with_order(mean_energy, noise_var, 64)?;
    let hi = moments_with_order(mean_energy, noise_var, 128)?;
    let rel = (lo.abs_third_central - hi.abs_third_central).abs() / hi.abs_third_central;
    if rel > 1e-6 {
        return Err(Error::Computation {
            message: format!("Gauss-Hermite orders 64 and 128 disagree by {rel:e} on E|G-C|^3"),
            partial: hi.abs_third_central,
        });
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rule_integrates_polynomials() {
        let gh = gauss_hermite(64).unwrap();
        assert!((gh.weights.iter().sum::<f64>() - PI.sqrt()).abs() < 1e-12);
        assert!((gh.expect_normal(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((gh.expect_normal(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        assert!(gh.expect_normal(|x| x.powi(3)).abs() < 1e-12);
        for n in [5, 127, 128, 200, 256] {
            let gh = gauss_hermite(n).unwrap();
            assert!((gh.weights.iter().sum::<f64>() - PI.sqrt()).abs() < 1e-12, "n={n}");
            assert!((gh.expect_normal(|x| x.powi(4)) - 3.0).abs() < 1e-10, "n={n}");
            let mut xs = gh.nodes.clone();
            xs.sort_by(f64::total_cmp);
            assert!(xs.windows(2).all(|p| p[1] > p[0]), "n={n}");
        }
        let gh = gauss_hermite(128).unwrap();
        assert!((gh.expect_normal(|x| x.powi(6)) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn closed_forms_at_unit_snr() {
        let m = gaussian_info_density_moments(1.0, 1.0).unwrap();
        assert!((m.mean - 0.346_574).abs() < 1e-6);
        assert!((m.mean - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(m.variance, 0.5);
    }

    #[test]
    fn quadrature_mean_and_variance_match_closed_forms() {
        for &(p, s2) in &[(1.0, 1.0), (3.0, 0.5), (0.1, 2.0), (10.0, 1.0)] {
            let q = gaussian_info_density_quadrature(p, s2, 64).unwrap();
            assert!((q.mean - 0.5 * (1.0 + p / s2).ln()).abs() < 1e-8);
            assert!((q.variance - p / (p + s2)).abs() < 1e-8);
        }
    }

    #[test]
    fn orders_agree() {
        for &(p, s2) in &[(1.0, 1.0), (3.0, 0.5), (0.1, 2.0), (50.0, 0.1)] {
            gaussian_info_density_moments_verified(p, s2).unwrap();
        }
    }

    #[test]
    fn matches_product_of_half_normal_moments() {
        // G − C is √V times a product of two independent standard normals, and
        // E|Z|³ = 2√(2/π), so E|G − C|³ = (8/π) V^{3/2}
        for &(p, s2) in &[(1.0, 1.0), (0.1, 2.0), (4.0, 1.0), (50.0, 0.1)] {
            let v: f64 = p / (p + s2);
            let exact = 8.0 / PI * v.powf(1.5);
            let got = gaussian_info_density_moments(p, s2).unwrap().abs_third_central;
            assert!((got - exact).abs() / exact < 1e-6, "{p},{s2}: {got} vs {exact}");
        }
    }

    #[test]
    fn plain_rule_is_close_but_coarse() {
        let plain = gaussian_info_density_quadrature(1.0, 1.0, 128).unwrap().abs_third_central;
        let rotated = gaussian_info_density_moments(1.0, 1.0).unwrap().abs_third_central;
        assert!((plain - rotated).abs() / rotated < 1e-2);
    }

    #[test]
    fn lyapunov_ratio_is_scale_free() {
        let r: Vec<f64> = [(1.0, 1.0), (0.2, 3.0), (7.0, 0.5)]
            .iter()
            .map(|&(p, s2)| gaussian_info_density_moments(p, s2).unwrap().lyapunov_ratio())
            .collect();
        assert!((r[0] - r[1]).abs() < 1e-6 && (r[0] - r[2]).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn third_moment_matches_monte_carlo() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000_000usize;
        let c = 0.5 * 2f64.ln();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..trials {
            let x: f64 = StandardNormal.sample(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            let y = x + z;
            let g = c + y * y / 4.0 - z * z / 2.0;
            let a = (g - c).abs().powi(3);
            s1 += a;
            s2 += a * a;
        }
        let mean = s1 / trials as f64;
        let se = ((s2 / trials as f64 - mean * mean) / trials as f64).sqrt();
        let m = gaussian_info_density_moments(1.0, 1.0).unwrap();
        assert!((m.abs_third_central - mean).abs() <= 3.0 * se, "{} vs {mean} ± {se}", m.abs_third_central);
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(gaussian_info_density_moments(0.0, 1.0).is_err());
        assert!(gaussian_info_density_moments(1.0, -1.0).is_err());
    }
}
