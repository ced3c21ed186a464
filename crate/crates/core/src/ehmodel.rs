//! Energy-arrival laws, the harvest-use-store energy buffer and channel specs.
//!
//! Arrivals are i.i.d. and nonnegative. Every law carries its mean, variance
//! and third absolute central moment; the bounds consume these directly and
//! the simulators draw from the law through an explicitly seeded stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{domain, Result};
use crate::numkernel::{norm_cdf, phi_pdf};

/// Shape of an energy-arrival law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyKind {
    Constant(f64),
    Uniform { low: f64, high: f64 },
    Exponential { rate: f64 },
    /// `level · Bernoulli(p)`.
    ScaledBernoulli { p: f64, level: f64 },
    /// N(mu, sd²) conditioned on being ≥ 0.
    TruncatedGaussian { mu: f64, sd: f64 },
}

/// An i.i.d. energy-arrival law with its moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyProcess {
    kind: EnergyKind,
    mean: f64,
    variance: f64,
    third_central_abs: f64,
}

impl EnergyProcess {
    pub fn constant(level: f64) -> Result<Self> {
        if !(level > 0.0) || !level.is_finite() {
            return domain(format!("constant energy level must be > 0, got {level}"));
        }
        Ok(Self {
            kind: EnergyKind::Constant(level),
            mean: level,
            variance: 0.0,
            third_central_abs: 0.0,
        })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low >= 0.0) || !(high > low) || !high.is_finite() {
            return domain(format!("uniform energy needs 0 <= low < high, got ({low}, {high})"));
        }
        let w = high - low;
        Ok(Self {
            kind: EnergyKind::Uniform { low, high },
            mean: 0.5 * (low + high),
            variance: w * w / 12.0,
            third_central_abs: w.powi(3) / 32.0,
        })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return domain(format!("exponential energy rate must be > 0, got {rate}"));
        }
        let m = 1.0 / rate;
        Ok(Self {
            kind: EnergyKind::Exponential { rate },
            mean: m,
            variance: m * m,
            // E|Y − 1|³ = 12/e − 2 for Y ~ Exp(1)
            third_central_abs: m.powi(3) * (12.0 / std::f64::consts::E - 2.0),
        })
    }

    pub fn scaled_bernoulli(p: f64, level: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) || !(level > 0.0) || !level.is_finite() {
            return domain(format!("scaled Bernoulli energy needs 0 < p <= 1 and level > 0, got ({p}, {level})"));
        }
        let q = 1.0 - p;
        Ok(Self {
            kind: EnergyKind::ScaledBernoulli { p, level },
            mean: p * level,
            variance: p * q * level * level,
            third_central_abs: level.powi(3) * p * q * (p * p + q * q),
        })
    }

    /// Moments are integrated numerically once here and cached.
    pub fn truncated_gaussian(mu: f64, sd: f64) -> Result<Self> {
        if !mu.is_finite() || !(sd > 0.0) || !sd.is_finite() {
            return domain(format!("truncated Gaussian energy needs finite mu and sd > 0, got ({mu}, {sd})"));
        }
        if norm_cdf(mu / sd) < 1e-6 {
            return domain(format!("truncated Gaussian with mu/sd = {} keeps almost no mass above 0", mu / sd));
        }
        let (mean, variance, third_central_abs) = truncated_gaussian_moments(mu, sd);
        Ok(Self {
            kind: EnergyKind::TruncatedGaussian { mu, sd },
            mean,
            variance,
            third_central_abs,
        })
    }

    pub fn kind(&self) -> EnergyKind {
        self.kind
    }

    /// 𝔼[E₁].
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// σ_E².
    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn third_central_abs(&self) -> f64 {
        self.third_central_abs
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            EnergyKind::Constant(c) => c,
            EnergyKind::Uniform { low, high } => rng.random_range(low..high),
            EnergyKind::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            EnergyKind::ScaledBernoulli { p, level } => {
                if rng.random::<f64>() < p {
                    level
                } else {
                    0.0
                }
            }
            EnergyKind::TruncatedGaussian { mu, sd } => loop {
                let z: f64 = StandardNormal.sample(rng);
                let e = mu + sd * z;
                if e >= 0.0 {
                    break e;
                }
            },
        }
    }
}

// Mean, variance and E|E − m|³ of N(mu, sd²) conditioned on [0, ∞), integrated
// in standard units.
fn truncated_gaussian_moments(mu: f64, sd: f64) -> (f64, f64, f64) {
    let a = -mu / sd; // lower limit in standard units
    let upper = a.max(0.0) + 40.0;
    let integrate = |f: &dyn Fn(f64) -> f64| -> f64 { panel_integrate(f, a, upper, 400) };
    let mass = 1.0 - norm_cdf(a);
    let m1 = integrate(&|z| z * phi_pdf(z)) / mass;
    let var_z = integrate(&|z| (z - m1).powi(2) * phi_pdf(z)) / mass;
    let abs3_z = integrate(&|z| (z - m1).abs().powi(3) * phi_pdf(z)) / mass;
    (mu + sd * m1, sd * sd * var_z, sd.powi(3) * abs3_z)
}

// Composite 8-point Gauss–Legendre. The kink of |z − m|³ sits inside one
// panel; with 400 panels its error is far below what the bounds need.
fn panel_integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let h = (hi - lo) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let c = lo + (k as f64 + 0.5) * h;
        let r = 0.5 * h;
        for i in 0..4 {
            acc += W[i] * (f(c - r * X[i]) + f(c + r * X[i]));
        }
    }
    acc * 0.5 * h
}

/// AWGN channel with noise variance σ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnSpec {
    noise_var: f64,
}

impl AwgnSpec {
    pub fn new(noise_var: f64) -> Result<Self> {
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return domain(format!("noise_var must be > 0, got {noise_var}"));
        }
        Ok(Self { noise_var })
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }
}

/// Discrete memoryless channel `W(y|x)` with a per-symbol energy cost `Λ(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcSpec {
    w: Vec<Vec<f64>>,
    lambda: Vec<f64>,
    output_size: usize,
}

impl DmcSpec {
    /// Rows of `w` must be probability vectors (within 1e-12), `lambda` must be
    /// nonnegative with at least one zero-cost symbol.
    pub fn new(w: Vec<Vec<f64>>, lambda: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return domain("channel matrix has no rows");
        }
        let output_size = w[0].len();
        if output_size == 0 {
            return domain("channel matrix has no columns");
        }
        for (x, row) in w.iter().enumerate() {
            if row.len() != output_size {
                return domain(format!("row {x} has {} entries, expected {output_size}", row.len()));
            }
            if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return domain(format!("row {x} has a negative or non-finite entry"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return domain(format!("row {x} sums to {s}, not 1"));
            }
        }
        if lambda.len() != w.len() {
            return domain(format!("cost vector has {} entries for {} inputs", lambda.len(), w.len()));
        }
        if lambda.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return domain("costs must be finite and >= 0");
        }
        if !lambda.contains(&0.0) {
            return domain("at least one input symbol must have zero cost");
        }
        Ok(Self { w, lambda, output_size })
    }

    /// Binary symmetric channel with crossover `p` and the given costs.
    pub fn bsc(p: f64, lambda: [f64; 2]) -> Result<Self> {
        Self::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]], lambda.to_vec())
    }

    pub fn input_size(&self) -> usize {
        self.w.len()
    }

    pub fn output_size(&self) -> usize {
        self.output_size
    }

    /// W(y|x).
    pub fn w(&self, x: usize, y: usize) -> f64 {
        self.w[x][y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.w
    }

    /// Λ(x).
    pub fn cost(&self, x: usize) -> f64 {
        self.lambda[x]
    }

    pub fn costs(&self) -> &[f64] {
        &self.lambda
    }

    /// Output law PW.
    pub fn output_law(&self, input: &[f64]) -> Vec<f64> {
        let mut q = vec![0.0; self.output_size];
        for (px, row) in input.iter().zip(&self.w) {
            for (qy, wy) in q.iter_mut().zip(row) {
                *qy += px * wy;
            }
        }
        q
    }
}

/// Either channel family.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Awgn(AwgnSpec),
    Dmc(DmcSpec),
}

/// Buffer levels B₀..Bₙ and the first slot (1-based) whose demand exceeded the
/// energy harvested so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferTrace {
    pub levels: Vec<f64>,
    pub outage_index: Option<usize>,
}

/// n i.i.d. arrivals, reproducible from `seed`.
pub fn sample_energies(proc: &EnergyProcess, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 1 {
        return domain("sample_energies needs n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| proc.sample(&mut rng)).collect())
}

/// Runs the harvest-use-store recursion `Bᵢ = (Bᵢ₋₁ + Eᵢ − cᵢ)⁺` from B₀ = 0.
///
/// `consumptions` are per-slot demands (x² on the AWGN channel, Λ(x) on a DMC).
/// The outage index is the first slot where cumulative demand exceeds
/// cumulative harvest.
pub fn buffer_evolve(energies: &[f64], consumptions: &[f64]) -> Result<BufferTrace> {
    if energies.len() != consumptions.len() {
        return domain(format!(
            "energies ({}) and consumptions ({}) differ in length",
            energies.len(),
            consumptions.len()
        ));
    }
    if energies.iter().chain(consumptions).any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return domain("energies and consumptions must be finite and >= 0");
    }
    let mut levels = Vec::with_capacity(energies.len() + 1);
    levels.push(0.0);
    let mut outage_index = None;
    let mut b = 0.0;
    for (i, (&e, &c)) in energies.iter().zip(consumptions).enumerate() {
        let next = b + e - c;
        if next < 0.0 && outage_index.is_none() {
            outage_index = Some(i + 1);
        }
        b = next.max(0.0);
        levels.push(b);
    }
    Ok(BufferTrace { levels, outage_index })
}
