use crate::error::{domain, Error, Result};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;

fn budget(a: f64) -> usize {
    1000 + 20 * a.sqrt() as usize
}

// P(a,x) by the power series; accurate relative to P itself.
fn lower_series(a: f64, x: f64) -> Result<f64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..budget(a) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term < sum * EPS {
            let log_pre = -x + a * x.ln() - ln_gamma(a);
            return Ok((log_pre + sum.ln()).exp());
        }
    }
    Err(Error::Computation {
        message: format!("incomplete gamma series did not converge (a={a}, x={x})"),
        partial: sum,
    })
}

// Q(a,x) by Lentz's continued fraction; accurate relative to Q itself.
fn upper_cf(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..budget(a) {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            let log_pre = -x + a * x.ln() - ln_gamma(a);
            return Ok((log_pre + h.ln()).exp());
        }
    }
    Err(Error::Computation {
        message: format!("incomplete gamma continued fraction did not converge (a={a}, x={x})"),
        partial: h,
    })
}

fn check(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() || !(x >= 0.0) {
        return domain(format!("incomplete gamma needs a > 0 and x >= 0 (a={a}, x={x})"));
    }
    Ok(())
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_lower_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    if x == 0.0 {
        Ok(0.0)
    } else if x.is_infinite() {
        Ok(1.0)
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        Ok(1.0 - upper_cf(a, x)?)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 − P(a, x).
pub fn reg_upper_gamma(a: f64, x: f64) -> Result<f64> {
    check(a, x)?;
    if x == 0.0 {
        Ok(1.0)
    } else if x.is_infinite() {
        Ok(0.0)
    } else if x < a + 1.0 {
        Ok(1.0 - lower_series(a, x)?)
    } else {
        upper_cf(a, x)
    }
}
