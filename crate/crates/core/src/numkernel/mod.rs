//! Special functions and probability kernels.
//!
//! Everything here is implemented in-crate: the standard normal CDF and its
//! inverse on top of an erfc kernel, the regularized incomplete gamma function,
//! the non-central χ² CDF as a Poisson mixture, Gauss–Hermite rules and the
//! moments of the Gaussian-codebook information density.

mod chisq;
mod gamma;
mod hermite;
mod normal;
mod optimize;

pub use chisq::{birge_tail_bound, central_chisq_cdf, noncentral_chisq_cdf, noncentral_chisq_cdf_with};
pub use gamma::{ln_gamma, reg_lower_gamma, reg_upper_gamma};
pub use hermite::{
    gauss_hermite, gaussian_info_density_moments, gaussian_info_density_moments_verified,
    gaussian_info_density_quadrature, GaussHermite, InfoDensityMoments,
};
pub use normal::{erfc, phi_cdf, phi_inv, phi_inv_deriv, phi_pdf};

pub(crate) use normal::{cdf as norm_cdf, inv as norm_inv, inv_deriv as norm_inv_deriv};
pub(crate) use optimize::grid_then_golden;

use crate::error::{domain, Result};

/// Convergence controls shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iter: 200,
        }
    }
}

impl Tolerances {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1 {
            return domain(format!(
                "tolerances need abs_tol > 0, rel_tol > 0, max_iter >= 1 (got {abs_tol}, {rel_tol}, {max_iter})"
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Same tolerances with a larger iteration budget.
    pub fn with_max_iter(self, max_iter: usize) -> Self {
        Self { max_iter, ..self }
    }
}
