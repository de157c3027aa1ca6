//! Regularization-parameter rules and the deterministic error-bound diagnostics.
//!
//! Unspecified universal constants in the bounds are set to 1, so the bound
//! values are only meaningful as trends and ratios.

use crate::error::{Error, Result};
use crate::matrix::{singular_values, symmetric_eigen, DenseMatrix};
use crate::obsop::DesignStats;
use crate::reg::PenaltyParams;

/// Annotation carried by every bound report.
pub const CONSTANTS_NOTE: &str = "constants = 1";

/// Noise models used by the parameter rules.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    /// Entries i.i.d. `N(0, nu^2 / (d1 d2))`.
    Gaussian { nu: f64 },
    /// Re-centered sample covariance of `n` draws from `N(0, sigma)`.
    Wishart { sigma: DenseMatrix, n: usize },
    None,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { nu } => check_nonneg("nu", *nu),
            Self::Wishart { sigma, n } => {
                check_count("n", *n)?;
                check_psd(sigma)
            }
            Self::None => Ok(()),
        }
    }
}

fn check_nonneg(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("must be finite and > 0, got {alpha}")))
    }
}

fn check_count(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::invalid(name, "must be positive"))
    } else {
        Ok(())
    }
}

/// Symmetric positive semidefinite up to a tolerance relative to the largest entry.
pub(crate) fn check_psd(sigma: &DenseMatrix) -> Result<()> {
    if !sigma.is_square() {
        return Err(Error::NotPsd(format!("matrix is {}x{}", sigma.rows(), sigma.cols())));
    }
    let scale = sigma.max_abs().max(f64::MIN_POSITIVE);
    if !sigma.is_symmetric(1e-10 * scale) {
        return Err(Error::NotPsd("matrix is not symmetric".into()));
    }
    let (values, _) = symmetric_eigen(sigma)?;
    let lambda_min = values.first().copied().unwrap_or(0.0);
    if lambda_min < -1e-10 * scale * sigma.rows() as f64 {
        return Err(Error::NotPsd(format!("smallest eigenvalue {lambda_min:e}")));
    }
    Ok(())
}

/// True when fewer samples than dimensions were supplied; the rules still apply but
/// the corresponding guarantees assume `n >= d`.
pub fn undersampled(n: usize, d: usize) -> bool {
    n < d
}

fn params(lambda: f64, mu: f64, alpha: f64) -> Result<PenaltyParams> {
    PenaltyParams::new(lambda, mu, alpha)
}

/// Elementwise-sparse rule for Gaussian noise.
pub fn params_sparse_gaussian(nu: f64, d1: usize, d2: usize, alpha: f64) -> Result<PenaltyParams> {
    check_nonneg("nu", nu)?;
    check_count("d1", d1)?;
    check_count("d2", d2)?;
    check_alpha(alpha)?;
    let d = (d1 * d2) as f64;
    let mu = 16.0 * nu * (d.ln() / d).sqrt() + 4.0 * alpha / d.sqrt();
    params(gaussian_lambda(nu, d1, d2), mu, alpha)
}

fn gaussian_lambda(nu: f64, d1: usize, d2: usize) -> f64 {
    8.0 * nu / (d1 as f64).sqrt() + 8.0 * nu / (d2 as f64).sqrt()
}

/// Sharpened elementwise rule using `log(d1 d2 / s)`.
pub fn params_sparse_refined(nu: f64, d1: usize, d2: usize, s: usize, alpha: f64) -> Result<PenaltyParams> {
    check_nonneg("nu", nu)?;
    check_count("d1", d1)?;
    check_count("d2", d2)?;
    check_alpha(alpha)?;
    if s == 0 || s > d1 * d2 {
        return Err(Error::invalid("s", format!("must lie in 1..={}, got {s}", d1 * d2)));
    }
    let d = (d1 * d2) as f64;
    let mu = 16.0 * nu * ((d / s as f64).ln() / d).sqrt() + 4.0 * alpha / d.sqrt();
    params(gaussian_lambda(nu, d1, d2), mu, alpha)
}

/// Columnwise rule for Gaussian noise.
///
/// With `paper_literal = false` the middle term of `mu` is `4 nu sqrt(log d2 / (d1 d2))`;
/// with `true` it is `sqrt(log d2 / (d1 d2))`, without the noise scale.
pub fn params_col_gaussian(nu: f64, d1: usize, d2: usize, alpha: f64, paper_literal: bool) -> Result<PenaltyParams> {
    check_nonneg("nu", nu)?;
    check_count("d1", d1)?;
    check_count("d2", d2)?;
    check_alpha(alpha)?;
    let d2f = d2 as f64;
    let tail = ((d2f.ln()) / (d1 as f64 * d2f)).sqrt();
    let middle = if paper_literal { tail } else { 4.0 * nu * tail };
    let mu = 8.0 * nu / d2f.sqrt() + middle + 4.0 * alpha / d2f.sqrt();
    params(gaussian_lambda(nu, d1, d2), mu, alpha)
}

/// Sharpened columnwise rule using `log(d2 / s)`.
pub fn params_col_refined(nu: f64, d1: usize, d2: usize, s: usize, alpha: f64) -> Result<PenaltyParams> {
    check_nonneg("nu", nu)?;
    check_count("d1", d1)?;
    check_count("d2", d2)?;
    check_alpha(alpha)?;
    if s == 0 || s > d2 {
        return Err(Error::invalid("s", format!("must lie in 1..={d2}, got {s}")));
    }
    let d2f = d2 as f64;
    let mu = 16.0 * nu / d2f.sqrt()
        + 16.0 * nu * ((d2f / s as f64).ln() / (d1 as f64 * d2f)).sqrt()
        + 4.0 * alpha / d2f.sqrt();
    params(gaussian_lambda(nu, d1, d2), mu, alpha)
}

/// Factor-analysis rule; `sigma_hat` may be the sample covariance.
pub fn params_factor(sigma_hat: &DenseMatrix, n: usize, d: usize, alpha: f64) -> Result<PenaltyParams> {
    check_count("n", n)?;
    check_count("d", d)?;
    check_alpha(alpha)?;
    sigma_hat.expect_dims((d, d), "params_factor", "sigma_hat")?;
    check_psd(sigma_hat)?;
    let sigma1 = singular_values(sigma_hat)?[0];
    let rho = (0..d).map(|i| sigma_hat[(i, i)]).fold(0.0, f64::max);
    let (nf, df) = (n as f64, d as f64);
    let lambda = 16.0 * sigma1.sqrt() * (df / nf).sqrt();
    let mu = 32.0 * rho * (df.ln() / nf).sqrt() + 4.0 * alpha / df;
    params(lambda, mu, alpha)
}

/// Multitask rule from the rescaled design statistics.
pub fn params_multitask(
    nu: f64,
    stats: &DesignStats,
    n: usize,
    d1: usize,
    d2: usize,
    alpha: f64,
) -> Result<PenaltyParams> {
    check_nonneg("nu", nu)?;
    check_count("n", n)?;
    check_count("d1", d1)?;
    check_count("d2", d2)?;
    check_alpha(alpha)?;
    let sqrt_n = (n as f64).sqrt();
    let d = (d1 * d2) as f64;
    let lambda = 8.0 * nu * stats.sigma_max * sqrt_n * ((d1 as f64).sqrt() + (d2 as f64).sqrt());
    let mu = 16.0 * nu * stats.kappa_max * (n as f64 * d.ln()).sqrt() + 4.0 * alpha * stats.sigma_min * sqrt_n / d.sqrt();
    params(lambda, mu, alpha)
}

/// Robust covariance rule.
pub fn params_robust_cov(theta_opnorm: f64, r: usize, n: usize, d: usize, alpha: f64) -> Result<PenaltyParams> {
    check_nonneg("theta_opnorm", theta_opnorm)?;
    check_count("n", n)?;
    check_count("d", d)?;
    check_alpha(alpha)?;
    let base = 8.0 * theta_opnorm * theta_opnorm * r as f64 / n as f64;
    params(base.sqrt(), (base + 16.0 * alpha * alpha / d as f64).sqrt(), alpha)
}

/// Deterministic error bound with every universal constant equal to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub k_theta: f64,
    pub k_gamma: f64,
    pub k_tau: f64,
    pub total: f64,
    /// `None` when the curvature preconditions hold, otherwise the failing inequality.
    pub violation: Option<String>,
    pub note: &'static str,
}

impl BoundReport {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

/// Inputs to [`theorem1_bound`] beyond the penalties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundInputs {
    pub gamma_curv: f64,
    pub tau: f64,
    pub r: usize,
    /// `sum_{j > r} sigma_j(theta*)`.
    pub tail_singulars: f64,
    /// Compatibility constant of the sparse model subspace.
    pub psi: f64,
    /// `R` of the part of `gamma*` off the model subspace.
    pub tail_reg: f64,
}

pub fn theorem1_bound(params: &PenaltyParams, inputs: &BoundInputs) -> Result<BoundReport> {
    let BoundInputs {
        gamma_curv: g,
        tau,
        r,
        tail_singulars,
        psi,
        tail_reg,
    } = *inputs;
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::invalid("gamma_curv", format!("must be finite and > 0, got {g}")));
    }
    check_nonneg("tau", tau)?;
    check_nonneg("tail_singulars", tail_singulars)?;
    check_nonneg("psi", psi)?;
    check_nonneg("tail_reg", tail_reg)?;
    let (lambda, mu) = (params.lambda, params.mu);
    let r = r as f64;

    // Expanded forms avoid dividing by a zero penalty.
    let k_theta = lambda * lambda * r / (g * g) + lambda * tail_singulars / g;
    let k_gamma = mu * mu * psi * psi / (g * g) + mu * tail_reg / g;
    let k_tau = if tau == 0.0 {
        0.0
    } else {
        let ratio = if tail_reg == 0.0 { 0.0 } else { mu / lambda };
        let t = tail_singulars + ratio * tail_reg;
        tau / g * t * t
    };

    let mut violation = None;
    if tau > 0.0 {
        if 128.0 * tau * r >= g / 4.0 {
            violation = Some(format!("128 tau r = {} >= gamma/4 = {}", 128.0 * tau * r, g / 4.0));
        } else {
            let q = psi * mu / lambda;
            let lhs = 64.0 * tau * q * q;
            if !(lhs < g / 4.0) {
                violation = Some(format!("64 tau (psi mu / lambda)^2 = {lhs} >= gamma/4 = {}", g / 4.0));
            }
        }
    }

    Ok(BoundReport {
        k_theta,
        k_gamma,
        k_tau,
        total: k_theta + k_gamma + k_tau,
        violation,
        note: CONSTANTS_NOTE,
    })
}

/// Scalars of each corollary's displayed error rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateModel {
    SparseGaussian {
        nu: f64,
        d1: usize,
        d2: usize,
        r: usize,
        s: usize,
        alpha: f64,
    },
    ColGaussian {
        nu: f64,
        d1: usize,
        d2: usize,
        r: usize,
        s: usize,
        alpha: f64,
    },
    /// `sigma_opnorm = ||Sigma||_op`, `rho = max_j Sigma_jj`.
    Factor {
        sigma_opnorm: f64,
        rho: f64,
        n: usize,
        d: usize,
        r: usize,
        s: usize,
        alpha: f64,
    },
    Multitask {
        nu: f64,
        stats: DesignStats,
        n: usize,
        d1: usize,
        d2: usize,
        r: usize,
        s: usize,
        alpha: f64,
    },
    RobustCov {
        theta_opnorm: f64,
        n: usize,
        d: usize,
        r: usize,
        s: usize,
        alpha: f64,
    },
}

/// Squared-error rate of the matching corollary with all constants equal to 1.
pub fn corollary_rate(model: &RateModel) -> f64 {
    match *model {
        RateModel::SparseGaussian { nu, d1, d2, r, s, alpha } => {
            let d = (d1 * d2) as f64;
            let (r, s) = (r as f64, s as f64);
            nu * nu * r * (d1 + d2) as f64 / d + nu * nu * s * d.ln() / d + alpha * alpha * s / d
        }
        RateModel::ColGaussian { nu, d1, d2, r, s, alpha } => {
            let d = (d1 * d2) as f64;
            let (r, s) = (r as f64, s as f64);
            nu * nu * r * (d1 + d2) as f64 / d
                + nu * nu * (s * d1 as f64 + s * (d2 as f64).ln()) / d
                + alpha * alpha * s / d2 as f64
        }
        RateModel::Factor {
            sigma_opnorm,
            rho,
            n,
            d,
            r,
            s,
            alpha,
        } => {
            let (nf, df, r, s) = (n as f64, d as f64, r as f64, s as f64);
            sigma_opnorm * r * df / nf + rho * s * df.ln() / nf + alpha * alpha * s / (df * df)
        }
        RateModel::Multitask {
            nu,
            stats,
            n,
            d1,
            d2,
            r,
            s,
            alpha,
        } => {
            let d = (d1 * d2) as f64;
            let (nf, r, s) = (n as f64, r as f64, s as f64);
            let smin4 = stats.sigma_min.powi(4);
            nu * nu * stats.sigma_max.powi(2) / smin4 * r * (d1 + d2) as f64 / nf
                + nu * nu * stats.kappa_max.powi(2) / smin4 * s * d.ln() / nf
                + alpha * alpha * s / d
        }
        RateModel::RobustCov {
            theta_opnorm,
            n,
            d,
            r,
            s,
            alpha,
        } => {
            let (nf, r, s) = (n as f64, r as f64, s as f64);
            theta_opnorm * theta_opnorm * (r * r + s * r) / nf + alpha * alpha * s / d as f64
        }
    }
}
