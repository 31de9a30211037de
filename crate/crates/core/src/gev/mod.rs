//! Generalized extreme value distribution: CDF, quantile, negative
//! log-likelihood terms, and the weighted/penalized likelihood objective.
//!
//! The shape is switched to the Gumbel form when `|xi| < GUMBEL_EPS`. The
//! non-Gumbel branch is evaluated through `ln_1p`/`exp_m1`, so it stays
//! accurate for shapes arbitrarily close to the switch.

mod fit;

pub use fit::{fit_unconditional, fit_weighted_mle, FitReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shapes with smaller magnitude use the Gumbel branch.
pub const GUMBEL_EPS: f64 = 1e-8;
/// Shape domain is the half-open interval `(XI_MIN, XI_MAX]`.
pub const XI_MIN: f64 = -1.0 + 1e-3;
pub const XI_MAX: f64 = 5.0;

/// Location, scale and shape of a GEV law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        let p = Self { mu, sigma, xi };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::invalid(format!(
                "GEV parameters out of domain: mu={mu}, sigma={sigma}, xi={xi}"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mu.is_finite()
            && self.sigma.is_finite()
            && self.sigma > 0.0
            && self.xi > XI_MIN
            && self.xi <= XI_MAX
    }

    fn is_gumbel(&self) -> bool {
        self.xi.abs() < GUMBEL_EPS
    }

    /// Lower support endpoint (`-inf` unless `xi > 0`).
    pub fn lower_endpoint(&self) -> f64 {
        if self.xi > 0.0 && !self.is_gumbel() {
            self.mu - self.sigma / self.xi
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Upper support endpoint (`+inf` unless `xi < 0`).
    pub fn upper_endpoint(&self) -> f64 {
        if self.xi < 0.0 && !self.is_gumbel() {
            self.mu - self.sigma / self.xi
        } else {
            f64::INFINITY
        }
    }
}

/// Distribution function `exp(-(1 + xi (z - mu)/sigma)_+^(-1/xi))`.
pub fn gev_cdf(theta: &GevParams, z: f64) -> f64 {
    let y = (z - theta.mu) / theta.sigma;
    if theta.is_gumbel() {
        return (-(-y).exp()).exp();
    }
    let s = theta.xi * y;
    if s <= -1.0 {
        return if theta.xi > 0.0 { 0.0 } else { 1.0 };
    }
    (-(-s.ln_1p() / theta.xi).exp()).exp()
}

/// Per-observation negative log-likelihood; `+inf` outside the support.
pub fn gev_nll_term(theta: &GevParams, z: f64) -> f64 {
    let y = (z - theta.mu) / theta.sigma;
    let log_sigma = theta.sigma.ln();
    if theta.is_gumbel() {
        return log_sigma + y + (-y).exp();
    }
    let s = theta.xi * y;
    if s <= -1.0 {
        return f64::INFINITY;
    }
    let lt = s.ln_1p();
    log_sigma + (1.0 + 1.0 / theta.xi) * lt + (-lt / theta.xi).exp()
}

/// `(s/(1+s) - ln(1+s)) / s^2`, with a series near zero.
fn shape_kernel(s: f64) -> f64 {
    if s.abs() < 1e-3 {
        -0.5 + s * (2.0 / 3.0 + s * (-0.75 + s * (0.8 - s * 5.0 / 6.0)))
    } else {
        (s / (1.0 + s) - s.ln_1p()) / (s * s)
    }
}

/// Gradient of [`gev_nll_term`] with respect to `(mu, sigma, xi)`, or `None`
/// outside the support.
pub fn gev_nll_term_grad(theta: &GevParams, z: f64) -> Option<[f64; 3]> {
    let sigma = theta.sigma;
    let y = (z - theta.mu) / sigma;
    if theta.is_gumbel() {
        let e = (-y).exp();
        return Some([
            (e - 1.0) / sigma,
            (1.0 - y + y * e) / sigma,
            y - 0.5 * y * y + 0.5 * e * y * y,
        ]);
    }
    let xi = theta.xi;
    let s = xi * y;
    if s <= -1.0 {
        return None;
    }
    let t = 1.0 + s;
    let pw = (-s.ln_1p() / xi).exp();
    let d_mu = (pw - (xi + 1.0)) / (t * sigma);
    let d_sigma = (1.0 + y * (pw - (xi + 1.0)) / t) / sigma;
    let d_xi = (1.0 - pw) * y * y * shape_kernel(s) + y / t;
    Some([d_mu, d_sigma, d_xi])
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "quantile level {tau} is outside (0, 1)"
        )))
    }
}

/// `mu + sigma/xi ((-ln tau)^(-xi) - 1)`, or `mu - sigma ln(-ln tau)` for the
/// Gumbel branch.
pub fn gev_quantile(theta: &GevParams, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(gev_quantile_unchecked(theta, tau))
}

pub(crate) fn gev_quantile_unchecked(theta: &GevParams, tau: f64) -> f64 {
    let log_neg_log = (-tau.ln()).ln();
    if theta.is_gumbel() {
        theta.mu - theta.sigma * log_neg_log
    } else {
        theta.mu + theta.sigma * (-theta.xi * log_neg_log).exp_m1() / theta.xi
    }
}

fn check_lengths(weights: &[f64], z: &[f64]) -> Result<()> {
    if weights.len() != z.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} observations",
            weights.len(),
            z.len()
        )));
    }
    Ok(())
}

/// `sum_i w_i l(z_i)`; zero-weight terms are skipped.
pub fn weighted_nll(theta: &GevParams, weights: &[f64], z: &[f64]) -> Result<f64> {
    check_lengths(weights, z)?;
    Ok(weighted_nll_unchecked(theta, weights, z))
}

pub(crate) fn weighted_nll_unchecked(theta: &GevParams, weights: &[f64], z: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&w, &zi) in weights.iter().zip(z) {
        if w == 0.0 {
            continue;
        }
        let term = gev_nll_term(theta, zi);
        if term == f64::INFINITY {
            return f64::INFINITY;
        }
        total += w * term;
    }
    total
}

/// Weighted NLL plus `lambda (xi - xi0)^2`.
pub fn penalized_weighted_nll(
    theta: &GevParams,
    weights: &[f64],
    z: &[f64],
    lambda: f64,
    xi0: f64,
) -> Result<f64> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::invalid("penalty weight must be non-negative"));
    }
    let base = weighted_nll(theta, weights, z)?;
    Ok(base + lambda * (theta.xi - xi0).powi(2))
}

/// Analytic gradient of [`penalized_weighted_nll`] in `(mu, sigma, xi)`;
/// `None` where the objective is infinite.
pub fn penalized_weighted_nll_grad(
    theta: &GevParams,
    weights: &[f64],
    z: &[f64],
    lambda: f64,
    xi0: f64,
) -> Result<Option<[f64; 3]>> {
    check_lengths(weights, z)?;
    Ok(penalized_grad_unchecked(theta, weights, z, lambda, xi0))
}

pub(crate) fn penalized_grad_unchecked(
    theta: &GevParams,
    weights: &[f64],
    z: &[f64],
    lambda: f64,
    xi0: f64,
) -> Option<[f64; 3]> {
    let mut g = [0.0, 0.0, 2.0 * lambda * (theta.xi - xi0)];
    for (&w, &zi) in weights.iter().zip(z) {
        if w == 0.0 {
            continue;
        }
        let term = gev_nll_term_grad(theta, zi)?;
        for k in 0..3 {
            g[k] += w * term[k];
        }
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(mu: f64, sigma: f64, xi: f64) -> GevParams {
        GevParams::new(mu, sigma, xi).unwrap()
    }

    #[test]
    fn cdf_values() {
        assert!((gev_cdf(&p(0.0, 1.0, 0.0), 0.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(gev_cdf(&p(0.0, 1.0, -0.5), 2.0), 1.0);
        assert_eq!(gev_cdf(&p(0.0, 1.0, -0.5), 7.0), 1.0);
        assert_eq!(gev_cdf(&p(0.0, 1.0, 0.5), -2.0), 0.0);
        // exp(-1.5^-2), evaluated independently
        let expected = (-(1.5f64).powf(-2.0)).exp();
        assert!((gev_cdf(&p(0.0, 1.0, 0.5), 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.641180).abs() < 1e-6);
    }

    #[test]
    fn nll_term_values() {
        assert!((gev_nll_term(&p(0.0, 1.0, 0.0), 0.0) - 1.0).abs() < 1e-15);
        assert!((gev_nll_term(&p(0.0, 1.0, 0.5), 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(gev_nll_term(&p(0.0, 1.0, 0.5), -3.0), f64::INFINITY);
    }

    #[test]
    fn quantile_values() {
        let e1 = (-1.0f64).exp();
        assert!(gev_quantile(&p(0.0, 1.0, 0.0), e1).unwrap().abs() < 1e-15);
        assert!(gev_quantile(&p(0.0, 1.0, 0.0), 1.0).is_err());
        assert!(gev_quantile(&p(0.0, 1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn quantile_matches_bisection_of_cdf() {
        // Oracle: invert the CDF numerically.
        let theta = p(0.0, 2.0, 0.5);
        let (mut lo, mut hi) = (-3.9, 1e4);
        while hi - lo > 1e-11 {
            let mid = 0.5 * (lo + hi);
            if gev_cdf(&theta, mid) < 0.99 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = gev_quantile(&theta, 0.99).unwrap();
        assert!((q - lo).abs() < 1e-8);
        assert!((q - 35.8998).abs() < 1e-4);
    }

    #[test]
    fn weighted_nll_cases() {
        let theta = p(0.0, 1.0, 0.0);
        assert!((weighted_nll(&theta, &[0.5, 0.5], &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let heavy = p(0.0, 1.0, 0.5);
        assert_eq!(
            weighted_nll(&heavy, &[0.5, 0.5], &[0.0, -3.0]).unwrap(),
            f64::INFINITY
        );
        // zero weight never evaluates the violating point
        assert!(weighted_nll(&heavy, &[1.0, 0.0], &[0.0, -3.0])
            .unwrap()
            .is_finite());
        assert!(weighted_nll(&heavy, &[1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn penalty_cases() {
        let theta = p(0.0, 1.0, 0.3);
        let w = [1.0];
        let z = [0.7];
        let base = weighted_nll(&theta, &w, &z).unwrap();
        let pen = penalized_weighted_nll(&theta, &w, &z, 0.1, 0.1).unwrap();
        assert!((pen - base - 0.1 * 0.04).abs() < 1e-15);
        assert_eq!(
            penalized_weighted_nll(&theta, &w, &z, 0.0, 0.1).unwrap(),
            base
        );
        assert_eq!(
            penalized_weighted_nll(&theta, &w, &z, 7.0, 0.3).unwrap(),
            base
        );
        assert!(penalized_weighted_nll(&theta, &w, &z, -1.0, 0.3).is_err());
    }

    #[test]
    fn shape_kernel_is_continuous_at_series_cutoff() {
        let a = shape_kernel(1e-3 * (1.0 - 1e-12));
        let b = shape_kernel(1e-3 * (1.0 + 1e-12));
        assert!((a - b).abs() < 1e-9);
        let c = shape_kernel(-1e-3 * (1.0 - 1e-12));
        let d = shape_kernel(-1e-3 * (1.0 + 1e-12));
        assert!((c - d).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_gumbel_limit() {
        for &z in &[-2.0, 0.3, 4.0] {
            let g0 = gev_nll_term_grad(&p(1.0, 2.0, 0.0), z).unwrap();
            let g1 = gev_nll_term_grad(&p(1.0, 2.0, 1e-7), z).unwrap();
            for k in 0..3 {
                assert!((g0[k] - g1[k]).abs() < 1e-5, "{k}: {g0:?} vs {g1:?}");
            }
        }
    }

    #[test]
    fn params_domain() {
        assert!(GevParams::new(0.0, 0.0, 0.0).is_err());
        assert!(GevParams::new(0.0, 1.0, -0.999).is_err());
        assert!(GevParams::new(0.0, 1.0, -0.998).is_ok());
        assert!(GevParams::new(0.0, 1.0, 5.0).is_ok());
        assert!(GevParams::new(0.0, 1.0, 5.01).is_err());
    }
}
