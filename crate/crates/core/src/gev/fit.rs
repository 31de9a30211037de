//! Weighted, penalized maximum-likelihood fitting of GEV parameters.
//!
//! The search runs Nelder–Mead over `(mu, ln sigma, u)` with
//! `xi = XI_MIN + (XI_MAX - XI_MIN) (tanh u + 1) / 2`, so every trial point is
//! inside the parameter domain. The simplex result is then polished with
//! safeguarded Newton steps on the analytic gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{penalized_grad_unchecked, weighted_nll_unchecked, GevParams, XI_MAX, XI_MIN};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

const MIN_SUPPORT_WEIGHT: f64 = 1e-12;
const WEIGHT_SUM_TOL: f64 = 1e-9;
const EULER_GAMMA: f64 = 0.5772;
const START_XI: f64 = 0.1;
const RESTARTS: usize = 100;
const U_CLAMP: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: GevParams,
    /// Minimized objective (weighted NLL plus penalty).
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
    pub effective_sample_size: f64,
}

fn xi_from_u(u: f64) -> f64 {
    let t = u.clamp(-U_CLAMP, U_CLAMP).tanh();
    let xi = XI_MIN + (XI_MAX - XI_MIN) * 0.5 * (t + 1.0);
    xi.clamp(XI_MIN + f64::EPSILON, XI_MAX)
}

fn u_from_xi(xi: f64) -> f64 {
    let t = 2.0 * (xi - XI_MIN) / (XI_MAX - XI_MIN) - 1.0;
    t.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
}

fn decode(v: &[f64]) -> GevParams {
    GevParams {
        mu: v[0],
        sigma: v[1].exp(),
        xi: xi_from_u(v[2]),
    }
}

struct Objective<'a> {
    w: &'a [f64],
    z: &'a [f64],
    lambda: f64,
    xi0: f64,
}

impl Objective<'_> {
    fn value(&self, theta: &GevParams) -> f64 {
        if !theta.is_valid() {
            return f64::INFINITY;
        }
        let base = weighted_nll_unchecked(theta, self.w, self.z);
        base + self.lambda * (theta.xi - self.xi0).powi(2)
    }

    fn grad(&self, theta: &GevParams) -> Option<[f64; 3]> {
        penalized_grad_unchecked(theta, self.w, self.z, self.lambda, self.xi0)
    }
}

/// Weighted mean and (population) standard deviation.
fn weighted_moments(w: &[f64], z: &[f64]) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mean = w.iter().zip(z).map(|(w, z)| w * z).sum::<f64>() / total;
    let var = w
        .iter()
        .zip(z)
        .map(|(w, z)| w * (z - mean).powi(2))
        .sum::<f64>()
        / total;
    (mean, var.sqrt())
}

fn validate_weights(weights: &[f64], z: &[f64]) -> Result<()> {
    if weights.len() != z.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} observations",
            weights.len(),
            z.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::invalid("weights must be finite and non-negative"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("observations must be finite"));
    }
    let supported = weights.iter().filter(|&&w| w > MIN_SUPPORT_WEIGHT).count();
    if supported < 3 {
        return Err(Error::InsufficientEffectiveSample(supported));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Minimizes `sum_i w_i l(z_i) + lambda (xi - xi0)^2` over the parameter
/// domain. Starts from `init` when given, otherwise from the Gumbel moment
/// estimate with `xi = 0.1`.
pub fn fit_weighted_mle(
    weights: &[f64],
    z: &[f64],
    lambda: f64,
    xi0: f64,
    init: Option<GevParams>,
) -> Result<FitReport> {
    validate_weights(weights, z)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(
            "penalty weight must be finite and non-negative",
        ));
    }
    let (w, z): (Vec<f64>, Vec<f64>) = weights
        .iter()
        .zip(z)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, z)| (*w, *z))
        .unzip();
    let objective = Objective {
        w: &w,
        z: &z,
        lambda,
        xi0,
    };
    let effective_sample_size = 1.0 / w.iter().map(|w| w * w).sum::<f64>();

    let (mean, sd) = weighted_moments(&w, &z);
    let scale = if sd > 0.0 {
        sd
    } else {
        1e-6 * (1.0 + mean.abs())
    };
    let sigma0 = scale * 6f64.sqrt() / std::f64::consts::PI;
    let moment_start = GevParams {
        mu: mean - EULER_GAMMA * sigma0,
        sigma: sigma0,
        xi: START_XI,
    };

    let start = find_start(&objective, init, moment_start, mean, scale)?;
    let x0 = [start.mu, start.sigma.ln(), u_from_xi(start.xi)];
    let steps = [0.1 * start.sigma, 0.1, 0.1];
    let encoded = |v: &[f64]| objective.value(&decode(v));
    let nm = nelder_mead(encoded, &x0, &steps, NelderMeadOptions::default());

    let mut params = decode(&nm.x);
    let mut value = nm.f;
    if let Some((p, v)) = newton_polish(&objective, params, value) {
        params = p;
        value = v;
    }

    Ok(FitReport {
        params,
        nll: value,
        iterations: nm.iterations,
        converged: nm.converged,
        effective_sample_size,
    })
}

fn find_start(
    objective: &Objective<'_>,
    init: Option<GevParams>,
    moment_start: GevParams,
    mean: f64,
    scale: f64,
) -> Result<GevParams> {
    for candidate in init.into_iter().chain(std::iter::once(moment_start)) {
        if candidate.is_valid() && objective.value(&candidate).is_finite() {
            return Ok(candidate);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6765_7665_7266);
    for _ in 0..RESTARTS {
        let candidate = GevParams {
            mu: mean + scale * rng.random_range(-3.0..3.0),
            sigma: scale * rng.random_range(-2.0f64..2.0).exp(),
            xi: rng.random_range(-0.9..1.0),
        };
        if objective.value(&candidate).is_finite() {
            return Ok(candidate);
        }
    }
    Err(Error::NoFeasibleStart)
}

fn solve3(h: &[[f64; 3]; 3], g: &[f64; 3]) -> Option<[f64; 3]> {
    // Cholesky; fails unless h is positive definite.
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut s = h[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        let mut s = g[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let mut s = y[i];
        for k in i + 1..3 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

fn shifted(theta: &GevParams, k: usize, delta: f64) -> GevParams {
    let mut t = *theta;
    match k {
        0 => t.mu += delta,
        1 => t.sigma += delta,
        _ => t.xi += delta,
    }
    t
}

/// Newton iterations with a finite-difference Hessian of the analytic
/// gradient. Steps are halved until the objective decreases; stops at the
/// first step that cannot improve.
fn newton_polish(
    objective: &Objective<'_>,
    mut theta: GevParams,
    mut value: f64,
) -> Option<(GevParams, f64)> {
    if !value.is_finite() {
        return None;
    }
    let mut improved = false;
    for _ in 0..20 {
        let g = objective.grad(&theta)?;
        let h_steps = [1e-5 * theta.sigma, 1e-5 * theta.sigma, 1e-5];
        let mut hess = [[0.0; 3]; 3];
        for k in 0..3 {
            let plus = objective.grad(&shifted(&theta, k, h_steps[k]));
            let minus = objective.grad(&shifted(&theta, k, -h_steps[k]));
            let (Some(gp), Some(gm)) = (plus, minus) else {
                return improved.then_some((theta, value));
            };
            for j in 0..3 {
                hess[j][k] = (gp[j] - gm[j]) / (2.0 * h_steps[k]);
            }
        }
        for i in 0..3 {
            for j in 0..i {
                let avg = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = avg;
                hess[j][i] = avg;
            }
        }
        let Some(step) = solve3(&hess, &g) else {
            break;
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = GevParams {
                mu: theta.mu - t * step[0],
                sigma: theta.sigma - t * step[1],
                xi: theta.xi - t * step[2],
            };
            let v = objective.value(&cand);
            if v < value {
                theta = cand;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        improved = true;
        let rel = (step[0].abs() + step[1].abs()) / theta.sigma + step[2].abs();
        if t * rel < 1e-12 {
            break;
        }
    }
    improved.then_some((theta, value))
}

/// Unweighted fit (uniform weights `1/n`, no penalty).
pub fn fit_unconditional(z: &[f64]) -> Result<FitReport> {
    if z.len() < 3 {
        return Err(Error::InsufficientEffectiveSample(z.len()));
    }
    let w = vec![1.0 / z.len() as f64; z.len()];
    fit_weighted_mle(&w, z, 0.0, 0.0, None)
}
