//! Simulation scenarios `Y | X = x ~ gamma(x) T_nu(x)` with `X` uniform on
//! `[-1, 1]^p`, Halton test grids, and exact conditional-quantile oracles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Correlation of the bivariate normal density in scenario 3.
const SCENARIO3_RHO: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u8,
    pub p: usize,
}

pub fn scenario(id: u8, p: usize) -> Result<ScenarioSpec> {
    if !(1..=3).contains(&id) {
        return Err(Error::invalid(format!("unknown scenario {id}")));
    }
    if p < 3 {
        return Err(Error::invalid(format!(
            "scenario {id} needs p >= 3, got {p}"
        )));
    }
    Ok(ScenarioSpec { id, p })
}

fn bivariate_normal_density(u: f64, v: f64, rho: f64) -> f64 {
    let one_minus = 1.0 - rho * rho;
    (-(u * u - 2.0 * rho * u * v + v * v) / (2.0 * one_minus)).exp() / (2.0 * PI * one_minus.sqrt())
}

fn logistic_tail(a: f64) -> f64 {
    1.0 / (1.0 + a.exp())
}

impl ScenarioSpec {
    /// Scale function.
    pub fn gamma(&self, x: &[f64]) -> f64 {
        match self.id {
            1 => {
                if x[0] > 0.0 {
                    2.0
                } else {
                    1.0
                }
            }
            2 => 2.0 + logistic_tail(x[0] * x[0] + x[1]),
            _ => 1.0 + 2.0 * PI * bivariate_normal_density(2.0 * x[0], 2.0 * x[1], SCENARIO3_RHO),
        }
    }

    /// Degrees of freedom.
    pub fn nu(&self, x: &[f64]) -> f64 {
        match self.id {
            1 | 2 => 4.0 - (x[0] * x[0] - 2.0 * x[1] * x[1] + x[2] * x[2]),
            _ => 3.0 + 7.0 * logistic_tail(4.0 * x[0] + 1.2),
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.p).map(|j| format!("x{j}")).collect()
    }
}

/// Draws `n` i.i.d. rows. Student-t noise uses `Z / sqrt(chi2_nu / nu)`, which
/// also covers non-integer degrees of freedom.
pub fn sample_scenario(spec: &ScenarioSpec, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * spec.p);
    let mut y = Vec::with_capacity(n);
    let mut x = vec![0.0; spec.p];
    for _ in 0..n {
        for v in x.iter_mut() {
            *v = rng.random_range(-1.0..=1.0);
        }
        let t = student_t_draw(spec.nu(&x), &mut rng)?;
        y.push(spec.gamma(&x) * t);
        features.extend_from_slice(&x);
    }
    Dataset::new(features, y, spec.feature_names(), "y")
}

pub fn student_t_draw<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> Result<f64> {
    let chi = ChiSquared::new(nu).map_err(|e| Error::invalid(format!("chi-square({nu}): {e}")))?;
    let z: f64 = StandardNormal.sample(rng);
    let c: f64 = chi.sample(rng);
    Ok(z / (c / nu).sqrt())
}

/// First `count` primes.
fn primes(count: usize) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out
            .iter()
            .take_while(|&&q| q * q <= k)
            .all(|&q| !k.is_multiple_of(q))
        {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    r
}

pub const HALTON_MAX_DIM: usize = 100;

/// Unscrambled Halton points mapped to `(-1, 1)^p`. Dimension `j` uses the
/// `(j+1)`-th prime; point `k` is sequence index `k + 1 + skip`.
pub fn halton_points(count: usize, p: usize, skip: usize) -> Result<Vec<Vec<f64>>> {
    if p == 0 || p > HALTON_MAX_DIM {
        return Err(Error::invalid(format!(
            "Halton dimension must lie in 1..={HALTON_MAX_DIM}, got {p}"
        )));
    }
    let bases = primes(p);
    Ok((0..count)
        .map(|k| {
            let i = (k + 1 + skip) as u64;
            bases
                .iter()
                .map(|&b| 2.0 * radical_inverse(i, b) - 1.0)
                .collect()
        })
        .collect())
}

/// `P(T_nu > t)` for `t >= 0`.
fn student_t_upper_tail(nu: f64, t: f64) -> f64 {
    0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + t * t))
}

pub fn student_t_cdf(nu: f64, t: f64) -> f64 {
    if t >= 0.0 {
        1.0 - student_t_upper_tail(nu, t)
    } else {
        student_t_upper_tail(nu, -t)
    }
}

/// Upper-tail quantile: the `t >= 0` with `P(T_nu > t) = tail`, `tail <= 1/2`,
/// by bracketed bisection.
fn student_t_upper_quantile(nu: f64, tail: f64) -> f64 {
    if tail >= 0.5 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while student_t_upper_tail(nu, hi) > tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
        if student_t_upper_tail(nu, mid) > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Student-t inverse CDF.
pub fn student_t_quantile(nu: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {tau} is outside (0, 1)"
        )));
    }
    if nu.is_nan() || nu <= 0.0 {
        return Err(Error::invalid("degrees of freedom must be positive"));
    }
    Ok(if tau >= 0.5 {
        student_t_upper_quantile(nu, 1.0 - tau)
    } else {
        -student_t_upper_quantile(nu, tau)
    })
}

/// True conditional quantile `gamma(x) F^{-1}_{T, nu(x)}(tau)` of `Y`.
pub fn true_quantile_y(spec: &ScenarioSpec, x: &[f64], tau: f64) -> Result<f64> {
    Ok(spec.gamma(x) * student_t_quantile(spec.nu(x), tau)?)
}

/// `tau`-quantile of the maximum of `m` i.i.d. copies of `Y | X = x`, i.e.
/// the `Y`-quantile at level `tau^(1/m)`.
pub fn true_block_max_quantile(spec: &ScenarioSpec, x: &[f64], tau: f64, m: usize) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {tau} is outside (0, 1)"
        )));
    }
    if m == 0 {
        return Err(Error::invalid("block size must be at least 1"));
    }
    // upper tail 1 - tau^(1/m), without cancellation
    let tail = -(tau.ln() / m as f64).exp_m1();
    let nu = spec.nu(x);
    let t = if tail <= 0.5 {
        student_t_upper_quantile(nu, tail)
    } else {
        -student_t_upper_quantile(nu, 1.0 - tail)
    };
    Ok(spec.gamma(x) * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_formulas() {
        let s1 = scenario(1, 5).unwrap();
        let x = [0.5, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(s1.gamma(&x), 2.0);
        assert_eq!(s1.nu(&x), 3.75);
        let origin = [0.0; 5];
        assert_eq!(s1.gamma(&origin), 1.0);
        assert_eq!(s1.nu(&origin), 4.0);
        let s3 = scenario(3, 5).unwrap();
        let expected = 1.0 + 1.0 / (1.0f64 - 0.75 * 0.75).sqrt();
        assert!((s3.gamma(&origin) - expected).abs() < 1e-14);
        assert!((s3.gamma(&origin) - 2.511858).abs() < 1e-6);
        let s2 = scenario(2, 3).unwrap();
        assert!((s2.gamma(&[0.0; 3]) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn scenario_errors() {
        assert!(scenario(4, 10).is_err());
        assert!(scenario(1, 2).is_err());
    }

    #[test]
    fn halton_first_points() {
        let pts = halton_points(3, 2, 0).unwrap();
        assert_eq!(pts[0][0], 0.0);
        assert_eq!(pts[1][0], -0.5);
        assert_eq!(pts[2][0], 0.5);
        // base 3: 1/3, 2/3, 1/9
        assert!((pts[0][1] - (2.0 / 3.0 - 1.0)).abs() < 1e-15);
        let skipped = halton_points(2, 2, 1).unwrap();
        assert_eq!(skipped[0], pts[1]);
        assert!(halton_points(1, 101, 0).is_err());
        assert_eq!(primes(100)[99], 541);
    }

    #[test]
    fn t_quantile_symmetry_and_median() {
        assert_eq!(student_t_quantile(4.0, 0.5).unwrap(), 0.0);
        let hi = student_t_quantile(3.3, 0.9).unwrap();
        let lo = student_t_quantile(3.3, 0.1).unwrap();
        assert!((hi + lo).abs() < 1e-12);
        assert!((student_t_cdf(3.3, hi) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn block_max_oracle_reduces_to_single_draw() {
        let s = scenario(1, 3).unwrap();
        let x = [0.3, -0.2, 0.1];
        let a = true_block_max_quantile(&s, &x, 0.97, 1).unwrap();
        let b = true_quantile_y(&s, &x, 0.97).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs());
    }
}
