//! Error metrics, calibration, PIT goodness-of-fit statistics and the
//! block-size sensitivity sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_blocks, BlockMaxSample, Dataset, Table};
use crate::error::{Error, Result};
use crate::forest::ForestParams;
use crate::gev::{gev_cdf, gev_quantile, GevParams};
use crate::pipeline::{gev_erf_fit, GevErfModel};

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} reference values",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("no points to evaluate"));
    }
    Ok(())
}

/// Mean squared error over the test points.
pub fn ise(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / pred.len() as f64)
}

pub fn mise(ise_values: &[f64]) -> Result<f64> {
    if ise_values.is_empty() {
        return Err(Error::invalid("no ISE values to average"));
    }
    Ok(ise_values.iter().sum::<f64>() / ise_values.len() as f64)
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("median of an empty sample"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Mean and median absolute error.
pub fn mae_medae(pred: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    check_lengths(pred, truth)?;
    let abs: Vec<f64> = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect();
    Ok((abs.iter().sum::<f64>() / abs.len() as f64, median(&abs)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ise: f64,
    pub mae: f64,
    pub medae: f64,
    pub errors: Vec<f64>,
}

pub fn metric_report(pred: &[f64], truth: &[f64]) -> Result<MetricReport> {
    let (mae, medae) = mae_medae(pred, truth)?;
    Ok(MetricReport {
        ise: ise(pred, truth)?,
        mae,
        medae,
        errors: pred.iter().zip(truth).map(|(p, t)| p - t).collect(),
    })
}

/// Standardized coverage count `(#{Y < Q} - n tau) / sqrt(n tau (1 - tau))`.
pub fn wang_metric(pred_quantiles: &[f64], observed: &[f64], tau: f64) -> Result<f64> {
    check_lengths(pred_quantiles, observed)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level {tau} is outside (0, 1)"
        )));
    }
    let n = observed.len() as f64;
    let below = observed
        .iter()
        .zip(pred_quantiles)
        .filter(|(y, q)| y < q)
        .count() as f64;
    Ok((below - n * tau) / (n * tau * (1.0 - tau)).sqrt())
}

/// `u_i = G_{theta(x_i)}(z_i)` for any parameter map.
pub fn pit_with<F>(params: F, blocks: &BlockMaxSample) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<GevParams> + Sync,
{
    (0..blocks.n())
        .into_par_iter()
        .map(|i| Ok(gev_cdf(&params(blocks.row(i))?, blocks.maxima()[i])))
        .collect()
}

pub fn pit(model: &GevErfModel, test_blocks: &BlockMaxSample) -> Result<Vec<f64>> {
    if test_blocks.p() != model.blocks().p() {
        return Err(Error::invalid(format!(
            "test blocks have {} covariates, model expects {}",
            test_blocks.p(),
            model.blocks().p()
        )));
    }
    pit_with(|x| model.predict_params(x), test_blocks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    pub ks_stat: f64,
    pub ad_stat: f64,
    pub cvm_stat: f64,
    pub n: usize,
}

const U_CLAMP: f64 = 1e-12;

/// Kolmogorov-Smirnov, Anderson-Darling and Cramer-von Mises statistics of
/// `u` against the uniform law.
pub fn gof_tests(u: &[f64]) -> Result<GofReport> {
    if u.is_empty() {
        return Err(Error::invalid("goodness-of-fit needs at least one value"));
    }
    if let Some(bad) = u.iter().find(|v| !(**v >= -1e-9 && **v <= 1.0 + 1e-9)) {
        return Err(Error::invalid(format!("PIT value {bad} is outside [0, 1]")));
    }
    let mut s: Vec<f64> = u.iter().map(|v| v.clamp(U_CLAMP, 1.0 - U_CLAMP)).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let nf = n as f64;
    let mut ks: f64 = 0.0;
    let mut cvm = 1.0 / (12.0 * nf);
    let mut ad_sum = 0.0;
    for (k, &ui) in s.iter().enumerate() {
        let i = (k + 1) as f64;
        ks = ks.max(i / nf - ui).max(ui - (i - 1.0) / nf);
        cvm += (ui - (2.0 * i - 1.0) / (2.0 * nf)).powi(2);
        ad_sum += (2.0 * i - 1.0) * (ui.ln() + (-s[n - 1 - k]).ln_1p());
    }
    Ok(GofReport {
        ks_stat: ks,
        ad_stat: -nf - ad_sum / nf,
        cvm_stat: cvm,
        n,
    })
}

/// One training/held-out pair of the sweep.
#[derive(Debug, Clone)]
pub struct SweepReplicate {
    pub train: Dataset,
    pub heldout: Dataset,
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub m_grid: Vec<usize>,
    pub forest: ForestParams,
    pub lambda: f64,
    pub test_points: Vec<Vec<f64>>,
    pub tau_levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: usize,
    pub tau: f64,
    pub n_blocks: usize,
    pub log_mise: f64,
    /// Goodness-of-fit statistics averaged over replicates.
    pub ks: f64,
    pub ad: f64,
    pub cvm: f64,
    pub gof_n: usize,
}

/// For each block size: fit on every replicate's training set, score the
/// predicted quantiles at the test points against `truth(x, tau, m)`, and
/// evaluate PIT statistics on the held-out block maxima. Rows are sorted by
/// `m` then `tau`.
pub fn block_size_sweep<T>(
    replicates: &[SweepReplicate],
    settings: &SweepSettings,
    truth: T,
) -> Result<Vec<SweepRow>>
where
    T: Fn(&[f64], f64, usize) -> Result<f64> + Sync,
{
    if settings.m_grid.is_empty() {
        return Err(Error::invalid("block-size grid is empty"));
    }
    if settings.tau_levels.is_empty() || settings.test_points.is_empty() {
        return Err(Error::invalid(
            "sweep needs quantile levels and test points",
        ));
    }
    if replicates.is_empty() {
        return Err(Error::invalid("sweep needs at least one replicate"));
    }
    let mut grid = settings.m_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let mut taus = settings.tau_levels.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut rows = Vec::with_capacity(grid.len() * taus.len());
    for &m in &grid {
        let truths: Vec<Vec<f64>> = taus
            .iter()
            .map(|&tau| {
                settings
                    .test_points
                    .iter()
                    .map(|x| truth(x, tau, m))
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let mut ise_by_tau = vec![Vec::with_capacity(replicates.len()); taus.len()];
        let mut gof = (0.0, 0.0, 0.0, 0usize);
        let mut n_blocks = 0;
        for rep in replicates {
            let model = gev_erf_fit(&rep.train, m, &settings.forest, settings.lambda)?;
            n_blocks = model.blocks().n();
            for &tau in &taus {
                model.check_level(tau)?;
            }
            let params = model.predict_params_many(&settings.test_points)?;
            for (t, &tau) in taus.iter().enumerate() {
                let pred: Vec<f64> = params
                    .iter()
                    .map(|th| gev_quantile(th, tau))
                    .collect::<Result<_>>()?;
                ise_by_tau[t].push(ise(&pred, &truths[t])?);
            }
            let u = pit(&model, &make_blocks(&rep.heldout, m)?)?;
            let report = gof_tests(&u)?;
            gof.0 += report.ks_stat;
            gof.1 += report.ad_stat;
            gof.2 += report.cvm_stat;
            gof.3 += report.n;
        }
        let r = replicates.len() as f64;
        for (t, &tau) in taus.iter().enumerate() {
            rows.push(SweepRow {
                m,
                tau,
                n_blocks,
                log_mise: mise(&ise_by_tau[t])?.ln(),
                ks: gof.0 / r,
                ad: gof.1 / r,
                cvm: gof.2 / r,
                gof_n: gof.3 / replicates.len(),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    Table::new()
        .int("m", rows.iter().map(|r| r.m as i64).collect())
        .real("tau", rows.iter().map(|r| r.tau).collect())
        .int("n_blocks", rows.iter().map(|r| r.n_blocks as i64).collect())
        .real("log_mise", rows.iter().map(|r| r.log_mise).collect())
        .real("ks", rows.iter().map(|r| r.ks).collect())
        .real("ad", rows.iter().map(|r| r.ad).collect())
        .real("cvm", rows.iter().map(|r| r.cvm).collect())
        .int("gof_n", rows.iter().map(|r| r.gof_n as i64).collect())
}

pub fn gof_table(report: &GofReport) -> Table {
    Table::new()
        .int("n", vec![report.n as i64])
        .real("ks", vec![report.ks_stat])
        .real("ad", vec![report.ad_stat])
        .real("cvm", vec![report.cvm_stat])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ise_examples() {
        assert_eq!(ise(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ise(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(ise(&[3.0, 5.0], &[1.0, 1.0]).unwrap(), 10.0);
        assert!(ise(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mise_examples() {
        assert_eq!(mise(&[7.0]).unwrap(), 7.0);
        assert_eq!(mise(&[2.0, 4.0]).unwrap(), 3.0);
        assert!(mise(&[]).is_err());
    }

    #[test]
    fn mae_medae_examples() {
        assert_eq!(mae_medae(&[1.0, 3.0], &[0.0, 0.0]).unwrap(), (2.0, 2.0));
        assert_eq!(
            mae_medae(&[0.0, 0.0, 9.0], &[0.0, 0.0, 0.0]).unwrap(),
            (3.0, 0.0)
        );
        assert_eq!(mae_medae(&[4.0], &[4.0]).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn wang_examples() {
        let q = vec![1.0; 100];
        let obs: Vec<f64> = (0..100).map(|i| if i < 95 { 0.0 } else { 2.0 }).collect();
        assert!((wang_metric(&q, &obs, 0.9).unwrap() - 5.0 / 3.0).abs() < 1e-12);
        let obs: Vec<f64> = (0..100).map(|i| if i < 90 { 0.0 } else { 2.0 }).collect();
        assert_eq!(wang_metric(&q, &obs, 0.9).unwrap(), 0.0);
        // ties count as not below
        let obs = vec![1.0; 100];
        assert!(wang_metric(&q, &obs, 0.9).unwrap() < 0.0);
    }

    #[test]
    fn gof_examples() {
        let r = gof_tests(&[0.25, 0.5, 0.75]).unwrap();
        assert!((r.ks_stat - 0.25).abs() < 1e-15);
        let r = gof_tests(&[0.5]).unwrap();
        // n * integral of (F_n(t) - t)^2 dt = 2 * integral_0^(1/2) t^2 dt
        assert!((r.cvm_stat - 1.0 / 12.0).abs() < 1e-15);
        assert!((r.ad_stat - 0.386294361120).abs() < 1e-9);
        assert!(gof_tests(&[1.1]).is_err());
        assert!(gof_tests(&[]).is_err());
        let r = gof_tests(&[0.0, 1.0]).unwrap();
        assert!(r.ad_stat.is_finite());
    }

    #[test]
    fn pit_below_support_is_zero() {
        let blocks =
            BlockMaxSample::from_parts(vec![0.0, 1.0], vec![-100.0, 0.0], 1, vec!["x".into()])
                .unwrap();
        let theta = GevParams::new(0.0, 1.0, 0.5).unwrap();
        let u = pit_with(|_| Ok(theta), &blocks).unwrap();
        assert_eq!(u[0], 0.0);
        assert!(u[1] > 0.0);
    }
}
