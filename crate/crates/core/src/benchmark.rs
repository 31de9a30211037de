//! Simulation benchmark of the GEV model against forest empirical-quantile
//! baselines.
//!
//! Baselines: `grf` reads weighted quantiles off a quantile-split forest and
//! `qrf` off a regression-split forest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_blocks, Table};
use crate::error::{Error, Result};
use crate::eval::metric_report;
use crate::forest::{
    fit_forest, weighted_empirical_quantile, ForestModel, ForestParams, SplitMode,
};
use crate::gev::gev_quantile;
use crate::pipeline::GevErfModel;
use crate::simulate::{
    halton_points, sample_scenario, true_block_max_quantile, true_quantile_y, ScenarioSpec,
};

/// Which conditional law the quantile level refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruthScale {
    /// Maximum of `m` draws of `Y | X = x`.
    BlockMax,
    /// A single draw of `Y | X = x`.
    Response,
}

/// Training data for the baseline forests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineData {
    BlockMaxima,
    Raw,
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub m: usize,
    pub taus: Vec<f64>,
    pub forest: ForestParams,
    pub lambda: f64,
    pub test_points: usize,
    pub truth: TruthScale,
    pub baseline_data: BaselineData,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub replication: usize,
    pub scenario: u8,
    pub p: usize,
    pub model: String,
    pub tau: f64,
    pub log_ise: f64,
    pub mae: f64,
    pub medae: f64,
}

pub const MODELS: [&str; 3] = ["gev", "grf", "qrf"];

/// SplitMix64 finalizer, used to give each replication its own stream.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED69));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taus.is_empty() {
            return Err(Error::invalid(
                "benchmark needs at least one quantile level",
            ));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::invalid(format!(
                "quantile level {t} is outside (0, 1)"
            )));
        }
        if self.test_points == 0 {
            return Err(Error::invalid("benchmark needs at least one test point"));
        }
        if self.m == 0 || self.n / self.m < 2 * self.forest.min_node_size {
            return Err(Error::invalid(format!(
                "{} rows in blocks of {} leave too few blocks for min node size {}",
                self.n, self.m, self.forest.min_node_size
            )));
        }
        self.forest.validate(self.scenario.p)
    }

    /// Level at which each model is queried so that all three target the
    /// quantile of the selected truth.
    fn levels(&self, tau: f64) -> (f64, f64) {
        let m = self.m as f64;
        let block_level = match self.truth {
            TruthScale::BlockMax => tau,
            TruthScale::Response => tau.powf(m),
        };
        let baseline_level = match (self.baseline_data, self.truth) {
            (BaselineData::BlockMaxima, _) => block_level,
            (BaselineData::Raw, TruthScale::BlockMax) => tau.powf(1.0 / m),
            (BaselineData::Raw, TruthScale::Response) => tau,
        };
        (block_level, baseline_level)
    }
}

fn baseline_quantiles(
    forest: &ForestModel,
    y: &[f64],
    xs: &[Vec<f64>],
    tau: f64,
) -> Result<Vec<f64>> {
    xs.par_iter()
        .map(|x| weighted_empirical_quantile(&forest.similarity_weights(x)?, y, tau))
        .collect()
}

/// One replication: fresh training data, the three models, and metric rows
/// sorted by model then `tau`.
pub fn run_replication(cfg: &BenchmarkConfig, replication: usize) -> Result<Vec<BenchmarkRow>> {
    cfg.validate()?;
    let spec = &cfg.scenario;
    let data_seed = derive_seed(cfg.seed, 2 * replication as u64);
    let forest_seed = derive_seed(cfg.seed, 2 * replication as u64 + 1);
    let ds = sample_scenario(spec, cfg.n, data_seed)?;
    let xs = halton_points(cfg.test_points, spec.p, 0)?;

    let quantile_fp = ForestParams {
        split_mode: SplitMode::Quantile,
        seed: forest_seed,
        ..cfg.forest.clone()
    };
    let regression_fp = ForestParams {
        split_mode: SplitMode::Regression,
        ..quantile_fp.clone()
    };

    let blocks = make_blocks(&ds, cfg.m)?;
    let gev_forest = fit_forest(&blocks, &quantile_fp)?;
    let model = GevErfModel::from_parts(gev_forest, blocks, cfg.lambda)?;
    let params = model.predict_params_many(&xs)?;

    let baseline_blocks = match cfg.baseline_data {
        BaselineData::BlockMaxima => model.blocks().clone(),
        BaselineData::Raw => make_blocks(&ds, 1)?,
    };
    let grf = match cfg.baseline_data {
        BaselineData::BlockMaxima => model.forest().clone(),
        BaselineData::Raw => fit_forest(&baseline_blocks, &quantile_fp)?,
    };
    let qrf = fit_forest(&baseline_blocks, &regression_fp)?;
    let y = baseline_blocks.maxima();

    let mut taus = cfg.taus.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut rows = Vec::new();
    for name in MODELS {
        for &tau in &taus {
            let truth: Vec<f64> = xs
                .iter()
                .map(|x| match cfg.truth {
                    TruthScale::BlockMax => true_block_max_quantile(spec, x, tau, cfg.m),
                    TruthScale::Response => true_quantile_y(spec, x, tau),
                })
                .collect::<Result<_>>()?;
            let (block_level, baseline_level) = cfg.levels(tau);
            let pred: Vec<f64> = match name {
                "gev" => params
                    .iter()
                    .map(|th| gev_quantile(th, block_level))
                    .collect::<Result<_>>()?,
                "grf" => baseline_quantiles(&grf, y, &xs, baseline_level)?,
                _ => baseline_quantiles(&qrf, y, &xs, baseline_level)?,
            };
            let report = metric_report(&pred, &truth)?;
            rows.push(BenchmarkRow {
                replication,
                scenario: spec.id,
                p: spec.p,
                model: name.to_string(),
                tau,
                log_ise: report.ise.ln(),
                mae: report.mae,
                medae: report.medae,
            });
        }
    }
    Ok(rows)
}

pub fn benchmark_table(rows: &[BenchmarkRow]) -> Table {
    Table::new()
        .int(
            "replication",
            rows.iter().map(|r| r.replication as i64).collect(),
        )
        .int("scenario", rows.iter().map(|r| r.scenario as i64).collect())
        .int("p", rows.iter().map(|r| r.p as i64).collect())
        .text("model", rows.iter().map(|r| r.model.clone()).collect())
        .real("tau", rows.iter().map(|r| r.tau).collect())
        .real("log_ise", rows.iter().map(|r| r.log_ise).collect())
        .real("mae", rows.iter().map(|r| r.mae).collect())
        .real("medae", rows.iter().map(|r| r.medae).collect())
}
