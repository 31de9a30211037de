//! Fitting and prediction for the forest-localized GEV model, plus
//! cross-validation of the shape penalty and leaf size.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{make_blocks, read_header, BlockMaxSample, Dataset, Table};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestDocument, ForestModel, ForestParams, SplitMode};
use crate::gev::{self, fit_unconditional, fit_weighted_mle, FitReport, GevParams};

/// Intermediate order: quantiles are only extrapolated above this level.
pub const TAU0: f64 = 0.8;

/// Held-out likelihood contributions that are infinite are scored as this.
pub const CV_INFINITE_LOSS: f64 = 1e10;

/// Forest weights over a block-maxima sample, with the shape penalty
/// anchored at the unconditional fit.
#[derive(Debug, Clone)]
pub struct GevErfModel {
    forest: ForestModel,
    blocks: BlockMaxSample,
    lambda: f64,
    unconditional: FitReport,
    tau0: f64,
}

/// Block maxima, quantile-split forest and unconditional shape.
pub fn gev_erf_fit(ds: &Dataset, m: usize, fp: &ForestParams, lambda: f64) -> Result<GevErfModel> {
    let blocks = make_blocks(ds, m)?;
    let fp = ForestParams {
        split_mode: SplitMode::Quantile,
        ..fp.clone()
    };
    let forest = fit_forest(&blocks, &fp)?;
    GevErfModel::from_parts(forest, blocks, lambda)
}

impl GevErfModel {
    /// Wraps an already-trained forest; it must have been grown on `blocks`.
    pub fn from_parts(forest: ForestModel, blocks: BlockMaxSample, lambda: f64) -> Result<Self> {
        let unconditional = fit_unconditional(blocks.maxima())?;
        Self::with_unconditional(forest, blocks, lambda, unconditional)
    }

    fn with_unconditional(
        forest: ForestModel,
        blocks: BlockMaxSample,
        lambda: f64,
        unconditional: FitReport,
    ) -> Result<Self> {
        if forest.n_train() != blocks.n() || forest.p() != blocks.p() {
            return Err(Error::invalid(format!(
                "forest trained on {}x{} rows does not match the {}x{} block sample",
                forest.n_train(),
                forest.p(),
                blocks.n(),
                blocks.p()
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(
                "penalty weight must be finite and non-negative",
            ));
        }
        Ok(Self {
            forest,
            blocks,
            lambda,
            unconditional,
            tau0: TAU0,
        })
    }

    pub fn forest(&self) -> &ForestModel {
        &self.forest
    }

    pub fn blocks(&self) -> &BlockMaxSample {
        &self.blocks
    }

    pub fn block_size(&self) -> usize {
        self.blocks.block_size()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi0(&self) -> f64 {
        self.unconditional.params.xi
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn unconditional(&self) -> &FitReport {
        &self.unconditional
    }

    pub fn feature_names(&self) -> &[String] {
        self.blocks.feature_names()
    }

    /// Full weighted fit at `x`.
    pub fn predict_fit(&self, x: &[f64]) -> Result<FitReport> {
        let wrap = |e: Error| Error::Prediction {
            point: x.to_vec(),
            source: Box::new(e),
        };
        let weights = self.forest.similarity_weights(x).map_err(wrap)?;
        fit_weighted_mle(
            &weights,
            self.blocks.maxima(),
            self.lambda,
            self.xi0(),
            Some(self.unconditional.params),
        )
        .map_err(wrap)
    }

    pub fn predict_params(&self, x: &[f64]) -> Result<GevParams> {
        Ok(self.predict_fit(x)?.params)
    }

    /// Conditional quantile of order `tau`, which must exceed `tau0`.
    pub fn predict_quantile(&self, x: &[f64], tau: f64) -> Result<f64> {
        self.check_level(tau)?;
        gev::gev_quantile(&self.predict_params(x)?, tau)
    }

    pub fn check_level(&self, tau: f64) -> Result<()> {
        if tau <= self.tau0 {
            return Err(Error::BelowIntermediateOrder(tau));
        }
        if tau >= 1.0 || tau.is_nan() {
            return Err(Error::invalid(format!(
                "quantile level {tau} is outside (0, 1)"
            )));
        }
        Ok(())
    }

    /// Parameters for many query points, in input order.
    pub fn predict_params_many(&self, xs: &[Vec<f64>]) -> Result<Vec<GevParams>> {
        xs.par_iter().map(|x| self.predict_params(x)).collect()
    }
}

pub fn gev_erf_predict_params(model: &GevErfModel, x: &[f64]) -> Result<GevParams> {
    model.predict_params(x)
}

pub fn gev_erf_predict_quantile(model: &GevErfModel, x: &[f64], tau: f64) -> Result<f64> {
    model.predict_quantile(x, tau)
}

const MODEL_FORMAT: &str = "geverf-model/v1";

#[derive(Debug, Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    block_size: usize,
    lambda: f64,
    xi0: f64,
    tau0: f64,
    unconditional: FitReport,
    blocks: BlockMaxSample,
    forest: ForestDocument,
}

impl GevErfModel {
    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            block_size: self.block_size(),
            lambda: self.lambda,
            xi0: self.xi0(),
            tau0: self.tau0,
            unconditional: self.unconditional,
            blocks: self.blocks.clone(),
            forest: self.forest.to_document(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let format = value.get("format").and_then(|f| f.as_str()).unwrap_or("");
        if format != MODEL_FORMAT {
            return Err(Error::UnsupportedFormat {
                expected: MODEL_FORMAT.to_string(),
                found: format.to_string(),
            });
        }
        let doc: ModelDocument = serde_json::from_value(value)?;
        if doc.block_size != doc.blocks.block_size() {
            return Err(Error::invalid(
                "model block size disagrees with its block sample",
            ));
        }
        if doc.xi0 != doc.unconditional.params.xi || doc.tau0 != TAU0 {
            return Err(Error::invalid(
                "model shape anchor or intermediate order is inconsistent",
            ));
        }
        let forest = ForestModel::from_document(doc.forest)?;
        Self::with_unconditional(forest, doc.blocks, doc.lambda, doc.unconditional)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Reads query points from the model's feature columns of a CSV; an empty
/// file yields no points.
pub fn read_query_points(model: &GevErfModel, path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let names = model.feature_names().to_vec();
    let header = read_header(path)?;
    if let Some(missing) = names.iter().find(|n| !header.contains(n)) {
        return Err(Error::MissingColumn(missing.clone()));
    }
    let columns = crate::data::read_columns(path, &names)?;
    let n = columns.first().map_or(0, Vec::len);
    Ok((0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub lambda: f64,
    pub min_node_size: usize,
    pub cv_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// One row per `(min_node_size, lambda)` pair, node size outermost.
    pub rows: Vec<CvRow>,
    pub best: (f64, usize),
}

impl CvResult {
    pub fn table(&self) -> Table {
        Table::new()
            .real("lambda", self.rows.iter().map(|r| r.lambda).collect())
            .int(
                "min_node_size",
                self.rows.iter().map(|r| r.min_node_size as i64).collect(),
            )
            .real("cv_error", self.rows.iter().map(|r| r.cv_error).collect())
    }
}

/// Contiguous fold boundaries of near-equal size.
pub fn fold_ranges(n: usize, k: usize) -> Vec<std::ops::Range<usize>> {
    (0..k).map(|j| j * n / k..(j + 1) * n / k).collect()
}

/// K-fold cross-validation of `(lambda, min_node_size)` on block maxima,
/// scored by the summed held-out GEV negative log-likelihood averaged over
/// folds.
pub fn cross_validate(
    ds: &Dataset,
    m: usize,
    base_fp: &ForestParams,
    lambda_grid: &[f64],
    node_size_grid: &[usize],
    k: usize,
) -> Result<CvResult> {
    if k < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    if lambda_grid.is_empty() || node_size_grid.is_empty() {
        return Err(Error::invalid("cross-validation grids must be non-empty"));
    }
    if lambda_grid.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::invalid(
            "penalty grid values must be finite and non-negative",
        ));
    }
    let blocks = make_blocks(ds, m)?;
    let folds = fold_ranges(blocks.n(), k);
    if let Some(f) = folds.iter().find(|f| f.len() < 3) {
        return Err(Error::invalid(format!(
            "fold {f:?} holds fewer than 3 blocks ({} blocks, {k} folds)",
            blocks.n()
        )));
    }

    let mut errors = vec![vec![0.0; lambda_grid.len()]; node_size_grid.len()];
    for (s, &mns) in node_size_grid.iter().enumerate() {
        let fp = ForestParams {
            min_node_size: mns,
            split_mode: SplitMode::Quantile,
            ..base_fp.clone()
        };
        for fold in &folds {
            let train_idx: Vec<usize> = (0..blocks.n()).filter(|i| !fold.contains(i)).collect();
            let train = blocks.select(&train_idx);
            let test = blocks.select(&fold.clone().collect::<Vec<_>>());
            // The forest and unconditional fit do not depend on lambda.
            let forest = fit_forest(&train, &fp)?;
            let unconditional = fit_unconditional(train.maxima())?;
            for (l, &lambda) in lambda_grid.iter().enumerate() {
                let model = GevErfModel::with_unconditional(
                    forest.clone(),
                    train.clone(),
                    lambda,
                    unconditional,
                )?;
                let losses: Vec<f64> = (0..test.n())
                    .into_par_iter()
                    .map(|i| {
                        let theta = model.predict_params(test.row(i))?;
                        let loss = gev::gev_nll_term(&theta, test.maxima()[i]);
                        Ok(if loss.is_finite() {
                            loss
                        } else {
                            CV_INFINITE_LOSS
                        })
                    })
                    .collect::<Result<_>>()?;
                errors[s][l] += losses.iter().sum::<f64>() / k as f64;
            }
        }
    }

    let mut rows = Vec::with_capacity(lambda_grid.len() * node_size_grid.len());
    for (s, &mns) in node_size_grid.iter().enumerate() {
        for (l, &lambda) in lambda_grid.iter().enumerate() {
            rows.push(CvRow {
                lambda,
                min_node_size: mns,
                cv_error: errors[s][l],
            });
        }
    }
    let best = select_best(&rows);
    Ok(CvResult { rows, best })
}

/// Minimum CV error; ties go to the smaller lambda, then the smaller node size.
pub fn select_best(rows: &[CvRow]) -> (f64, usize) {
    let best = rows
        .iter()
        .min_by(|a, b| {
            a.cv_error
                .total_cmp(&b.cv_error)
                .then(a.lambda.total_cmp(&b.lambda))
                .then(a.min_node_size.cmp(&b.min_node_size))
        })
        .expect("non-empty grid");
    (best.lambda, best.min_node_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_contiguous_and_cover() {
        let f = fold_ranges(11, 3);
        assert_eq!(f, vec![0..3, 3..7, 7..11]);
    }

    #[test]
    fn best_row_tie_break() {
        let row = |lambda, min_node_size, cv_error| CvRow {
            lambda,
            min_node_size,
            cv_error,
        };
        let rows = [
            row(0.01, 5, 1.0),
            row(0.001, 10, 1.0),
            row(0.001, 5, 1.0),
            row(0.1, 5, 2.0),
        ];
        assert_eq!(select_best(&rows), (0.001, 5));
    }

    #[test]
    fn tau_below_intermediate_order_is_rejected() {
        let ds = Dataset::new(
            (0..60).map(|i| (i % 7) as f64).collect(),
            (0..60)
                .map(|i| ((i * 37) % 11) as f64 + 0.1 * i as f64)
                .collect(),
            vec!["x".into()],
            "y",
        )
        .unwrap();
        let blocks = make_blocks(&ds, 2).unwrap();
        let forest = ForestModel::single_leaf(blocks.n(), 1, 3).unwrap();
        let model = GevErfModel::from_parts(forest, blocks, 0.0).unwrap();
        assert!(matches!(
            model.predict_quantile(&[0.0], 0.5),
            Err(Error::BelowIntermediateOrder(_))
        ));
        assert!(model.predict_quantile(&[0.0], 0.8).is_err());
        assert!(model.predict_quantile(&[0.0], 0.9).is_ok());
    }
}
