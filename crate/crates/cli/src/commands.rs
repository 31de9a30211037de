use std::fs::File;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use geverf::benchmark::{
    benchmark_table, run_replication, BaselineData, BenchmarkConfig, TruthScale,
};
use geverf::data::{append_csv_rows, make_blocks, read_csv, read_header, write_csv, Table};
use geverf::eval::{
    block_size_sweep, gof_table, gof_tests, pit, sweep_table, SweepReplicate, SweepSettings,
};
use geverf::forest::{ForestParams, SplitMode};
use geverf::gev::gev_quantile;
use geverf::pipeline::{cross_validate, gev_erf_fit, read_query_points, GevErfModel, TAU0};
use geverf::simulate::{halton_points, sample_scenario, scenario, true_block_max_quantile};

use crate::{
    BaselineArg, BenchmarkArgs, BlockSweepArgs, Command, CvArgs, DataArgs, FitArgs, ForestArgs,
    GofArgs, PredictArgs, SimulateArgs, TruthArg,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Gof(a) => gof(a),
        Command::BlockSweep(a) => block_sweep(a),
    }
}

impl ForestArgs {
    fn params(&self) -> ForestParams {
        ForestParams {
            num_trees: self.num_trees,
            min_node_size: self.min_node_size,
            mtry: self.mtry,
            subsample_fraction: self.subsample_fraction,
            honesty: self.honesty,
            split_mode: SplitMode::Quantile,
            seed: self.forest_seed,
            ..ForestParams::default()
        }
    }
}

impl DataArgs {
    fn load(&self) -> Result<geverf::data::Dataset> {
        let features = match &self.features {
            Some(f) => f.clone(),
            None => read_header(&self.data)?
                .into_iter()
                .filter(|h| *h != self.response)
                .collect(),
        };
        read_csv(&self.data, &self.response, &features)
            .with_context(|| format!("reading {}", self.data.display()))
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    ensure!(
        lambda >= 0.0 && lambda.is_finite(),
        "lambda must be finite and non-negative, got {lambda}"
    );
    Ok(())
}

fn check_blocks(n: usize, m: usize, min_node_size: usize) -> Result<()> {
    ensure!(m >= 1, "block size must be at least 1");
    ensure!(
        n / m >= 2 * min_node_size,
        "{n} rows in blocks of {m} give {} blocks, fewer than 2 x min node size {min_node_size}",
        n / m
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let spec = scenario(a.scenario, a.p)?;
    ensure!(a.n >= 1, "sample size must be at least 1");
    let ds = sample_scenario(&spec, a.n, a.seed)?;
    write_csv(&Table::from_dataset(&ds), &a.out)?;
    let meta_path = a.meta.unwrap_or_else(|| a.out.with_extension("json"));
    let meta = serde_json::json!({
        "scenario": a.scenario,
        "p": a.p,
        "n": a.n,
        "seed": a.seed,
    });
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
        .with_context(|| format!("writing {}", meta_path.display()))?;
    println!("wrote {} rows to {}", ds.n(), a.out.display());
    Ok(())
}

fn fit(a: FitArgs) -> Result<()> {
    check_lambda(a.lambda)?;
    let fp = a.forest.params();
    let ds = a.data.load()?;
    fp.validate(ds.p())?;
    check_blocks(ds.n(), a.m, fp.min_node_size)?;
    let model = gev_erf_fit(&ds, a.m, &fp, a.lambda)?;
    model.save(&a.out)?;
    println!(
        "blocks: {}  block size: {}  xi0: {:.6}  lambda: {}",
        model.blocks().n(),
        model.block_size(),
        model.xi0(),
        model.lambda()
    );
    Ok(())
}

fn tau_label(tau: f64) -> String {
    format!("q_{tau}")
}

fn predict(a: PredictArgs) -> Result<()> {
    ensure!(!a.tau.is_empty(), "at least one quantile level is required");
    for &t in &a.tau {
        ensure!(
            t > TAU0 && t < 1.0,
            "quantile level {t} is not in ({TAU0}, 1): below intermediate order"
        );
    }
    let model = GevErfModel::load(&a.model)
        .with_context(|| format!("loading model {}", a.model.display()))?;
    let xs = read_query_points(&model, &a.query)?;
    let params = model.predict_params_many(&xs)?;
    let mut table = Table::new();
    for (j, name) in model.feature_names().iter().enumerate() {
        table = table.real(name.clone(), xs.iter().map(|x| x[j]).collect());
    }
    table = table
        .real("mu", params.iter().map(|t| t.mu).collect())
        .real("sigma", params.iter().map(|t| t.sigma).collect())
        .real("xi", params.iter().map(|t| t.xi).collect());
    for &t in &a.tau {
        let q = params
            .iter()
            .map(|th| gev_quantile(th, t))
            .collect::<geverf::Result<Vec<_>>>()?;
        table = table.real(tau_label(t), q);
    }
    write_csv(&table, &a.out)?;
    Ok(())
}

fn cv(a: CvArgs) -> Result<()> {
    ensure!(
        a.folds >= 2,
        "cross-validation needs at least 2 folds, got {}",
        a.folds
    );
    ensure!(!a.lambdas.is_empty(), "lambda grid is empty");
    ensure!(!a.node_sizes.is_empty(), "node-size grid is empty");
    for &l in &a.lambdas {
        check_lambda(l)?;
    }
    let fp = a.forest.params();
    let ds = a.data.load()?;
    for &mns in &a.node_sizes {
        ForestParams {
            min_node_size: mns,
            ..fp.clone()
        }
        .validate(ds.p())?;
    }
    let result = cross_validate(&ds, a.m, &fp, &a.lambdas, &a.node_sizes, a.folds)?;
    write_csv(&result.table(), &a.out)?;
    println!(
        "best: lambda={} min_node_size={}",
        result.best.0, result.best.1
    );
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    ensure!(a.reps >= 1, "at least one replication is required");
    ensure!(!a.p.is_empty(), "dimension list is empty");
    check_lambda(a.lambda)?;
    let configs =
        a.p.iter()
            .map(|&p| {
                let cfg = BenchmarkConfig {
                    scenario: scenario(a.scenario, p)?,
                    n: a.n,
                    m: a.m,
                    taus: a.tau.clone(),
                    forest: a.forest.params(),
                    lambda: a.lambda,
                    test_points: a.test_points,
                    truth: match a.truth {
                        TruthArg::BlockMax => TruthScale::BlockMax,
                        TruthArg::Response => TruthScale::Response,
                    },
                    baseline_data: match a.baseline_data {
                        BaselineArg::BlockMaxima => BaselineData::BlockMaxima,
                        BaselineArg::Raw => BaselineData::Raw,
                    },
                    seed: a.seed,
                };
                cfg.validate()?;
                Ok(cfg)
            })
            .collect::<Result<Vec<_>>>()?;

    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(benchmark_table(&[]).headers())?;
    writer.flush()?;
    for cfg in &configs {
        for rep in 0..a.reps {
            let rows = run_replication(cfg, rep)?;
            append_csv_rows(&mut writer, &benchmark_table(&rows))?;
        }
    }
    Ok(())
}

fn gof(a: GofArgs) -> Result<()> {
    check_lambda(a.lambda)?;
    ensure!(
        a.holdout > 0.0 && a.holdout < 1.0,
        "holdout fraction must lie in (0, 1), got {}",
        a.holdout
    );
    let fp = a.forest.params();
    let ds = a.data.load()?;
    fp.validate(ds.p())?;
    let (train, heldout) = ds.split_holdout(a.holdout)?;
    check_blocks(train.n(), a.m, fp.min_node_size)?;
    ensure!(
        heldout.n() >= a.m,
        "held-out part has {} rows, fewer than one block of {}",
        heldout.n(),
        a.m
    );
    let model = gev_erf_fit(&train, a.m, &fp, a.lambda)?;
    let u = pit(&model, &make_blocks(&heldout, a.m)?)?;
    let report = gof_tests(&u)?;
    write_csv(&gof_table(&report), &a.out)?;
    if let Some(path) = &a.pit_out {
        write_csv(&Table::new().real("u", u), path)?;
    }
    println!(
        "n: {}  ks: {:.6}  ad: {:.6}  cvm: {:.6}",
        report.n, report.ks_stat, report.ad_stat, report.cvm_stat
    );
    Ok(())
}

fn block_sweep(a: BlockSweepArgs) -> Result<()> {
    if a.m_grid.is_empty() {
        bail!("block-size grid is empty");
    }
    ensure!(a.reps >= 1, "at least one replicate is required");
    ensure!(!a.tau.is_empty(), "at least one quantile level is required");
    for &t in &a.tau {
        ensure!(
            t > TAU0 && t < 1.0,
            "quantile level {t} is not in ({TAU0}, 1)"
        );
    }
    ensure!(
        a.holdout > 0.0 && a.holdout < 1.0,
        "holdout fraction must lie in (0, 1), got {}",
        a.holdout
    );
    check_lambda(a.lambda)?;
    let spec = scenario(a.scenario, a.p)?;
    let fp = a.forest.params();
    fp.validate(a.p)?;
    let n_held = ((a.n as f64 * a.holdout).floor() as usize).max(1);
    ensure!(
        n_held < a.n,
        "sample of {} rows is too small to hold out rows",
        a.n
    );
    let n_train = a.n - n_held;
    for &m in &a.m_grid {
        check_blocks(n_train, m, fp.min_node_size)?;
        ensure!(
            n_held >= m,
            "held-out part has {n_held} rows, fewer than one block of {m}"
        );
    }
    let replicates = (0..a.reps)
        .map(|r| {
            let seed = geverf::benchmark::derive_seed(a.seed, r as u64);
            let (train, heldout) = sample_scenario(&spec, a.n, seed)?.split_holdout(a.holdout)?;
            Ok(SweepReplicate { train, heldout })
        })
        .collect::<Result<Vec<_>>>()?;
    let settings = SweepSettings {
        m_grid: a.m_grid.clone(),
        forest: fp,
        lambda: a.lambda,
        test_points: halton_points(a.test_points, a.p, 0)?,
        tau_levels: a.tau.clone(),
    };
    let rows = block_size_sweep(&replicates, &settings, |x, tau, m| {
        true_block_max_quantile(&spec, x, tau, m)
    })?;
    write_out(&sweep_table(&rows), &a.out)
}

fn write_out(table: &Table, path: &Path) -> Result<()> {
    write_csv(table, path).with_context(|| format!("writing {}", path.display()))
}
