use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn geverf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geverf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulated(dir: &Path) -> PathBuf {
    ok(&geverf(
        &[
            "simulate",
            "--scenario",
            "1",
            "--p",
            "3",
            "--n",
            "2000",
            "--seed",
            "7",
            "--out",
            "d.csv",
        ],
        dir,
    ));
    dir.join("d.csv")
}

#[test]
fn simulate_is_byte_deterministic_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(simulated(dir.path())).unwrap();
    let b = std::fs::read(simulated(dir.path())).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 2001);
    assert!(text.starts_with("x1,x2,x3,y\n"));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["n"], 2000);
    assert_eq!(meta["scenario"], 1);
    assert_eq!(meta["p"], 3);
}

#[test]
fn simulate_rejects_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = geverf(
        &["simulate", "--n", "0", "--p", "3", "--out", "d.csv"],
        dir.path(),
    );
    assert!(!out.status.success());
}

#[test]
fn fit_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let fit = geverf(
        &[
            "fit",
            "--data",
            "d.csv",
            "--m",
            "10",
            "--num-trees",
            "50",
            "--out",
            "model.json",
        ],
        dir.path(),
    );
    ok(&fit);
    let summary = String::from_utf8_lossy(&fit.stdout);
    assert!(summary.contains("blocks: 200"), "{summary}");
    assert!(summary.contains("lambda: 0.001"), "{summary}");

    std::fs::write(
        dir.path().join("q.csv"),
        "x1,x2,x3\n0.5,0,0\n-0.5,0,0\n0.5,0,0\n",
    )
    .unwrap();
    ok(&geverf(
        &[
            "predict",
            "--model",
            "model.json",
            "--query",
            "q.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    ));
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "x1,x2,x3,mu,sigma,xi,q_0.99,q_0.995,q_0.999,q_0.9995"
    );
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[1], lines[3]);
    let q: Vec<f64> = lines[1]
        .split(',')
        .skip(6)
        .map(|c| c.parse().unwrap())
        .collect();
    assert!(q.windows(2).all(|w| w[0] <= w[1]));

    std::fs::write(dir.path().join("empty.csv"), "x1,x2,x3\n").unwrap();
    ok(&geverf(
        &[
            "predict",
            "--model",
            "model.json",
            "--query",
            "empty.csv",
            "--tau",
            "0.99",
            "--out",
            "e.csv",
        ],
        dir.path(),
    ));
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text, "x1,x2,x3,mu,sigma,xi,q_0.99\n");

    let low = geverf(
        &[
            "predict",
            "--model",
            "model.json",
            "--query",
            "q.csv",
            "--tau",
            "0.5",
            "--out",
            "x.csv",
        ],
        dir.path(),
    );
    assert!(!low.status.success());
    assert!(String::from_utf8_lossy(&low.stderr).contains("intermediate order"));
}

#[test]
fn corrupted_model_tag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    ok(&geverf(
        &[
            "fit",
            "--data",
            "d.csv",
            "--m",
            "10",
            "--num-trees",
            "5",
            "--out",
            "model.json",
        ],
        dir.path(),
    ));
    let path = dir.path().join("model.json");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(
        &path,
        text.replacen("geverf-model/v1", "geverf-model/v0", 1),
    )
    .unwrap();
    std::fs::write(dir.path().join("q.csv"), "x1,x2,x3\n0,0,0\n").unwrap();
    let out = geverf(
        &[
            "predict",
            "--model",
            "model.json",
            "--query",
            "q.csv",
            "--out",
            "p.csv",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("format"));
}

#[test]
fn fit_names_missing_response_column() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let out = geverf(
        &[
            "fit",
            "--data",
            "d.csv",
            "--response",
            "rain",
            "--features",
            "x1,x2",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rain"));
}

#[test]
fn cv_with_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    std::fs::write(
        dir.path().join("run.toml"),
        "[cv]\nm = 10\nlambdas = [0.5, 0.7]\nnode_sizes = [5]\nnum_trees = 20\nfolds = 3\n",
    )
    .unwrap();
    let out = geverf(
        &[
            "cv",
            "--config",
            "run.toml",
            "--data",
            "d.csv",
            "--lambdas",
            "0.001",
            "--out",
            "cv.csv",
        ],
        dir.path(),
    );
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("best: lambda=0.001 min_node_size=5"));
    let text = std::fs::read_to_string(dir.path().join("cv.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);

    let one_fold = geverf(
        &[
            "cv", "--config", "run.toml", "--data", "d.csv", "--folds", "1", "--out", "cv.csv",
        ],
        dir.path(),
    );
    assert!(!one_fold.status.success());
}

#[test]
fn benchmark_row_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "benchmark",
        "--p",
        "3",
        "--n",
        "2000",
        "--m",
        "10",
        "--reps",
        "2",
        "--tau",
        "0.999",
        "--num-trees",
        "20",
        "--test-points",
        "30",
        "--out",
        "b.csv",
    ];
    ok(&geverf(&args, dir.path()));
    let first = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(
        lines[0],
        "replication,scenario,p,model,tau,log_ise,mae,medae"
    );
    assert_eq!(lines.len(), 7);
    let models: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(models, ["gev", "grf", "qrf", "gev", "grf", "qrf"]);
    ok(&geverf(&args, dir.path()));
    assert_eq!(
        first,
        std::fs::read_to_string(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn gof_and_block_sweep() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    ok(&geverf(
        &[
            "gof",
            "--data",
            "d.csv",
            "--m",
            "10",
            "--num-trees",
            "20",
            "--out",
            "g.csv",
            "--pit-out",
            "u.csv",
        ],
        dir.path(),
    ));
    let text = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(text.starts_with("n,ks,ad,cvm\n60,"), "{text}");
    let u = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert_eq!(u.lines().count(), 61);

    ok(&geverf(
        &[
            "block-sweep",
            "--p",
            "3",
            "--n",
            "3000",
            "--m-grid",
            "10,20",
            "--tau",
            "0.99",
            "--reps",
            "1",
            "--num-trees",
            "20",
            "--test-points",
            "20",
            "--out",
            "s.csv",
        ],
        dir.path(),
    ));
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,tau,n_blocks,log_mise,ks,ad,cvm,gof_n");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("10,0.99,210,"));

    let empty = geverf(
        &["block-sweep", "--m-grid", "", "--out", "s.csv"],
        dir.path(),
    );
    assert!(!empty.status.success());
}
