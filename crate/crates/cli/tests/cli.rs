use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mlrtg::io::{load_tensor, save_basis, save_tensor};
use mlrtg::synth::generating_bases;
use mlrtg::{combinatorial_laplacian, knn_graph, matricize, project_gct, SynthSpec};

fn mlrtg(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlrtg"))
        .args(args)
        .env("MLRTG_CACHE_DIR", cache)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        mlrtg(args, &self.path("cache"))
    }

    /// 60x50 rank-5 matrix at 5 dB plus a 20-eigenpair basis directory.
    fn prepared(&self) -> (PathBuf, PathBuf) {
        let d = self.path("data");
        let b = self.path("bases");
        ok(self.run(&["synth", "--shape", "60,50", "--rank", "5", "--seed", "3", "--snr", "5", "--out", s(&d)]));
        ok(self.run(&["basis", "--tensor", s(&d.join("observed.dtf")), "--k", "20", "--k-star", "5", "--out", s(&b)]));
        (d, b)
    }
}

#[test]
fn synth_is_deterministic() {
    let w = Work::new();
    for out in ["a", "b"] {
        ok(w.run(&["synth", "--shape", "100,100", "--rank", "10", "--seed", "7", "--out", s(&w.path(out))]));
    }
    for f in ["clean.dtf", "observed.dtf", "manifest.json"] {
        let a = std::fs::read(w.path("a").join(f)).unwrap();
        let b = std::fs::read(w.path("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn synth_method_two_respects_the_rank() {
    let w = Work::new();
    let out = w.path("m2");
    ok(w.run(&["synth", "--method", "2", "--shape", "100,100", "--rank", "10", "--out", s(&out)]));
    let t = load_tensor(out.join("clean.dtf")).unwrap();
    for mode in 0..2 {
        let sv = matricize(&t, mode).unwrap().matrix.singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[10] <= 1e-10 * sv[0], "mode {mode}: {}", sv[10] / sv[0]);
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let w = Work::new();
    assert_eq!(w.run(&["synth", "--rank", "3"]).status.code(), Some(2));
    assert_eq!(w.run(&["synth", "--shape", "10,10", "--gamma", "abc"]).status.code(), Some(2));
    assert_eq!(w.run(&["solve", "simplex", "--tensor", "x.dtf"]).status.code(), Some(2));
}

#[test]
fn missing_input_exits_with_three_and_names_the_file() {
    let w = Work::new();
    let missing = w.path("nope.dtf");
    let out = w.run(&["eval", "--estimate", s(&missing), "--reference", s(&missing)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.dtf"));
}

#[test]
fn basis_cache_and_report() {
    let w = Work::new();
    let (d, b) = w.prepared();
    let again = ok(w.run(&["basis", "--tensor", s(&d.join("observed.dtf")), "--k", "20", "--k-star", "5", "--out", s(&b)]));
    let log = String::from_utf8_lossy(&again.stderr);
    assert_eq!(log.matches("cache hit").count(), 2, "{log}");

    // eigenvalues ascending, eigen gap against a dense eigensolve of the same graph
    let y = load_tensor(d.join("observed.dtf")).unwrap();
    let rows = read_csv(&b.join("basis.csv"));
    assert_eq!(rows[0].last().unwrap(), "eigen_gap");
    for mode in 0..2 {
        let values: Vec<f64> = read_csv(&b.join(format!("mode{}_values.csv", mode + 1)))
            .iter()
            .map(|r| r[0].parse().unwrap())
            .collect();
        assert!(values.windows(2).all(|p| p[0] <= p[1]));
        let l = combinatorial_laplacian(&knn_graph(&matricize(&y, mode).unwrap().matrix, 10, None).unwrap());
        let mut ev: Vec<f64> = l.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let gap: f64 = rows[mode + 1][7].parse().unwrap();
        assert!((gap - ev[4] / ev[5]).abs() <= 1e-8, "{gap} vs {}", ev[4] / ev[5]);
    }
}

#[test]
fn basis_larger_than_the_mode_is_a_numeric_error() {
    let w = Work::new();
    let (d, _) = w.prepared();
    let out = w.run(&["basis", "--tensor", s(&d.join("observed.dtf")), "--k", "70", "--out", s(&w.path("b2"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn gctp_with_zero_gamma_returns_the_projected_core() {
    let w = Work::new();
    let (d, b) = w.prepared();
    let out = w.path("solve");
    ok(w.run(&["solve", "gctp", "--tensor", s(&d.join("observed.dtf")), "--bases", s(&b), "--gamma", "0", "--out", s(&out)]));
    let y = load_tensor(d.join("observed.dtf")).unwrap();
    let bases: Vec<_> = (1..=2)
        .map(|m| {
            mlrtg::io::load_basis(b.join(format!("mode{m}_vectors.dtf")), b.join(format!("mode{m}_values.csv"))).unwrap()
        })
        .collect();
    let expected = project_gct(&y, &bases).unwrap().core;
    let core = load_tensor(out.join("core.dtf")).unwrap();
    assert_eq!(core.data(), expected.data());
}

#[test]
fn solve_writes_a_trace_with_a_monotone_tail() {
    let w = Work::new();
    let (d, b) = w.prepared();
    let out = w.path("solve");
    ok(w.run(&["solve", "gctp", "--tensor", s(&d.join("observed.dtf")), "--bases", s(&b), "--gamma", "1", "--out", s(&out)]));
    let trace: Vec<f64> = read_csv(&out.join("trace.csv"))[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(trace.len() > 6);
    for p in trace[5..].windows(2) {
        assert!(p[1] <= p[0] + 1e-9, "{} -> {}", p[0], p[1]);
    }
    let report = read_csv(&out.join("report.csv"));
    assert_eq!(report[1][0], "gctp");
}

#[test]
fn non_convergence_is_a_soft_failure() {
    let w = Work::new();
    let (d, b) = w.prepared();
    let out = w.path("solve");
    let status = w.run(&[
        "solve", "trpcag", "--tensor", s(&d.join("observed.dtf")), "--bases", s(&b), "--max-iters", "3", "--out", s(&out),
    ]);
    assert_eq!(status.status.code(), Some(0));
    let report = read_csv(&out.join("report.csv"));
    assert_eq!(report[1][2], "false");
    // the sparse part is the residual of the low-rank part
    let y = load_tensor(d.join("observed.dtf")).unwrap();
    let lr = load_tensor(out.join("recovered.dtf")).unwrap();
    let sp = load_tensor(out.join("sparse.dtf")).unwrap();
    assert_eq!(sp.data(), y.sub(&lr).unwrap().data());
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let w = Work::new();
    let cfg = w.path("run.conf");
    std::fs::write(&cfg, "shape = 30,20\nrank = 4\nseed = 11\n").unwrap();
    ok(w.run(&["--config", s(&cfg), "synth", "--out", s(&w.path("a"))]));
    ok(w.run(&["--config", s(&cfg), "synth", "--seed", "12", "--out", s(&w.path("b"))]));
    let a = load_tensor(w.path("a").join("clean.dtf")).unwrap();
    let b = load_tensor(w.path("b").join("clean.dtf")).unwrap();
    assert_eq!(a.shape(), &[30, 20]);
    assert_ne!(a.data(), b.data());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(w.path("b").join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], "12");
    assert_eq!(manifest["config"]["shape"], "30,20");
}

#[test]
fn sweep_single_point_matches_solve_and_eval() {
    let w = Work::new();
    let (d, b) = w.prepared();
    let obs = d.join("observed.dtf");
    let clean = d.join("clean.dtf");
    let out = w.path("solve");
    ok(w.run(&["solve", "gmlsvd", "--tensor", s(&obs), "--bases", s(&b), "--gamma", "2", "--out", s(&out)]));
    let eval = w.path("eval.csv");
    ok(w.run(&["eval", "--estimate", s(&out.join("recovered.dtf")), "--reference", s(&clean), "--out", s(&eval)]));
    let sweep = w.path("sweep.csv");
    ok(w.run(&[
        "sweep", "gamma", "--grid", "2", "--tensor", s(&obs), "--reference", s(&clean), "--k", "20", "--out", s(&sweep),
    ]));
    let rows = read_csv(&sweep);
    assert_eq!(rows.len(), 2);
    let eval_rows = read_csv(&eval);
    assert_eq!(eval_rows[1][0], "recon_error");
    assert_eq!(rows[1][7], eval_rows[1][2]);
    assert!(w.path("sweep.csv.manifest.json").exists());
}

#[test]
fn sweep_rejects_an_empty_grid() {
    let w = Work::new();
    let (d, _) = w.prepared();
    let obs = d.join("observed.dtf");
    let out = w.run(&["sweep", "k", "--grid", "", "--tensor", s(&obs), "--reference", s(&obs), "--out", s(&w.path("x"))]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_bases(dir: &Path, bases: &[mlrtg::GraphBasis]) {
    std::fs::create_dir_all(dir).unwrap();
    for (m, b) in bases.iter().enumerate() {
        save_basis(dir.join(format!("mode{}_vectors.dtf", m + 1)), dir.join(format!("mode{}_values.csv", m + 1)), b)
            .unwrap();
    }
}

#[test]
fn diagnose_on_exact_low_rank_input() {
    let w = Work::new();
    let spec = SynthSpec::new(vec![40, 30], vec![4, 4], 5);
    let y = mlrtg::method1(&spec).unwrap().y_star;
    let t = w.path("y.dtf");
    save_tensor(&t, &y).unwrap();
    let b = w.path("bases");
    write_bases(&b, &generating_bases(&spec, &[30, 30]).unwrap());
    let out = w.path("diag.csv");
    ok(w.run(&["diagnose", "--tensor", s(&t), "--bases", s(&b), "--k-grid", "2,4,8", "--out", s(&out)]));
    let rows = read_csv(&out);
    assert_eq!(rows[0], ["mode", "stationarity", "c2", "c4", "c8"]);
    for r in &rows[1..] {
        assert_eq!(r.len(), 2 + 3);
        let c4: f64 = r[3].parse().unwrap();
        assert!((c4 - 1.0).abs() <= 1e-10, "{c4}");
    }
}

#[test]
fn diagnose_on_white_noise_follows_the_uniform_energy_trend() {
    // E||Γ_kk||² / E||Γ||² = k(m + k + 1) / (n(m + n + 1)) for n x m white noise
    // in any orthonormal basis; k²/n² when m ≪ n
    let w = Work::new();
    let (n, m) = (120, 8);
    let grid = [30usize, 60, 90];
    let b = w.path("bases");
    let noise = |seed: u64| mlrtg::synth::gaussian_tensor(vec![n, m], &mut mlrtg::synth::rng_for(seed, 9)).unwrap();
    // a graph built on the analysed draw would adapt to it, so use another one
    let g = w.path("graph.dtf");
    save_tensor(&g, &noise(1000)).unwrap();
    ok(w.run(&["basis", "--tensor", s(&g), "--k", &format!("{n},{m}"), "--k-nn", "5", "--out", s(&b)]));
    let mut means = [0.0; 3];
    let draws = 12;
    for seed in 0..draws {
        let t = w.path(&format!("noise{seed}.dtf"));
        save_tensor(&t, &noise(seed)).unwrap();
        let out = w.path(&format!("diag{seed}.csv"));
        ok(w.run(&["diagnose", "--tensor", s(&t), "--bases", s(&b), "--k-grid", "30,60,90", "--out", s(&out)]));
        let row = &read_csv(&out)[1];
        for (i, v) in row[2..].iter().enumerate() {
            means[i] += v.parse::<f64>().unwrap() / draws as f64;
        }
    }
    for (k, got) in grid.iter().zip(means) {
        let (k, n, m) = (*k as f64, n as f64, m as f64);
        let expected = k * (m + k + 1.0) / (n * (m + n + 1.0));
        assert!((got - expected).abs() <= 0.1 * expected, "k = {k}: {got} vs {expected}");
    }
}
