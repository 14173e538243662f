use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sha2::{Digest, Sha256};

use mlrtg::io::{load_basis, load_tensor, save_basis, save_matrix_dtf1, save_tensor};
use mlrtg::linalg::leading_left_singular_vectors;
use mlrtg::synth::generate;
use mlrtg::{
    add_gaussian_noise, add_sparse_noise, alignment_diag, eigen_gap, energy_concentration, expand_core, gctp,
    gmlsvd, graph_basis, gsc, matricize, mlsvd, mode_weights, project_gct, recon_error, singular_value_error,
    stationarity_ratio, subspace_angle, trpcag, DenseTensor, GraphBasis, SolverOptions, SolverReport, SynthMethod,
    SynthSpec,
};

use crate::config::{Config, List};
use crate::error::{AtPath, CliError};
use crate::{Algorithm, BasisArgs, DiagnoseArgs, EvalArgs, SolveArgs, SolverFlags, SweepArgs, SweepParam, SynthArgs};

const DEFAULT_K_NN: usize = 10;
const DEFAULT_CORE: usize = 30;
const DEFAULT_K_STAR: usize = 10;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_hash(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| CliError::io(path, e))?))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_tensor(path: &Path) -> Result<DenseTensor, CliError> {
    load_tensor(path).at(path)
}

fn write_tensor(path: &Path, t: &DenseTensor) -> Result<(), CliError> {
    save_tensor(path, t).at(path)
}

/// Records the resolved configuration, the library version and hashes of
/// inputs and outputs. Inputs are keyed by file name so the manifest does
/// not depend on where the files live.
fn write_manifest(
    path: &Path,
    command: &str,
    cfg: &Config,
    inputs: &[&Path],
    outputs: &[PathBuf],
) -> Result<(), CliError> {
    let hashes = |files: Vec<&Path>| -> Result<BTreeMap<String, String>, CliError> {
        files
            .into_iter()
            .map(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((name, file_hash(p)?))
            })
            .collect()
    };
    let manifest = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.resolved(),
        "inputs": hashes(inputs.to_vec())?,
        "outputs": hashes(outputs.iter().map(PathBuf::as_path).collect())?,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
    write_text(path, &(text + "\n"))
}

fn vector_path(dir: &Path, mode: usize) -> PathBuf {
    dir.join(format!("mode{}_vectors.dtf", mode + 1))
}

fn values_path(dir: &Path, mode: usize) -> PathBuf {
    dir.join(format!("mode{}_values.csv", mode + 1))
}

fn load_bases(dir: &Path, order: usize) -> Result<Vec<GraphBasis>, CliError> {
    (0..order)
        .map(|m| {
            let v = vector_path(dir, m);
            load_basis(&v, values_path(dir, m)).at(&v)
        })
        .collect()
}

// ---------------------------------------------------------------- synth

pub fn synth(a: &SynthArgs, cfg: &Config) -> Result<(), CliError> {
    let shape = cfg
        .pick_list(a.shape.clone(), "shape")?
        .ok_or_else(|| CliError::Usage("--shape is required".into()))?
        .sizes("shape")?;
    if shape.len() < 2 {
        return Err(CliError::Usage("--shape needs at least two dimensions".into()));
    }
    let ranks = cfg.pick(a.rank.clone(), "rank", List(vec![DEFAULT_K_STAR as f64]))?.per_mode(shape.len(), "rank")?;
    let seed = cfg.pick(a.seed, "seed", 0u64)?;
    let method = match cfg.pick(a.method, "method", 1u8)? {
        1 => SynthMethod::DirectBasis,
        2 => SynthMethod::LaplacianFilter,
        m => return Err(CliError::Usage(format!("--method must be 1 or 2, got {m}"))),
    };
    let spec = SynthSpec { k_nn: cfg.pick(a.k_nn, "k_nn", DEFAULT_K_NN)?, method, ..SynthSpec::new(shape, ranks, seed) };
    let clean = generate(&spec)?.y_star;
    let mut observed = clean.clone();
    if let Some(snr) = cfg.pick_opt(a.snr, "snr")? {
        observed = add_gaussian_noise(&observed, snr, seed)?;
    }
    if let Some(fraction) = cfg.pick_opt(a.sparse_fraction, "sparse_fraction")? {
        let std = cfg.pick(a.sparse_std, "sparse_std", 1.0)?;
        observed = add_sparse_noise(&observed, fraction, std, seed)?;
    }

    create_dir(&a.out)?;
    let outputs = [a.out.join("clean.dtf"), a.out.join("observed.dtf")];
    write_tensor(&outputs[0], &clean)?;
    write_tensor(&outputs[1], &observed)?;
    write_manifest(&a.out.join("manifest.json"), "synth", cfg, &[], &outputs)?;
    info!("wrote {:?} tensors to {}", clean.shape(), a.out.display());
    Ok(())
}

// ---------------------------------------------------------------- basis

fn cache_dir(out: &Path) -> PathBuf {
    std::env::var_os("MLRTG_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| out.join(".cache"))
}

pub fn basis(a: &BasisArgs, cfg: &Config) -> Result<(), CliError> {
    let y = read_tensor(&a.tensor)?;
    let order = y.order();
    let ks = cfg.pick(a.k.clone(), "k", List(vec![DEFAULT_CORE as f64]))?.per_mode(order, "k")?;
    let k_nn = cfg.pick(a.k_nn, "k_nn", DEFAULT_K_NN)?;
    let sigma = cfg.pick_opt(a.sigma, "sigma")?;
    let k_star = cfg.pick_opt(a.k_star, "k_star")?;

    create_dir(&a.out)?;
    let cache = cache_dir(&a.out);
    create_dir(&cache)?;
    let tensor_hash = file_hash(&a.tensor)?;

    let mut report = String::from("mode,n,k,k_nn,lambda_min,lambda_max,k_star,eigen_gap\n");
    let mut outputs = Vec::new();
    for (mode, &k) in ks.iter().enumerate() {
        let key = sha256_hex(format!("{tensor_hash}:{mode}:{k}:{k_nn}:{sigma:?}").as_bytes());
        let (cv, cl) = (cache.join(format!("{key}_vectors.dtf")), cache.join(format!("{key}_values.csv")));
        let b = if cv.exists() && cl.exists() {
            info!("mode {}: cache hit {}", mode + 1, &key[..16]);
            load_basis(&cv, &cl).at(&cv)?
        } else {
            info!("mode {}: cache miss, computing {k} eigenpairs", mode + 1);
            let b = graph_basis(&matricize(&y, mode)?.matrix, k, k_nn, sigma)?;
            save_basis(&cv, &cl, &b).at(&cv)?;
            b
        };
        let (v, l) = (vector_path(&a.out, mode), values_path(&a.out, mode));
        save_basis(&v, &l, &b).at(&v)?;
        outputs.extend([v, l]);

        let gap = match k_star {
            Some(ks) => eigen_gap(&b, ks)?.to_string(),
            None => String::new(),
        };
        let lo = b.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = b.eigenvalues.last().copied().unwrap_or(0.0);
        let ks = k_star.map(|v| v.to_string()).unwrap_or_default();
        writeln!(report, "{},{},{},{k_nn},{lo},{hi},{ks},{gap}", mode + 1, b.n(), b.k()).unwrap();
    }
    let report_path = a.out.join("basis.csv");
    write_text(&report_path, &report)?;
    outputs.push(report_path);
    write_manifest(&a.out.join("manifest.json"), "basis", cfg, &[&a.tensor], &outputs)
}

// ---------------------------------------------------------------- solve

struct SolverSettings {
    gamma: f64,
    alpha: f64,
    opts: SolverOptions,
}

fn solver_settings(f: &SolverFlags, cfg: &Config) -> Result<SolverSettings, CliError> {
    let opts = SolverOptions {
        max_iters: cfg.pick(f.max_iters, "max_iters", SolverOptions::default().max_iters)?,
        tol: cfg.pick(f.tol, "tol", SolverOptions::default().tol)?,
        step: cfg.pick_opt(f.step, "step")?,
        ..SolverOptions::default()
    };
    opts.validate()?;
    Ok(SolverSettings { gamma: cfg.pick(f.gamma, "gamma", 1.0)?, alpha: cfg.pick(f.alpha, "alpha", 1.0)?, opts })
}

/// Truncates each basis to the requested core size, capped at its width.
fn truncate_bases(bases: Vec<GraphBasis>, core: Option<&List>) -> Result<Vec<GraphBasis>, CliError> {
    let sizes = match core {
        Some(c) => c.per_mode(bases.len(), "core")?,
        None => vec![DEFAULT_CORE; bases.len()],
    };
    bases
        .into_iter()
        .zip(sizes)
        .enumerate()
        .map(|(mode, (b, k))| {
            if k > b.k() {
                if core.is_some() {
                    warn!("mode {}: core {k} exceeds the {} stored eigenpairs", mode + 1, b.k());
                }
                Ok(b)
            } else {
                Ok(b.truncate(k)?)
            }
        })
        .collect()
}

struct Solution {
    recovered: DenseTensor,
    core: DenseTensor,
    factors: Vec<nalgebra::DMatrix<f64>>,
    sparse: Option<DenseTensor>,
    report: SolverReport,
}

fn run_solver(
    alg: Algorithm,
    y: &DenseTensor,
    bases: &[GraphBasis],
    ranks: &[usize],
    s: &SolverSettings,
) -> Result<Solution, CliError> {
    if alg == Algorithm::Mlsvd {
        let (f, report) = mlsvd(y, ranks)?;
        return Ok(Solution { recovered: f.reconstruct()?, core: f.core, factors: f.factors, sparse: None, report });
    }
    let weights = mode_weights(bases, s.alpha, s.gamma)?;
    Ok(match alg {
        Algorithm::Gctp => {
            let x_hat = project_gct(y, bases)?.core;
            let (x, report) = gctp(&x_hat, &weights, &s.opts)?;
            Solution { recovered: expand_core(&x, bases)?, core: x, factors: Vec::new(), sparse: None, report }
        }
        Algorithm::Gmlsvd => {
            let (f, report) = gmlsvd(y, bases, &weights, &s.opts)?;
            Solution { recovered: f.reconstruct()?, core: f.core, factors: f.factors, sparse: None, report }
        }
        Algorithm::Trpcag => {
            let out = trpcag(y, bases, &weights, &s.opts)?;
            Solution { recovered: out.lowrank, core: out.core, factors: Vec::new(), sparse: Some(out.sparse), report: out.report }
        }
        Algorithm::Mlsvd => unreachable!(),
    })
}

fn trace_csv(report: &SolverReport) -> String {
    let mut s = String::from("iteration,objective\n");
    for (i, v) in report.objective_trace.iter().enumerate() {
        writeln!(s, "{i},{v}").unwrap();
    }
    s
}

pub fn solve(a: &SolveArgs, cfg: &Config) -> Result<(), CliError> {
    let y = read_tensor(&a.tensor)?;
    let settings = solver_settings(&a.solver, cfg)?;
    let core = cfg.pick_list(a.solver.core.clone(), "core")?;
    cfg.record("algorithm", a.algorithm.name());
    let (bases, ranks) = if a.algorithm == Algorithm::Mlsvd {
        let ranks = match cfg.pick_list(a.ranks.clone(), "ranks")? {
            Some(r) => r.per_mode(y.order(), "ranks")?,
            None => y.shape().iter().map(|&n| n.min(DEFAULT_CORE)).collect(),
        };
        (Vec::new(), ranks)
    } else {
        let dir = a.bases.as_ref().ok_or_else(|| CliError::Usage(format!("{} needs --bases", a.algorithm.name())))?;
        (truncate_bases(load_bases(dir, y.order())?, core.as_ref())?, Vec::new())
    };
    let sol = run_solver(a.algorithm, &y, &bases, &ranks, &settings)?;
    if !sol.report.converged {
        warn!("{} stopped after {} iterations without converging", a.algorithm.name(), sol.report.iterations);
    }

    create_dir(&a.out)?;
    let mut outputs = vec![a.out.join("recovered.dtf"), a.out.join("core.dtf")];
    write_tensor(&outputs[0], &sol.recovered)?;
    write_tensor(&outputs[1], &sol.core)?;
    if let Some(s) = &sol.sparse {
        let p = a.out.join("sparse.dtf");
        write_tensor(&p, s)?;
        outputs.push(p);
    }
    for (m, f) in sol.factors.iter().enumerate() {
        let p = a.out.join(format!("mode{}_factor.dtf", m + 1));
        save_matrix_dtf1(&p, f).at(&p)?;
        outputs.push(p);
    }
    let r = &sol.report;
    let trace = a.out.join("trace.csv");
    write_text(&trace, &trace_csv(r))?;
    let report = a.out.join("report.csv");
    write_text(
        &report,
        &format!(
            "algorithm,iterations,converged,final_objective,tolerance\n{},{},{},{},{}\n",
            a.algorithm.name(),
            r.iterations,
            r.converged,
            r.final_objective().unwrap_or(f64::NAN),
            r.tolerance_used
        ),
    )?;
    outputs.extend([trace, report]);
    // wall-clock numbers stay out of the manifest
    let timing = a.out.join("timing.csv");
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    fs::write(&timing, buf).map_err(|e| CliError::io(&timing, e))?;

    let mut inputs: Vec<PathBuf> = vec![a.tensor.clone()];
    if let Some(dir) = &a.bases {
        for m in 0..y.order() {
            inputs.extend([vector_path(dir, m), values_path(dir, m)]);
        }
    }
    let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    write_manifest(&a.out.join("manifest.json"), "solve", cfg, &inputs, &outputs)?;
    info!("{}: {} iterations, converged = {}, {:.3} s", a.algorithm.name(), r.iterations, r.converged, r.wall_time.as_secs_f64());
    Ok(())
}

// ---------------------------------------------------------------- metrics

struct Scores {
    recon: f64,
    sv: Vec<f64>,
    alignment: Vec<f64>,
    angle: Vec<f64>,
}

fn scores(estimate: &DenseTensor, reference: &DenseTensor, k_star: usize) -> Result<Scores, CliError> {
    if estimate.shape() != reference.shape() {
        return Err(CliError::Usage(format!(
            "estimate {:?} and reference {:?} differ in shape",
            estimate.shape(),
            reference.shape()
        )));
    }
    let mut s = Scores { recon: recon_error(estimate, reference)?, sv: Vec::new(), alignment: Vec::new(), angle: Vec::new() };
    for mode in 0..estimate.order() {
        s.sv.push(singular_value_error(estimate, reference, mode, k_star)?);
        let v = leading_left_singular_vectors(&matricize(estimate, mode)?.matrix, k_star)?;
        let u = leading_left_singular_vectors(&matricize(reference, mode)?.matrix, k_star)?;
        s.alignment.push(alignment_diag(&v, &u, k_star)?.mean());
        s.angle.push(subspace_angle(&v, &u, k_star)?);
    }
    Ok(s)
}

fn default_k_star(shape: &[usize]) -> usize {
    DEFAULT_K_STAR.min(shape.iter().copied().min().unwrap_or(1))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn eval(a: &EvalArgs, cfg: &Config) -> Result<(), CliError> {
    let estimate = read_tensor(&a.estimate)?;
    let reference = read_tensor(&a.reference)?;
    let k_star = cfg.pick(a.k_star, "k_star", default_k_star(reference.shape()))?;
    let s = scores(&estimate, &reference, k_star)?;
    let mut text = String::from("metric,mode,value\n");
    writeln!(text, "recon_error,,{}", s.recon).unwrap();
    for m in 0..estimate.order() {
        writeln!(text, "sv_error,{},{}", m + 1, s.sv[m]).unwrap();
        writeln!(text, "alignment,{},{}", m + 1, s.alignment[m]).unwrap();
        writeln!(text, "subspace_angle,{},{}", m + 1, s.angle[m]).unwrap();
    }
    emit(a.out.as_deref(), &text)?;
    if let Some(out) = &a.out {
        write_manifest(&sidecar(out), "eval", cfg, &[&a.estimate, &a.reference], &[out.clone()])?;
    }
    Ok(())
}

// ---------------------------------------------------------------- sweep

pub fn sweep(a: &SweepArgs, cfg: &Config) -> Result<(), CliError> {
    if a.grid.0.is_empty() {
        return Err(CliError::Usage("--grid is empty".into()));
    }
    let param = match a.param {
        SweepParam::Gamma => "gamma",
        SweepParam::K => "k",
        SweepParam::Alpha => "alpha",
        SweepParam::Knn => "k_nn",
    };
    if matches!(a.param, SweepParam::K | SweepParam::Knn) {
        a.grid.sizes(param)?;
    }
    cfg.record("param", param);
    cfg.record("grid", &a.grid);
    cfg.record("algorithm", a.algorithm.name());
    let y = read_tensor(&a.tensor)?;
    let reference = read_tensor(&a.reference)?;
    let base = solver_settings(&a.solver, cfg)?;
    let core = cfg.pick_list(a.solver.core.clone(), "core")?;
    let k0 = cfg.pick(a.k, "k", DEFAULT_CORE)?;
    let knn0 = cfg.pick(a.k_nn, "k_nn", DEFAULT_K_NN)?;
    let k_star = cfg.pick(a.k_star, "k_star", default_k_star(reference.shape()))?;

    let mut graphs: BTreeMap<(usize, usize), Vec<GraphBasis>> = BTreeMap::new();
    let mut text =
        String::from("param,value,algorithm,k,k_nn,gamma,alpha,recon_error,sv_error,alignment,iterations,converged\n");
    for &value in &a.grid.0 {
        let (mut k, mut k_nn) = (k0, knn0);
        let mut s = SolverSettings { opts: base.opts.clone(), ..base };
        match a.param {
            SweepParam::Gamma => s.gamma = value,
            SweepParam::Alpha => s.alpha = value,
            SweepParam::K => k = value as usize,
            SweepParam::Knn => k_nn = value as usize,
        }
        let ranks = vec![k; y.order()];
        let bases = if a.algorithm == Algorithm::Mlsvd {
            Vec::new()
        } else {
            if !graphs.contains_key(&(k, k_nn)) {
                let b = mlrtg::tensor_mode_bases(&y, &ranks, k_nn, None)?;
                graphs.insert((k, k_nn), b);
            }
            truncate_bases(graphs[&(k, k_nn)].clone(), core.as_ref())?
        };
        let sol = run_solver(a.algorithm, &y, &bases, &ranks, &s)?;
        let sc = scores(&sol.recovered, &reference, k_star)?;
        writeln!(
            text,
            "{param},{value},{},{k},{k_nn},{},{},{},{},{},{},{}",
            a.algorithm.name(),
            s.gamma,
            s.alpha,
            sc.recon,
            sc.sv[0],
            sc.alignment[0],
            sol.report.iterations,
            sol.report.converged
        )
        .unwrap();
        info!("{param} = {value}: recon error {:.4}", sc.recon);
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_text(&a.out, &text)?;
    write_manifest(&sidecar(&a.out), "sweep", cfg, &[&a.tensor, &a.reference], &[a.out.clone()])
}

// ---------------------------------------------------------------- diagnose

pub fn diagnose(a: &DiagnoseArgs, cfg: &Config) -> Result<(), CliError> {
    let y = read_tensor(&a.tensor)?;
    let bases = load_bases(&a.bases, y.order())?;
    let widest = bases.iter().map(GraphBasis::k).max().unwrap_or(0);
    let default_grid = List([1.0, 2.0, 5.0, 10.0, 20.0, 30.0].into_iter().filter(|&k| k as usize <= widest).collect());
    let grid = cfg.pick(a.k_grid.clone(), "k_grid", default_grid)?.sizes("k_grid")?;
    if grid.is_empty() {
        return Err(CliError::Usage("--k-grid is empty".into()));
    }
    let mut text = String::from("mode,stationarity");
    for k in &grid {
        write!(text, ",c{k}").unwrap();
    }
    text.push('\n');
    for (mode, b) in bases.iter().enumerate() {
        let g = gsc(&matricize(&y, mode)?, b)?;
        write!(text, "{},{}", mode + 1, stationarity_ratio(&g)?).unwrap();
        for &k in &grid {
            // blocks wider than this mode's basis are left empty
            if k <= b.k() {
                write!(text, ",{}", energy_concentration(&g, k)?).unwrap();
            } else {
                text.push(',');
            }
        }
        text.push('\n');
    }
    emit(a.out.as_deref(), &text)?;
    if let Some(out) = &a.out {
        let mut inputs = vec![a.tensor.clone()];
        for m in 0..y.order() {
            inputs.extend([vector_path(&a.bases, m), values_path(&a.bases, m)]);
        }
        let inputs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
        write_manifest(&sidecar(out), "diagnose", cfg, &inputs, &[out.clone()])?;
    }
    Ok(())
}
