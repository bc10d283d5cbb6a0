//! The five subcommands. Each resolves its config, writes artifacts into
//! `<root>/<command>-<hash12>/`, and reports whether every check passed.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use driftlab_core::exec::{Exec, McEstimate};
use driftlab_core::function_space::{CompactGridFunction, GridFunction};
use driftlab_core::marginals::{call_surface_forward_pde, estimate_call_surface, CallSurface, PdeGrid};
use driftlab_core::measures::{mu_tilde, MuTilde};
use driftlab_core::process_models::io::{read_ensemble, write_ensemble, write_jumps_csv, write_nodes_csv};
use driftlab_core::process_models::{simulate_range, ModelSpec, Partition, PathEnsemble};
use driftlab_core::smooth::{Bump, Smooth};
use driftlab_core::stochastic_calculus::ito_drift_samples;
use driftlab_core::verifier::{render_svg, run_suite, ExperimentReport, Figure, Suite, SuiteParams, Verdict};

use crate::artifact::{run_dir, sha256_file, short, write_atomic, Envelope, Provenance};
use crate::config::{BoxSpec, RunConfig, SurfaceMethod};

pub struct RunContext {
    pub root: PathBuf,
    pub exec: Exec,
}

fn write_json<T: Serialize>(path: &Path, env: &Envelope<T>) -> Result<()> {
    write_atomic(path, env.to_json()?.as_bytes())
}

fn write_svg(dir: &Path, prefix: &str, hash: &str, fig: &Figure) -> Result<PathBuf> {
    let name = match fig {
        Figure::Lines { name, .. } | Figure::Heatmap { name, .. } => name,
    };
    let svg = render_svg(fig);
    let stamped = match svg.find('\n') {
        Some(i) => format!("{}\n<!-- config_hash: {hash} -->{}", &svg[..i], &svg[i..]),
        None => svg,
    };
    let path = dir.join(format!("{prefix}.{name}.{}.svg", short(hash)));
    write_atomic(&path, stamped.as_bytes())?;
    Ok(path)
}

fn provenance(command: &str, config: &RunConfig) -> Result<Provenance> {
    let input_sha256 = match &config.input {
        Some(p) => Some(sha256_file(&require_file(p)?)?),
        None => None,
    };
    Ok(Provenance { command: command.into(), config: config.clone(), input_sha256 })
}

fn require_file(p: &Path) -> Result<PathBuf> {
    if !p.is_file() {
        bail!("missing input artifact: expected an ensemble file at {}", p.display());
    }
    Ok(p.to_path_buf())
}

/// Simulate in chunks of `chunk` paths, or read the configured input.
fn ensemble(config: &RunConfig, model: Option<&ModelSpec>, exec: Exec) -> Result<PathEnsemble> {
    if let Some(p) = &config.input {
        let file = fs::File::open(require_file(p)?)?;
        let e = read_ensemble(BufReader::new(file)).with_context(|| format!("reading ensemble {}", p.display()))?;
        if let Some(m) = model {
            if e.model_tag != m.tag {
                bail!("model: ensemble {} was simulated from `{}`, config names `{}`", p.display(), e.model_tag, m.tag);
            }
        }
        return Ok(e);
    }
    let model = match model {
        Some(m) => m.clone(),
        None => config.model_spec()?,
    };
    let partition = Partition::uniform(config.horizon(), config.steps())?;
    let (n, chunk) = (config.paths(), config.chunk());
    let mut parts = Vec::with_capacity(n.div_ceil(chunk));
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        parts.push(simulate_range(&model, &partition, start..end, config.seed(), exec)?);
        start = end;
    }
    Ok(PathEnsemble::concat(parts)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub model: String,
    pub n_paths: usize,
    pub n_nodes: usize,
    pub total_jumps: usize,
    pub files: Vec<String>,
}

pub fn simulate(config: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let model = config.model_spec()?;
    let prov = provenance("simulate", config)?;
    let hash = prov.hash()?;
    let e = ensemble(config, Some(&model), ctx.exec)?;
    let dir = run_dir(&ctx.root, "simulate", &hash);
    let h = short(&hash);
    let bin = format!("ensemble.{h}.bin");
    let nodes = format!("nodes.{h}.csv");
    let jumps = format!("jumps.{h}.csv");
    let mut buf = Vec::new();
    write_ensemble(&e, &mut buf)?;
    write_atomic(&dir.join(&bin), &buf)?;
    let mut buf = Vec::new();
    write_nodes_csv(&e, &mut buf)?;
    write_atomic(&dir.join(&nodes), &buf)?;
    let mut buf = Vec::new();
    write_jumps_csv(&e, &mut buf)?;
    write_atomic(&dir.join(&jumps), &buf)?;
    let summary = SimulateSummary {
        model: model.tag.clone(),
        n_paths: e.n_paths(),
        n_nodes: e.n_nodes(),
        total_jumps: e.total_jumps(),
        files: vec![bin, nodes, jumps],
    };
    write_json(&dir.join("manifest.json"), &Envelope::new("simulate", &prov, summary)?)?;
    println!("simulated {} paths of `{}` into {}", e.n_paths(), model.tag, dir.display());
    Ok(true)
}

fn surface_times(config: &RunConfig) -> Vec<f64> {
    let n = config.surface_times();
    (0..=n).map(|i| config.horizon() * i as f64 / n as f64).collect()
}

fn build_surface(config: &RunConfig, method: SurfaceMethod, exec: Exec) -> Result<CallSurface> {
    let xs = config.strikes().nodes();
    let ts = surface_times(config);
    match method {
        SurfaceMethod::Closed => {
            let Some(o) = config.oracle() else {
                bail!("surface_method: `closed` needs bm, drifted_bm, jump_diffusion or bm_compound_poisson");
            };
            Ok(CallSurface::from_fn(ts, xs, |t, x| o.call(t, x), |t| o.mean(t), None)?)
        }
        SurfaceMethod::Mc => {
            let e = ensemble(config, None, exec)?;
            Ok(estimate_call_surface(&e, xs, ts, exec)?)
        }
        SurfaceMethod::Pde => {
            let model = config.model_spec()?;
            let s = config.strikes();
            let reach = 8.0 * config.horizon().sqrt();
            let (lo, hi) = (s.min.min(-reach), s.max.max(reach));
            let nx = ((hi - lo) * 40.0).ceil() as usize;
            let grid = PdeGrid::uniform(lo, hi, nx, config.horizon(), config.surface_times(), 1e-3);
            Ok(call_surface_forward_pde(&model, &grid)?)
        }
    }
}

pub fn surface(config: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let method = config.surface_method.unwrap_or(SurfaceMethod::Mc);
    let prov = provenance("surface", config)?;
    let hash = prov.hash()?;
    let c = build_surface(config, method, ctx.exec)?;
    let dir = run_dir(&ctx.root, "surface", &hash);
    let g = &c.grid;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "call"])?;
    for (i, t) in g.t_nodes().iter().enumerate() {
        for (j, x) in g.x_nodes().iter().enumerate() {
            w.write_record([t.to_string(), x.to_string(), g.at(i, j).to_string()])?;
        }
    }
    write_atomic(&dir.join(format!("surface.{}.csv", short(&hash))), &w.into_inner()?)?;
    let fig = Figure::Heatmap {
        name: "call_surface".into(),
        x: g.x_nodes().to_vec(),
        y: g.t_nodes().to_vec(),
        values: g.values().to_vec(),
    };
    write_svg(&dir, "surface", &hash, &fig)?;
    write_json(&dir.join("surface.json"), &Envelope::new("surface", &prov, &c)?)?;
    println!("call surface ({} × {} nodes) written to {}", g.n_t(), g.n_x(), dir.display());
    Ok(true)
}

/// Plateau in t (½ on the outer sixths, 1 inside) times a trapezoid in x
/// with ramps of one sixth of the width.
fn plateau(b: BoxSpec) -> Result<CompactGridFunction> {
    let (qt, qx) = ((b.t_b - b.t_a) / 6.0, (b.x_b - b.x_a) / 6.0);
    Ok(CompactGridFunction::tensor(
        vec![0.0, b.t_a, b.t_a + qt, b.t_b - qt, b.t_b],
        &[0.0, 0.5, 1.0, 0.5, 0.0],
        vec![b.x_a, b.x_a + qx, b.x_b - qx, b.x_b],
        &[0.0, 1.0, 1.0, 0.0],
    )?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MeasureSummary {
    /// `closed_form` or `monte_carlo`.
    pub call_surface: String,
    /// μ_f^X(θ) from the Itô drift of the smooth bump.
    pub ito_drift: McEstimate,
    pub mu_tilde: MuTilde,
    pub difference: f64,
    pub combined_se: f64,
}

pub fn measure(config: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let model = config.model_spec()?;
    let prov = provenance("measure", config)?;
    let hash = prov.hash()?;
    let e = ensemble(config, Some(&model), ctx.exec)?;
    let fs_ = config.f();
    let bump = Bump::new(fs_.center, fs_.radius, fs_.height);
    let (lo, hi) = bump.x_support().expect("bumps have compact support");
    let n = ((hi - lo) / 0.005).ceil() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let f_grid = GridFunction::time_independent(xs.clone(), xs.iter().map(|&x| bump.value(0.0, x)).collect())?;
    let theta = plateau(config.theta())?;
    let (c, source) = match config.oracle() {
        Some(o) => {
            let b = config.theta();
            let (x_lo, x_hi) = (b.x_a.min(-6.0) - 1.0, b.x_b.max(6.0) + 1.0);
            let nx = ((x_hi - x_lo) / 0.05).ceil() as usize;
            let cx: Vec<f64> = (0..=nx).map(|i| x_lo + (x_hi - x_lo) * i as f64 / nx as f64).collect();
            let nt = (config.horizon() / 0.025).ceil() as usize;
            let ct: Vec<f64> = (0..=nt).map(|i| config.horizon() * i as f64 / nt as f64).collect();
            (CallSurface::from_fn(ct, cx, |t, x| o.call(t, x), |t| o.mean(t), None)?, "closed_form")
        }
        None => (estimate_call_surface(&e, config.strikes().nodes(), surface_times(config), ctx.exec)?, "monte_carlo"),
    };
    let ito = McEstimate::from_samples(&ito_drift_samples(&bump, &theta, &e, &model, ctx.exec)?);
    let mt = mu_tilde(&f_grid, &theta, &c, &e, &model, ctx.exec)?;
    let summary = MeasureSummary {
        call_surface: source.into(),
        ito_drift: ito,
        difference: ito.mean - mt.value,
        combined_se: (ito.se * ito.se + mt.se * mt.se).sqrt(),
        mu_tilde: mt,
    };
    let dir = run_dir(&ctx.root, "measure", &hash);
    write_json(&dir.join("measure.json"), &Envelope::new("measure", &prov, &summary)?)?;
    println!(
        "ito drift {:.6} ± {:.2e}, mu_tilde {:.6} ± {:.2e} ({} C) → {}",
        summary.ito_drift.mean,
        summary.ito_drift.se,
        summary.mu_tilde.value,
        summary.mu_tilde.se,
        summary.call_surface,
        dir.display()
    );
    Ok(true)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifySummary {
    pub suites: BTreeMap<String, Verdict>,
    pub verdict: Verdict,
}

fn suite_params(config: &RunConfig, suite: Suite) -> SuiteParams {
    let d = suite.default_params();
    SuiteParams {
        n_paths: config.paths.unwrap_or(d.n_paths),
        steps: config.steps.unwrap_or(d.steps),
        seed: config.seed.unwrap_or(d.seed),
        chunk: config.chunk.unwrap_or(d.chunk),
        models: config.model.clone().map(|m| vec![m]),
    }
}

pub fn verify(config: &RunConfig, ctx: &RunContext) -> Result<bool> {
    let suites: Vec<Suite> = match config.suite.as_deref() {
        None => bail!("invalid configuration:\n  suite: required (a suite id or `all`)"),
        Some("all") => Suite::ALL.to_vec(),
        Some(s) => vec![s.parse()?],
    };
    let prov = provenance("verify", config)?;
    let hash = prov.hash()?;
    let dir = run_dir(&ctx.root, "verify", &hash);
    let mut verdicts = BTreeMap::new();
    for suite in suites {
        let params = suite_params(config, suite);
        params.validate(suite).map_err(|e| anyhow::anyhow!("invalid configuration:\n  {e}"))?;
        let report: ExperimentReport = run_suite(suite, &params, ctx.exec)?;
        if report.checks.is_empty() {
            bail!("model: suite `{}` has no configuration for model `{}`", suite.id(), config.model.as_deref().unwrap_or("?"));
        }
        for fig in &report.figures {
            write_svg(&dir, suite.id(), &hash, fig)?;
        }
        write_json(&dir.join(format!("{}.json", suite.id())), &Envelope::new("report", &prov, &report)?)?;
        let passed = report.checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
        println!("{:<24} {:<4} {passed}/{} checks", suite.id(), verdict_str(report.verdict), report.checks.len());
        for c in report.failed_checks() {
            println!("    FAIL {}: {:.6e} vs {:.6e}", c.name, c.statistic, c.tolerance);
        }
        verdicts.insert(suite.id().to_string(), report.verdict);
    }
    let ok = verdicts.values().all(|v| *v == Verdict::Pass);
    let summary = VerifySummary { suites: verdicts, verdict: if ok { Verdict::Pass } else { Verdict::Fail } };
    write_json(&dir.join("run.json"), &Envelope::new("run", &prov, &summary)?)?;
    println!("reports written to {}", dir.display());
    Ok(ok)
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
    }
}

fn report_files(inputs: &[PathBuf], root: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs_or_files = inputs.to_vec();
    if dirs_or_files.is_empty() {
        let entries = fs::read_dir(root).with_context(|| format!("missing input artifact: no output root at {}", root.display()))?;
        for e in entries {
            let p = e?.path();
            if p.is_dir() && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("verify-")) {
                dirs_or_files.push(p);
            }
        }
        dirs_or_files.sort();
    }
    let mut files = Vec::new();
    for p in dirs_or_files {
        if p.is_file() {
            files.push(p);
        } else if p.is_dir() {
            let mut here: Vec<PathBuf> = fs::read_dir(&p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            here.retain(|f| f.extension().is_some_and(|x| x == "json") && f.file_name().is_some_and(|n| n != "run.json"));
            here.sort();
            if here.is_empty() {
                bail!("missing input artifact: expected suite reports {}/<suite>.json", p.display());
            }
            files.extend(here);
        } else {
            bail!("missing input artifact: {} does not exist", p.display());
        }
    }
    if files.is_empty() {
        bail!("missing input artifact: expected verify-*/<suite>.json under {}", root.display());
    }
    Ok(files)
}

pub fn report(inputs: &[PathBuf], ctx: &RunContext) -> Result<bool> {
    let files = report_files(inputs, &ctx.root)?;
    let mut by_hash: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut reports: Vec<(Provenance, ExperimentReport)> = Vec::new();
    for f in &files {
        let env: Envelope<ExperimentReport> = Envelope::read(f)?;
        if env.kind != "report" {
            bail!("{} is a `{}` artifact, not a suite report", f.display(), env.kind);
        }
        by_hash.entry(env.config_hash.clone()).or_default().push(f.clone());
        reports.push((env.provenance, env.payload));
    }
    if by_hash.len() > 1 {
        let listing: Vec<String> = by_hash
            .iter()
            .map(|(h, fs)| format!("  {}: {}", short(h), fs.iter().map(|f| f.display().to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        bail!("refusing to aggregate reports with different config hashes:\n{}", listing.join("\n"));
    }
    let (hash, _) = by_hash.into_iter().next().expect("at least one report");
    let prov = reports[0].0.clone();
    let mut text = format!("config hash {hash}\n\n{:<24} {:<7} checks\n", "suite", "verdict");
    let mut seen = BTreeMap::new();
    for (_, r) in &reports {
        let passed = r.checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
        text.push_str(&format!("{:<24} {:<7} {passed}/{}\n", r.experiment, verdict_str(r.verdict), r.checks.len()));
        seen.insert(r.experiment.clone(), r.verdict);
    }
    let missing: Vec<&str> = Suite::ALL.iter().map(|s| s.id()).filter(|id| !seen.contains_key(*id)).collect();
    if !missing.is_empty() {
        text.push_str(&format!("\nnot run: {}\n", missing.join(", ")));
    }
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|(_, r)| {
            r.failed_checks()
                .map(|c| format!("  {}/{}: {:.6e} vs tolerance {:.6e}", r.experiment, c.name, c.statistic, c.tolerance))
                .collect::<Vec<_>>()
        })
        .collect();
    if !failures.is_empty() {
        text.push_str("\nfailed checks:\n");
        text.push_str(&failures.join("\n"));
        text.push('\n');
    }
    let ok = failures.is_empty();
    let dir = run_dir(&ctx.root, "report", &hash);
    write_atomic(&dir.join(format!("summary.{}.txt", short(&hash))), text.as_bytes())?;
    let summary = VerifySummary { suites: seen, verdict: if ok { Verdict::Pass } else { Verdict::Fail } };
    write_json(&dir.join("summary.json"), &Envelope::new("summary", &prov, &summary)?)?;
    print!("{text}");
    Ok(ok)
}
