//! Config-driven experiment runner: parses a JSON experiment description,
//! runs one command, and writes CSV/JSON artifacts carrying provenance.
//!
//! Every CSV starts with `#` lines holding the config hash, the artifact
//! version and the quadrature spec; every JSON carries the same data under
//! `provenance` together with the fully resolved config.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{EmError, Result};
use crate::gauss_quad::QuadratureSpec;
use crate::geometry::{whiten_vector, ABState, MixtureModel, Vector};
use crate::harness::acceptance::{run_criterion, CRITERIA};
use crate::harness::{consistency, contraction_estimate, coupled_run, derive_seed};
use crate::kernels::{eval_f, eval_gamma, eval_k, eval_p, eval_s, KernelArgs};
use crate::landscape::{classify_stationary, fixed_stationary_correspondence, slice, Parameterization};
use crate::population_em::{a_priori_bounds, classify_limit, run, run_model1, StopRule};
use crate::sample_em::{model1_step_sample, run_sample, sample_mixture, RNG_NAME};
use crate::trajectory::Trajectory;
use crate::ARTIFACT_VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RunPopulation,
    RunSample,
    Coupled,
    Landscape,
    Kernels,
    Consistency,
    Verify,
}

/// The true mixture, given either by `theta_star` (already centered and
/// whitened) or by the two means with an optional known covariance.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<Vec<f64>>,
    /// Row-major covariance; means (model and init) are mapped by `Σ^{-1/2}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
}

/// Starting point, as `(a, b)`, as a mean pair, or as `θ` for Model 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub points: usize,
    pub max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { points: 20, max: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SliceConfig {
    pub span: f64,
    pub points: usize,
    /// Direction for `a`; defaults to `θ*/‖θ*‖` (first axis if `θ* = 0`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    /// Direction for `b`; same default as `u`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig { span: 2.0, points: 41, u: None, v: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub parameterization: Parameterization,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Per-trial seeds for `consistency`; derived from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_ladder")]
    pub n_ladder: Vec<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub slice: SliceConfig,
    /// Subset of acceptance criteria for `verify`; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<Vec<u8>>,
    /// Also write the generated dataset for sample runs.
    #[serde(default)]
    pub export_data: bool,
}

fn default_seed() -> u64 {
    1
}
fn default_n() -> usize {
    10_000
}
fn default_ladder() -> Vec<usize> {
    vec![1_000, 10_000, 100_000, 1_000_000]
}
fn default_horizon() -> usize {
    50
}
fn default_trials() -> usize {
    20
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        EmError::config(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn vector(v: &[f64], path: &str) -> Result<Vector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(EmError::config(path, "entries must be finite"));
    }
    Ok(Vector::from_column_slice(v))
}

fn expect_dim(v: &[f64], d: usize, path: &str) -> Result<()> {
    if v.len() != d {
        return Err(EmError::config(path, format!("has length {} but the model dimension is {d}", v.len())));
    }
    Ok(())
}

/// The whitened, centered problem a config describes.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: MixtureModel,
    pub init: Option<ABState>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.stop.validate()?;
        self.quadrature.validate()?;
        let needs_model = !matches!(self.command, Command::Kernels | Command::Verify);
        if needs_model && self.model.is_none() {
            return Err(EmError::config("model", "required for this command"));
        }
        let needs_init = matches!(self.command, Command::RunPopulation | Command::RunSample | Command::Coupled | Command::Consistency);
        if needs_init && self.init.is_none() {
            return Err(EmError::config("init", "required for this command"));
        }
        if self.parameterization == Parameterization::Model1 && matches!(self.command, Command::Coupled | Command::Consistency) {
            return Err(EmError::config("parameterization", "coupled runs use model2"));
        }
        if matches!(self.command, Command::RunSample | Command::Coupled) && self.n < 2 {
            return Err(EmError::config("n", "must be at least 2"));
        }
        if self.command == Command::Consistency {
            if self.n_ladder.is_empty() || self.n_ladder.windows(2).any(|w| w[0] >= w[1]) || self.n_ladder[0] < 2 {
                return Err(EmError::config("n_ladder", "must be strictly increasing with entries at least 2"));
            }
            if self.trials == 0 {
                return Err(EmError::config("trials", "must be at least 1"));
            }
            if let Some(s) = &self.seeds {
                if s.len() != self.trials {
                    return Err(EmError::config("seeds", format!("has {} entries but trials is {}", s.len(), self.trials)));
                }
            }
        }
        if self.horizon == 0 {
            return Err(EmError::config("horizon", "must be at least 1"));
        }
        if self.grid.points < 1 || !(self.grid.max >= 0.0 && self.grid.max.is_finite()) {
            return Err(EmError::config("grid", "needs at least one point and a finite non-negative max"));
        }
        if self.slice.points < 1 || !(self.slice.span >= 0.0 && self.slice.span.is_finite()) {
            return Err(EmError::config("slice", "needs at least one point and a finite non-negative span"));
        }
        if let Some(ids) = &self.criteria {
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
                return Err(EmError::config("criteria", format!("unknown criterion {bad}")));
            }
        }
        if self.model.is_some() {
            self.resolve()?;
        }
        Ok(())
    }

    /// Builds the model and starting state in whitened, centered coordinates.
    pub fn resolve(&self) -> Result<Resolved> {
        let m = self.model.as_ref().ok_or_else(|| EmError::config("model", "missing"))?;
        let d = match (&m.theta_star, &m.mu1, &m.mu2) {
            (Some(t), None, None) => t.len(),
            (None, Some(a), Some(_)) => a.len(),
            _ => return Err(EmError::config("model", "give either theta_star or both mu1 and mu2")),
        };
        if d == 0 {
            return Err(EmError::config("model", "dimension must be at least 1"));
        }
        if let Some(given) = m.d {
            if given != d {
                return Err(EmError::config("model.d", format!("is {given} but the means have length {d}")));
            }
        }
        let sigma = match &m.sigma {
            None => None,
            Some(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(EmError::config("model.sigma", format!("must be {d}x{d}")));
                }
                let mat = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
                if (&mat - mat.transpose()).amax() > 1e-12 * mat.amax().max(1.0) {
                    return Err(EmError::config("model.sigma", "must be symmetric"));
                }
                Some(mat)
            }
        };
        let white = |v: &[f64], path: &str| -> Result<Vector> {
            expect_dim(v, d, path)?;
            let v = vector(v, path)?;
            match &sigma {
                None => Ok(v),
                Some(s) => whiten_vector(&v, s).map_err(|e| EmError::config("model.sigma", e.to_string())),
            }
        };
        let (theta, center) = match (&m.theta_star, &m.mu1, &m.mu2) {
            (Some(t), _, _) => (white(t, "model.theta_star")?, Vector::zeros(d)),
            (_, Some(a), Some(b)) => {
                let (a, b) = (white(a, "model.mu1")?, white(b, "model.mu2")?);
                ((&b - &a) * 0.5, (&a + &b) * 0.5)
            }
            _ => unreachable!("checked above"),
        };
        let model = MixtureModel::new(theta)?;

        let init = match &self.init {
            None => None,
            Some(i) => Some(match (&i.a, &i.b, &i.mu1, &i.mu2, &i.theta) {
                (Some(a), Some(b), None, None, None) => {
                    ABState { a: white(a, "init.a")? - &center, b: white(b, "init.b")? }
                }
                (None, None, Some(m1), Some(m2), None) => {
                    let (m1, m2) = (white(m1, "init.mu1")?, white(m2, "init.mu2")?);
                    ABState { a: (&m1 + &m2) * 0.5 - &center, b: (&m2 - &m1) * 0.5 }
                }
                (None, None, None, None, Some(t)) => ABState { a: Vector::zeros(d), b: white(t, "init.theta")? },
                _ => return Err(EmError::config("init", "give exactly one of {a, b}, {mu1, mu2} or theta")),
            }),
        };
        if self.parameterization == Parameterization::Model1 {
            if let Some(s) = &init {
                if s.a.iter().any(|&v| v != 0.0) {
                    return Err(EmError::config("init", "model1 starts need a = 0; use theta"));
                }
            }
        }
        Ok(Resolved { model, init })
    }

    /// SHA-256 of the resolved config serialized as JSON.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// What `execute` produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecReport {
    pub files: Vec<PathBuf>,
    /// Text for standard output (the pass/fail table for `verify`).
    pub stdout: String,
    /// False when `verify` saw a failing criterion.
    pub success: bool,
}

struct Writer<'a> {
    cfg: &'a ExperimentConfig,
    hash: String,
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn preamble(&self) -> String {
        let q = &self.cfg.quadrature;
        format!(
            "# config_sha256={}\n# version={}\n# quadrature=nodes_per_lobe:{};abs_tol:{:e};truncation_radius:{}\n",
            self.hash, ARTIFACT_VERSION, q.nodes_per_lobe, q.abs_tol, q.truncation_radius
        )
    }

    fn provenance(&self) -> serde_json::Value {
        json!({
            "config_sha256": self.hash,
            "version": ARTIFACT_VERSION,
            "quadrature": self.cfg.quadrature,
            "rng": RNG_NAME,
            "config": self.cfg,
        })
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = self.preamble().into_bytes();
        body(&mut buf)?;
        self.put(name, &buf)
    }

    fn json(&mut self, name: &str, mut value: serde_json::Value) -> Result<()> {
        if let serde_json::Value::Object(map) = &mut value {
            map.insert("provenance".into(), self.provenance());
        }
        let mut text = serde_json::to_string_pretty(&value).map_err(|e| EmError::Io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.as_bytes())
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::File::create(&path)?.write_all(bytes)?;
        self.files.push(path);
        Ok(())
    }
}

fn csv_rows(buf: &mut Vec<u8>, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let io = |e: csv::Error| EmError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn trajectory_summary(traj: &Trajectory, model: &MixtureModel, init: &ABState) -> Result<serde_json::Value> {
    let estimate = if traj.len() >= 5 { Some(contraction_estimate(traj)?) } else { None };
    Ok(json!({
        "iterations": traj.len(),
        "converged": traj.converged,
        "final_state": traj.final_state,
        "predicted_limit": classify_limit(init, model),
        "a_priori_bounds": a_priori_bounds(init, model),
        "contraction": estimate,
    }))
}

fn model1_table(iterates: &[Vector], model: &MixtureModel) -> (Vec<String>, Vec<Vec<String>>) {
    let d = model.dim();
    let side = iterates.first().map_or(1.0, |t| if t.dot(model.theta_star()) < 0.0 { -1.0 } else { 1.0 });
    let target = model.theta_star() * side;
    let header = ["t".to_string(), "error".to_string()].into_iter().chain((1..=d).map(|k| format!("theta{k}"))).collect();
    let rows = iterates
        .iter()
        .enumerate()
        .map(|(t, th)| {
            [t.to_string(), (th - &target).norm().to_string()].into_iter().chain(th.iter().map(|v| v.to_string())).collect()
        })
        .collect();
    (header, rows)
}

fn unit_or_axis(v: &Vector) -> Vector {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        let mut e = Vector::zeros(v.len());
        e[0] = 1.0;
        e
    }
}

/// Runs the command in `cfg`, writing artifacts into `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExecReport> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut w = Writer { cfg, hash: cfg.hash(), dir: out_dir, files: Vec::new() };
    let spec = &cfg.quadrature;
    let mut stdout = String::new();
    let mut success = true;

    match cfg.command {
        Command::RunPopulation => {
            let r = cfg.resolve()?;
            let init = r.init.expect("validated");
            if cfg.parameterization == Parameterization::Model1 {
                let run = run_model1(&init.b, &r.model, &cfg.stop, spec)?;
                let (header, rows) = model1_table(&run.iterates, &r.model);
                w.csv("trajectory.csv", |b| csv_rows(b, &header, rows))?;
                w.json(
                    "summary.json",
                    json!({ "iterations": run.iterates.len() - 1, "converged": run.converged, "final_theta": run.iterates.last() }),
                )?;
            } else {
                let traj = run(&init, &r.model, &cfg.stop, spec)?;
                w.csv("trajectory.csv", |b| traj.write_csv(b))?;
                w.json("summary.json", trajectory_summary(&traj, &r.model, &init)?)?;
            }
        }
        Command::RunSample => {
            let r = cfg.resolve()?;
            let init = r.init.expect("validated");
            let data = sample_mixture(&r.model, cfg.n, cfg.seed)?;
            if cfg.export_data {
                w.csv("data.csv", |b| data.write_csv(b))?;
            }
            if cfg.parameterization == Parameterization::Model1 {
                let mut iterates = vec![init.b.clone()];
                let mut converged = false;
                for _ in 0..cfg.stop.max_iters {
                    let prev = iterates.last().expect("non-empty");
                    let next = model1_step_sample(prev, &data)?;
                    let moved = (&next - prev).norm();
                    iterates.push(next);
                    if moved < cfg.stop.step_tol {
                        converged = true;
                        break;
                    }
                }
                let (header, rows) = model1_table(&iterates, &r.model);
                w.csv("trajectory.csv", |b| csv_rows(b, &header, rows))?;
                w.json(
                    "summary.json",
                    json!({ "iterations": iterates.len() - 1, "converged": converged, "final_theta": iterates.last() }),
                )?;
            } else {
                let traj = run_sample(&init, &data, &cfg.stop)?;
                w.csv("trajectory.csv", |b| traj.write_csv(b))?;
                w.json("summary.json", trajectory_summary(&traj, &r.model, &init)?)?;
            }
        }
        Command::Coupled => {
            let r = cfg.resolve()?;
            let init = r.init.expect("validated");
            let c = coupled_run(&init, &r.model, cfg.n, cfg.horizon, cfg.seed, spec)?;
            if cfg.export_data {
                let data = sample_mixture(&r.model, cfg.n, cfg.seed)?;
                w.csv("data.csv", |b| data.write_csv(b))?;
            }
            w.csv("population.csv", |b| c.population.write_csv(b))?;
            w.csv("sample.csv", |b| c.sample.write_csv(b))?;
            let header: Vec<String> = ["t", "discrepancy"].iter().map(|s| s.to_string()).collect();
            let rows = (0..=cfg.horizon).map(|t| vec![t.to_string(), c.sample.state_at(t).distance(c.population.state_at(t)).to_string()]);
            w.csv("discrepancy.csv", |b| csv_rows(b, &header, rows))?;
            w.json(
                "summary.json",
                json!({
                    "n": cfg.n,
                    "horizon": cfg.horizon,
                    "seed": cfg.seed,
                    "sup_discrepancy": c.sup_discrepancy,
                    "tail_discrepancy": c.tail_discrepancy,
                    "final_error": c.final_error,
                }),
            )?;
        }
        Command::Landscape => {
            let r = cfg.resolve()?;
            let d = r.model.dim();
            let theta = r.model.theta_star().clone();
            let zero = Vector::zeros(d);
            let center = r.init.clone().unwrap_or_else(|| ABState { a: zero.clone(), b: theta.clone() });
            let default_dir = unit_or_axis(&theta);
            let dir = |v: &Option<Vec<f64>>, path: &str| -> Result<Vector> {
                match v {
                    None => Ok(default_dir.clone()),
                    Some(v) => {
                        expect_dim(v, d, path)?;
                        vector(v, path)
                    }
                }
            };
            let (u, v) = (dir(&cfg.slice.u, "slice.u")?, dir(&cfg.slice.v, "slice.v")?);
            let grid = slice(&center, &u, &v, cfg.slice.span, cfg.slice.points, &r.model, spec)?;
            let header: Vec<String> = ["a_offset", "b_offset", "G"].iter().map(|s| s.to_string()).collect();
            let rows = grid.iter().map(|p| vec![p.a_offset.to_string(), p.b_offset.to_string(), p.g.to_string()]);
            w.csv("slice.csv", |b| csv_rows(b, &header, rows))?;

            let at = |b: Vector| ABState { a: zero.clone(), b };
            let candidates = [("plus_theta", at(theta.clone())), ("minus_theta", at(-&theta)), ("zero", at(zero.clone()))];
            let mut reports = serde_json::Map::new();
            for (name, point) in candidates {
                let report = classify_stationary(&point, &r.model, cfg.parameterization, spec)?;
                let agrees = fixed_stationary_correspondence(&point, &r.model, spec)?;
                reports.insert(name.into(), json!({ "report": report, "fixed_iff_stationary": agrees }));
            }
            w.json("stationary.json", json!({ "parameterization": cfg.parameterization, "points": reports }))?;
        }
        Command::Kernels => {
            let g = cfg.grid;
            let step = if g.points > 1 { g.max / (g.points - 1) as f64 } else { 0.0 };
            let axis: Vec<f64> = (0..g.points).map(|k| k as f64 * step).collect();
            let mut points = Vec::with_capacity(g.points.pow(3));
            for &xa in &axis {
                for &xb in &axis {
                    for &xt in &axis {
                        points.push((xa, xb, xt));
                    }
                }
            }
            let rows = points
                .par_iter()
                .map(|&(xa, xb, xt)| {
                    let args = KernelArgs::new(xa, xb, xt)?;
                    let vals = [
                        eval_p(args, spec)?,
                        eval_gamma(args, spec)?,
                        eval_s(args, spec)?,
                        eval_f(xb, xt, spec)?,
                        eval_k(xa, xb, spec)?,
                    ];
                    Ok([xa, xb, xt].iter().chain(vals.iter()).map(|v| v.to_string()).collect())
                })
                .collect::<Result<Vec<Vec<String>>>>()?;
            let header: Vec<String> = ["x_a", "x_b", "x_theta", "P", "Gamma", "S", "F", "K"].iter().map(|s| s.to_string()).collect();
            w.csv("kernels.csv", |b| csv_rows(b, &header, rows))?;
        }
        Command::Consistency => {
            let r = cfg.resolve()?;
            let init = r.init.expect("validated");
            let seeds = cfg.seeds.clone().unwrap_or_else(|| (0..cfg.trials as u64).map(|k| derive_seed(cfg.seed, k)).collect());
            let res = consistency(&init, &r.model, &cfg.n_ladder, &seeds, cfg.horizon, spec)?;
            let header: Vec<String> =
                ["n", "trial", "seed", "sup_discrepancy", "tail_discrepancy", "final_error"].iter().map(|s| s.to_string()).collect();
            let rows = res.per_trial.iter().map(|t| {
                vec![
                    t.n.to_string(),
                    t.trial.to_string(),
                    t.seed.to_string(),
                    t.sup_discrepancy.to_string(),
                    t.tail_discrepancy.to_string(),
                    t.final_error.to_string(),
                ]
            });
            w.csv("trials.csv", |b| csv_rows(b, &header, rows))?;
            let summary = serde_json::to_value(&res).map_err(|e| EmError::Io(e.to_string()))?;
            w.json("consistency.json", summary)?;
        }
        Command::Verify => {
            let ids = cfg.criteria.clone().unwrap_or_else(|| CRITERIA.to_vec());
            let outcomes: Vec<_> = ids.iter().filter_map(|&id| run_criterion(id)).collect();
            for o in &outcomes {
                stdout.push_str(&o.line());
                stdout.push('\n');
            }
            success = outcomes.iter().all(|o| o.passed);
            // Timings vary between runs, so they stay out of the artifact.
            let table: Vec<_> = outcomes.iter().map(|o| json!({ "id": o.id, "title": o.title, "passed": o.passed })).collect();
            w.json("verify.json", json!({ "criteria": table, "all_passed": success }))?;
        }
    }
    Ok(ExecReport { files: w.files, stdout, success })
}
