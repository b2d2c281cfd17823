//! Sample/population coupling, contraction fitting and the acceptance suite.

pub mod acceptance;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{EmError, Result};
use crate::gauss_quad::QuadratureSpec;
use crate::geometry::{ABState, MixtureModel};
use crate::population_em::{self, StopRule};
use crate::sample_em::{run_sample, sample_mixture};
use crate::trajectory::{sign, Trajectory};

/// Errors at or below this level are treated as converged when forming ratios.
pub const RATIO_NOISE_FLOOR: f64 = 1e-9;

/// Independent 64-bit stream seed for `(base, stream)` via the SplitMix64 finalizer.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(stream.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledRun {
    pub sample: Trajectory,
    pub population: Trajectory,
    /// `sup_{t ≤ T}` distance between the sample and population states.
    pub sup_discrepancy: f64,
    /// The same maximum restricted to `t ∈ [T/2, T]`.
    pub tail_discrepancy: f64,
    /// `‖b̂^T − s·θ*‖` with `s = sgn⟨b⁰, θ*⟩`.
    pub final_error: f64,
}

fn couple(sample: Trajectory, population: Trajectory, model: &MixtureModel, init: &ABState, horizon: usize) -> CoupledRun {
    let mut sup: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for t in 0..=horizon {
        let gap = sample.state_at(t).distance(population.state_at(t));
        sup = sup.max(gap);
        if 2 * t >= horizon {
            tail = tail.max(gap);
        }
    }
    let side = sign(init.b.dot(model.theta_star()));
    let final_error = (&sample.state_at(horizon).b - model.theta_star() * side).norm();
    CoupledRun { sample, population, sup_discrepancy: sup, tail_discrepancy: tail, final_error }
}

/// Sample and population EM from the same start, `horizon` steps each.
pub fn coupled_run(
    init: &ABState,
    model: &MixtureModel,
    n: usize,
    horizon: usize,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<CoupledRun> {
    let stop = StopRule::fixed(horizon.max(1));
    let population = population_em::run(init, model, &stop, spec)?;
    let data = sample_mixture(model, n, seed)?;
    let sample = run_sample(init, &data, &stop)?;
    Ok(couple(sample, population, model, init, horizon))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub sup_discrepancy: f64,
    pub tail_discrepancy: f64,
    pub final_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyResult {
    pub n_ladder: Vec<usize>,
    pub sup_discrepancy: Vec<f64>,
    pub tail_discrepancy: Vec<f64>,
    pub final_error: Vec<f64>,
    pub slope: Option<f64>,
    pub trials: usize,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub per_trial: Vec<TrialRecord>,
}

/// Coupled runs over an n-ladder; trial `k` at ladder rung `i` draws its data
/// from `derive_seed(seeds[k], i)`. Statistics are medians over trials.
pub fn consistency(
    init: &ABState,
    model: &MixtureModel,
    n_ladder: &[usize],
    seeds: &[u64],
    horizon: usize,
    spec: &QuadratureSpec,
) -> Result<ConsistencyResult> {
    if n_ladder.is_empty() || n_ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EmError::config("n_ladder", "must be non-empty and strictly increasing"));
    }
    if seeds.is_empty() {
        return Err(EmError::InsufficientData { needed: 1, got: 0 });
    }
    let stop = StopRule::fixed(horizon.max(1));
    let population = population_em::run(init, model, &stop, spec)?;

    let jobs: Vec<(usize, usize)> = (0..n_ladder.len()).flat_map(|i| (0..seeds.len()).map(move |k| (i, k))).collect();
    let per_trial = jobs
        .par_iter()
        .map(|&(i, k)| {
            let seed = derive_seed(seeds[k], i as u64);
            let data = sample_mixture(model, n_ladder[i], seed)?;
            let sample = run_sample(init, &data, &stop)?;
            let run = couple(sample, population.clone(), model, init, horizon);
            Ok(TrialRecord {
                n: n_ladder[i],
                trial: k,
                seed,
                sup_discrepancy: run.sup_discrepancy,
                tail_discrepancy: run.tail_discrepancy,
                final_error: run.final_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let stat = |f: fn(&TrialRecord) -> f64| -> Vec<f64> {
        n_ladder
            .iter()
            .map(|&n| median(&per_trial.iter().filter(|r| r.n == n).map(f).collect::<Vec<_>>()))
            .collect()
    };
    let mut result = ConsistencyResult {
        n_ladder: n_ladder.to_vec(),
        sup_discrepancy: stat(|r| r.sup_discrepancy),
        tail_discrepancy: stat(|r| r.tail_discrepancy),
        final_error: stat(|r| r.final_error),
        slope: None,
        trials: seeds.len(),
        horizon,
        seeds: seeds.to_vec(),
        per_trial,
    };
    result.slope = rate_fit(&result).ok();
    Ok(result)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(EmError::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.len() < 4 {
        return Err(EmError::InsufficientData { needed: 4, got: xs.len() });
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(EmError::Domain("log-log fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Slope of median final error against `n` on log scales.
pub fn rate_fit(result: &ConsistencyResult) -> Result<f64> {
    let ns: Vec<f64> = result.n_ladder.iter().map(|&n| n as f64).collect();
    log_log_slope(&ns, &result.final_error)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionEstimate {
    pub kappa_a: Option<f64>,
    pub kappa_b: Option<f64>,
    pub kappa_sin: Option<f64>,
    pub c_b: Option<f64>,
    /// First index from which `e_{t+1}² ≤ κ̂_b² e_t² + ĉ_b ‖a_t‖` holds for good.
    pub t0: Option<usize>,
    pub valid: bool,
}

fn max_ratio(values: &[f64]) -> Option<f64> {
    values
        .windows(2)
        .filter(|w| w[0] > RATIO_NOISE_FLOOR)
        .map(|w| w[1] / w[0])
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
}

/// Empirical contraction constants of a trajectory.
///
/// `κ̂_a` and `κ̂_sin` are the largest per-step ratios. For the b-error the
/// template `e_{t+1}² = κ² e_t² + c‖a_t‖` is least-squares fitted on the second
/// half of the informative steps; `ĉ_b` is the fitted `c` (floored at
/// `f64::EPSILON`) and `κ̂_b` the smallest κ for which the inequality then
/// holds on that half. Steps whose starting error is at most
/// [`RATIO_NOISE_FLOOR`] carry no information and are skipped.
pub fn contraction_estimate(traj: &Trajectory) -> Result<ContractionEstimate> {
    if traj.len() < 5 {
        return Err(EmError::InsufficientData { needed: 5, got: traj.len() });
    }
    let norm_a: Vec<f64> = traj.records.iter().map(|r| r.norm_a).collect();
    let sines: Vec<f64> = traj.records.iter().map(|r| r.sin_beta().unwrap_or(0.0)).collect();
    let e: Vec<f64> = traj.records.iter().map(|r| r.dist_b).collect();

    let kappa_a = max_ratio(&norm_a);
    let kappa_sin = max_ratio(&sines);

    let steps: Vec<usize> = (0..e.len() - 1).filter(|&t| e[t] > RATIO_NOISE_FLOOR).collect();
    let (mut kappa_b, mut c_b, mut t0) = (None, None, None);
    if !steps.is_empty() {
        let tail = &steps[steps.len() / 2..];
        // Normal equations for (κ², c) with columns e_t² and ‖a_t‖.
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &t in tail {
            let (x1, x2, y) = (e[t] * e[t], norm_a[t], e[t + 1] * e[t + 1]);
            s11 += x1 * x1;
            s12 += x1 * x2;
            s22 += x2 * x2;
            r1 += x1 * y;
            r2 += x2 * y;
        }
        let det = s11 * s22 - s12 * s12;
        let mut c = if det > 1e-12 * s11 * s22 && det > 0.0 { (s11 * r2 - s12 * r1) / det } else { 0.0 };
        if c.is_nan() || c <= f64::EPSILON {
            c = f64::EPSILON;
        }
        let k = tail
            .iter()
            .map(|&t| (e[t + 1] * e[t + 1] - c * norm_a[t]).max(0.0).sqrt() / e[t])
            .fold(0.0, f64::max);
        let holds = |t: usize| e[t + 1] * e[t + 1] <= (k * k * e[t] * e[t] + c * norm_a[t]) * (1.0 + 1e-12);
        let last_bad = steps.iter().rev().find(|&&t| !holds(t));
        t0 = Some(last_bad.map_or(0, |&t| t + 1));
        kappa_b = Some(k);
        c_b = Some(c);
    }

    let defined = [kappa_a, kappa_b, kappa_sin];
    let valid = kappa_b.is_some() && defined.iter().flatten().all(|&k| k < 1.0);
    Ok(ContractionEstimate { kappa_a, kappa_b, kappa_sin, c_b, t0, valid })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccumulationParams {
    pub eps_a: f64,
    pub eps_b: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub c_b: f64,
}

/// Closed-form bounds on `(α_t, e_t)` for the recursion
/// `α_{t+1} ≤ κ_a α_t + ε_a`, `e_{t+1} ≤ κ_b e_t + √(c_b α_t) + ε_b`.
///
/// The cross term is `t·√(c_b α₀)·m^{t−1}` with `m = max(√κ_a, κ_b)`: the sum
/// `Σ_{i<t} κ_b^{t−1−i} κ_a^{i/2}` has `t` terms, each at most `m^{t−1}`.
pub fn accumulation_bounds(t: usize, alpha0: f64, e0: f64, p: &AccumulationParams) -> (f64, f64) {
    let tf = t as f64;
    let m = p.kappa_a.sqrt().max(p.kappa_b);
    let cross = if t == 0 { 0.0 } else { tf * (p.c_b * alpha0).sqrt() * m.powi(t as i32 - 1) };
    let a = p.kappa_a.powi(t as i32) * alpha0 + p.eps_a / (1.0 - p.kappa_a);
    let b = p.kappa_b.powi(t as i32) * e0
        + cross
        + (p.c_b * p.eps_a / (1.0 - p.kappa_a)).sqrt() / (1.0 - p.kappa_b)
        + p.eps_b / (1.0 - p.kappa_b);
    (a, b)
}

/// Simulates the worst case of the recursion from `(α₀, e₀)` and reports
/// whether [`accumulation_bounds`] holds at every step up to `horizon`.
pub fn error_accumulation_check_from(alpha0: f64, e0: f64, p: &AccumulationParams, horizon: usize) -> bool {
    let (mut alpha, mut e) = (alpha0, e0);
    for t in 0..=horizon {
        let (ba, bb) = accumulation_bounds(t, alpha0, e0, p);
        let slack = 1e-12 * (1.0 + ba.max(bb));
        if alpha > ba + slack || e > bb + slack {
            return false;
        }
        let next_e = p.kappa_b * e + (p.c_b * alpha).sqrt() + p.eps_b;
        alpha = p.kappa_a * alpha + p.eps_a;
        e = next_e;
    }
    true
}

/// [`error_accumulation_check_from`] with unit initial errors.
pub fn error_accumulation_check(eps_a: f64, eps_b: f64, kappas: (f64, f64), c_b: f64, horizon: usize) -> bool {
    let p = AccumulationParams { eps_a, eps_b, kappa_a: kappas.0, kappa_b: kappas.1, c_b };
    error_accumulation_check_from(1.0, 1.0, &p, horizon)
}

/// Radius `factor·(‖θ*‖ + 1)·√((2d + ln(1/δ))/n)` for the norm of a sample mean.
pub fn mean_norm_radius(model: &MixtureModel, n: usize, delta: f64, factor: f64) -> f64 {
    factor * (model.theta_norm() + 1.0) * ((2.0 * model.dim() as f64 + (1.0 / delta).ln()) / n as f64).sqrt()
}

/// Fraction of `trials` datasets whose sample mean leaves the radius above.
pub fn concentration_check_with_factor(
    model: &MixtureModel,
    n: usize,
    delta: f64,
    trials: usize,
    seed: u64,
    factor: f64,
) -> Result<f64> {
    if trials < 100 {
        return Err(EmError::InsufficientData { needed: 100, got: trials });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EmError::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let radius = mean_norm_radius(model, n, delta, factor);
    let outside = (0..trials)
        .into_par_iter()
        .map(|k| Ok(sample_mixture(model, n, derive_seed(seed, k as u64))?.mean().norm() > radius))
        .collect::<Result<Vec<bool>>>()?;
    Ok(outside.iter().filter(|&&v| v).count() as f64 / trials as f64)
}

pub fn concentration_check(model: &MixtureModel, n: usize, delta: f64, trials: usize, seed: u64) -> Result<f64> {
    concentration_check_with_factor(model, n, delta, trials, seed, 4.0)
}
