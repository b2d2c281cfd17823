//! Finite-sample EM on seeded synthetic data.
//!
//! Sums over the data are taken in fixed 4096-row chunks whose partial results
//! are added in chunk order, so a step is bit-for-bit independent of the
//! number of worker threads.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{EmError, Result};
use crate::geometry::{from_ab, to_ab, ABState, MeanPair, MixtureModel, Vector};
use crate::population_em::StopRule;
use crate::trajectory::{iterate, Trajectory};

const CHUNK_ROWS: usize = 4096;
const WEIGHT_FLOOR: f64 = 1e-300;
const P_FLOOR: f64 = 1e-15;

/// Name of the generator recorded in artifact provenance.
pub const RNG_NAME: &str = "ChaCha20 (rand_chacha), one stream per seed";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<f64>,
    n: usize,
    d: usize,
    seed: u64,
    model: MixtureModel,
}

/// Draws `n` rows `ζθ* + ω` with Rademacher `ζ` and standard normal `ω`.
pub fn sample_mixture(model: &MixtureModel, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(EmError::InsufficientData { needed: 1, got: 0 });
    }
    let d = model.dim();
    let theta = model.theta_star();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n * d);
    for _ in 0..n {
        let zeta = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for k in 0..d {
            let omega: f64 = rng.sample(StandardNormal);
            rows.push(zeta * theta[k] + omega);
        }
    }
    Ok(Dataset { rows, n, d, seed, model: model.clone() })
}

impl Dataset {
    /// Wraps given observations, e.g. hand-built or whitened data.
    pub fn from_matrix(data: &DMatrix<f64>, model: &MixtureModel, seed: u64) -> Result<Self> {
        if data.ncols() != model.dim() {
            return Err(EmError::DimensionMismatch { expected: model.dim(), found: data.ncols() });
        }
        if data.nrows() == 0 {
            return Err(EmError::InsufficientData { needed: 1, got: 0 });
        }
        let rows = data.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        Ok(Dataset { rows, n: data.nrows(), d: data.ncols(), seed, model: model.clone() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.rows)
    }

    pub fn mean(&self) -> Vector {
        let sums = self.reduce(|y, acc: &mut Vec<f64>| {
            for (s, v) in acc.iter_mut().zip(y) {
                *s += v;
            }
        });
        Vector::from_vec(sums) / self.n as f64
    }

    /// Chunked reduction into `width` accumulators with a fixed summation order.
    fn reduce_wide<F>(&self, width: usize, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut Vec<f64>) + Sync,
    {
        let partials: Vec<Vec<f64>> = self
            .rows
            .par_chunks(CHUNK_ROWS * self.d)
            .map(|chunk| {
                let mut acc = vec![0.0; width];
                for y in chunk.chunks_exact(self.d) {
                    f(y, &mut acc);
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; width];
        for part in partials {
            for (t, v) in total.iter_mut().zip(part) {
                *t += v;
            }
        }
        total
    }

    fn reduce<F>(&self, f: F) -> Vec<f64>
    where
        F: Fn(&[f64], &mut Vec<f64>) + Sync,
    {
        self.reduce_wide(self.d, f)
    }

    fn check(&self, v: &Vector) -> Result<()> {
        if v.len() != self.d {
            return Err(EmError::DimensionMismatch { expected: self.d, found: v.len() });
        }
        Ok(())
    }

    /// One row per observation, preceded by `#` lines naming the generator inputs.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let theta: Vec<String> = self.model.theta_star().iter().map(|v| v.to_string()).collect();
        writeln!(out, "# seed={}", self.seed)?;
        writeln!(out, "# n={}", self.n)?;
        writeln!(out, "# d={}", self.d)?;
        writeln!(out, "# theta_star={}", theta.join(";"))?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| EmError::Io(e.to_string());
        w.write_record((1..=self.d).map(|k| format!("y{k}"))).map_err(io)?;
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|v| v.to_string())).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `1 / (1 + e^{-x})` without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(x: &[f64], v: &Vector) -> f64 {
    x.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

pub fn model1_step_sample(theta_hat: &Vector, data: &Dataset) -> Result<Vector> {
    data.check(theta_hat)?;
    let sums = data.reduce(|y, acc| {
        let t = dot(y, theta_hat).tanh();
        for (s, v) in acc.iter_mut().zip(y) {
            *s += t * v;
        }
    });
    Ok(Vector::from_vec(sums) / data.n as f64)
}

/// Posterior-weighted means, with `v` the responsibility of the first component.
pub fn model2_step_mu(means: &MeanPair, data: &Dataset) -> Result<MeanPair> {
    data.check(&means.mu1)?;
    data.check(&means.mu2)?;
    let diff = &means.mu1 - &means.mu2;
    let offset = 0.5 * (means.mu1.norm_squared() - means.mu2.norm_squared());
    let d = data.d;
    let sums = data.reduce_wide(2 * d + 2, |y, acc| {
        let e = dot(y, &diff) - offset;
        let (v, u) = (logistic(e), logistic(-e));
        acc[0] += v;
        acc[1] += u;
        for k in 0..d {
            acc[2 + k] += v * y[k];
            acc[2 + d + k] += u * y[k];
        }
    });
    let (sv, su) = (sums[0], sums[1]);
    if sv < WEIGHT_FLOOR || su < WEIGHT_FLOOR {
        return Err(EmError::DegenerateWeights(format!("weight sums {sv:e} and {su:e}")));
    }
    let mu1 = Vector::from_column_slice(&sums[2..2 + d]) / sv;
    let mu2 = Vector::from_column_slice(&sums[2 + d..]) / su;
    Ok(MeanPair { mu1, mu2 })
}

/// The (â, b̂) form of one sample step, also returning `p̂`.
pub fn model2_step_ab_with_p(state: &ABState, data: &Dataset) -> Result<(ABState, f64)> {
    data.check(&state.a)?;
    data.check(&state.b)?;
    let d = data.d;
    let (a, b) = (&state.a, &state.b);
    let sums = data.reduce_wide(2 * d + 1, |y, acc| {
        let u: f64 = y.iter().zip(a.iter()).zip(b.iter()).map(|((y, a), b)| (y - a) * b).sum();
        let w = logistic(2.0 * u);
        acc[0] += w;
        for k in 0..d {
            acc[1 + k] += w * y[k];
            acc[1 + d + k] += y[k];
        }
    });
    let n = data.n as f64;
    let p = sums[0] / n;
    if !(p > P_FLOOR && p < 1.0 - P_FLOOR) {
        return Err(EmError::DegenerateWeights(format!("sample weight p = {p} left (1e-15, 1 - 1e-15)")));
    }
    let q = Vector::from_column_slice(&sums[1..1 + d]) / n;
    let ybar = Vector::from_column_slice(&sums[1 + d..]) / n;
    let denom = 2.0 * p * (1.0 - p);
    let shift = &ybar / (2.0 * (1.0 - p));
    let a_next = &q * ((1.0 - 2.0 * p) / denom) + &shift;
    let b_next = &q / denom - shift;
    Ok((ABState { a: a_next, b: b_next }, p))
}

pub fn model2_step_ab(state: &ABState, data: &Dataset) -> Result<ABState> {
    model2_step_ab_with_p(state, data).map(|(s, _)| s)
}

pub fn run_sample(init: &ABState, data: &Dataset, stop: &StopRule) -> Result<Trajectory> {
    stop.validate()?;
    init.check(&data.model)?;
    iterate(init, &data.model, stop.max_iters, stop.step_tol, |s| model2_step_ab_with_p(s, data))
}

/// The same run driven by the mean-pair update; `p` is reported as the mean weight of the second component.
pub fn run_sample_mu(init: &ABState, data: &Dataset, stop: &StopRule) -> Result<Trajectory> {
    stop.validate()?;
    init.check(&data.model)?;
    let model = data.model.clone();
    iterate(init, &data.model, stop.max_iters, stop.step_tol, |s| {
        let means = model2_step_mu(&from_ab(s, &model)?, data)?;
        let p = sample_weight(s, data);
        Ok((to_ab(&means, &model)?, p))
    })
}

fn sample_weight(state: &ABState, data: &Dataset) -> f64 {
    let (a, b) = (&state.a, &state.b);
    let s = data.reduce_wide(1, |y, acc| {
        let u: f64 = y.iter().zip(a.iter()).zip(b.iter()).map(|((y, a), b)| (y - a) * b).sum();
        acc[0] += logistic(2.0 * u);
    });
    s[0] / data.n as f64
}

/// In-sample log-likelihood of the equal-weight mixture with means `(μ₁, μ₂)`.
pub fn sample_loglik(means: &MeanPair, data: &Dataset) -> Result<f64> {
    data.check(&means.mu1)?;
    data.check(&means.mu2)?;
    let d = data.d as f64;
    let c = -0.5 * d * (2.0 * std::f64::consts::PI).ln() - std::f64::consts::LN_2;
    let s = data.reduce_wide(1, |y, acc| {
        let l1 = -0.5 * y.iter().zip(means.mu1.iter()).map(|(y, m)| (y - m) * (y - m)).sum::<f64>();
        let l2 = -0.5 * y.iter().zip(means.mu2.iter()).map(|(y, m)| (y - m) * (y - m)).sum::<f64>();
        let (hi, lo) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
        acc[0] += hi + (lo - hi).exp().ln_1p();
    });
    Ok(s[0] + c * data.n as f64)
}
