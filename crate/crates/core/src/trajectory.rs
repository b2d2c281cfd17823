//! Iterate sequences with per-step diagnostics, shared by the population and
//! sample runners.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{angle_beta, planar_reduce, ABState, MixtureModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: usize,
    pub state: ABState,
    /// Weight `p^{t+1}` computed while stepping from this state.
    pub p: f64,
    /// Angle between `b^t` and `θ*`; undefined when either vanishes.
    pub beta: Option<f64>,
    pub norm_a: f64,
    /// `‖b^t − s·θ*‖` with `s = sgn⟨b⁰, θ*⟩`.
    pub dist_b: f64,
    pub ratio_a: Option<f64>,
    pub ratio_b: Option<f64>,
    pub ratio_sin: Option<f64>,
}

impl StepRecord {
    pub fn sin_beta(&self) -> Option<f64> {
        self.beta.map(f64::sin)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// State produced by the last step. It is not itself a record.
    pub final_state: ABState,
    pub converged: bool,
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn ratio(now: f64, before: f64) -> Option<f64> {
    (before > 0.0 && now.is_finite()).then(|| now / before)
}

/// Accumulates records, filling in the diagnostics relative to `θ*`.
pub(crate) struct Recorder<'m> {
    model: &'m MixtureModel,
    side: f64,
    records: Vec<StepRecord>,
}

impl<'m> Recorder<'m> {
    pub fn new(init: &ABState, model: &'m MixtureModel) -> Self {
        Recorder { model, side: sign(init.b.dot(model.theta_star())), records: Vec::new() }
    }

    pub fn push(&mut self, state: &ABState, p: f64) -> Result<()> {
        let beta = if state.b.norm() > 0.0 && self.model.theta_norm() > 0.0 {
            Some(angle_beta(&planar_reduce(state, self.model)?)?)
        } else {
            None
        };
        let norm_a = state.a.norm();
        let dist_b = (&state.b - self.model.theta_star() * self.side).norm();
        let (ratio_a, ratio_b, ratio_sin) = match self.records.last() {
            Some(prev) => (
                ratio(norm_a, prev.norm_a),
                ratio(dist_b, prev.dist_b),
                match (beta, prev.beta) {
                    (Some(now), Some(before)) => ratio(now.sin(), before.sin()),
                    _ => None,
                },
            ),
            None => (None, None, None),
        };
        self.records.push(StepRecord {
            t: self.records.len(),
            state: state.clone(),
            p,
            beta,
            norm_a,
            dist_b,
            ratio_a,
            ratio_b,
            ratio_sin,
        });
        Ok(())
    }

    pub fn finish(self, final_state: ABState, converged: bool) -> Trajectory {
        Trajectory { records: self.records, final_state, converged }
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 9] = ["t", "norm_a", "dist_b", "beta", "sin_beta", "p", "ratio_a", "ratio_b", "ratio_sin"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// State after `t` steps, holding the converged state beyond the end.
    pub fn state_at(&self, t: usize) -> &ABState {
        match self.records.get(t) {
            Some(r) => &r.state,
            None => &self.final_state,
        }
    }

    /// CSV body with the columns of [`TRAJECTORY_COLUMNS`] followed by
    /// `a1..ad, b1..bd`; undefined values are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| crate::EmError::Io(e.to_string());
        let d = self.final_state.dim();
        let header = TRAJECTORY_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain((1..=d).map(|k| format!("a{k}")))
            .chain((1..=d).map(|k| format!("b{k}")));
        w.write_record(header).map_err(io)?;
        for r in &self.records {
            let fixed = [
                r.t.to_string(),
                r.norm_a.to_string(),
                r.dist_b.to_string(),
                opt(r.beta),
                opt(r.sin_beta()),
                r.p.to_string(),
                opt(r.ratio_a),
                opt(r.ratio_b),
                opt(r.ratio_sin),
            ];
            let coords = r.state.a.iter().chain(r.state.b.iter()).map(|v| v.to_string());
            w.write_record(fixed.into_iter().chain(coords)).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `step` from `init` until consecutive states are closer than
/// `step_tol` or `max_iters` steps have been taken.
pub(crate) fn iterate<F>(init: &ABState, model: &MixtureModel, max_iters: usize, step_tol: f64, mut step: F) -> Result<Trajectory>
where
    F: FnMut(&ABState) -> Result<(ABState, f64)>,
{
    let mut rec = Recorder::new(init, model);
    let mut state = init.clone();
    for _ in 0..max_iters {
        let (next, p) = step(&state)?;
        rec.push(&state, p)?;
        let moved = next.distance(&state);
        state = next;
        if moved < step_tol {
            return Ok(rec.finish(state, true));
        }
    }
    Ok(rec.finish(state, false))
}
