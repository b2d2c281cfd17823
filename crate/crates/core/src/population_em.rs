//! Population EM for Models 1 and 2, evaluated through the planar reduction.

use serde::{Deserialize, Serialize};

use crate::error::{EmError, Result};
use crate::gauss_quad::{std_normal_cdf, QuadratureSpec};
use crate::geometry::{planar_reduce, ABState, MixtureModel, Vector};
use crate::kernels::{eval_f, eval_gamma, eval_p, eval_s, KernelArgs};
use crate::trajectory::{iterate, Trajectory};

pub use crate::trajectory::StepRecord as PopStepRecord;

const P_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    pub max_iters: usize,
    pub step_tol: f64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { max_iters: 10_000, step_tol: 1e-10 }
    }
}

impl StopRule {
    /// Exactly `iters` steps unless two consecutive states coincide.
    pub fn fixed(iters: usize) -> Self {
        StopRule { max_iters: iters, step_tol: f64::MIN_POSITIVE }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(EmError::config("stop.max_iters", "must be at least 1"));
        }
        if !(self.step_tol > 0.0 && self.step_tol.is_finite()) {
            return Err(EmError::config("stop.step_tol", "must be positive and finite"));
        }
        Ok(())
    }
}

/// The two population moments `p = E w` and `q = E[w Y]` at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub p: f64,
    pub q: Vector,
}

pub fn moments(state: &ABState, model: &MixtureModel, spec: &QuadratureSpec) -> Result<Moments> {
    state.check(model)?;
    if state.b.norm() == 0.0 {
        return Ok(Moments { p: 0.5, q: Vector::zeros(model.dim()) });
    }
    let c = planar_reduce(state, model)?;
    let args = KernelArgs::signed(c.x_a, c.norm_b, c.theta1)?;
    let p = eval_p(args, spec)?;
    let mut q = &c.e1 * eval_gamma(args, spec)?;
    if let Some(e2) = &c.e2 {
        if c.theta2 > 0.0 {
            q += e2 * (c.theta2 * eval_s(args, spec)?);
        }
    }
    Ok(Moments { p, q })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopStep {
    pub state: ABState,
    pub p: f64,
}

pub fn model2_step(state: &ABState, model: &MixtureModel, spec: &QuadratureSpec) -> Result<PopStep> {
    let Moments { p, q } = moments(state, model, spec)?;
    if !(p > P_FLOOR && p < 1.0 - P_FLOOR) {
        return Err(EmError::DegenerateWeights(format!("population weight p = {p} left (1e-15, 1 - 1e-15)")));
    }
    let denom = 2.0 * p * (1.0 - p);
    let a = &q * ((1.0 - 2.0 * p) / denom);
    let b = q / denom;
    Ok(PopStep { state: ABState { a, b }, p })
}

pub fn model1_step(theta: &Vector, model: &MixtureModel, spec: &QuadratureSpec) -> Result<Vector> {
    model.check_dim(theta)?;
    let norm = theta.norm();
    if norm == 0.0 {
        return Ok(Vector::zeros(model.dim()));
    }
    let c = planar_reduce(&ABState { a: Vector::zeros(model.dim()), b: theta.clone() }, model)?;
    let mut next = &c.e1 * eval_f(norm, c.theta1.abs(), spec)?;
    if let Some(e2) = &c.e2 {
        if c.theta2 > 0.0 {
            let s = eval_s(KernelArgs::signed(0.0, norm, c.theta1)?, spec)?;
            next += e2 * (2.0 * c.theta2 * s);
        }
    }
    Ok(next)
}

pub fn run(init: &ABState, model: &MixtureModel, stop: &StopRule, spec: &QuadratureSpec) -> Result<Trajectory> {
    stop.validate()?;
    init.check(model)?;
    iterate(init, model, stop.max_iters, stop.step_tol, |s| {
        let step = model2_step(s, model, spec)?;
        Ok((step.state, step.p))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model1Run {
    /// `θ⁰, θ¹, …`, including the state at which the run stopped.
    pub iterates: Vec<Vector>,
    pub converged: bool,
}

pub fn run_model1(theta0: &Vector, model: &MixtureModel, stop: &StopRule, spec: &QuadratureSpec) -> Result<Model1Run> {
    stop.validate()?;
    model.check_dim(theta0)?;
    let mut iterates = vec![theta0.clone()];
    for _ in 0..stop.max_iters {
        let prev = iterates.last().expect("non-empty");
        let next = model1_step(prev, model, spec)?;
        let moved = (&next - prev).norm();
        iterates.push(next);
        if moved < stop.step_tol {
            return Ok(Model1Run { iterates, converged: true });
        }
    }
    Ok(Model1Run { iterates, converged: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LimitClass {
    PlusTheta,
    MinusTheta,
    Zero,
}

/// Predicted limit from the sign of `⟨b⁰, θ*⟩`; zero is taken literally.
pub fn classify_limit(init: &ABState, model: &MixtureModel) -> LimitClass {
    let s = init.b.dot(model.theta_star());
    if s > 0.0 {
        LimitClass::PlusTheta
    } else if s < 0.0 {
        LimitClass::MinusTheta
    } else {
        LimitClass::Zero
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriBounds {
    pub c_u1: f64,
    pub c_u2: f64,
    pub c_u3: f64,
}

/// Radii of the compact set containing every population iterate.
pub fn a_priori_bounds(init: &ABState, model: &MixtureModel) -> AprioriBounds {
    let t2 = model.theta_star().norm_squared();
    let c_u1 = init
        .a
        .norm_squared()
        .max(2.0 / std::f64::consts::PI + t2 / 2.0)
        .max(16.0 / 9.0 + 73.0 / 36.0 * t2)
        .sqrt();
    let c_u2 = 0.25 * (1.0 - std_normal_cdf(c_u1 + t2.sqrt()));
    let spread = (1.0 + t2) / (4.0 * c_u2 * c_u2 * (1.0 - c_u2) * (1.0 - c_u2));
    let c_u3 = init.b.norm_squared().max(t2 + spread).sqrt();
    AprioriBounds { c_u1, c_u2, c_u3 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn truth_is_fixed() {
        let m = MixtureModel::from_slice(&[0.8, -0.3, 0.5]).unwrap();
        let truth = ABState::new(Vector::zeros(3), m.theta_star().clone()).unwrap();
        let step = model2_step(&truth, &m, &spec()).unwrap();
        assert!(step.state.distance(&truth) <= 1e-10);
        assert_eq!(step.p, 0.5);
        let t1 = model1_step(m.theta_star(), &m, &spec()).unwrap();
        assert!((t1 - m.theta_star()).norm() <= 1e-10);
    }

    #[test]
    fn zero_b_collapses() {
        let m = MixtureModel::from_slice(&[1.0, 0.0]).unwrap();
        let s = ABState::new(v(&[0.4, -2.0]), Vector::zeros(2)).unwrap();
        let step = model2_step(&s, &m, &spec()).unwrap();
        assert_eq!(step.state, ABState::zeros(2));
        assert_eq!(step.p, 0.5);
        assert_eq!(model1_step(&Vector::zeros(2), &m, &spec()).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn model1_step_reference() {
        let m = MixtureModel::from_slice(&[1.0]).unwrap();
        let next = model1_step(&v(&[0.5]), &m, &spec()).unwrap();
        assert!((next[0] - 0.7493561006170975).abs() < 1e-11);
        let neg = model1_step(&v(&[-0.5]), &m, &spec()).unwrap();
        assert!((neg[0] + 0.7493561006170975).abs() < 1e-11);
    }

    #[test]
    fn a_zero_reduces_to_model1() {
        let m = MixtureModel::from_slice(&[1.1, 0.4]).unwrap();
        let b = v(&[0.3, 0.9]);
        let step = model2_step(&ABState::new(Vector::zeros(2), b.clone()).unwrap(), &m, &spec()).unwrap();
        assert_eq!(step.state.a, Vector::zeros(2));
        let t = model1_step(&b, &m, &spec()).unwrap();
        assert!((step.state.b - t).amax() < 1e-11);
    }

    #[test]
    fn limit_classes() {
        let m = MixtureModel::from_slice(&[1.0, 2.0]).unwrap();
        let at = |b: Vector| ABState::new(Vector::zeros(2), b).unwrap();
        assert_eq!(classify_limit(&at(m.theta_star() * 0.1), &m), LimitClass::PlusTheta);
        assert_eq!(classify_limit(&at(m.theta_star() * -0.1), &m), LimitClass::MinusTheta);
        assert_eq!(classify_limit(&at(v(&[2.0, -1.0])), &m), LimitClass::Zero);
    }

    #[test]
    fn compactness_constants() {
        let m = MixtureModel::from_slice(&[1.0, 0.0]).unwrap();
        let s = ABState::new(Vector::zeros(2), v(&[0.0, 1.0])).unwrap();
        let c = a_priori_bounds(&s, &m);
        assert!((c.c_u1 * c.c_u1 - (16.0 / 9.0 + 73.0 / 36.0)).abs() < 1e-14);
        assert!((c.c_u1 - 1.9507833184532709).abs() < 1e-14);
        assert!((c.c_u2 - 0.00039621149324140307).abs() < 1e-16);
        assert!((c.c_u3 / 1785.3777063389663 - 1.0).abs() < 1e-11);
        let far = ABState::new(v(&[10.0, 0.0]), v(&[0.0, 1.0])).unwrap();
        assert_eq!(a_priori_bounds(&far, &m).c_u1, 10.0);
    }

    #[test]
    fn fixed_point_run_has_one_record() {
        let m = MixtureModel::from_slice(&[0.7, 0.7]).unwrap();
        let truth = ABState::new(Vector::zeros(2), m.theta_star().clone()).unwrap();
        let traj = run(&truth, &m, &StopRule::default(), &spec()).unwrap();
        assert_eq!(traj.len(), 1);
        assert!(traj.converged);
    }

    #[test]
    fn good_init_converges_to_truth() {
        let m = MixtureModel::from_slice(&[1.0, 0.5]).unwrap();
        let init = ABState::new(Vector::zeros(2), v(&[0.6, -0.2])).unwrap();
        let traj = run(&init, &m, &StopRule::default(), &spec()).unwrap();
        assert!(traj.converged);
        assert!(traj.final_state.distance(&ABState::new(Vector::zeros(2), m.theta_star().clone()).unwrap()) < 1e-8);
    }

    #[test]
    fn stop_rule_validation() {
        assert!(StopRule { max_iters: 0, step_tol: 1e-3 }.validate().is_err());
        assert!(StopRule { max_iters: 5, step_tol: 0.0 }.validate().is_err());
        assert_eq!(StopRule::default(), StopRule { max_iters: 10_000, step_tol: 1e-10 });
    }
}
