//! Expected log-likelihood `G`, its gradient, and stationary-point classification.
//!
//! With `μ₁ = a − b`, `μ₂ = a + b`, the log-density of the fitted mixture is
//! `−(d/2) log 2π − ½‖y‖² + ⟨y, a⟩ − ½(‖a‖² + ‖b‖²) + log cosh⟨y − a, b⟩`,
//! so under the true law only `E log cosh(‖b‖(Y₁ − x_a))` needs quadrature.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gauss_quad::{integrate_against_mixture, QuadratureSpec};
use crate::geometry::{from_ab, planar_reduce, to_ab, ABState, MeanPair, MixtureModel, Vector};
use crate::population_em::{model2_step, moments};

const HESSIAN_STEP: f64 = 1e-4;
const EIG_TOL: f64 = 1e-6;
const STATIONARY_TOL: f64 = 1e-6;
const FIXED_TOL: f64 = 1e-8;
/// Finite displacement used to resolve directions where the Hessian vanishes.
const PROBE_STEP: f64 = 0.25;
const PROBE_TOL: f64 = 1e-9;

fn log_cosh(u: f64) -> f64 {
    let u = u.abs();
    u + (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2
}

pub fn expected_loglik(means: &MeanPair, model: &MixtureModel, spec: &QuadratureSpec) -> Result<f64> {
    let state = to_ab(means, model)?;
    loglik_ab(&state, model, spec)
}

fn loglik_ab(state: &ABState, model: &MixtureModel, spec: &QuadratureSpec) -> Result<f64> {
    state.check(model)?;
    let d = model.dim() as f64;
    let base = -0.5 * d * (2.0 * std::f64::consts::PI).ln()
        - 0.5 * (d + model.theta_star().norm_squared())
        - 0.5 * (state.a.norm_squared() + state.b.norm_squared());
    if state.b.norm() == 0.0 {
        return Ok(base);
    }
    let c = planar_reduce(state, model)?;
    let (x_a, nb) = (c.x_a, c.norm_b);
    Ok(base + integrate_against_mixture(|y| log_cosh(nb * (y - x_a)), c.theta1, spec)?)
}

/// `(∇_{μ₁} G, ∇_{μ₂} G) = (E[v(Y − μ₁)], E[(1 − v)(Y − μ₂)])`.
pub fn grad_g(means: &MeanPair, model: &MixtureModel, spec: &QuadratureSpec) -> Result<(Vector, Vector)> {
    let state = to_ab(means, model)?;
    let m = moments(&state, model, spec)?;
    let g1 = (&state.a - &state.b) * -(1.0 - m.p) - &m.q;
    let g2 = &m.q - (&state.a + &state.b) * m.p;
    Ok((g1, g2))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameterization {
    /// Symmetric model with means `±θ`; the point is read as `θ = b`.
    Model1,
    /// Free means `(μ₁, μ₂)`.
    #[default]
    Model2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Max,
    Min,
    Saddle,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryReport {
    pub point: ABState,
    pub grad_norm: f64,
    pub hessian_eigs: Vec<f64>,
    /// Largest entry of `|H − Hᵀ|` before symmetrization.
    pub hessian_asymmetry: f64,
    /// Second differences of `G` at ±`PROBE_STEP` along the null eigenvectors.
    pub null_probes: Vec<f64>,
    pub classification: Classification,
}

/// `G` and its gradient in the flat coordinates of a parameterization.
struct Objective<'a> {
    model: &'a MixtureModel,
    spec: &'a QuadratureSpec,
    param: Parameterization,
}

impl Objective<'_> {
    fn d(&self) -> usize {
        self.model.dim()
    }

    fn coords(&self, point: &ABState) -> Result<Vector> {
        Ok(match self.param {
            Parameterization::Model1 => point.b.clone(),
            Parameterization::Model2 => {
                let m = from_ab(point, self.model)?;
                let mut x = Vector::zeros(2 * self.d());
                x.rows_mut(0, self.d()).copy_from(&m.mu1);
                x.rows_mut(self.d(), self.d()).copy_from(&m.mu2);
                x
            }
        })
    }

    fn means(&self, x: &Vector) -> MeanPair {
        let d = self.d();
        match self.param {
            Parameterization::Model1 => MeanPair { mu1: -x.clone(), mu2: x.clone() },
            Parameterization::Model2 => MeanPair { mu1: x.rows(0, d).into_owned(), mu2: x.rows(d, d).into_owned() },
        }
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        expected_loglik(&self.means(x), self.model, self.spec)
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        let (g1, g2) = grad_g(&self.means(x), self.model, self.spec)?;
        Ok(match self.param {
            // d/dθ of G(−θ, θ).
            Parameterization::Model1 => g2 - g1,
            Parameterization::Model2 => {
                let d = self.d();
                let mut g = Vector::zeros(2 * d);
                g.rows_mut(0, d).copy_from(&g1);
                g.rows_mut(d, d).copy_from(&g2);
                g
            }
        })
    }
}

pub fn classify_stationary(
    point: &ABState,
    model: &MixtureModel,
    param: Parameterization,
    spec: &QuadratureSpec,
) -> Result<StationaryReport> {
    point.check(model)?;
    let obj = Objective { model, spec, param };
    let x = obj.coords(point)?;
    let grad_norm = obj.grad(&x)?.norm();

    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[j] += HESSIAN_STEP;
        lo[j] -= HESSIAN_STEP;
        let col = (obj.grad(&hi)? - obj.grad(&lo)?) / (2.0 * HESSIAN_STEP);
        h.set_column(j, &col);
    }
    let hessian_asymmetry = (&h - h.transpose()).amax();
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let hessian_eigs: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut negative = hessian_eigs.iter().any(|&l| l < -EIG_TOL);
    let mut positive = hessian_eigs.iter().any(|&l| l > EIG_TOL);
    let mut null_probes = Vec::new();
    let degenerate = hessian_eigs.iter().any(|l| l.abs() <= EIG_TOL);

    let classification = if grad_norm > STATIONARY_TOL {
        Classification::Unresolved
    } else if !degenerate {
        match (negative, positive) {
            (true, false) => Classification::Max,
            (false, true) => Classification::Min,
            _ => Classification::Saddle,
        }
    } else {
        // A flat Hessian direction says nothing by itself; look at G a finite
        // step away along it and only decide if curvature of both signs shows up.
        let g0 = obj.value(&x)?;
        for &i in &order {
            if eig.eigenvalues[i].abs() > EIG_TOL {
                continue;
            }
            let v = eig.eigenvectors.column(i).into_owned();
            let s = obj.value(&(&x + &v * PROBE_STEP))? + obj.value(&(&x - &v * PROBE_STEP))? - 2.0 * g0;
            negative |= s < -PROBE_TOL;
            positive |= s > PROBE_TOL;
            null_probes.push(s);
        }
        if negative && positive {
            Classification::Saddle
        } else {
            Classification::Unresolved
        }
    };

    Ok(StationaryReport { point: point.clone(), grad_norm, hessian_eigs, hessian_asymmetry, null_probes, classification })
}

/// Whether being a fixed point of the population update and being a
/// stationary point of `G` agree at `point`.
pub fn fixed_stationary_correspondence(point: &ABState, model: &MixtureModel, spec: &QuadratureSpec) -> Result<bool> {
    let fixed = model2_step(point, model, spec)?.state.distance(point) <= FIXED_TOL;
    let (g1, g2) = grad_g(&from_ab(point, model)?, model, spec)?;
    let stationary = (g1.norm_squared() + g2.norm_squared()).sqrt() <= STATIONARY_TOL;
    Ok(fixed == stationary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlicePoint {
    pub a_offset: f64,
    pub b_offset: f64,
    pub g: f64,
}

/// `G` on the grid `(a + s·u, b + t·v)` for `s, t` in `[−span, span]`.
pub fn slice(
    center: &ABState,
    u: &Vector,
    v: &Vector,
    span: f64,
    points: usize,
    model: &MixtureModel,
    spec: &QuadratureSpec,
) -> Result<Vec<SlicePoint>> {
    center.check(model)?;
    model.check_dim(u)?;
    model.check_dim(v)?;
    let step = if points > 1 { 2.0 * span / (points - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(points * points);
    for i in 0..points {
        let s = -span + i as f64 * step;
        for j in 0..points {
            let t = -span + j as f64 * step;
            let state = ABState { a: &center.a + u * s, b: &center.b + v * t };
            out.push(SlicePoint { a_offset: s, b_offset: t, g: loglik_ab(&state, model, spec)? });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn single_gaussian_entropy() {
        let m = MixtureModel::from_slice(&[0.0]).unwrap();
        let g = expected_loglik(&MeanPair { mu1: v(&[0.0]), mu2: v(&[0.0]) }, &m, &QuadratureSpec::default()).unwrap();
        assert!((g - (-0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn truth_reference_value() {
        let m = MixtureModel::from_slice(&[1.0]).unwrap();
        let g = expected_loglik(&MeanPair { mu1: v(&[-1.0]), mu2: v(&[1.0]) }, &m, &QuadratureSpec::default()).unwrap();
        assert!((g - -1.7557693535515044).abs() < 1e-11);
    }

    #[test]
    fn log_cosh_is_stable() {
        assert_eq!(log_cosh(0.0), 0.0);
        assert!((log_cosh(1.0) - 1f64.cosh().ln()).abs() < 1e-15);
        assert!((log_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_cosh(-3.0), log_cosh(3.0));
    }
}
