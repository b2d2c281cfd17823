//! The (a, b) re-parameterization, planar reduction and whitening.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{EmError, Result};

pub type Vector = DVector<f64>;

const COLLINEAR_TOL: f64 = 1e-12;

/// Symmetric mixture ½N(−θ*, I) + ½N(θ*, I).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    theta_star: Vector,
}

impl MixtureModel {
    pub fn new(theta_star: Vector) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(EmError::Domain("model dimension must be at least 1".into()));
        }
        if theta_star.iter().any(|v| !v.is_finite()) {
            return Err(EmError::Domain("theta_star has non-finite entries".into()));
        }
        Ok(MixtureModel { theta_star })
    }

    pub fn from_slice(theta_star: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(theta_star))
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn theta_star(&self) -> &Vector {
        &self.theta_star
    }

    pub fn theta_norm(&self) -> f64 {
        self.theta_star.norm()
    }

    pub(crate) fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(EmError::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPair {
    pub mu1: Vector,
    pub mu2: Vector,
}

/// `a` is the midpoint error, `b` the half-separation; truth is `(0, ±θ*)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ABState {
    pub a: Vector,
    pub b: Vector,
}

impl ABState {
    pub fn new(a: Vector, b: Vector) -> Result<Self> {
        if a.len() != b.len() {
            return Err(EmError::DimensionMismatch { expected: a.len(), found: b.len() });
        }
        Ok(ABState { a, b })
    }

    pub fn from_slices(a: &[f64], b: &[f64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(a), Vector::from_column_slice(b))
    }

    pub fn zeros(d: usize) -> Self {
        ABState { a: Vector::zeros(d), b: Vector::zeros(d) }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Euclidean distance in the stacked (a, b) coordinates.
    pub fn distance(&self, other: &ABState) -> f64 {
        ((&self.a - &other.a).norm_squared() + (&self.b - &other.b).norm_squared()).sqrt()
    }

    pub(crate) fn check(&self, model: &MixtureModel) -> Result<()> {
        model.check_dim(&self.a)?;
        model.check_dim(&self.b)?;
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(EmError::Domain("state has non-finite entries".into()));
        }
        Ok(())
    }
}

pub fn to_ab(means: &MeanPair, model: &MixtureModel) -> Result<ABState> {
    model.check_dim(&means.mu1)?;
    model.check_dim(&means.mu2)?;
    Ok(ABState { a: (&means.mu1 + &means.mu2) * 0.5, b: (&means.mu2 - &means.mu1) * 0.5 })
}

pub fn from_ab(state: &ABState, model: &MixtureModel) -> Result<MeanPair> {
    model.check_dim(&state.a)?;
    model.check_dim(&state.b)?;
    Ok(MeanPair { mu1: &state.a - &state.b, mu2: &state.a + &state.b })
}

/// Coordinates of a state in the plane spanned by `b` and `θ*`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCoords {
    pub x_a: f64,
    pub norm_b: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub e1: Vector,
    /// `None` only in dimension 1, where the plane degenerates to a line.
    pub e2: Option<Vector>,
}

impl PlanarCoords {
    pub fn theta_norm(&self) -> f64 {
        self.theta1.hypot(self.theta2)
    }
}

pub fn planar_reduce(state: &ABState, model: &MixtureModel) -> Result<PlanarCoords> {
    state.check(model)?;
    let norm_b = state.b.norm();
    if norm_b == 0.0 {
        return Err(EmError::DegenerateState("b = 0 has no planar frame".into()));
    }
    let e1 = &state.b / norm_b;
    let x_a = state.a.dot(&e1);
    let theta = model.theta_star();
    let theta1 = theta.dot(&e1);

    if model.dim() == 1 {
        return Ok(PlanarCoords { x_a, norm_b, theta1, theta2: 0.0, e1, e2: None });
    }

    // Projecting twice keeps e2 orthogonal to e1 when θ* is nearly parallel to b.
    let mut residual = theta - &e1 * theta1;
    residual -= &e1 * residual.dot(&e1);
    let r = residual.norm();
    if r > COLLINEAR_TOL * theta.norm() {
        return Ok(PlanarCoords { x_a, norm_b, theta1, theta2: r, e2: Some(residual / r), e1 });
    }

    let k = (0..model.dim())
        .find(|&k| e1[k].abs() < 1.0 - COLLINEAR_TOL)
        .expect("a unit vector in d ≥ 2 is not parallel to every axis");
    let mut e2 = Vector::zeros(model.dim());
    e2[k] = 1.0;
    e2 -= &e1 * e1[k];
    let n = e2.norm();
    e2 /= n;
    Ok(PlanarCoords { x_a, norm_b, theta1, theta2: 0.0, e1, e2: Some(e2) })
}

/// Angle between `b` and `θ*`, in `[0, π]`.
pub fn angle_beta(coords: &PlanarCoords) -> Result<f64> {
    if coords.norm_b == 0.0 || coords.theta_norm() == 0.0 {
        return Err(EmError::DegenerateState("angle undefined for b = 0 or θ* = 0".into()));
    }
    Ok(coords.theta2.atan2(coords.theta1))
}

fn inverse_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = sigma.nrows();
    if d == 0 || sigma.ncols() != d {
        return Err(EmError::NotPositiveDefinite);
    }
    let scale = sigma.amax();
    if !scale.is_finite() || (sigma - sigma.transpose()).amax() > 1e-12 * scale {
        return Err(EmError::NotPositiveDefinite);
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let floor = scale * d as f64 * f64::EPSILON;
    if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= floor) {
        return Err(EmError::NotPositiveDefinite);
    }
    let inv = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

/// `Σ^{-1/2} v` for a single vector.
pub fn whiten_vector(v: &Vector, sigma: &DMatrix<f64>) -> Result<Vector> {
    let w = inverse_sqrt(sigma)?;
    if v.len() != w.nrows() {
        return Err(EmError::DimensionMismatch { expected: w.nrows(), found: v.len() });
    }
    Ok(w * v)
}

/// Applies `Σ^{-1/2}` to every row of an n×d data matrix.
pub fn whiten(data: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let w = inverse_sqrt(sigma)?;
    if data.ncols() != w.nrows() {
        return Err(EmError::DimensionMismatch { expected: w.nrows(), found: data.ncols() });
    }
    Ok(data * w)
}

/// Haar-distributed orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
