//! Scalar Gaussian primitives and a self-checking 1D quadrature engine.
//!
//! Every expectation is written as `∫ f(c + z) φ(z) dz` for one or two lobe
//! centres `c`. Each lobe is integrated over `[-R, R]` (the mass beyond 12σ is
//! below 1e-32) by adaptive panel Gauss–Legendre: a panel is accepted only when
//! its 16-node value agrees with the sum over its two halves.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{EmError, Result};

pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const PANEL_NODES: usize = 16;
const MAX_DEPTH: u32 = 48;
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    /// Initial node budget per lobe; split into 16-node panels.
    pub nodes_per_lobe: usize,
    pub abs_tol: f64,
    /// Half-width of each lobe's support, in standard deviations.
    pub truncation_radius: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes_per_lobe: 128, abs_tol: 1e-12, truncation_radius: 12.0 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_lobe < 16 {
            return Err(EmError::config("quadrature.nodes_per_lobe", "must be at least 16"));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(EmError::config("quadrature.abs_tol", "must be positive and finite"));
        }
        if !(self.truncation_radius > 0.0 && self.truncation_radius.is_finite()) {
            return Err(EmError::config("quadrature.truncation_radius", "must be positive and finite"));
        }
        Ok(())
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Density of ½N(-θ, 1) + ½N(θ, 1).
pub fn mixture_pdf_1d(y: f64, x_theta: f64) -> f64 {
    0.5 * (std_normal_pdf(y - x_theta) + std_normal_pdf(y + x_theta))
}

/// Half the difference between the two lobe densities, ½(φ(y-θ) - φ(y+θ)).
pub fn mixture_pdf_diff(y: f64, x_theta: f64) -> f64 {
    0.5 * (std_normal_pdf(y - x_theta) - std_normal_pdf(y + x_theta))
}

fn legendre_rule() -> &'static ([f64; PANEL_NODES], [f64; PANEL_NODES]) {
    static RULE: OnceLock<([f64; PANEL_NODES], [f64; PANEL_NODES])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = PANEL_NODES;
        let mut nodes = [0.0; PANEL_NODES];
        let mut weights = [0.0; PANEL_NODES];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Returns (∫ g over [lo, hi], ∫ |g|) by one 16-node panel.
fn panel<G: Fn(f64) -> f64>(g: &G, lo: f64, hi: f64) -> (f64, f64) {
    let (nodes, weights) = legendre_rule();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let (mut sum, mut abs) = (0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        let v = g(mid + half * x);
        sum += w * v;
        abs += w * v.abs();
    }
    (half * sum, half * abs)
}

fn integrate_lobe<F: Fn(f64) -> f64>(f: &F, center: f64, spec: &QuadratureSpec) -> Result<f64> {
    let g = |z: f64| f(center + z) * std_normal_pdf(z);
    let r = spec.truncation_radius;
    let panels = (spec.nodes_per_lobe / PANEL_NODES).max(1);
    let width = 2.0 * r / panels as f64;

    let mut stack = Vec::with_capacity(64);
    for k in (0..panels).rev() {
        let lo = -r + k as f64 * width;
        let hi = if k + 1 == panels { r } else { lo + width };
        stack.push((lo, hi, panel(&g, lo, hi).0, 0u32));
    }

    let mut total = 0.0;
    let mut carry = 0.0;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, left_abs) = panel(&g, lo, mid);
        let (right, right_abs) = panel(&g, mid, hi);
        let fine = left + right;
        let budget = (spec.abs_tol * (hi - lo) / (2.0 * r)).max(ROUNDOFF * (left_abs + right_abs));
        let gap = (fine - coarse).abs();
        if gap <= budget {
            // Neumaier summation keeps the panel total at rounding level.
            let t = total + fine;
            carry += if total.abs() >= fine.abs() { (total - t) + fine } else { (fine - t) + total };
            total = t;
        } else if depth >= MAX_DEPTH || !gap.is_finite() {
            return Err(EmError::NonConvergence { discrepancy: gap, budget });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total + carry)
}

/// `E[f(Z)]` for `Z ~ N(center, 1)`, to within `spec.abs_tol`.
pub fn integrate_against_normal<F: Fn(f64) -> f64>(f: F, center: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if !center.is_finite() {
        return Err(EmError::Domain(format!("lobe centre {center} is not finite")));
    }
    integrate_lobe(&f, center, spec)
}

/// `∫ f(y) p(y, x_theta) dy` for the symmetric mixture density, to within `spec.abs_tol`.
pub fn integrate_against_mixture<F: Fn(f64) -> f64>(f: F, x_theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if !x_theta.is_finite() {
        return Err(EmError::Domain(format!("x_theta {x_theta} is not finite")));
    }
    let plus = integrate_lobe(&f, x_theta, spec)?;
    let minus = integrate_lobe(&f, -x_theta, spec)?;
    Ok(0.5 * (plus + minus))
}
