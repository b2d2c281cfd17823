//! The scalar kernels through which every population update factors.
//!
//! With `w(u, x_b) = ½(1 + tanh(u·x_b))` and `p`, `Δ` the mixture density and
//! half-difference from [`gauss_quad`](crate::gauss_quad):
//!
//! | kernel | definition |
//! |---|---|
//! | `P(x_a, x_b, x_θ)` | `∫ w(y − x_a, x_b) p(y, x_θ) dy` |
//! | `Γ(x_a, x_b, x_θ)` | `∫ w(y − x_a, x_b) y p(y, x_θ) dy` |
//! | `S(x_a, x_b, x_θ)` | `∫ w(y − x_a, x_b) Δ(y, x_θ) dy` |
//! | `R(x_b, x)` | `½ ∫ w(y − x, x_b) y φ(y) dy` |
//! | `F(x_b, x_θ)` | `∫ tanh((y + x_θ) x_b) (y + x_θ) φ(y) dy` |
//! | `K(x, x_b)` | `∫ ½ tanh(y x_b) φ(y − x) dy` |

use serde::Serialize;

use crate::error::{EmError, Result};
use crate::gauss_quad::{integrate_against_mixture, integrate_against_normal, std_normal_cdf, std_normal_pdf, QuadratureSpec};

/// Posterior weight of the component centred at `+x_b` for a point at offset `u`.
pub fn weight(u: f64, x_b: f64) -> f64 {
    0.5 * (1.0 + (u * x_b).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelArgs {
    pub x_a: f64,
    pub x_b: f64,
    pub x_theta: f64,
}

impl KernelArgs {
    /// Arguments in the canonical orientation: finite and non-negative.
    pub fn new(x_a: f64, x_b: f64, x_theta: f64) -> Result<Self> {
        for (name, v) in [("x_a", x_a), ("x_b", x_b), ("x_theta", x_theta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(EmError::Domain(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        Ok(KernelArgs { x_a, x_b, x_theta })
    }

    /// Arguments of either sign. The defining integrals make sense for all
    /// reals; the population update uses this for states where ⟨a, b⟩ < 0.
    pub fn signed(x_a: f64, x_b: f64, x_theta: f64) -> Result<Self> {
        for (name, v) in [("x_a", x_a), ("x_b", x_b), ("x_theta", x_theta)] {
            if !v.is_finite() {
                return Err(EmError::Domain(format!("{name} = {v} must be finite")));
            }
        }
        Ok(KernelArgs { x_a, x_b, x_theta })
    }
}

pub fn eval_p(args: KernelArgs, spec: &QuadratureSpec) -> Result<f64> {
    let KernelArgs { x_a, x_b, x_theta } = args;
    if x_a == 0.0 || x_b == 0.0 {
        return Ok(0.5);
    }
    integrate_against_mixture(|y| weight(y - x_a, x_b), x_theta, spec)
}

pub fn eval_gamma(args: KernelArgs, spec: &QuadratureSpec) -> Result<f64> {
    let KernelArgs { x_a, x_b, x_theta } = args;
    if x_b == 0.0 {
        return Ok(0.0);
    }
    integrate_against_mixture(|y| weight(y - x_a, x_b) * y, x_theta, spec)
}

pub fn eval_s(args: KernelArgs, spec: &QuadratureSpec) -> Result<f64> {
    let KernelArgs { x_a, x_b, x_theta } = args;
    if x_b == 0.0 || x_theta == 0.0 {
        return Ok(0.0);
    }
    let f = |y: f64| weight(y - x_a, x_b);
    let plus = integrate_against_normal(f, x_theta, spec)?;
    let minus = integrate_against_normal(f, -x_theta, spec)?;
    Ok(0.5 * (plus - minus))
}

pub fn eval_r(x_b: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(x_b.is_finite() && x_b >= 0.0 && x.is_finite()) {
        return Err(EmError::Domain(format!("R({x_b}, {x}) needs x_b ≥ 0 and finite x")));
    }
    if x_b == 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * integrate_against_normal(|y| weight(y - x, x_b) * y, 0.0, spec)?)
}

pub fn eval_f(x_b: f64, x_theta: f64, spec: &QuadratureSpec) -> Result<f64> {
    KernelArgs::new(0.0, x_b, x_theta)?;
    if x_b == 0.0 {
        return Ok(0.0);
    }
    integrate_against_normal(|z| (z * x_b).tanh() * z, x_theta, spec)
}

pub fn eval_k(x: f64, x_b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(x_b.is_finite() && x_b >= 0.0 && x.is_finite()) {
        return Err(EmError::Domain(format!("K({x}, {x_b}) needs x_b ≥ 0 and finite x")));
    }
    if x == 0.0 || x_b == 0.0 {
        return Ok(0.0);
    }
    integrate_against_normal(|y| 0.5 * (y * x_b).tanh(), x, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuxBounds {
    pub l: f64,
    pub w: f64,
    pub j: f64,
    pub mills_gap: f64,
}

/// Closed-form helpers used by the kernel inequalities.
///
/// `l(x) = x(1 − 2Φ(−x)) + 2φ(x)`, `W(x) = φ(x) − x(1 − Φ(x))`,
/// `J(x) = ½(x − l(x)(1 − 2Φ(−x)))` and `mills_gap(x) = (x + √(2/π))(1 − Φ(x)) − φ(x)`.
pub fn eval_aux_bounds(x: f64) -> Result<AuxBounds> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(EmError::Domain(format!("auxiliary bounds need x > 0, got {x}")));
    }
    let q = std_normal_cdf(-x);
    let phi = std_normal_pdf(x);
    let l = x * (1.0 - 2.0 * q) + 2.0 * phi;
    // J expanded so that nothing of size x cancels.
    let j = 2.0 * x * q * (1.0 - q) - phi * (1.0 - 2.0 * q);
    let mills_gap = (x + (2.0 / std::f64::consts::PI).sqrt()) * q - phi;
    Ok(AuxBounds { l, w: phi - x * q, j, mills_gap })
}
