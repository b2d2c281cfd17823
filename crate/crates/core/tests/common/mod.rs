//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(lo + i as f64 * h);
    }
    s * h / 3.0
}

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `E f(Y)` for `Y ~ N(c, 1)` by dense Simpson on `c ± 14`.
pub fn normal_expect<F: Fn(f64) -> f64>(f: F, c: f64) -> f64 {
    simpson(|y| f(y) * phi(y - c), c - 14.0, c + 14.0, 40_000)
}

/// `E f(Y)` for `Y ~ ½N(−t, 1) + ½N(t, 1)`.
pub fn mixture_expect<F: Fn(f64) -> f64>(f: F, t: f64) -> f64 {
    0.5 * (normal_expect(&f, t) + normal_expect(&f, -t))
}

pub fn w(u: f64, xb: f64) -> f64 {
    0.5 * (1.0 + (u * xb).tanh())
}

pub fn p_oracle(xa: f64, xb: f64, xt: f64) -> f64 {
    mixture_expect(|y| w(y - xa, xb), xt)
}

pub fn gamma_oracle(xa: f64, xb: f64, xt: f64) -> f64 {
    mixture_expect(|y| w(y - xa, xb) * y, xt)
}

pub fn s_oracle(xa: f64, xb: f64, xt: f64) -> f64 {
    0.5 * (normal_expect(|y| w(y - xa, xb), xt) - normal_expect(|y| w(y - xa, xb), -xt))
}

pub fn r_oracle(xb: f64, x: f64) -> f64 {
    0.5 * normal_expect(|y| w(y - x, xb) * y, 0.0)
}

pub fn f_oracle(xb: f64, xt: f64) -> f64 {
    normal_expect(|z| (z * xb).tanh() * z, xt)
}

pub fn k_oracle(x: f64, xb: f64) -> f64 {
    normal_expect(|y| 0.5 * (y * xb).tanh(), x)
}
