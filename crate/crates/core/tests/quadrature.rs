mod common;

use emlab::gauss_quad::{integrate_against_mixture, integrate_against_normal, std_normal_cdf};
use emlab::kernels::{eval_gamma, eval_p, eval_s, KernelArgs};
use emlab::QuadratureSpec;
use proptest::prelude::*;

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixture_has_unit_mass(t in 0.0f64..5.0) {
        let m = integrate_against_mixture(|_| 1.0, t, &spec()).unwrap();
        prop_assert!((m - 1.0).abs() <= spec().abs_tol);
    }

    #[test]
    fn mixture_mean_vanishes(t in -5.0f64..5.0) {
        let m = integrate_against_mixture(|y| y, t, &spec()).unwrap();
        prop_assert!(m.abs() <= spec().abs_tol);
    }

    #[test]
    fn second_moment(t in -4.0f64..4.0) {
        let m = integrate_against_mixture(|y| y * y, t, &spec()).unwrap();
        prop_assert!((m - (1.0 + t * t)).abs() <= 1e-11);
    }

    #[test]
    fn cdf_is_monotone(x in -30.0f64..30.0, dx in 1e-6f64..5.0) {
        prop_assert!(std_normal_cdf(x) <= std_normal_cdf(x + dx));
        if x > -8.0 && x < 8.0 {
            prop_assert!(std_normal_cdf(x) < std_normal_cdf(x + dx));
        }
    }

    #[test]
    fn matches_simpson_on_smooth_integrands(c in -3.0f64..3.0, k in 0.1f64..3.0) {
        let f = |y: f64| (k * y).sin() + (k * y).tanh() * y;
        let q = integrate_against_normal(f, c, &spec()).unwrap();
        prop_assert!((q - common::normal_expect(f, c)).abs() < 1e-10);
    }
}

#[test]
fn node_doubling_is_invisible_on_kernel_integrands() {
    let base = spec();
    let doubled = QuadratureSpec { nodes_per_lobe: 2 * base.nodes_per_lobe, ..base };
    let mut worst: f64 = 0.0;
    for i in 0..100u32 {
        // Deterministic scatter over [0, 3]^3.
        let u = |k: u32| 3.0 * (((i * 7919 + k * 104_729) % 1000) as f64 / 999.0);
        let args = KernelArgs::new(u(1), u(2), u(3)).unwrap();
        for f in [eval_p, eval_gamma, eval_s] {
            worst = worst.max((f(args, &base).unwrap() - f(args, &doubled).unwrap()).abs());
        }
    }
    assert!(worst <= base.abs_tol, "worst N vs 2N gap {worst:e}");
}

#[test]
fn cdf_reference_values() {
    // Values of Φ from high-precision evaluation.
    let cases = [
        (-1.0, 0.15865525393145705),
        (0.5, 0.6914624612740131),
        (2.0, 0.9772498680518208),
        (-5.0, 2.866515718791939e-7),
        (-10.0, 7.619853024160526e-24),
    ];
    for (x, want) in cases {
        assert!(((std_normal_cdf(x) - want) / want).abs() < 1e-14, "Φ({x})");
    }
}
