use emlab::geometry::{planar_reduce, random_orthogonal, whiten, whiten_vector};
use emlab::{ABState, EmError, MixtureModel, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, d)
}

fn config() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, u64)> {
    (1usize..=6).prop_flat_map(|d| (vec_strategy(d), vec_strategy(d), vec_strategy(d), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn planar_scalars_are_rotation_invariant((a, b, t, seed) in config()) {
        let d = a.len();
        let b = Vector::from_column_slice(&b);
        prop_assume!(b.norm() > 1e-3);
        let state = ABState { a: Vector::from_column_slice(&a), b };
        let model = MixtureModel::new(Vector::from_column_slice(&t)).unwrap();
        let q = random_orthogonal(d, &mut ChaCha20Rng::seed_from_u64(seed));
        let turned = ABState { a: &q * &state.a, b: &q * &state.b };
        let turned_model = MixtureModel::new(&q * model.theta_star()).unwrap();
        let x = planar_reduce(&state, &model).unwrap();
        let y = planar_reduce(&turned, &turned_model).unwrap();
        prop_assert!((x.x_a - y.x_a).abs() < 1e-12);
        prop_assert!((x.norm_b - y.norm_b).abs() < 1e-12);
        prop_assert!((x.theta1 - y.theta1).abs() < 1e-12);
        prop_assert!((x.theta2 - y.theta2).abs() < 1e-12);
    }

    #[test]
    fn frame_reconstructs_theta((a, b, t, _seed) in config()) {
        let b = Vector::from_column_slice(&b);
        prop_assume!(b.norm() > 1e-3);
        let state = ABState { a: Vector::from_column_slice(&a), b };
        let model = MixtureModel::new(Vector::from_column_slice(&t)).unwrap();
        let c = planar_reduce(&state, &model).unwrap();
        prop_assert!(c.theta2 >= 0.0);
        let mut rebuilt = &c.e1 * c.theta1;
        if let Some(e2) = &c.e2 {
            prop_assert!(e2.dot(&c.e1).abs() < 1e-12);
            prop_assert!((e2.norm() - 1.0).abs() < 1e-12);
            rebuilt += e2 * c.theta2;
        }
        prop_assert!((rebuilt - model.theta_star()).amax() < 1e-12);
    }

    #[test]
    fn negating_a_negates_its_coordinate((a, b, t, _seed) in config()) {
        let b = Vector::from_column_slice(&b);
        prop_assume!(b.norm() > 1e-3);
        let model = MixtureModel::new(Vector::from_column_slice(&t)).unwrap();
        let a = Vector::from_column_slice(&a);
        let x = planar_reduce(&ABState { a: a.clone(), b: b.clone() }, &model).unwrap();
        let y = planar_reduce(&ABState { a: -a, b: b.clone() }, &model).unwrap();
        prop_assert_eq!(x.x_a, -y.x_a);
        let z = planar_reduce(&ABState { a: Vector::zeros(b.len()), b: -b }, &model).unwrap();
        prop_assert!((x.theta1 + z.theta1).abs() < 1e-12);
    }
}

#[test]
fn orthogonal_matrices_are_orthogonal() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for d in 1..=8 {
        let q = random_orthogonal(d, &mut rng);
        assert!((q.transpose() * &q - DMatrix::identity(d, d)).amax() < 1e-12);
    }
}

#[test]
fn whitening_undoes_a_known_covariance() {
    let sigma = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
    let root = sigma.clone().cholesky().unwrap().l();
    let v = Vector::from_column_slice(&[0.3, -1.2]);
    let w = whiten_vector(&(&root * &v), &sigma).unwrap();
    // Σ^{-1/2} L is orthogonal, so norms are preserved.
    assert!((w.norm() - v.norm()).abs() < 1e-12);

    let data = DMatrix::from_fn(500, 2, |i, j| ((i * 31 + j * 17) % 23) as f64 - 11.0);
    let coloured = &data * root.transpose();
    let white = whiten(&coloured, &sigma).unwrap();
    let gram_white = white.transpose() * &white;
    let gram_raw = data.transpose() * &data;
    assert!((gram_white.trace() - gram_raw.trace()).abs() < 1e-8 * gram_raw.trace());
}

#[test]
fn singular_covariance_is_rejected() {
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
    assert_eq!(whiten_vector(&Vector::zeros(2), &sigma), Err(EmError::NotPositiveDefinite));
    let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    assert_eq!(whiten_vector(&Vector::zeros(2), &asym), Err(EmError::NotPositiveDefinite));
}
