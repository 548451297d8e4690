use nalgebra::DVector;
use okfeb::learners::{lms_step, LinearModel, Lms, Pegasos};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_ball_point(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let n = v.norm();
    if n > 1.0 {
        v / n
    } else {
        v
    }
}

#[test]
fn pegasos_weights_stay_in_the_optimal_ball() {
    for (seed, c) in [(1u64, 0.1), (2, 1.0), (3, 10.0), (4, 100.0)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut svm = Pegasos::new(5, c).unwrap();
        for _ in 0..1000 {
            let z = unit_ball_point(&mut rng, 5);
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            svm.step(&z, y).unwrap();
            assert!(svm.model.w.norm() <= 1.1 * c.sqrt(), "C = {c}: ‖w‖ = {}", svm.model.w.norm());
        }
    }
}

#[test]
fn pegasos_rejects_non_binary_labels() {
    let mut svm = Pegasos::new(2, 1.0).unwrap();
    assert!(svm.step(&DVector::from_vec(vec![0.1, 0.2]), 0.5).is_err());
    assert!(Pegasos::<f64>::new(2, 0.0).is_err());
}

#[test]
fn lms_stays_bounded_below_the_stability_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lambda = 1e-2;
    let max_sq = 4.0;
    let mu = 0.9 / (max_sq + lambda);
    let mut m = LinearModel::zeros(4);
    for _ in 0..10_000 {
        let z = unit_ball_point(&mut rng, 4) * 2.0;
        let y = rng.random_range(-3.0..3.0);
        lms_step(&mut m, &z, y, mu, lambda).unwrap();
        assert!(m.w.iter().all(|v| v.is_finite()));
        assert!(m.w.norm() <= 100.0, "‖w‖ = {}", m.w.norm());
    }
}

#[test]
fn lms_learns_a_noiseless_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let target = DVector::from_vec(vec![0.5, -1.0, 2.0]);
    let mut lms = Lms::new(3, 0.0).unwrap();
    for _ in 0..5000 {
        let z = unit_ball_point(&mut rng, 3);
        lms.step(&z, target.dot(&z)).unwrap();
    }
    assert!((&lms.model.w - &target).norm() < 1e-3, "{}", lms.model.w);
}
