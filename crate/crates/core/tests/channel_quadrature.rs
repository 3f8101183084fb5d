use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rfiqkd::channel::{averaged_correlation, depolarize, sinc, FrameParams};
use rfiqkd::polarization::{conjugate_observable, frame_rotator, BasisAxis, PolarizationState};

/// ⟨W_A W_B(φ)⟩ through the Jones route: Bob's observable is the waveplate
/// conjugate of the bare Pauli operator.
fn jones_correlation(obs_a: BasisAxis, obs_b: BasisAxis, p: f64, phi: f64, state: &PolarizationState) -> f64 {
    let rho_b = depolarize(state, p).unwrap();
    let w_b = conjugate_observable(&frame_rotator(phi), obs_b).unwrap();
    state.expect(obs_a) * rho_b.expect_matrix(&w_b)
}

fn midpoint_average(f: impl Fn(f64) -> f64, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    (0..panels).map(|k| f(lo + (k as f64 + 0.5) * h)).sum::<f64>() / panels as f64
}

fn random_state(rng: &mut ChaCha8Rng) -> PolarizationState {
    let r: f64 = rng.random::<f64>().cbrt();
    let t = (1.0 - 2.0 * rng.random::<f64>()).acos();
    let f = 2.0 * PI * rng.random::<f64>();
    PolarizationState::from_bloch([r * t.sin() * f.cos(), r * t.sin() * f.sin(), r * t.cos()]).unwrap()
}

#[test]
fn closed_form_matches_numerical_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let obs_a = BasisAxis::ALL[rng.random_range(0..3)];
        let obs_b = BasisAxis::ALL[rng.random_range(0..3)];
        let p = rng.random_range(0.0..=1.0);
        let theta = rng.random_range(0.0..PI / 2.0);
        let delta = rng.random_range(0.0..PI);
        let state = random_state(&mut rng);
        let params = FrameParams::new(p, theta, delta).unwrap();
        let closed = averaged_correlation(obs_a, obs_b, &params, &state).unwrap();
        let numeric = midpoint_average(
            |phi| jones_correlation(obs_a, obs_b, p, phi, &state),
            theta - delta,
            theta + delta,
            4096,
        );
        worst = worst.max((closed - numeric).abs());
    }
    assert!(worst < 1e-6, "worst deviation {worst}");
}

#[test]
fn zero_fluctuation_reduces_to_fixed_rotation() {
    let state = PolarizationState::from_bloch([0.6, -0.3, 0.5]).unwrap();
    for k in 0..16 {
        let theta = 0.1 * k as f64;
        let params = FrameParams::new(0.2, theta, 0.0).unwrap();
        for a in BasisAxis::ALL {
            for b in BasisAxis::ALL {
                let avg = averaged_correlation(a, b, &params, &state).unwrap();
                let fixed = jones_correlation(a, b, 0.2, theta, &state);
                assert!((avg - fixed).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sinc_is_continuous_through_zero() {
    assert_eq!(sinc(0.0), 1.0);
    for k in 1..200 {
        let x = 10f64.powf(-(k as f64) / 10.0);
        assert!((sinc(x) - x.sin() / x).abs() < 1e-15 || x < 1e-4);
        assert!((sinc(x) - sinc(-x)).abs() == 0.0);
        assert!(sinc(x) <= 1.0 && sinc(x) > 1.0 - x * x / 6.0 - 1e-16);
    }
    assert!(sinc(PI).abs() < 1e-16);
}
