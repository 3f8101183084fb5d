use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rfiqkd::polarization::{
    conjugate_observable, frame_rotator, pauli, rotator_composite, waveplate_half, waveplate_quarter, BasisAxis,
    ComplexMatrix2, PolarizationState,
};

fn rotated_x(phi: f64) -> ComplexMatrix2 {
    pauli(BasisAxis::X) * phi.cos() + pauli(BasisAxis::Y) * phi.sin()
}

fn rotated_y(phi: f64) -> ComplexMatrix2 {
    pauli(BasisAxis::Y) * phi.cos() - pauli(BasisAxis::X) * phi.sin()
}

#[test]
fn composite_conjugation_rotates_xy_on_a_64_point_grid() {
    for k in 0..64 {
        let theta_h = PI * k as f64 / 64.0;
        let u = rotator_composite(theta_h);
        let phi = 4.0 * theta_h + PI;
        let x = conjugate_observable(&u, BasisAxis::X).unwrap();
        let y = conjugate_observable(&u, BasisAxis::Y).unwrap();
        let z = conjugate_observable(&u, BasisAxis::Z).unwrap();
        assert!(x.max_abs_diff(&rotated_x(phi)) < 1e-10, "X at θ_H={theta_h}");
        assert!(y.max_abs_diff(&rotated_y(phi)) < 1e-10, "Y at θ_H={theta_h}");
        assert!(z.max_abs_diff(&pauli(BasisAxis::Z)) < 1e-10, "Z at θ_H={theta_h}");
    }
}

#[test]
fn frame_rotator_matches_axis_rotation() {
    for k in 0..64 {
        let phi = -PI + 2.0 * PI * k as f64 / 63.0;
        let u = frame_rotator(phi);
        let x = conjugate_observable(&u, BasisAxis::X).unwrap();
        assert!(x.max_abs_diff(&rotated_x(phi)) < 1e-10, "φ={phi}");
    }
}

#[test]
fn composite_is_diagonal_up_to_phase() {
    for k in 0..32 {
        let t = PI * k as f64 / 32.0;
        let expected = ComplexMatrix2::diag(Complex64::from_polar(1.0, -2.0 * t), -Complex64::from_polar(1.0, 2.0 * t));
        assert!(rotator_composite(t).approx_eq_up_to_phase(&expected, 1e-12));
    }
}

#[test]
fn waveplates_are_unitary() {
    for k in 0..16 {
        let a = 0.37 * k as f64;
        assert!(waveplate_quarter(a).unitarity_defect() < 1e-12);
        assert!(waveplate_half(a).unitarity_defect() < 1e-12);
    }
}

#[test]
fn conjugation_preserves_spectrum() {
    for k in 0..32 {
        let u = rotator_composite(0.1 * k as f64);
        for axis in BasisAxis::ALL {
            let w = conjugate_observable(&u, axis).unwrap();
            assert!(w.trace().norm() < 1e-12);
            assert!((w.det() + Complex64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(w.hermiticity_defect() < 1e-12);
        }
    }
}

#[test]
fn non_unitary_conjugation_is_rejected() {
    let m = pauli(BasisAxis::X) * 2.0;
    assert!(conjugate_observable(&m, BasisAxis::Z).is_err());
}

fn bloch() -> impl Strategy<Value = [f64; 3]> {
    (0.0..1.0f64, 0.0..PI, 0.0..2.0 * PI).prop_map(|(r, t, f)| [r * t.sin() * f.cos(), r * t.sin() * f.sin(), r * t.cos()])
}

proptest! {
    #[test]
    fn expectation_is_linear_in_mixtures(a in bloch(), b in bloch(), lambda in 0.0..=1.0f64) {
        let sa = PolarizationState::from_bloch(a).unwrap();
        let sb = PolarizationState::from_bloch(b).unwrap();
        let mixed = sa.mix(&sb, lambda).unwrap();
        for axis in BasisAxis::ALL {
            let direct = lambda * sa.expect(axis) + (1.0 - lambda) * sb.expect(axis);
            prop_assert!((mixed.expect(axis) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_preserves_purity(r in bloch(), phi in -PI..PI) {
        let s = PolarizationState::from_bloch(r).unwrap();
        let u = frame_rotator(phi);
        let rotated = PolarizationState::new(u * *s.density() * u.adjoint()).unwrap();
        prop_assert!((rotated.purity() - s.purity()).abs() < 1e-12);
    }
}
