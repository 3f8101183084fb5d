//! Transmission channel: isotropic depolarizing noise plus a rotation of
//! Bob's X/Y axes about the shared Z axis, either fixed or fluctuating
//! uniformly over `[θ−δ, θ+δ]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polarization::{BasisAxis, ComplexMatrix2, PolarizationState};

/// Channel noise `p`, mean frame rotation `theta` and fluctuation half-width `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameParams {
    p: f64,
    theta: f64,
    delta: f64,
}

impl FrameParams {
    pub fn new(p: f64, theta: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange { name: "p", value: p, allowed: "[0, 1]" });
        }
        if !theta.is_finite() {
            return Err(Error::OutOfRange { name: "theta", value: theta, allowed: "finite values" });
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::OutOfRange { name: "delta", value: delta, allowed: "[0, ∞)" });
        }
        Ok(Self { p, theta, delta })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.p, theta, self.delta)
    }

    pub fn with_delta(self, delta: f64) -> Result<Self> {
        Self::new(self.p, self.theta, delta)
    }

    /// Fixed-rotation parameters at an instantaneous angle.
    pub fn at_phi(self, phi: f64) -> Result<Self> {
        Self::new(self.p, phi, 0.0)
    }
}

/// One realization φ of the instantaneous frame rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSample {
    pub phi: f64,
}

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// (1−p)·ρ + p·I/2.
pub fn depolarize(state: &PolarizationState, p: f64) -> Result<PolarizationState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, allowed: "[0, 1]" });
    }
    let rho = *state.density() * (1.0 - p) + ComplexMatrix2::identity() * (p / 2.0);
    PolarizationState::new(rho)
}

/// Coefficients on Alice's (X, Y, Z) Pauli axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisDecomposition(pub [f64; 3]);

impl AxisDecomposition {
    pub fn coefficient(&self, axis: BasisAxis) -> f64 {
        self.0[axis.index()]
    }

    pub fn dot(&self, bloch: &[f64; 3]) -> f64 {
        self.0.iter().zip(bloch).map(|(c, r)| c * r).sum()
    }

    /// Σ c_k σ_k as a matrix.
    pub fn to_matrix(&self) -> ComplexMatrix2 {
        BasisAxis::ALL
            .iter()
            .fold(ComplexMatrix2::identity() * 0.0, |acc, &a| {
                acc + crate::polarization::pauli(a) * self.coefficient(a)
            })
    }
}

/// Bob's axis expressed in Alice's frame at instantaneous rotation `phi`.
pub fn rotated_axis_decomposition(axis: BasisAxis, phi: f64) -> AxisDecomposition {
    let (s, c) = phi.sin_cos();
    match axis {
        BasisAxis::X => AxisDecomposition([c, s, 0.0]),
        BasisAxis::Y => AxisDecomposition([-s, c, 0.0]),
        BasisAxis::Z => AxisDecomposition([0.0, 0.0, 1.0]),
    }
}

/// Bob's axis averaged uniformly over φ ∈ [θ−δ, θ+δ].
pub fn averaged_axis_decomposition(axis: BasisAxis, theta: f64, delta: f64) -> AxisDecomposition {
    let AxisDecomposition(c) = rotated_axis_decomposition(axis, theta);
    let att = sinc(delta);
    match axis {
        BasisAxis::Z => AxisDecomposition(c),
        _ => AxisDecomposition([c[0] * att, c[1] * att, c[2]]),
    }
}

/// ⟨W_A W_B(φ)⟩ for Alice's preparation `state_a` sent through the channel at a fixed φ.
pub fn instantaneous_correlation(
    obs_a: BasisAxis,
    obs_b: BasisAxis,
    p: f64,
    phi: f64,
    state_a: &PolarizationState,
) -> Result<f64> {
    let rho_b = depolarize(state_a, p)?;
    Ok(state_a.expect(obs_a) * rotated_axis_decomposition(obs_b, phi).dot(&rho_b.bloch()))
}

/// Closed-form fluctuation average of ⟨W_A W_B(φ)⟩ over φ ∈ [θ−δ, θ+δ].
pub fn averaged_correlation(
    obs_a: BasisAxis,
    obs_b: BasisAxis,
    params: &FrameParams,
    state_a: &PolarizationState,
) -> Result<f64> {
    let rho_b = depolarize(state_a, params.p)?;
    let avg = averaged_axis_decomposition(obs_b, params.theta, params.delta);
    Ok(state_a.expect(obs_a) * avg.dot(&rho_b.bloch()))
}

/// Draws φ uniformly from `[θ−δ, θ+δ]`; exactly θ when δ = 0.
pub fn sample_frame<R: Rng + ?Sized>(params: &FrameParams, rng: &mut R) -> FrameSample {
    if params.delta == 0.0 {
        return FrameSample { phi: params.theta };
    }
    let lo = params.theta - params.delta;
    let hi = params.theta + params.delta;
    FrameSample { phi: rng.random_range(lo..=hi) }
}
