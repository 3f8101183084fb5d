//! 2×2 complex linear algebra for single polarization qubits.
//!
//! The computational frame is H/V. Bases are fixed as
//! X ↔ {D, A}, Y ↔ {R, L}, Z ↔ {H, V}, and the first polarization of
//! each pair (H, D, R) carries eigenvalue +1.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for invariant checks on constructed objects.
pub const STATE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    m: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    /// Builds a matrix, rejecting NaN or infinite entries.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let m = Self::from_rows([[a, b], [c, d]]);
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::NonFinite)
        }
    }

    pub(crate) const fn from_rows(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::from_rows([[a, ZERO], [ZERO, d]])
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::from_rows([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Equality up to a global phase factor e^{iα}.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        // Align phases on the largest entry of `other`.
        let (r, c) = (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .max_by(|&(r1, c1), &(r2, c2)| other.m[r1][c1].norm().total_cmp(&other.m[r2][c2].norm()))
            .unwrap();
        let a = self.m[r][c];
        let b = other.m[r][c];
        if b.norm() <= tol {
            return self.approx_eq(other, tol);
        }
        if a.norm() <= tol {
            return false;
        }
        let phase = (b / a) / (b / a).norm();
        self.scale(phase).approx_eq(other, tol)
    }

    /// ‖U·U† − I‖ measured entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        (*self * self.adjoint()).max_abs_diff(&Self::identity())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] += rhs.m[r][c];
            }
        }
        out
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(-ONE)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut m = [[ZERO; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self::from_rows(m)
    }
}

impl Mul<f64> for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

/// One of the three mutually unbiased polarization bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisAxis {
    X,
    Y,
    Z,
}

impl BasisAxis {
    pub const ALL: [BasisAxis; 3] = [BasisAxis::X, BasisAxis::Y, BasisAxis::Z];

    pub fn index(self) -> usize {
        match self {
            BasisAxis::X => 0,
            BasisAxis::Y => 1,
            BasisAxis::Z => 2,
        }
    }
}

impl fmt::Display for BasisAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BasisAxis::X => "X",
            BasisAxis::Y => "Y",
            BasisAxis::Z => "Z",
        };
        f.write_str(s)
    }
}

/// Measurement outcome sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Eigenvalue {
    Plus,
    Minus,
}

impl Eigenvalue {
    pub fn value(self) -> f64 {
        match self {
            Eigenvalue::Plus => 1.0,
            Eigenvalue::Minus => -1.0,
        }
    }
}

/// The six polarization eigenstates, in the order H, V, D, A, R, L.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl Polarization {
    pub const ALL: [Polarization; 6] = [
        Polarization::H,
        Polarization::V,
        Polarization::D,
        Polarization::A,
        Polarization::R,
        Polarization::L,
    ];

    pub fn from_basis(axis: BasisAxis, sign: Eigenvalue) -> Self {
        use Polarization::*;
        match (axis, sign) {
            (BasisAxis::Z, Eigenvalue::Plus) => H,
            (BasisAxis::Z, Eigenvalue::Minus) => V,
            (BasisAxis::X, Eigenvalue::Plus) => D,
            (BasisAxis::X, Eigenvalue::Minus) => A,
            (BasisAxis::Y, Eigenvalue::Plus) => R,
            (BasisAxis::Y, Eigenvalue::Minus) => L,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn axis(self) -> BasisAxis {
        match self {
            Polarization::H | Polarization::V => BasisAxis::Z,
            Polarization::D | Polarization::A => BasisAxis::X,
            Polarization::R | Polarization::L => BasisAxis::Y,
        }
    }

    pub fn sign(self) -> Eigenvalue {
        match self {
            Polarization::H | Polarization::D | Polarization::R => Eigenvalue::Plus,
            _ => Eigenvalue::Minus,
        }
    }

    /// Unit Bloch vector (x, y, z).
    pub fn bloch(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.axis().index()] = self.sign().value();
        v
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Pauli observable for `axis` in the H/V frame.
pub fn pauli(axis: BasisAxis) -> ComplexMatrix2 {
    match axis {
        BasisAxis::X => ComplexMatrix2::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        BasisAxis::Y => ComplexMatrix2::from_rows([[ZERO, -I], [I, ZERO]]),
        BasisAxis::Z => ComplexMatrix2::diag(ONE, -ONE),
    }
}

/// Density matrix of a single polarization qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationState {
    density: ComplexMatrix2,
}

impl PolarizationState {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(density: ComplexMatrix2) -> Result<Self> {
        if !density.is_finite() {
            return Err(Error::NonFinite);
        }
        if density.hermiticity_defect() > STATE_TOL {
            return Err(Error::InvalidState("density matrix is not Hermitian".into()));
        }
        let tr = density.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        // For a unit-trace Hermitian 2×2, min eigenvalue = (1 - sqrt(1 - 4 det)) / 2.
        let det = density.det().re;
        let min_eig = 0.5 * (1.0 - (1.0 - 4.0 * det).max(0.0).sqrt());
        if min_eig < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { density })
    }

    /// ρ = (I + r·σ)/2 for a Bloch vector of length ≤ 1.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self> {
        let len = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(len <= 1.0 + STATE_TOL) {
            return Err(Error::InvalidState(format!("Bloch vector length {len} exceeds 1")));
        }
        let mut m = ComplexMatrix2::identity();
        for axis in BasisAxis::ALL {
            m = m + pauli(axis) * r[axis.index()];
        }
        Self::new(m * 0.5)
    }

    pub fn maximally_mixed() -> Self {
        Self { density: ComplexMatrix2::identity() * 0.5 }
    }

    pub fn density(&self) -> &ComplexMatrix2 {
        &self.density
    }

    /// Tr[W ρ] for a Pauli observable.
    pub fn expect(&self, axis: BasisAxis) -> f64 {
        self.expect_matrix(&pauli(axis))
    }

    pub fn expect_matrix(&self, observable: &ComplexMatrix2) -> f64 {
        (*observable * self.density).trace().re
    }

    pub fn bloch(&self) -> [f64; 3] {
        [self.expect(BasisAxis::X), self.expect(BasisAxis::Y), self.expect(BasisAxis::Z)]
    }

    pub fn purity(&self) -> f64 {
        (self.density * self.density).trace().re
    }

    /// Convex combination λ·self + (1−λ)·other.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::OutOfRange { name: "lambda", value: lambda, allowed: "[0, 1]" });
        }
        Self::new(self.density * lambda + other.density * (1.0 - lambda))
    }

    pub(crate) fn from_density_unchecked(density: ComplexMatrix2) -> Self {
        Self { density }
    }
}

/// Pure eigenstate of `pauli(axis)` with the given eigenvalue.
pub fn eigenstate(axis: BasisAxis, sign: Eigenvalue) -> PolarizationState {
    let s = sign.value();
    let h = FRAC_1_SQRT_2;
    // Ket amplitudes in the H/V frame.
    let ket = match axis {
        BasisAxis::Z if s > 0.0 => [ONE, ZERO],
        BasisAxis::Z => [ZERO, ONE],
        BasisAxis::X => [Complex64::new(h, 0.0), Complex64::new(s * h, 0.0)],
        BasisAxis::Y => [Complex64::new(h, 0.0), Complex64::new(0.0, s * h)],
    };
    let rho = ComplexMatrix2::from_rows([
        [ket[0] * ket[0].conj(), ket[0] * ket[1].conj()],
        [ket[1] * ket[0].conj(), ket[1] * ket[1].conj()],
    ]);
    PolarizationState::from_density_unchecked(rho)
}

/// ⟨W_A ⊗ W_B⟩ on the product state ρ_A ⊗ ρ_B.
pub fn expectation(
    obs_a: BasisAxis,
    obs_b: BasisAxis,
    state_a: &PolarizationState,
    state_b: &PolarizationState,
) -> f64 {
    state_a.expect(obs_a) * state_b.expect(obs_b)
}

/// Jones matrix of a linear retarder with the given retardance, fast axis at `angle`.
fn retarder(angle: f64, retardance: f64) -> ComplexMatrix2 {
    let (s, c) = angle.sin_cos();
    let rot = |s: f64, c: f64| {
        ComplexMatrix2::from_rows([
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ])
    };
    let half = retardance / 2.0;
    let phase = ComplexMatrix2::diag(Complex64::from_polar(1.0, -half), Complex64::from_polar(1.0, half));
    rot(s, c) * phase * rot(-s, c)
}

/// Quarter-wave plate with fast axis at `fast_axis_angle`.
pub fn waveplate_quarter(fast_axis_angle: f64) -> ComplexMatrix2 {
    retarder(fast_axis_angle, std::f64::consts::FRAC_PI_2)
}

/// Half-wave plate with fast axis at `fast_axis_angle`.
pub fn waveplate_half(fast_axis_angle: f64) -> ComplexMatrix2 {
    retarder(fast_axis_angle, std::f64::consts::PI)
}

/// QWP(π/4)·HWP(θ_H)·QWP(π/4).
///
/// Equals diag(e^{−2iθ_H}, −e^{2iθ_H}) up to a global phase. Conjugating
/// the X/Y observables with it rotates them by 4θ_H + π, so the plate
/// angle that leaves the frame untouched is θ_H = π/4.
pub fn rotator_composite(hwp_angle: f64) -> ComplexMatrix2 {
    let q = waveplate_quarter(std::f64::consts::FRAC_PI_4);
    q * waveplate_half(hwp_angle) * q
}

/// Waveplate composite realizing a frame rotation by `phi` about Z.
pub fn frame_rotator(phi: f64) -> ComplexMatrix2 {
    rotator_composite(phi / 4.0 + std::f64::consts::FRAC_PI_4)
}

/// U·W·U† for a unitary U.
pub fn conjugate_observable(u: &ComplexMatrix2, axis: BasisAxis) -> Result<ComplexMatrix2> {
    let defect = u.unitarity_defect();
    if !(defect <= STATE_TOL) {
        return Err(Error::NotUnitary(defect));
    }
    Ok(*u * pauli(axis) * u.adjoint())
}
