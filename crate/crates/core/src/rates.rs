//! Closed-form QBERs, the frame-independent `C` parameter, Eve's
//! information bound, and asymptotic secret-key rates per sifted bit.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{averaged_correlation, sinc, FrameParams};
use crate::error::{Error, Result};
use crate::polarization::{eigenstate, BasisAxis, Eigenvalue};

/// Absolute tolerance (radians) of the zero-rate threshold search.
pub const THRESHOLD_TOL: f64 = 1e-6;

/// Upper end of the fluctuation search interval, radians.
pub const FLUCTUATION_SEARCH_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolKind {
    #[serde(rename = "BB84_XY")]
    Bb84Xy,
    #[serde(rename = "BB84_XZ")]
    Bb84Xz,
    #[serde(rename = "SIX_STATE")]
    SixState,
    #[serde(rename = "RFI")]
    Rfi,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 4] =
        [ProtocolKind::Bb84Xy, ProtocolKind::Bb84Xz, ProtocolKind::SixState, ProtocolKind::Rfi];

    /// Bases whose QBERs are averaged; for RFI, the key basis only.
    pub fn bases(self) -> &'static [BasisAxis] {
        match self {
            ProtocolKind::Bb84Xy => &[BasisAxis::X, BasisAxis::Y],
            ProtocolKind::Bb84Xz => &[BasisAxis::X, BasisAxis::Z],
            ProtocolKind::SixState => &[BasisAxis::X, BasisAxis::Y, BasisAxis::Z],
            ProtocolKind::Rfi => &[BasisAxis::Z],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Bb84Xy => "BB84_XY",
            ProtocolKind::Bb84Xz => "BB84_XZ",
            ProtocolKind::SixState => "SIX_STATE",
            ProtocolKind::Rfi => "RFI",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "BB84_XY" => Ok(ProtocolKind::Bb84Xy),
            "BB84_XZ" => Ok(ProtocolKind::Bb84Xz),
            "SIX_STATE" | "SIX" | "SIXSTATE" => Ok(ProtocolKind::SixState),
            "RFI" => Ok(ProtocolKind::Rfi),
            _ => Err(Error::InvalidConfig(format!("unknown protocol '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberReport {
    pub q_x: f64,
    pub q_y: f64,
    pub q_z: f64,
    pub q_protocol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfiSecurityParams {
    pub c: f64,
    pub u: f64,
    pub v: f64,
    pub i_eve: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateReport {
    /// Raw formula value, negative when no key can be distilled.
    pub rate: f64,
    pub protocol: ProtocolKind,
    pub inputs: FrameParams,
}

impl KeyRateReport {
    pub fn clamped(&self) -> f64 {
        self.rate.max(0.0)
    }
}

/// Which frame variable a threshold search sweeps; the other is held at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    Rotation,
    Fluctuation,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Rotation => "ROTATION",
            SweepAxis::Fluctuation => "FLUCTUATION",
        })
    }
}

/// Per-basis QBER, `(1 − ⟨W_A W_B⟩)/2` with the fluctuation-averaged correlator.
pub fn qber_basis(axis: BasisAxis, params: &FrameParams) -> f64 {
    let prepared = eigenstate(axis, Eigenvalue::Plus);
    // Valid FrameParams cannot make the channel reject its input.
    let corr = averaged_correlation(axis, axis, params, &prepared).expect("valid frame parameters");
    (1.0 - corr) / 2.0
}

fn per_basis(params: &FrameParams) -> [f64; 3] {
    BasisAxis::ALL.map(|a| qber_basis(a, params))
}

/// Equal-weight average of `per_basis` QBERs over the protocol's bases.
pub fn average_qber(protocol: ProtocolKind, q: &[f64; 3]) -> Result<f64> {
    if protocol == ProtocolKind::Rfi {
        return Err(Error::NoAveragedQber(protocol));
    }
    let bases = protocol.bases();
    Ok(bases.iter().map(|a| q[a.index()]).sum::<f64>() / bases.len() as f64)
}

pub fn qber_protocol(protocol: ProtocolKind, params: &FrameParams) -> Result<QberReport> {
    let q = per_basis(params);
    let q_protocol = average_qber(protocol, &q)?;
    Ok(QberReport { q_x: q[0], q_y: q[1], q_z: q[2], q_protocol })
}

/// Shannon binary entropy in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutOfRange { name: "x", value: x, allowed: "[0, 1]" });
    }
    Ok(h2(x))
}

// Entropy on an argument already known to lie in [0, 1] up to rounding.
fn h2(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// BB84 rate `1 − 2H[Q]`.
pub fn bb84_rate(q: f64) -> f64 {
    1.0 - 2.0 * h2(q)
}

/// Six-state rate `1 − H[Q] − Q − (1−Q)·H[(1 − 3Q/2)/(1−Q)]`.
///
/// The inner argument is clamped into [0, 1]; it leaves that range only for
/// Q > 2/3, which this channel reaches only for rotations beyond π/2.
pub fn six_state_rate(q: f64) -> f64 {
    let inner = if q >= 1.0 { 0.0 } else { (1.0 - 1.5 * q) / (1.0 - q) };
    1.0 - h2(q) - q - (1.0 - q) * h2(inner)
}

/// `2(1 − 2Q_Z)² sinc(δ)²`; independent of θ.
pub fn c_parameter(params: &FrameParams) -> f64 {
    let qz = qber_basis(BasisAxis::Z, params);
    2.0 * (1.0 - 2.0 * qz).powi(2) * sinc(params.delta()).powi(2)
}

/// Sum of the four squared X/Y cross-correlators, each fluctuation-averaged.
pub fn c_parameter_from_correlators(params: &FrameParams) -> f64 {
    let xy = [BasisAxis::X, BasisAxis::Y];
    let mut c = 0.0;
    for a in xy {
        let prepared = eigenstate(a, Eigenvalue::Plus);
        for b in xy {
            let e = averaged_correlation(a, b, params, &prepared).expect("valid frame parameters");
            c += e * e;
        }
    }
    c
}

fn rfi_security(q_z: f64, c: f64) -> RfiSecurityParams {
    let half_c = c / 2.0;
    let u = (half_c.sqrt() / (1.0 - q_z)).min(1.0);
    // v > 0 only when u saturates; a correlation cannot exceed 1.
    let v = if q_z == 0.0 {
        0.0
    } else {
        ((half_c - (1.0 - q_z).powi(2) * u * u).max(0.0).sqrt() / q_z).min(1.0)
    };
    let mut i_eve = (1.0 - q_z) * h2((1.0 + u) / 2.0);
    if q_z > 0.0 {
        i_eve += q_z * h2((1.0 + v) / 2.0);
    }
    RfiSecurityParams { c, u, v, i_eve }
}

/// Eve's information bound from the key-basis QBER and `C`.
pub fn eve_information(q_z: f64, c: f64) -> Result<RfiSecurityParams> {
    if !(0.0..0.5).contains(&q_z) {
        return Err(Error::OutOfRange { name: "q_z", value: q_z, allowed: "[0, 1/2)" });
    }
    if !(0.0..=2.0).contains(&c) {
        return Err(Error::OutOfRange { name: "c", value: c, allowed: "[0, 2]" });
    }
    Ok(rfi_security(q_z, c))
}

/// RFI rate `1 − H[Q_Z] − I_E[Q_Z, C]`.
pub fn rfi_rate(q_z: f64, c: f64) -> f64 {
    1.0 - h2(q_z) - rfi_security(q_z, c).i_eve
}

pub fn key_rate(protocol: ProtocolKind, params: &FrameParams) -> KeyRateReport {
    let q = per_basis(params);
    let rate = match protocol {
        ProtocolKind::Bb84Xy | ProtocolKind::Bb84Xz => bb84_rate(average_qber(protocol, &q).unwrap()),
        ProtocolKind::SixState => six_state_rate(average_qber(protocol, &q).unwrap()),
        ProtocolKind::Rfi => rfi_rate(q[2], c_parameter(params)),
    };
    KeyRateReport { rate, protocol, inputs: *params }
}

/// Bracketing bisection for a sign change of `f` on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCrossing);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest angle where the raw key rate falls through zero, sweeping
/// either θ over (0, π/2] or δ over (0, 2] rad with the other held at 0.
pub fn find_zero_threshold(protocol: ProtocolKind, p: f64, sweep: SweepAxis) -> Result<f64> {
    let base = FrameParams::new(p, 0.0, 0.0)?;
    let rate_at = |x: f64| {
        let params = match sweep {
            SweepAxis::Rotation => FrameParams::new(p, x, 0.0),
            SweepAxis::Fluctuation => FrameParams::new(p, 0.0, x),
        }
        .expect("search stays in the valid domain");
        key_rate(protocol, &params).rate
    };
    if key_rate(protocol, &base).rate <= 0.0 {
        return Err(Error::NoCrossing);
    }
    let hi = match sweep {
        SweepAxis::Rotation => FRAC_PI_2,
        SweepAxis::Fluctuation => FLUCTUATION_SEARCH_MAX,
    };
    // Coarse scan so the first crossing is bracketed even if the rate turns back up.
    const SCAN: usize = 256;
    let mut prev = 0.0;
    for k in 1..=SCAN {
        let x = hi * k as f64 / SCAN as f64;
        if rate_at(x) <= 0.0 {
            return bisect(rate_at, prev, x, THRESHOLD_TOL);
        }
        prev = x;
    }
    Err(Error::NoCrossing)
}

/// The six (protocol, sweep) thresholds for the non-RFI protocols, as multiples of π.
pub fn threshold_table(p: f64) -> Vec<(ProtocolKind, SweepAxis, Result<f64>)> {
    let mut out = Vec::new();
    for sweep in [SweepAxis::Rotation, SweepAxis::Fluctuation] {
        for protocol in [ProtocolKind::Bb84Xy, ProtocolKind::Bb84Xz, ProtocolKind::SixState] {
            out.push((protocol, sweep, find_zero_threshold(protocol, p, sweep)));
        }
    }
    out
}
