//! Pulse-by-pulse emulation of the prepare-and-measure link.
//!
//! Pulses are processed in fixed-size chunks. Chunk `k` draws from a
//! ChaCha8 stream `k` keyed by the session seed, so a tally depends only
//! on `(configs, frame, seed)` and never on how chunks are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{DetectorConfig, SourceConfig};
use super::poisson::PoissonTable;
use super::tally::{mix_sessions, SessionTally};
use crate::channel::{rotated_axis_decomposition, sample_frame, FrameParams};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::polarization::{BasisAxis, Eigenvalue, Polarization};

/// Pulses per random stream.
pub const CHUNK_PULSES: u64 = 1 << 16;

/// How the instantaneous rotation φ is drawn for each pulse.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameModel {
    /// φ uniform on `[θ−δ, θ+δ]`.
    Uniform(FrameParams),
    /// φ drawn uniformly from a finite set of angles.
    Discrete { p: f64, angles: Vec<f64> },
}

impl FrameModel {
    fn noise(&self) -> f64 {
        match self {
            FrameModel::Uniform(f) => f.p(),
            FrameModel::Discrete { p, .. } => *p,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            FrameModel::Uniform(_) => Ok(()),
            FrameModel::Discrete { p, angles } => {
                if angles.is_empty() || angles.iter().any(|a| !a.is_finite()) {
                    return Err(Error::InvalidConfig("discrete frame model needs finite angles".into()));
                }
                FrameParams::new(*p, 0.0, 0.0).map(|_| ())
            }
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            FrameModel::Uniform(f) => sample_frame(f, rng).phi,
            FrameModel::Discrete { angles, .. } => angles[rng.random_range(0..angles.len())],
        }
    }
}

/// SplitMix64 finalizer over `(seed, index)`; used to key sub-sessions.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct PulseKernel<'a> {
    detector: &'a DetectorConfig,
    frame: &'a FrameModel,
    poisson: PoissonTable,
    contraction: f64,
    basis_cdf: [f64; 2],
}

impl<'a> PulseKernel<'a> {
    fn new(source: &SourceConfig, detector: &'a DetectorConfig, frame: &'a FrameModel) -> Self {
        let b = detector.basis_probabilities;
        Self {
            detector,
            frame,
            poisson: PoissonTable::new(source.mean_photon_number),
            contraction: 1.0 - frame.noise(),
            basis_cdf: [b[0], b[0] + b[1]],
        }
    }

    fn pick_basis<R: Rng>(&self, rng: &mut R) -> BasisAxis {
        let u: f64 = rng.random();
        if u < self.basis_cdf[0] {
            BasisAxis::X
        } else if u < self.basis_cdf[1] {
            BasisAxis::Y
        } else {
            BasisAxis::Z
        }
    }

    fn run_chunk(&self, seed: u64, chunk: u64, pulses: u64, tally: &mut SessionTally) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let eff = self.detector.efficiency;
        let dark = self.detector.dark_count_prob;
        for _ in 0..pulses {
            let prepared = Polarization::ALL[rng.random_range(0..6)];
            let s = prepared.index();
            tally.sent[s] += 1;
            let photons = self.poisson.sample(rng.random());
            let mut clicks = 0u8;
            if photons > 0 {
                let phi = self.frame.sample(&mut rng);
                // Bloch vector of the depolarized prepared state.
                let mut bloch = prepared.bloch();
                bloch.iter_mut().for_each(|x| *x *= self.contraction);
                for _ in 0..photons {
                    let basis = self.pick_basis(&mut rng);
                    let e = rotated_axis_decomposition(basis, phi).dot(&bloch);
                    let plus = rng.random::<f64>() < 0.5 * (1.0 + e);
                    let detected = rng.random::<f64>() < eff;
                    if detected {
                        let sign = if plus { Eigenvalue::Plus } else { Eigenvalue::Minus };
                        clicks |= 1 << Polarization::from_basis(basis, sign).index();
                    }
                }
            }
            if dark > 0.0 {
                for d in 0..6 {
                    if rng.random::<f64>() < dark {
                        clicks |= 1 << d;
                    }
                }
            }
            match clicks.count_ones() {
                0 => tally.no_click[s] += 1,
                1 => tally.counts[s][clicks.trailing_zeros() as usize] += 1,
                n => {
                    tally.double_click[s] += 1;
                    let mut pick = rng.random_range(0..n);
                    let mut bits = clicks;
                    loop {
                        let d = bits.trailing_zeros() as usize;
                        if pick == 0 {
                            tally.counts[s][d] += 1;
                            break;
                        }
                        pick -= 1;
                        bits &= bits - 1;
                    }
                }
            }
        }
    }
}

/// Runs `source.pulse_count` pulses with φ drawn per pulse from `frame`.
pub fn run_session_with(
    source: &SourceConfig,
    detector: &DetectorConfig,
    frame: &FrameModel,
    seed: u64,
    exec: Execution,
) -> Result<SessionTally> {
    source.validate()?;
    detector.validate()?;
    frame.validate()?;
    let kernel = PulseKernel::new(source, detector, frame);
    let chunks = source.pulse_count.div_ceil(CHUNK_PULSES);
    let partials = map_indexed(chunks as usize, exec, |k| {
        let k = k as u64;
        let pulses = CHUNK_PULSES.min(source.pulse_count - k * CHUNK_PULSES);
        let mut t = SessionTally::empty(*source, *detector);
        kernel.run_chunk(seed, k, pulses, &mut t);
        t
    });
    let mut tally = SessionTally::empty(*source, *detector);
    for t in &partials {
        tally.merge(t);
    }
    Ok(tally)
}

/// One session with φ uniform on `[θ−δ, θ+δ]` per pulse.
pub fn run_session(
    source: &SourceConfig,
    detector: &DetectorConfig,
    frame: &FrameParams,
    seed: u64,
) -> Result<SessionTally> {
    run_session_with(source, detector, &FrameModel::Uniform(*frame), seed, Execution::default())
}

/// Cell-midpoint grid of `points` fixed angles covering `[θ−δ, θ+δ]`.
pub fn mixing_grid(frame: &FrameParams, points: usize) -> Vec<f64> {
    let lo = frame.theta() - frame.delta();
    let width = 2.0 * frame.delta() / points as f64;
    (0..points).map(|k| lo + (k as f64 + 0.5) * width).collect()
}

/// Emulates fluctuation by mixing fixed-φ sessions taken on a grid.
///
/// The pulse budget is split evenly (remainder dropped) and sessions are
/// combined with equal weights through [`mix_sessions`].
pub fn run_grid_mixed(
    source: &SourceConfig,
    detector: &DetectorConfig,
    frame: &FrameParams,
    points: usize,
    seed: u64,
    exec: Execution,
) -> Result<SessionTally> {
    if points == 0 {
        return Err(Error::InvalidConfig("mixing grid needs at least one point".into()));
    }
    let per_point = source.pulse_count / points as u64;
    if per_point == 0 {
        return Err(Error::InvalidConfig(format!(
            "{} pulses cannot be split over {points} grid points",
            source.pulse_count
        )));
    }
    let sub_source = SourceConfig { pulse_count: per_point, ..*source };
    let tallies = mixing_grid(frame, points)
        .into_iter()
        .enumerate()
        .map(|(k, phi)| {
            let fixed = FrameModel::Uniform(frame.at_phi(phi)?);
            run_session_with(&sub_source, detector, &fixed, derive_seed(seed, k as u64), exec)
        })
        .collect::<Result<Vec<_>>>()?;
    mix_sessions(&tallies, &vec![1.0 / points as f64; points])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(p: f64, t: f64, d: f64) -> FrameParams {
        FrameParams::new(p, t, d).unwrap()
    }

    #[test]
    fn deterministic_and_schedule_independent() {
        let src = SourceConfig::with_pulses(300_000);
        let det = DetectorConfig { dark_count_prob: 1e-3, efficiency: 0.8, ..DetectorConfig::default() };
        let model = FrameModel::Uniform(frame(0.06, 0.2, 0.3));
        let a = run_session_with(&src, &det, &model, 11, Execution::Parallel).unwrap();
        let b = run_session_with(&src, &det, &model, 11, Execution::Sequential).unwrap();
        let c = run_session_with(&src, &det, &model, 12, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(a, c);
        assert!(a.is_conserved());
        assert_eq!(a.total_sent(), 300_000);
        assert!(a.double_click.iter().sum::<u64>() > 0);
    }

    #[test]
    fn noiseless_aligned_channel_has_no_errors() {
        let t = run_session(&SourceConfig::with_pulses(200_000), &DetectorConfig::default(), &frame(0.0, 0.0, 0.0), 3)
            .unwrap();
        use Polarization::*;
        for (prep, wrong) in [(H, V), (V, H), (D, A), (A, D), (R, L), (L, R)] {
            assert_eq!(t.count(prep, wrong), 0);
            assert!(t.count(prep, prep) > 0);
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let bad = SourceConfig { mean_photon_number: -1.0, pulse_count: 10 };
        assert!(run_session(&bad, &DetectorConfig::default(), &frame(0.0, 0.0, 0.0), 0).is_err());
        let model = FrameModel::Discrete { p: 0.0, angles: vec![] };
        let src = SourceConfig::with_pulses(10);
        assert!(run_session_with(&src, &DetectorConfig::default(), &model, 0, Execution::Sequential).is_err());
        assert!(run_grid_mixed(&src, &DetectorConfig::default(), &frame(0.0, 0.0, 0.1), 20, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn mixing_grid_is_centered() {
        let g = mixing_grid(&frame(0.0, 0.5, 0.25), 4);
        let expected = [0.3125, 0.4375, 0.5625, 0.6875];
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(mixing_grid(&frame(0.0, 0.3, 0.0), 3), vec![0.3; 3]);
    }

    #[test]
    fn seeds_are_decorrelated() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|k| derive_seed(42, k)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(0, 1));
    }
}
