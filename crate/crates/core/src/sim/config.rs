use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weak-coherent-pulse source preparing one of the six eigenstates uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub mean_photon_number: f64,
    pub pulse_count: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { mean_photon_number: 0.5, pulse_count: 1_000_000 }
    }
}

impl SourceConfig {
    pub fn with_pulses(pulse_count: u64) -> Self {
        Self { pulse_count, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean_photon_number > 0.0 && self.mean_photon_number.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mean_photon_number must be positive, got {}",
                self.mean_photon_number
            )));
        }
        if self.pulse_count == 0 {
            return Err(Error::InvalidConfig("pulse_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bob's receiver: a passive three-way basis split feeding six detectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// Per pulse, per detector.
    pub dark_count_prob: f64,
    /// Routing probabilities into the X, Y and Z analyzers.
    pub basis_probabilities: [f64; 3],
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { efficiency: 1.0, dark_count_prob: 0.0, basis_probabilities: [1.0 / 3.0; 3] }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::InvalidConfig(format!("efficiency must be in (0, 1], got {}", self.efficiency)));
        }
        if !(0.0..1.0).contains(&self.dark_count_prob) {
            return Err(Error::InvalidConfig(format!(
                "dark_count_prob must be in [0, 1), got {}",
                self.dark_count_prob
            )));
        }
        let probs = &self.basis_probabilities;
        if probs.iter().any(|&x| !(0.0..=1.0).contains(&x)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("basis_probabilities must be a distribution, got {probs:?}")));
        }
        Ok(())
    }
}
