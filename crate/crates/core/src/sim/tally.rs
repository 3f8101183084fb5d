//! Coincidence tables and their plain-text archive format.
//!
//! ```text
//! rfiqkd-tally v1
//! mean_photon_number=0.5
//! efficiency=1
//! dark_count_prob=0
//! basis_probabilities=0.3333333333333333,0.3333333333333333,0.3333333333333333
//! prepared D_H D_V D_D D_A D_R D_L sent no_click double_click
//! H 41 0 20 21 20 20 ...
//! ```
//!
//! Rows follow H, V, D, A, R, L. Real numbers use the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::{DetectorConfig, SourceConfig};
use crate::error::{Error, Result};
use crate::polarization::Polarization;

pub const TALLY_HEADER: &str = "rfiqkd-tally v1";
const COLUMNS: &str = "prepared D_H D_V D_D D_A D_R D_L sent no_click double_click";

/// Per prepared state, counts on each of Bob's six detectors.
///
/// Pulses where several detectors fired are resolved to one detector and
/// counted there; `double_click` records how many were resolved that way.
/// For every row, `Σ counts + no_click == sent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTally {
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub counts: [[u64; 6]; 6],
    pub sent: [u64; 6],
    pub no_click: [u64; 6],
    pub double_click: [u64; 6],
}

impl SessionTally {
    pub fn empty(source: SourceConfig, detector: DetectorConfig) -> Self {
        Self {
            source,
            detector,
            counts: [[0; 6]; 6],
            sent: [0; 6],
            no_click: [0; 6],
            double_click: [0; 6],
        }
    }

    pub fn total_sent(&self) -> u64 {
        self.sent.iter().sum()
    }

    pub fn count(&self, prepared: Polarization, detected: Polarization) -> u64 {
        self.counts[prepared.index()][detected.index()]
    }

    pub fn same_configuration(&self, other: &Self) -> bool {
        self.source.mean_photon_number == other.source.mean_photon_number && self.detector == other.detector
    }

    /// Adds another partition's counts. Associative and commutative.
    pub fn merge(&mut self, other: &Self) {
        for s in 0..6 {
            for d in 0..6 {
                self.counts[s][d] += other.counts[s][d];
            }
            self.sent[s] += other.sent[s];
            self.no_click[s] += other.no_click[s];
            self.double_click[s] += other.double_click[s];
        }
    }

    /// Row-wise conservation check.
    pub fn is_conserved(&self) -> bool {
        (0..6).all(|s| self.counts[s].iter().sum::<u64>() + self.no_click[s] == self.sent[s])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let b = &self.detector.basis_probabilities;
        writeln!(out, "{TALLY_HEADER}").unwrap();
        writeln!(out, "mean_photon_number={}", self.source.mean_photon_number).unwrap();
        writeln!(out, "efficiency={}", self.detector.efficiency).unwrap();
        writeln!(out, "dark_count_prob={}", self.detector.dark_count_prob).unwrap();
        writeln!(out, "basis_probabilities={},{},{}", b[0], b[1], b[2]).unwrap();
        writeln!(out, "{COLUMNS}").unwrap();
        for pol in Polarization::ALL {
            let s = pol.index();
            write!(out, "{pol}").unwrap();
            for c in self.counts[s] {
                write!(out, " {c}").unwrap();
            }
            writeln!(out, " {} {} {}", self.sent[s], self.no_click[s], self.double_click[s]).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
        let err = |line: usize, msg: String| Error::TallyFormat { line, msg };
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")));

        let (n, header) = next("header")?;
        if header != TALLY_HEADER {
            return Err(err(n, format!("expected '{TALLY_HEADER}', found '{header}'")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = next(key)?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok((n, v.trim().to_string())),
                _ => Err(err(n, format!("expected '{key}=...'"))),
            }
        };
        let real = |(n, v): (usize, String)| v.parse::<f64>().map_err(|e| err(n, format!("'{v}': {e}")));
        let mu = real(field("mean_photon_number")?)?;
        let efficiency = real(field("efficiency")?)?;
        let dark = real(field("dark_count_prob")?)?;
        let (bn, bv) = field("basis_probabilities")?;
        let parts: Vec<f64> = bv
            .split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| err(bn, format!("'{x}': {e}"))))
            .collect::<Result<_>>()?;
        let basis_probabilities: [f64; 3] =
            parts.try_into().map_err(|_| err(bn, "expected three basis probabilities".into()))?;

        let (n, cols) = next("column header")?;
        if cols.split_whitespace().collect::<Vec<_>>() != COLUMNS.split_whitespace().collect::<Vec<_>>() {
            return Err(err(n, "unexpected column header".into()));
        }
        let mut tally = Self::empty(
            SourceConfig { mean_photon_number: mu, pulse_count: 1 },
            DetectorConfig { efficiency, dark_count_prob: dark, basis_probabilities },
        );
        for pol in Polarization::ALL {
            let (n, row) = next("tally row")?;
            let mut it = row.split_whitespace();
            let label = it.next().unwrap_or("");
            if label != pol.to_string() {
                return Err(err(n, format!("expected row '{pol}', found '{label}'")));
            }
            let vals: Vec<u64> = it
                .map(|x| x.parse::<u64>().map_err(|e| err(n, format!("'{x}': {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != 9 {
                return Err(err(n, format!("expected 9 integers, found {}", vals.len())));
            }
            let s = pol.index();
            tally.counts[s].copy_from_slice(&vals[..6]);
            tally.sent[s] = vals[6];
            tally.no_click[s] = vals[7];
            tally.double_click[s] = vals[8];
            if tally.counts[s].iter().sum::<u64>() + tally.no_click[s] != tally.sent[s] {
                return Err(err(n, "row counts do not add up to pulses sent".into()));
            }
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(n, format!("trailing content '{extra}'")));
        }
        tally.source.pulse_count = tally.total_sent().max(1);
        Ok(tally)
    }
}

/// Scales `values` by `factor` into integers whose sum is `round(factor·Σ values)`,
/// handing leftover units to the largest fractional parts.
fn rescale_row(values: &[u64], factor: f64) -> Vec<u64> {
    let total: u64 = values.iter().sum();
    let target = (total as f64 * factor).round() as u64;
    let scaled: Vec<f64> = values.iter().map(|&v| v as f64 * factor).collect();
    let mut out: Vec<u64> = scaled.iter().map(|x| (x + 1e-9).floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    if target > assigned {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - out[a] as f64;
            let rb = scaled[b] - out[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle().take((target - assigned) as usize) {
            out[i] += 1;
        }
    }
    out
}

/// Weighted aggregate of sessions taken under different fixed frames.
///
/// Each session's counts are rescaled so it contributes `weight` of the
/// aggregate pulse budget `Σ sent`, then rows are summed. Equal weights on
/// equal-size sessions reduce to a plain sum.
pub fn mix_sessions(tallies: &[SessionTally], weights: &[f64]) -> Result<SessionTally> {
    if tallies.is_empty() {
        return Err(Error::InvalidConfig("no sessions to mix".into()));
    }
    if tallies.len() != weights.len() {
        return Err(Error::InvalidConfig(format!(
            "{} sessions but {} weights",
            tallies.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig("weights must be nonnegative and sum to 1".into()));
    }
    let first = &tallies[0];
    if tallies.iter().any(|t| !t.same_configuration(first)) {
        return Err(Error::MismatchedTallies);
    }
    let budget: u64 = tallies.iter().map(SessionTally::total_sent).sum();
    let mut out = SessionTally::empty(first.source, first.detector);
    for (t, &w) in tallies.iter().zip(weights) {
        let n = t.total_sent();
        if w == 0.0 {
            continue;
        }
        if n == 0 {
            return Err(Error::InvalidConfig("a weighted session has no pulses".into()));
        }
        let mut factor = w * budget as f64 / n as f64;
        if (factor - 1.0).abs() < 1e-12 {
            factor = 1.0;
        }
        let mut scaled = SessionTally::empty(first.source, first.detector);
        for s in 0..6 {
            let mut row = t.counts[s].to_vec();
            row.push(t.no_click[s]);
            let row = rescale_row(&row, factor);
            scaled.counts[s].copy_from_slice(&row[..6]);
            scaled.no_click[s] = row[6];
            scaled.sent[s] = row.iter().sum();
            scaled.double_click[s] = ((t.double_click[s] as f64 * factor).round() as u64).min(scaled.sent[s]);
        }
        out.merge(&scaled);
    }
    out.source.pulse_count = out.total_sent().max(1);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> SessionTally {
        let mut t = SessionTally::empty(SourceConfig::default(), DetectorConfig::default());
        for s in 0..6 {
            for d in 0..6 {
                t.counts[s][d] = (7 * s + 3 * d + 1) as u64;
            }
            t.no_click[s] = 100 + s as u64;
            t.double_click[s] = s as u64;
            t.sent[s] = t.counts[s].iter().sum::<u64>() + t.no_click[s];
        }
        t.source.pulse_count = t.total_sent();
        t
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let text = t.to_text();
        assert!(text.starts_with(TALLY_HEADER));
        assert_eq!(SessionTally::from_text(&text).unwrap(), t);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = sample().to_text();
        let bad = text.replacen("rfiqkd-tally v1", "something else", 1);
        assert!(matches!(SessionTally::from_text(&bad), Err(Error::TallyFormat { line: 1, .. })));
        let bad = text.replace("\nV ", "\nV x");
        assert!(matches!(SessionTally::from_text(&bad), Err(Error::TallyFormat { line: 8, .. })));
        let truncated: String = text.lines().take(7).collect::<Vec<_>>().join("\n");
        assert!(SessionTally::from_text(&truncated).is_err());
        let unbalanced = text.replace("\nH 1 ", "\nH 2 ");
        assert!(matches!(SessionTally::from_text(&unbalanced), Err(Error::TallyFormat { line: 7, .. })));
    }

    #[test]
    fn mixing_identity_and_errors() {
        let t = sample();
        assert_eq!(mix_sessions(std::slice::from_ref(&t), &[1.0]).unwrap(), t);
        let mut other = sample();
        other.detector.efficiency = 0.5;
        assert_eq!(mix_sessions(&[t.clone(), other], &[0.5, 0.5]), Err(Error::MismatchedTallies));
        assert!(mix_sessions(&[t.clone(), t.clone()], &[0.7, 0.7]).is_err());
        assert!(mix_sessions(std::slice::from_ref(&t), &[0.5, 0.5]).is_err());
        assert!(mix_sessions(&[], &[]).is_err());
    }

    #[test]
    fn equal_weights_sum_equal_sessions() {
        let t = sample();
        let k = 33;
        let tallies = vec![t.clone(); k];
        let mixed = mix_sessions(&tallies, &vec![1.0 / k as f64; k]).unwrap();
        for s in 0..6 {
            for d in 0..6 {
                assert_eq!(mixed.counts[s][d], t.counts[s][d] * k as u64);
            }
        }
        assert_eq!(mixed.total_sent(), t.total_sent() * k as u64);
    }

    #[test]
    fn unequal_weights_rescale_rows() {
        let t = sample();
        let mixed = mix_sessions(&[t.clone(), t.clone()], &[0.75, 0.25]).unwrap();
        assert!(mixed.is_conserved());
        // Each of the six rows rounds independently per session.
        assert!(mixed.total_sent().abs_diff(2 * t.total_sent()) <= 12);
        let h = Polarization::H.index();
        let expect = (t.counts[h][0] as f64 * 1.5).round() + (t.counts[h][0] as f64 * 0.5).round();
        assert!((mixed.counts[h][0] as f64 - expect).abs() <= 2.0);
    }

    proptest! {
        #[test]
        fn rescale_preserves_target(values in proptest::collection::vec(0u64..10_000, 7), factor in 0.01..5.0f64) {
            let out = rescale_row(&values, factor);
            let total: u64 = values.iter().sum();
            prop_assert_eq!(out.iter().sum::<u64>(), (total as f64 * factor).round() as u64);
            for (o, v) in out.iter().zip(&values) {
                prop_assert!((*o as f64 - *v as f64 * factor).abs() <= 1.0 + 1e-9);
            }
        }
    }
}
