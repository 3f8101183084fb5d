//! QBER, correlator, `C` and key-rate estimates from a coincidence tally.

use serde::{Deserialize, Serialize};

use super::tally::SessionTally;
use crate::error::{Error, Result};
use crate::polarization::{BasisAxis, Polarization};
use crate::rates::{average_qber, bb84_rate, rfi_rate, six_state_rate, ProtocolKind};

/// A point estimate with its binomial standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    /// `|value − reference| ≤ k·σ`; a zero σ demands an exact match.
    pub fn within_sigma(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub xx: Estimate,
    pub xy: Estimate,
    pub yx: Estimate,
    pub yy: Estimate,
    pub zz: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Indexed by [`BasisAxis::index`].
    pub qber: [Estimate; 3],
    pub correlators: CorrelatorTable,
    pub c: Estimate,
    /// Rates from the estimated QBERs and `C`; `None` where the formula
    /// has no meaning (RFI with an estimated Q_Z ≥ 1/2).
    pub rates: Vec<(ProtocolKind, Option<f64>)>,
}

impl EstimateReport {
    pub fn qber(&self, axis: BasisAxis) -> Estimate {
        self.qber[axis.index()]
    }

    pub fn rate(&self, protocol: ProtocolKind) -> Option<f64> {
        self.rates.iter().find(|(p, _)| *p == protocol).and_then(|(_, r)| *r)
    }

    /// Protocol-averaged QBER estimate, with standard errors combined in quadrature.
    pub fn protocol_qber(&self, protocol: ProtocolKind) -> Estimate {
        if protocol == ProtocolKind::Rfi {
            return self.qber(BasisAxis::Z);
        }
        let bases = protocol.bases();
        let k = bases.len() as f64;
        let value = average_qber(protocol, &self.qber.map(|e| e.value)).unwrap();
        let var: f64 = bases.iter().map(|a| self.qber(*a).std_error.powi(2)).sum::<f64>() / (k * k);
        let samples = bases.iter().map(|a| self.qber(*a).samples).sum();
        Estimate { value, std_error: var.sqrt(), samples }
    }
}

/// Agreement/disagreement counts between preparations in `prep` and
/// detections in `meas`, with agreement meaning equal eigenvalue signs.
fn agree_disagree(tally: &SessionTally, prep: BasisAxis, meas: BasisAxis) -> (u64, u64) {
    let mut agree = 0;
    let mut disagree = 0;
    for a in Polarization::ALL.iter().filter(|p| p.axis() == prep) {
        for b in Polarization::ALL.iter().filter(|p| p.axis() == meas) {
            let n = tally.count(*a, *b);
            if a.sign() == b.sign() {
                agree += n;
            } else {
                disagree += n;
            }
        }
    }
    (agree, disagree)
}

fn correlator(tally: &SessionTally, prep: BasisAxis, meas: BasisAxis) -> Result<Estimate> {
    let (agree, disagree) = agree_disagree(tally, prep, meas);
    let n = agree + disagree;
    if n == 0 {
        return Err(Error::InsufficientStatistics(format!(
            "no sifted counts for {prep}-prepared, {meas}-measured pulses"
        )));
    }
    let q = disagree as f64 / n as f64;
    Ok(Estimate {
        value: (agree as f64 - disagree as f64) / n as f64,
        std_error: 2.0 * (q * (1.0 - q) / n as f64).sqrt(),
        samples: n,
    })
}

pub fn estimate(tally: &SessionTally) -> Result<EstimateReport> {
    use BasisAxis::{X, Y, Z};
    let correlators = CorrelatorTable {
        xx: correlator(tally, X, X)?,
        xy: correlator(tally, X, Y)?,
        yx: correlator(tally, Y, X)?,
        yy: correlator(tally, Y, Y)?,
        zz: correlator(tally, Z, Z)?,
    };
    let qber = [correlators.xx, correlators.yy, correlators.zz].map(|e| Estimate {
        value: (1.0 - e.value) / 2.0,
        std_error: e.std_error / 2.0,
        samples: e.samples,
    });
    let cross = [correlators.xx, correlators.xy, correlators.yx, correlators.yy];
    let c = Estimate {
        value: cross.iter().map(|e| e.value * e.value).sum(),
        std_error: cross.iter().map(|e| (2.0 * e.value * e.std_error).powi(2)).sum::<f64>().sqrt(),
        samples: cross.iter().map(|e| e.samples).sum(),
    };
    let q = qber.map(|e| e.value);
    let rates = ProtocolKind::ALL
        .iter()
        .map(|&p| {
            let r = match p {
                ProtocolKind::Bb84Xy | ProtocolKind::Bb84Xz => Some(bb84_rate(average_qber(p, &q)?)),
                ProtocolKind::SixState => Some(six_state_rate(average_qber(p, &q)?)),
                ProtocolKind::Rfi if q[2] < 0.5 => Some(rfi_rate(q[2], c.value.clamp(0.0, 2.0))),
                ProtocolKind::Rfi => None,
            };
            Ok((p, r))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport { qber, correlators, c, rates })
}
