use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::{SweepMode, SweepSpec};
use crate::channel::FrameParams;
use crate::error::Result;
use crate::par::{map_indexed, Execution};
use crate::polarization::BasisAxis;
use crate::rates::{c_parameter, key_rate, qber_basis, qber_protocol, ProtocolKind};
use crate::sim::{
    derive_seed, estimate, run_grid_mixed, run_session_with, EstimateReport, FrameModel, SessionTally,
};

/// One output row: a grid point evaluated for one protocol.
///
/// In analytic mode the plain columns hold closed-form values and the
/// `analytic_*` columns are empty. In Monte Carlo mode the plain columns
/// hold estimates (with `*_se` standard errors) and `analytic_*` hold the
/// closed-form reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mode: String,
    pub theta: f64,
    pub theta_over_pi: f64,
    pub delta: f64,
    pub delta_over_pi: f64,
    pub p: f64,
    pub protocol: ProtocolKind,
    pub qber: Option<f64>,
    pub qber_se: Option<f64>,
    pub q_x: Option<f64>,
    pub q_x_se: Option<f64>,
    pub q_y: Option<f64>,
    pub q_y_se: Option<f64>,
    pub q_z: Option<f64>,
    pub q_z_se: Option<f64>,
    pub c_param: Option<f64>,
    pub c_param_se: Option<f64>,
    pub rate_raw: Option<f64>,
    pub rate_clamped: Option<f64>,
    pub analytic_qber: Option<f64>,
    pub analytic_c_param: Option<f64>,
    pub analytic_rate_raw: Option<f64>,
    pub status: String,
}

/// How many Monte Carlo per-basis QBER and `C` estimates landed within 3σ
/// of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrossCheck {
    pub checked: usize,
    pub within: usize,
}

impl CrossCheck {
    pub fn fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.within as f64 / self.checked as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// Monte Carlo tallies in grid order.
    pub tallies: Vec<SessionTally>,
    pub cross_check: Option<CrossCheck>,
    /// Rows whose estimates could not be formed.
    pub warnings: usize,
}

struct Analytic {
    q: [f64; 3],
    c: f64,
}

impl Analytic {
    fn at(params: &FrameParams) -> Self {
        Self { q: BasisAxis::ALL.map(|a| qber_basis(a, params)), c: c_parameter(params) }
    }

    fn protocol_qber(&self, protocol: ProtocolKind, params: &FrameParams) -> f64 {
        match protocol {
            ProtocolKind::Rfi => self.q[2],
            p => qber_protocol(p, params).expect("non-RFI protocol").q_protocol,
        }
    }
}

fn base_row(mode: SweepMode, params: &FrameParams, protocol: ProtocolKind) -> SweepRow {
    SweepRow {
        mode: match mode {
            SweepMode::Analytic => "analytic".into(),
            SweepMode::MonteCarlo => "montecarlo".into(),
        },
        theta: params.theta(),
        theta_over_pi: params.theta() / PI,
        delta: params.delta(),
        delta_over_pi: params.delta() / PI,
        p: params.p(),
        protocol,
        qber: None,
        qber_se: None,
        q_x: None,
        q_x_se: None,
        q_y: None,
        q_y_se: None,
        q_z: None,
        q_z_se: None,
        c_param: None,
        c_param_se: None,
        rate_raw: None,
        rate_clamped: None,
        analytic_qber: None,
        analytic_c_param: None,
        analytic_rate_raw: None,
        status: "ok".into(),
    }
}

fn analytic_rows(params: &FrameParams, protocols: &[ProtocolKind]) -> Vec<SweepRow> {
    let a = Analytic::at(params);
    protocols
        .iter()
        .map(|&protocol| {
            let rate = key_rate(protocol, params);
            SweepRow {
                qber: Some(a.protocol_qber(protocol, params)),
                q_x: Some(a.q[0]),
                q_y: Some(a.q[1]),
                q_z: Some(a.q[2]),
                c_param: (protocol == ProtocolKind::Rfi).then_some(a.c),
                rate_raw: Some(rate.rate),
                rate_clamped: Some(rate.clamped()),
                ..base_row(SweepMode::Analytic, params, protocol)
            }
        })
        .collect()
}

fn mc_rows(
    params: &FrameParams,
    protocols: &[ProtocolKind],
    report: std::result::Result<&EstimateReport, &str>,
    check: &mut CrossCheck,
) -> Vec<SweepRow> {
    let a = Analytic::at(params);
    if let Ok(r) = report {
        for axis in BasisAxis::ALL {
            check.checked += 1;
            check.within += r.qber(axis).within_sigma(a.q[axis.index()], 3.0) as usize;
        }
        check.checked += 1;
        check.within += r.c.within_sigma(a.c, 3.0) as usize;
    }
    protocols
        .iter()
        .map(|&protocol| {
            let mut row = SweepRow {
                analytic_qber: Some(a.protocol_qber(protocol, params)),
                analytic_c_param: (protocol == ProtocolKind::Rfi).then_some(a.c),
                analytic_rate_raw: Some(key_rate(protocol, params).rate),
                ..base_row(SweepMode::MonteCarlo, params, protocol)
            };
            match report {
                Ok(r) => {
                    let q = r.protocol_qber(protocol);
                    row.qber = Some(q.value);
                    row.qber_se = Some(q.std_error);
                    let [x, y, z] = r.qber;
                    (row.q_x, row.q_x_se) = (Some(x.value), Some(x.std_error));
                    (row.q_y, row.q_y_se) = (Some(y.value), Some(y.std_error));
                    (row.q_z, row.q_z_se) = (Some(z.value), Some(z.std_error));
                    if protocol == ProtocolKind::Rfi {
                        row.c_param = Some(r.c.value);
                        row.c_param_se = Some(r.c.std_error);
                    }
                    row.rate_raw = r.rate(protocol);
                    row.rate_clamped = row.rate_raw.map(|x| x.max(0.0));
                    if row.rate_raw.is_none() {
                        row.status = "rate_undefined".into();
                    }
                }
                Err(msg) => row.status = format!("insufficient_statistics: {msg}"),
            }
            row
        })
        .collect()
}

/// Evaluates every grid point (in parallel under `exec`) and assembles rows
/// in grid order, then protocol order.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepOutcome> {
    let points: Vec<FrameParams> = spec
        .grid()
        .into_iter()
        .map(|(t, d)| FrameParams::new(spec.fixed.p(), t, d))
        .collect::<Result<_>>()?;

    match spec.mode {
        SweepMode::Analytic => {
            let rows = map_indexed(points.len(), exec, |k| analytic_rows(&points[k], &spec.protocols));
            Ok(SweepOutcome { rows: rows.into_iter().flatten().collect(), tallies: vec![], cross_check: None, warnings: 0 })
        }
        SweepMode::MonteCarlo => {
            let mc = spec.mc.as_ref().expect("Monte Carlo mode carries its settings");
            let tallies = map_indexed(points.len(), exec, |k| {
                let seed = derive_seed(mc.seed, k as u64);
                if mc.grid_mixing {
                    run_grid_mixed(&mc.source, &mc.detector, &points[k], mc.mixing_points, seed, exec)
                } else {
                    run_session_with(&mc.source, &mc.detector, &FrameModel::Uniform(points[k]), seed, exec)
                }
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let mut check = CrossCheck::default();
            let mut rows = Vec::with_capacity(points.len() * spec.protocols.len());
            let mut warnings = 0;
            for (params, tally) in points.iter().zip(&tallies) {
                let report = estimate(tally).map_err(|e| e.to_string());
                let new = mc_rows(params, &spec.protocols, report.as_ref().map_err(String::as_str), &mut check);
                warnings += new.iter().filter(|r| r.status != "ok").count();
                rows.extend(new);
            }
            Ok(SweepOutcome { rows, tallies, cross_check: Some(check), warnings })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::SweepSpec;
    use std::path::Path;

    fn spec(body: &str) -> SweepSpec {
        SweepSpec::parse(&format!("{body}\n[output]\npath = /dev/null\n"), Path::new(".")).unwrap()
    }

    #[test]
    fn analytic_rotation_rows() {
        let s = spec("[sweep]\nmode=analytic\nvariable=rotation\nrange=0,0.5pi,64\n[channel]\np=0.06\n");
        let out = run_sweep(&s, Execution::Parallel).unwrap();
        assert_eq!(out.rows.len(), 64 * 4);
        assert!(out.cross_check.is_none());
        // Grid-major, protocol-minor ordering.
        assert_eq!(out.rows[0].protocol, ProtocolKind::Bb84Xy);
        assert_eq!(out.rows[3].protocol, ProtocolKind::Rfi);
        assert_eq!(out.rows[4].theta, out.rows[7].theta);
        let rfi: Vec<f64> = out.rows.iter().filter(|r| r.protocol == ProtocolKind::Rfi).map(|r| r.rate_raw.unwrap()).collect();
        let spread = rfi.iter().cloned().fold(f64::MIN, f64::max) - rfi.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-12);
        assert!(out.rows.iter().filter(|r| r.protocol != ProtocolKind::Rfi).all(|r| r.c_param.is_none()));
        assert_eq!(run_sweep(&s, Execution::Sequential).unwrap(), out);
    }

    #[test]
    fn fluctuation_sweep_hits_zero_for_bb84_xy() {
        let s = spec("[sweep]\nmode=analytic\nvariable=fluctuation\nrange=0,0.5pi,101\nprotocols=bb84_xy\n[channel]\np=0.06\n");
        let out = run_sweep(&s, Execution::Parallel).unwrap();
        let first_zero = out.rows.iter().find(|r| r.rate_clamped == Some(0.0)).unwrap();
        assert!((first_zero.delta_over_pi - 0.335).abs() < 0.006, "{}", first_zero.delta_over_pi);
    }

    #[test]
    fn montecarlo_rows_report_estimates() {
        let s = spec(
            "[sweep]\nmode=montecarlo\nvariable=rotation\nrange=0,0.25pi,2\nprotocols=rfi,bb84_xz\n[channel]\np=0.06\n\
             [montecarlo]\npulses=200000\nseed=5\n",
        );
        let out = run_sweep(&s, Execution::Parallel).unwrap();
        assert_eq!(out.rows.len(), 4);
        assert_eq!(out.tallies.len(), 2);
        assert_eq!(out.warnings, 0);
        let rfi = &out.rows[1];
        assert_eq!(rfi.protocol, ProtocolKind::Rfi);
        assert!(rfi.c_param.is_some() && rfi.c_param_se.unwrap() > 0.0);
        assert!(rfi.analytic_c_param.is_some());
        let cc = out.cross_check.unwrap();
        assert_eq!(cc.checked, 8);
        assert!(cc.within >= 7);
    }

    #[test]
    fn insufficient_statistics_is_per_row() {
        let s = spec(
            "[sweep]\nmode=montecarlo\nvariable=rotation\nrange=0,0.25pi,2\nprotocols=rfi\n[channel]\np=0.06\n\
             [montecarlo]\npulses=3\nseed=5\n",
        );
        let out = run_sweep(&s, Execution::Sequential).unwrap();
        assert_eq!(out.warnings, 2);
        assert!(out.rows.iter().all(|r| r.status.starts_with("insufficient_statistics") && r.qber.is_none()));
    }
}
