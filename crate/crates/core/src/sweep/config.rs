//! Flat `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [sweep]
//! mode = analytic            # analytic | montecarlo
//! variable = rotation        # rotation | fluctuation | grid2d
//! range = 0, 0.5pi, 64       # start, stop, steps (rotation/fluctuation)
//! theta_range = 0, 0.5pi, 64 # grid2d only
//! delta_range = 0.01pi, pi, 64
//! protocols = BB84_XY, BB84_XZ, SIX_STATE, RFI
//!
//! [channel]
//! p = 0.06
//! delta = 0                  # the swept variable must not appear here
//!
//! [montecarlo]
//! pulses = 1000000
//! mean_photon_number = 0.5
//! efficiency = 1
//! dark_count_prob = 0
//! basis_probabilities = 0.3333333333333333, 0.3333333333333333, 0.3333333333333334
//! seed = 7
//! grid_mixing = false
//! mixing_points = 65
//!
//! [output]
//! format = csv               # csv | json
//! path = rotation.csv
//! tally_dir = tallies
//! ```
//!
//! Angles take raw radians or multiples of π (`0.19pi`, `pi/2`, `-3pi/4`).
//! Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::channel::FrameParams;
use crate::rates::ProtocolKind;
use crate::sim::{DetectorConfig, SourceConfig};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{}field '{field}': {message}", line.map(|l| format!("line {l}, ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(line: Option<usize>, field: &str, message: impl Into<String>) -> Self {
        Self { line, field: field.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Rotation,
    Fluctuation,
    Grid2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Inclusive, evenly spaced range of `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl AngleRange {
    pub fn points(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| if k + 1 == self.steps { self.stop } else { self.start + h * k as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSpec {
    pub source: SourceConfig,
    pub detector: DetectorConfig,
    pub seed: u64,
    pub grid_mixing: bool,
    pub mixing_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: PathBuf,
    pub tally_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub variable: SweepVariable,
    pub theta_range: Option<AngleRange>,
    pub delta_range: Option<AngleRange>,
    /// Holds p and whichever of θ, δ is not swept (the swept one is 0 here).
    pub fixed: FrameParams,
    pub protocols: Vec<ProtocolKind>,
    pub mc: Option<MonteCarloSpec>,
    pub output: OutputSpec,
}

impl SweepSpec {
    /// Grid of (θ, δ) points; θ-major for GRID2D.
    pub fn grid(&self) -> Vec<(f64, f64)> {
        let thetas = self.theta_range.map(|r| r.points()).unwrap_or_else(|| vec![self.fixed.theta()]);
        let deltas = self.delta_range.map(|r| r.points()).unwrap_or_else(|| vec![self.fixed.delta()]);
        thetas.iter().flat_map(|&t| deltas.iter().map(move |&d| (t, d))).collect()
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw = RawConfig::parse(text)?;
        raw.build(base_dir)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(None, "<file>", format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }
}

/// Parses `1.2`, `pi`, `-pi`, `0.19pi`, `0.19*pi`, `pi/2`, `3pi/4`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let bad = || format!("cannot read '{s}' as an angle");
    let Some(pos) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let coef = t[..pos].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = &t[pos + 2..];
    let den = if rest.is_empty() {
        1.0
    } else {
        let d = rest.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?;
        if d == 0.0 {
            return Err(bad());
        }
        d
    };
    Ok(coef * PI / den)
}

struct Entry {
    line: usize,
    value: String,
    used: std::cell::Cell<bool>,
}

struct RawConfig {
    entries: BTreeMap<(String, String), Entry>,
}

const SECTIONS: [&str; 4] = ["sweep", "channel", "montecarlo", "output"];

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw_line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_ascii_lowercase();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(ConfigError::new(Some(n), &name, "unknown section"));
                }
                section = Some(name);
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::new(Some(n), line, "expected 'key = value'"));
            };
            let key = k.trim().to_ascii_lowercase();
            let Some(sec) = section.clone() else {
                return Err(ConfigError::new(Some(n), &key, "key appears before any [section]"));
            };
            let entry = Entry { line: n, value: v.trim().to_string(), used: false.into() };
            if let Some(prev) = entries.insert((sec.clone(), key.clone()), entry) {
                return Err(ConfigError::new(Some(n), &key, format!("duplicate key (first on line {})", prev.line)));
            }
        }
        Ok(Self { entries })
    }

    fn get(&self, section: &str, key: &str) -> Option<(usize, &str)> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|e| {
            e.used.set(true);
            (e.line, e.value.as_str())
        })
    }

    fn require(&self, section: &str, key: &str) -> Result<(usize, &str), ConfigError> {
        self.get(section, key)
            .ok_or_else(|| ConfigError::new(None, &format!("{section}.{key}"), "required field is missing"))
    }

    fn parsed<T>(&self, section: &str, key: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.get(section, key) {
            None => Ok(None),
            Some((line, v)) => f(v).map(Some).map_err(|m| ConfigError::new(Some(line), key, m)),
        }
    }

    fn range(&self, key: &str) -> Result<Option<AngleRange>, ConfigError> {
        let Some((line, v)) = self.get("sweep", key) else { return Ok(None) };
        let err = |m: String| ConfigError::new(Some(line), key, m);
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(err("expected 'start, stop, steps'".into()));
        }
        let start = parse_angle(parts[0]).map_err(err)?;
        let stop = parse_angle(parts[1]).map_err(err)?;
        let steps: usize = parts[2].parse().map_err(|_| err(format!("'{}' is not a step count", parts[2])))?;
        if steps < 2 {
            return Err(err("steps must be at least 2".into()));
        }
        if !(start < stop) {
            return Err(err("start must be below stop".into()));
        }
        Ok(Some(AngleRange { start, stop, steps }))
    }

    fn build(&self, base_dir: &Path) -> Result<SweepSpec, ConfigError> {
        let real = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
        let mode = match self.require("sweep", "mode")? {
            (_, v) if v.eq_ignore_ascii_case("analytic") => SweepMode::Analytic,
            (_, v) if v.eq_ignore_ascii_case("montecarlo") || v.eq_ignore_ascii_case("mc") => SweepMode::MonteCarlo,
            (l, v) => return Err(ConfigError::new(Some(l), "mode", format!("unknown mode '{v}'"))),
        };
        let variable = match self.require("sweep", "variable")? {
            (_, v) if v.eq_ignore_ascii_case("rotation") => SweepVariable::Rotation,
            (_, v) if v.eq_ignore_ascii_case("fluctuation") => SweepVariable::Fluctuation,
            (_, v) if v.eq_ignore_ascii_case("grid2d") => SweepVariable::Grid2D,
            (l, v) => return Err(ConfigError::new(Some(l), "variable", format!("unknown variable '{v}'"))),
        };
        let (theta_range, delta_range) = match variable {
            SweepVariable::Rotation => (Some(self.need_range("range")?), None),
            SweepVariable::Fluctuation => (None, Some(self.need_range("range")?)),
            SweepVariable::Grid2D => (Some(self.need_range("theta_range")?), Some(self.need_range("delta_range")?)),
        };
        if let Some(r) = delta_range {
            if r.start < 0.0 {
                return Err(ConfigError::new(None, "delta range", "fluctuation half-width cannot be negative"));
            }
        }

        let p = self.parsed("channel", "p", real)?.unwrap_or(0.0);
        let theta = self.parsed("channel", "theta", parse_angle)?;
        let delta = self.parsed("channel", "delta", parse_angle)?;
        let swept_clash = |name: &str| {
            ConfigError::new(self.get("channel", name).map(|(l, _)| l), name, "swept variable cannot also be fixed")
        };
        if theta_range.is_some() && theta.is_some() {
            return Err(swept_clash("theta"));
        }
        if delta_range.is_some() && delta.is_some() {
            return Err(swept_clash("delta"));
        }
        let fixed = FrameParams::new(p, theta.unwrap_or(0.0), delta.unwrap_or(0.0))
            .map_err(|e| {
                let field = match &e {
                    crate::Error::OutOfRange { name, .. } => *name,
                    _ => "channel",
                };
                ConfigError::new(self.get("channel", field).map(|(l, _)| l), field, e.to_string())
            })?;

        let protocols = match self.get("sweep", "protocols") {
            None => ProtocolKind::ALL.to_vec(),
            Some((line, v)) => {
                let mut list = v
                    .split(',')
                    .map(|s| s.parse::<ProtocolKind>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| ConfigError::new(Some(line), "protocols", e.to_string()))?;
                list.sort();
                list.dedup();
                if list.is_empty() {
                    return Err(ConfigError::new(Some(line), "protocols", "empty protocol list"));
                }
                list
            }
        };

        let mc = if mode == SweepMode::MonteCarlo || self.entries.keys().any(|(s, _)| s == "montecarlo") {
            Some(self.montecarlo()?)
        } else {
            None
        };

        let format = match self.get("output", "format") {
            None => OutputFormat::Csv,
            Some((_, v)) if v.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
            Some((_, v)) if v.eq_ignore_ascii_case("json") => OutputFormat::Json,
            Some((l, v)) => return Err(ConfigError::new(Some(l), "format", format!("unknown format '{v}'"))),
        };
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) }
        };
        let path = resolve(self.require("output", "path")?.1);
        let tally_dir = self.get("output", "tally_dir").map(|(_, v)| resolve(v));

        if let Some((_, e)) = self.entries.iter().find(|(_, e)| !e.used.get()) {
            let key = self.entries.iter().find(|(_, x)| x.line == e.line).map(|((_, k), _)| k.clone()).unwrap();
            return Err(ConfigError::new(Some(e.line), &key, "unknown or inapplicable key"));
        }

        Ok(SweepSpec {
            mode,
            variable,
            theta_range,
            delta_range,
            fixed,
            protocols,
            mc,
            output: OutputSpec { format, path, tally_dir },
        })
    }

    fn need_range(&self, key: &str) -> Result<AngleRange, ConfigError> {
        self.range(key)?
            .ok_or_else(|| ConfigError::new(None, &format!("sweep.{key}"), "required field is missing"))
    }

    fn montecarlo(&self) -> Result<MonteCarloSpec, ConfigError> {
        let real = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
        let int = |s: &str| s.trim().replace('_', "").parse::<u64>().map_err(|_| format!("'{s}' is not an integer"));
        let flag = |s: &str| match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("'{s}' is not a boolean")),
        };
        let defaults = (SourceConfig::default(), DetectorConfig::default());
        let source = SourceConfig {
            mean_photon_number: self.parsed("montecarlo", "mean_photon_number", real)?.unwrap_or(defaults.0.mean_photon_number),
            pulse_count: self.parsed("montecarlo", "pulses", int)?.unwrap_or(defaults.0.pulse_count),
        };
        let basis_probabilities = self
            .parsed("montecarlo", "basis_probabilities", |s| {
                let v = s.split(',').map(real).collect::<Result<Vec<_>, _>>()?;
                <[f64; 3]>::try_from(v).map_err(|_| "expected three probabilities".to_string())
            })?
            .unwrap_or(defaults.1.basis_probabilities);
        let detector = DetectorConfig {
            efficiency: self.parsed("montecarlo", "efficiency", real)?.unwrap_or(defaults.1.efficiency),
            dark_count_prob: self.parsed("montecarlo", "dark_count_prob", real)?.unwrap_or(defaults.1.dark_count_prob),
            basis_probabilities,
        };
        let cfg_err = |e: crate::Error| ConfigError::new(None, "montecarlo", e.to_string());
        source.validate().map_err(cfg_err)?;
        detector.validate().map_err(cfg_err)?;
        let mixing_points = self.parsed("montecarlo", "mixing_points", int)?.unwrap_or(65) as usize;
        if mixing_points == 0 {
            return Err(ConfigError::new(None, "mixing_points", "must be at least 1"));
        }
        Ok(MonteCarloSpec {
            source,
            detector,
            seed: self.parsed("montecarlo", "seed", int)?.unwrap_or(0),
            grid_mixing: self.parsed("montecarlo", "grid_mixing", flag)?.unwrap_or(false),
            mixing_points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = "\
[sweep]
mode = analytic
variable = rotation
range = 0, 0.5pi, 64
protocols = rfi, bb84_xy, BB84_XZ, six_state

[channel]
p = 0.06
delta = 0   # aligned on average

[output]
path = out/rotation.csv
";

    #[test]
    fn angles() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(parse_angle("0.19pi").unwrap(), 0.19 * PI));
        assert!(close(parse_angle("0.19 * pi").unwrap(), 0.19 * PI));
        assert!(close(parse_angle("pi/2").unwrap(), PI / 2.0));
        assert!(close(parse_angle("-3pi/4").unwrap(), -0.75 * PI));
        assert!(close(parse_angle("-pi").unwrap(), -PI));
        assert_eq!(parse_angle("1.25").unwrap(), 1.25);
        for bad in ["", "pie", "2pi/0", "x", "pi2"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_rotation_sweep() {
        let spec = SweepSpec::parse(ROTATION, Path::new("/tmp/cfg")).unwrap();
        assert_eq!(spec.mode, SweepMode::Analytic);
        assert_eq!(spec.variable, SweepVariable::Rotation);
        assert_eq!(spec.protocols, ProtocolKind::ALL.to_vec());
        assert_eq!(spec.fixed.p(), 0.06);
        assert_eq!(spec.output.path, PathBuf::from("/tmp/cfg/out/rotation.csv"));
        assert!(spec.mc.is_none());
        let grid = spec.grid();
        assert_eq!(grid.len(), 64);
        assert_eq!(grid[0], (0.0, 0.0));
        assert_eq!(grid[63], (0.5 * PI, 0.0));
    }

    #[test]
    fn grid2d_is_theta_major() {
        let text = "[sweep]\nmode=analytic\nvariable=grid2d\ntheta_range=0,1,3\ndelta_range=0.5,1.5,2\n[channel]\np=0.1\n[output]\npath=/x.csv\n";
        let spec = SweepSpec::parse(text, Path::new(".")).unwrap();
        assert_eq!(spec.grid(), vec![(0.0, 0.5), (0.0, 1.5), (0.5, 0.5), (0.5, 1.5), (1.0, 0.5), (1.0, 1.5)]);
    }

    #[test]
    fn montecarlo_section() {
        let text = ROTATION.replace("mode = analytic", "mode = montecarlo")
            + "[montecarlo]\npulses = 1_000\nseed = 9\ngrid_mixing = yes\nmixing_points = 5\nefficiency = 0.5\n";
        let spec = SweepSpec::parse(&text, Path::new(".")).unwrap();
        let mc = spec.mc.unwrap();
        assert_eq!(mc.source.pulse_count, 1000);
        assert_eq!(mc.seed, 9);
        assert!(mc.grid_mixing);
        assert_eq!(mc.mixing_points, 5);
        assert_eq!(mc.detector.efficiency, 0.5);
        assert_eq!(mc.source.mean_photon_number, 0.5);
    }

    #[test]
    fn diagnostics_name_line_and_field() {
        let cases = [
            (ROTATION.replace("64", "1"), Some(4), "range"),
            (ROTATION.replace("0, 0.5pi", "0.5pi, 0"), Some(4), "range"),
            (ROTATION.replace("delta = 0", "theta = 0.1"), Some(9), "theta"),
            (ROTATION.replace("p = 0.06", "p = lots"), Some(8), "p"),
            (ROTATION.replace("p = 0.06", "p = 0.06\np = 0.07"), Some(9), "p"),
            (ROTATION.replace("mode = analytic", "mode = quantum"), Some(2), "mode"),
            (ROTATION.replace("rfi,", "b92,"), Some(5), "protocols"),
            (ROTATION.replace("[channel]", "[chanel]"), Some(7), "chanel"),
            (ROTATION.replace("p = 0.06", "noise = 0.06"), Some(8), "noise"),
            (ROTATION.replace("path = out/rotation.csv", ""), None, "output.path"),
        ];
        for (text, line, field) in cases {
            let err = SweepSpec::parse(&text, Path::new(".")).unwrap_err();
            assert_eq!((err.line, err.field.as_str()), (line, field), "{err}");
        }
        let err = SweepSpec::parse(&ROTATION.replace("p = 0.06", "p = 1.5"), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("p = 1.5"));
    }
}
