//! Config-driven analytic and Monte Carlo sweeps over (θ, δ) and their
//! CSV/JSON output.

mod config;
mod emit;
mod run;

pub use config::{
    parse_angle, AngleRange, ConfigError, MonteCarloSpec, OutputFormat, OutputSpec, SweepMode, SweepSpec,
    SweepVariable,
};
pub use emit::{emit, format_real, read_csv, read_json, to_csv_string, EmitError, CSV_HEADER};
pub use run::{run_sweep, CrossCheck, SweepOutcome, SweepRow};
