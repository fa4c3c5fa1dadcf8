//! Outage analysis of uplink power-domain NOMA with successive interference
//! cancellation over Rayleigh fading and Bernoulli-Gaussian impulsive noise.
//!
//! The crate offers three independent views of the same quantity:
//!
//! - [`analytic`]: exact per-user outage from closed forms (three users) or
//!   nested quadrature (any number of users);
//! - [`montecarlo`]: a full-joint, link-level simulation with deterministic
//!   counter-based streams;
//! - [`asymptotics`]: finite-SNR diversity slopes and first-order high-SNR
//!   approximations.
//!
//! ```
//! use noma_core::{outage, SystemConfig};
//!
//! let sc = SystemConfig::uniform(3, 0.5, 0.01, 100.0, 10.0).validate().unwrap();
//! let op1 = outage(1, &sc).unwrap();
//! assert!((op1 - 0.133_147).abs() < 1e-5);
//! ```

/// Version of this crate, recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod analytic;
pub mod asymptotics;
pub mod channel;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod sweep;

pub use analytic::{
    outage, outage_all, outage_with, success_auto, success_general, tdma_outage, AnalyticOptions,
    Backend, RateScaling, SuccessProb, SuccessTable,
};
pub use asymptotics::{
    asymptotic_diversity, diversity_slope, gap_db, high_snr_outage_approx, OutageCurve,
};
pub use channel::{NoiseSample, OrderedGains};
pub use config::{
    ConfigFile, NoiseParams, NoiseState, PowerAllocation, Precisions, Scenario, SystemConfig,
};
pub use error::{ConfigIssue, ConfigIssues, Error, Result};
pub use montecarlo::{
    estimate_outage, estimate_outage_with, estimate_tdma_outage, estimate_tdma_outage_with,
    McOptions, OutageEstimate, TrialOutcome, UserEstimate,
};
pub use quadrature::{Estimate, QuadOptions};
pub use rng::{Purpose, RandomStream, StreamKey};
pub use sweep::{
    diversity_report, run_sweep, write_diversity_csv, DiversityRow, Engine, Grid, SweepKind,
    SweepResult, SweepRow, SweepSpec, ValidationReport, Window,
};
