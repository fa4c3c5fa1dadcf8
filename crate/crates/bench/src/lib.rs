//! Benchmark fixtures shared by the criterion targets.

use noma_core::SystemConfig;

/// Three equal-power users at rate 0.5 under moderate impulsive noise.
pub fn reference_config(rho_w_db: f64) -> SystemConfig {
    SystemConfig::uniform(3, 0.5, 0.01, 100.0, rho_w_db)
}
