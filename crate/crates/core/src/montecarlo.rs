//! Full-joint Monte Carlo of the SIC receiver.
//!
//! Each trial draws sorted Rayleigh gains (by sorting, not by the spacings
//! representation the analytic engine uses) and a single Bernoulli noise
//! state that holds for the whole SIC chain. Trials are split into fixed-size
//! chunks, each on its own counter-based stream, so counts do not depend on
//! how many workers run the chunks.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analytic::{tdma_threshold, RateScaling};
use crate::channel::{fill_ordered_gains_sort, rayleigh_power, sample_noise_state};
use crate::config::{NoiseState, Scenario};
use crate::error::{invalid, Result};
use crate::rng::{Purpose, StreamKey};

/// Trials per chunk; part of the reproducibility contract.
pub const CHUNK_SIZE: u64 = 1 << 16;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "NOMA_WORKERS";

/// Decoding result of one trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    /// `decode_ok[i - 1]`: sorted user `i` clears its threshold once all
    /// stronger users are cancelled.
    pub decode_ok: Vec<bool>,
    pub noise_state: NoiseState,
}

impl TrialOutcome {
    /// User `j` is lost if it or any user decoded before it fails.
    pub fn in_outage(&self, j: usize) -> bool {
        self.decode_ok[j - 1..].iter().any(|ok| !ok)
    }
}

/// Highest sorted index (1-based) whose decoding fails, 0 if none.
/// Users `1..=k` are then in outage.
fn deepest_failure(sc: &Scenario, gains: &[f64], rho: f64) -> usize {
    let a = sc.powers();
    let phi = sc.thresholds();
    for i in (0..gains.len()).rev() {
        if !decodes(a, gains, phi[i], i, rho) {
            return i + 1;
        }
    }
    0
}

/// Whether 0-based user `i` clears `phi` against the weaker users plus noise.
#[inline]
fn decodes(a: &[f64], gains: &[f64], phi: f64, i: usize, rho: f64) -> bool {
    let below: f64 = a[..i].iter().zip(&gains[..i]).map(|(a, g)| a * g).sum();
    a[i] * gains[i] > phi * (below + 1.0 / rho)
}

fn decode<R: Rng + ?Sized>(sc: &Scenario, gains: &mut [f64], rng: &mut R) -> (NoiseState, f64) {
    fill_ordered_gains_sort(gains, rng);
    let state = sample_noise_state(sc.noise().p, rng);
    (state, sc.precisions().of(state))
}

/// One trial: sorted gains, one noise state, SIC from the strongest user down.
pub fn run_trial<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> TrialOutcome {
    let m = sc.users();
    let mut gains = vec![0.0; m];
    let (state, rho) = decode(sc, &mut gains, rng);
    let a = sc.powers();
    let phi = sc.thresholds();
    let mut decode_ok = vec![false; m];
    for i in (0..m).rev() {
        decode_ok[i] = decodes(a, &gains, phi[i], i, rho);
    }
    TrialOutcome {
        decode_ok,
        noise_state: state,
    }
}

/// Parallelism settings for the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McOptions {
    /// 0 means all available hardware threads.
    pub workers: usize,
    pub chunk_size: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            workers: 0,
            chunk_size: CHUNK_SIZE,
        }
    }
}

impl McOptions {
    /// Reads the worker count from [`WORKERS_ENV`]; unset or unparsable
    /// values fall back to the hardware default.
    pub fn from_env() -> Self {
        let workers = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0);
        Self {
            workers,
            ..Self::default()
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// Monte Carlo estimate for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserEstimate {
    pub user: usize,
    pub outages: u64,
    pub trials: u64,
    pub op_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl UserEstimate {
    fn new(user: usize, outages: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = confidence_interval(outages, trials, 0.95)
            .expect("counts are consistent by construction");
        Self {
            user,
            outages,
            trials,
            op_hat: outages as f64 / trials as f64,
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard error of `op_hat`.
    pub fn std_error(&self) -> f64 {
        (self.op_hat * (1.0 - self.op_hat) / self.trials as f64).sqrt()
    }
}

/// Per-user outage estimates with 95% Wilson intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub users: Vec<UserEstimate>,
}

impl OutageEstimate {
    /// Estimate for user `j` (1-based).
    pub fn user(&self, j: usize) -> &UserEstimate {
        &self.users[j - 1]
    }
}

fn run_chunks<F>(trials: u64, opts: &McOptions, users: usize, chunk: F) -> Result<Vec<u64>>
where
    F: Fn(u64, u64) -> Vec<u64> + Sync,
{
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if opts.chunk_size == 0 {
        return Err(invalid("chunk size must be >= 1"));
    }
    let chunks = trials.div_ceil(opts.chunk_size);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let n = opts.chunk_size.min(trials - c * opts.chunk_size);
                chunk(c, n)
            })
            .reduce(
                || vec![0u64; users],
                |mut acc, part| {
                    acc.iter_mut().zip(part).for_each(|(a, b)| *a += b);
                    acc
                },
            )
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(work))
}

/// NOMA outage of every user from `trials` full-joint trials.
pub fn estimate_outage(sc: &Scenario, trials: u64, seed: u64) -> Result<OutageEstimate> {
    estimate_outage_with(sc, trials, seed, &McOptions::from_env())
}

pub fn estimate_outage_with(
    sc: &Scenario,
    trials: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<OutageEstimate> {
    let m = sc.users();
    let counts = run_chunks(trials, opts, m, |c, n| {
        let mut rng = StreamKey::tagged(seed, Purpose::NomaTrials, c).rng();
        let mut counts = vec![0u64; m];
        let mut gains = vec![0.0; m];
        for _ in 0..n {
            let (_, rho) = decode(sc, &mut gains, &mut rng);
            let k = deepest_failure(sc, &gains, rho);
            counts[..k].iter_mut().for_each(|x| *x += 1);
        }
        counts
    })?;
    Ok(OutageEstimate {
        users: counts
            .into_iter()
            .enumerate()
            .map(|(j, k)| UserEstimate::new(j + 1, k, trials))
            .collect(),
    })
}

/// TDMA baseline: every user alone in its slot with its own gain and state.
pub fn estimate_tdma_outage(
    sc: &Scenario,
    trials: u64,
    seed: u64,
    scaling: RateScaling,
) -> Result<OutageEstimate> {
    estimate_tdma_outage_with(sc, trials, seed, scaling, &McOptions::from_env())
}

pub fn estimate_tdma_outage_with(
    sc: &Scenario,
    trials: u64,
    seed: u64,
    scaling: RateScaling,
    opts: &McOptions,
) -> Result<OutageEstimate> {
    let m = sc.users();
    let thresholds: Vec<f64> = (1..=m).map(|j| tdma_threshold(j, sc, scaling)).collect();
    let counts = run_chunks(trials, opts, m, |c, n| {
        let mut rng = StreamKey::tagged(seed, Purpose::TdmaTrials, c).rng();
        let mut counts = vec![0u64; m];
        for _ in 0..n {
            for (j, count) in counts.iter_mut().enumerate() {
                let g = rayleigh_power(&mut rng);
                let state = sample_noise_state(sc.noise().p, &mut rng);
                let snr = sc.powers()[j] * g * sc.precisions().of(state);
                if snr <= thresholds[j] && thresholds[j] > 0.0 {
                    *count += 1;
                }
            }
        }
        counts
    })?;
    Ok(OutageEstimate {
        users: counts
            .into_iter()
            .enumerate()
            .map(|(j, k)| UserEstimate::new(j + 1, k, trials))
            .collect(),
    })
}

/// Two-sided Wilson score interval for a binomial proportion.
pub fn confidence_interval(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(invalid(format!(
            "need 0 <= successes <= trials, trials >= 1 (got {successes}/{trials})"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(invalid(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    Ok((low.min(p), high.max(p)))
}
