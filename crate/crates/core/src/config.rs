//! Scenario description, validation and unit conversions.
//!
//! A [`SystemConfig`] is the raw, user-facing description (SNR in dB, powers
//! either explicit or as a back-off ladder). [`SystemConfig::validate`] checks
//! every invariant, converts to linear units exactly once, and returns an
//! immutable [`Scenario`] that all engines consume.
//!
//! User indices in the public API are 1-based and refer to the *sorted*
//! order: user 1 has the weakest instantaneous channel gain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, ConfigIssue, ConfigIssues, Error, Result};

/// Which Gaussian component of the Bernoulli-Gaussian mixture is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseState {
    /// Background noise only, variance `sigma_w2`.
    Background,
    /// Background plus impulse, variance `sigma_w2 * (1 + gamma)`.
    Impulsive,
}

impl NoiseState {
    pub const ALL: [NoiseState; 2] = [NoiseState::Background, NoiseState::Impulsive];
}

/// Bernoulli-Gaussian mixture parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Impulse occurrence probability.
    pub p: f64,
    /// Impulsive-to-background power ratio `sigma_I^2 / sigma_w^2`.
    pub gamma: f64,
    /// Background noise variance (linear).
    pub sigma_w2: f64,
}

impl NoiseParams {
    pub fn new(p: f64, gamma: f64, sigma_w2: f64) -> Result<Self> {
        let params = Self { p, gamma, sigma_w2 };
        let issues = params.issues();
        if issues.is_empty() {
            Ok(params)
        } else {
            Err(Error::InvalidConfig(ConfigIssues(issues)))
        }
    }

    fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        if !(0.0..=1.0).contains(&self.p) {
            out.push(ConfigIssue::new("p", "p out of [0,1]"));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            out.push(ConfigIssue::new("gamma", "gamma must be finite and >= 0"));
        }
        if !(self.sigma_w2.is_finite() && self.sigma_w2 > 0.0) {
            out.push(ConfigIssue::new(
                "sigma_w2",
                "sigma_w2 must be finite and > 0",
            ));
        }
        out
    }

    /// Impulse variance `sigma_I^2 = gamma * sigma_w2`.
    pub fn sigma_i2(&self) -> f64 {
        self.gamma * self.sigma_w2
    }

    /// Variance of the noise in the given state.
    pub fn variance(&self, state: NoiseState) -> f64 {
        match state {
            NoiseState::Background => self.sigma_w2,
            NoiseState::Impulsive => self.sigma_w2 + self.sigma_i2(),
        }
    }

    /// Precisions derived from `sigma_w2`.
    pub fn precisions(&self) -> Precisions {
        let rho_w = 1.0 / self.sigma_w2;
        Precisions {
            rho_w,
            rho_i: rho_w / (self.gamma + 1.0),
        }
    }
}

/// Reciprocal noise variances in the two noise states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Precisions {
    pub rho_w: f64,
    pub rho_i: f64,
}

impl Precisions {
    pub fn of(&self, state: NoiseState) -> f64 {
        match state {
            NoiseState::Background => self.rho_w,
            NoiseState::Impulsive => self.rho_i,
        }
    }
}

/// How transmit powers are specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerAllocation {
    /// Linear power per sorted user index.
    Explicit(Vec<f64>),
    /// Geometric ladder: user i is `beta_db` stronger than user i-1.
    Backoff { a1: f64, beta_db: f64 },
}

/// `phi = 2^R - 1`.
pub fn rate_threshold(rate: f64) -> Result<f64> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(invalid(format!(
            "target rate must be finite and >= 0, got {rate}"
        )));
    }
    Ok((rate * std::f64::consts::LN_2).exp_m1())
}

/// `a_i = a1 * 10^(beta_db (i-1) / 10)` for i = 1..=users.
pub fn powers_from_backoff(a1: f64, beta_db: f64, users: usize) -> Result<Vec<f64>> {
    if !(a1.is_finite() && a1 > 0.0) {
        return Err(invalid(format!("a1 must be finite and > 0, got {a1}")));
    }
    if !beta_db.is_finite() {
        return Err(invalid("beta_db must be finite"));
    }
    if users == 0 {
        return Err(invalid("user count must be >= 1"));
    }
    Ok((0..users)
        .map(|i| {
            if i == 0 {
                a1
            } else {
                a1 * 10f64.powf(beta_db * i as f64 / 10.0)
            }
        })
        .collect())
}

/// Linear precisions from an SNR in dB; `rho_I = rho_w / (gamma + 1)`.
pub fn noise_precisions(noise: &NoiseParams, rho_w_db: f64) -> Precisions {
    let rho_w = db_to_linear(rho_w_db);
    Precisions {
        rho_w,
        rho_i: rho_w / (noise.gamma + 1.0),
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Raw scenario description as read from a config file or the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: usize,
    pub powers: PowerAllocation,
    pub target_rates: Vec<f64>,
    pub p: f64,
    pub gamma: f64,
    pub rho_w_db: f64,
}

impl SystemConfig {
    /// Equal unit powers and equal rates.
    pub fn uniform(users: usize, rate: f64, p: f64, gamma: f64, rho_w_db: f64) -> Self {
        Self {
            users,
            powers: PowerAllocation::Explicit(vec![1.0; users]),
            target_rates: vec![rate; users],
            p,
            gamma,
            rho_w_db,
        }
    }

    pub fn with_rho_w_db(mut self, rho_w_db: f64) -> Self {
        self.rho_w_db = rho_w_db;
        self
    }

    pub fn with_impulses(mut self, p: f64, gamma: f64) -> Self {
        self.p = p;
        self.gamma = gamma;
        self
    }

    pub fn with_powers(mut self, powers: PowerAllocation) -> Self {
        self.powers = powers;
        self
    }

    pub fn with_target_rates(mut self, rates: Vec<f64>) -> Self {
        self.target_rates = rates;
        self
    }

    /// Checks every invariant and attaches the derived quantities. Each
    /// violated invariant is reported separately.
    pub fn validate(&self) -> Result<Scenario> {
        let mut issues = Vec::new();
        let users = self.users;
        if users == 0 {
            issues.push(ConfigIssue::new("M", "M must be >= 1"));
        }

        let powers = match &self.powers {
            PowerAllocation::Explicit(a) => {
                if a.len() != users {
                    issues.push(ConfigIssue::new(
                        "a",
                        format!("expected {users} powers, got {}", a.len()),
                    ));
                }
                if a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    issues.push(ConfigIssue::new("a", "all powers must be finite and > 0"));
                }
                a.clone()
            }
            PowerAllocation::Backoff { a1, beta_db } => {
                match powers_from_backoff(*a1, *beta_db, users.max(1)) {
                    Ok(a) => {
                        if a.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                            issues.push(ConfigIssue::new(
                                "beta_db",
                                "back-off overflows the power range",
                            ));
                        }
                        a
                    }
                    Err(e) => {
                        let field = if a1.is_finite() && *a1 > 0.0 {
                            "beta_db"
                        } else {
                            "a1"
                        };
                        issues.push(ConfigIssue::new(field, e.to_string()));
                        Vec::new()
                    }
                }
            }
        };

        if self.target_rates.len() != users {
            issues.push(ConfigIssue::new(
                "rates",
                format!(
                    "expected {users} target rates, got {}",
                    self.target_rates.len()
                ),
            ));
        }
        let mut thresholds = Vec::with_capacity(self.target_rates.len());
        for &r in &self.target_rates {
            match rate_threshold(r) {
                Ok(phi) => thresholds.push(phi),
                Err(_) => {
                    issues.push(ConfigIssue::new(
                        "rates",
                        format!("rate {r} must be finite and >= 0"),
                    ));
                    break;
                }
            }
        }

        if !self.rho_w_db.is_finite() {
            issues.push(ConfigIssue::new("rho_w_db", "rho_w_db must be finite"));
        }
        let noise = NoiseParams {
            p: self.p,
            gamma: self.gamma,
            sigma_w2: 1.0 / db_to_linear(self.rho_w_db),
        };
        let noise_issues = noise.issues();
        // sigma_w2 is derived here, so a bad value is already reported under rho_w_db.
        issues.extend(noise_issues.into_iter().filter(|i| i.field != "sigma_w2"));

        if !issues.is_empty() {
            return Err(Error::InvalidConfig(ConfigIssues(issues)));
        }

        let precisions = noise_precisions(&noise, self.rho_w_db);
        Ok(Scenario {
            source: self.clone(),
            powers,
            thresholds,
            noise,
            precisions,
        })
    }
}

/// A validated scenario with all derived quantities in linear units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    source: SystemConfig,
    powers: Vec<f64>,
    thresholds: Vec<f64>,
    noise: NoiseParams,
    precisions: Precisions,
}

impl Scenario {
    pub fn config(&self) -> &SystemConfig {
        &self.source
    }

    pub fn users(&self) -> usize {
        self.source.users
    }

    /// Linear powers indexed by sorted user (0-based slice).
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    /// SINR thresholds `phi_i` (0-based slice).
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn target_rates(&self) -> &[f64] {
        &self.source.target_rates
    }

    pub fn noise(&self) -> &NoiseParams {
        &self.noise
    }

    pub fn precisions(&self) -> Precisions {
        self.precisions
    }

    pub fn rho_w_db(&self) -> f64 {
        self.source.rho_w_db
    }

    /// Power of sorted user `i` (1-based).
    pub fn power(&self, i: usize) -> f64 {
        self.powers[i - 1]
    }

    /// Threshold of sorted user `i` (1-based).
    pub fn threshold(&self, i: usize) -> f64 {
        self.thresholds[i - 1]
    }

    /// `phi_i * sum_{q<i} a_q`, the right-hand side of the closed-form
    /// validity condition for user `i` (1-based).
    pub fn interference_bound(&self, i: usize) -> f64 {
        self.threshold(i) * self.powers[..i - 1].iter().sum::<f64>()
    }

    /// Whether `a_i > phi_i * sum_{q<i} a_q`, i.e. user `i` can be decoded in
    /// the noiseless limit and the bounded-region closed form applies.
    pub fn decodable(&self, i: usize) -> bool {
        self.power(i) > self.interference_bound(i)
    }

    pub(crate) fn check_user(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.users() {
            Err(invalid(format!(
                "user index {i} outside 1..={}",
                self.users()
            )))
        } else {
            Ok(())
        }
    }
}

/// Parsed contents of a `key = value` scenario file.
///
/// Recognised keys: `M`, `a` (comma list) or `a1` + `beta_db`, `rates`
/// (comma list), `p`, `gamma`, `rho_w_db`. Blank lines and `#` comments are
/// ignored; unknown or repeated keys are errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub users: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub a1: Option<f64>,
    pub beta_db: Option<f64>,
    pub rates: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub rho_w_db: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = ConfigFile::default();
        let mut seen: Vec<&str> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let perr = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let scalar = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| perr(format!("`{key}`: `{v}` is not a number")))
            };
            let list =
                |v: &str| -> Result<Vec<f64>> { v.split(',').map(|s| scalar(s.trim())).collect() };

            let canonical = match key {
                "M" => {
                    let m = value.parse::<usize>().map_err(|_| {
                        perr(format!("`M`: `{value}` is not a non-negative integer"))
                    })?;
                    out.users = Some(m);
                    "M"
                }
                "a" => {
                    out.a = Some(list(value)?);
                    "a"
                }
                "a1" => {
                    out.a1 = Some(scalar(value)?);
                    "a1"
                }
                "beta_db" => {
                    out.beta_db = Some(scalar(value)?);
                    "beta_db"
                }
                "rates" => {
                    out.rates = Some(list(value)?);
                    "rates"
                }
                "p" => {
                    out.p = Some(scalar(value)?);
                    "p"
                }
                "gamma" => {
                    out.gamma = Some(scalar(value)?);
                    "gamma"
                }
                "rho_w_db" => {
                    out.rho_w_db = Some(scalar(value)?);
                    "rho_w_db"
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            };
            if seen.contains(&canonical) {
                return Err(perr(format!("duplicate key `{canonical}`")));
            }
            seen.push(canonical);
        }
        Ok(out)
    }

    /// Fills `rho_w_db` if the file leaves it out.
    pub fn or_rho_w_db(mut self, rho_w_db: f64) -> Self {
        self.rho_w_db.get_or_insert(rho_w_db);
        self
    }

    /// Fills `a1` if the file gives neither `a` nor `a1`.
    pub fn or_a1(mut self, a1: f64) -> Self {
        if self.a.is_none() {
            self.a1.get_or_insert(a1);
        }
        self
    }

    /// Converts to a [`SystemConfig`]; every missing key is reported by name.
    pub fn to_system_config(&self) -> Result<SystemConfig> {
        let mut issues = Vec::new();
        let mut need = |v: Option<f64>, key: &str| -> f64 {
            v.unwrap_or_else(|| {
                issues.push(ConfigIssue::new(key, format!("missing key `{key}`")));
                f64::NAN
            })
        };
        let p = need(self.p, "p");
        let gamma = need(self.gamma, "gamma");
        let rho_w_db = need(self.rho_w_db, "rho_w_db");

        let users = self.users.unwrap_or_else(|| {
            issues.push(ConfigIssue::new("M", "missing key `M`"));
            0
        });
        let target_rates = self.rates.clone().unwrap_or_else(|| {
            issues.push(ConfigIssue::new("rates", "missing key `rates`"));
            Vec::new()
        });
        let powers = match (&self.a, self.a1, self.beta_db) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                issues.push(ConfigIssue::new(
                    "a",
                    "give either `a` or `a1`/`beta_db`, not both",
                ));
                PowerAllocation::Explicit(Vec::new())
            }
            (Some(a), None, None) => PowerAllocation::Explicit(a.clone()),
            (None, Some(a1), beta) => PowerAllocation::Backoff {
                a1,
                beta_db: beta.unwrap_or(0.0),
            },
            (None, None, Some(_)) => {
                issues.push(ConfigIssue::new(
                    "a1",
                    "missing key `a1` (required with `beta_db`)",
                ));
                PowerAllocation::Explicit(Vec::new())
            }
            (None, None, None) => {
                issues.push(ConfigIssue::new(
                    "a",
                    "missing key `a` (or `a1` + `beta_db`)",
                ));
                PowerAllocation::Explicit(Vec::new())
            }
        };
        if !issues.is_empty() {
            return Err(Error::InvalidConfig(ConfigIssues(issues)));
        }
        Ok(SystemConfig {
            users,
            powers,
            target_rates,
            p,
            gamma,
            rho_w_db,
        })
    }
}

impl std::str::FromStr for SystemConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConfigFile::parse(s)?.to_system_config()
    }
}
