//! Analytic per-user success and outage probabilities.
//!
//! Sorted gains are represented through exponential spacings: gain `i` is
//! `y_1 + ... + y_i` with `y_k` exponential of rate `M + 1 - k`. Conditioned on
//! `y_2..y_i`, whether user `i` decodes is a linear condition on `y_1`:
//!
//! ```text
//! den * y_1 > N(y_2..y_i),   den = a_i - phi_i * sum_{q<i} a_q,
//! N = phi_i / rho_s - sum_{k=2}^{i} c_k y_k,   c_k = a_i - phi_i * sum_{q=k}^{i-1} a_q
//! ```
//!
//! The sign of `den` selects which side of `N = 0` carries probability mass,
//! and the `y_1` probability is available in closed form. What remains is an
//! expectation over `y_2..y_i`, evaluated by nested quadrature or by
//! conditional Monte Carlo. For three users the expectation has closed forms
//! when `den > 0`.

use rand_distr::{Distribution, Exp1};

use crate::channel::OrderedGains;
use crate::config::{NoiseState, Scenario};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_with_breaks, Estimate, QuadOptions};
use crate::rng::{Purpose, StreamKey};

/// Probability that a user is decoded, carried together with its complement
/// so that tiny failure probabilities keep their relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProb {
    pub success: f64,
    pub failure: f64,
    /// Absolute error estimate (quadrature) or standard error (Monte Carlo).
    pub error: f64,
}

impl SuccessProb {
    pub fn from_success(success: f64, error: f64) -> Self {
        let success = success.clamp(0.0, 1.0);
        Self {
            success,
            failure: 1.0 - success,
            error,
        }
    }

    pub fn from_failure(failure: f64, error: f64) -> Self {
        let failure = failure.clamp(0.0, 1.0);
        Self {
            success: 1.0 - failure,
            failure,
            error,
        }
    }
}

/// Which backend evaluates the expectation over `y_2..y_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    /// Deterministic nested Gauss-Kronrod quadrature; supports `i <= 4`.
    Quadrature(QuadOptions),
    /// Sample `y_2..y_i`, average the closed-form conditional over `y_1`.
    ConditionalMc { samples: u64, key: StreamKey },
}

/// Deepest nesting handled by the quadrature backend.
pub const MAX_QUADRATURE_USER: usize = 4;

/// Closed-form failure probabilities below this are recomputed with the
/// general engine, which integrates the failure probability directly.
/// The closed forms return `1 - failure` and lose the digits of `failure`
/// to cancellation at high SNR.
pub const CLOSED_FORM_FAILURE_FLOOR: f64 = 1e-6;

fn require_three(sc: &Scenario) -> Result<()> {
    if sc.users() != 3 {
        return Err(Error::WrongEngine {
            expected: 3,
            actual: sc.users(),
        });
    }
    Ok(())
}

fn require_decodable(sc: &Scenario, i: usize) -> Result<()> {
    if !sc.decodable(i) {
        return Err(Error::ConditionViolated {
            user: i,
            power: sc.power(i),
            bound: sc.interference_bound(i),
        });
    }
    Ok(())
}

/// Weakest user of a three-user scenario: `exp(-3 phi_1 / (rho_s a_1))`.
pub fn success_user1_m3(sc: &Scenario, state: NoiseState) -> Result<f64> {
    require_three(sc)?;
    let rho = sc.precisions().of(state);
    Ok((-3.0 * sc.threshold(1) / (rho * sc.power(1))).exp())
}

/// Middle user of a three-user scenario; requires `a_2 > phi_2 a_1`.
pub fn success_user2_m3(sc: &Scenario, state: NoiseState) -> Result<f64> {
    require_three(sc)?;
    require_decodable(sc, 2)?;
    let rho = sc.precisions().of(state);
    let (a1, a2) = (sc.power(1), sc.power(2));
    let phi = sc.threshold(2);
    let d = a2 - phi * a1;
    let solo = (-2.0 * phi / (rho * a2)).exp();
    let shared = (-3.0 * phi / (rho * d)).exp();
    let value = solo + (shared - solo) / (1.0 - 3.0 * a2 / (2.0 * d));
    Ok(value.clamp(0.0, 1.0))
}

/// Strongest user of a three-user scenario; requires `a_3 > phi_3 (a_1 + a_2)`.
pub fn success_user3_m3(sc: &Scenario, state: NoiseState) -> Result<f64> {
    require_three(sc)?;
    require_decodable(sc, 3)?;
    let rho = sc.precisions().of(state);
    let (a1, a2, a3) = (sc.power(1), sc.power(2), sc.power(3));
    let phi = sc.threshold(3);
    let c1 = a3 - phi * a2;
    let c2 = a3 - phi * (a1 + a2);
    let u = phi / rho;
    // Exponents are combined so every term is a difference of two values in
    // [0, 1]; validity gives k < -1, r1 < -1 and r2 < -2, so no term divides
    // by a small number.
    let k = 2.0 - 3.0 * c1 / c2;
    let r1 = 1.0 - 2.0 * a3 / c1;
    let r2 = 1.0 - 3.0 * a3 / c2;
    let solo = (-u / a3).exp();
    let pair = (-2.0 * u / c1).exp();
    let triple = (-3.0 * u / c2).exp();

    let first = solo;
    let second = (pair - solo) / r1;
    let third = 2.0 / k * ((triple - solo) / r2 - (pair - solo) / r1);
    Ok((first + second + third).clamp(0.0, 1.0))
}

fn closed_form_m3(i: usize, sc: &Scenario, state: NoiseState) -> Result<f64> {
    match i {
        1 => success_user1_m3(sc, state),
        2 => success_user2_m3(sc, state),
        3 => success_user3_m3(sc, state),
        _ => Err(invalid(format!("no closed form for user {i}"))),
    }
}

/// Linear structure of user `i`'s decoding condition in the spacings.
struct DecodeGeometry {
    users: usize,
    /// `c_k` for k = 1..=i (index 0 is `den`).
    coef: Vec<f64>,
    /// `phi_i / rho_s`.
    offset: f64,
    mode: Mode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// `den > 0`: failure is `F_{y1}(N / den)` on `N > 0`.
    Bounded,
    /// `den = 0`: success iff `N < 0`.
    Degenerate,
    /// `den < 0`: success is `F_{y1}(N / den)` on `N < 0`.
    Unbounded,
}

impl DecodeGeometry {
    fn new(i: usize, sc: &Scenario, state: NoiseState) -> Self {
        let phi = sc.threshold(i);
        let a = sc.powers();
        let ai = a[i - 1];
        // c_k = a_i - phi * sum_{q=k}^{i-1} a_q, built from the top down.
        let mut coef = vec![0.0; i];
        let mut tail = 0.0;
        for k in (1..=i).rev() {
            coef[k - 1] = ai - phi * tail;
            if k >= 2 {
                tail += a[k - 2];
            }
        }
        let den = coef[0];
        let scale = ai.max(phi * a[..i - 1].iter().sum::<f64>());
        let mode = if den.abs() <= 1e-12 * scale {
            Mode::Degenerate
        } else if den > 0.0 {
            Mode::Bounded
        } else {
            Mode::Unbounded
        };
        Self {
            users: sc.users(),
            coef,
            offset: phi / sc.precisions().of(state),
            mode,
        }
    }

    fn rate(&self, k: usize) -> f64 {
        (self.users + 1 - k) as f64
    }

    /// Conditional probability of the tracked event given the residual `N`:
    /// failure in bounded mode, success otherwise.
    fn conditional(&self, n: f64) -> f64 {
        let m = self.users as f64;
        let den = self.coef[0];
        match self.mode {
            Mode::Bounded if n > 0.0 => -(-m * n / den).exp_m1(),
            Mode::Bounded => 0.0,
            Mode::Degenerate => (n < 0.0) as u8 as f64,
            Mode::Unbounded if n < 0.0 => -(-m * n / den).exp_m1(),
            Mode::Unbounded => 0.0,
        }
    }

    fn finish(&self, tracked: Estimate) -> SuccessProb {
        match self.mode {
            Mode::Bounded => SuccessProb::from_failure(tracked.value, tracked.error),
            _ => SuccessProb::from_success(tracked.value, tracked.error),
        }
    }
}

// exp(-rate * y) < 1e-16 beyond this many mean lifetimes
const TAIL_LIFETIMES: f64 = 36.841_361_487_904_734;

fn integrate_level(
    geo: &DecodeGeometry,
    k: usize,
    residual: f64,
    opts: &QuadOptions,
) -> Result<Estimate> {
    if k == 1 {
        return Ok(Estimate::exact(geo.conditional(residual)));
    }
    let ck = geo.coef[k - 1];
    let rate = geo.rate(k);
    let tail = TAIL_LIFETIMES / rate;

    // Residual vanishes at y_k = residual / c_k; the tracked region changes
    // shape there, so it is either an end point or a break point.
    let cross = if ck != 0.0 { residual / ck } else { f64::NAN };
    let mut points = vec![0.0];
    let upper = match geo.mode {
        // all c_k > 0: nothing beyond the crossing
        Mode::Bounded => {
            if residual <= 0.0 {
                return Ok(Estimate::exact(0.0));
            }
            cross.min(tail)
        }
        // c_k < 0 implies every inner c is negative too, so the event needs
        // the residual to be negative already.
        _ if ck < 0.0 => {
            if residual >= 0.0 {
                return Ok(Estimate::exact(0.0));
            }
            cross.min(tail)
        }
        _ => {
            if cross > 0.0 && cross < tail {
                points.push(cross);
            }
            tail
        }
    };
    points.push(upper);

    integrate_with_breaks(
        |y| {
            let inner = integrate_level(geo, k - 1, residual - ck * y, opts)?;
            let w = rate * (-rate * y).exp();
            Ok(Estimate {
                value: w * inner.value,
                error: w * inner.error,
            })
        },
        &points,
        opts,
    )
}

fn conditional_mc(
    geo: &DecodeGeometry,
    i: usize,
    samples: u64,
    key: StreamKey,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(invalid("conditional Monte Carlo needs at least 2 samples"));
    }
    let mut rng = key.rng();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let mut n = geo.offset;
        for k in 2..=i {
            let y: f64 = Exp1.sample(&mut rng);
            n -= geo.coef[k - 1] * y / geo.rate(k);
        }
        let v = geo.conditional(n);
        sum += v;
        sum2 += v * v;
    }
    let count = samples as f64;
    let mean = sum / count;
    let var = ((sum2 / count - mean * mean) * count / (count - 1.0)).max(0.0);
    Ok(Estimate {
        value: mean,
        error: (var / count).sqrt(),
    })
}

/// Success probability of sorted user `i` in noise state `state`, for any
/// user count and any power/threshold relation.
pub fn success_general(
    i: usize,
    sc: &Scenario,
    state: NoiseState,
    backend: &Backend,
) -> Result<SuccessProb> {
    sc.check_user(i)?;
    let geo = DecodeGeometry::new(i, sc, state);
    let tracked = match backend {
        Backend::Quadrature(opts) => {
            if i > MAX_QUADRATURE_USER {
                return Err(invalid(format!(
                    "quadrature backend handles users up to {MAX_QUADRATURE_USER}, got {i}"
                )));
            }
            integrate_level(&geo, i, geo.offset, opts)?
        }
        Backend::ConditionalMc { samples, key } => {
            if i == 1 {
                Estimate::exact(geo.conditional(geo.offset))
            } else {
                conditional_mc(&geo, i, *samples, *key)?
            }
        }
    };
    Ok(geo.finish(tracked))
}

/// Knobs for [`outage_with`] and friends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOptions {
    pub quadrature: QuadOptions,
    /// Use the three-user closed forms where they apply.
    pub closed_forms: bool,
    /// Samples for the conditional Monte Carlo fallback (`i > 4`).
    pub mc_samples: u64,
    pub mc_seed: u64,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self {
            quadrature: QuadOptions::default(),
            closed_forms: true,
            mc_samples: 1_000_000,
            mc_seed: 0x5eed,
        }
    }
}

/// Success probability using the preferred evaluator for user `i`.
pub fn success_auto(
    i: usize,
    sc: &Scenario,
    state: NoiseState,
    opts: &AnalyticOptions,
) -> Result<SuccessProb> {
    sc.check_user(i)?;
    if opts.closed_forms && sc.users() == 3 && sc.decodable(i) {
        let s = closed_form_m3(i, sc, state)?;
        let f = 1.0 - s;
        if f >= CLOSED_FORM_FAILURE_FLOOR || f == 0.0 && sc.threshold(i) == 0.0 {
            return Ok(SuccessProb::from_success(s, 0.0));
        }
    }
    let backend = if i <= MAX_QUADRATURE_USER {
        Backend::Quadrature(opts.quadrature)
    } else {
        let index = (i as u64) << 1 | (state == NoiseState::Impulsive) as u64;
        Backend::ConditionalMc {
            samples: opts.mc_samples,
            key: StreamKey::tagged(opts.mc_seed, Purpose::ConditionalMc, index),
        }
    };
    success_general(i, sc, state, &backend)
}

/// `Pr(E^c_{i|s})` for every user and state.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessTable {
    background: Vec<SuccessProb>,
    impulsive: Vec<SuccessProb>,
}

impl SuccessTable {
    pub fn compute(sc: &Scenario, opts: &AnalyticOptions) -> Result<Self> {
        let users = 1..=sc.users();
        let p = sc.noise().p;
        // A state with zero weight is never read by the outage combiner.
        let idle = SuccessProb::from_success(f64::NAN, 0.0);
        let fill = |state, needed: bool| -> Result<Vec<SuccessProb>> {
            users
                .clone()
                .map(|i| {
                    if needed {
                        success_auto(i, sc, state, opts)
                    } else {
                        Ok(idle)
                    }
                })
                .collect()
        };
        Ok(Self {
            background: fill(NoiseState::Background, p < 1.0)?,
            impulsive: fill(NoiseState::Impulsive, p > 0.0)?,
        })
    }

    /// Entry for user `i` (1-based).
    pub fn get(&self, i: usize, state: NoiseState) -> SuccessProb {
        match state {
            NoiseState::Background => self.background[i - 1],
            NoiseState::Impulsive => self.impulsive[i - 1],
        }
    }

    /// `1 - prod_{i=j}^{M} Pr(E^c_{i|s})`, accurate for small values.
    pub fn chain_failure(&self, j: usize, state: NoiseState) -> f64 {
        let row = match state {
            NoiseState::Background => &self.background,
            NoiseState::Impulsive => &self.impulsive,
        };
        let mut log_success = 0.0;
        for s in &row[j - 1..] {
            if s.failure >= 1.0 {
                return 1.0;
            }
            log_success += (-s.failure).ln_1p();
        }
        -log_success.exp_m1()
    }

    /// Mixture outage of user `j` (1-based) with impulse probability `p`.
    pub fn outage(&self, j: usize, p: f64) -> f64 {
        let mut out = 0.0;
        if p < 1.0 {
            out += (1.0 - p) * self.chain_failure(j, NoiseState::Background);
        }
        if p > 0.0 {
            out += p * self.chain_failure(j, NoiseState::Impulsive);
        }
        out.clamp(0.0, 1.0)
    }
}

/// Outage of sorted user `j`: user `j` or any stronger user in the SIC chain
/// fails, with the noise state common to the whole chain.
pub fn outage(j: usize, sc: &Scenario) -> Result<f64> {
    outage_with(j, sc, &AnalyticOptions::default())
}

pub fn outage_with(j: usize, sc: &Scenario, opts: &AnalyticOptions) -> Result<f64> {
    sc.check_user(j)?;
    Ok(SuccessTable::compute(sc, opts)?.outage(j, sc.noise().p))
}

/// Outage of every user, sharing one success table.
pub fn outage_all(sc: &Scenario, opts: &AnalyticOptions) -> Result<Vec<f64>> {
    let table = SuccessTable::compute(sc, opts)?;
    let p = sc.noise().p;
    Ok((1..=sc.users()).map(|j| table.outage(j, p)).collect())
}

/// State-averaged instantaneous SINR of user `j`. Diagnostic only: outage
/// conditions on the noise state instead of averaging SINRs.
pub fn mixture_sinr(j: usize, gains: &OrderedGains, sc: &Scenario) -> Result<f64> {
    sc.check_user(j)?;
    if gains.len() != sc.users() {
        return Err(invalid(format!(
            "expected {} gains, got {}",
            sc.users(),
            gains.len()
        )));
    }
    let a = sc.powers();
    let g = gains.as_slice();
    let signal = a[j - 1] * g[j - 1];
    let interference: f64 = a[..j - 1].iter().zip(&g[..j - 1]).map(|(a, g)| a * g).sum();
    let pr = sc.precisions();
    let p = sc.noise().p;
    Ok((1.0 - p) * signal / (interference + 1.0 / pr.rho_w)
        + p * signal / (interference + 1.0 / pr.rho_i))
}

/// How a TDMA user's rate target maps to its slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateScaling {
    /// Each user holds 1/M of the time and must reach `M * R` in its slot.
    #[default]
    Slots,
    /// Threshold unchanged.
    None,
}

impl std::str::FromStr for RateScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slots" => Ok(Self::Slots),
            "none" => Ok(Self::None),
            other => Err(invalid(format!(
                "unknown rate scaling `{other}` (slots|none)"
            ))),
        }
    }
}

/// SINR threshold a TDMA user must meet in its own slot.
pub fn tdma_threshold(j: usize, sc: &Scenario, scaling: RateScaling) -> f64 {
    match scaling {
        RateScaling::Slots => {
            (sc.users() as f64 * sc.target_rates()[j - 1] * std::f64::consts::LN_2).exp_m1()
        }
        RateScaling::None => sc.threshold(j),
    }
}

/// Outage of user `j` when every user transmits alone in its slot over an
/// unordered unit-mean Rayleigh channel.
pub fn tdma_outage(j: usize, sc: &Scenario, scaling: RateScaling) -> Result<f64> {
    sc.check_user(j)?;
    let phi = tdma_threshold(j, sc, scaling);
    let a = sc.power(j);
    let pr = sc.precisions();
    let p = sc.noise().p;
    let fail = |rho: f64| -(-phi / (rho * a)).exp_m1();
    let mut out = 0.0;
    if p < 1.0 {
        out += (1.0 - p) * fail(pr.rho_w);
    }
    if p > 0.0 {
        out += p * fail(pr.rho_i);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{PowerAllocation, SystemConfig};
    use approx::assert_abs_diff_eq;

    fn scenario(rho_w_db: f64, p: f64, gamma: f64) -> Scenario {
        SystemConfig::uniform(3, 0.5, p, gamma, rho_w_db)
            .validate()
            .unwrap()
    }

    fn quad() -> Backend {
        Backend::Quadrature(QuadOptions::default())
    }

    #[test]
    fn closed_forms_reference_values() {
        let sc = scenario(10.0, 0.0, 0.0);
        let w = NoiseState::Background;
        assert_abs_diff_eq!(
            success_user1_m3(&sc, w).unwrap(),
            0.883_146_598_7,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            success_user2_m3(&sc, w).unwrap(),
            0.992_028_483_2,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            success_user3_m3(&sc, w).unwrap(),
            0.999_431_711_1,
            epsilon = 1e-9
        );
    }

    #[test]
    fn zero_threshold_always_succeeds() {
        let sc = SystemConfig::uniform(3, 0.0, 0.3, 10.0, 0.0)
            .validate()
            .unwrap();
        for state in NoiseState::ALL {
            assert_eq!(success_user1_m3(&sc, state).unwrap(), 1.0);
            assert_eq!(success_user2_m3(&sc, state).unwrap(), 1.0);
            assert_eq!(success_user3_m3(&sc, state).unwrap(), 1.0);
            for i in 1..=3 {
                assert_eq!(
                    success_general(i, &sc, state, &quad()).unwrap().success,
                    1.0
                );
            }
        }
        assert_eq!(outage(1, &sc).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_limit() {
        let sc = scenario(120.0, 0.0, 0.0);
        let s = success_user1_m3(&sc, NoiseState::Background).unwrap();
        assert!((1.0 - s) < 1e-9);
    }

    #[test]
    fn closed_forms_check_engine_and_condition() {
        let four = SystemConfig::uniform(4, 0.5, 0.0, 0.0, 10.0)
            .validate()
            .unwrap();
        assert!(matches!(
            success_user1_m3(&four, NoiseState::Background),
            Err(Error::WrongEngine {
                expected: 3,
                actual: 4
            })
        ));
        let greedy = SystemConfig::uniform(3, 2.0, 0.0, 0.0, 10.0)
            .validate()
            .unwrap();
        assert!(matches!(
            success_user2_m3(&greedy, NoiseState::Background),
            Err(Error::ConditionViolated { user: 2, .. })
        ));
        assert!(matches!(
            success_user3_m3(&greedy, NoiseState::Background),
            Err(Error::ConditionViolated { user: 3, .. })
        ));
    }

    #[test]
    fn general_matches_closed_forms() {
        let sc = scenario(10.0, 0.0, 0.0);
        let w = NoiseState::Background;
        let g1 = success_general(1, &sc, w, &quad()).unwrap();
        let g2 = success_general(2, &sc, w, &quad()).unwrap();
        let g3 = success_general(3, &sc, w, &quad()).unwrap();
        assert_abs_diff_eq!(g1.success, 0.883_146_598_7, epsilon = 1e-9);
        assert_abs_diff_eq!(
            g2.success,
            success_user2_m3(&sc, w).unwrap(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            g3.success,
            success_user3_m3(&sc, w).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn outage_reference_values() {
        // products of the three closed-form values; see the crate tests for
        // the Monte Carlo cross-check
        assert_abs_diff_eq!(
            outage(1, &scenario(10.0, 0.0, 0.0)).unwrap(),
            0.124_391_30,
            epsilon = 1e-7
        );
        assert_abs_diff_eq!(
            outage(1, &scenario(10.0, 0.01, 100.0)).unwrap(),
            0.133_147_39,
            epsilon = 1e-7
        );
    }

    #[test]
    fn degenerate_middle_case() {
        // phi = 1 with equal powers: a_2 = phi * a_1 exactly.
        let sc = SystemConfig::uniform(3, 1.0, 0.0, 0.0, 10.0)
            .validate()
            .unwrap();
        assert!(!sc.decodable(2));
        let s = success_general(2, &sc, NoiseState::Background, &quad()).unwrap();
        // success iff a_2 y_2 > phi / rho, y_2 ~ Exp(2)
        assert_abs_diff_eq!(s.success, (-2.0 * 0.1f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn unbounded_case_matches_mc() {
        // phi = 3 > 1: user 2 only decodes when its gain dominates strongly
        let sc = SystemConfig::uniform(3, 2.0, 0.0, 0.0, 20.0)
            .validate()
            .unwrap();
        let q = success_general(2, &sc, NoiseState::Background, &quad()).unwrap();
        let mc = success_general(
            2,
            &sc,
            NoiseState::Background,
            &Backend::ConditionalMc {
                samples: 400_000,
                key: StreamKey::new(9, 0),
            },
        )
        .unwrap();
        assert!(q.success > 0.0 && q.success < 1.0);
        assert!(
            (q.success - mc.success).abs() <= 3.0 * (q.error + mc.error),
            "{q:?} {mc:?}"
        );
    }

    #[test]
    fn mixture_sinr_examples() {
        let sc = scenario(10.0, 0.0, 0.0);
        let g = OrderedGains::new(vec![0.2, 0.5, 1.0]).unwrap();
        assert_abs_diff_eq!(mixture_sinr(1, &g, &sc).unwrap(), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            mixture_sinr(2, &g, &sc).unwrap(),
            0.5 / 0.3,
            epsilon = 1e-12
        );
        let collapsed = scenario(10.0, 1.0, 0.0);
        assert_abs_diff_eq!(
            mixture_sinr(2, &g, &collapsed).unwrap(),
            mixture_sinr(2, &g, &sc).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn closed_forms_survive_tiny_precision() {
        // rho_I near 1e-3 used to overflow an intermediate exponential
        let sc = SystemConfig::uniform(3, 0.5, 0.16, 776.6, -0.25)
            .with_powers(PowerAllocation::Explicit(vec![0.3726, 1.7912, 1.6783]))
            .validate()
            .unwrap();
        let quad = Backend::Quadrature(QuadOptions::default());
        for i in 1..=3 {
            let c = closed_form_m3(i, &sc, NoiseState::Impulsive).unwrap();
            let g = success_general(i, &sc, NoiseState::Impulsive, &quad).unwrap();
            assert!(
                c.is_finite() && (c - g.success).abs() < 1e-9,
                "user {i}: {c} vs {}",
                g.success
            );
        }
    }

    #[test]
    fn tdma_examples() {
        let sc = scenario(10.0, 0.0, 0.0);
        assert_abs_diff_eq!(
            tdma_outage(1, &sc, RateScaling::Slots).unwrap(),
            0.167_100_85,
            epsilon = 1e-8
        );
        let imp = scenario(10.0, 0.01, 100.0);
        assert_abs_diff_eq!(
            tdma_outage(1, &imp, RateScaling::Slots).unwrap(),
            0.175_429_84,
            epsilon = 1e-8
        );
        let zero = SystemConfig::uniform(3, 0.0, 0.5, 10.0, 10.0)
            .validate()
            .unwrap();
        assert_eq!(tdma_outage(2, &zero, RateScaling::Slots).unwrap(), 0.0);
        // unscaled threshold: 1 - exp(-0.414214 / 10)
        assert_abs_diff_eq!(
            tdma_outage(1, &sc, RateScaling::None).unwrap(),
            0.040_575_3,
            epsilon = 1e-6
        );
    }

    #[test]
    fn rejects_bad_user_index() {
        let sc = scenario(10.0, 0.0, 0.0);
        assert!(outage(0, &sc).is_err());
        assert!(outage(4, &sc).is_err());
        assert!(success_general(5, &sc, NoiseState::Background, &quad()).is_err());
    }

    #[test]
    fn quadrature_depth_limit() {
        let sc = SystemConfig::uniform(5, 0.2, 0.0, 0.0, 10.0)
            .validate()
            .unwrap();
        assert!(success_general(5, &sc, NoiseState::Background, &quad()).is_err());
        // the auto path falls back to conditional Monte Carlo
        let o = outage_all(
            &sc,
            &AnalyticOptions {
                mc_samples: 20_000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(o.windows(2).all(|w| w[0] >= w[1] - 1e-3), "{o:?}");
    }

    #[test]
    fn backoff_scenario_validity() {
        let sc = SystemConfig::uniform(3, 0.5, 0.01, 1000.0, 15.0)
            .with_powers(PowerAllocation::Backoff {
                a1: 1.0,
                beta_db: 3.0,
            })
            .validate()
            .unwrap();
        assert!((1..=3).all(|i| sc.decodable(i)));
        assert!(outage(3, &sc).unwrap() < outage(2, &sc).unwrap());
    }
}
