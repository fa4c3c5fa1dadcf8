//! Rayleigh fading and Bernoulli-Gaussian noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::config::{NoiseParams, NoiseState};

/// Instantaneous channel power gains of one realization, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedGains(Vec<f64>);

impl OrderedGains {
    /// Wraps an already ascending vector. Returns `None` if it is not sorted
    /// or contains a negative or non-finite gain.
    pub fn new(gains: Vec<f64>) -> Option<Self> {
        let ok = gains.iter().all(|g| g.is_finite() && *g >= 0.0)
            && gains.windows(2).all(|w| w[0] <= w[1]);
        ok.then_some(Self(gains))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Gain of sorted user `i` (1-based).
    pub fn gain(&self, i: usize) -> f64 {
        self.0[i - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Squared magnitude of a unit-variance circularly symmetric complex
/// Gaussian, i.e. a unit-mean exponential power gain.
#[inline]
pub fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    0.5 * (re * re + im * im)
}

/// Fills `out` with independent Rayleigh power gains and sorts ascending.
pub fn fill_ordered_gains_sort<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    for g in out.iter_mut() {
        *g = rayleigh_power(rng);
    }
    out.sort_unstable_by(f64::total_cmp);
}

/// Fills `out` via the exponential spacings representation: gain `i` is the
/// sum of `y_1..y_i`, with `y_k` exponential of rate `M + 1 - k`.
pub fn fill_ordered_gains_decomposition<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    let m = out.len();
    let mut acc = 0.0;
    for (k, g) in out.iter_mut().enumerate() {
        let rate = (m - k) as f64;
        let y: f64 = Exp1.sample(rng);
        acc += y / rate;
        *g = acc;
    }
}

/// Draws `users` i.i.d. unit-mean Rayleigh power gains and sorts them.
pub fn sample_ordered_gains_sort<R: Rng + ?Sized>(users: usize, rng: &mut R) -> OrderedGains {
    let mut g = vec![0.0; users];
    fill_ordered_gains_sort(&mut g, rng);
    OrderedGains(g)
}

/// Draws sorted gains directly from the sum-of-spacings representation.
pub fn sample_ordered_gains_decomposition<R: Rng + ?Sized>(
    users: usize,
    rng: &mut R,
) -> OrderedGains {
    let mut g = vec![0.0; users];
    fill_ordered_gains_decomposition(&mut g, rng);
    OrderedGains(g)
}

/// Density of the two-component complex Gaussian mixture at `n`.
pub fn noise_pdf(n: Complex64, params: &NoiseParams) -> f64 {
    let r2 = n.norm_sqr();
    let vw = params.variance(NoiseState::Background);
    let vi = params.variance(NoiseState::Impulsive);
    (1.0 - params.p) / (PI * vw) * (-r2 / vw).exp() + params.p / (PI * vi) * (-r2 / vi).exp()
}

/// One noise sample together with the Bernoulli state that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSample {
    pub value: Complex64,
    pub state: NoiseState,
}

pub fn sample_noise_state<R: Rng + ?Sized>(p: f64, rng: &mut R) -> NoiseState {
    // p = 0 and p = 1 are exact: random::<f64>() lies in [0, 1)
    if rng.random::<f64>() < p {
        NoiseState::Impulsive
    } else {
        NoiseState::Background
    }
}

pub fn sample_noise<R: Rng + ?Sized>(params: &NoiseParams, rng: &mut R) -> NoiseSample {
    let state = sample_noise_state(params.p, rng);
    let scale = (0.5 * params.variance(state)).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    NoiseSample {
        value: Complex64::new(scale * re, scale * im),
        state,
    }
}
