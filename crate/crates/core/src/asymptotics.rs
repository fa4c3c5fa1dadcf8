//! High-SNR behaviour: finite-SNR diversity slopes, first-order outage
//! approximations and horizontal gaps between outage curves.

use serde::{Deserialize, Serialize};

use crate::analytic::{outage_all, AnalyticOptions};
use crate::config::{NoiseState, Scenario, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::stats::least_squares_slope;

/// Outage probability sampled on an increasing SNR grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    points: Vec<(f64, f64)>,
}

impl OutageCurve {
    /// `points` are `(rho_w_db, op)` pairs, strictly increasing in dB.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().any(|(db, _)| !db.is_finite())
            || points.windows(2).any(|w| w[0].0 >= w[1].0)
        {
            return Err(invalid("curve abscissae must be strictly increasing"));
        }
        if points.iter().any(|&(_, op)| !(0.0..=1.0).contains(&op)) {
            return Err(invalid("outage values must lie in [0, 1]"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// SNR (dB) where the curve first falls to `level`, by linear
    /// interpolation of `log10(op)` between neighbouring grid points.
    /// `None` if the curve never reaches `level` on its grid.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        let target = level.log10();
        let first = self.points.first()?;
        if first.1 <= level {
            return (first.1 == level).then_some(first.0);
        }
        self.points.windows(2).find_map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if y1 > level {
                return None;
            }
            if y1 <= 0.0 {
                // log-linear interpolation is undefined at zero; fall back to linear
                return Some(x0 + (y0 - level) / (y0 - y1) * (x1 - x0));
            }
            let (l0, l1) = (y0.log10(), y1.log10());
            Some(x0 + (target - l0) / (l1 - l0) * (x1 - x0))
        })
    }
}

/// Horizontal distance (dB) by which `degraded` lags `reference` at `level`.
pub fn gap_db(reference: &OutageCurve, degraded: &OutageCurve, level: f64) -> Option<f64> {
    Some(degraded.crossing(level)? - reference.crossing(level)?)
}

/// Least-squares slope of `-log10(op)` against `log10(rho_w)` over the
/// curve points inside `[lo_db, hi_db]`.
pub fn diversity_slope(curve: &OutageCurve, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    let eps = 1e-9 * (lo.abs() + hi.abs()).max(1.0);
    let inside: Vec<(f64, f64)> = curve
        .points
        .iter()
        .copied()
        .filter(|&(db, _)| db >= lo - eps && db <= hi + eps)
        .collect();
    if inside.len() < 2 {
        return Err(invalid(format!(
            "window [{lo}, {hi}] dB holds {} curve points, need at least 2",
            inside.len()
        )));
    }
    if let Some(&(db, _)) = inside.iter().find(|&&(_, op)| op <= 0.0) {
        return Err(Error::DegenerateCurve(format!("zero outage at {db} dB")));
    }
    let x: Vec<f64> = inside.iter().map(|&(db, _)| db / 10.0).collect();
    let y: Vec<f64> = inside.iter().map(|&(_, op)| -op.log10()).collect();
    Ok(least_squares_slope(&x, &y))
}

/// Asymptotic diversity order of sorted user `j`; impulsive noise leaves it
/// unchanged.
pub fn asymptotic_diversity(j: usize) -> usize {
    j
}

/// Analytic outage curves of every user over `grid_db`.
pub fn analytic_curves(
    cfg: &SystemConfig,
    grid_db: &[f64],
    opts: &AnalyticOptions,
) -> Result<Vec<OutageCurve>> {
    let mut per_user = vec![Vec::with_capacity(grid_db.len()); cfg.users];
    for &db in grid_db {
        let sc = cfg.clone().with_rho_w_db(db).validate()?;
        for (j, op) in outage_all(&sc, opts)?.into_iter().enumerate() {
            per_user[j].push((db, op));
        }
    }
    per_user.into_iter().map(OutageCurve::new).collect()
}

/// Leading term of the failure probability of user `i` in one noise state,
/// `kappa_i / rho^i`, from the volume of the failure simplex near the origin:
///
/// ```text
/// kappa_i = prod_{k=1}^{i} (M + 1 - k) * phi_i^i / (i! * prod_{k=1}^{i} c_k)
/// ```
fn leading_coefficient(i: usize, sc: &Scenario) -> f64 {
    let m = sc.users();
    let phi = sc.threshold(i);
    let a = sc.powers();
    let mut kappa = phi.powi(i as i32);
    let mut tail = 0.0;
    for k in (1..=i).rev() {
        let ck = a[i - 1] - phi * tail;
        kappa *= (m + 1 - k) as f64 / (k as f64 * ck);
        if k >= 2 {
            tail += a[k - 2];
        }
    }
    kappa
}

/// First-order high-SNR outage of sorted user `j`:
/// `kappa_j ((1 - p) + p (gamma + 1)^j) / rho_w^j`.
///
/// Requires every user in the SIC chain `j..=M` to be decodable in the
/// noiseless limit; otherwise the outage has a floor and no power law.
pub fn high_snr_outage_approx(j: usize, sc: &Scenario) -> Result<f64> {
    sc.check_user(j)?;
    for i in j..=sc.users() {
        if !sc.decodable(i) {
            return Err(Error::ConditionViolated {
                user: i,
                power: sc.power(i),
                bound: sc.interference_bound(i),
            });
        }
    }
    let noise = sc.noise();
    let pr = sc.precisions();
    let kappa = leading_coefficient(j, sc);
    let e = j as i32;
    let per_state = |state| kappa / pr.of(state).powi(e);
    Ok((1.0 - noise.p) * per_state(NoiseState::Background)
        + noise.p * per_state(NoiseState::Impulsive))
}

/// Factor `(1 - p) + p (gamma + 1)^j` by which impulses scale the leading
/// outage term of user `j`.
pub fn impulse_penalty(j: usize, p: f64, gamma: f64) -> f64 {
    (1.0 - p) + p * (gamma + 1.0).powi(j as i32)
}
