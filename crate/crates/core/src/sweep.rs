//! Parameter sweeps over SNR or power back-off, their CSV form, and the
//! per-scenario reports behind the command line tool.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{outage_all, tdma_outage, AnalyticOptions, RateScaling};
use crate::asymptotics::{asymptotic_diversity, diversity_slope, OutageCurve};
use crate::config::{PowerAllocation, Scenario, SystemConfig};
use crate::error::{invalid, Error, Result};
use crate::montecarlo::{
    estimate_outage_with, estimate_tdma_outage_with, McOptions, OutageEstimate,
};

/// Parameter swept along the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Background SNR `rho_w` in dB.
    Snr,
    /// Power back-off `beta` in dB between adjacent users.
    Backoff,
}

impl SweepKind {
    pub fn variable(self) -> &'static str {
        match self {
            SweepKind::Snr => "rho_w_db",
            SweepKind::Backoff => "beta_db",
        }
    }

    /// Default grid: 0..45 dB in 1 dB steps for SNR, 0..10 dB in 0.5 dB
    /// steps for back-off.
    pub fn default_grid(self) -> Grid {
        match self {
            SweepKind::Snr => Grid::new(0.0, 45.0, 1.0),
            SweepKind::Backoff => Grid::new(0.0, 10.0, 0.5),
        }
        .expect("default grids are valid")
    }

    /// Applies grid value `x` to `base`.
    pub fn apply(self, base: &SystemConfig, x: f64) -> Result<SystemConfig> {
        match self {
            SweepKind::Snr => Ok(base.clone().with_rho_w_db(x)),
            SweepKind::Backoff => match base.powers {
                PowerAllocation::Backoff { a1, .. } => {
                    Ok(base.clone().with_powers(PowerAllocation::Backoff { a1, beta_db: x }))
                }
                PowerAllocation::Explicit(_) => Err(invalid(
                    "a back-off sweep needs `a1` (optionally `beta_db`), not an explicit power list",
                )),
            },
        }
    }
}

/// Evaluation engine attached to every result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Engine {
    /// Exact NOMA outage from the analytic engine.
    #[serde(rename = "analytic")]
    Analytic,
    /// Full-joint link-level NOMA simulation.
    #[serde(rename = "montecarlo")]
    MonteCarlo,
    /// Closed-form TDMA baseline.
    #[serde(rename = "tdma")]
    Tdma,
    /// Simulated TDMA baseline.
    #[serde(rename = "tdma-montecarlo")]
    TdmaMonteCarlo,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::Analytic,
        Engine::MonteCarlo,
        Engine::Tdma,
        Engine::TdmaMonteCarlo,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "montecarlo",
            Engine::Tdma => "tdma",
            Engine::TdmaMonteCarlo => "tdma-montecarlo",
        }
    }

    pub fn is_simulated(self) -> bool {
        matches!(self, Engine::MonteCarlo | Engine::TdmaMonteCarlo)
    }

    /// Parses a comma-separated engine list, e.g. `analytic,montecarlo`.
    pub fn parse_list(s: &str) -> Result<Vec<Engine>> {
        let mut out: Vec<Engine> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let e: Engine = part.parse()?;
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(invalid("engine list is empty"));
        }
        Ok(out)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown engine `{s}` (expected analytic, montecarlo, tdma or tdma-montecarlo)"
                ))
            })
    }
}

/// Inclusive arithmetic grid `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if ![start, stop, step].iter().all(|v| v.is_finite()) {
            return Err(invalid("grid bounds must be finite"));
        }
        if step <= 0.0 {
            return Err(invalid(format!("grid step must be > 0, got {step}")));
        }
        if stop < start {
            return Err(invalid(format!("grid stop {stop} is below start {start}")));
        }
        // small slack so that e.g. 0:10:0.5 includes 10 despite rounding
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok(Self((0..count).map(|k| start + k as f64 * step).collect()))
    }

    /// Arbitrary strictly increasing values.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("grid is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "grid values must be finite and strictly increasing",
            ));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Parses `START:STOP:STEP`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(invalid(format!("grid `{s}` is not START:STOP:STEP")));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("grid `{s}`: `{v}` is not a number")))
        };
        Grid::new(num(start)?, num(stop)?, num(step)?)
    }
}

/// Closed dB interval `LO:HI` used as a slope-fitting window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| invalid(format!("window `{s}` is not LO:HI")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("window `{s}`: `{v}` is not a number")))
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid(format!(
                "window low end {lo} exceeds high end {hi}"
            )));
        }
        Ok(Self { lo, hi })
    }
}

/// What to sweep and how to evaluate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub grid: Grid,
    pub engines: Vec<Engine>,
    pub trials: u64,
    pub seed: u64,
    pub rate_scaling: RateScaling,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, grid: Grid, engines: Vec<Engine>) -> Self {
        Self {
            kind,
            grid,
            engines,
            trials: 1_000_000,
            seed: 0,
            rate_scaling: RateScaling::default(),
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rate_scaling(mut self, scaling: RateScaling) -> Self {
        self.rate_scaling = scaling;
        self
    }

    fn check(&self) -> Result<()> {
        if self.engines.is_empty() {
            return Err(invalid("no engine selected"));
        }
        if self.trials == 0 && self.engines.iter().any(|e| e.is_simulated()) {
            return Err(invalid(
                "trials must be >= 1 when a Monte Carlo engine is selected",
            ));
        }
        Ok(())
    }
}

/// One CSV row. Confidence bounds are absent for analytic engines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: f64,
    pub user: usize,
    pub engine: Engine,
    pub op: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

/// Rows ordered by grid point, then engine (in selection order), then user.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Curve of `(sweep_var, op)` for one user and engine.
    pub fn curve(&self, user: usize, engine: Engine) -> Result<OutageCurve> {
        OutageCurve::new(
            self.rows
                .iter()
                .filter(|r| r.user == user && r.engine == engine)
                .map(|r| (r.sweep_var, r.op))
                .collect(),
        )
    }

    pub fn users(&self) -> usize {
        self.rows.iter().map(|r| r.user).max().unwrap_or(0)
    }
}

fn simulated_rows(x: f64, engine: Engine, est: &OutageEstimate, rows: &mut Vec<SweepRow>) {
    rows.extend(est.users.iter().map(|u| SweepRow {
        sweep_var: x,
        user: u.user,
        engine,
        op: u.op_hat,
        ci_low: Some(u.ci_low),
        ci_high: Some(u.ci_high),
    }));
}

fn analytic_rows(x: f64, engine: Engine, ops: Vec<f64>, rows: &mut Vec<SweepRow>) {
    rows.extend(ops.into_iter().enumerate().map(|(j, op)| SweepRow {
        sweep_var: x,
        user: j + 1,
        engine,
        op,
        ci_low: None,
        ci_high: None,
    }));
}

fn evaluate_point(
    sc: &Scenario,
    x: f64,
    spec: &SweepSpec,
    analytic: &AnalyticOptions,
    mc: &McOptions,
    rows: &mut Vec<SweepRow>,
) -> Result<()> {
    for &engine in &spec.engines {
        match engine {
            Engine::Analytic => analytic_rows(x, engine, outage_all(sc, analytic)?, rows),
            Engine::Tdma => {
                let ops = (1..=sc.users())
                    .map(|j| tdma_outage(j, sc, spec.rate_scaling))
                    .collect::<Result<Vec<_>>>()?;
                analytic_rows(x, engine, ops, rows)
            }
            Engine::MonteCarlo => {
                let est = estimate_outage_with(sc, spec.trials, spec.seed, mc)?;
                simulated_rows(x, engine, &est, rows)
            }
            Engine::TdmaMonteCarlo => {
                let est =
                    estimate_tdma_outage_with(sc, spec.trials, spec.seed, spec.rate_scaling, mc)?;
                simulated_rows(x, engine, &est, rows)
            }
        }
    }
    Ok(())
}

/// Evaluates every selected engine at every grid point. Simulations at
/// different grid points share the seed (common random numbers), which keeps
/// simulated curves smooth in the swept variable.
pub fn run_sweep(
    base: &SystemConfig,
    spec: &SweepSpec,
    analytic: &AnalyticOptions,
    mc: &McOptions,
) -> Result<SweepResult> {
    spec.check()?;
    let mut rows = Vec::new();
    for &x in spec.grid.values() {
        let at = |e: Error| Error::AtGridPoint {
            var: spec.kind.variable(),
            value: x,
            source: Box::new(e),
        };
        let sc = spec
            .kind
            .apply(base, x)
            .and_then(|c| c.validate())
            .map_err(at)?;
        evaluate_point(&sc, x, spec, analytic, mc, &mut rows).map_err(at)?;
    }
    Ok(SweepResult { rows })
}

/// Finite-SNR slope of one user's analytic curve next to its asymptotic order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityRow {
    pub user: usize,
    pub slope: f64,
    pub asymptotic_order: usize,
}

/// Analytic slope report for every user over `window`, with curves sampled
/// on `grid`.
pub fn diversity_report(
    base: &SystemConfig,
    grid: &Grid,
    window: Window,
    analytic: &AnalyticOptions,
) -> Result<Vec<DiversityRow>> {
    let g = grid.values();
    let (first, last) = (g[0], g[g.len() - 1]);
    if window.lo < first || window.hi > last {
        return Err(invalid(format!(
            "window {}:{} dB lies outside the grid {first}:{last} dB",
            window.lo, window.hi
        )));
    }
    let inside: Vec<f64> = g
        .iter()
        .copied()
        .filter(|&x| x >= window.lo && x <= window.hi)
        .collect();
    if inside.len() < 2 {
        return Err(invalid(format!(
            "window {}:{} dB holds {} grid point(s), need at least 2",
            window.lo,
            window.hi,
            inside.len()
        )));
    }
    let spec = SweepSpec::new(
        SweepKind::Snr,
        Grid::from_values(inside)?,
        vec![Engine::Analytic],
    );
    let result = run_sweep(base, &spec, analytic, &McOptions::default())?;
    (1..=base.users)
        .map(|user| {
            let curve = result.curve(user, Engine::Analytic)?;
            Ok(DiversityRow {
                user,
                slope: diversity_slope(&curve, (window.lo, window.hi))?,
                asymptotic_order: asymptotic_diversity(user),
            })
        })
        .collect()
}

/// Writes slope rows as `user,slope,asymptotic_order` CSV.
pub fn write_diversity_csv<W: Write>(rows: &[DiversityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Derived quantities of a scenario, as printed by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub users: usize,
    pub powers: Vec<f64>,
    pub target_rates: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub rho_w_db: f64,
    pub rho_w: f64,
    pub rho_i: f64,
    pub p: f64,
    pub gamma: f64,
    /// Per user: `a_i > phi_i * sum(a_q, q < i)`, the condition under which
    /// the closed forms apply and the user is decodable without noise.
    pub closed_form_valid: Vec<bool>,
}

impl ValidationReport {
    pub fn new(sc: &Scenario) -> Self {
        let pr = sc.precisions();
        Self {
            users: sc.users(),
            powers: sc.powers().to_vec(),
            target_rates: sc.target_rates().to_vec(),
            thresholds: sc.thresholds().to_vec(),
            rho_w_db: sc.rho_w_db(),
            rho_w: pr.rho_w,
            rho_i: pr.rho_i,
            p: sc.noise().p,
            gamma: sc.noise().gamma,
            closed_form_valid: (1..=sc.users()).map(|i| sc.decodable(i)).collect(),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users      {}", self.users)?;
        writeln!(f, "rho_w      {:.6} ({} dB)", self.rho_w, self.rho_w_db)?;
        writeln!(f, "rho_i      {:.6}", self.rho_i)?;
        writeln!(f, "p, gamma   {}, {}", self.p, self.gamma)?;
        writeln!(f, "user  power         rate      phi           closed-form")?;
        for i in 0..self.users {
            writeln!(
                f,
                "{:<5} {:<13.6} {:<9} {:<13.6} {}",
                i + 1,
                self.powers[i],
                self.target_rates[i],
                self.thresholds[i],
                if self.closed_form_valid[i] {
                    "valid"
                } else {
                    "violated (general engine)"
                }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> SystemConfig {
        SystemConfig::uniform(3, 0.5, 0.01, 100.0, 10.0)
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:10:0.5".parse().unwrap();
        assert_eq!(g.values().len(), 21);
        assert_eq!(*g.values().last().unwrap(), 10.0);
        assert_eq!(
            "0:45:1".parse::<Grid>().unwrap(),
            SweepKind::Snr.default_grid()
        );
        assert!("0:10".parse::<Grid>().is_err());
        assert!("0:10:0".parse::<Grid>().is_err());
        assert!("5:0:1".parse::<Grid>().is_err());
        assert!(Grid::from_values(vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn window_and_engine_parsing() {
        let w: Window = "35:50".parse().unwrap();
        assert_eq!((w.lo, w.hi), (35.0, 50.0));
        assert!("50:35".parse::<Window>().is_err());
        assert_eq!(
            Engine::parse_list("analytic, montecarlo,analytic").unwrap(),
            vec![Engine::Analytic, Engine::MonteCarlo]
        );
        assert!(Engine::parse_list("quantum").is_err());
    }

    #[test]
    fn analytic_rows_have_empty_ci() {
        let spec = SweepSpec::new(
            SweepKind::Snr,
            "0:10:5".parse().unwrap(),
            vec![Engine::Analytic, Engine::Tdma],
        );
        let res = run_sweep(
            &reference(),
            &spec,
            &AnalyticOptions::default(),
            &McOptions::default(),
        )
        .unwrap();
        assert_eq!(res.rows.len(), 3 * 3 * 2);
        let csv = res.to_csv_string().unwrap();
        assert!(csv.starts_with("sweep_var,user,engine,op,ci_low,ci_high\n"));
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
        assert!(csv.contains(",tdma,"));
    }

    #[test]
    fn csv_round_trip_with_simulation() {
        let spec = SweepSpec::new(
            SweepKind::Snr,
            "0:20:10".parse().unwrap(),
            vec![Engine::Analytic, Engine::MonteCarlo],
        )
        .with_trials(5_000)
        .with_seed(3);
        let res = run_sweep(
            &reference(),
            &spec,
            &AnalyticOptions::default(),
            &McOptions::default(),
        )
        .unwrap();
        let text = res.to_csv_string().unwrap();
        assert_eq!(SweepResult::read_csv(text.as_bytes()).unwrap(), res);
    }

    #[test]
    fn monotone_awgn_columns() {
        let cfg = reference().with_impulses(0.0, 0.0);
        let spec = SweepSpec::new(
            SweepKind::Snr,
            "0:40:2".parse().unwrap(),
            vec![Engine::Analytic],
        );
        let res = run_sweep(
            &cfg,
            &spec,
            &AnalyticOptions::default(),
            &McOptions::default(),
        )
        .unwrap();
        for user in 1..=3 {
            let c = res.curve(user, Engine::Analytic).unwrap();
            assert!(
                c.points().windows(2).all(|w| w[1].1 <= w[0].1),
                "user {user}"
            );
        }
    }

    #[test]
    fn backoff_zero_matches_equal_power_point() {
        let base = reference()
            .with_rho_w_db(15.0)
            .with_powers(PowerAllocation::Backoff {
                a1: 1.0,
                beta_db: 0.0,
            });
        let backoff = SweepSpec::new(
            SweepKind::Backoff,
            "0:2:1".parse().unwrap(),
            vec![Engine::Analytic],
        );
        let snr = SweepSpec::new(
            SweepKind::Snr,
            Grid::from_values(vec![15.0]).unwrap(),
            vec![Engine::Analytic],
        );
        let o = AnalyticOptions::default();
        let b = run_sweep(&base, &backoff, &o, &McOptions::default()).unwrap();
        let s = run_sweep(&reference(), &snr, &o, &McOptions::default()).unwrap();
        for user in 1..=3 {
            let rb = b
                .rows
                .iter()
                .find(|r| r.user == user && r.sweep_var == 0.0)
                .unwrap();
            let rs = s.rows.iter().find(|r| r.user == user).unwrap();
            assert!((rb.op - rs.op).abs() < 1e-12);
        }
        let explicit = reference();
        assert!(run_sweep(&explicit, &backoff, &o, &McOptions::default()).is_err());
    }

    #[test]
    fn errors_name_the_grid_point() {
        let spec = SweepSpec::new(
            SweepKind::Backoff,
            "0:1:1".parse().unwrap(),
            vec![Engine::Analytic],
        );
        let cfg = reference().with_powers(PowerAllocation::Backoff {
            a1: -1.0,
            beta_db: 0.0,
        });
        let err = run_sweep(
            &cfg,
            &spec,
            &AnalyticOptions::default(),
            &McOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("beta_db = 0"), "{err}");
        let zero = SweepSpec::new(
            SweepKind::Snr,
            "0:1:1".parse().unwrap(),
            vec![Engine::MonteCarlo],
        )
        .with_trials(0);
        assert!(run_sweep(
            &reference(),
            &zero,
            &AnalyticOptions::default(),
            &McOptions::default()
        )
        .is_err());
    }

    #[test]
    fn diversity_report_checks_window() {
        let cfg = reference().with_impulses(0.0, 0.0);
        let grid: Grid = "30:50:1".parse().unwrap();
        let o = AnalyticOptions::default();
        let single = Window { lo: 40.0, hi: 40.0 };
        assert!(matches!(
            diversity_report(&cfg, &grid, single, &o),
            Err(Error::InvalidArgument(_))
        ));
        let outside = Window { lo: 20.0, hi: 40.0 };
        assert!(diversity_report(&cfg, &grid, outside, &o).is_err());
        let rows = diversity_report(&cfg, &grid, Window { lo: 35.0, hi: 50.0 }, &o).unwrap();
        for r in rows {
            assert!((r.slope - r.asymptotic_order as f64).abs() < 0.2, "{r:?}");
        }
    }

    #[test]
    fn validation_flags() {
        let r = ValidationReport::new(&reference().validate().unwrap());
        assert_eq!(r.closed_form_valid, vec![true; 3]);
        let r = ValidationReport::new(
            &SystemConfig::uniform(3, 2.0, 0.0, 0.0, 10.0)
                .validate()
                .unwrap(),
        );
        assert!(!r.closed_form_valid[1]);
        assert!(r.to_string().contains("violated"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn csv_round_trip(values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 1..20)) {
            let rows = values
                .iter()
                .enumerate()
                .map(|(k, &(op, w, sim))| SweepRow {
                    sweep_var: k as f64 * 0.5,
                    user: k % 3 + 1,
                    engine: if sim { Engine::MonteCarlo } else { Engine::Analytic },
                    op,
                    ci_low: sim.then_some(op * w),
                    ci_high: sim.then_some(op + (1.0 - op) * w),
                })
                .collect();
            let res = SweepResult { rows };
            let back = SweepResult::read_csv(res.to_csv_string().unwrap().as_bytes()).unwrap();
            prop_assert_eq!(back, res);
        }
    }
}
