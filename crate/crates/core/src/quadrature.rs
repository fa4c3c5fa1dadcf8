//! Globally adaptive Gauss-Kronrod (10/21 point) integration.
//!
//! Integrands return an [`Estimate`] rather than a bare value so that nested
//! integrals can carry the error of the inner levels outward: the inner error
//! is integrated with the Kronrod weights and added to the outer estimate.

use crate::error::{Error, Result};

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of panels per call.
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-10,
            max_panels: 200,
        }
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_215,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod abscissae XGK[1], XGK[3], ...
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Estimate>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let abs_half = half.abs();

    let mut fv = [0.0f64; 21];
    let mut inner_err = 0.0;
    let fc = f(center)?;
    fv[20] = fc.value;
    inner_err += WGK[10] * fc.error;
    for k in 0..10 {
        let dx = half * XGK[k];
        let lo = f(center - dx)?;
        let hi = f(center + dx)?;
        fv[2 * k] = lo.value;
        fv[2 * k + 1] = hi.value;
        inner_err += WGK[k] * (lo.error + hi.error);
    }

    let mut kron = WGK[10] * fv[20];
    let mut gauss = 0.0;
    let mut res_abs = WGK[10] * fv[20].abs();
    for k in 0..10 {
        let pair = fv[2 * k] + fv[2 * k + 1];
        kron += WGK[k] * pair;
        res_abs += WGK[k] * (fv[2 * k].abs() + fv[2 * k + 1].abs());
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    let mean = 0.5 * kron;
    let mut res_asc = WGK[10] * (fv[20] - mean).abs();
    for k in 0..10 {
        res_asc += WGK[k] * ((fv[2 * k] - mean).abs() + (fv[2 * k + 1] - mean).abs());
    }

    let value = kron * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((kron - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel {
        a,
        b,
        value,
        error: err + inner_err * abs_half,
    })
}

/// Integrates over `[points[0], points[last]]`, with panel boundaries at every
/// interior point (use these for kinks and discontinuities).
pub fn integrate_with_breaks<F>(mut f: F, points: &[f64], opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<Estimate>,
{
    assert!(points.len() >= 2, "need at least one interval");
    let mut panels = Vec::with_capacity(opts.max_panels.max(points.len()));
    for w in points.windows(2) {
        if w[1] > w[0] {
            panels.push(gk21(&mut f, w[0], w[1])?);
        }
    }
    if panels.is_empty() {
        return Ok(Estimate::exact(0.0));
    }
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate { value, error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        // Stop when the panel cannot be split further in floating point.
        if panels.len() >= opts.max_panels || mid <= p.a || mid >= p.b {
            return Err(Error::Accuracy {
                requested: target,
                achieved: error,
            });
        }
        panels[worst] = gk21(&mut f, p.a, mid)?;
        panels.push(gk21(&mut f, mid, p.b)?);
    }
}

/// Integrates a plain function over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> f64,
{
    integrate_with_breaks(|x| Ok(Estimate::exact(f(x))), &[a, b], opts)
}
