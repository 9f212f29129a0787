//! Quadrature primitives shared by the transforms and the measure backends.
//!
//! Three kinds of rules live here:
//!
//! * an adaptive 21-point Gauss–Kronrod integrator for one-dimensional
//!   integrals that must hit a requested tolerance (tail integrals of the
//!   density transforms, semi-analytic region integrals);
//! * fixed composite Gauss–Legendre rules on a radial segment `(0, T]`,
//!   with the part below an origin cut mapped through `r = e^u` so that
//!   integrable power singularities at the origin become smooth;
//! * product rules on the unit sphere `S^{n-1}` and on its upper half.
//!
//! Fixed rules are deterministic functions of their parameters, which is
//! what the backends rely on for bit-stable output.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("quadrature did not converge on [{a}, {b}]: estimated error {achieved:e} exceeds requested {requested:e} (value {value})")]
pub struct QuadError {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub achieved: f64,
    pub requested: f64,
}

/// Absolute/relative tolerance pair plus a subdivision budget.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-13,
            max_intervals: 400,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            ..Self::default()
        }
    }
}

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

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_010_005_940,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

/// One Gauss–Kronrod 10/21 step with the QUADPACK error heuristic.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for i in 0..10 {
        let x = half * XGK[i];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[i] = f1;
        fv2[i] = f2;
        res_k += WGK[i] * (f1 + f2);
        res_abs += WGK[i] * (f1.abs() + f2.abs());
        if i % 2 == 1 {
            res_g += WG[i / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for i in 0..10 {
        res_asc += WGK[i] * ((fv1[i] - mean).abs() + (fv2[i] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Panel { a, b, value, err }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate drops below `max(tol.abs, tol.rel * |I|)`. When the budget
/// runs out the best estimate is returned inside the error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate, QuadError> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let mut panels = vec![gk21(&f, a, b)];
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.err).sum();
        let requested = tol.abs.max(tol.rel * value.abs());
        if error <= requested {
            return Ok(Estimate { value, error });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        // Panels that can no longer be split in floating point, or a spent
        // budget, end the refinement.
        if panels.len() >= tol.max_intervals || mid <= p.a || mid >= p.b {
            return Err(QuadError {
                a,
                b,
                value,
                achieved: error,
                requested,
            });
        }
        panels.swap_remove(worst);
        panels.push(gk21(&f, p.a, mid));
        panels.push(gk21(&f, mid, p.b));
    }
}

/// Like [`integrate`] but returns the best estimate even without convergence.
pub fn integrate_best<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> f64 {
    match integrate(f, a, b, tol) {
        Ok(e) => e.value,
        Err(e) => e.value,
    }
}

type NodeCache = Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>;

fn gl_cache() -> &'static NodeCache {
    static CACHE: OnceLock<NodeCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
    if let Some(rule) = gl_cache().lock().expect("node cache poisoned").get(&m) {
        return Arc::clone(rule);
    }
    if m == 1 {
        return Arc::new((vec![0.0], vec![2.0]));
    }
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = mf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    let rule = Arc::new((x, w));
    gl_cache()
        .lock()
        .expect("node cache poisoned")
        .insert(m, Arc::clone(&rule));
    rule
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(m);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(rule.1.iter())
        .map(|(&x, &w)| (c + h * x, h * w))
        .collect()
}

/// Number of equal Gauss–Legendre panels between the origin cut and the outer radius.
pub const RADIAL_PANELS: usize = 4;

/// Ratio between the origin cut and the innermost radius kept by the
/// log-substituted segment.
const LOG_SEGMENT_DECADES: f64 = 16.0;

/// Fixed radial rule on `(0, outer]`.
///
/// `[cut, outer]` is covered by geometrically graded Gauss–Legendre panels
/// (ratio at most 8, at least [`RADIAL_PANELS`] of them) of `points` nodes; `(cut * 10^-16, cut]` is integrated in the variable
/// `u = ln r` with `points` nodes, absorbing the Jacobian `r` into the weight.
pub fn radial_rule(outer: f64, cut: f64, points: usize) -> Vec<(f64, f64)> {
    let mut nodes = Vec::with_capacity(points * (RADIAL_PANELS + 1));
    if !(outer > 0.0) {
        return nodes;
    }
    let cut = cut.clamp(0.0, outer);
    if cut > 0.0 {
        let lo = cut.ln() - LOG_SEGMENT_DECADES * std::f64::consts::LN_10;
        for (u, w) in gauss_legendre_on(points, lo, cut.ln()) {
            let r = u.exp();
            nodes.push((r, w * r));
        }
    }
    // Geometrically graded panels resolve integrable singularities that
    // survive past the cut; at least RADIAL_PANELS of them.
    let mut breaks = vec![outer];
    if cut > 0.0 {
        let count = ((outer / cut).ln() / 8f64.ln()).ceil().max(RADIAL_PANELS as f64) as usize;
        let ratio = (cut / outer).powf(1.0 / count as f64);
        for k in 1..count {
            breaks.push(outer * ratio.powi(k as i32));
        }
        breaks.push(cut);
    } else {
        for k in 1..=RADIAL_PANELS {
            breaks.push(outer * (1.0 - k as f64 / RADIAL_PANELS as f64));
        }
    }
    for pair in breaks.windows(2).rev() {
        nodes.extend(gauss_legendre_on(points, pair[1], pair[0]));
    }
    nodes
}

/// A quadrature rule on a sphere: unit directions with weights.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// Product rule on `S^{n-1}` in `R^n`.
    ///
    /// `S^0` is the pair `{-1, +1}`, `S^1` a trapezoid rule with
    /// `circle_points` nodes and higher spheres recurse through the polar
    /// angle of the last coordinate, `z = (sin θ · w, cos θ)`, with a
    /// Gauss–Legendre rule of `polar_points` nodes in `θ ∈ [0, π]`.
    pub fn full(n: usize, polar_points: usize, circle_points: usize) -> Self {
        assert!(n >= 1, "sphere dimension must be at least 1");
        match n {
            1 => Self {
                dim: 1,
                directions: vec![vec![-1.0], vec![1.0]],
                weights: vec![1.0, 1.0],
            },
            2 => {
                let m = circle_points.max(3);
                let h = 2.0 * PI / m as f64;
                let directions = (0..m)
                    .map(|k| {
                        let phi = h * k as f64;
                        vec![phi.cos(), phi.sin()]
                    })
                    .collect();
                Self {
                    dim: 2,
                    directions,
                    weights: vec![h; m],
                }
            }
            _ => {
                let base = Self::full(n - 1, polar_points, circle_points);
                Self::lift(&base, n, polar_points, 0.0, PI)
            }
        }
    }

    /// Product rule on the closed upper half sphere `{z ∈ S^{n-1} : z_n ≥ 0}`.
    pub fn upper_half(n: usize, polar_points: usize, circle_points: usize) -> Self {
        assert!(n >= 2, "half sphere needs n >= 2");
        let base = Self::full(n - 1, polar_points, circle_points);
        Self::lift(&base, n, polar_points, 0.0, 0.5 * PI)
    }

    fn lift(base: &Self, n: usize, polar_points: usize, lo: f64, hi: f64) -> Self {
        let theta = gauss_legendre_on(polar_points, lo, hi);
        let mut directions = Vec::with_capacity(theta.len() * base.directions.len());
        let mut weights = Vec::with_capacity(directions.capacity());
        for &(t, wt) in &theta {
            let (st, ct) = t.sin_cos();
            let jac = st.powi(n as i32 - 2);
            for (w, &wb) in base.directions.iter().zip(&base.weights) {
                let mut z: Vec<f64> = w.iter().map(|c| c * st).collect();
                z.push(ct);
                directions.push(z);
                weights.push(wt * wb * jac);
            }
        }
        Self {
            dim: n,
            directions,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Volume of the unit ball in `R^m` (`κ_0 = 1`).
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / m as f64 * unit_ball_volume(m - 2),
    }
}

/// Binomial coefficient as a float; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
