//! Radial densities and the scalar transforms `ℛ^l`, `𝒯^l`, Abel `A^k` and
//! their inverses.
//!
//! Every transform returns a new [`DensityFn`] that captures its input and
//! integrates lazily. Tail integrals `∫_s^R k(t) ζ(t) dt` are memoized on a
//! geometric panel grid `R·2^{-i}` so that nested transforms only pay for one
//! short head panel per evaluation.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::quad::{binomial, integrate, unit_ball_volume, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("density `{label}` is not in T_{j}^{n} (s^{exponent} ζ(s) does not vanish at 0+)")]
    Class {
        label: String,
        j: usize,
        n: usize,
        exponent: usize,
    },
    #[error("invalid density `{label}`: {reason}")]
    Invalid { label: String, reason: String },
    #[error("invalid density spec `{0}`")]
    Parse(String),
}

type Evaluator = dyn Fn(f64) -> Result<f64, QuadError> + Send + Sync;
type Derivative = dyn Fn(f64) -> f64 + Send + Sync;

/// A radial density `ζ: (0, ∞) → R` vanishing from `support_radius` on.
///
/// `singularity_order` is a declared `p` with `s^p ζ(s)` bounded near `0`.
/// Values are immutable and cheap to clone; evaluation is thread-safe.
#[derive(Clone)]
pub struct DensityFn {
    eval: Arc<Evaluator>,
    derivative: Option<Arc<Derivative>>,
    support_radius: f64,
    singularity_order: f64,
    label: String,
}

impl fmt::Debug for DensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityFn")
            .field("label", &self.label)
            .field("support_radius", &self.support_radius)
            .field("singularity_order", &self.singularity_order)
            .finish()
    }
}

/// Decades probed by [`DensityFn::new`]: `s = 10^-1, …, 10^-8`.
const PROBE_DECADES: i32 = 8;

impl DensityFn {
    /// Wraps a closure, validating it on a probe grid: finite values on
    /// `(0, R]`, zero beyond `R`, and `s^p ζ(s)` growing no faster than a
    /// logarithm as `s → 0⁺`.
    pub fn new<F>(label: impl Into<String>, support_radius: f64, singularity_order: f64, f: F) -> Result<Self, TransformError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let d = Self::from_fn(label, support_radius, singularity_order, f);
        d.validate()?;
        Ok(d)
    }

    fn from_fn<F>(label: impl Into<String>, support_radius: f64, singularity_order: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_evaluator(label.into(), support_radius, singularity_order, Arc::new(move |s| Ok(f(s))))
    }

    fn from_evaluator(label: String, support_radius: f64, singularity_order: f64, eval: Arc<Evaluator>) -> Self {
        Self {
            eval,
            derivative: None,
            support_radius,
            singularity_order,
            label,
        }
    }

    fn validate(&self) -> Result<(), TransformError> {
        let bad = |reason: String| TransformError::Invalid {
            label: self.label.clone(),
            reason,
        };
        let r = self.support_radius;
        if !(r.is_finite() && r > 0.0) {
            return Err(bad(format!("support radius {r} must be positive and finite")));
        }
        if !(self.singularity_order.is_finite() && self.singularity_order >= 0.0) {
            return Err(bad(format!("singularity order {} must be >= 0", self.singularity_order)));
        }
        for k in 1..=64 {
            let s = r * k as f64 / 64.0;
            let v = self.eval(s);
            if !v.is_finite() {
                return Err(bad(format!("non-finite value {v} at s = {s}")));
            }
        }
        for s in [1.0 + 1e-9, 1.01, 1.5, 2.0, 10.0].map(|c| c * r) {
            if self.eval(s) != 0.0 {
                return Err(bad(format!("nonzero value at s = {s} beyond the support")));
            }
        }
        let p = self.singularity_order;
        let g: Vec<f64> = (1..=PROBE_DECADES)
            .map(|d| {
                let s = 10f64.powi(-d).min(r);
                s.powf(p) * self.eval(s).abs()
            })
            .collect();
        if let Some(v) = g.iter().find(|v| !v.is_finite()) {
            return Err(bad(format!("s^p ζ(s) is not finite near 0 ({v})")));
        }
        // Growth faster than s^{-1/4} per decade signals an understated order.
        let (a, b) = (g[g.len() - 2], g[g.len() - 1]);
        if b > 1e-300 && b > a * 10f64.powf(0.25) && b > 1.0 {
            return Err(bad(format!("s^p ζ(s) grows near 0 for p = {p}")));
        }
        Ok(())
    }

    /// Best estimate of `ζ(s)`; quadrature shortfalls are absorbed.
    pub fn eval(&self, s: f64) -> f64 {
        match (self.eval)(s) {
            Ok(v) => v,
            Err(e) => e.value,
        }
    }

    /// `ζ(s)`, reporting a quadrature that missed its tolerance.
    pub fn try_eval(&self, s: f64) -> Result<f64, TransformError> {
        Ok((self.eval)(s)?)
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn singularity_order(&self) -> f64 {
        self.singularity_order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// Attaches an analytic derivative used by [`abel_inverse`].
    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `ζ'(t)`: the attached derivative, else a central difference with
    /// step `1e-5·max(1, t)` (one-sided when `t` is closer to 0 than that).
    pub fn derivative(&self, t: f64) -> f64 {
        if let Some(d) = &self.derivative {
            return d(t);
        }
        let h = 1e-5 * t.max(1.0);
        if t - h > 0.0 {
            (self.eval(t + h) - self.eval(t - h)) / (2.0 * h)
        } else {
            (-3.0 * self.eval(t) + 4.0 * self.eval(t + h) - self.eval(t + 2.0 * h)) / (2.0 * h)
        }
    }

    /// `λ ζ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.clone();
        let mut out = Self::from_evaluator(
            format!("{lambda}*{}", self.label),
            self.support_radius,
            self.singularity_order,
            Arc::new(move |s| (inner.eval)(s).map(|v| lambda * v).map_err(|e| scale_err(e, lambda))),
        );
        if let Some(d) = &self.derivative {
            let d = Arc::clone(d);
            out.derivative = Some(Arc::new(move |t| lambda * d(t)));
        }
        out
    }

    /// `a ζ₁ + b ζ₂`.
    pub fn linear_combination(a: f64, z1: &DensityFn, b: f64, z2: &DensityFn) -> Self {
        let (f, g) = (z1.clone(), z2.clone());
        Self::from_evaluator(
            format!("{a}*{}+{b}*{}", z1.label, z2.label),
            z1.support_radius.max(z2.support_radius),
            z1.singularity_order.max(z2.singularity_order),
            Arc::new(move |s| Ok(a * f.try_eval(s).map_err(into_quad)? + b * g.try_eval(s).map_err(into_quad)?)),
        )
    }

    /// The identically zero density with the given support radius.
    pub fn zero(support_radius: f64) -> Self {
        Self::from_fn("zero", support_radius, 0.0, |_| 0.0).with_derivative(|_| 0.0)
    }

    /// `max(0, 1 − t/R)`.
    pub fn hat(radius: f64) -> Self {
        Self::from_fn(format!("hat:{radius}"), radius, 0.0, move |t| (1.0 - t / radius).max(0.0))
            .with_derivative(move |t| if t < radius { -1.0 / radius } else { 0.0 })
    }

    /// `e^{-t²}` truncated to `t < R`.
    pub fn gauss_trunc(radius: f64) -> Self {
        Self::from_fn(format!("gauss_trunc:{radius}"), radius, 0.0, move |t| {
            if t < radius {
                (-t * t).exp()
            } else {
                0.0
            }
        })
        .with_derivative(move |t| if t < radius { -2.0 * t * (-t * t).exp() } else { 0.0 })
    }

    /// `s^{-p} max(0, 1 − s)`, singular of order `p` at the origin.
    pub fn power(p: f64) -> Self {
        Self::from_fn(format!("power:{p}"), 1.0, p, move |s| if s < 1.0 { s.powf(-p) * (1.0 - s) } else { 0.0 })
            .with_derivative(move |s| {
                if s < 1.0 {
                    -p * s.powf(-p - 1.0) * (1.0 - s) - s.powf(-p)
                } else {
                    0.0
                }
            })
    }

    /// Smooth bump `exp(−1/(1−u²))` on `(a, b)`, `u = (2s − a − b)/(b − a)`.
    pub fn bump(a: f64, b: f64) -> Self {
        let u = move |s: f64| (2.0 * s - a - b) / (b - a);
        Self::from_fn(format!("bump:{a},{b}"), b, 0.0, move |s| {
            let u = u(s);
            if u.abs() < 1.0 {
                (-1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        })
        .with_derivative(move |s| {
            let u = u(s);
            if u.abs() < 1.0 {
                let q = 1.0 - u * u;
                (-1.0 / q).exp() * (-2.0 * u / (q * q)) * (2.0 / (b - a))
            } else {
                0.0
            }
        })
    }

    /// Values on a grid.
    pub fn sample(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&s| self.eval(s)).collect()
    }
}

fn scale_err(mut e: QuadError, lambda: f64) -> QuadError {
    e.value *= lambda;
    e.achieved *= lambda.abs();
    e
}

fn into_quad(e: TransformError) -> QuadError {
    match e {
        TransformError::Quadrature(q) => q,
        other => unreachable!("density evaluation only fails in quadrature: {other}"),
    }
}

impl FromStr for DensityFn {
    type Err = TransformError;

    /// Presets: `hat[:R]`, `gauss_trunc[:R]`, `power:p`, `bump:a,b`, `zero[:R]`.
    fn from_str(spec: &str) -> Result<Self, Self::Err> {
        let err = || TransformError::Parse(spec.to_string());
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), a),
            None => (spec.trim(), ""),
        };
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split([',', ' '])
                .filter(|t| !t.is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| err()))
                .collect::<Result<_, _>>()?
        };
        let positive = |v: f64| if v.is_finite() && v > 0.0 { Ok(v) } else { Err(err()) };
        let d = match (name, nums.as_slice()) {
            ("hat", []) => Self::hat(1.0),
            ("hat", [r]) => Self::hat(positive(*r)?),
            ("gauss_trunc", []) => Self::gauss_trunc(8.0),
            ("gauss_trunc", [r]) => Self::gauss_trunc(positive(*r)?),
            ("power", [p]) if p.is_finite() && *p >= 0.0 => Self::power(*p),
            ("bump", [a, b]) if *a >= 0.0 && a < b && b.is_finite() => Self::bump(*a, *b),
            ("zero", []) => Self::zero(1.0),
            ("zero", [r]) => Self::zero(positive(*r)?),
            _ => return Err(err()),
        };
        Ok(d)
    }
}

/// Number of geometric breakpoints `R·2^{-i}` of a memoized tail.
const TAIL_LEVELS: usize = 48;

/// Memoized `F(s) = ∫_s^R g(t) dt`.
struct Tail {
    integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    breaks: Vec<f64>,
    suffix: OnceLock<Vec<Result<f64, QuadError>>>,
    tol: Tolerance,
}

impl Tail {
    fn new(radius: f64, integrand: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> Self {
        Self {
            integrand,
            breaks: (0..=TAIL_LEVELS).map(|i| radius * 0.5f64.powi(i as i32)).collect(),
            suffix: OnceLock::new(),
            tol: Tolerance::default(),
        }
    }

    /// `suffix[i] = ∫_{breaks[i]}^{R}`; a failed panel poisons every deeper
    /// suffix with its best estimate.
    fn suffix(&self) -> &[Result<f64, QuadError>] {
        self.suffix.get_or_init(|| {
            let mut out = Vec::with_capacity(self.breaks.len());
            out.push(Ok(0.0));
            let mut acc: Result<f64, QuadError> = Ok(0.0);
            for w in self.breaks.windows(2) {
                let f = &self.integrand;
                let panel = integrate(|t| f(t), w[1], w[0], self.tol);
                acc = match (acc, panel) {
                    (Ok(a), Ok(p)) => Ok(a + p.value),
                    (Ok(a), Err(mut e)) => {
                        e.value += a;
                        Err(e)
                    }
                    (Err(mut e), Ok(p)) => {
                        e.value += p.value;
                        Err(e)
                    }
                    (Err(mut e), Err(p)) => {
                        e.value += p.value;
                        e.achieved += p.achieved;
                        Err(e)
                    }
                };
                out.push(acc);
            }
            out
        })
    }

    fn eval(&self, s: f64) -> Result<f64, QuadError> {
        let radius = self.breaks[0];
        if s >= radius {
            return Ok(0.0);
        }
        // Deepest breakpoint still at or above s.
        let i = self.breaks.partition_point(|&b| b >= s) - 1;
        let f = &self.integrand;
        let head = integrate(|t| f(t), s, self.breaks[i], self.tol);
        match (head, &self.suffix()[i]) {
            (Ok(h), Ok(t)) => Ok(h.value + t),
            (Ok(h), Err(e)) => Err(QuadError {
                value: e.value + h.value,
                ..*e
            }),
            (Err(mut e), tail) => {
                e.value += match tail {
                    Ok(t) => *t,
                    Err(t) => t.value,
                };
                Err(e)
            }
        }
    }
}

/// `ζ(s) ↦ a(s) ζ(s) + c · ∫_s^R k(t) ζ(t) dt` with a memoized tail.
fn local_plus_tail(
    input: &DensityFn,
    label: String,
    singularity_order: f64,
    local: impl Fn(f64) -> f64 + Send + Sync + 'static,
    c: f64,
    kernel: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> DensityFn {
    let radius = input.support_radius;
    let z = input.clone();
    let tail = Tail::new(radius, Arc::new(move |t| kernel(t) * z.eval(t)));
    let z = input.clone();
    DensityFn::from_evaluator(
        label,
        radius,
        singularity_order,
        Arc::new(move |s| {
            if s >= radius {
                return Ok(0.0);
            }
            let a = local(s);
            let head = if a == 0.0 { 0.0 } else { a * (z.eval)(s)? };
            Ok(head + c * tail.eval(s)?)
        }),
    )
}

/// `ℛ^l ζ(s) = s^l ζ(s) + l ∫_s^∞ t^{l-1} ζ(t) dt`.
pub fn r_transform(zeta: &DensityFn, l: u32) -> DensityFn {
    if l == 0 {
        return zeta.clone();
    }
    let li = l as i32;
    local_plus_tail(
        zeta,
        format!("R^{l}({})", zeta.label),
        (zeta.singularity_order - l as f64).max(0.0),
        move |s| s.powi(li),
        l as f64,
        move |t| t.powi(li - 1),
    )
}

/// `ℛ^{-l} ρ(s) = ρ(s)/s^l − l ∫_s^∞ ρ(t)/t^{l+1} dt`.
pub fn r_inverse(rho: &DensityFn, l: u32) -> DensityFn {
    if l == 0 {
        return rho.clone();
    }
    let li = l as i32;
    local_plus_tail(
        rho,
        format!("R^-{l}({})", rho.label),
        rho.singularity_order + l as f64,
        move |s| s.powi(-li),
        -(l as f64),
        move |t| t.powi(-li - 1),
    )
}

/// `𝒯^l ζ(s) = (1+s²)^{l/2} ζ(s) + l ∫_s^∞ t (1+t²)^{l/2-1} ζ(t) dt`.
pub fn t_transform(zeta: &DensityFn, l: u32) -> DensityFn {
    if l == 0 {
        return zeta.clone();
    }
    let h = l as f64 / 2.0;
    local_plus_tail(
        zeta,
        format!("T^{l}({})", zeta.label),
        zeta.singularity_order,
        move |s| (1.0 + s * s).powf(h),
        l as f64,
        move |t| t * (1.0 + t * t).powf(h - 1.0),
    )
}

/// `𝒯^l` realized as `l` applications of `𝒯¹`.
pub fn t_transform_iterated(zeta: &DensityFn, l: u32) -> DensityFn {
    (0..l).fold(zeta.clone(), |acc, _| t_transform(&acc, 1))
}

/// `𝒯^{-l} ρ(s) = ρ(s)/(1+s²)^{l/2} − l ∫_s^∞ t ρ(t)/(1+t²)^{l/2+1} dt`.
pub fn t_inverse(rho: &DensityFn, l: u32) -> DensityFn {
    if l == 0 {
        return rho.clone();
    }
    let h = l as f64 / 2.0;
    local_plus_tail(
        rho,
        format!("T^-{l}({})", rho.label),
        rho.singularity_order,
        move |s| (1.0 + s * s).powf(-h),
        -(l as f64),
        move |t| t * (1.0 + t * t).powf(-h - 1.0),
    )
}

/// `A^k ζ(s) = ∫_{R^k} ζ(√(|x|² + s²)) dx = k κ_k ∫_0^∞ r^{k-1} ζ(√(r² + s²)) dr`.
///
/// The integrand vanishes for `r ≥ √(R² − s²)`, so the support is preserved.
pub fn abel_transform(zeta: &DensityFn, k: u32) -> DensityFn {
    assert!(k >= 1, "Abel transform needs k >= 1");
    let radius = zeta.support_radius;
    let c = k as f64 * unit_ball_volume(k as usize);
    let z = zeta.clone();
    DensityFn::from_evaluator(
        format!("A^{k}({})", zeta.label),
        radius,
        (zeta.singularity_order - k as f64).max(0.0),
        Arc::new(move |s| {
            if s >= radius {
                return Ok(0.0);
            }
            let upper = (radius * radius - s * s).sqrt();
            let ki = k as i32;
            let est = integrate(|r| r.powi(ki - 1) * z.eval((r * r + s * s).sqrt()), 0.0, upper, Tolerance::default())
                .map_err(|e| scale_err(e, c))?;
            Ok(c * est.value)
        }),
    )
}

/// `A^{-1} ξ(s) = −(1/π) ∫_s^∞ ξ'(t)/√(t² − s²) dt`, evaluated with
/// `t = s cosh θ` as `−(1/π) ∫_0^{acosh(R/s)} ξ'(s cosh θ) dθ`.
pub fn abel_inverse(xi: &DensityFn) -> DensityFn {
    let radius = xi.support_radius;
    let x = xi.clone();
    DensityFn::from_evaluator(
        format!("A^-1({})", xi.label),
        radius,
        xi.singularity_order + 1.0,
        Arc::new(move |s| {
            if s >= radius {
                return Ok(0.0);
            }
            let upper = (radius / s).acosh();
            let est = integrate(|th| x.derivative(s * th.cosh()), 0.0, upper, Tolerance::default())
                .map_err(|e| scale_err(e, -std::f64::consts::FRAC_1_PI))?;
            Ok(-est.value / std::f64::consts::PI)
        }),
    )
}

/// `α = binom(n, j) ℛ^{n-j} ζ`, the density of the Monge–Ampère representation.
pub fn alpha_from_zeta(zeta: &DensityFn, j: usize, n: usize) -> Result<DensityFn, TransformError> {
    require_class(zeta, j, n)?;
    let b = binomial(n, j);
    let r = r_transform(zeta, (n - j) as u32);
    Ok(if b == 1.0 { r } else { r.scaled(b) })
}

/// `ζ_j = ℛ^{-(n-j)} α`; note there is no binomial factor, so
/// `zeta_from_alpha(alpha_from_zeta(ζ)) = binom(n, j) ζ`.
pub fn zeta_from_alpha(alpha: &DensityFn, j: usize, n: usize) -> Result<DensityFn, TransformError> {
    require_class(alpha, n, n)?;
    if j < 1 || j > n {
        return Err(class_error(alpha, j, n));
    }
    Ok(r_inverse(alpha, (n - j) as u32))
}

fn class_error(zeta: &DensityFn, j: usize, n: usize) -> TransformError {
    TransformError::Class {
        label: zeta.label.clone(),
        j,
        n,
        exponent: (n + 1).saturating_sub(j),
    }
}

fn require_class(zeta: &DensityFn, j: usize, n: usize) -> Result<(), TransformError> {
    if class_check(zeta, j, n) {
        Ok(())
    } else {
        Err(class_error(zeta, j, n))
    }
}

/// Thresholds of the sampled surrogate for `lim_{s→0⁺} s^{n-j+1} ζ(s) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassCheck {
    /// Smallest grid point; the grid is `10^-1, …, grid_floor` by decades.
    pub grid_floor: f64,
    /// Value at `grid_floor` below which membership is accepted outright.
    pub decay: f64,
    /// Minimum log-log slope over the last decade for a slowly decaying,
    /// monotone tail to be accepted.
    pub min_slope: f64,
}

impl Default for ClassCheck {
    fn default() -> Self {
        Self {
            grid_floor: 1e-8,
            decay: 1e-6,
            min_slope: 0.25,
        }
    }
}

/// Sampled membership test for `T_j^n` with the default thresholds.
pub fn class_check(zeta: &DensityFn, j: usize, n: usize) -> bool {
    class_check_with(zeta, j, n, &ClassCheck::default())
}

/// Sampled membership test for `T_j^n`.
///
/// `g(s) = |s^{n-j+1} ζ(s)|` is sampled on decades down to `grid_floor`.
/// Accepts when `g` ends below `decay`, or when it is non-increasing over
/// the last three samples and decays at least like `s^{min_slope}`.
pub fn class_check_with(zeta: &DensityFn, j: usize, n: usize, c: &ClassCheck) -> bool {
    if j < 1 || j > n {
        return false;
    }
    let e = (n - j + 1) as i32;
    let decades = (-c.grid_floor.log10()).round().max(1.0) as i32;
    let g: Vec<f64> = (1..=decades)
        .map(|d| {
            let s = 10f64.powi(-d);
            s.powi(e) * zeta.eval(s).abs()
        })
        .collect();
    if g.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let last = g[g.len() - 1];
    if last < c.decay {
        return true;
    }
    if g.len() < 3 {
        return false;
    }
    let tail = &g[g.len() - 3..];
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    let slope = (tail[1] / tail[2]).log10();
    monotone && slope >= c.min_slope
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
        (0..m).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / m as f64).collect()
    }

    fn max_dev(a: &DensityFn, b: &DensityFn, g: &[f64]) -> f64 {
        g.iter().map(|&s| (a.eval(s) - b.eval(s)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn r_transform_hat_values() {
        let hat = DensityFn::hat(1.0);
        assert_eq!(r_transform(&hat, 0).eval(0.3), hat.eval(0.3));
        assert!((r_transform(&hat, 1).eval(0.5) - 0.375).abs() < 1e-13);
        assert!((r_transform(&hat, 2).eval(0.0) - 1.0 / 3.0).abs() < 1e-13);
        assert_eq!(r_transform(&hat, 2).eval(1.3), 0.0);
    }

    #[test]
    fn r_inverse_round_trips() {
        let hat = DensityFn::hat(1.0);
        let rho = r_transform(&hat, 1);
        assert!((r_inverse(&rho, 1).eval(0.5) - 0.5).abs() < 1e-12);
        let g = grid(0.01, 1.0, 50);
        for l in 0..=3 {
            let back = r_inverse(&r_transform(&hat, l), l);
            assert!(max_dev(&back, &hat, &g) < 1e-8, "l={l}");
        }
    }

    #[test]
    fn t_transform_values_and_iteration() {
        let hat = DensityFn::hat(1.0);
        let oracle = 1.0
            + integrate(|t| t * (1.0 - t) / (1.0 + t * t).sqrt(), 0.0, 1.0, Tolerance::default())
                .unwrap()
                .value;
        assert!((t_transform(&hat, 1).eval(0.0) - oracle).abs() < 1e-12);
        let g = grid(0.01, 1.0, 50);
        for l in 2..=3 {
            assert!(max_dev(&t_transform(&hat, l), &t_transform_iterated(&hat, l), &g) < 1e-8);
        }
        for l in 0..=3 {
            assert!(max_dev(&t_inverse(&t_transform(&hat, l), l), &hat, &g) < 1e-8);
        }
    }

    #[test]
    fn abel_gaussian_oracles() {
        let gauss = DensityFn::gauss_trunc(8.0);
        let pi = std::f64::consts::PI;
        assert!((abel_transform(&gauss, 1).eval(0.0) - pi.sqrt()).abs() < 1e-10);
        assert!((abel_transform(&gauss, 2).eval(1.0) - pi / std::f64::consts::E).abs() < 1e-10);
        assert_eq!(abel_transform(&DensityFn::zero(1.0), 3).eval(0.2), 0.0);
        let back = abel_inverse(&abel_transform(&gauss, 1));
        assert!((back.eval(1.0) - (-1f64).exp()).abs() < 1e-4);
        let xi = DensityFn::new("sqrt_pi_gauss", 8.0, 0.0, move |t| if t < 8.0 { pi.sqrt() * (-t * t).exp() } else { 0.0 }).unwrap();
        assert!((abel_inverse(&xi).eval(0.5) - (-0.25f64).exp()).abs() < 1e-6);
        assert_eq!(abel_inverse(&DensityFn::zero(1.0)).eval(0.5), 0.0);
    }

    #[test]
    fn alpha_zeta_conversions() {
        let hat = DensityFn::hat(1.0);
        let a = alpha_from_zeta(&hat, 2, 2).unwrap();
        assert_eq!(a.eval(0.4), hat.eval(0.4));
        let a = alpha_from_zeta(&hat, 1, 2).unwrap();
        assert!((a.eval(0.5) - 0.75).abs() < 1e-13);
        let back = zeta_from_alpha(&a, 1, 2).unwrap();
        assert!((back.eval(0.3) - 2.0 * hat.eval(0.3)).abs() < 1e-10);
        // Worked example: α = hat gives ζ_1(s) = ln(1/s).
        let z1 = zeta_from_alpha(&hat, 1, 2).unwrap();
        for s in [0.05, 0.3, 0.8] {
            assert!((z1.eval(s) + s.ln()).abs() < 1e-10);
        }
        assert!(class_check(&z1, 1, 2));
        let g = grid(0.01, 1.0, 50);
        let rt = zeta_from_alpha(&alpha_from_zeta(&hat, 1, 3).unwrap(), 1, 3).unwrap();
        let three_hat = hat.scaled(3.0);
        assert!(max_dev(&rt, &three_hat, &g) < 1e-7);
    }

    #[test]
    fn class_check_examples() {
        for n in 1..=4 {
            for j in 1..=n {
                let e = (n - j + 1) as f64;
                assert!(class_check(&DensityFn::hat(1.0), j, n));
                let ok = DensityFn::new("ok", 1.0, e - 0.5, move |s| if s <= 1.0 { s.powf(-(e - 0.5)) } else { 0.0 }).unwrap();
                assert!(class_check(&ok, j, n), "n={n} j={j}");
                let bad = DensityFn::new("bad", 1.0, e, move |s| if s <= 1.0 { s.powf(-e) } else { 0.0 }).unwrap();
                assert!(!class_check(&bad, j, n), "n={n} j={j}");
            }
        }
        assert!(!class_check(&DensityFn::hat(1.0), 0, 2));
        assert!(matches!(alpha_from_zeta(&DensityFn::power(2.0), 1, 2), Err(TransformError::Class { .. })));
    }

    #[test]
    fn transforms_move_between_classes() {
        // ℛ^l maps T_j^n into T_j^{n-l}; 𝒯^l preserves T_j^n.
        let z = DensityFn::power(1.5);
        assert!(class_check(&z, 1, 2));
        assert!(class_check(&r_transform(&z, 1), 1, 1));
        assert!(class_check(&t_transform(&z, 2), 1, 2));
    }

    #[test]
    fn transforms_are_linear() {
        let (a, b) = (0.7, -1.3);
        let z1 = DensityFn::hat(1.0);
        let z2 = DensityFn::bump(0.1, 0.9);
        let comb = DensityFn::linear_combination(a, &z1, b, &z2);
        let g = grid(0.02, 1.0, 25);
        type Op = Box<dyn Fn(&DensityFn) -> DensityFn>;
        let ops: Vec<(&str, Op)> = vec![
            ("r2", Box::new(|z| r_transform(z, 2))),
            ("r-2", Box::new(|z| r_inverse(z, 2))),
            ("t2", Box::new(|z| t_transform(z, 2))),
            ("t-1", Box::new(|z| t_inverse(z, 1))),
            ("a2", Box::new(|z| abel_transform(z, 2))),
        ];
        for (name, op) in ops {
            let lhs = op(&comb);
            let rhs = DensityFn::linear_combination(a, &op(&z1), b, &op(&z2));
            assert!(max_dev(&lhs, &rhs, &g) < 1e-10, "{name}");
        }
    }

    #[test]
    fn presets_parse_and_validate() {
        let d: DensityFn = "hat:2".parse().unwrap();
        assert_eq!(d.support_radius(), 2.0);
        assert!((d.eval(1.0) - 0.5).abs() < 1e-15);
        assert!("bump:0.2,0.8".parse::<DensityFn>().is_ok());
        assert!("power:0.5".parse::<DensityFn>().is_ok());
        assert!("gauss_trunc".parse::<DensityFn>().is_ok());
        for bad in ["hat:-1", "bump:0.8,0.2", "nope", "power", "hat:x"] {
            assert!(bad.parse::<DensityFn>().is_err(), "{bad}");
        }
        assert!(DensityFn::new("leaky", 1.0, 0.0, |s| 1.0 / (1.0 + s)).is_err());
        assert!(DensityFn::new("understated", 1.0, 0.0, |s| if s < 1.0 { 1.0 / s } else { 0.0 }).is_err());
        assert!(DensityFn::new("nan", 1.0, 0.0, |s| if s < 1.0 { f64::NAN } else { 0.0 }).is_err());
    }

    #[test]
    fn preset_derivatives_match_differences() {
        for d in [DensityFn::hat(1.0), DensityFn::gauss_trunc(3.0), DensityFn::power(0.5), DensityFn::bump(0.2, 0.9)] {
            for s in [0.3, 0.45, 0.6] {
                let h = 1e-6;
                let fd = (d.eval(s + h) - d.eval(s - h)) / (2.0 * h);
                assert!((fd - d.derivative(s)).abs() < 1e-6, "{}", d.label());
            }
        }
    }
}
