//! Quadrature of vector-valued integrals against Hessian measures, mixed
//! Monge–Ampère measures and gradient pushforwards, plus Steiner
//! coefficient extraction and the closed-form cone oracles.
//!
//! Measures are never materialized: every backend is a polar product rule
//! (radial rule × sphere rule) evaluated at `(m)` and `(2m)` nodes, and the
//! difference is reported as the error estimate. Node contributions are
//! computed in parallel and summed in a fixed order.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::bodies::BodyError;
use crate::functions::{legendre, ConeDomain, ConvexFn, FunctionError, Regularity};
use crate::linalg::{determinant, elem_sym, hess_vb, mixed_discriminant_pair, SymMatrix};
use crate::quad::{binomial, gauss_legendre_on, integrate, radial_rule, unit_ball_volume, SphereRule, Tolerance};
use crate::transforms::{class_check_with, t_transform, ClassCheck, DensityFn, TransformError};

/// Largest supported dimension.
pub const MAX_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Function(#[from] FunctionError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error("degree j = {j} outside 1..={n}")]
    Degree { j: usize, n: usize },
    #[error("density `{label}` fails the T_{j}^{n} class check")]
    Class { label: String, j: usize, n: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid quadrature spec: {0}")]
    Spec(String),
    #[error("Steiner node set is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),
    #[error("invalid Steiner nodes: {0}")]
    Nodes(String),
    #[error("Hessian is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("integration region is unbounded along direction {0:?}")]
    Unbounded(Vec<f64>),
    #[error("quadrature produced non-finite values")]
    NonFinite,
}

/// Quadrature orders, sampling budget and seed shared by all backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSpec {
    /// Gauss–Legendre nodes per radial panel.
    pub radial_points: usize,
    /// Polar-angle nodes per sphere level; the circle uses at least 256
    /// trapezoid nodes in the plane and `2 × angular_points` otherwise.
    pub angular_points: usize,
    /// Radius below which the radial rule switches to `u = ln r`;
    /// defaults to `1e-3 × support_radius`.
    pub origin_cut: Option<f64>,
    /// Number of subspaces for the Kubota backends.
    pub mc_samples: usize,
    pub seed: u64,
    /// Tolerance of the adaptive 1-D integrals in the semi-analytic paths.
    pub tol: f64,
    pub class_check: ClassCheck,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            radial_points: 24,
            angular_points: 16,
            origin_cut: None,
            mc_samples: 2000,
            seed: 0,
            tol: 1e-12,
            class_check: ClassCheck::default(),
        }
    }
}

impl QuadSpec {
    /// Checks counts, the dimension ceiling and the origin cut.
    pub fn validate(&self, n: usize, density: &DensityFn) -> Result<(), MeasureError> {
        if n == 0 || n > MAX_DIM {
            return Err(MeasureError::Spec(format!("dimension {n} outside 1..={MAX_DIM}")));
        }
        if self.radial_points == 0 || self.angular_points == 0 || self.mc_samples == 0 {
            return Err(MeasureError::Spec("quadrature counts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MeasureError::Spec(format!("tolerance {} must be positive", self.tol)));
        }
        if let Some(cut) = self.origin_cut {
            if !(cut >= 0.0 && cut < density.support_radius()) {
                return Err(MeasureError::Spec(format!(
                    "origin cut {cut} must lie in [0, {})",
                    density.support_radius()
                )));
            }
        }
        Ok(())
    }

    pub fn origin_cut_for(&self, density: &DensityFn) -> f64 {
        self.origin_cut.unwrap_or(1e-3 * density.support_radius())
    }

    /// Product rule on `S^{n−1}` at the given polar order.
    pub fn sphere(&self, n: usize, angular_points: usize) -> SphereRule {
        SphereRule::full(n, angular_points, circle_points(n, angular_points))
    }

    pub fn upper_half_sphere(&self, n: usize, angular_points: usize) -> SphereRule {
        SphereRule::upper_half(n, angular_points, circle_points(n, angular_points))
    }

    fn adaptive(&self) -> Tolerance {
        Tolerance::new(self.tol, self.tol)
    }
}

fn circle_points(n: usize, angular_points: usize) -> usize {
    if n == 2 {
        (16 * angular_points).max(256)
    } else {
        2 * angular_points
    }
}

/// Which representation produced a [`MinkVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Backend {
    B1,
    B2,
    B2vb,
    B3,
    B3Dual,
    B4,
    Dual,
    Semi,
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Backend::B1 => "B1",
            Backend::B2 => "B2",
            Backend::B2vb => "B2VB",
            Backend::B3 => "B3",
            Backend::B3Dual => "B3DUAL",
            Backend::B4 => "B4",
            Backend::Dual => "DUAL",
            Backend::Semi => "SEMI",
        };
        f.write_str(s)
    }
}

/// A vector in `R^n` with an error estimate and its backend.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkVector {
    value: DVector<f64>,
    error_estimate: f64,
    backend: Backend,
}

impl MinkVector {
    pub fn new(value: DVector<f64>, error_estimate: f64, backend: Backend) -> Self {
        Self {
            value,
            error_estimate: error_estimate.abs(),
            backend,
        }
    }

    pub fn value(&self) -> &DVector<f64> {
        &self.value
    }

    pub fn error_estimate(&self) -> f64 {
        self.error_estimate
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|v| v.is_finite()) && self.error_estimate.is_finite()
    }
}

impl Serialize for MinkVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("MinkVector", 3)?;
        st.serialize_field("value", self.value.as_slice())?;
        st.serialize_field("error_estimate", &self.error_estimate)?;
        st.serialize_field("backend", &self.backend)?;
        st.end()
    }
}

fn check_degree(j: usize, n: usize) -> Result<(), MeasureError> {
    if j < 1 || j > n {
        return Err(MeasureError::Degree { j, n });
    }
    Ok(())
}

fn check_class(q: &QuadSpec, zeta: &DensityFn, j: usize, n: usize) -> Result<(), MeasureError> {
    if class_check_with(zeta, j, n, &q.class_check) {
        Ok(())
    } else {
        Err(MeasureError::Class {
            label: zeta.label().to_string(),
            j,
            n,
        })
    }
}

fn directions(rule: &SphereRule) -> Vec<(DVector<f64>, f64)> {
    rule.directions
        .iter()
        .zip(&rule.weights)
        .map(|(d, &w)| (DVector::from_column_slice(d), w))
        .collect()
}

/// `∫_0^R W(r) ∫_{S^{n−1}} A(r, θ) dθ dr` with `W` evaluated once per
/// radial node; `W` carries the Jacobian `r^{n−1}`.
#[allow(clippy::too_many_arguments)]
fn polar_once<W, A>(
    n: usize,
    out_dim: usize,
    outer: f64,
    cut: f64,
    radial_points: usize,
    sphere: &SphereRule,
    radial_weight: &W,
    angular: &A,
) -> Result<DVector<f64>, MeasureError>
where
    W: Fn(f64) -> f64 + Sync,
    A: Fn(f64, &DVector<f64>) -> Result<DVector<f64>, MeasureError> + Sync,
{
    let _ = n;
    let nodes = radial_rule(outer, cut, radial_points);
    let dirs = directions(sphere);
    let parts: Vec<Result<DVector<f64>, MeasureError>> = nodes
        .par_iter()
        .map(|&(r, w)| {
            let weight = w * radial_weight(r);
            let mut acc = DVector::zeros(out_dim);
            if weight == 0.0 {
                return Ok(acc);
            }
            for (theta, wt) in &dirs {
                acc += angular(r, theta)? * *wt;
            }
            Ok(acc * weight)
        })
        .collect();
    let mut total = DVector::zeros(out_dim);
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// Polar rule at `(m)` and `(2m)`; returns the fine value and the difference.
fn polar<W, A>(q: &QuadSpec, n: usize, outer: f64, cut: f64, radial_weight: W, angular: A) -> Result<(DVector<f64>, f64), MeasureError>
where
    W: Fn(f64) -> f64 + Sync,
    A: Fn(f64, &DVector<f64>) -> Result<DVector<f64>, MeasureError> + Sync,
{
    let coarse = polar_once(n, n, outer, cut, q.radial_points, &q.sphere(n, q.angular_points), &radial_weight, &angular)?;
    let fine = polar_once(n, n, outer, cut, 2 * q.radial_points, &q.sphere(n, 2 * q.angular_points), &radial_weight, &angular)?;
    let err = (&fine - coarse).norm();
    if !(err.is_finite() && fine.iter().all(|v| v.is_finite())) {
        return Err(MeasureError::NonFinite);
    }
    Ok((fine, err))
}

/// `D(A[j], B[n−j])`, with the `j = n` and `j = 0` cases short-circuited.
fn mixed_pair(a: &SymMatrix, j: usize, b: &SymMatrix) -> Result<f64, MeasureError> {
    let n = a.dim();
    Ok(if j == n {
        determinant(a)
    } else if j == 0 {
        determinant(b)
    } else {
        mixed_discriminant_pair(a, j, b).map_err(FunctionError::from)?
    })
}

/// Backend B1: `t*_{j,ζ}(v) = ∫ ζ(|x|) x [Hess v(x)]_j dx`.
pub fn b1_hessian_integral(v: &ConvexFn, zeta: &DensityFn, j: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    let n = v.dim();
    q.validate(n, zeta)?;
    check_degree(j, n)?;
    if v.regularity() != Regularity::C2 {
        return Err(MeasureError::Precondition(format!(
            "{} is not C² on R^n; the Hessian integral is only evaluated for smooth inputs",
            v.label()
        )));
    }
    check_class(q, zeta, j, n)?;
    let (value, err) = polar(
        q,
        n,
        zeta.support_radius(),
        q.origin_cut_for(zeta),
        |r| zeta.eval(r) * r.powi(n as i32),
        |r, theta| Ok(theta * elem_sym(&v.hess(&(theta * r))?, j)),
    )?;
    Ok(MinkVector::new(value, err, Backend::B1))
}

/// Backend B2: `∫ α(|x|) x dMA_j(v; x)` with density
/// `D(Hess v(x)[j], Hess h_{B^n}(x)[n−j])`.
///
/// `Hess h_{B^n}(x) = P_θ / r` with `P_θ = I − θθᵀ`, so the factor
/// `r^{−(n−j)}` moves into the radial weight.
pub fn b2_maj_integral(v: &ConvexFn, alpha: &DensityFn, j: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    let n = v.dim();
    q.validate(n, alpha)?;
    check_degree(j, n)?;
    if v.regularity() == Regularity::Nonsmooth {
        return Err(MeasureError::Precondition(format!("{} is not C² away from the origin", v.label())));
    }
    check_class(q, alpha, n, n)?;
    let (value, err) = polar(
        q,
        n,
        alpha.support_radius(),
        q.origin_cut_for(alpha),
        |r| alpha.eval(r) * r.powi(j as i32),
        |r, theta| {
            let h = v.hess(&(theta * r))?;
            let d = if j == n {
                determinant(&h)
            } else {
                let p = SymMatrix::symmetrized(DMatrix::identity(n, n) - theta * theta.transpose());
                mixed_pair(&h, j, &p)?
            };
            Ok(theta * d)
        },
    )?;
    Ok(MinkVector::new(value, err, Backend::B2))
}

/// `binom(n, j) ∫ (𝒯^{n−j} ζ)(|x|) x D(Hess v(x)[j], Hess v_B(x)[n−j]) dx`.
pub fn b2_vb_integral(v: &ConvexFn, zeta: &DensityFn, j: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    let n = v.dim();
    q.validate(n, zeta)?;
    check_degree(j, n)?;
    if v.regularity() != Regularity::C2 {
        return Err(MeasureError::Precondition(format!("{} is not C² on R^n", v.label())));
    }
    check_class(q, zeta, j, n)?;
    let beta = t_transform(zeta, (n - j) as u32);
    let b = binomial(n, j);
    let (value, err) = polar(
        q,
        n,
        zeta.support_radius(),
        q.origin_cut_for(zeta),
        |r| b * beta.eval(r) * r.powi(n as i32),
        |r, theta| {
            let x = theta * r;
            Ok(theta * mixed_pair(&v.hess(&x)?, j, &hess_vb(&x))?)
        },
    )?;
    Ok(MinkVector::new(value, err, Backend::B2vb))
}

/// Result of a ray search from the centre of a star-shaped region.
struct Ray {
    /// First crossing of `|∇u| = R`.
    inner: f64,
    /// Where `⟨∇u, θ⟩ = R`; beyond it `|∇u| > R`.
    outer: f64,
}

fn bisect(mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> Result<f64, MeasureError>) -> Result<f64, MeasureError> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn ray_bounds(
    center: &DVector<f64>,
    theta: &DVector<f64>,
    radius: f64,
    grad: GradRef<'_>,
) -> Result<Ray, MeasureError> {
    let along = |t: f64| -> Result<f64, MeasureError> { Ok(grad(&(center + theta * t))?.dot(theta) - radius) };
    let mut hi = 1.0;
    let mut doublings = 0;
    while along(hi)? < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(MeasureError::Unbounded(theta.as_slice().to_vec()));
        }
    }
    let outer = bisect(0.0, hi, &along)?;
    let modulus = |t: f64| -> Result<f64, MeasureError> { Ok(grad(&(center + theta * t))?.norm() - radius) };
    const SCAN: usize = 64;
    let mut prev = 0.0;
    let mut inner = outer;
    for k in 1..=SCAN {
        let t = outer * k as f64 / SCAN as f64;
        if modulus(t)? >= 0.0 {
            inner = bisect(prev, t, &modulus)?;
            break;
        }
        prev = t;
    }
    Ok(Ray { inner, outer })
}

type GradRef<'a> = &'a (dyn Fn(&DVector<f64>) -> Result<DVector<f64>, MeasureError> + Sync);
type IntegrandRef<'a> = &'a (dyn Fn(&DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, MeasureError> + Sync);

/// `∫ f(x, ∇u(x)) dx` over `{|∇u| ≤ R}` in polar coordinates about the
/// minimizer of `u`. Each ray is split at the first crossing of
/// `|∇u| = R`; the inner segment uses the singularity-aware radial rule.
#[allow(clippy::too_many_arguments)]
pub(crate) fn star_integral(
    center: &DVector<f64>,
    radius: f64,
    grad: GradRef<'_>,
    integrand: IntegrandRef<'_>,
    out_dim: usize,
    radial_points: usize,
    sphere: &SphereRule,
    cut_ratio: f64,
) -> Result<DVector<f64>, MeasureError> {
    let dim = center.len();
    let dirs = directions(sphere);
    let parts: Vec<Result<DVector<f64>, MeasureError>> = dirs
        .par_iter()
        .map(|(theta, wt)| {
            let ray = ray_bounds(center, theta, radius, grad)?;
            let mut nodes = radial_rule(ray.inner, cut_ratio * ray.inner, radial_points);
            if ray.outer > ray.inner * (1.0 + 1e-12) {
                nodes.extend(gauss_legendre_on(radial_points, ray.inner, ray.outer));
            }
            let mut acc = DVector::zeros(out_dim);
            for (t, w) in nodes {
                let x = center + theta * t;
                let g = grad(&x)?;
                acc += integrand(&x, &g)? * (w * t.powi(dim as i32 - 1));
            }
            Ok(acc * *wt)
        })
        .collect();
    let mut total = DVector::zeros(out_dim);
    for p in parts {
        total += p?;
    }
    Ok(total)
}

/// Dual backend: `t_{j,ζ}(u) = ∫ ζ(|∇u(x)|) ∇u(x) [Hess u(x)]_{n−j} dx`,
/// which equals `t*_{j,ζ}(u*)`.
///
/// Smooth inputs need a positive-definite Hessian; the cone conjugates
/// `ind_D + s|x|` are accepted for `j = n`, where the integral reduces to
/// `∫_D ζ(|∇u|) ∇u dx`.
pub fn dual_pushforward(u: &ConvexFn, zeta: &DensityFn, j: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    let n = u.dim();
    q.validate(n, zeta)?;
    check_degree(j, n)?;
    check_class(q, zeta, j, n)?;
    if let ConvexFn::IndicatorPlusNorm { domain, s, .. } = u {
        if j != n {
            return Err(MeasureError::Precondition(
                "indicator conjugates are only supported for j = n".into(),
            ));
        }
        let zs = zeta.eval(*s) * s;
        let run = |rp: usize, ap: usize| {
            let rule = match domain {
                ConeDomain::Ball => q.sphere(n, ap),
                ConeDomain::HalfBall => q.upper_half_sphere(n, ap),
            };
            polar_once(n, n, 1.0, 0.0, rp, &rule, &|r: f64| zs * r.powi(n as i32 - 1), &|_, theta: &DVector<f64>| {
                Ok(theta.clone())
            })
        };
        let coarse = run(q.radial_points, q.angular_points)?;
        let fine = run(2 * q.radial_points, 2 * q.angular_points)?;
        let err = (&fine - coarse).norm();
        return Ok(MinkVector::new(fine, err, Backend::Dual));
    }
    if u.regularity() != Regularity::C2 {
        return Err(MeasureError::Precondition(format!("{} is not C² with positive-definite Hessian", u.label())));
    }
    let (_, center) = legendre(u, &DVector::zeros(n))?;
    let grad = |x: &DVector<f64>| -> Result<DVector<f64>, MeasureError> { Ok(u.grad(x)?) };
    let k = n - j;
    let integrand = |x: &DVector<f64>, g: &DVector<f64>| -> Result<DVector<f64>, MeasureError> {
        let weight = zeta.eval(g.norm());
        if weight == 0.0 {
            return Ok(DVector::zeros(n));
        }
        let h = u.hess(x)?;
        if h.min_eigenvalue() <= 0.0 {
            return Err(MeasureError::NotPositiveDefinite(x.as_slice().to_vec()));
        }
        let e = if k == 0 { 1.0 } else { elem_sym(&h, k) };
        Ok(g * (weight * e))
    };
    let ratio = q.origin_cut_for(zeta) / zeta.support_radius();
    let coarse = star_integral(&center, zeta.support_radius(), &grad, &integrand, n, q.radial_points, &q.sphere(n, q.angular_points), ratio)?;
    let fine = star_integral(&center, zeta.support_radius(), &grad, &integrand, n, 2 * q.radial_points, &q.sphere(n, 2 * q.angular_points), ratio)?;
    let err = (&fine - coarse).norm();
    Ok(MinkVector::new(fine, err, Backend::Dual))
}

/// `count` Chebyshev points of the first kind in `[a, b]`, ascending.
pub fn chebyshev_nodes(count: usize, a: f64, b: f64) -> Vec<f64> {
    let m = count as f64;
    let mut nodes: Vec<f64> = (0..count)
        .map(|i| 0.5 * (a + b) + 0.5 * (b - a) * ((2.0 * i as f64 + 1.0) * std::f64::consts::PI / (2.0 * m)).cos())
        .collect();
    nodes.sort_by(f64::total_cmp);
    nodes
}

/// Default Steiner nodes for dimension `n`: `n + 3` Chebyshev points in `[0.2, 2]`.
pub fn default_steiner_nodes(n: usize) -> Vec<f64> {
    chebyshev_nodes(n + 3, 0.2, 2.0)
}

/// Largest accepted condition number of the Steiner Vandermonde system.
pub const STEINER_MAX_CONDITION: f64 = 1e8;

/// Coefficients of `r ↦ t*_{n,α}(v + r h_{B^n})`.
#[derive(Debug, Clone)]
pub struct SteinerCoefficients {
    /// Entry `j` is the coefficient of `r^{n−j}`; entry `0` must vanish.
    pub by_degree: Vec<MinkVector>,
    pub condition: f64,
    pub nodes: Vec<f64>,
}

/// Evaluates `t*_{n,α}(v + r h_{B^n})` with B2 at each node and solves the
/// least-squares Vandermonde system in the powers `r^0, …, r^n`.
pub fn steiner_extract(v: &ConvexFn, alpha: &DensityFn, r_nodes: &[f64], q: &QuadSpec) -> Result<SteinerCoefficients, MeasureError> {
    let n = v.dim();
    if r_nodes.len() < n + 1 {
        return Err(MeasureError::Nodes(format!("need at least {} nodes for {} unknown coefficients", n + 1, n + 1)));
    }
    if r_nodes.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(MeasureError::Nodes("nodes must be positive and finite".into()));
    }
    let mut sorted = r_nodes.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] <= 1e-12 * w[1]) {
        return Err(MeasureError::Nodes("nodes must be distinct".into()));
    }
    let m = r_nodes.len();
    let vander = DMatrix::from_fn(m, n + 1, |i, k| r_nodes[i].powi(k as i32));
    let svd = vander.clone().svd(true, true);
    let (smax, smin) = (svd.singular_values.max(), svd.singular_values.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > STEINER_MAX_CONDITION {
        return Err(MeasureError::IllConditioned(condition));
    }
    let samples: Vec<MinkVector> = r_nodes
        .iter()
        .map(|&r| b2_maj_integral(&v.clone().plus_norm(r), alpha, n, q))
        .collect::<Result<_, _>>()?;
    let pinv = svd.pseudo_inverse(0.0).map_err(|e| MeasureError::Nodes(e.to_string()))?;
    let rhs = DMatrix::from_fn(m, n, |i, c| samples[i].value()[c]);
    let coeffs = &pinv * rhs;
    let errs: Vec<f64> = samples.iter().map(|s| s.error_estimate()).collect();
    let by_degree = (0..=n)
        .map(|j| {
            let k = n - j;
            let value = coeffs.row(k).transpose();
            let err: f64 = (0..m).map(|i| pinv[(k, i)].abs() * errs[i]).sum();
            MinkVector::new(value, err, Backend::B2)
        })
        .collect();
    Ok(SteinerCoefficients {
        by_degree,
        condition,
        nodes: r_nodes.to_vec(),
    })
}

/// Parallel-set expansion of `v_s` over `sS^{n−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeShell {
    /// Entry `j` is `Φ_j(v_s; sS^{n−1})`.
    pub coefficients: Vec<f64>,
    /// `κ_n ((s + r)^n − s^n)` at the requested `r`.
    pub volume: f64,
}

/// Expands the shell volume `κ_n((s + r)^n − s^n)` in powers of `r` by
/// repeated polynomial multiplication.
pub fn phi_cone_shell(s: f64, r: f64, n: usize) -> ConeShell {
    let kappa = unit_ball_volume(n);
    // (s + r)^n, coefficients in r.
    let mut poly = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c * s;
            next[i + 1] += c;
        }
        poly = next;
    }
    poly[0] -= s.powi(n as i32);
    poly[0] = if poly[0].abs() <= 1e-15 * s.powi(n as i32).max(1e-300) { 0.0 } else { poly[0] };
    let coefficients: Vec<f64> = poly.iter().map(|c| kappa * c).collect();
    let volume = kappa * ((s + r).powi(n as i32) - s.powi(n as i32));
    ConeShell { coefficients, volume }
}

/// `∫_{z_n ≥ 0} z_n dH^{n−1}(z)` by the upper-half sphere rule.
pub fn cauchy_constant(n: usize, q: &QuadSpec) -> f64 {
    if n == 1 {
        return 1.0;
    }
    let rule = q.upper_half_sphere(n, 2 * q.angular_points);
    rule.directions.iter().zip(&rule.weights).map(|(d, w)| w * d[n - 1]).sum()
}

/// Region contributions to `(t*_{j,ζ}(w_s))_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WsRegions {
    /// `{|x| > s, x_n > 0}`
    pub a2: f64,
    /// `{|x'| > s, x_n < 0}`
    pub a3: f64,
    /// `{|x| = s, x_n > 0}`
    pub a4: f64,
    /// `{|x'| = s, x_n < 0}`
    pub a5: f64,
}

impl WsRegions {
    pub fn total(&self) -> f64 {
        self.a2 + self.a3 + self.a4 + self.a5
    }
}

/// `t*_{j,ζ}(w_s)` for `1 ≤ j ≤ n − 1`, region by region:
///
/// * `A₂`: `binom(n−1, j) ∫_s^∞ r^{n−j} ζ(r) dr · ∫_{z_n>0} z_n`;
/// * `A₃`: `−(n−1) κ_{n−1} binom(n−2, j) ∫_s^∞ r^{n−2−j} ∫_0^∞ ζ(√(r²+x²)) x dx dr`
///   (zero for `j = n − 1`);
/// * `A₄`: `c_{n,j,s} s^n ζ(s) ∫_{z_n>0} z_n` with `c_{n,j,s} = Φ_j(v_s; sS^{n−1}) / H^{n−1}(sS^{n−1})`;
/// * `A₅`: `−Φ_j^{(n−1)}(v_s; sS^{n−2}) ∫_0^∞ ζ(√(s²+x²)) x dx`.
pub fn ws_semianalytic(s: f64, zeta: &DensityFn, j: usize, n: usize, q: &QuadSpec) -> Result<(MinkVector, WsRegions), MeasureError> {
    q.validate(n, zeta)?;
    if n < 2 || j < 1 || j > n - 1 {
        return Err(MeasureError::Degree { j, n });
    }
    if !(s > 0.0) {
        return Err(MeasureError::Precondition(format!("w_s needs s > 0, got {s}")));
    }
    check_class(q, zeta, j, n)?;
    let big_r = zeta.support_radius();
    let tol = q.adaptive();
    let inner_tol = Tolerance::new(tol.abs * 1e-2, tol.rel * 1e-2);
    let mut err = 0.0;
    let mut integral = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, t: Tolerance| -> f64 {
        if a >= b {
            return 0.0;
        }
        match integrate(f, a, b, t) {
            Ok(e) => {
                err += e.error;
                e.value
            }
            Err(e) => {
                err += e.achieved;
                e.value
            }
        }
    };
    let half = cauchy_constant(n, q);
    let kappa1 = unit_ball_volume(n - 1);
    // ∫_0^∞ ζ(√(r² + x²)) x dx, cut at the support.
    let fiber = |r: f64| -> f64 {
        if r >= big_r {
            return 0.0;
        }
        let top = (big_r * big_r - r * r).sqrt();
        match integrate(|x| zeta.eval((r * r + x * x).sqrt()) * x, 0.0, top, inner_tol) {
            Ok(e) => e.value,
            Err(e) => e.value,
        }
    };

    let a2 = binomial(n - 1, j) * integral(&|r| r.powi((n - j) as i32) * zeta.eval(r), s, big_r, tol) * half;
    let a3 = if j == n - 1 {
        0.0
    } else {
        -((n - 1) as f64) * kappa1 * binomial(n - 2, j) * integral(&|r| r.powi((n - 2 - j) as i32) * fiber(r), s, big_r, tol)
    };
    let shell = phi_cone_shell(s, 0.0, n).coefficients[j];
    let c = shell / (n as f64 * unit_ball_volume(n) * s.powi(n as i32 - 1));
    let a4 = c * s.powi(n as i32) * zeta.eval(s) * half;
    let lower_shell = phi_cone_shell(s, 0.0, n - 1).coefficients[j];
    let a5 = -lower_shell * fiber(s);
    let regions = WsRegions { a2, a3, a4, a5 };
    let mut value = DVector::zeros(n);
    value[n - 1] = regions.total();
    Ok((MinkVector::new(value, err, Backend::Semi), regions))
}

/// `(κ_{n−1}/n) binom(n, j) s^{n−j+1} ζ(s)`: the closed form of `(t*_{j,ζ}(w_s))_n`,
/// valid for `1 ≤ j ≤ n` (for `j = n` it reads `(κ_{n−1}/n) s ζ(s)`).
pub fn ws_closed_form(s: f64, zeta: &DensityFn, j: usize, n: usize) -> f64 {
    unit_ball_volume(n - 1) / n as f64 * binomial(n, j) * s.powi((n - j + 1) as i32) * zeta.eval(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::ScalarPiece;
    use crate::transforms::{alpha_from_zeta, zeta_from_alpha};

    fn q() -> QuadSpec {
        QuadSpec::default()
    }

    fn close(a: &MinkVector, b: &MinkVector, rel: f64) -> bool {
        let diff = (a.value() - b.value()).norm();
        diff <= (3.0 * (a.error_estimate() + b.error_estimate())).max(rel * a.norm() + 1e-6)
    }

    #[test]
    fn b1_vanishes_on_symmetric_inputs() {
        let hat = DensityFn::hat(1.0);
        for n in 2..=3 {
            for j in 1..=n {
                let t = b1_hessian_integral(&ConvexFn::shifted_vb(DVector::zeros(n)), &hat, j, &q()).unwrap();
                assert!(t.norm() < 1e-10, "n={n} j={j}: {t:?}");
            }
        }
        let b = DVector::from_vec(vec![0.4, -2.0]);
        let t = b1_hessian_integral(&ConvexFn::quadratic(2).plus_affine(b, 1.0), &hat, 1, &q()).unwrap();
        assert!(t.norm() < 1e-10);
    }

    #[test]
    fn b1_b2_b2vb_agree_in_the_plane() {
        let hat = DensityFn::hat(1.0);
        let v = ConvexFn::shifted_vb(DVector::from_vec(vec![0.7, 0.0]));
        for j in 1..=2 {
            let b1 = b1_hessian_integral(&v, &hat, j, &q()).unwrap();
            let alpha = alpha_from_zeta(&hat, j, 2).unwrap();
            let b2 = b2_maj_integral(&v, &alpha, j, &q()).unwrap();
            let bvb = b2_vb_integral(&v, &hat, j, &q()).unwrap();
            assert!(b1.norm() > 1e-3);
            assert!(b1.value()[1].abs() < 1e-12);
            assert!(close(&b1, &b2, 1e-3), "j={j} {b1:?} {b2:?}");
            assert!(close(&b1, &bvb, 1e-3), "j={j} {b1:?} {bvb:?}");
        }
    }

    #[test]
    fn b1_refuses_kinked_inputs() {
        let hat = DensityFn::hat(1.0);
        let ws = ConvexFn::HalfConeWs { n: 2, s: 0.5 };
        assert!(matches!(b1_hessian_integral(&ws, &hat, 1, &q()), Err(MeasureError::Precondition(_))));
        assert!(matches!(b1_hessian_integral(&ConvexFn::quadratic(2), &hat, 3, &q()), Err(MeasureError::Degree { .. })));
        let bad = DensityFn::power(2.5);
        assert!(matches!(b1_hessian_integral(&ConvexFn::quadratic(2), &bad, 1, &q()), Err(MeasureError::Class { .. })));
    }

    #[test]
    fn dual_matches_b1_on_conjugate() {
        let hat = DensityFn::hat(1.0);
        let u = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare; 2]);
        let ustar = u.conjugate().unwrap();
        for j in 1..=2 {
            let d = dual_pushforward(&u, &hat, j, &q()).unwrap();
            let b = b1_hessian_integral(&ustar, &hat, j, &q()).unwrap();
            assert!((d.value() - b.value()).norm() <= 1e-3 * b.norm(), "j={j} {d:?} {b:?}");
        }
        let even = ConvexFn::Separable(vec![ScalarPiece::Cosh; 2]);
        assert!(dual_pushforward(&even, &hat, 1, &q()).unwrap().norm() < 1e-10);
    }

    #[test]
    fn dual_on_half_ball_conjugate() {
        let zeta = DensityFn::hat(2.0);
        let u = ConvexFn::HalfConeWs { n: 2, s: 1.0 }.conjugate().unwrap();
        let t = dual_pushforward(&u, &zeta, 2, &q()).unwrap();
        assert!((t.value()[1] - zeta.eval(1.0)).abs() < 1e-12, "{t:?}");
        assert!(t.value()[0].abs() < 1e-12);
    }

    #[test]
    fn cone_shell_coefficients() {
        let shell = phi_cone_shell(2.0, 0.3, 2);
        assert!((shell.coefficients[1] - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let zero = phi_cone_shell(0.0, 1.0, 3);
        assert_eq!(&zero.coefficients[..3], &[0.0, 0.0, 0.0]);
        assert!((zero.coefficients[3] - unit_ball_volume(3)).abs() < 1e-15);
        assert_eq!(phi_cone_shell(1.3, 0.0, 3).volume, 0.0);
        let s = phi_cone_shell(0.8, 0.45, 4);
        let poly: f64 = s.coefficients.iter().enumerate().map(|(j, c)| c * 0.45f64.powi(j as i32)).sum();
        assert!((poly - s.volume).abs() < 1e-12);
    }

    #[test]
    fn cauchy_constants() {
        let pi = std::f64::consts::PI;
        for (n, want) in [(2, 2.0), (3, pi), (4, 4.0 * pi / 3.0)] {
            assert!((cauchy_constant(n, &q()) - want).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn ws_regions_sum_to_closed_form() {
        let hat = DensityFn::hat(1.0);
        let (t, regions) = ws_semianalytic(0.5, &hat, 1, 2, &q()).unwrap();
        assert!((t.value()[1] - 0.25).abs() < 1e-10, "{regions:?}");
        assert_eq!(regions.a3, 0.0);
        let (t, _) = ws_semianalytic(0.5, &hat, 1, 3, &q()).unwrap();
        assert!((t.value()[2] - ws_closed_form(0.5, &hat, 1, 3)).abs() < 1e-9);
        let (t, _) = ws_semianalytic(1.5, &hat, 1, 3, &q()).unwrap();
        assert_eq!(t.norm(), 0.0);
    }

    #[test]
    fn steiner_recovers_direct_coefficients() {
        let hat = DensityFn::hat(1.0);
        let v = ConvexFn::shifted_vb(DVector::from_vec(vec![0.5, -0.3]));
        let steiner = steiner_extract(&v, &hat, &default_steiner_nodes(2), &q()).unwrap();
        assert!(steiner.by_degree[0].norm() < 1e-6, "{:?}", steiner.by_degree[0]);
        for j in 1..=2 {
            let zj = zeta_from_alpha(&hat, j, 2).unwrap();
            let direct = b1_hessian_integral(&v, &zj, j, &q()).unwrap();
            let got = &steiner.by_degree[j];
            assert!((got.value() - direct.value()).norm() <= 1e-3 * direct.norm(), "j={j} {got:?} {direct:?}");
        }
        assert!(matches!(steiner_extract(&v, &hat, &[0.5, 1.0], &q()), Err(MeasureError::Nodes(_))));
    }

    #[test]
    fn spec_validation() {
        let hat = DensityFn::hat(1.0);
        let bad = QuadSpec {
            origin_cut: Some(2.0),
            ..QuadSpec::default()
        };
        assert!(matches!(b1_hessian_integral(&ConvexFn::quadratic(2), &hat, 1, &bad), Err(MeasureError::Spec(_))));
        assert!(matches!(
            b1_hessian_integral(&ConvexFn::quadratic(6), &hat, 1, &q()),
            Err(MeasureError::Spec(_))
        ));
        let json = serde_json::to_string(&QuadSpec::default()).unwrap();
        assert_eq!(serde_json::from_str::<QuadSpec>(&json).unwrap(), QuadSpec::default());
    }
}
