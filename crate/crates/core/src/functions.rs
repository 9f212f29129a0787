//! Convex functions on `R^n`: evaluators for value, gradient and Hessian,
//! the cone test families `v_s` / `w_s`, Legendre–Fenchel conjugates,
//! subspace restriction and hinge pairs for valuation checks.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bodies::EllipsoidBody;
use crate::linalg::{hess_norm, hess_vb, LinalgError, SymMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FunctionError {
    #[error("{label} is not twice differentiable at {point:?}")]
    Singular { label: String, point: Vec<f64> },
    #[error("{label} is +inf at {point:?}")]
    OutsideDomain { label: String, point: Vec<f64> },
    #[error("point has dimension {got}, function lives on R^{expected}")]
    Dimension { expected: usize, got: usize },
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    Newton { iterations: usize, residual: f64 },
    #[error("frame columns are not orthonormal (deviation {0:e})")]
    Frame(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Residual demanded of conjugate Newton solves.
pub const NEWTON_RESIDUAL: f64 = 1e-9;
/// Iteration budget for conjugate Newton solves.
pub const NEWTON_MAX_ITER: usize = 100;

/// A strictly convex scalar function with closed-form derivatives, or the
/// Newton-evaluated conjugate of one.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarPiece {
    /// `x²/2`
    Quadratic,
    /// `x⁴/4`
    Quartic,
    /// `cosh x`
    Cosh,
    /// `eˣ + x²`
    ExpPlusSquare,
    /// `g*`, evaluated by solving `g'(x) = y`.
    Conjugate(Box<ScalarPiece>),
}

impl ScalarPiece {
    pub fn conjugate(&self) -> ScalarPiece {
        ScalarPiece::Conjugate(Box::new(self.clone()))
    }

    /// `(g(x), g'(x), g''(x))`.
    pub fn eval3(&self, x: f64) -> Result<(f64, f64, f64), FunctionError> {
        Ok(match self {
            ScalarPiece::Quadratic => (0.5 * x * x, x, 1.0),
            ScalarPiece::Quartic => (0.25 * x.powi(4), x.powi(3), 3.0 * x * x),
            ScalarPiece::Cosh => (x.cosh(), x.sinh(), x.cosh()),
            ScalarPiece::ExpPlusSquare => (x.exp() + x * x, x.exp() + 2.0 * x, x.exp() + 2.0),
            ScalarPiece::Conjugate(g) => {
                let (xs, gv, _, g2) = g.solve_derivative(x)?;
                (x * xs - gv, xs, 1.0 / g2)
            }
        })
    }

    pub fn value(&self, x: f64) -> Result<f64, FunctionError> {
        Ok(self.eval3(x)?.0)
    }

    /// Whether `g''` is finite everywhere.
    pub fn is_c2(&self) -> bool {
        match self {
            ScalarPiece::Conjugate(g) => g.has_positive_curvature(),
            _ => true,
        }
    }

    /// Whether `g'' > 0` everywhere; the conjugate is then C².
    pub fn has_positive_curvature(&self) -> bool {
        match self {
            ScalarPiece::Quartic => false,
            ScalarPiece::Conjugate(g) => g.is_c2(),
            _ => true,
        }
    }

    /// Solves `g'(x) = y` by bracketed Newton; returns `(x, g(x), g'(x), g''(x))`.
    pub fn solve_derivative(&self, y: f64) -> Result<(f64, f64, f64, f64), FunctionError> {
        let d = |x: f64| self.eval3(x).map(|(_, d1, _)| d1 - y);
        // Bracket the root of the increasing function g' - y.
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut grow = 0;
        while d(lo)? > 0.0 {
            hi = lo;
            lo *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(FunctionError::Newton {
                    iterations: grow,
                    residual: f64::INFINITY,
                });
            }
        }
        while d(hi)? < 0.0 {
            lo = hi;
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(FunctionError::Newton {
                    iterations: grow,
                    residual: f64::INFINITY,
                });
            }
        }
        let tight = 1e-14 * (1.0 + y.abs());
        let mut x = 0.5 * (lo + hi);
        for _ in 0..NEWTON_MAX_ITER {
            let (g, g1, g2) = self.eval3(x)?;
            let r = g1 - y;
            if r.abs() <= tight {
                return Ok((x, g, g1, g2));
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - r / g2;
            let next = if g2 > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if next == x || hi - lo <= f64::EPSILON * (lo.abs() + hi.abs()) {
                break;
            }
            x = next;
        }
        let (g, g1, g2) = self.eval3(x)?;
        let residual = (g1 - y).abs();
        if residual < NEWTON_RESIDUAL * (1.0 + y.abs()) {
            return Ok((x, g, g1, g2));
        }
        Err(FunctionError::Newton {
            iterations: NEWTON_MAX_ITER,
            residual,
        })
    }

    /// The minimizer of `g`, i.e. the root of `g'`.
    pub fn argmin(&self) -> Result<f64, FunctionError> {
        Ok(self.solve_derivative(0.0)?.0)
    }

    fn name(&self) -> String {
        match self {
            ScalarPiece::Quadratic => "quadratic".into(),
            ScalarPiece::Quartic => "quartic".into(),
            ScalarPiece::Cosh => "cosh".into(),
            ScalarPiece::ExpPlusSquare => "exp_sq".into(),
            ScalarPiece::Conjugate(g) => format!("conj({})", g.name()),
        }
    }
}

type ValueFn = dyn Fn(&DVector<f64>) -> f64 + Send + Sync;
type GradFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
type HessFn = dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync;

/// A convex function given by closures. Missing derivatives fall back to
/// central finite differences.
#[derive(Clone)]
pub struct SmoothFn {
    pub dim: usize,
    pub label: String,
    pub smooth_near_origin: bool,
    value: Arc<ValueFn>,
    grad: Option<Arc<GradFn>>,
    hess: Option<Arc<HessFn>>,
}

impl SmoothFn {
    pub fn new<V>(dim: usize, label: impl Into<String>, value: V) -> Self
    where
        V: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            smooth_near_origin: true,
            value: Arc::new(value),
            grad: None,
            hess: None,
        }
    }

    pub fn with_grad<G>(mut self, g: G) -> Self
    where
        G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(g));
        self
    }

    pub fn with_hess<H>(mut self, h: H) -> Self
    where
        H: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hess = Some(Arc::new(h));
        self
    }

    /// Declares the function non-C² at the origin (smooth elsewhere).
    pub fn singular_at_origin(mut self) -> Self {
        self.smooth_near_origin = false;
        self
    }
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFn")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("smooth_near_origin", &self.smooth_near_origin)
            .finish()
    }
}

/// One-sided C² ramp used by hinge functions.
///
/// `p(t) = 0` for `t ≤ 0`, `p''` is a tent on `[0, ε]` with peak `2/ε`
/// at `ε/2`, and `p(t) = t − ε/2` for `t ≥ ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ramp {
    pub width: f64,
}

impl Ramp {
    /// `(p, p', p'')` at `t`.
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let e = self.width;
        let c = 2.0 / (3.0 * e * e);
        if t <= 0.0 {
            (0.0, 0.0, 0.0)
        } else if t <= 0.5 * e {
            (c * t.powi(3), 3.0 * c * t * t, 6.0 * c * t)
        } else if t <= e {
            let u = e - t;
            (t - 0.5 * e + c * u.powi(3), 1.0 - 3.0 * c * u * u, 6.0 * c * u)
        } else {
            (t - 0.5 * e, 1.0, 0.0)
        }
    }
}

/// `x ↦ p(⟨x, d⟩ − τ)` with ramp width `τ/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hinge {
    pub direction: DVector<f64>,
    pub threshold: f64,
    pub ramp: Ramp,
}

impl Hinge {
    pub fn new(direction: DVector<f64>, threshold: f64) -> Self {
        Self {
            direction,
            threshold,
            ramp: Ramp { width: threshold / 2.0 },
        }
    }

    fn eval3(&self, x: &DVector<f64>) -> (f64, f64, f64) {
        self.ramp.eval3(x.dot(&self.direction) - self.threshold)
    }
}

/// Domain of the indicator part of a cone conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeDomain {
    /// `B^n`
    Ball,
    /// `D^n = B^n ∩ {x_n ≥ 0}`
    HalfBall,
}

impl ConeDomain {
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        let inside = x.norm() <= 1.0;
        match self {
            ConeDomain::Ball => inside,
            ConeDomain::HalfBall => inside && x[x.len() - 1] >= 0.0,
        }
    }
}

/// An orthonormal frame of a `j`-dimensional subspace `E ⊆ R^n`, with an
/// orthonormal basis of `E^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceFrame {
    basis: DMatrix<f64>,
    complement: DMatrix<f64>,
}

/// Orthonormality tolerance of [`SubspaceFrame`] columns.
pub const FRAME_TOL: f64 = 1e-12;

impl SubspaceFrame {
    /// Validates orthonormal columns and completes them to a basis of `R^n`.
    pub fn new(basis: DMatrix<f64>) -> Result<Self, FunctionError> {
        let (n, j) = basis.shape();
        let dev = (basis.transpose() * &basis - DMatrix::identity(j, j)).amax();
        if dev > FRAME_TOL || j > n {
            return Err(FunctionError::Frame(dev));
        }
        // Gram–Schmidt the standard basis against the frame.
        let mut cols: Vec<DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
        let mut complement = Vec::with_capacity(n - j);
        for i in 0..n {
            if complement.len() == n - j {
                break;
            }
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    v -= c * c.dot(&v);
                }
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v /= norm;
                cols.push(v.clone());
                complement.push(v);
            }
        }
        let complement = if complement.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(&complement)
        };
        Ok(Self { basis, complement })
    }

    /// The first `j` columns of an orthogonal matrix, the rest spanning `E^⊥`.
    pub fn from_rotation(rotation: &DMatrix<f64>, j: usize) -> Result<Self, FunctionError> {
        let n = rotation.nrows();
        let dev = (rotation.transpose() * rotation - DMatrix::identity(n, n)).amax();
        if dev > FRAME_TOL || j > n {
            return Err(FunctionError::Frame(dev));
        }
        Ok(Self {
            basis: rotation.columns(0, j).into_owned(),
            complement: rotation.columns(j, n - j).into_owned(),
        })
    }

    /// The coordinate subspace spanned by `e_1, …, e_j`.
    pub fn coordinate(n: usize, j: usize) -> Self {
        let id = DMatrix::identity(n, n);
        Self::from_rotation(&id, j).expect("identity is orthogonal")
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn complement(&self) -> &DMatrix<f64> {
        &self.complement
    }
}

/// A convex function on `R^n`.
#[derive(Debug, Clone)]
pub enum ConvexFn {
    Smooth(SmoothFn),
    /// `Σ g_i(x_i)`
    Separable(Vec<ScalarPiece>),
    /// `v_s(x) = max(0, |x| − s)`
    ConeVs { n: usize, s: f64 },
    /// The half cone `w_s`: `v_s` on `{x_n ≥ 0}`, `v_s` of `(x_1, …, x_{n−1})` below.
    HalfConeWs { n: usize, s: f64 },
    /// `h_K(x, −1)` for an ellipsoid `K ⊂ R^{n+1}`.
    BodyLift(EllipsoidBody),
    /// `√(1 + |x − x₀|²)`
    ShiftedVB { offset: DVector<f64> },
    /// `base + Σ hinges`
    HingeSum { base: Arc<ConvexFn>, hinges: Vec<Hinge> },
    /// `inner + r|x|`
    PlusNorm { inner: Arc<ConvexFn>, r: f64 },
    /// `√(xᵀ M x)`, the support function of an ellipsoid in `R^n`.
    SupportCone { m: SymMatrix },
    /// `inner ∘ ϑ⁻¹` for orthogonal `ϑ`.
    Rotated { inner: Arc<ConvexFn>, rotation: DMatrix<f64> },
    /// `λ · inner`
    Scaled { inner: Arc<ConvexFn>, lambda: f64 },
    /// `inner + ⟨b, x⟩ + c`
    PlusAffine { inner: Arc<ConvexFn>, b: DVector<f64>, c: f64 },
    /// `y ↦ inner(B y)` on a subspace frame `B`.
    Restricted { inner: Arc<ConvexFn>, frame: SubspaceFrame },
    /// `ind_D + s|x|`: the conjugates of `v_s` (`D = B^n`) and `w_s` (`D = D^n`).
    IndicatorPlusNorm { n: usize, domain: ConeDomain, s: f64 },
}

/// Smoothness class, used by backends to refuse unsupported inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regularity {
    /// C² on all of `R^n`.
    C2,
    /// C² on `R^n \ {0}`.
    C2AwayFromOrigin,
    /// Kinked on a hypersurface, or not finite-valued.
    Nonsmooth,
}

impl ConvexFn {
    /// `½|x|²` on `R^n`.
    pub fn quadratic(n: usize) -> Self {
        ConvexFn::Separable(vec![ScalarPiece::Quadratic; n])
    }

    pub fn shifted_vb(offset: DVector<f64>) -> Self {
        ConvexFn::ShiftedVB { offset }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFn::Smooth(f) => f.dim,
            ConvexFn::Separable(p) => p.len(),
            ConvexFn::ConeVs { n, .. } | ConvexFn::HalfConeWs { n, .. } | ConvexFn::IndicatorPlusNorm { n, .. } => *n,
            ConvexFn::BodyLift(k) => k.dim() - 1,
            ConvexFn::ShiftedVB { offset } => offset.len(),
            ConvexFn::HingeSum { base, .. } => base.dim(),
            ConvexFn::PlusNorm { inner, .. } | ConvexFn::Scaled { inner, .. } | ConvexFn::PlusAffine { inner, .. } => inner.dim(),
            ConvexFn::SupportCone { m } => m.dim(),
            ConvexFn::Rotated { rotation, .. } => rotation.nrows(),
            ConvexFn::Restricted { frame, .. } => frame.dim(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ConvexFn::Smooth(f) => f.label.clone(),
            ConvexFn::Separable(p) => format!("separable({})", p.iter().map(|g| g.name()).collect::<Vec<_>>().join(",")),
            ConvexFn::ConeVs { s, .. } => format!("cone_vs:{s}"),
            ConvexFn::HalfConeWs { s, .. } => format!("cone_ws:{s}"),
            ConvexFn::BodyLift(_) => "body".into(),
            ConvexFn::ShiftedVB { offset } => format!("shifted_vb:{}", join(offset.as_slice())),
            ConvexFn::HingeSum { base, hinges } => format!("{}+{}hinges", base.label(), hinges.len()),
            ConvexFn::PlusNorm { inner, r } => format!("{}+{r}|x|", inner.label()),
            ConvexFn::SupportCone { .. } => "support_cone".into(),
            ConvexFn::Rotated { inner, .. } => format!("rotated({})", inner.label()),
            ConvexFn::Scaled { inner, lambda } => format!("{lambda}*{}", inner.label()),
            ConvexFn::PlusAffine { inner, .. } => format!("{}+affine", inner.label()),
            ConvexFn::Restricted { inner, frame } => format!("{}|E{}", inner.label(), frame.dim()),
            ConvexFn::IndicatorPlusNorm { domain, s, .. } => format!("ind_{domain:?}+{s}|x|"),
        }
    }

    pub fn regularity(&self) -> Regularity {
        match self {
            ConvexFn::Smooth(f) => {
                if f.smooth_near_origin {
                    Regularity::C2
                } else {
                    Regularity::C2AwayFromOrigin
                }
            }
            ConvexFn::Separable(pieces) => {
                if pieces.iter().all(ScalarPiece::is_c2) {
                    Regularity::C2
                } else {
                    Regularity::Nonsmooth
                }
            }
            ConvexFn::BodyLift(_) | ConvexFn::ShiftedVB { .. } => Regularity::C2,
            ConvexFn::ConeVs { .. } | ConvexFn::HalfConeWs { .. } | ConvexFn::IndicatorPlusNorm { .. } => Regularity::Nonsmooth,
            ConvexFn::SupportCone { .. } => Regularity::C2AwayFromOrigin,
            ConvexFn::HingeSum { base, .. } => base.regularity(),
            ConvexFn::PlusNorm { inner, r } => {
                if *r == 0.0 {
                    inner.regularity()
                } else {
                    inner.regularity().max(Regularity::C2AwayFromOrigin)
                }
            }
            ConvexFn::Rotated { inner, .. }
            | ConvexFn::Scaled { inner, .. }
            | ConvexFn::PlusAffine { inner, .. }
            | ConvexFn::Restricted { inner, .. } => inner.regularity(),
        }
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<(), FunctionError> {
        if x.len() != self.dim() {
            return Err(FunctionError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn singular(&self, x: &DVector<f64>) -> FunctionError {
        FunctionError::Singular {
            label: self.label(),
            point: x.as_slice().to_vec(),
        }
    }

    /// `v(x)`; `+∞` outside the domain of indicator variants.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64, FunctionError> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexFn::Smooth(f) => (f.value)(x),
            ConvexFn::Separable(p) => {
                let mut acc = 0.0;
                for (g, xi) in p.iter().zip(x.iter()) {
                    acc += g.value(*xi)?;
                }
                acc
            }
            ConvexFn::ConeVs { s, .. } => (x.norm() - s).max(0.0),
            ConvexFn::HalfConeWs { n, s } => {
                if x[n - 1] >= 0.0 {
                    (x.norm() - s).max(0.0)
                } else {
                    (x.rows(0, n - 1).norm() - s).max(0.0)
                }
            }
            ConvexFn::BodyLift(k) => k.lift_value(x),
            ConvexFn::ShiftedVB { offset } => (1.0 + (x - offset).norm_squared()).sqrt(),
            ConvexFn::HingeSum { base, hinges } => base.value(x)? + hinges.iter().map(|h| h.eval3(x).0).sum::<f64>(),
            ConvexFn::PlusNorm { inner, r } => inner.value(x)? + r * x.norm(),
            ConvexFn::SupportCone { m } => x.dot(&(m.matrix() * x)).max(0.0).sqrt(),
            ConvexFn::Rotated { inner, rotation } => inner.value(&(rotation.transpose() * x))?,
            ConvexFn::Scaled { inner, lambda } => lambda * inner.value(x)?,
            ConvexFn::PlusAffine { inner, b, c } => inner.value(x)? + b.dot(x) + c,
            ConvexFn::Restricted { inner, frame } => inner.value(&(frame.basis() * x))?,
            ConvexFn::IndicatorPlusNorm { domain, s, .. } => {
                if domain.contains(x) {
                    s * x.norm()
                } else {
                    f64::INFINITY
                }
            }
        })
    }

    /// `∇v(x)`.
    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>, FunctionError> {
        self.check_dim(x)?;
        let n = x.len();
        Ok(match self {
            ConvexFn::Smooth(f) => match &f.grad {
                Some(g) => g(x),
                None => fd_grad(&|y| (f.value)(y), x),
            },
            ConvexFn::Separable(p) => {
                let mut g = DVector::zeros(n);
                for (i, piece) in p.iter().enumerate() {
                    g[i] = piece.eval3(x[i])?.1;
                }
                g
            }
            ConvexFn::ConeVs { s, .. } => {
                let r = x.norm();
                if r == *s {
                    return Err(self.singular(x));
                }
                if r < *s {
                    DVector::zeros(n)
                } else {
                    x / r
                }
            }
            ConvexFn::HalfConeWs { s, .. } => {
                if x[n - 1] >= 0.0 {
                    let r = x.norm();
                    if r == *s {
                        return Err(self.singular(x));
                    }
                    if r < *s {
                        DVector::zeros(n)
                    } else {
                        x / r
                    }
                } else {
                    let r = x.rows(0, n - 1).norm();
                    if r == *s {
                        return Err(self.singular(x));
                    }
                    let mut g = DVector::zeros(n);
                    if r > *s {
                        g.rows_mut(0, n - 1).copy_from(&(x.rows(0, n - 1) / r));
                    }
                    g
                }
            }
            ConvexFn::BodyLift(k) => k.lift_grad(x),
            ConvexFn::ShiftedVB { offset } => {
                let d = x - offset;
                let q = (1.0 + d.norm_squared()).sqrt();
                d / q
            }
            ConvexFn::HingeSum { base, hinges } => {
                let mut g = base.grad(x)?;
                for h in hinges {
                    g += &h.direction * h.eval3(x).1;
                }
                g
            }
            ConvexFn::PlusNorm { inner, r } => {
                let mut g = inner.grad(x)?;
                if *r != 0.0 {
                    let nx = x.norm();
                    if nx == 0.0 {
                        return Err(self.singular(x));
                    }
                    g += x * (r / nx);
                }
                g
            }
            ConvexFn::SupportCone { m } => {
                let mx = m.matrix() * x;
                let q = x.dot(&mx);
                if q <= 0.0 {
                    return Err(self.singular(x));
                }
                mx / q.sqrt()
            }
            ConvexFn::Rotated { inner, rotation } => rotation * inner.grad(&(rotation.transpose() * x))?,
            ConvexFn::Scaled { inner, lambda } => inner.grad(x)? * *lambda,
            ConvexFn::PlusAffine { inner, b, .. } => inner.grad(x)? + b,
            ConvexFn::Restricted { inner, frame } => frame.basis().transpose() * inner.grad(&(frame.basis() * x))?,
            ConvexFn::IndicatorPlusNorm { domain, s, .. } => {
                if !domain.contains(x) {
                    return Err(FunctionError::OutsideDomain {
                        label: self.label(),
                        point: x.as_slice().to_vec(),
                    });
                }
                let r = x.norm();
                if r == 0.0 {
                    return Err(self.singular(x));
                }
                x * (s / r)
            }
        })
    }

    /// `Hess v(x)`.
    pub fn hess(&self, x: &DVector<f64>) -> Result<SymMatrix, FunctionError> {
        self.check_dim(x)?;
        let n = x.len();
        Ok(match self {
            ConvexFn::Smooth(f) => match (&f.hess, &f.grad) {
                (Some(h), _) => SymMatrix::symmetrized(h(x)),
                (None, Some(g)) => fd_jacobian(&|y| g(y), x),
                (None, None) => fd_hess(&|y| (f.value)(y), x),
            },
            ConvexFn::Separable(p) => {
                let mut d = Vec::with_capacity(n);
                for (i, piece) in p.iter().enumerate() {
                    d.push(piece.eval3(x[i])?.2);
                }
                SymMatrix::from_diagonal(&d)
            }
            ConvexFn::ConeVs { s, .. } => {
                let r = x.norm();
                if r == *s {
                    return Err(self.singular(x));
                }
                if r < *s {
                    SymMatrix::zeros(n)
                } else {
                    hess_norm(x)?
                }
            }
            ConvexFn::HalfConeWs { s, .. } => {
                let last = x[n - 1];
                if last == 0.0 {
                    return Err(self.singular(x));
                }
                if last > 0.0 {
                    let r = x.norm();
                    if r == *s {
                        return Err(self.singular(x));
                    }
                    if r < *s {
                        SymMatrix::zeros(n)
                    } else {
                        hess_norm(x)?
                    }
                } else {
                    let head = x.rows(0, n - 1).into_owned();
                    let r = head.norm();
                    if r == *s {
                        return Err(self.singular(x));
                    }
                    let mut h = DMatrix::zeros(n, n);
                    if r > *s && n > 1 {
                        h.view_mut((0, 0), (n - 1, n - 1)).copy_from(hess_norm(&head)?.matrix());
                    }
                    SymMatrix::symmetrized(h)
                }
            }
            ConvexFn::BodyLift(k) => k.lift_hess(x),
            ConvexFn::ShiftedVB { offset } => hess_vb(&(x - offset)),
            ConvexFn::HingeSum { base, hinges } => {
                let mut h = base.hess(x)?.into_matrix();
                for hinge in hinges {
                    let p2 = hinge.eval3(x).2;
                    if p2 != 0.0 {
                        h += &hinge.direction * hinge.direction.transpose() * p2;
                    }
                }
                SymMatrix::symmetrized(h)
            }
            ConvexFn::PlusNorm { inner, r } => {
                let h = inner.hess(x)?;
                if *r == 0.0 {
                    h
                } else {
                    if x.norm() == 0.0 {
                        return Err(self.singular(x));
                    }
                    h.add(&hess_norm(x)?.scaled(*r))
                }
            }
            ConvexFn::SupportCone { m } => {
                let mx = m.matrix() * x;
                let q = x.dot(&mx);
                if q <= 0.0 {
                    return Err(self.singular(x));
                }
                SymMatrix::symmetrized((m.matrix() * q - &mx * mx.transpose()) / (q * q.sqrt()))
            }
            ConvexFn::Rotated { inner, rotation } => {
                let h = inner.hess(&(rotation.transpose() * x))?;
                SymMatrix::symmetrized(rotation * h.matrix() * rotation.transpose())
            }
            ConvexFn::Scaled { inner, lambda } => inner.hess(x)?.scaled(*lambda),
            ConvexFn::PlusAffine { inner, .. } => inner.hess(x)?,
            ConvexFn::Restricted { inner, frame } => inner.hess(&(frame.basis() * x))?.congruence(frame.basis()),
            ConvexFn::IndicatorPlusNorm { domain, s, .. } => {
                if !domain.contains(x) {
                    return Err(FunctionError::OutsideDomain {
                        label: self.label(),
                        point: x.as_slice().to_vec(),
                    });
                }
                hess_norm(x)?.scaled(*s)
            }
        })
    }

    /// The closed-form or Newton-evaluated conjugate, where one is available.
    pub fn conjugate(&self) -> Result<ConvexFn, FunctionError> {
        match self {
            ConvexFn::Separable(p) => Ok(ConvexFn::Separable(p.iter().map(|g| match g {
                ScalarPiece::Conjugate(inner) => (**inner).clone(),
                other => other.conjugate(),
            }).collect())),
            ConvexFn::ConeVs { n, s } => Ok(ConvexFn::IndicatorPlusNorm {
                n: *n,
                domain: ConeDomain::Ball,
                s: *s,
            }),
            ConvexFn::HalfConeWs { n, s } => Ok(ConvexFn::IndicatorPlusNorm {
                n: *n,
                domain: ConeDomain::HalfBall,
                s: *s,
            }),
            ConvexFn::Scaled { inner, lambda } if *lambda > 0.0 => {
                // (λ u)*(y) = λ u*(y/λ)
                let conj = inner.conjugate()?;
                let lambda = *lambda;
                let dim = conj.dim();
                let c1 = conj.clone();
                let c2 = conj.clone();
                Ok(ConvexFn::Smooth(
                    SmoothFn::new(dim, format!("({lambda}*{})*", inner.label()), move |y| {
                        lambda * conj.value(&(y / lambda)).unwrap_or(f64::INFINITY)
                    })
                    .with_grad(move |y| c1.grad(&(y / lambda)).unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN)))
                    .with_hess(move |y| {
                        c2.hess(&(y / lambda))
                            .map(|h| h.scaled(1.0 / lambda).into_matrix())
                            .unwrap_or_else(|_| DMatrix::from_element(y.len(), y.len(), f64::NAN))
                    }),
                ))
            }
            other => Err(FunctionError::Parameter(format!("no conjugate available for {}", other.label()))),
        }
    }

    /// `v + r|x|`.
    pub fn plus_norm(self, r: f64) -> ConvexFn {
        if r == 0.0 {
            return self;
        }
        ConvexFn::PlusNorm { inner: Arc::new(self), r }
    }

    /// `v ∘ ϑ⁻¹` for an orthogonal matrix `ϑ`.
    pub fn rotated(self, rotation: DMatrix<f64>) -> ConvexFn {
        ConvexFn::Rotated {
            inner: Arc::new(self),
            rotation,
        }
    }

    pub fn scaled(self, lambda: f64) -> ConvexFn {
        ConvexFn::Scaled {
            inner: Arc::new(self),
            lambda,
        }
    }

    pub fn plus_affine(self, b: DVector<f64>, c: f64) -> ConvexFn {
        ConvexFn::PlusAffine {
            inner: Arc::new(self),
            b,
            c,
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// `v + r·h_{B^n}`.
pub fn plus_norm(v: &ConvexFn, r: f64) -> ConvexFn {
    v.clone().plus_norm(r)
}

/// `w(y) = v(B y)` on the subspace spanned by the frame.
pub fn restrict(v: &ConvexFn, frame: &SubspaceFrame) -> Result<ConvexFn, FunctionError> {
    if frame.ambient_dim() != v.dim() {
        return Err(FunctionError::Dimension {
            expected: v.dim(),
            got: frame.ambient_dim(),
        });
    }
    Ok(ConvexFn::Restricted {
        inner: Arc::new(v.clone()),
        frame: frame.clone(),
    })
}

/// Conjugate value `u*(y) = sup_x ⟨y, x⟩ − u(x)` and the maximizer.
///
/// Separable inputs are solved per coordinate by bracketed Newton on
/// `g'(x) = y`; smooth inputs by damped Newton on `∇u(x) = y`.
pub fn legendre(u: &ConvexFn, y: &DVector<f64>) -> Result<(f64, DVector<f64>), FunctionError> {
    u.check_dim(y)?;
    match u {
        ConvexFn::Separable(pieces) => {
            let mut x = DVector::zeros(y.len());
            let mut value = 0.0;
            for (i, g) in pieces.iter().enumerate() {
                let (xi, gv, _, _) = g.solve_derivative(y[i])?;
                x[i] = xi;
                value += y[i] * xi - gv;
            }
            Ok((value, x))
        }
        _ => {
            let mut x = DVector::zeros(y.len());
            let objective = |x: &DVector<f64>| -> Result<f64, FunctionError> { Ok(y.dot(x) - u.value(x)?) };
            let mut residual = f64::INFINITY;
            for _ in 0..NEWTON_MAX_ITER {
                let r = y - u.grad(&x)?;
                residual = r.norm();
                if residual < NEWTON_RESIDUAL {
                    return Ok((objective(&x)?, x));
                }
                let h = u.hess(&x)?.into_matrix();
                let step = h.clone().cholesky().map(|c| c.solve(&r)).unwrap_or_else(|| r.clone());
                let f0 = objective(&x)?;
                let mut t = 1.0;
                loop {
                    let cand = &x + &step * t;
                    if objective(&cand)? >= f0 - 1e-14 * f0.abs().max(1.0) || t < 1e-12 {
                        x = cand;
                        break;
                    }
                    t *= 0.5;
                }
            }
            Err(FunctionError::Newton {
                iterations: NEWTON_MAX_ITER,
                residual,
            })
        }
    }
}

/// Maximizes a concave function over a box by nested golden-section
/// searches, one coordinate per level. Used as an oracle for conjugates of
/// the cone families, where the supremum is only finite in the interior of
/// the conjugate's domain.
pub fn maximize_concave_box(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], tol: f64) -> f64 {
    fn level(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], tol: f64, prefix: &mut Vec<f64>) -> f64 {
        let k = prefix.len();
        if k == lo.len() {
            return f(prefix);
        }
        let eval = |t: f64, prefix: &mut Vec<f64>| {
            prefix.push(t);
            let v = level(f, lo, hi, tol, prefix);
            prefix.pop();
            v
        };
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo[k], hi[k]);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = eval(c, prefix);
        let mut fd = eval(d, prefix);
        while b - a > tol {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = eval(c, prefix);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = eval(d, prefix);
            }
        }
        fc.max(fd)
    }
    level(f, lo, hi, tol, &mut Vec::with_capacity(lo.len()))
}

/// Numerical `sup_x ⟨y, x⟩ − v(x)` over the box `[-L, L]^n`.
pub fn numeric_conjugate(v: &ConvexFn, y: &DVector<f64>, half_width: f64) -> f64 {
    let n = v.dim();
    let f = |x: &[f64]| {
        let x = DVector::from_column_slice(x);
        y.dot(&x) - v.value(&x).unwrap_or(f64::INFINITY)
    };
    maximize_concave_box(&f, &vec![-half_width; n], &vec![half_width; n], 1e-10)
}

/// Valuation test pair built from a smooth base `g`.
#[derive(Debug, Clone)]
pub struct HingePair {
    pub v: ConvexFn,
    pub w: ConvexFn,
    pub vmax: ConvexFn,
    pub vmin: ConvexFn,
}

/// `v = g + h₊`, `w = g + h₋` with C² hinges supported on `⟨x, d⟩ > τ`
/// and `⟨x, d⟩ < −τ`. Since the supports are disjoint, `v ∨ w = g + h₊ + h₋`
/// and `v ∧ w = g` exactly, and all four are convex and C².
pub fn make_hinge_pair(g: &ConvexFn, direction: &DVector<f64>, threshold: f64) -> Result<HingePair, FunctionError> {
    if !(threshold > 0.0) {
        return Err(FunctionError::Parameter(format!("hinge threshold {threshold} must be positive")));
    }
    if direction.len() != g.dim() {
        return Err(FunctionError::Dimension {
            expected: g.dim(),
            got: direction.len(),
        });
    }
    let norm = direction.norm();
    if !(norm > 0.0) {
        return Err(FunctionError::Parameter("hinge direction must be nonzero".into()));
    }
    let d = direction / norm;
    let plus = Hinge::new(d.clone(), threshold);
    let minus = Hinge::new(-d, threshold);
    let base = Arc::new(g.clone());
    let with = |hinges: Vec<Hinge>| ConvexFn::HingeSum {
        base: Arc::clone(&base),
        hinges,
    };
    Ok(HingePair {
        v: with(vec![plus.clone()]),
        w: with(vec![minus.clone()]),
        vmax: with(vec![plus, minus]),
        vmin: g.clone(),
    })
}

const FD_STEP: f64 = 1e-5;

fn fd_grad(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let h = FD_STEP * x[i].abs().max(1.0);
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        g[i] = (f(&p) - f(&m)) / (2.0 * h);
    }
    g
}

fn fd_jacobian(g: &dyn Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>) -> SymMatrix {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let step = FD_STEP * x[i].abs().max(1.0);
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += step;
        m[i] -= step;
        h.set_column(i, &((g(&p) - g(&m)) / (2.0 * step)));
    }
    SymMatrix::symmetrized(h)
}

fn fd_hess(f: &dyn Fn(&DVector<f64>) -> f64, x: &DVector<f64>) -> SymMatrix {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    let e = 1e-4;
    for i in 0..n {
        for j in i..n {
            let shift = |a: f64, b: f64| {
                let mut y = x.clone();
                y[i] += a;
                y[j] += b;
                f(&y)
            };
            let v = (shift(e, e) - shift(e, -e) - shift(-e, e) + shift(-e, -e)) / (4.0 * e * e);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    SymMatrix::symmetrized(h)
}

/// Finite-difference gradient of `v`'s value, for consistency checks.
pub fn finite_difference_grad(v: &ConvexFn, x: &DVector<f64>) -> DVector<f64> {
    fd_grad(&|y| v.value(y).unwrap_or(f64::NAN), x)
}

/// Finite-difference Jacobian of `v`'s gradient, for consistency checks.
pub fn finite_difference_hess(v: &ConvexFn, x: &DVector<f64>) -> SymMatrix {
    fd_jacobian(&|y| v.grad(y).unwrap_or_else(|_| DVector::from_element(y.len(), f64::NAN)), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rv(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
    }

    fn body() -> EllipsoidBody {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.4, 0.3, 1.5, -0.2, 0.4, -0.2, 1.2]);
        EllipsoidBody::new(m).unwrap()
    }

    fn zoo() -> Vec<ConvexFn> {
        let sv = ConvexFn::shifted_vb(DVector::from_vec(vec![0.7, -0.2]));
        let pair = make_hinge_pair(&sv, &DVector::from_vec(vec![1.0, 0.5]), 0.6).unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        vec![
            ConvexFn::quadratic(2),
            ConvexFn::Separable(vec![ScalarPiece::Cosh, ScalarPiece::ExpPlusSquare]),
            ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare.conjugate(), ScalarPiece::Cosh.conjugate()]),
            sv.clone(),
            ConvexFn::BodyLift(body()),
            pair.vmax,
            sv.clone().plus_norm(0.8),
            ConvexFn::SupportCone {
                m: SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap(),
            },
            sv.clone().rotated(rot),
            sv.clone().scaled(1.7),
            sv.clone().plus_affine(DVector::from_vec(vec![0.3, -1.0]), 2.0),
            ConvexFn::ConeVs { n: 2, s: 0.5 },
            ConvexFn::HalfConeWs { n: 2, s: 0.5 },
            ConvexFn::Smooth(SmoothFn::new(2, "logsumexp", |x| (x[0].exp() + x[1].exp()).ln())),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for v in zoo() {
            let mut checked = 0;
            while checked < 20 {
                let x = rv(&mut rng, 2, 2.0);
                let (Ok(g), Ok(h)) = (v.grad(&x), v.hess(&x)) else { continue };
                // Stay away from kinks of the cone families.
                if matches!(v, ConvexFn::ConeVs { .. } | ConvexFn::HalfConeWs { .. })
                    && ((x.norm() - 0.5).abs() < 0.05 || x[1].abs() < 0.05 || (x[0].abs() - 0.5).abs() < 0.05)
                {
                    continue;
                }
                if x.norm() < 0.1 {
                    continue;
                }
                let fg = finite_difference_grad(&v, &x);
                assert!((fg - &g).amax() < 1e-5, "{} grad at {x}", v.label());
                let fh = finite_difference_hess(&v, &x);
                assert!((fh.matrix() - h.matrix()).amax() < 1e-4, "{} hess at {x}", v.label());
                // Finite-difference Hessians (logsumexp) carry ~1e-6 noise on their null direction.
                assert!(h.min_eigenvalue() >= -1e-5, "{} not PSD", v.label());
                checked += 1;
            }
        }
    }

    #[test]
    fn midpoint_convexity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for v in zoo() {
            for _ in 0..200 {
                let (a, b) = (rv(&mut rng, 2, 3.0), rv(&mut rng, 2, 3.0));
                let mid = (&a + &b) * 0.5;
                let lhs = v.value(&mid).unwrap();
                let rhs = 0.5 * (v.value(&a).unwrap() + v.value(&b).unwrap());
                assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "{}", v.label());
            }
        }
    }

    #[test]
    fn spec_examples() {
        let vb = ConvexFn::shifted_vb(DVector::zeros(3));
        assert!((vb.hess(&DVector::zeros(3)).unwrap().matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let vs = ConvexFn::ConeVs { n: 2, s: 1.0 };
        let x = DVector::from_vec(vec![1.2, 1.6]);
        assert!((vs.grad(&x).unwrap() - &x / 2.0).amax() < 1e-15);
        let ws = ConvexFn::HalfConeWs { n: 3, s: 1.0 };
        assert_eq!(ws.grad(&DVector::from_vec(vec![0.0, 0.0, -2.0])).unwrap(), DVector::zeros(3));
        assert!(ws.hess(&DVector::from_vec(vec![2.0, 0.0, 0.0])).is_err());
        assert!(vs.grad(&DVector::from_vec(vec![1.0, 0.0])).is_err());
        // plus_norm of v_s at |x| = 2s.
        let s = 0.7;
        let p = plus_norm(&ConvexFn::ConeVs { n: 2, s }, 1.0);
        assert!((p.value(&DVector::from_vec(vec![0.0, 2.0 * s])).unwrap() - 3.0 * s).abs() < 1e-15);
        assert!(matches!(plus_norm(&vs, 0.0), ConvexFn::ConeVs { .. }));
    }

    #[test]
    fn scalar_conjugates() {
        let q = ScalarPiece::Quadratic.conjugate();
        assert!((q.value(3.0).unwrap() - 4.5).abs() < 1e-12);
        let c = ScalarPiece::Quartic.conjugate();
        assert!((c.value(1.0).unwrap() - 0.75).abs() < 1e-12);
        let ch = ScalarPiece::Cosh.conjugate();
        assert!((ch.value(0.0).unwrap() + 1.0).abs() < 1e-12);
        let y: f64 = 2.5;
        assert!((ch.value(y).unwrap() - (y * y.asinh() - (1.0 + y * y).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn quartic_conjugate_is_not_c2() {
        assert!(!ScalarPiece::Quartic.conjugate().is_c2());
        assert!(ScalarPiece::Cosh.conjugate().is_c2());
        let f = ConvexFn::Separable(vec![ScalarPiece::Cosh.conjugate(), ScalarPiece::Quartic.conjugate()]);
        assert_eq!(f.regularity(), Regularity::Nonsmooth);
        let g = ConvexFn::Separable(vec![ScalarPiece::Quadratic, ScalarPiece::Quartic]);
        assert_eq!(g.regularity(), Regularity::C2);
    }

    #[test]
    fn conjugation_is_an_involution() {
        for g in [ScalarPiece::Quadratic, ScalarPiece::Cosh, ScalarPiece::ExpPlusSquare] {
            let gg = ScalarPiece::Conjugate(Box::new(g.conjugate()));
            for i in 0..30 {
                let x = -2.0 + 4.0 * i as f64 / 29.0;
                assert!((gg.value(x).unwrap() - g.value(x).unwrap()).abs() < 1e-7, "{g:?} at {x}");
            }
        }
    }

    #[test]
    fn legendre_residuals() {
        let u = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare, ScalarPiece::Cosh]);
        let y = DVector::from_vec(vec![0.7, -1.4]);
        let (val, x) = legendre(&u, &y).unwrap();
        assert!((u.grad(&x).unwrap() - &y).norm() < 1e-9);
        assert!((val - (y.dot(&x) - u.value(&x).unwrap())).abs() < 1e-12);
        // Smooth route: same function without the separable structure.
        let s = ConvexFn::Smooth(
            SmoothFn::new(2, "smooth", |x| x[0].exp() + x[0] * x[0] + x[1].cosh())
                .with_grad(|x| DVector::from_vec(vec![x[0].exp() + 2.0 * x[0], x[1].sinh()]))
                .with_hess(|x| DMatrix::from_diagonal(&DVector::from_vec(vec![x[0].exp() + 2.0, x[1].cosh()]))),
        );
        let (val2, x2) = legendre(&s, &y).unwrap();
        assert!((val - val2).abs() < 1e-9);
        assert!((x - x2).norm() < 1e-8);
    }

    #[test]
    fn cone_conjugates_match_numeric_sup() {
        for (v, ys) in [
            (ConvexFn::ConeVs { n: 2, s: 0.6 }, vec![vec![0.3, -0.4], vec![-0.7, 0.1], vec![0.0, 0.0]]),
            (ConvexFn::HalfConeWs { n: 2, s: 0.6 }, vec![vec![0.3, 0.4], vec![-0.5, 0.2], vec![0.1, 0.8]]),
        ] {
            let conj = v.conjugate().unwrap();
            for y in ys {
                let y = DVector::from_vec(y);
                let numeric = numeric_conjugate(&v, &y, 3.0);
                let closed = conj.value(&y).unwrap();
                assert!((numeric - closed).abs() < 1e-7, "{}: {numeric} vs {closed}", v.label());
            }
        }
        let ws3 = ConvexFn::HalfConeWs { n: 3, s: 0.4 };
        let y = DVector::from_vec(vec![0.2, -0.3, 0.5]);
        assert!((numeric_conjugate(&ws3, &y, 2.0) - 0.4 * y.norm()).abs() < 1e-7);
    }

    #[test]
    fn restriction_examples() {
        let frame = SubspaceFrame::coordinate(2, 1);
        let (a, b) = (0.4, -0.9);
        let w = restrict(&ConvexFn::shifted_vb(DVector::from_vec(vec![a, b])), &frame).unwrap();
        for y in [-1.0, 0.3, 2.0] {
            let got = w.value(&DVector::from_vec(vec![y])).unwrap();
            assert!((got - (1.0 + (y - a) * (y - a) + b * b).sqrt()).abs() < 1e-14);
        }
        let q = restrict(&ConvexFn::quadratic(3), &SubspaceFrame::new(DMatrix::from_row_slice(3, 2, &[0.6, 0.0, 0.8, 0.0, 0.0, 1.0])).unwrap()).unwrap();
        let y = DVector::from_vec(vec![0.5, -1.5]);
        assert!((q.value(&y).unwrap() - 0.5 * y.norm_squared()).abs() < 1e-14);
    }

    #[test]
    fn restricted_hessian_is_pulled_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = ConvexFn::BodyLift(body());
        let frame = SubspaceFrame::new(DMatrix::from_row_slice(2, 1, &[0.6, 0.8])).unwrap();
        let w = restrict(&v, &frame).unwrap();
        for _ in 0..20 {
            let y = rv(&mut rng, 1, 2.0);
            let x = frame.basis() * &y;
            let direct = frame.basis().transpose() * v.hess(&x).unwrap().matrix() * frame.basis();
            assert!((w.hess(&y).unwrap().matrix() - direct).amax() < 1e-8);
        }
        assert_eq!(frame.complement().ncols(), 1);
        assert!(frame.complement().column(0).dot(&frame.basis().column(0)).abs() < 1e-14);
        assert!(SubspaceFrame::new(DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).is_err());
    }

    #[test]
    fn hinge_pair_identities() {
        let g = ConvexFn::Separable(vec![ScalarPiece::Cosh, ScalarPiece::Quadratic]);
        let d = DVector::from_vec(vec![0.6, 0.8]);
        let pair = make_hinge_pair(&g, &d, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = rv(&mut rng, 2, 2.0);
            let (v, w) = (pair.v.value(&x).unwrap(), pair.w.value(&x).unwrap());
            assert_eq!(v.min(w), pair.vmin.value(&x).unwrap());
            assert!((v.max(w) - pair.vmax.value(&x).unwrap()).abs() < 1e-14);
            for f in [&pair.v, &pair.w, &pair.vmax, &pair.vmin] {
                assert!(f.hess(&x).unwrap().min_eigenvalue() >= -1e-12);
            }
        }
        assert!(make_hinge_pair(&g, &d, 0.0).is_err());
    }

    #[test]
    fn ramp_is_c2() {
        let r = Ramp { width: 0.4 };
        for t in [0.0, 0.2, 0.4] {
            let (a, b) = (r.eval3(t - 1e-9), r.eval3(t + 1e-9));
            assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8 && (a.2 - b.2).abs() < 1e-7);
        }
        assert!((r.eval3(0.2).2 - 2.0 / 0.4).abs() < 1e-12);
    }
}
