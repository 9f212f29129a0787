//! Ellipsoids in `R^{n+1}`, their area measures, the gnomonic projection
//! and the area-measure backend (B4).

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{elem_sym, LinalgError, SymMatrix};
use crate::measure_engine::{Backend, MeasureError, MinkVector, QuadSpec};
use crate::quad::{binomial, radial_rule};
use crate::transforms::{t_transform, DensityFn};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BodyError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("ellipsoid matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("ellipsoid needs ambient dimension at least 2, got {0}")]
    Dimension(usize),
    #[error("support function is not differentiable at the origin")]
    AtOrigin,
    #[error("gnomonic projection needs z_(n+1) < 0, got {0}")]
    UpperHemisphere(f64),
}

/// The ellipsoid `{x : (x − c)ᵀ M⁻¹ (x − c) ≤ 1} ⊂ R^d` with support
/// function `h(u) = √(uᵀ M u) + ⟨c, u⟩`; the centre `c` starts at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidBody {
    m: SymMatrix,
    center: DVector<f64>,
}

impl EllipsoidBody {
    pub fn new(m: DMatrix<f64>) -> Result<Self, BodyError> {
        let m = SymMatrix::new(m)?;
        if m.dim() < 2 {
            return Err(BodyError::Dimension(m.dim()));
        }
        let min = m.min_eigenvalue();
        if !(min > 0.0) {
            return Err(BodyError::NotPositiveDefinite(min));
        }
        let center = DVector::zeros(m.dim());
        Ok(Self { m, center })
    }

    /// The ball of radius `r` in `R^d`.
    pub fn ball(d: usize, r: f64) -> Result<Self, BodyError> {
        Self::new(DMatrix::identity(d, d) * (r * r))
    }

    /// Ambient dimension `d = n + 1`.
    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.m
    }

    /// `K + t`. The support function gains `⟨t, u⟩`; Hessians and area
    /// measures are unchanged.
    pub fn translated(&self, t: &DVector<f64>) -> Self {
        Self {
            m: self.m.clone(),
            center: &self.center + t,
        }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn support_value(&self, u: &DVector<f64>) -> f64 {
        u.dot(&(self.m.matrix() * u)).max(0.0).sqrt() + self.center.dot(u)
    }

    /// `Hess h(u) = (M (uᵀMu) − (Mu)(Mu)ᵀ) / (uᵀMu)^{3/2}`; kernel spanned by `u`.
    pub fn support_hess(&self, u: &DVector<f64>) -> Result<SymMatrix, BodyError> {
        let mu = self.m.matrix() * u;
        let q = u.dot(&mu);
        if !(q > 0.0) {
            return Err(BodyError::AtOrigin);
        }
        Ok(SymMatrix::symmetrized(
            (self.m.matrix() * q - &mu * mu.transpose()) / (q * q.sqrt()),
        ))
    }

    /// Density of `S_j(K, ·)` against `H^n` on `S^n`:
    /// `binom(n, j)^{-1} [Hess h_K(z)]_j`. The `d × d` Hessian has the
    /// tangential eigenvalues plus a zero along `z`, so its elementary
    /// symmetric functions are the tangential ones.
    pub fn area_measure_density(&self, j: usize, z: &DVector<f64>) -> Result<f64, BodyError> {
        let n = self.dim() - 1;
        Ok(elem_sym(&self.support_hess(z)?, j) / binomial(n, j))
    }

    /// `v(x) = h_K(x, −1)`; for a centred body `√(xᵀAx − 2bᵀx + c)` with
    /// `M = [[A, b], [bᵀ, c]]`.
    pub fn lift_value(&self, x: &DVector<f64>) -> f64 {
        self.support_value(&lift(x))
    }

    pub fn lift_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        let u = lift(x);
        let mu = self.m.matrix() * &u;
        let h = u.dot(&mu).sqrt();
        mu.rows(0, n) / h + self.center.rows(0, n)
    }

    pub fn lift_hess(&self, x: &DVector<f64>) -> SymMatrix {
        let n = x.len();
        let full = self.support_hess(&lift(x)).expect("lifted point is nonzero");
        SymMatrix::symmetrized(full.matrix().view((0, 0), (n, n)).into_owned())
    }
}

fn lift(x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut u = DVector::zeros(n + 1);
    u.rows_mut(0, n).copy_from(x);
    u[n] = -1.0;
    u
}

/// `gnom(z) = (z_1, …, z_n) / |z_{n+1}|` on the open lower half sphere.
pub fn gnomonic(z: &DVector<f64>) -> Result<DVector<f64>, BodyError> {
    let d = z.len();
    let last = z[d - 1];
    if !(last < 0.0) {
        return Err(BodyError::UpperHemisphere(last));
    }
    Ok(z.rows(0, d - 1) / -last)
}

/// `gnom⁻¹(x) = (x, −1) / √(1 + |x|²)`.
pub fn gnomonic_inverse(x: &DVector<f64>) -> DVector<f64> {
    let u = lift(x);
    let norm = u.norm();
    u / norm
}

/// Backend B4:
/// `(t*_{j,α}(v))_i = binom(n, j) ∫_{S^n_−} (𝒯^{n−j} α)(|gnom z|) z_i dS_j(K, z)`
/// for `v = h_K(·, −1)`.
///
/// The lower half sphere is parametrized by `z = (sin φ · w, −cos φ)` with
/// `w ∈ S^{n−1}`, so `|gnom z| = tan φ` and `dH^n = sin^{n−1} φ dφ dw`;
/// `φ` runs up to `atan R`, beyond which the transformed density vanishes.
pub fn b4_area_integral(body: &EllipsoidBody, alpha: &DensityFn, j: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    let n = body.dim() - 1;
    q.validate(n, alpha)?;
    if j < 1 || j > n {
        return Err(MeasureError::Degree { j, n });
    }
    let beta = t_transform(alpha, (n - j) as u32);
    let phi_max = alpha.support_radius().atan();
    let cut = q.origin_cut_for(alpha).atan();
    let run = |radial_points: usize, angular_points: usize| -> Result<DVector<f64>, MeasureError> {
        let nodes = radial_rule(phi_max, cut, radial_points);
        let sphere = q.sphere(n, angular_points);
        let parts: Vec<Result<DVector<f64>, MeasureError>> = nodes
            .par_iter()
            .map(|&(phi, w)| {
                let (s, c) = phi.sin_cos();
                let weight = w * beta.eval(phi.tan()) * s.powi(n as i32 - 1) * s;
                let mut acc = DVector::zeros(n);
                if weight == 0.0 {
                    return Ok(acc);
                }
                for (dir, wd) in sphere.directions.iter().zip(&sphere.weights) {
                    let mut z = DVector::zeros(n + 1);
                    for i in 0..n {
                        z[i] = s * dir[i];
                    }
                    z[n] = -c;
                    let dens = elem_sym(&body.support_hess(&z)?, j);
                    for i in 0..n {
                        acc[i] += wd * dir[i] * dens;
                    }
                }
                Ok(acc * weight)
            })
            .collect();
        let mut total = DVector::zeros(n);
        for p in parts {
            total += p?;
        }
        Ok(total)
    };
    let coarse = run(q.radial_points, q.angular_points)?;
    let fine = run(2 * q.radial_points, 2 * q.angular_points)?;
    Ok(MinkVector::new(fine.clone(), (fine - coarse).norm(), Backend::B4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hess_norm;
    use crate::quad::SphereRule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_body() -> EllipsoidBody {
        EllipsoidBody::new(DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.3, 0.2, 1.0, -0.25, 0.3, -0.25, 1.2])).unwrap()
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(
            EllipsoidBody::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
            Err(BodyError::NotPositiveDefinite(_))
        ));
        assert!(EllipsoidBody::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).is_err());
    }

    #[test]
    fn ball_support_function() {
        let b = EllipsoidBody::ball(3, 1.0).unwrap();
        let u = DVector::from_vec(vec![0.3, -1.2, 0.5]);
        assert!((b.support_value(&u) - u.norm()).abs() < 1e-15);
        assert!((b.support_hess(&u).unwrap().matrix() - hess_norm(&u).unwrap().matrix()).amax() < 1e-14);
        assert!(b.support_hess(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn support_hessian_kernel_and_differences() {
        let k = sample_body();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let u = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let h = k.support_hess(&u).unwrap();
            assert!((h.matrix() * &u).amax() < 1e-12);
            let e = 1e-4;
            for a in 0..3 {
                for b in 0..3 {
                    let f = |da: f64, db: f64| {
                        let mut v = u.clone();
                        v[a] += da;
                        v[b] += db;
                        k.support_value(&v)
                    };
                    let fd = (f(e, e) - f(e, -e) - f(-e, e) + f(-e, -e)) / (4.0 * e * e);
                    assert!((fd - h.matrix()[(a, b)]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn area_measure_of_balls() {
        let z = DVector::from_vec(vec![0.6, 0.0, -0.8]);
        let unit = EllipsoidBody::ball(3, 1.0).unwrap();
        let big = EllipsoidBody::ball(3, 1.7).unwrap();
        for j in 0..=2 {
            assert!((unit.area_measure_density(j, &z).unwrap() - 1.0).abs() < 1e-13);
            assert!((big.area_measure_density(j, &z).unwrap() - 1.7f64.powi(j as i32)).abs() < 1e-12);
        }
        let rule = SphereRule::full(3, 24, 48);
        let mass: f64 = rule
            .directions
            .iter()
            .zip(&rule.weights)
            .map(|(d, w)| w * big.area_measure_density(2, &DVector::from_column_slice(d)).unwrap())
            .sum();
        assert!((mass - 4.0 * std::f64::consts::PI * 1.7 * 1.7).abs() < 1e-10);
    }

    #[test]
    fn gnomonic_projection() {
        assert_eq!(gnomonic(&DVector::from_vec(vec![0.0, 0.0, -1.0])).unwrap(), DVector::zeros(2));
        let t: f64 = 0.7;
        let z = DVector::from_vec(vec![t.sin(), 0.0, -t.cos()]);
        let g = gnomonic(&z).unwrap();
        assert!((g[0] - t.tan()).abs() < 1e-15 && g[1] == 0.0);
        assert!(gnomonic(&DVector::from_vec(vec![1.0, 0.0, 0.0])).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-5.0..5.0));
            assert!((gnomonic(&gnomonic_inverse(&x)).unwrap() - &x).amax() < 1e-14);
        }
    }

    #[test]
    fn lift_matches_support_function() {
        let k = sample_body();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let m = k.matrix().matrix();
            let a = m.view((0, 0), (2, 2));
            let b = m.view((0, 2), (2, 1));
            let direct = ((x.transpose() * a * &x)[0] - 2.0 * (b.transpose() * &x)[0] + m[(2, 2)]).sqrt();
            assert!((k.lift_value(&x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn b4_vanishes_on_balls_and_is_linear() {
        let q = QuadSpec::default();
        let ball = EllipsoidBody::ball(3, 1.3).unwrap();
        let hat = DensityFn::hat(1.0);
        for j in 1..=2 {
            let t = b4_area_integral(&ball, &hat, j, &q).unwrap();
            assert!(t.norm() < 1e-12, "{t:?}");
        }
        let k = sample_body();
        let one = b4_area_integral(&k, &hat, 1, &q).unwrap();
        let three = b4_area_integral(&k, &hat.scaled(3.0), 1, &q).unwrap();
        assert!((three.value() - one.value() * 3.0).norm() < 1e-12);
        assert!(one.norm() > 1e-3);
    }
}
