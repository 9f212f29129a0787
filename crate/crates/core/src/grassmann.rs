//! Haar-random rotations and subspaces, and the Kubota averages of
//! top-degree integrals over restrictions and projections.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::functions::{legendre, ConvexFn, FunctionError, Regularity, NEWTON_MAX_ITER, NEWTON_RESIDUAL};
use crate::linalg::determinant;
use crate::measure_engine::{b2_maj_integral, dual_pushforward, star_integral, Backend, MeasureError, MinkVector, QuadSpec};
use crate::quad::{binomial, radial_rule, unit_ball_volume, SphereRule};
use crate::transforms::{class_check_with, r_transform, DensityFn};

/// A rotation drawn from the Haar measure on `SO(n)`, with the seed and
/// sample index it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationSample {
    pub matrix: DMatrix<f64>,
    pub seed: u64,
    pub index: u64,
}

impl RotationSample {
    /// Orthonormal basis of the span of the first `j` columns.
    pub fn subspace(&self, j: usize) -> DMatrix<f64> {
        self.matrix.columns(0, j).into_owned()
    }

    /// The remaining `n − j` columns.
    pub fn complement(&self, j: usize) -> DMatrix<f64> {
        let n = self.matrix.ncols();
        self.matrix.columns(j, n - j).into_owned()
    }
}

/// The `index`-th rotation of the stream keyed by `seed`.
///
/// Each index selects its own ChaCha stream, so samples can be drawn in any
/// order or in parallel. A Gaussian matrix is QR-factorized, the columns of
/// `Q` are signed so that `diag(R) > 0`, and the last column is flipped if
/// the determinant is negative.
pub fn sample_rotation_indexed(n: usize, seed: u64, index: u64) -> RotationSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..n {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(n - 1).neg_mut();
    }
    RotationSample {
        matrix: q,
        seed,
        index,
    }
}

pub fn sample_rotation(n: usize, seed: u64) -> RotationSample {
    sample_rotation_indexed(n, seed, 0)
}

/// `binom(n, j) (κ_n/κ_j) ℛ^{n−j} ζ`, the density of the Kubota representation.
pub fn kubota_density(zeta: &DensityFn, j: usize, n: usize) -> DensityFn {
    let c = binomial(n, j) * unit_ball_volume(n) / unit_ball_volume(j);
    r_transform(zeta, (n - j) as u32).scaled(c).with_label(format!("kubota[{}]", zeta.label()))
}

/// Inner radial order used per subspace; Monte-Carlo error dominates.
const INNER_RADIAL_POINTS: usize = 12;
/// Circle order per subspace in dimension 2 (and twice the polar order above it).
const INNER_ANGULAR_POINTS: usize = 32;

fn inner_sphere(j: usize) -> SphereRule {
    if j == 2 {
        SphereRule::full(2, 1, 2 * INNER_ANGULAR_POINTS)
    } else {
        SphereRule::full(j, INNER_ANGULAR_POINTS / 2, INNER_ANGULAR_POINTS)
    }
}

fn check_inputs(zeta: &DensityFn, j: usize, n: usize, v_dim: usize, q: &QuadSpec) -> Result<(), MeasureError> {
    if v_dim != n {
        return Err(MeasureError::Function(FunctionError::Dimension { expected: n, got: v_dim }));
    }
    q.validate(n, zeta)?;
    if j < 1 || j > n {
        return Err(MeasureError::Degree { j, n });
    }
    if !class_check_with(zeta, j, n, &q.class_check) {
        return Err(MeasureError::Class {
            label: zeta.label().to_string(),
            j,
            n,
        });
    }
    Ok(())
}

/// Mean and standard error of per-sample vectors, reduced in index order.
fn monte_carlo(samples: Vec<DVector<f64>>, backend: Backend) -> MinkVector {
    let m = samples.len() as f64;
    let n = samples[0].len();
    let mut mean = DVector::zeros(n);
    for s in &samples {
        mean += s;
    }
    mean /= m;
    let var: f64 = if samples.len() > 1 {
        samples.iter().map(|s| (s - &mean).norm_squared()).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    MinkVector::new(mean, (var / m).sqrt(), backend)
}

/// `∫_E α(|y|) y det Hess(v|_E)(y) dy`, returned in ambient coordinates.
fn restricted_ma(v: &ConvexFn, basis: &DMatrix<f64>, alpha: &DensityFn, cut: f64, sphere: &SphereRule) -> Result<DVector<f64>, MeasureError> {
    let (n, j) = basis.shape();
    let mut acc = DVector::zeros(j);
    for (r, w) in radial_rule(alpha.support_radius(), cut, INNER_RADIAL_POINTS) {
        let weight = w * alpha.eval(r) * r.powi(j as i32);
        if weight == 0.0 {
            continue;
        }
        for (dir, wd) in sphere.directions.iter().zip(&sphere.weights) {
            let theta = DVector::from_column_slice(dir);
            let x = basis * &theta * r;
            let h = v.hess(&x)?.congruence(basis);
            acc += theta * (weight * wd * determinant(&h));
        }
    }
    debug_assert_eq!(basis.nrows(), n);
    Ok(basis * acc)
}

/// Backend B3: `t*_{j,ζ}(v)` as the Haar average over `E ∈ Gr(j, n)` of
/// `∫_E α(|y|) y dMA_E(v|_E; y)` with `α = binom(n,j)(κ_n/κ_j) ℛ^{n−j} ζ`.
///
/// Subspaces are spanned by the first `j` columns of sampled rotations; the
/// error estimate is the Monte-Carlo standard error. For `j = n` the only
/// subspace is `R^n` and the result is the deterministic B2 value.
pub fn kubota_vector(v: &ConvexFn, zeta: &DensityFn, j: usize, n: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    check_inputs(zeta, j, n, v.dim(), q)?;
    if v.regularity() == Regularity::Nonsmooth {
        return Err(MeasureError::Precondition(format!("{} is not C² away from the origin", v.label())));
    }
    if j == n {
        let t = b2_maj_integral(v, zeta, n, q)?;
        return Ok(MinkVector::new(t.value().clone(), t.error_estimate(), Backend::B3));
    }
    let alpha = kubota_density(zeta, j, n);
    let cut = q.origin_cut_for(zeta);
    let sphere = inner_sphere(j);
    let samples: Vec<DVector<f64>> = (0..q.mc_samples as u64)
        .into_par_iter()
        .map(|i| {
            let rot = sample_rotation_indexed(n, q.seed, i);
            restricted_ma(v, &rot.subspace(j), &alpha, cut, &sphere)
        })
        .collect::<Result<_, _>>()?;
    Ok(monte_carlo(samples, Backend::B3))
}

/// Minimizes `z ↦ u(By + Cz)` by damped Newton; returns the minimizer in `R^n`.
fn fiber_minimizer(u: &ConvexFn, b: &DMatrix<f64>, c: &DMatrix<f64>, y: &DVector<f64>, start: &DVector<f64>) -> Result<DVector<f64>, MeasureError> {
    let base = b * y;
    let mut z = start.clone();
    let point = |z: &DVector<f64>| &base + c * z;
    let mut value = u.value(&point(&z))?;
    for iter in 0..NEWTON_MAX_ITER {
        let x = point(&z);
        let full = u.grad(&x)?;
        let g = c.transpose() * &full;
        let scale = 1.0 + full.norm();
        if g.norm() <= NEWTON_RESIDUAL * 1e-3 * scale {
            return Ok(x);
        }
        let h = u.hess(&x)?.congruence(c).into_matrix();
        let step = h
            .cholesky()
            .map(|ch| ch.solve(&g))
            .ok_or_else(|| MeasureError::NotPositiveDefinite(x.as_slice().to_vec()))?;
        let mut t = 1.0;
        loop {
            let trial = &z - &step * t;
            let tv = u.value(&point(&trial))?;
            if tv <= value + 1e-15 * value.abs().max(1.0) || t < 1e-12 {
                z = trial;
                value = tv;
                break;
            }
            t *= 0.5;
        }
        if iter + 1 == NEWTON_MAX_ITER {
            let x = point(&z);
            let residual = (c.transpose() * u.grad(&x)?).norm();
            if residual <= NEWTON_RESIDUAL * scale {
                return Ok(x);
            }
            return Err(FunctionError::Newton {
                iterations: NEWTON_MAX_ITER,
                residual,
            }
            .into());
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Dual Kubota average: the Haar mean over `E` of
/// `∫ α(|∇_E proj_E u|) ∇_E proj_E u dx_E` with
/// `proj_E u(y) = min_{z ∈ E^⊥} u(y + z)`.
///
/// Only separable `u` are accepted; fiber minima are found by Newton's
/// method, and `∇_E proj_E u(y)` is the projection of `∇u` at the fiber
/// minimizer. Samples use the same rotation stream as [`kubota_vector`].
pub fn kubota_dual(u: &ConvexFn, zeta: &DensityFn, j: usize, n: usize, q: &QuadSpec) -> Result<MinkVector, MeasureError> {
    check_inputs(zeta, j, n, u.dim(), q)?;
    let ConvexFn::Separable(_) = u else {
        return Err(MeasureError::Precondition(format!("dual Kubota needs a separable function, got {}", u.label())));
    };
    if j == n {
        let t = dual_pushforward(u, zeta, n, q)?;
        return Ok(MinkVector::new(t.value().clone(), t.error_estimate(), Backend::B3Dual));
    }
    let alpha = kubota_density(zeta, j, n);
    let (_, x_min) = legendre(u, &DVector::zeros(n))?;
    let ratio = q.origin_cut_for(zeta) / zeta.support_radius();
    let sphere = inner_sphere(j);
    let samples: Vec<DVector<f64>> = (0..q.mc_samples as u64)
        .into_par_iter()
        .map(|i| {
            let rot = sample_rotation_indexed(n, q.seed, i);
            let b = rot.subspace(j);
            let c = rot.complement(j);
            let z0 = c.transpose() * &x_min;
            let grad = |y: &DVector<f64>| -> Result<DVector<f64>, MeasureError> {
                let x = fiber_minimizer(u, &b, &c, y, &z0)?;
                Ok(b.transpose() * u.grad(&x)?)
            };
            let integrand = |_: &DVector<f64>, g: &DVector<f64>| -> Result<DVector<f64>, MeasureError> { Ok(g * alpha.eval(g.norm())) };
            let center = b.transpose() * &x_min;
            let inner = star_integral(&center, alpha.support_radius(), &grad, &integrand, j, INNER_RADIAL_POINTS, &sphere, ratio)?;
            Ok(&b * inner)
        })
        .collect::<Result<_, MeasureError>>()?;
    Ok(monte_carlo(samples, Backend::B3Dual))
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let m = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / m).abs().max(((i + 1) as f64 / m - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for `m` samples
/// (Stephens' small-sample correction).
pub fn ks_p_value(d: f64, m: usize) -> f64 {
    let sm = (m as f64).sqrt();
    let lambda = (sm + 0.12 + 0.11 / sm) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::ScalarPiece;
    use crate::linalg::SymMatrix;
    use crate::measure_engine::b1_hessian_integral;
    use statrs::distribution::{Beta, ContinuousCDF};

    #[test]
    fn rotations_are_special_orthogonal() {
        for n in 1..=5 {
            for i in 0..20 {
                let r = sample_rotation_indexed(n, 7, i).matrix;
                let resid = (r.transpose() * &r - DMatrix::identity(n, n)).amax();
                assert!(resid < 1e-12, "n={n}: {resid}");
                assert!((r.determinant() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(sample_rotation(3, 4), sample_rotation_indexed(3, 4, 0));
        assert_ne!(sample_rotation_indexed(3, 4, 1).matrix, sample_rotation_indexed(3, 4, 2).matrix);
    }

    #[test]
    fn first_column_is_uniform() {
        for n in [2usize, 3, 4] {
            let mut xs: Vec<f64> = (0..10_000).map(|i| sample_rotation_indexed(n, 11, i).matrix[(0, 0)]).collect();
            let a = (n as f64 - 1.0) / 2.0;
            let beta = Beta::new(a, a).unwrap();
            let d = ks_statistic(&mut xs, |t| beta.cdf((t + 1.0) / 2.0));
            let p = ks_p_value(d, xs.len());
            assert!(p > 1e-3, "n={n}: D={d}, p={p}");
        }
    }

    #[test]
    fn ks_detects_a_wrong_marginal() {
        let mut xs: Vec<f64> = (0..10_000).map(|i| sample_rotation_indexed(3, 11, i).matrix[(0, 0)]).collect();
        let d = ks_statistic(&mut xs, |t| 0.5 + t.clamp(-1.0, 1.0).asin() / std::f64::consts::PI);
        assert!(ks_p_value(d, xs.len()) < 1e-6);
    }

    #[test]
    fn kubota_matches_b1_in_the_plane() {
        let hat = DensityFn::hat(1.0);
        let v = ConvexFn::shifted_vb(DVector::from_vec(vec![0.7, 0.0]));
        let q = QuadSpec {
            mc_samples: 400,
            ..QuadSpec::default()
        };
        let b3 = kubota_vector(&v, &hat, 1, 2, &q).unwrap();
        let b1 = b1_hessian_integral(&v, &hat, 1, &q).unwrap();
        assert!(b3.error_estimate() > 0.0);
        assert!((b3.value() - b1.value()).norm() <= 3.0 * b3.error_estimate(), "{b3:?} vs {b1:?}");
    }

    #[test]
    fn kubota_vanishes_on_cones_and_even_functions() {
        let hat = DensityFn::hat(1.0);
        let q = QuadSpec {
            mc_samples: 50,
            ..QuadSpec::default()
        };
        let cone = ConvexFn::SupportCone {
            m: SymMatrix::new(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5])).unwrap(),
        };
        assert!(kubota_vector(&cone, &hat, 2, 3, &q).unwrap().norm() < 1e-10);
        let even = ConvexFn::Separable(vec![ScalarPiece::Cosh; 2]);
        assert!(kubota_dual(&even, &hat, 1, 2, &q).unwrap().norm() < 1e-10);
    }

    #[test]
    fn dual_kubota_matches_primal_on_conjugate() {
        let hat = DensityFn::hat(1.0);
        let q = QuadSpec {
            mc_samples: 64,
            ..QuadSpec::default()
        };
        let u = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare; 2]);
        let dual = kubota_dual(&u, &hat, 1, 2, &q).unwrap();
        let primal = kubota_vector(&u.conjugate().unwrap(), &hat, 1, 2, &q).unwrap();
        assert!((dual.value() - primal.value()).norm() <= 1e-4 * primal.norm(), "{dual:?} vs {primal:?}");
    }

    #[test]
    fn full_dimension_is_deterministic() {
        let hat = DensityFn::hat(1.0);
        let v = ConvexFn::shifted_vb(DVector::from_vec(vec![0.3, 0.2]));
        let q = QuadSpec::default();
        let b3 = kubota_vector(&v, &hat, 2, 2, &q).unwrap();
        let b2 = b2_maj_integral(&v, &hat, 2, &q).unwrap();
        assert_eq!(b3.value(), b2.value());
        assert_eq!(b3.backend(), Backend::B3);
    }
}
