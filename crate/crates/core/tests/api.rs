use std::sync::Arc;

use approx::assert_relative_eq;
use minkvec::measure_engine::{default_steiner_nodes, MAX_DIM};
use minkvec::transforms::alpha_from_zeta;
use minkvec::{
    b1_hessian_integral, b2_maj_integral, b2_vb_integral, dual_pushforward, run_suite, sample_rotation, steiner_extract, ConvexFn,
    DensityFn, MeasureError, QuadSpec, ScalarPiece,
};
use nalgebra::{DMatrix, DVector};

fn shifted(x: &[f64]) -> ConvexFn {
    ConvexFn::shifted_vb(DVector::from_column_slice(x))
}

#[test]
fn even_functions_have_zero_vectors() {
    let q = QuadSpec::default();
    let hat = DensityFn::hat(1.0);
    for n in 2..=3 {
        for j in 1..=n {
            let t = b1_hessian_integral(&ConvexFn::quadratic(n), &hat, j, &q).unwrap();
            assert!(t.norm() < 1e-12, "n={n} j={j}: {}", t.norm());
        }
    }
}

#[test]
fn three_representations_agree() {
    let q = QuadSpec::default();
    let hat = DensityFn::hat(1.0);
    let v = shifted(&[0.3, -0.6]);
    for j in 1..=2 {
        let b1 = b1_hessian_integral(&v, &hat, j, &q).unwrap();
        let b2 = b2_maj_integral(&v, &alpha_from_zeta(&hat, j, 2).unwrap(), j, &q).unwrap();
        let b2vb = b2_vb_integral(&v, &hat, j, &q).unwrap();
        for k in 0..2 {
            assert_relative_eq!(b1.value()[k], b2.value()[k], max_relative = 1e-6, epsilon = 1e-12);
            assert_relative_eq!(b1.value()[k], b2vb.value()[k], max_relative = 1e-6, epsilon = 1e-12);
        }
    }
}

#[test]
fn degree_j_homogeneity_and_constant_shifts() {
    let q = QuadSpec::default();
    let hat = DensityFn::hat(1.0);
    let v = shifted(&[0.4, 0.1, -0.2]);
    let base = b1_hessian_integral(&v, &hat, 2, &q).unwrap();
    let doubled = b1_hessian_integral(&ConvexFn::Scaled { inner: Arc::new(v.clone()), lambda: 2.0 }, &hat, 2, &q).unwrap();
    assert!((doubled.value() - base.value() * 4.0).norm() < 1e-10 * base.norm());
    let lifted = v.clone().plus_affine(DVector::zeros(3), 7.0);
    let shifted_up = b1_hessian_integral(&lifted, &hat, 2, &q).unwrap();
    assert!((shifted_up.value() - base.value()).norm() < 1e-14);
}

#[test]
fn dual_pushforward_is_odd_under_reflection() {
    let q = QuadSpec::default();
    let hat = DensityFn::hat(1.0);
    let u = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare, ScalarPiece::Cosh]);
    let reflected = u.clone().rotated(DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0])));
    let a = dual_pushforward(&u, &hat, 1, &q).unwrap();
    let b = dual_pushforward(&reflected, &hat, 1, &q).unwrap();
    assert!((a.value()[0] + b.value()[0]).abs() < 1e-8, "{} vs {}", a.value()[0], b.value()[0]);
    assert!((a.value()[1] - b.value()[1]).abs() < 1e-8);
}

#[test]
fn refusals_are_typed() {
    let q = QuadSpec::default();
    let hat = DensityFn::hat(1.0);
    let v = shifted(&[0.1, 0.2]);
    assert_eq!(b1_hessian_integral(&v, &hat, 0, &q).unwrap_err(), MeasureError::Degree { j: 0, n: 2 });
    assert_eq!(b1_hessian_integral(&v, &hat, 3, &q).unwrap_err(), MeasureError::Degree { j: 3, n: 2 });
    let cone = ConvexFn::ConeVs { n: 2, s: 0.5 };
    assert!(matches!(b1_hessian_integral(&cone, &hat, 1, &q), Err(MeasureError::Precondition(_))));
    let wide = shifted(&[0.0; MAX_DIM + 1]);
    assert!(matches!(b1_hessian_integral(&wide, &hat, 1, &q), Err(MeasureError::Spec(_))));
    let zero = QuadSpec { radial_points: 0, ..QuadSpec::default() };
    assert!(matches!(b1_hessian_integral(&v, &hat, 1, &zero), Err(MeasureError::Spec(_))));
    assert!(matches!(steiner_extract(&v, &hat, &[0.5, 1.0], &q), Err(MeasureError::Nodes(_))));
    assert!(matches!(steiner_extract(&v, &hat, &[0.5, 0.5, 1.0], &q), Err(MeasureError::Nodes(_))));
    assert_eq!(default_steiner_nodes(2).len(), 5);
}

#[test]
fn serialized_forms() {
    let q: QuadSpec = serde_json::from_str(r#"{"seed": 3, "mc_samples": 10}"#).unwrap();
    assert_eq!((q.seed, q.mc_samples, q.radial_points), (3, 10, QuadSpec::default().radial_points));
    assert!(serde_json::from_str::<QuadSpec>(r#"{"radial": 3}"#).is_err());

    let t = b1_hessian_integral(&shifted(&[0.5, 0.0]), &DensityFn::hat(1.0), 1, &QuadSpec::default()).unwrap();
    let v: serde_json::Value = serde_json::to_value(&t).unwrap();
    assert_eq!(v["backend"], "B1");
    assert_eq!(v["value"].as_array().unwrap().len(), 2);
    assert!(v["error_estimate"].is_number());
}

#[test]
fn suite_reports() {
    assert!(run_suite("nope", &QuadSpec::default()).is_err());
    let r = run_suite("kernels", &QuadSpec::default()).unwrap();
    assert!(r.pass);
    assert!(r.checks.windows(2).all(|w| w[0].id < w[1].id));
    assert!(r.checks.iter().all(|c| !c.anchor.is_empty() && c.tolerance.is_finite()));
    let json = r.to_json();
    assert!(!json.contains("runtime"));
    assert_eq!(json, run_suite("kernels", &QuadSpec::default()).unwrap().to_json());
    assert_eq!(r.to_csv().lines().count(), r.checks.len() + 1);
}

#[test]
fn rotations_are_seeded() {
    let a = sample_rotation(4, 11);
    let b = sample_rotation(4, 11);
    let c = sample_rotation(4, 12);
    assert_eq!(a.matrix, b.matrix);
    assert_ne!(a.matrix, c.matrix);
    assert!((a.matrix.transpose() * &a.matrix - DMatrix::identity(4, 4)).norm() < 1e-12);
    assert_relative_eq!(a.matrix.determinant(), 1.0, epsilon = 1e-12);
}
