//! Matrix kernels: elementary symmetric functions of eigenvalues, mixed
//! discriminants and the closed-form Hessians of `|x|` and `√(1+|x|²)`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::quad::binomial;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}x{expected}, got {got_rows}x{got_cols}")]
    Dimension {
        expected: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("mixed discriminant of {count} matrices in dimension {dim}")]
    ArgumentCount { count: usize, dim: usize },
    #[error("Hessian of |x| is undefined at the origin")]
    AtOrigin,
}

/// Tolerance for the symmetry check in [`SymMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A real symmetric `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Validates symmetry (relative to the largest entry) and finiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self, LinalgError> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::Dimension {
                expected: m.nrows(),
                got_rows: m.nrows(),
                got_cols: m.ncols(),
            });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(LinalgError::NotSymmetric(asym));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be symmetric up to rounding, averaging it
    /// with its transpose.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self(&self.0 * a)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    /// `Bᵀ A B` for a frame `B` with orthonormal columns.
    pub fn congruence(&self, frame: &DMatrix<f64>) -> Self {
        Self::symmetrized(frame.transpose() * &self.0 * frame)
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        self.0.clone().symmetric_eigenvalues()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().min()
    }
}

/// Elementary symmetric polynomials `e_0..=e_n` of the given values.
pub fn elementary_symmetric_all(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (k, &x) in values.iter().enumerate() {
        for i in (1..=k + 1).rev() {
            e[i] += x * e[i - 1];
        }
    }
    e
}

/// `[A]_j`: the `j`-th elementary symmetric function of the eigenvalues.
///
/// `[A]_0 = 1`, `[A]_n = det A`, and `0` for `j > n`.
pub fn elem_sym(a: &SymMatrix, j: usize) -> f64 {
    let n = a.dim();
    if j == 0 {
        return 1.0;
    }
    if j > n {
        return 0.0;
    }
    let ev = a.eigenvalues();
    elementary_symmetric_all(ev.as_slice())[j]
}

fn det(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        3 => {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        }
        _ => m.clone().lu().determinant(),
    }
}

pub fn determinant(a: &SymMatrix) -> f64 {
    det(&a.0)
}

/// Mixed discriminant `D(A_1, …, A_n)` by polarization:
///
/// `D = (1/n!) Σ_{∅≠S⊆[n]} (-1)^{n-|S|} det(Σ_{i∈S} A_i)`.
pub fn mixed_discriminant(args: &[&SymMatrix]) -> Result<f64, LinalgError> {
    let n = args.first().map_or(0, |a| a.dim());
    if args.len() != n || n == 0 {
        return Err(LinalgError::ArgumentCount {
            count: args.len(),
            dim: n,
        });
    }
    for a in args {
        if a.dim() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got_rows: a.dim(),
                got_cols: a.dim(),
            });
        }
    }
    let mut total = 0.0;
    let mut sum = DMatrix::zeros(n, n);
    for mask in 1u32..(1u32 << n) {
        sum.fill(0.0);
        for (i, a) in args.iter().enumerate() {
            if mask & (1 << i) != 0 {
                sum += &a.0;
            }
        }
        let sign = if (n as u32 - mask.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 };
        total += sign * det(&sum);
    }
    let factorial: f64 = (1..=n).map(|k| k as f64).product();
    Ok(total / factorial)
}

/// `D(A[j], B[n-j])`: `A` repeated `j` times, `B` repeated `n - j` times.
pub fn mixed_discriminant_pair(a: &SymMatrix, j: usize, b: &SymMatrix) -> Result<f64, LinalgError> {
    let n = a.dim();
    if j > n {
        return Err(LinalgError::ArgumentCount { count: j, dim: n });
    }
    let mut args: Vec<&SymMatrix> = Vec::with_capacity(n);
    args.extend(std::iter::repeat_n(a, j));
    args.extend(std::iter::repeat_n(b, n - j));
    mixed_discriminant(&args)
}

/// `[A]_j` recovered as `binom(n, j) · D(A[j], I[n-j])`.
pub fn elem_sym_via_discriminant(a: &SymMatrix, j: usize) -> Result<f64, LinalgError> {
    let n = a.dim();
    if j == 0 {
        return Ok(1.0);
    }
    Ok(binomial(n, j) * mixed_discriminant_pair(a, j, &SymMatrix::identity(n))?)
}

/// Hessian of `|x|`: `(I - x̂ x̂ᵀ) / |x|`.
pub fn hess_norm(x: &DVector<f64>) -> Result<SymMatrix, LinalgError> {
    let r = x.norm();
    if r == 0.0 {
        return Err(LinalgError::AtOrigin);
    }
    let n = x.len();
    let u = x / r;
    let m = (DMatrix::identity(n, n) - &u * u.transpose()) / r;
    Ok(SymMatrix::symmetrized(m))
}

/// Hessian of `v_B(x) = √(1+|x|²)`: `((1+|x|²) I - x xᵀ) / (1+|x|²)^{3/2}`.
pub fn hess_vb(x: &DVector<f64>) -> SymMatrix {
    let n = x.len();
    let q = 1.0 + x.norm_squared();
    let m = (DMatrix::identity(n, n) * q - x * x.transpose()) / (q * q.sqrt());
    SymMatrix::symmetrized(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym_from(vals: &[f64], n: usize) -> SymMatrix {
        let mut m = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = vals[k];
                m[(j, i)] = vals[k];
                k += 1;
            }
        }
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn elem_sym_examples() {
        let a = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        assert!((elem_sym(&a, 2) - 11.0).abs() < 1e-12);
        assert_eq!(elem_sym(&a, 0), 1.0);
        assert!((elem_sym(&a, 3) - 6.0).abs() < 1e-12);
        for n in 1..=5 {
            let id = SymMatrix::identity(n);
            for j in 0..=n {
                assert!((elem_sym(&id, j) - binomial(n, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(LinalgError::NotSymmetric(_))));
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert_eq!(SymMatrix::new(m), Err(LinalgError::NonFinite));
    }

    #[test]
    fn discriminant_examples() {
        let a = SymMatrix::from_diagonal(&[2.0, 3.0]);
        assert!((mixed_discriminant(&[&a, &a]).unwrap() - 6.0).abs() < 1e-12);
        let a = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let d = mixed_discriminant_pair(&a, 2, &SymMatrix::identity(3)).unwrap();
        assert!((d - 11.0 / 3.0).abs() < 1e-12);
        let a = sym_from(&[1.0, 0.3, 2.0], 2);
        let b = sym_from(&[0.5, -0.2, 1.5], 2);
        let lhs = mixed_discriminant(&[&a.scaled(2.0), &b]).unwrap();
        let rhs = 2.0 * mixed_discriminant(&[&a, &b]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn discriminant_argument_errors() {
        let a = SymMatrix::identity(2);
        let b = SymMatrix::identity(3);
        assert!(mixed_discriminant(&[&a]).is_err());
        assert!(matches!(mixed_discriminant(&[&a, &b]), Err(LinalgError::Dimension { .. })));
    }

    #[test]
    fn hess_norm_examples() {
        let h = hess_norm(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert!((h.matrix() - expect).amax() < 1e-15);
        let x = DVector::from_vec(vec![1.2, -1.0, 1.1]);
        let x = &x * (2.0 / x.norm());
        let h = hess_norm(&x).unwrap();
        assert!(elem_sym(&h, 3).abs() < 1e-14);
        assert!((elem_sym(&h, 2) - 0.25).abs() < 1e-13);
        assert!(hess_norm(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn hess_vb_examples() {
        let h = hess_vb(&DVector::zeros(3));
        assert!((h.matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let h = hess_vb(&DVector::from_vec(vec![1.0]));
        assert!((h.matrix()[(0, 0)] - 2f64.powf(-1.5)).abs() < 1e-15);
    }

    #[test]
    fn hess_vb_matches_finite_differences() {
        let vb = |x: &DVector<f64>| (1.0 + x.norm_squared()).sqrt();
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
        };
        for _ in 0..20 {
            let x = DVector::from_fn(3, |_, _| next());
            let h = hess_vb(&x);
            let eps = 1e-4;
            for i in 0..3 {
                for j in 0..3 {
                    let mut pp = x.clone();
                    let mut pm = x.clone();
                    let mut mp = x.clone();
                    let mut mm = x.clone();
                    pp[i] += eps;
                    pp[j] += eps;
                    pm[i] += eps;
                    pm[j] -= eps;
                    mp[i] -= eps;
                    mp[j] += eps;
                    mm[i] -= eps;
                    mm[j] -= eps;
                    let fd = (vb(&pp) - vb(&pm) - vb(&mp) + vb(&mm)) / (4.0 * eps * eps);
                    assert!((fd - h.matrix()[(i, j)]).abs() < 1e-6, "{fd} vs {}", h.matrix()[(i, j)]);
                }
            }
            assert!(h.min_eigenvalue() > 0.0);
        }
    }

    fn arb_sym(n: usize) -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-2.0f64..2.0, n * (n + 1) / 2).prop_map(move |v| sym_from(&v, n))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn elem_sym_agrees_with_discriminant(n in 2usize..=4, seed in prop::collection::vec(-2.0f64..2.0, 10)) {
            let a = sym_from(&seed, n);
            for j in 0..=n {
                let direct = elem_sym(&a, j);
                let via = elem_sym_via_discriminant(&a, j).unwrap();
                let scale = direct.abs().max(1.0);
                prop_assert!((direct - via).abs() <= 1e-9 * scale, "j={} {} vs {}", j, direct, via);
            }
        }

        #[test]
        fn discriminant_is_multilinear(a in arb_sym(3), a2 in arb_sym(3), b in arb_sym(3), c in arb_sym(3), s in -2.0f64..2.0, t in -2.0f64..2.0) {
            let comb = a.scaled(s).add(&a2.scaled(t));
            let lhs = mixed_discriminant(&[&comb, &b, &c]).unwrap();
            let rhs = s * mixed_discriminant(&[&a, &b, &c]).unwrap() + t * mixed_discriminant(&[&a2, &b, &c]).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn discriminant_is_symmetric(a in arb_sym(3), b in arb_sym(3), c in arb_sym(3), perm in 0usize..6) {
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let m = [&a, &b, &c];
            let base = mixed_discriminant(&m).unwrap();
            let o = orders[perm];
            let p = mixed_discriminant(&[m[o[0]], m[o[1]], m[o[2]]]).unwrap();
            prop_assert!((base - p).abs() < 1e-10);
        }

        #[test]
        fn hess_norm_annihilates_x(v in prop::collection::vec(-3.0f64..3.0, 4)) {
            let x = DVector::from_vec(v);
            prop_assume!(x.norm() > 1e-3);
            let h = hess_norm(&x).unwrap();
            prop_assert!((h.matrix() * &x).amax() < 1e-12);
        }
    }
}
