//! Named, seeded verification suites. Each suite evaluates a list of
//! identities with explicit tolerances and reports every comparison.
//!
//! Reports are reproducible: given the suite name and the [`QuadSpec`]
//! (including its seed), the JSON form is byte-identical across runs.
//! Wall-clock runtimes are kept out of the JSON for that reason and appear
//! only in the human-readable table.

use std::error::Error;
use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::bodies::{b4_area_integral, gnomonic, gnomonic_inverse, EllipsoidBody};
use crate::functions::{make_hinge_pair, ConvexFn, ScalarPiece};
use crate::grassmann::{kubota_dual, kubota_vector, ks_p_value, ks_statistic, sample_rotation_indexed};
use crate::linalg::{determinant, elem_sym, hess_norm, hess_vb, mixed_discriminant, mixed_discriminant_pair, SymMatrix};
use crate::measure_engine::{
    b1_hessian_integral, b2_maj_integral, b2_vb_integral, cauchy_constant, default_steiner_nodes, dual_pushforward,
    phi_cone_shell, steiner_extract, ws_closed_form, ws_semianalytic, MeasureError, MinkVector, QuadSpec,
};
use crate::quad::{binomial, integrate, unit_ball_volume, SphereRule, Tolerance};
use crate::transforms::{
    abel_inverse, abel_transform, alpha_from_zeta, class_check, r_inverse, r_transform, t_inverse, t_transform,
    t_transform_iterated, zeta_from_alpha, DensityFn,
};

/// Names accepted by [`run_suite`].
pub const SUITES: [&str; 10] = [
    "transforms", "kernels", "backends", "duality", "kubota", "bodies", "steiner", "oracles", "axioms", "abel",
];

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error("unknown suite `{0}` (expected one of: {list})", list = SUITES.join(", "))]
    UnknownSuite(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// How `computed` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|computed − expected| ≤ tolerance`
    Within,
    /// `computed ≥ expected − tolerance`
    AtLeast,
}

/// One comparison in a report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    /// The identity being tested, or `plumbing`.
    pub anchor: String,
    /// What `computed` measures.
    pub quantity: String,
    pub computed: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only plain data")
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Aligned table with one row per check, runtimes included.
    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(2).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>4}  {:>14}  {:>14}  {:>9}  {:>9}",
            "check", "ok", "computed", "expected", "tol", "ms"
        );
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<width$}  {:>4}  {:>14.7e}  {:>14.7e}  {:>9.2e}  {:>9.1}{}",
                c.id,
                if c.pass { "pass" } else { "FAIL" },
                c.computed,
                c.expected,
                c.tolerance,
                c.runtime.as_secs_f64() * 1e3,
                c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "suite {}: {} ({} checks, {} failed, {:.2} s)",
            self.suite,
            if self.pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed,
            self.runtime.as_secs_f64()
        );
        out
    }

    /// CSV with a header row and one row per check.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("suite,id,anchor,quantity,computed,expected,tolerance,relation,pass\n");
        let quote = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{},{},{},{},{:e},{:e},{:e},{},{}",
                self.suite,
                c.id,
                quote(&c.anchor),
                quote(&c.quantity),
                c.computed,
                c.expected,
                c.tolerance,
                match c.relation {
                    Relation::Within => "within",
                    Relation::AtLeast => "at_least",
                },
                c.pass
            );
        }
        out
    }
}

type Failure = Box<dyn Error + Send + Sync>;

/// A measured value with its reference and tolerance.
struct Cmp {
    computed: f64,
    expected: f64,
    tolerance: f64,
}

fn cmp(computed: f64, expected: f64, tolerance: f64) -> Result<Cmp, Failure> {
    Ok(Cmp {
        computed,
        expected,
        tolerance,
    })
}

/// `‖a − b‖` against `max(3 (err_a + err_b), rel ‖b‖ + 1e-6)`.
fn agree(a: &MinkVector, b: &MinkVector, rel: f64) -> Result<Cmp, Failure> {
    let tol = (3.0 * (a.error_estimate() + b.error_estimate())).max(rel * b.norm() + 1e-6);
    cmp((a.value() - b.value()).norm(), 0.0, tol)
}

/// `‖a − b‖` against `rel ‖b‖`.
fn relative(a: &DVector<f64>, b: &DVector<f64>, rel: f64) -> Result<Cmp, Failure> {
    cmp((a - b).norm(), 0.0, rel * b.norm())
}

struct Suite {
    name: String,
    checks: Vec<Check>,
}

impl Suite {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            checks: Vec::new(),
        }
    }

    fn record(&mut self, id: &str, anchor: &str, quantity: &str, relation: Relation, f: impl FnOnce() -> Result<Cmp, Failure>) {
        let start = Instant::now();
        let outcome = f();
        let runtime = start.elapsed();
        let (computed, expected, tolerance, note) = match outcome {
            Ok(c) => (c.computed, c.expected, c.tolerance, None),
            Err(e) => (f64::NAN, f64::NAN, f64::NAN, Some(e.to_string())),
        };
        let pass = note.is_none()
            && computed.is_finite()
            && match relation {
                Relation::Within => (computed - expected).abs() <= tolerance,
                Relation::AtLeast => computed >= expected - tolerance,
            };
        self.checks.push(Check {
            id: format!("{}.{id}", self.name),
            anchor: anchor.to_string(),
            quantity: quantity.to_string(),
            computed,
            expected,
            tolerance,
            relation,
            pass,
            note,
            runtime,
        });
    }

    fn within(&mut self, id: &str, anchor: &str, quantity: &str, f: impl FnOnce() -> Result<Cmp, Failure>) {
        self.record(id, anchor, quantity, Relation::Within, f);
    }

    fn finish(mut self, seed: u64, runtime: Duration) -> SuiteReport {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
        SuiteReport {
            pass: self.checks.iter().all(|c| c.pass),
            suite: self.name,
            seed,
            checks: self.checks,
            runtime,
        }
    }
}

/// Runs the named suite under `q`.
pub fn run_suite(name: &str, q: &QuadSpec) -> Result<SuiteReport, VerificationError> {
    let start = Instant::now();
    let mut s = Suite::new(name);
    match name {
        "transforms" => transforms_suite(&mut s),
        "kernels" => kernels_suite(&mut s, q),
        "backends" => backends_suite(&mut s, q),
        "duality" => duality_suite(&mut s, q),
        "kubota" => kubota_suite(&mut s, q),
        "bodies" => bodies_suite(&mut s, q),
        "steiner" => steiner_suite(&mut s, q),
        "oracles" => oracles_suite(&mut s, q),
        "axioms" => axioms_suite(&mut s, q),
        "abel" => abel_suite(&mut s, q),
        other => return Err(VerificationError::UnknownSuite(other.to_string())),
    }
    Ok(s.finish(q.seed, start.elapsed()))
}

fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / m as f64).collect()
}

fn max_dev(a: &DensityFn, b: &DensityFn, g: &[f64]) -> f64 {
    g.iter().map(|&s| (a.eval(s) - b.eval(s)).abs()).fold(0.0, f64::max)
}

fn vec_of(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::symmetrized(&a + a.transpose())
}

fn bool_cmp(ok: bool) -> Result<Cmp, Failure> {
    cmp(if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
}

fn transforms_suite(s: &mut Suite) {
    const ROUND: &str = "inverse transform pair";
    let set = [DensityFn::hat(1.0), DensityFn::bump(0.1, 0.9), DensityFn::gauss_trunc(3.0)];
    for z in &set {
        let g = grid(0.01, z.support_radius(), 50);
        for l in 0..=3u32 {
            s.within(&format!("r_round_trip.{}.l{l}", z.label()), ROUND, "max |ℛ^{-l}ℛ^l ζ − ζ| on 50 points", || {
                cmp(max_dev(&r_inverse(&r_transform(z, l), l), z, &g), 0.0, 1e-7)
            });
            s.within(&format!("t_round_trip.{}.l{l}", z.label()), ROUND, "max |𝒯^{-l}𝒯^l ζ − ζ| on 50 points", || {
                cmp(max_dev(&t_inverse(&t_transform(z, l), l), z, &g), 0.0, 1e-7)
            });
        }
    }
    for z in [DensityFn::gauss_trunc(8.0), DensityFn::bump(0.1, 0.9)] {
        let g = grid(0.01, z.support_radius().min(3.0), 50);
        s.within(&format!("abel_round_trip.{}", z.label()), ROUND, "max |A^{-1}Aζ − ζ| on 50 points", || {
            cmp(max_dev(&abel_inverse(&abel_transform(&z, 1)), &z, &g), 0.0, 1e-4)
        });
    }
    let hat = DensityFn::hat(1.0);
    let hat_grid = grid(0.01, 1.0, 50);
    for l in 2..=3u32 {
        s.within(&format!("t_closed_vs_iterated.l{l}"), "closed form of 𝒯^l", "max |𝒯^l ζ − 𝒯(…𝒯ζ)|", || {
            cmp(max_dev(&t_transform(&hat, l), &t_transform_iterated(&hat, l), &hat_grid), 0.0, 1e-8)
        });
    }
    s.within("r1_hat_at_half", "definition of ℛ", "ℛ¹hat(0.5)", || cmp(r_transform(&hat, 1).eval(0.5), 0.375, 1e-12));
    s.within("r2_hat_at_zero", "definition of ℛ", "ℛ²hat(0)", || cmp(r_transform(&hat, 2).eval(0.0), 1.0 / 3.0, 1e-12));
    s.within("t1_hat_at_zero", "definition of 𝒯", "𝒯hat(0)", || {
        let tail = integrate(|t| t * (1.0 - t) / (1.0 + t * t).sqrt(), 0.0, 1.0, Tolerance::default())?.value;
        cmp(t_transform(&hat, 1).eval(0.0), 1.0 + tail, 1e-12)
    });
    let gauss = DensityFn::gauss_trunc(8.0);
    s.within("abel1_gauss_at_zero", "Gaussian integral", "Aζ(0), ζ = e^{-t²}", || {
        cmp(abel_transform(&gauss, 1).eval(0.0), PI.sqrt(), 1e-9)
    });
    s.within("abel2_gauss_at_one", "Gaussian integral", "A²ζ(1), ζ = e^{-t²}", || {
        cmp(abel_transform(&gauss, 2).eval(1.0), PI / E, 1e-9)
    });
    s.within("abel_inverse_gauss", "inverse Abel transform", "A^{-1}(√π e^{-t²})(0.5)", || {
        let xi = DensityFn::new("sqrt_pi_gauss", 8.0, 0.0, |t| if t < 8.0 { PI.sqrt() * (-t * t).exp() } else { 0.0 })?;
        cmp(abel_inverse(&xi).eval(0.5), (-0.25f64).exp(), 1e-6)
    });
    s.within("alpha_from_hat", "α = binom(n,j) ℛ^{n−j} ζ", "α(0.5), n = 2, j = 1", || {
        cmp(alpha_from_zeta(&hat, 1, 2)?.eval(0.5), 0.75, 1e-12)
    });
    s.within("zeta_from_hat", "ζ_j = ℛ^{−(n−j)} α", "max |ζ_1(s) − ln(1/s)|, α = hat, n = 2", || {
        let z = zeta_from_alpha(&hat, 1, 2)?;
        let dev = [0.05, 0.3, 0.8].iter().map(|&t| (z.eval(t) + f64::ln(t)).abs()).fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-10)
    });
    s.within("alpha_zeta_round_trip", ROUND, "max |ℛ^{-2}ℛ² ζ − ζ|, n = 3, j = 1", || {
        let rt = zeta_from_alpha(&alpha_from_zeta(&hat, 1, 3)?, 1, 3)?;
        cmp(max_dev(&rt, &hat.scaled(3.0), &hat_grid), 0.0, 1e-7)
    });
    for n in 2..=3usize {
        for j in 1..=n {
            let e = (n - j + 1) as f64;
            s.within(&format!("class.admissible.n{n}.j{j}"), "class T_j^n", "s^{-(n−j+1/2)} accepted", || {
                let z = DensityFn::new("admissible", 1.0, e - 0.5, move |t| if t <= 1.0 { t.powf(-(e - 0.5)) } else { 0.0 })?;
                bool_cmp(class_check(&z, j, n))
            });
            s.within(&format!("class.borderline.n{n}.j{j}"), "class T_j^n", "s^{-(n−j+1)} rejected", || {
                let z = DensityFn::new("borderline", 1.0, e, move |t| if t <= 1.0 { t.powf(-e) } else { 0.0 })?;
                bool_cmp(!class_check(&z, j, n))
            });
        }
    }
    s.within("class.r_lowers_dimension", "ℛ^l: T_j^n → T_j^{n−l}", "ℛ¹ of s^{-3/2}(1−s) in T_1^1", || {
        bool_cmp(class_check(&r_transform(&DensityFn::power(1.5), 1), 1, 1))
    });
    s.within("class.t_preserves", "𝒯^l: T_j^n → T_j^n", "𝒯² of s^{-3/2}(1−s) in T_1^2", || {
        bool_cmp(class_check(&t_transform(&DensityFn::power(1.5), 2), 1, 2))
    });
    s.within("linearity", "linearity of transforms", "max deviation over ℛ², ℛ^{-2}, 𝒯², 𝒯^{-1}, A²", || {
        let (a, b) = (0.7, -1.3);
        let z2 = DensityFn::bump(0.1, 0.9);
        let comb = DensityFn::linear_combination(a, &hat, b, &z2);
        let g = grid(0.02, 1.0, 25);
        let ops: [&dyn Fn(&DensityFn) -> DensityFn; 5] = [
            &|z| r_transform(z, 2),
            &|z| r_inverse(z, 2),
            &|z| t_transform(z, 2),
            &|z| t_inverse(z, 1),
            &|z| abel_transform(z, 2),
        ];
        let dev = ops
            .iter()
            .map(|op| max_dev(&op(&comb), &DensityFn::linear_combination(a, &op(&hat), b, &op(&z2)), &g))
            .fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-10)
    });
}

fn kernels_suite(s: &mut Suite, q: &QuadSpec) {
    let d123 = SymMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
    s.within("elem_sym.diag123.j2", "elementary symmetric function", "[diag(1,2,3)]_2", || cmp(elem_sym(&d123, 2), 11.0, 1e-12));
    s.within("elem_sym.j0", "elementary symmetric function", "[A]_0", || cmp(elem_sym(&d123, 0), 1.0, 0.0));
    s.within("elem_sym.identity", "elementary symmetric function", "max |[I_n]_j − binom(n,j)|", || {
        let dev = (1..=5)
            .flat_map(|n| (0..=n).map(move |j| (elem_sym(&SymMatrix::identity(n), j) - binomial(n, j)).abs()))
            .fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-12)
    });
    s.within("mixed.diagonal", "D(A,…,A) = det A", "D(diag(2,3), diag(2,3))", || {
        let a = SymMatrix::from_diagonal(&[2.0, 3.0]);
        cmp(mixed_discriminant(&[&a, &a])?, 6.0, 1e-12)
    });
    s.within("mixed.elem_sym", "[A]_j = binom(n,j) D(A[j], I[n−j])", "D(diag(1,2,3)[2], I[1])", || {
        cmp(mixed_discriminant_pair(&d123, 2, &SymMatrix::identity(3))?, 11.0 / 3.0, 1e-12)
    });
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let (a, b) = (random_sym(&mut rng, 2), random_sym(&mut rng, 2));
    s.within("mixed.multilinear", "multilinearity of D", "D(2A, B) − 2D(A, B)", || {
        cmp(mixed_discriminant(&[&a.scaled(2.0), &b])? - 2.0 * mixed_discriminant(&[&a, &b])?, 0.0, 1e-12)
    });
    let mats: Vec<SymMatrix> = (0..3).map(|_| random_sym(&mut rng, 3)).collect();
    let perms: Vec<[usize; 3]> = (0..100)
        .map(|_| {
            let mut p = [0, 1, 2];
            for i in (1..3).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        })
        .collect();
    s.within("mixed.permutation", "symmetry of D", "max deviation over 100 permutations", || {
        let base = mixed_discriminant(&[&mats[0], &mats[1], &mats[2]])?;
        let mut dev: f64 = 0.0;
        for p in &perms {
            dev = dev.max((mixed_discriminant(&[&mats[p[0]], &mats[p[1]], &mats[p[2]]])? - base).abs());
        }
        cmp(dev, 0.0, 1e-10)
    });
    let (a1, a2, c1, c2) = (random_sym(&mut rng, 3), random_sym(&mut rng, 3), 0.7, -1.9);
    s.within("mixed.linear_first_slot", "multilinearity of D", "D(aA + bA′, B, C) − aD(A,B,C) − bD(A′,B,C)", || {
        let lhs = mixed_discriminant(&[&a1.scaled(c1).add(&a2.scaled(c2)), &mats[1], &mats[2]])?;
        let rhs = c1 * mixed_discriminant(&[&a1, &mats[1], &mats[2]])? + c2 * mixed_discriminant(&[&a2, &mats[1], &mats[2]])?;
        cmp(lhs - rhs, 0.0, 1e-10)
    });
    let randoms: Vec<SymMatrix> = (2..=4).flat_map(|n| (0..34).map(move |_| n)).map(|n| random_sym(&mut rng, n)).collect();
    s.within("mixed.elem_sym_random", "[A]_j = binom(n,j) D(A[j], I[n−j])", "max relative error, 102 random matrices", || {
        let mut dev: f64 = 0.0;
        for a in &randoms {
            let n = a.dim();
            for j in 0..=n {
                let e = elem_sym(a, j);
                let d = binomial(n, j) * mixed_discriminant_pair(a, j, &SymMatrix::identity(n))?;
                dev = dev.max((e - d).abs() / e.abs().max(1.0));
            }
        }
        cmp(dev, 0.0, 1e-9)
    });
    s.within("hess_norm.plane", "Hess |x| = (I − θθᵀ)/|x|", "max entry deviation at x = (1,0)", || {
        let h = hess_norm(&vec_of(&[1.0, 0.0]))?;
        cmp((h.matrix() - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])).amax(), 0.0, 1e-15)
    });
    s.within("hess_norm.top_degree", "rank deficiency of Hess |x|", "max |[Hess |x|]_n| at 20 points", || {
        let pts: Vec<DVector<f64>> = (0..20).map(|i| random_vector(&mut ChaCha8Rng::seed_from_u64(q.seed + i), 3, 2.0)).collect();
        let dev = pts.iter().map(|x| hess_norm(x).map(|h| elem_sym(&h, 3).abs())).collect::<Result<Vec<_>, _>>()?;
        cmp(dev.into_iter().fold(0.0, f64::max), 0.0, 1e-12)
    });
    s.within("hess_norm.j2", "eigenvalues of Hess |x|", "[Hess |x|]_2, n = 3, |x| = 2", || {
        cmp(elem_sym(&hess_norm(&vec_of(&[0.0, 1.2, 1.6]))?, 2), 0.25, 1e-12)
    });
    s.within("hess_norm.kernel", "1-homogeneity of |x|", "max |Hess|x| · x| at 20 points", || {
        let mut dev: f64 = 0.0;
        for i in 0..20 {
            let x = random_vector(&mut ChaCha8Rng::seed_from_u64(q.seed ^ (1000 + i)), 4, 3.0);
            dev = dev.max((hess_norm(&x)?.matrix() * &x).amax());
        }
        cmp(dev, 0.0, 1e-12)
    });
    s.within("hess_vb.origin", "Hess √(1+|x|²)", "max |Hess v_B(0) − I|", || {
        cmp((hess_vb(&DVector::zeros(3)).matrix() - DMatrix::identity(3, 3)).amax(), 0.0, 0.0)
    });
    s.within("hess_vb.line", "Hess √(1+|x|²)", "v_B''(1), n = 1", || cmp(hess_vb(&vec_of(&[1.0])).matrix()[(0, 0)], 2f64.powf(-1.5), 1e-15));
    s.within("hess_vb.finite_differences", "Hess √(1+|x|²)", "max deviation from central differences, 20 points", || {
        let h = 1e-4;
        let vb = |x: &DVector<f64>| (1.0 + x.norm_squared()).sqrt();
        let mut dev: f64 = 0.0;
        for i in 0..20 {
            let x = random_vector(&mut ChaCha8Rng::seed_from_u64(q.seed ^ (2000 + i)), 3, 2.0);
            let exact = hess_vb(&x);
            for a in 0..3 {
                for b in 0..3 {
                    let mut ea = DVector::zeros(3);
                    ea[a] = h;
                    let mut eb = DVector::zeros(3);
                    eb[b] = h;
                    let fd = (vb(&(&x + &ea + &eb)) - vb(&(&x + &ea - &eb)) - vb(&(&x - &ea + &eb)) + vb(&(&x - &ea - &eb))) / (4.0 * h * h);
                    dev = dev.max((fd - exact.matrix()[(a, b)]).abs());
                }
            }
        }
        cmp(dev, 0.0, 1e-6)
    });
    s.within("determinant", "[A]_n = det A", "max |[A]_n − det A| on random matrices", || {
        let dev = randoms.iter().map(|a| (elem_sym(a, a.dim()) - determinant(a)).abs()).fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-12)
    });
}

/// `shifted_vb` test inputs for the cross-backend checks.
fn shifted(n: usize) -> ConvexFn {
    match n {
        2 => ConvexFn::shifted_vb(vec_of(&[0.7, 0.0])),
        _ => ConvexFn::shifted_vb(vec_of(&[0.5, -0.3, 0.2])),
    }
}

fn lifted_ellipsoid() -> EllipsoidBody {
    EllipsoidBody::new(DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.3, 0.2, 1.0, -0.25, 0.3, -0.25, 1.2])).expect("positive definite")
}

fn backends_suite(s: &mut Suite, q: &QuadSpec) {
    const THM_B: &str = "Hessian and mixed Monge–Ampère representations agree";
    const VB: &str = "v_B-mixed representation agrees with the Hessian one";
    let hat = DensityFn::hat(1.0);
    let sv = shifted(2);
    let mut inputs: Vec<(String, ConvexFn)> = vec![("shifted_vb".into(), sv.clone()), ("shifted_vb".into(), shifted(3))];
    inputs.push((
        "conj_separable".into(),
        ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare.conjugate(), ScalarPiece::Cosh.conjugate()]),
    ));
    if let Ok(pair) = make_hinge_pair(&sv, &vec_of(&[1.0, 0.5]), 0.4) {
        inputs.push(("hinge_sum".into(), pair.vmax));
    }
    for (name, v) in &inputs {
        let n = v.dim();
        for j in 1..=n {
            let b1 = b1_hessian_integral(v, &hat, j, q);
            let tag = format!("{name}.n{n}.j{j}");
            s.within(&format!("b1_vs_b2.{tag}"), THM_B, "‖B1 − B2‖", || {
                let b1 = b1.clone()?;
                let b2 = b2_maj_integral(v, &alpha_from_zeta(&hat, j, n)?, j, q)?;
                agree(&b2, &b1, 1e-3)
            });
            s.within(&format!("b1_vs_b2vb.{tag}"), VB, "‖B1 − B2vb‖", || agree(&b2_vb_integral(v, &hat, j, q)?, &b1.clone()?, 1e-3));
        }
    }
    for n in 2..=3 {
        let v = shifted(n);
        for j in 1..=n {
            s.within(&format!("b1_vs_b3.shifted_vb.n{n}.j{j}"), "Kubota formula", "‖B1 − B3‖ against 3 standard errors", || {
                let b1 = b1_hessian_integral(&v, &hat, j, q)?;
                let b3 = kubota_vector(&v, &hat, j, n, q)?;
                let tol = 3.0 * (b3.error_estimate() + b1.error_estimate());
                let tol = if j == n { tol.max(1e-3 * b1.norm() + 1e-6) } else { tol };
                cmp((b3.value() - b1.value()).norm(), 0.0, tol)
            });
        }
    }
    let body = lifted_ellipsoid();
    let lift = ConvexFn::BodyLift(body.clone());
    for j in 1..=2 {
        s.within(&format!("b1_vs_b4.ellipsoid.n2.j{j}"), "area-measure representation", "‖B1 − B4‖ / ‖B1‖", || {
            let b4 = b4_area_integral(&body, &hat, j, q)?;
            let b1 = b1_hessian_integral(&lift, &hat, j, q)?;
            relative(b4.value(), b1.value(), 1e-3)
        });
        s.within(&format!("b2vb_vs_b4.ellipsoid.n2.j{j}"), "area-measure representation", "‖B2vb − B4‖", || {
            agree(&b4_area_integral(&body, &hat, j, q)?, &b2_vb_integral(&lift, &hat, j, q)?, 1e-3)
        });
    }
    s.within("b2.body_lift_finite", "plumbing", "B2 error estimate on a lifted ellipsoid", || {
        let t = b2_maj_integral(&lift, &alpha_from_zeta(&hat, 1, 2)?, 1, q)?;
        if !t.is_finite() {
            return Err("non-finite output".into());
        }
        cmp(t.error_estimate(), 0.0, 1e-3 * t.norm().max(1e-12))
    });
}

fn duality_suite(s: &mut Suite, q: &QuadSpec) {
    let hat = DensityFn::hat(1.0);
    let u = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare; 2]);
    for j in 1..=2 {
        s.within(&format!("dual_vs_b1_conjugate.j{j}"), "t_{j,ζ}(u) = t*_{j,ζ}(u*)", "‖dual(u) − B1(u*)‖ / ‖B1(u*)‖", || {
            let d = dual_pushforward(&u, &hat, j, q)?;
            let b = b1_hessian_integral(&u.conjugate()?, &hat, j, q)?;
            relative(d.value(), b.value(), 1e-3)
        });
        s.within(&format!("dual_even.j{j}"), "odd weight on an even function", "‖dual(Σ cosh)‖", || {
            cmp(dual_pushforward(&ConvexFn::Separable(vec![ScalarPiece::Cosh; 2]), &hat, j, q)?.norm(), 0.0, 1e-10)
        });
    }
    s.within("dual_vs_b1.n3.j2", "t_{j,ζ}(u) = t*_{j,ζ}(u*)", "‖dual(u) − B1(u*)‖ / ‖B1(u*)‖", || {
        let u3 = ConvexFn::Separable(vec![ScalarPiece::ExpPlusSquare, ScalarPiece::Cosh, ScalarPiece::Quadratic]);
        let d = dual_pushforward(&u3, &hat, 2, q)?;
        let b = b1_hessian_integral(&u3.conjugate()?, &hat, 2, q)?;
        relative(d.value(), b.value(), 1e-3)
    });
    s.within("kubota_dual_vs_primal.n2.j1", "dual Kubota formula", "‖B3dual(u) − B3(u*)‖ against 3 standard errors", || {
        let d = kubota_dual(&u, &hat, 1, 2, q)?;
        let p = kubota_vector(&u.conjugate()?, &hat, 1, 2, q)?;
        cmp((d.value() - p.value()).norm(), 0.0, 3.0 * (d.error_estimate() + p.error_estimate()))
    });
    s.within("kubota_dual_full_dimension", "dual Kubota formula", "‖B3dual − dual‖ at j = n", || {
        let d = kubota_dual(&u, &hat, 2, 2, q)?;
        cmp((d.value() - dual_pushforward(&u, &hat, 2, q)?.value()).norm(), 0.0, 0.0)
    });
    s.within("kubota_dual_even", "odd weight on an even function", "‖B3dual(Σ cosh)‖", || {
        cmp(kubota_dual(&ConvexFn::Separable(vec![ScalarPiece::Cosh; 2]), &hat, 1, 2, q)?.norm(), 0.0, 1e-10)
    });
    s.within("dual_refuses_indicator_below_top_degree", "plumbing", "precondition error for j < n", || {
        let u = ConvexFn::HalfConeWs { n: 2, s: 0.5 }.conjugate()?;
        bool_cmp(matches!(dual_pushforward(&u, &hat, 1, q), Err(MeasureError::Precondition(_))))
    });
}

fn kubota_suite(s: &mut Suite, q: &QuadSpec) {
    let hat = DensityFn::hat(1.0);
    s.within("rotation.orthogonality", "Haar rotations", "max ‖RᵀR − I‖, n ≤ 5, 100 samples each", || {
        let dev = (1..=5)
            .flat_map(|n| (0..100).map(move |i| (n, i)))
            .map(|(n, i)| {
                let r = sample_rotation_indexed(n, q.seed, i).matrix;
                (r.transpose() * &r - DMatrix::identity(n, n)).amax()
            })
            .fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-12)
    });
    s.within("rotation.determinant", "Haar rotations", "max |det R − 1|", || {
        let dev = (1..=5)
            .flat_map(|n| (0..100).map(move |i| (n, i)))
            .map(|(n, i)| (sample_rotation_indexed(n, q.seed, i).matrix.determinant() - 1.0).abs())
            .fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-12)
    });
    for n in [2usize, 3, 4] {
        s.record(&format!("rotation.ks.n{n}"), "Haar rotations", "KS p-value of ⟨Re₁, e₁⟩, 10⁴ samples", Relation::AtLeast, || {
            let mut xs: Vec<f64> = (0..10_000).map(|i| sample_rotation_indexed(n, q.seed, i).matrix[(0, 0)]).collect();
            let a = (n as f64 - 1.0) / 2.0;
            let beta = Beta::new(a, a)?;
            let d = ks_statistic(&mut xs, |t| beta.cdf((t + 1.0) / 2.0));
            cmp(ks_p_value(d, xs.len()), 1e-3, 0.0)
        });
    }
    let v3 = shifted(3);
    s.within("shifted_vb.n3.j2_vs_b2", "Kubota formula", "‖B3 − B2‖ against 3 standard errors", || {
        let b3 = kubota_vector(&v3, &hat, 2, 3, q)?;
        let b2 = b2_maj_integral(&v3, &alpha_from_zeta(&hat, 2, 3)?, 2, q)?;
        cmp((b3.value() - b2.value()).norm(), 0.0, 3.0 * (b3.error_estimate() + b2.error_estimate()))
    });
    s.within("full_dimension", "Kubota formula at j = n", "‖B3 − B2‖ at j = n", || {
        let v = shifted(2);
        cmp((kubota_vector(&v, &hat, 2, 2, q)?.value() - b2_maj_integral(&v, &hat, 2, q)?.value()).norm(), 0.0, 0.0)
    });
    let cone = ConvexFn::SupportCone {
        m: SymMatrix::new(DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5])).expect("symmetric"),
    };
    for j in 1..=2 {
        s.within(&format!("support_cone.n3.j{j}"), "1-homogeneous functions have trivial Hessian determinant", "‖B3(h_K)‖", || {
            cmp(kubota_vector(&cone, &hat, j, 3, q)?.norm(), 0.0, 1e-10)
        });
    }
    let v2 = shifted(2);
    for trial in 0..3u64 {
        s.within(&format!("standard_error_halving.trial{trial}"), "Monte-Carlo standard error", "√2 · SE(800) / SE(400)", || {
            let seed = q.seed.wrapping_add(trial);
            let small = kubota_vector(&v2, &hat, 1, 2, &QuadSpec { mc_samples: 400, seed, ..q.clone() })?;
            let large = kubota_vector(&v2, &hat, 1, 2, &QuadSpec { mc_samples: 800, seed: seed.wrapping_add(1 << 32), ..q.clone() })?;
            cmp(2f64.sqrt() * large.error_estimate() / small.error_estimate(), 1.05, 0.35)
        });
    }
    s.within("rotation_equivariance.n3.j1", "rotation equivariance", "‖B3(v∘ϑ⁻¹) − ϑB3(v)‖ against 3 standard errors", || {
        let rot = sample_rotation_indexed(3, q.seed ^ 0x5eed, 0).matrix;
        let lhs = kubota_vector(&v3.clone().rotated(rot.clone()), &hat, 1, 3, q)?;
        let rhs = kubota_vector(&v3, &hat, 1, 3, q)?;
        cmp((lhs.value() - &rot * rhs.value()).norm(), 0.0, 3.0 * (lhs.error_estimate() + rhs.error_estimate()))
    });
}

fn bodies_suite(s: &mut Suite, q: &QuadSpec) {
    let hat = DensityFn::hat(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    let unit = EllipsoidBody::ball(3, 1.0).expect("unit ball");
    let points: Vec<DVector<f64>> = (0..20).map(|_| random_vector(&mut rng, 3, 2.0)).collect();
    s.within("ball.support", "h_{B}(u) = |u|", "max |h(u) − |u|| and max ‖Hess h − Hess|u|‖", || {
        let mut dev: f64 = 0.0;
        for u in &points {
            dev = dev.max((unit.support_value(u) - u.norm()).abs());
            dev = dev.max((unit.support_hess(u)?.matrix() - hess_norm(u)?.matrix()).amax());
        }
        cmp(dev, 0.0, 1e-12)
    });
    let body = lifted_ellipsoid();
    s.within("support_hess.kernel", "1-homogeneity of h_K", "max ‖Hess h_K(u) u‖", || {
        let mut dev: f64 = 0.0;
        for u in &points {
            dev = dev.max((body.support_hess(u)?.matrix() * u).amax());
        }
        cmp(dev, 0.0, 1e-12)
    });
    s.within("support_hess.finite_differences", "support function of an ellipsoid", "max deviation from central differences", || {
        let h = 1e-4;
        let mut dev: f64 = 0.0;
        for u in &points {
            let exact = body.support_hess(u)?;
            for a in 0..3 {
                for b in 0..3 {
                    let mut ea = DVector::zeros(3);
                    ea[a] = h;
                    let mut eb = DVector::zeros(3);
                    eb[b] = h;
                    let f = |x: DVector<f64>| body.support_value(&x);
                    let fd = (f(u + &ea + &eb) - f(u + &ea - &eb) - f(u - &ea + &eb) + f(u - &ea - &eb)) / (4.0 * h * h);
                    dev = dev.max((fd - exact.matrix()[(a, b)]).abs());
                }
            }
        }
        cmp(dev, 0.0, 1e-6)
    });
    s.within("area_density.ball", "area measures of balls", "max |density − r^j|, r = 1.7", || {
        let ball = EllipsoidBody::ball(3, 1.7)?;
        let mut dev: f64 = 0.0;
        for u in &points {
            let z = u / u.norm();
            for j in 0..=2 {
                dev = dev.max((ball.area_measure_density(j, &z)? - 1.7f64.powi(j as i32)).abs());
            }
        }
        cmp(dev, 0.0, 1e-12)
    });
    s.within("area_mass.ball", "surface area of the sphere", "∫ dS_2(rB³), r = 1.7", || {
        let ball = EllipsoidBody::ball(3, 1.7)?;
        let rule = SphereRule::full(3, 2 * q.angular_points, 4 * q.angular_points);
        let mut total = 0.0;
        for (d, w) in rule.directions.iter().zip(&rule.weights) {
            total += w * ball.area_measure_density(2, &vec_of(d))?;
        }
        cmp(total, 4.0 * PI * 1.7 * 1.7, 1e-9)
    });
    s.within("gnomonic.pole", "gnomonic projection", "|gnom(−e₃)|", || cmp(gnomonic(&vec_of(&[0.0, 0.0, -1.0]))?.norm(), 0.0, 0.0));
    s.within("gnomonic.round_trip", "gnomonic projection", "max |gnom(gnom⁻¹ x) − x|, 50 points", || {
        let mut dev: f64 = 0.0;
        for _ in 0..50 {
            let x = random_vector(&mut rng, 2, 5.0);
            dev = dev.max((gnomonic(&gnomonic_inverse(&x))? - &x).amax());
        }
        cmp(dev, 0.0, 1e-14)
    });
    s.within("gnomonic.meridian", "gnomonic projection", "|gnom(sin θ, 0, −cos θ) − (tan θ, 0)|, θ = 0.6", || {
        let t: f64 = 0.6;
        cmp((gnomonic(&vec_of(&[t.sin(), 0.0, -t.cos()]))? - vec_of(&[t.tan(), 0.0])).norm(), 0.0, 1e-15)
    });
    s.within("lift.matches_support", "v(x) = h_K(x, −1)", "max |v(x) − h_K(x,−1)|, 100 points", || {
        let lift = ConvexFn::BodyLift(body.clone());
        let mut dev: f64 = 0.0;
        for _ in 0..100 {
            let x = random_vector(&mut rng, 2, 3.0);
            let z = vec_of(&[x[0], x[1], -1.0]);
            dev = dev.max((lift.value(&x)? - body.support_value(&z)).abs());
        }
        cmp(dev, 0.0, 1e-12)
    });
    s.within("b4.ball", "odd weight against a zonal measure", "‖B4(B³)‖", || {
        let mut worst: f64 = 0.0;
        for j in 1..=2 {
            worst = worst.max(b4_area_integral(&unit, &hat, j, q)?.norm());
        }
        cmp(worst, 0.0, 1e-10)
    });
    let lift = ConvexFn::BodyLift(body.clone());
    for j in 1..=2 {
        s.within(&format!("b4_vs_b1.j{j}"), "area-measure representation", "‖B4 − B1‖ / ‖B1‖", || {
            relative(b4_area_integral(&body, &hat, j, q)?.value(), b1_hessian_integral(&lift, &hat, j, q)?.value(), 1e-3)
        });
    }
    s.within("b4.linearity", "linearity in the density", "‖B4(λα) − λB4(α)‖, λ = 2.5", || {
        let a = b4_area_integral(&body, &hat, 1, q)?;
        let b = b4_area_integral(&body, &hat.scaled(2.5), 1, q)?;
        relative(b.value(), &(a.value() * 2.5), 1e-12)
    });
    s.within("translation.last_axis", "translating K along e_{n+1} adds a constant to v", "‖B1(K + te₃) − B1(K)‖", || {
        let moved = ConvexFn::BodyLift(body.translated(&vec_of(&[0.0, 0.0, 0.8])));
        let x = vec_of(&[0.3, -0.4]);
        let shift = moved.value(&x)? - lift.value(&x)?;
        if (shift + 0.8).abs() > 1e-12 {
            return Err(format!("translation changed v by {shift}, expected −0.8").into());
        }
        let a = b1_hessian_integral(&moved, &hat, 1, q)?;
        let b = b1_hessian_integral(&lift, &hat, 1, q)?;
        cmp((a.value() - b.value()).norm(), 0.0, a.error_estimate() + b.error_estimate() + 1e-14)
    });
}

fn steiner_suite(s: &mut Suite, q: &QuadSpec) {
    const STEINER: &str = "Steiner expansion of t*_{n,α}(v + r h_B)";
    let hat = DensityFn::hat(1.0);
    s.within("quadratic_vanishes", STEINER, "max ‖coefficient‖ for v = |x|²/2", || {
        let c = steiner_extract(&ConvexFn::quadratic(2), &hat, &default_steiner_nodes(2), q)?;
        cmp(c.by_degree.iter().map(MinkVector::norm).fold(0.0, f64::max), 0.0, 1e-10)
    });
    for (n, v) in [(2, ConvexFn::shifted_vb(vec_of(&[0.5, -0.3]))), (3, shifted(3))] {
        let coeffs = steiner_extract(&v, &hat, &default_steiner_nodes(n), q);
        s.within(&format!("degree_zero.n{n}"), "t*_0 ≡ 0", "‖coefficient of r^n‖", || cmp(coeffs.as_ref().map_err(Clone::clone)?.by_degree[0].norm(), 0.0, 1e-6));
        for j in 1..=n {
            s.within(&format!("coefficient_vs_b1.n{n}.j{j}"), STEINER, "‖coef_j − B1(v, ζ_j)‖ / ‖B1‖", || {
                let c = coeffs.as_ref().map_err(Clone::clone)?;
                let zj = zeta_from_alpha(&hat, j, n)?;
                relative(c.by_degree[j].value(), b1_hessian_integral(&v, &zj, j, q)?.value(), 1e-3)
            });
            s.within(&format!("coefficient_vs_b2.n{n}.j{j}"), STEINER, "‖coef_j − B2(v, α_j)‖ / ‖B2‖", || {
                let c = coeffs.as_ref().map_err(Clone::clone)?;
                let aj = alpha_from_zeta(&zeta_from_alpha(&hat, j, n)?, j, n)?;
                relative(c.by_degree[j].value(), b2_maj_integral(&v, &aj, j, q)?.value(), 1e-3)
            });
        }
    }
    s.within("ill_conditioned_nodes", "plumbing", "refusal of near-coincident nodes", || {
        let nodes = [1.0, 1.0 + 1e-6, 1.0 + 2e-6];
        bool_cmp(matches!(
            steiner_extract(&ConvexFn::quadratic(2), &hat, &nodes, q),
            Err(MeasureError::IllConditioned(_))
        ))
    });
}

fn oracles_suite(s: &mut Suite, q: &QuadSpec) {
    let hat = DensityFn::hat(1.0);
    s.within("cone_shell", "Φ_j(v_s; sS^{n−1}) = κ_n binom(n,j) s^{n−j}", "max relative error, n ≤ 5, three s", || {
        let mut dev: f64 = 0.0;
        for n in 1..=5 {
            for sv in [0.5, 1.0, 2.0] {
                let shell = phi_cone_shell(sv, 0.7, n);
                for j in 0..=n {
                    let want = if j == 0 { 0.0 } else { unit_ball_volume(n) * binomial(n, j) * sv.powi((n - j) as i32) };
                    dev = dev.max((shell.coefficients[j] - want).abs() / want.max(1.0));
                }
                let poly: f64 = shell.coefficients.iter().enumerate().map(|(j, c)| c * 0.7f64.powi(j as i32)).sum();
                dev = dev.max((poly - shell.volume).abs() / shell.volume);
            }
        }
        cmp(dev, 0.0, 1e-12)
    });
    for n in 2..=4 {
        s.within(&format!("cauchy.n{n}"), "∫_{z_n ≥ 0} z_n dz = κ_{n−1}", "upper-half sphere integral", || {
            cmp(cauchy_constant(n, q), unit_ball_volume(n - 1), 1e-8)
        });
    }
    for n in 2..=3 {
        for j in 1..n {
            for sv in [0.25, 0.5, 0.75] {
                s.within(&format!("ws.n{n}.j{j}.s{sv}"), "t*_{j,ζ}(w_s) = (κ_{n−1}/n) binom(n,j) s^{n−j+1} ζ(s) e_n", "‖region sum − closed form‖", || {
                    let (t, _) = ws_semianalytic(sv, &hat, j, n, q)?;
                    let mut want = DVector::zeros(n);
                    want[n - 1] = ws_closed_form(sv, &hat, j, n);
                    cmp((t.value() - want).norm(), 0.0, 1e-6)
                });
            }
        }
    }
    s.within("ws.regions.n2.j1.s0.5", "region decomposition of w_s", "max deviation of (A₂, A₄, A₅) from (1/6, 1/4, −1/6)", || {
        let (_, r) = ws_semianalytic(0.5, &hat, 1, 2, q)?;
        let dev = [(r.a2, 1.0 / 6.0), (r.a4, 0.25), (r.a5, -1.0 / 6.0), (r.a3, 0.0)]
            .iter()
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        cmp(dev, 0.0, 1e-9)
    });
    s.within("ws.a3_vanishes_at_top.n3.j2", "[Hess w_s]_j = 0 on A₃ for j = n − 1", "A₃", || {
        cmp(ws_semianalytic(0.5, &hat, 2, 3, q)?.1.a3, 0.0, 0.0)
    });
    s.within("ws.beyond_support", "ζ(s) = 0 beyond the support", "‖t*(w_s)‖, s = 1.5", || {
        cmp(ws_semianalytic(1.5, &hat, 1, 3, q)?.0.norm(), 0.0, 0.0)
    });
    for n in 2..=3 {
        for sv in [0.5, 1.0] {
            s.within(&format!("ws_top_degree.n{n}.s{sv}"), "t*_{n,ζ}(w_s) = (κ_{n−1}/n) s ζ(s) e_n", "‖dual(w_s*) − closed form‖", || {
                let zeta = DensityFn::hat(2.0);
                let u = ConvexFn::HalfConeWs { n, s: sv }.conjugate()?;
                let t = dual_pushforward(&u, &zeta, n, q)?;
                let mut want = DVector::zeros(n);
                want[n - 1] = ws_closed_form(sv, &zeta, n, n);
                cmp((t.value() - want).norm(), 0.0, 1e-8)
            });
        }
    }
    s.within("vs_top_degree.n2", "odd weight on a radial function", "‖dual(v_s*)‖", || {
        let u = ConvexFn::ConeVs { n: 2, s: 0.5 }.conjugate()?;
        cmp(dual_pushforward(&u, &hat, 2, q)?.norm(), 0.0, 1e-12)
    });
}

fn axioms_suite(s: &mut Suite, q: &QuadSpec) {
    let hat = DensityFn::hat(1.0);
    let base = ConvexFn::shifted_vb(vec_of(&[0.3, 0.1]));
    let pair = make_hinge_pair(&base, &vec_of(&[1.0, 0.5]), 0.6);
    type Backend = fn(&ConvexFn, &DensityFn, usize, &QuadSpec) -> Result<MinkVector, MeasureError>;
    let backends: [(&str, Backend); 3] = [("b1", b1_hessian_integral), ("b2", b2_maj_integral), ("b2vb", b2_vb_integral)];
    for (name, f) in backends {
        for j in 1..=2 {
            s.within(&format!("valuation.{name}.j{j}"), "valuation identity", "‖t(v∨w) + t(v∧w) − t(v) − t(w)‖", || {
                let p = pair.as_ref().map_err(Clone::clone)?;
                let density = if name == "b2" { alpha_from_zeta(&hat, j, 2)? } else { hat.clone() };
                let [a, b, c, d] = [&p.vmax, &p.vmin, &p.v, &p.w].map(|g| f(g, &density, j, q));
                let (a, b, c, d) = (a?, b?, c?, d?);
                let err = [&a, &b, &c, &d].iter().map(|t| t.error_estimate()).fold(0.0, f64::max);
                let scale = [&a, &b, &c, &d].iter().map(|t| t.norm()).fold(0.0, f64::max);
                cmp((a.value() + b.value() - c.value() - d.value()).norm(), 0.0, 4.0 * err + 1e-12 * scale)
            });
        }
    }
    for j in 1..=2 {
        s.within(&format!("epi_translation.b1.j{j}"), "dual epi-translation invariance", "‖t(v + ⟨b,x⟩ + c) − t(v)‖", || {
            let moved = base.clone().plus_affine(vec_of(&[0.4, -2.0]), 1.5);
            let (a, b) = (b1_hessian_integral(&moved, &hat, j, q)?, b1_hessian_integral(&base, &hat, j, q)?);
            cmp((a.value() - b.value()).norm(), 0.0, a.error_estimate().max(b.error_estimate()))
        });
        s.within(&format!("epi_translation.b2.j{j}"), "dual epi-translation invariance", "‖t(v + ⟨b,x⟩ + c) − t(v)‖", || {
            let alpha = alpha_from_zeta(&hat, j, 2)?;
            let moved = base.clone().plus_affine(vec_of(&[-1.0, 0.25]), -3.0);
            let (a, b) = (b2_maj_integral(&moved, &alpha, j, q)?, b2_maj_integral(&base, &alpha, j, q)?);
            cmp((a.value() - b.value()).norm(), 0.0, a.error_estimate().max(b.error_estimate()))
        });
    }
    for (n, j) in [(2usize, 1usize), (3, 2)] {
        let v = shifted(n);
        let mut maps: Vec<(String, DMatrix<f64>)> = (0..10)
            .map(|i| (format!("rotation{i}"), sample_rotation_indexed(n, q.seed ^ 0xa11ce, i).matrix))
            .collect();
        let mut reflection = DMatrix::identity(n, n);
        reflection[(0, 0)] = -1.0;
        maps.push(("reflection".into(), reflection));
        let reference = b1_hessian_integral(&v, &hat, j, q);
        s.within(&format!("equivariance.n{n}.j{j}"), "O(n) equivariance", "max ‖t(v∘ϑ⁻¹) − ϑ t(v)‖ over 10 rotations and a reflection", || {
            let reference = reference.clone()?;
            let mut dev: f64 = 0.0;
            let mut budget: f64 = f64::INFINITY;
            for (_, m) in &maps {
                let t = b1_hessian_integral(&v.clone().rotated(m.clone()), &hat, j, q)?;
                dev = dev.max((t.value() - m * reference.value()).norm());
                budget = budget.min(3.0 * (t.error_estimate() + reference.error_estimate()) + 1e-9 * reference.norm());
            }
            cmp(dev, 0.0, budget)
        });
    }
    for n in 2..=3 {
        let v = shifted(n);
        for j in 1..=n {
            for lambda in [0.5, 2.0] {
                s.within(&format!("homogeneity.n{n}.j{j}.l{lambda}"), "homogeneity of degree j", "‖t(λv) − λ^j t(v)‖ / ‖λ^j t(v)‖", || {
                    let scaled = b1_hessian_integral(&v.clone().scaled(lambda), &hat, j, q)?;
                    let base = b1_hessian_integral(&v, &hat, j, q)?;
                    relative(scaled.value(), &(base.value() * lambda.powi(j as i32)), 1e-6)
                });
            }
        }
    }
    let cone = ConvexFn::SupportCone {
        m: SymMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.2, -0.1, 0.2, 2.0, 0.3, -0.1, 0.3, 0.8])).expect("symmetric"),
    };
    for j in 1..=2 {
        s.within(&format!("triviality.support_cone.n3.j{j}"), "1-homogeneous functions are mapped to zero", "‖B3(h_K)‖", || {
            cmp(kubota_vector(&cone, &hat, j, 3, q)?.norm(), 0.0, 1e-8)
        });
    }
}

/// `∫_{R^m} ζ(√(z² + |x|²)) x_i dx` (or without `x_i` when `component` is
/// `None`) by nested adaptive quadrature over the ball of radius `√(R² − z²)`.
fn fiber_integral(zeta: &DensityFn, z: f64, m: usize, component: Option<usize>, tol: Tolerance) -> f64 {
    let big_r = zeta.support_radius();
    let top = big_r * big_r - z * z;
    if top <= 0.0 {
        return 0.0;
    }
    fn nest(zeta: &DensityFn, sq: f64, reach: f64, left: usize, coords: &[f64], component: Option<usize>, tol: Tolerance) -> f64 {
        let a = reach.sqrt();
        let f = |x: f64| {
            let mut c = coords.to_vec();
            c.push(x);
            if left == 1 {
                let factor = component.map_or(1.0, |i| c[i]);
                zeta.eval((sq + c.iter().map(|v| v * v).sum::<f64>()).sqrt()) * factor
            } else {
                nest(zeta, sq, reach - x * x, left - 1, &c, component, tol)
            }
        };
        match integrate(f, -a, a, tol) {
            Ok(e) => e.value,
            Err(e) => e.value,
        }
    }
    nest(zeta, z * z, top, m, &[], component, tol)
}

fn abel_suite(s: &mut Suite, q: &QuadSpec) {
    const ANCHOR: &str = "restriction of t_{j,ζ} to functions with lower-dimensional domain";
    let zeta = DensityFn::hat(1.0);
    let g = ScalarPiece::ExpPlusSquare;
    let w = g.conjugate();
    let big_r = zeta.support_radius();
    let tol = Tolerance::new(q.tol, q.tol);
    for n in 2..=3 {
        // Left side: u* = w(x₁) on R^n, integrated against dΦ_1 = w''(z) dz dx' over the fiber.
        let lhs = || -> Result<DVector<f64>, Failure> {
            let mut out = DVector::zeros(n);
            for i in 0..n {
                let f = |z: f64| -> f64 {
                    let w2 = w.eval3(z).map(|(_, _, d2)| d2).unwrap_or(f64::NAN);
                    let fiber = if i == 0 {
                        z * fiber_integral(&zeta, z, n - 1, None, tol)
                    } else {
                        fiber_integral(&zeta, z, n - 1, Some(i - 1), tol)
                    };
                    w2 * fiber
                };
                let e = integrate(f, -big_r, big_r, Tolerance::new(q.tol * 10.0, q.tol * 10.0));
                out[i] = match e {
                    Ok(e) => e.value,
                    Err(e) => e.value,
                };
            }
            Ok(out)
        };
        let lhs = lhs();
        s.within(&format!("restriction.n{n}.k1.j1"), ANCHOR, "|LHS₁ − ∫ A^{n−1}ζ(|g'|) g' dx|", || {
            let lhs = lhs.as_ref().map_err(|e| e.to_string())?;
            let abel = abel_transform(&zeta, (n - 1) as u32);
            let (lo, hi) = (g.solve_derivative(-big_r)?.0, g.solve_derivative(big_r)?.0);
            let rhs = integrate(
                |x| {
                    let d = x.exp() + 2.0 * x;
                    abel.eval(d.abs()) * d
                },
                lo,
                hi,
                tol,
            )?
            .value;
            cmp(lhs[0], rhs, 1e-4)
        });
        s.within(&format!("restriction_orthogonal.n{n}.k1.j1"), ANCHOR, "‖(LHS₂, …, LHS_n)‖", || {
            let lhs = lhs.as_ref().map_err(|e| e.to_string())?;
            cmp(lhs.rows(1, n - 1).norm(), 0.0, 1e-8)
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suites_are_rejected() {
        assert!(matches!(run_suite("bogus", &QuadSpec::default()), Err(VerificationError::UnknownSuite(_))));
    }

    #[test]
    fn kernels_suite_passes_and_is_reproducible() {
        let q = QuadSpec::default();
        let a = run_suite("kernels", &q).unwrap();
        assert!(a.pass, "{}", a.table());
        assert_eq!(a.to_json(), run_suite("kernels", &q).unwrap().to_json());
        assert!(a.checks.windows(2).all(|w| w[0].id <= w[1].id));
        assert!(a.to_csv().lines().count() == a.checks.len() + 1);
    }

    #[test]
    fn failed_computations_fail_the_check() {
        let mut s = Suite::new("t");
        s.within("boom", "plumbing", "error path", || Err("nope".into()));
        s.within("ok", "plumbing", "trivial", || cmp(1.0, 1.0, 0.0));
        let r = s.finish(0, Duration::ZERO);
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
        assert!(r.to_json().contains("\"note\": \"nope\""));
        assert!(!r.to_json().contains("runtime"));
    }
}
