//! Text grammar for functions and densities.
//!
//! A spec is `name` or `name:params`, with parameters separated by commas
//! (whitespace is accepted too, so `"power 0.5"` and `"power:0.5"` agree).
//!
//! Densities (ζ, or α where a command expects one):
//!
//! | spec               | density                                   |
//! |--------------------|-------------------------------------------|
//! | `hat:R`            | `max(0, 1 − t/R)`                         |
//! | `gauss_trunc:R`    | `e^{−t²}` on `t < R`                      |
//! | `power:p`          | `t^{−p} max(0, 1 − t)`                    |
//! | `bump:a,b`         | smooth bump supported on `(a, b)`         |
//!
//! Functions on `R^n` (`n` comes from the job unless the spec fixes it):
//!
//! | spec                          | function                                         |
//! |-------------------------------|--------------------------------------------------|
//! | `quadratic`                   | `½|x|²`                                           |
//! | `shifted_vb:x1,…,xn`          | `√(1 + |x − x₀|²)`                               |
//! | `cone_vs:s`                   | `max(0, |x| − s)`                                |
//! | `cone_ws:s`                   | the half cone `w_s`                              |
//! | `ind_ball:s`, `ind_half:s`    | `ind_D + s|x|` on the ball / upper half ball     |
//! | `separable:g1,…,gn`           | `Σ g_i(x_i)`                                     |
//! | `conj_separable:g1,…,gn`      | `Σ g_i*(x_i)`                                    |
//! | `body:m11,…,m(n+1)(n+1)`      | `h_K(x, −1)` for `K = {z : zᵀ M⁻¹ z ≤ 1}`        |
//! | `support_cone:m11,…,mnn`      | `√(xᵀ M x)`                                      |
//! | `plus_norm:r;inner`           | `inner + r|x|`                                   |
//!
//! Scalar pieces are `quadratic`, `quartic`, `cosh`, `exp_sq` (`eˣ + x²`)
//! and `conj(piece)`. Matrices are row-major.

use minkvec::functions::ConeDomain;
use minkvec::{ConvexFn, DensityFn, EllipsoidBody, ScalarPiece, SymMatrix};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("`{spec}`: {reason}")]
    Invalid { spec: String, reason: String },
}

fn invalid(spec: &str, reason: impl Into<String>) -> GrammarError {
    GrammarError::Invalid {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// Splits `name:rest` (or `name rest`) into its parts.
fn head(spec: &str) -> (&str, &str) {
    let spec = spec.trim();
    match spec.find(|c: char| c == ':' || c.is_whitespace()) {
        Some(i) => (&spec[..i], spec[i + 1..].trim()),
        None => (spec, ""),
    }
}

fn numbers(spec: &str, rest: &str) -> Result<Vec<f64>, GrammarError> {
    rest.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            let x: f64 = t.parse().map_err(|_| invalid(spec, format!("`{t}` is not a number")))?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(invalid(spec, format!("`{t}` is not finite")))
            }
        })
        .collect()
}

fn exactly<const K: usize>(spec: &str, rest: &str) -> Result<[f64; K], GrammarError> {
    let v = numbers(spec, rest)?;
    v.try_into()
        .map_err(|v: Vec<f64>| invalid(spec, format!("expected {K} parameter(s), got {}", v.len())))
}

fn positive(spec: &str, x: f64, what: &str) -> Result<f64, GrammarError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(spec, format!("{what} must be positive, got {x}")))
    }
}

pub fn parse_density(spec: &str) -> Result<DensityFn, GrammarError> {
    let (name, rest) = head(spec);
    match name {
        "hat" => {
            let [r] = exactly(spec, rest)?;
            Ok(DensityFn::hat(positive(spec, r, "radius")?))
        }
        "gauss_trunc" => {
            let [r] = exactly(spec, rest)?;
            Ok(DensityFn::gauss_trunc(positive(spec, r, "radius")?))
        }
        "power" => {
            let [p] = exactly(spec, rest)?;
            if p < 0.0 {
                return Err(invalid(spec, "exponent must be non-negative"));
            }
            Ok(DensityFn::power(p))
        }
        "bump" => {
            let [a, b] = exactly(spec, rest)?;
            if !(a >= 0.0 && b > a) {
                return Err(invalid(spec, "need 0 ≤ a < b"));
            }
            Ok(DensityFn::bump(a, b))
        }
        _ => Err(GrammarError::Unknown {
            kind: "density",
            name: name.to_string(),
        }),
    }
}

pub fn parse_piece(spec: &str) -> Result<ScalarPiece, GrammarError> {
    let s = spec.trim();
    if let Some(inner) = s.strip_prefix("conj(").and_then(|t| t.strip_suffix(')')) {
        return Ok(parse_piece(inner)?.conjugate());
    }
    match s {
        "quadratic" => Ok(ScalarPiece::Quadratic),
        "quartic" => Ok(ScalarPiece::Quartic),
        "cosh" => Ok(ScalarPiece::Cosh),
        "exp_sq" => Ok(ScalarPiece::ExpPlusSquare),
        _ => Err(GrammarError::Unknown {
            kind: "scalar piece",
            name: s.to_string(),
        }),
    }
}

/// Splits a piece list on top-level commas, so `conj(cosh),quartic` has two
/// entries.
fn pieces(spec: &str, rest: &str) -> Result<Vec<ScalarPiece>, GrammarError> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in rest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(parse_piece(&rest[start..i])?);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(invalid(spec, "unbalanced parentheses"));
        }
    }
    if depth != 0 {
        return Err(invalid(spec, "unbalanced parentheses"));
    }
    out.push(parse_piece(&rest[start..])?);
    Ok(out)
}

fn square(spec: &str, rest: &str, d: usize) -> Result<DMatrix<f64>, GrammarError> {
    let v = numbers(spec, rest)?;
    if v.len() != d * d {
        return Err(invalid(spec, format!("expected {} entries for a {d}×{d} matrix, got {}", d * d, v.len())));
    }
    Ok(DMatrix::from_row_slice(d, d, &v))
}

/// Parses a function on `R^n`.
pub fn parse_function(spec: &str, n: usize) -> Result<ConvexFn, GrammarError> {
    let (name, rest) = head(spec);
    let f = match name {
        "quadratic" => ConvexFn::quadratic(n),
        "shifted_vb" => ConvexFn::shifted_vb(DVector::from_vec(numbers(spec, rest)?)),
        "cone_vs" => {
            let [s] = exactly(spec, rest)?;
            ConvexFn::ConeVs { n, s: positive(spec, s, "s")? }
        }
        "cone_ws" => {
            let [s] = exactly(spec, rest)?;
            ConvexFn::HalfConeWs { n, s: positive(spec, s, "s")? }
        }
        "ind_ball" | "ind_half" => {
            let [s] = exactly(spec, rest)?;
            let domain = if name == "ind_ball" { ConeDomain::Ball } else { ConeDomain::HalfBall };
            ConvexFn::IndicatorPlusNorm { n, domain, s: positive(spec, s, "s")? }
        }
        "separable" => ConvexFn::Separable(pieces(spec, rest)?),
        "conj_separable" => ConvexFn::Separable(pieces(spec, rest)?.iter().map(ScalarPiece::conjugate).collect()),
        "body" => {
            let m = square(spec, rest, n + 1)?;
            ConvexFn::BodyLift(EllipsoidBody::new(m).map_err(|e| invalid(spec, e.to_string()))?)
        }
        "support_cone" => {
            let m = SymMatrix::new(square(spec, rest, n)?).map_err(|e| invalid(spec, e.to_string()))?;
            if m.min_eigenvalue() <= 0.0 {
                return Err(invalid(spec, "matrix must be positive definite"));
            }
            ConvexFn::SupportCone { m }
        }
        "plus_norm" => {
            let (r, inner) = rest
                .split_once(';')
                .ok_or_else(|| invalid(spec, "expected `plus_norm:r;inner`"))?;
            let [r] = exactly(spec, r)?;
            if r < 0.0 {
                return Err(invalid(spec, "r must be non-negative"));
            }
            parse_function(inner, n)?.plus_norm(r)
        }
        _ => {
            return Err(GrammarError::Unknown {
                kind: "function",
                name: name.to_string(),
            })
        }
    };
    if f.dim() != n {
        return Err(invalid(spec, format!("function lives on R^{}, but n = {n}", f.dim())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use minkvec::Regularity;

    #[test]
    fn densities() {
        assert_eq!(parse_density("hat:1").unwrap().eval(0.25), 0.75);
        assert_eq!(parse_density("power 0.5").unwrap().eval(0.25), 0.25f64.powf(-0.5) * 0.75);
        assert!(parse_density("bump:0.2,0.8").unwrap().eval(0.5) > 0.0);
        assert!((parse_density("gauss_trunc:2").unwrap().eval(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(matches!(parse_density("hat"), Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_density("hat:-1"), Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_density("bump:1,0.5"), Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_density("tent:1"), Err(GrammarError::Unknown { .. })));
    }

    #[test]
    fn functions() {
        let f = parse_function("shifted_vb:0.7,0", 2).unwrap();
        assert!((f.value(&DVector::from_vec(vec![0.7, 0.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(parse_function("shifted_vb:0.7", 2), Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_function("cone_ws:0.5", 3).unwrap(), ConvexFn::HalfConeWs { n: 3, .. }));
        let g = parse_function("conj_separable:exp_sq,cosh", 2).unwrap();
        assert_eq!(g.regularity(), Regularity::C2);
        let h = parse_function("separable:conj(quartic),quadratic", 2).unwrap();
        assert_eq!(h.regularity(), Regularity::Nonsmooth);
        let p = parse_function("plus_norm:0.5;quadratic", 2).unwrap();
        let x = DVector::from_vec(vec![3.0, 4.0]);
        assert!((p.value(&x).unwrap() - (12.5 + 2.5)).abs() < 1e-12);
        assert!(parse_function("body:1,0,0,0,1,0,0,0,1", 2).is_ok());
        assert!(parse_function("support_cone:2,0,0,1", 2).is_ok());
        assert!(matches!(parse_function("support_cone:1,0,0,-1", 2), Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_function("separable:cosh,(", 2), Err(GrammarError::Unknown { .. }) | Err(GrammarError::Invalid { .. })));
        assert!(matches!(parse_function("nope", 2), Err(GrammarError::Unknown { .. })));
    }
}
