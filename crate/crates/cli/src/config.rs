//! Job configuration, loadable from JSON and overridable by flags.

use std::path::PathBuf;

use minkvec::measure_engine::MAX_DIM;
use minkvec::QuadSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Compute,
    Verify,
    Transforms,
    Steiner,
}

/// Which representation `compute` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    /// Singular Hessian integral.
    B1,
    /// Mixed Monge–Ampère integral (α computed from ζ).
    B2,
    /// Mixed discriminant against `Hess v_B`.
    B2vb,
    /// Kubota average over random j-subspaces.
    B3,
    /// Kubota average of the dual pushforward; the function is `u`.
    B3dual,
    /// Area measure of a lifted ellipsoid; requires `body:…`.
    B4,
    /// Pushforward under `∇u`; the function is `u`.
    Dual,
    /// Region decomposition for `cone_ws` (`j < n`), or the dual
    /// pushforward of the cone's conjugate (`j = n`).
    Semi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    /// `ℛ^l`
    R,
    /// `ℛ^{−l}`
    RInv,
    /// `𝒯^l`, with the iterated form as a second column.
    T,
    /// `𝒯^{−l}`
    TInv,
    /// Abel transform `A^k`.
    Abel,
    /// Inverse Abel transform.
    AbelInv,
}

/// Everything a run needs. Absent fields fall back to per-command defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    pub command: Option<Command>,
    /// Function spec, e.g. `shifted_vb:0.7,0`.
    pub function: Option<String>,
    /// Density spec, e.g. `hat:1`.
    pub density: Option<String>,
    pub j: Option<usize>,
    pub n: Option<usize>,
    pub backend: Option<BackendChoice>,
    pub quad: QuadSpec,
    /// Defaults to CSV for `transforms` and JSON elsewhere.
    pub format: Option<OutputFormat>,
    pub output: Option<PathBuf>,
    /// Suite name for `verify`.
    pub suite: Option<String>,
    pub transform: Option<TransformKind>,
    /// `l` for ℛ/𝒯, `k` for the Abel transform.
    pub order: Option<u32>,
    /// `lo:hi:count`, inclusive of both ends.
    pub grid: Option<String>,
    /// Radii for Steiner extraction.
    pub nodes: Option<Vec<f64>>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is plain data")
    }

    pub fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| CliError::Config(format!("missing `{name}`")))
    }

    pub fn dims(&self) -> Result<(usize, usize), CliError> {
        let n = *self.require(&self.n, "n")?;
        let j = *self.require(&self.j, "j")?;
        if n == 0 || n > MAX_DIM {
            return Err(CliError::Config(format!("n = {n} outside 1..={MAX_DIM}")));
        }
        if j < 1 || j > n {
            return Err(CliError::Config(format!("j = {j} outside 1..={n}")));
        }
        Ok((j, n))
    }

    pub fn dim(&self) -> Result<usize, CliError> {
        let n = *self.require(&self.n, "n")?;
        if n == 0 || n > MAX_DIM {
            return Err(CliError::Config(format!("n = {n} outside 1..={MAX_DIM}")));
        }
        Ok(n)
    }
}

/// Parses `lo:hi:count` into `count` equispaced points from `lo` to `hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("grid `{spec}`: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts.as_slice() else {
        return Err(bad("expected lo:hi:count"));
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad("lo is not a number"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad("hi is not a number"))?;
    let count: usize = count.trim().parse().map_err(|_| bad("count is not a positive integer"))?;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
        return Err(bad("need 0 ≤ lo ≤ hi"));
    }
    match count {
        0 => Err(bad("count must be at least 1")),
        1 => Ok(vec![lo]),
        _ => Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = JobConfig {
            command: Some(Command::Compute),
            function: Some("shifted_vb:0.7,0".into()),
            density: Some("hat:1".into()),
            j: Some(1),
            n: Some(2),
            backend: Some(BackendChoice::B2vb),
            quad: QuadSpec {
                seed: 42,
                origin_cut: Some(1e-4),
                ..QuadSpec::default()
            },
            format: Some(OutputFormat::Csv),
            output: Some("out.csv".into()),
            suite: None,
            transform: Some(TransformKind::AbelInv),
            order: Some(2),
            grid: Some("0:1:5".into()),
            nodes: Some(vec![0.25, 0.5, 1.0]),
        };
        assert_eq!(JobConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(JobConfig::from_json(&JobConfig::default().to_json()).unwrap(), JobConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(JobConfig::from_json(r#"{"fn": "quadratic"}"#).is_err());
        assert!(JobConfig::from_json(r#"{"quad": {"radial": 3}}"#).is_err());
        let c = JobConfig::from_json(r#"{"quad": {"seed": 7}, "backend": "b3"}"#).unwrap();
        assert_eq!(c.quad.seed, 7);
        assert_eq!(c.quad.radial_points, QuadSpec::default().radial_points);
    }

    #[test]
    fn dimension_checks() {
        let mut c = JobConfig {
            n: Some(6),
            j: Some(1),
            ..JobConfig::default()
        };
        assert!(c.dims().is_err());
        c.n = Some(3);
        assert_eq!(c.dims().unwrap(), (1, 3));
        c.j = Some(4);
        assert!(c.dims().is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        assert!(parse_grid("1:0:3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
