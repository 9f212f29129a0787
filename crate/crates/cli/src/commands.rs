//! The four subcommands.

use std::fmt::Write as _;
use std::io::Write as _;

use minkvec::measure_engine::default_steiner_nodes;
use minkvec::transforms::{abel_inverse, abel_transform, alpha_from_zeta, r_inverse, r_transform, t_inverse, t_transform, t_transform_iterated};
use minkvec::verification::VerificationError;
use minkvec::{
    b1_hessian_integral, b2_maj_integral, b2_vb_integral, b4_area_integral, dual_pushforward, kubota_dual, kubota_vector,
    run_suite, steiner_extract, ws_semianalytic, Backend, ConvexFn, DensityFn, MeasureError, MinkVector,
};
use serde::Serialize;

use crate::config::{parse_grid, BackendChoice, Command, JobConfig, OutputFormat, TransformKind};
use crate::grammar::{parse_density, parse_function};
use crate::{CliError, EXIT_OK, EXIT_SUITE_FAILED};

pub fn execute(cfg: &JobConfig) -> Result<i32, CliError> {
    match cfg.require(&cfg.command, "command")? {
        Command::Compute => compute(cfg),
        Command::Verify => verify(cfg),
        Command::Transforms => transforms(cfg),
        Command::Steiner => steiner(cfg),
    }
}

fn emit(cfg: &JobConfig, text: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("outputs are plain data");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ComputeOutput<'a> {
    value: &'a [f64],
    error_estimate: f64,
    backend: String,
    seed: u64,
    config: &'a JobConfig,
}

fn relabel(v: MinkVector, backend: Backend) -> MinkVector {
    MinkVector::new(v.value().clone(), v.error_estimate(), backend)
}

/// Runs the selected backend on the parsed inputs.
pub fn evaluate(choice: BackendChoice, v: &ConvexFn, zeta: &DensityFn, j: usize, n: usize, cfg: &JobConfig) -> Result<MinkVector, CliError> {
    let q = &cfg.quad;
    let out = match choice {
        BackendChoice::B1 => b1_hessian_integral(v, zeta, j, q)?,
        BackendChoice::B2 => b2_maj_integral(v, &alpha_from_zeta(zeta, j, n)?, j, q)?,
        BackendChoice::B2vb => b2_vb_integral(v, zeta, j, q)?,
        BackendChoice::B3 => kubota_vector(v, zeta, j, n, q)?,
        BackendChoice::B3dual => kubota_dual(v, zeta, j, n, q)?,
        BackendChoice::B4 => match v {
            ConvexFn::BodyLift(body) => b4_area_integral(body, zeta, j, q)?,
            other => {
                return Err(MeasureError::Precondition(format!("backend b4 needs a `body:…` function, got {}", other.label())).into())
            }
        },
        BackendChoice::Dual => dual_pushforward(v, zeta, j, q)?,
        BackendChoice::Semi => match v {
            ConvexFn::HalfConeWs { s, .. } if j < n => ws_semianalytic(*s, zeta, j, n, q)?.0,
            ConvexFn::HalfConeWs { .. } | ConvexFn::ConeVs { .. } if j == n => {
                let u = v.conjugate().map_err(MeasureError::from)?;
                relabel(dual_pushforward(&u, zeta, j, q)?, Backend::Semi)
            }
            other => {
                return Err(MeasureError::Precondition(format!(
                    "the semi-analytic path covers cone_ws for any j and cone_vs for j = n, not {} with j = {j}",
                    other.label()
                ))
                .into())
            }
        },
    };
    Ok(out)
}

fn compute(cfg: &JobConfig) -> Result<i32, CliError> {
    let (j, n) = cfg.dims()?;
    let v = parse_function(cfg.require(&cfg.function, "function")?, n)?;
    let zeta = parse_density(cfg.require(&cfg.density, "density")?)?;
    let choice = *cfg.require(&cfg.backend, "backend")?;
    let result = evaluate(choice, &v, &zeta, j, n, cfg)?;
    let text = match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&ComputeOutput {
            value: result.value().as_slice(),
            error_estimate: result.error_estimate(),
            backend: result.backend().to_string(),
            seed: cfg.quad.seed,
            config: cfg,
        }),
        OutputFormat::Csv => {
            let mut s = String::from("component,value,error_estimate,backend,seed\n");
            for (i, x) in result.value().iter().enumerate() {
                let _ = writeln!(s, "{},{x:e},{:e},{},{}", i + 1, result.error_estimate(), result.backend(), cfg.quad.seed);
            }
            s
        }
    };
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}

fn verify(cfg: &JobConfig) -> Result<i32, CliError> {
    let name = cfg.require(&cfg.suite, "suite")?;
    let report = run_suite(name, &cfg.quad).map_err(|e| match e {
        VerificationError::UnknownSuite(_) => CliError::Config(e.to_string()),
        VerificationError::Measure(m) => CliError::Measure(m),
    })?;
    eprint!("{}", report.table());
    let text = match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => report.to_json() + "\n",
        OutputFormat::Csv => report.to_csv(),
    };
    emit(cfg, &text)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_SUITE_FAILED })
}

#[derive(Serialize)]
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

fn transforms(cfg: &JobConfig) -> Result<i32, CliError> {
    let zeta = parse_density(cfg.require(&cfg.density, "density")?)?;
    let kind = *cfg.require(&cfg.transform, "transform")?;
    let grid = parse_grid(cfg.require(&cfg.grid, "grid")?)?;
    let order = cfg.order.unwrap_or(1);
    let mut columns = vec!["s".to_string()];
    let mut fns = Vec::new();
    match kind {
        TransformKind::R => fns.push((format!("r{order}"), r_transform(&zeta, order))),
        TransformKind::RInv => fns.push((format!("r_inv{order}"), r_inverse(&zeta, order))),
        TransformKind::T => {
            fns.push((format!("t{order}"), t_transform(&zeta, order)));
            fns.push((format!("t{order}_iterated"), t_transform_iterated(&zeta, order)));
        }
        TransformKind::TInv => fns.push((format!("t_inv{order}"), t_inverse(&zeta, order))),
        TransformKind::Abel => {
            if order == 0 {
                return Err(CliError::Config("the Abel transform needs k ≥ 1".into()));
            }
            fns.push((format!("abel{order}"), abel_transform(&zeta, order)));
        }
        TransformKind::AbelInv => fns.push(("abel_inv".into(), abel_inverse(&zeta))),
    }
    columns.extend(fns.iter().map(|(name, _)| name.clone()));
    let rows = grid
        .iter()
        .map(|&s| {
            let mut row = vec![s];
            for (_, f) in &fns {
                row.push(f.try_eval(s)?);
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = Table { columns, rows };
    let text = match cfg.format.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => table.csv(),
        OutputFormat::Json => json(&table),
    };
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct SteinerOutput<'a> {
    /// Entry `j` multiplies `r^{n−j}`.
    by_degree: &'a [MinkVector],
    condition: f64,
    nodes: &'a [f64],
    seed: u64,
    config: &'a JobConfig,
}

fn steiner(cfg: &JobConfig) -> Result<i32, CliError> {
    let n = cfg.dim()?;
    let v = parse_function(cfg.require(&cfg.function, "function")?, n)?;
    let alpha = parse_density(cfg.require(&cfg.density, "density")?)?;
    let nodes = cfg.nodes.clone().unwrap_or_else(|| default_steiner_nodes(n));
    let coeffs = steiner_extract(&v, &alpha, &nodes, &cfg.quad)?;
    let text = match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&SteinerOutput {
            by_degree: &coeffs.by_degree,
            condition: coeffs.condition,
            nodes: &coeffs.nodes,
            seed: cfg.quad.seed,
            config: cfg,
        }),
        OutputFormat::Csv => {
            let mut s = String::from("degree,power,error_estimate");
            for i in 1..=n {
                let _ = write!(s, ",x{i}");
            }
            s.push('\n');
            for (j, c) in coeffs.by_degree.iter().enumerate() {
                let _ = write!(s, "{j},{},{:e}", n - j, c.error_estimate());
                for x in c.value().iter() {
                    let _ = write!(s, ",{x:e}");
                }
                s.push('\n');
            }
            s
        }
    };
    emit(cfg, &text)?;
    Ok(EXIT_OK)
}
