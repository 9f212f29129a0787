//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Each criterion is backed by one verification suite at the default
//! quadrature settings and seed 0, with a wall-clock budget where one is
//! stated. The last criterion re-runs every suite and compares report bytes.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use minkvec::{run_suite, QuadSpec, SuiteReport, SUITES};

struct Criterion {
    id: u8,
    title: &'static str,
    suite: &'static str,
    budget: Option<Duration>,
}

const CRITERIA: [Criterion; 7] = [
    Criterion {
        id: 1,
        title: "transform round trips",
        suite: "transforms",
        budget: Some(Duration::from_secs(5)),
    },
    Criterion {
        id: 2,
        title: "closed-form oracles",
        suite: "oracles",
        budget: Some(Duration::from_secs(30)),
    },
    Criterion {
        id: 3,
        title: "four-backend agreement",
        suite: "backends",
        budget: Some(Duration::from_secs(300)),
    },
    Criterion {
        id: 4,
        title: "duality",
        suite: "duality",
        budget: Some(Duration::from_secs(60)),
    },
    Criterion {
        id: 5,
        title: "Steiner extraction",
        suite: "steiner",
        budget: Some(Duration::from_secs(120)),
    },
    Criterion {
        id: 6,
        title: "valuation axioms",
        suite: "axioms",
        budget: None,
    },
    Criterion {
        id: 7,
        title: "Abel restriction",
        suite: "abel",
        budget: None,
    },
];

fn line(pass: bool, id: u8, title: &str, detail: &str) {
    println!("{} criterion {id}: {title} — {detail}", if pass { "PASS" } else { "FAIL" });
}

fn timed(name: &str, q: &QuadSpec) -> (Result<SuiteReport, String>, Duration) {
    let start = Instant::now();
    let r = run_suite(name, q).map_err(|e| e.to_string());
    (r, start.elapsed())
}

fn main() -> ExitCode {
    let q = QuadSpec::default();
    let mut all = true;
    let mut first_runs: BTreeMap<&str, String> = BTreeMap::new();

    for c in &CRITERIA {
        let (report, elapsed) = timed(c.suite, &q);
        let (pass, detail) = match report {
            Err(e) => (false, format!("suite error: {e}")),
            Ok(report) => {
                let failed: Vec<&str> = report.failures().map(|k| k.id.as_str()).collect();
                let in_budget = c.budget.is_none_or(|b| elapsed < b);
                let mut detail = format!("{} checks, {} failed, {:.2} s", report.checks.len(), failed.len(), elapsed.as_secs_f64());
                if let Some(b) = c.budget {
                    detail += &format!(" (budget {} s)", b.as_secs());
                }
                if !failed.is_empty() {
                    detail += &format!("; failing: {}", failed.join(", "));
                    eprint!("{}", report.table());
                }
                first_runs.insert(c.suite, report.to_json());
                (failed.is_empty() && in_budget, detail)
            }
        };
        all &= pass;
        line(pass, c.id, c.title, &detail);
    }

    // Criterion 8: every suite twice more under the same seed and settings.
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for name in SUITES {
        let a = first_runs.get(name).cloned().or_else(|| run_suite(name, &q).ok().map(|r| r.to_json()));
        let b = run_suite(name, &q).ok().map(|r| r.to_json());
        if a.is_none() || a != b {
            mismatched.push(name);
        }
    }
    let pass = mismatched.is_empty();
    let detail = if pass {
        format!("{} suites byte-identical on re-run, {:.2} s", SUITES.len(), start.elapsed().as_secs_f64())
    } else {
        format!("reports differ for: {}", mismatched.join(", "))
    };
    line(pass, 8, "determinism", &detail);
    all &= pass;

    if all {
        println!("acceptance: all 8 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
