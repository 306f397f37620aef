//! Benchmark suites: named lists of builtin instances with expected values
//! and tolerance bands, read from a JSON manifest.

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check, format_row, CheckOutput, Domain, DomainSpec, FormulaSource, ModelSource, PipelineError,
    RunConfig,
};
use crate::solver::{CheckResult, Status};

/// The manifest shipped with the crate.
pub const DEFAULT_MANIFEST: &str = include_str!("../../bench/manifest.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCase {
    pub name: String,
    pub domain: Domain,
    pub size: usize,
    #[serde(default)]
    pub rocks: Option<usize>,
    pub ltl: String,
    pub eps: f64,
    pub timeout_s: f64,
    /// Expected lower bound and the allowed deviation from it.
    pub lb: f64,
    pub lb_tol: f64,
    /// Largest acceptable precision.
    pub eps_max: f64,
    /// Exact number of alpha vectors, when the expectation pins it.
    #[serde(default)]
    pub num_alpha: Option<usize>,
}

impl BenchCase {
    pub fn config(&self) -> RunConfig {
        let spec = DomainSpec {
            domain: self.domain,
            size: self.size,
            rocks: self.rocks,
        };
        let mut cfg = RunConfig::new(
            ModelSource::Builtin(spec),
            FormulaSource::Ltl(self.ltl.clone()),
            self.eps,
        );
        cfg.time_limit = Some(Duration::from_secs_f64(self.timeout_s));
        cfg
    }

    /// Reasons the result misses the expectation; empty when it passes.
    pub fn failures(&self, r: &CheckResult) -> Vec<String> {
        let mut out = Vec::new();
        if (r.lb - self.lb).abs() > self.lb_tol + 1e-12 {
            out.push(format!(
                "LB {:.4} outside {:.4} ± {}",
                r.lb, self.lb, self.lb_tol
            ));
        }
        if r.eps > self.eps_max + 1e-12 {
            out.push(format!("eps {:.2e} > {:.0e}", r.eps, self.eps_max));
        }
        if let Some(k) = self.num_alpha {
            if r.num_alpha != k {
                out.push(format!("|Gamma| {} != {k}", r.num_alpha));
            }
        }
        if r.status != Status::Converged {
            out.push(format!("status {:?}", r.status));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub suites: BTreeMap<String, Vec<BenchCase>>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("bad manifest: {e}")))
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_MANIFEST).expect("shipped manifest parses")
    }

    pub fn suite(&self, name: &str) -> Result<&[BenchCase], PipelineError> {
        self.suites.get(name).map(Vec::as_slice).ok_or_else(|| {
            let known: Vec<&str> = self.suites.keys().map(String::as_str).collect();
            PipelineError::Config(format!(
                "unknown suite `{name}` (known: {})",
                known.join(", ")
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub name: String,
    #[serde(flatten)]
    pub result: CheckResult,
    pub expected_lb: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

/// Runs the cases on up to `threads` workers; rows come back in case order.
pub fn run_suite(
    cases: &[BenchCase],
    threads: Option<usize>,
) -> Result<Vec<BenchRow>, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    pool.install(|| {
        cases
            .par_iter()
            .map(|case| {
                let result = match check(&case.config())? {
                    CheckOutput::Solved { result, .. } => result,
                    CheckOutput::UpperBound { .. } => {
                        unreachable!("bench cases use the point-based solver")
                    }
                };
                let failures = case.failures(&result);
                Ok(BenchRow {
                    name: case.name.clone(),
                    result,
                    expected_lb: case.lb,
                    pass: failures.is_empty(),
                    failures,
                })
            })
            .collect()
    })
}

/// Fixed-width comparison table.
pub fn format_table(rows: &[BenchRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:width$}  {}   expected  verdict\n",
        "case",
        super::ROW_HEADER
    );
    for r in rows {
        let verdict = if r.pass {
            "PASS".to_string()
        } else {
            format!("FAIL ({})", r.failures.join("; "))
        };
        out.push_str(&format!(
            "{:width$}  {}  {:>9.4}  {verdict}\n",
            r.name,
            format_row(&r.result),
            r.expected_lb
        ));
    }
    out
}
