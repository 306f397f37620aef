//! End-to-end runs: load a model and a formula, build the product, solve,
//! simulate and benchmark. The command-line binary is a thin layer over this.

pub mod bench;

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::ltl::{ltl_to_dra, parse_hoa, parse_ltl, Dra, LtlError};
use crate::model::domains::{
    build_drone, build_gridworld, build_rocksample, gridworld_benchmark_labels, rocksample_preset,
};
use crate::model::{parse_model, ModelError, TabularPomdp};
use crate::product::{
    build_product, maximal_end_components, success_states, EndComponent, ProductError, ProductPomdp,
};
use crate::sim::{self, McEstimate, Outcome, SimError};
use crate::solver::{
    alpha_value, solve_fib, solve_lovejoy, solve_qmdp, solve_sarsop, CheckResult, PolicyError,
    PolicyFile, SarsopConfig, Solution, SolverError, Status,
};

/// Probability that a grid world move goes where intended.
pub const GRID_SLIP: f64 = 0.7;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Config(String),
}

impl PipelineError {
    /// Process exit code: 2 for formulas outside the supported fragments,
    /// 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Ltl(LtlError::UnsupportedFragment(_)) => 2,
            _ => 1,
        }
    }
}

fn read_path(path: &Path) -> Result<String, PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    };
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(io)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(io)
    }
}

pub(crate) fn write_path(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Gridworld,
    Rocksample,
    Drone,
}

impl FromStr for Domain {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gridworld" => Ok(Domain::Gridworld),
            "rocksample" => Ok(Domain::Rocksample),
            "drone" => Ok(Domain::Drone),
            _ => Err(PipelineError::Config(format!(
                "unknown domain `{s}` (gridworld, rocksample, drone)"
            ))),
        }
    }
}

/// A builtin benchmark domain and its size parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub domain: Domain,
    pub size: usize,
    /// Rock count; only used by rock sample.
    pub rocks: Option<usize>,
}

impl DomainSpec {
    pub fn build(&self) -> Result<TabularPomdp, PipelineError> {
        Ok(match self.domain {
            Domain::Gridworld => {
                build_gridworld(self.size, GRID_SLIP, &gridworld_benchmark_labels(self.size))?
            }
            Domain::Rocksample => {
                let rocks = self
                    .rocks
                    .ok_or_else(|| PipelineError::Config("rocksample needs --rocks".into()))?;
                build_rocksample(&rocksample_preset(self.size, rocks)?)?
            }
            Domain::Drone => build_drone(self.size)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Builtin(DomainSpec),
    File(PathBuf),
}

impl ModelSource {
    pub fn load(&self) -> Result<TabularPomdp, PipelineError> {
        match self {
            ModelSource::Builtin(spec) => spec.build(),
            ModelSource::File(path) => Ok(parse_model(&read_path(path)?)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormulaSource {
    Ltl(String),
    /// HOA file, or `-` for standard input.
    Hoa {
        path: PathBuf,
        complete_sink: bool,
    },
}

impl FormulaSource {
    pub fn automaton(&self) -> Result<Dra, PipelineError> {
        match self {
            FormulaSource::Ltl(text) => Ok(ltl_to_dra(&parse_ltl(text)?)?),
            FormulaSource::Hoa {
                path,
                complete_sink,
            } => Ok(parse_hoa(&read_path(path)?, *complete_sink)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Sarsop,
    Qmdp,
    Fib,
    Lovejoy(usize),
}

impl FromStr for SolverChoice {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sarsop" => Ok(SolverChoice::Sarsop),
            "qmdp" => Ok(SolverChoice::Qmdp),
            "fib" => Ok(SolverChoice::Fib),
            _ => s
                .strip_prefix("lovejoy:")
                .and_then(|m| m.parse().ok())
                .map(SolverChoice::Lovejoy)
                .ok_or_else(|| {
                    PipelineError::Config(format!(
                        "unknown solver `{s}` (sarsop, qmdp, fib, lovejoy:M)"
                    ))
                }),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverChoice::Sarsop => write!(f, "sarsop"),
            SolverChoice::Qmdp => write!(f, "qmdp"),
            SolverChoice::Fib => write!(f, "fib"),
            SolverChoice::Lovejoy(m) => write!(f, "lovejoy:{m}"),
        }
    }
}

/// Everything a `check` run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSource,
    pub formula: FormulaSource,
    pub eps: f64,
    pub time_limit: Option<Duration>,
    pub memory_limit: Option<usize>,
    pub solver: SolverChoice,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub policy_out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(model: ModelSource, formula: FormulaSource, eps: f64) -> Self {
        Self {
            model,
            formula,
            eps,
            time_limit: None,
            memory_limit: None,
            solver: SolverChoice::Sarsop,
            seed: 0,
            out: None,
            policy_out: None,
        }
    }

    pub fn sarsop_config(&self) -> SarsopConfig {
        let mut cfg = SarsopConfig::new(self.eps);
        cfg.time_limit = self.time_limit;
        cfg.memory_limit = self.memory_limit;
        cfg
    }
}

/// A product with success states attached, plus how long the end component
/// analysis took.
pub struct Prepared {
    pub product: ProductPomdp,
    pub mec_seconds: f64,
}

pub fn prepare(model: &ModelSource, formula: &FormulaSource) -> Result<Prepared, PipelineError> {
    let dra = formula.automaton()?;
    let product = build_product(model.load()?, dra)?;
    let start = Instant::now();
    let success = success_states(&product);
    let product = product.attach_reachability(success);
    Ok(Prepared {
        product,
        mec_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Outcome of `check`: a full result for the point-based solver, or a single
/// upper bound at the initial belief for the baselines.
#[derive(Debug, Clone)]
pub enum CheckOutput {
    Solved {
        result: CheckResult,
        policy: PolicyFile,
        solution: Solution,
    },
    UpperBound {
        solver: SolverChoice,
        upper: f64,
        mec_seconds: f64,
        solve_seconds: f64,
    },
}

#[derive(Serialize)]
struct UpperRecord {
    solver: String,
    upper: f64,
    mec_seconds: f64,
    solve_seconds: f64,
}

impl CheckOutput {
    pub fn to_json(&self) -> String {
        match self {
            CheckOutput::Solved { result, .. } => serde_json::to_string_pretty(result),
            CheckOutput::UpperBound {
                solver,
                upper,
                mec_seconds,
                solve_seconds,
            } => serde_json::to_string_pretty(&UpperRecord {
                solver: solver.to_string(),
                upper: *upper,
                mec_seconds: *mec_seconds,
                solve_seconds: *solve_seconds,
            }),
        }
        .expect("record serializes")
    }

    /// One human-readable table row.
    pub fn row(&self) -> String {
        match self {
            CheckOutput::Solved { result: r, .. } => format_row(r),
            CheckOutput::UpperBound {
                solver,
                upper,
                mec_seconds,
                solve_seconds,
            } => {
                format!(
                    "{solver:>10}  UB {upper:.6}  MEC {mec_seconds:.3}s  time {solve_seconds:.3}s"
                )
            }
        }
    }

    /// 0 when converged (or for baselines), 3 when a limit stopped the search.
    pub fn exit_code(&self) -> i32 {
        match self {
            CheckOutput::Solved { result, .. } if result.status != Status::Converged => 3,
            _ => 0,
        }
    }
}

pub const ROW_HEADER: &str = "        LB         eps   |Gamma|    MEC s    Time s  status";

pub fn format_row(r: &CheckResult) -> String {
    let status = serde_json::to_value(r.status)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default();
    format!(
        "{:>10.6}  {:>10.3e}  {:>8}  {:>7.3}  {:>8.3}  {}",
        r.lb, r.eps, r.num_alpha, r.mec_seconds, r.solve_seconds, status
    )
}

/// Runs the full pipeline and writes `--out` / `--policy-out` if requested.
pub fn check(cfg: &RunConfig) -> Result<CheckOutput, PipelineError> {
    let Prepared {
        product: p,
        mec_seconds,
    } = prepare(&cfg.model, &cfg.formula)?;
    let b0 = p.initial_sparse();
    let start = Instant::now();
    let output = match cfg.solver {
        SolverChoice::Sarsop => {
            let solution = solve_sarsop(&p, &b0, &cfg.sarsop_config())?;
            let mut result = solution.result.clone();
            result.mec_seconds = mec_seconds;
            let policy = PolicyFile::new(&p, &solution);
            CheckOutput::Solved {
                result,
                policy,
                solution,
            }
        }
        choice => {
            let upper = match choice {
                SolverChoice::Qmdp => alpha_value(&solve_qmdp(&p), &b0),
                SolverChoice::Fib => alpha_value(&solve_fib(&p), &b0),
                SolverChoice::Lovejoy(m) => solve_lovejoy(&p, &b0, m)?,
                SolverChoice::Sarsop => unreachable!(),
            };
            CheckOutput::UpperBound {
                solver: choice,
                upper,
                mec_seconds,
                solve_seconds: start.elapsed().as_secs_f64(),
            }
        }
    };
    if let Some(path) = &cfg.out {
        write_path(path, &output.to_json())?;
    }
    if let (Some(path), CheckOutput::Solved { policy, .. }) = (&cfg.policy_out, &output) {
        write_path(path, &policy.to_json())?;
    }
    Ok(output)
}

/// The automaton as HOA text, or as a dot graph.
pub fn automaton_text(formula: &FormulaSource, dot: bool) -> Result<String, PipelineError> {
    let dra = formula.automaton()?;
    Ok(if dot {
        dra.to_dot()
    } else {
        crate::ltl::write_hoa(&dra)
    })
}

/// MEC decomposition of the product and its success set, as text.
pub fn mec_report(model: &ModelSource, formula: &FormulaSource) -> Result<String, PipelineError> {
    let p = build_product(model.load()?, formula.automaton()?)?;
    let mecs: Vec<EndComponent> = maximal_end_components(p.underlying_mdp(), None);
    let success = success_states(&p);
    let mut out = crate::product::format_mecs(&p, &mecs);
    let ids: Vec<String> = success.iter().map(|s| s.to_string()).collect();
    out.push_str(&format!("success: {}\n", ids.join(" ")));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub model: ModelSource,
    pub formula: FormulaSource,
    pub policy: PathBuf,
    pub episodes: usize,
    pub seed: u64,
    pub max_steps: Option<usize>,
}

/// Summary record of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    #[serde(flatten)]
    pub estimate: McEstimate,
    pub master_seed: u64,
    pub max_steps: usize,
}

/// Simulates a saved policy; returns the summary and the per-episode outcomes.
pub fn simulate(cfg: &SimulateConfig) -> Result<(SimulationSummary, Vec<Outcome>), PipelineError> {
    if cfg.episodes == 0 {
        return Err(PipelineError::Config("need at least one episode".into()));
    }
    let p = prepare(&cfg.model, &cfg.formula)?.product;
    let policy = PolicyFile::from_json(&read_path(&cfg.policy)?)?;
    policy.check_matches(&p)?;
    let max_steps = cfg
        .max_steps
        .unwrap_or_else(|| sim::default_max_steps(p.num_states()));
    let outcomes = sim::run_episodes(
        &p,
        &policy.vectors,
        &p.initial_sparse(),
        cfg.episodes,
        cfg.seed,
        max_steps,
    )?;
    let summary = SimulationSummary {
        estimate: sim::summarize(&outcomes),
        master_seed: cfg.seed,
        max_steps,
    };
    Ok((summary, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_names_round_trip() {
        for s in ["sarsop", "qmdp", "fib", "lovejoy:3"] {
            assert_eq!(s.parse::<SolverChoice>().unwrap().to_string(), s);
        }
        assert!("lovejoy:x".parse::<SolverChoice>().is_err());
    }

    #[test]
    fn unsupported_fragment_exits_with_two() {
        let e = FormulaSource::Ltl("G F a & F G (a U b)".into())
            .automaton()
            .unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        let e = ModelSource::File("/nonexistent/model.pomdp".into())
            .load()
            .unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
