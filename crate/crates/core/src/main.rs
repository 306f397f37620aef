use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pomcheck::pipeline::bench::{format_table, run_suite, Manifest};
use pomcheck::pipeline::{
    automaton_text, check, mec_report, simulate, DomainSpec, FormulaSource, ModelSource,
    PipelineError, RunConfig, SimulateConfig, SolverChoice, ROW_HEADER,
};
use pomcheck::sim::cumulative_csv;

#[derive(Parser)]
#[command(
    name = "pomcheck",
    version,
    about = "Quantitative LTL model checking for POMDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Builtin domain: gridworld, rocksample or drone.
    #[arg(long, conflicts_with = "model")]
    domain: Option<String>,
    /// Grid side of the builtin domain.
    #[arg(long, default_value_t = 10)]
    size: usize,
    /// Number of rocks (rocksample only).
    #[arg(long)]
    rocks: Option<usize>,
    /// Model file in the text format.
    #[arg(long)]
    model: Option<PathBuf>,
}

impl ModelArgs {
    fn source(&self) -> Result<ModelSource> {
        match (&self.domain, &self.model) {
            (Some(d), None) => Ok(ModelSource::Builtin(DomainSpec {
                domain: d.parse()?,
                size: self.size,
                rocks: self.rocks,
            })),
            (None, Some(path)) => Ok(ModelSource::File(path.clone())),
            _ => bail!(PipelineError::Config(
                "give exactly one of --domain and --model".into()
            )),
        }
    }
}

#[derive(Args)]
struct FormulaArgs {
    /// LTL formula.
    #[arg(long, conflicts_with = "hoa")]
    ltl: Option<String>,
    /// HOA automaton file, `-` for stdin.
    #[arg(long)]
    hoa: Option<PathBuf>,
    /// Complete a partial HOA automaton with a rejecting sink.
    #[arg(long)]
    complete_sink: bool,
}

impl FormulaArgs {
    fn source(&self) -> Result<FormulaSource> {
        match (&self.ltl, &self.hoa) {
            (Some(f), None) => Ok(FormulaSource::Ltl(f.clone())),
            (None, Some(path)) => Ok(FormulaSource::Hoa {
                path: path.clone(),
                complete_sink: self.complete_sink,
            }),
            _ => bail!(PipelineError::Config(
                "give exactly one of --ltl and --hoa".into()
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Bound the maximal probability that the model satisfies the formula.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        /// Memory budget in MiB for the search.
        #[arg(long)]
        memory_limit: Option<usize>,
        /// sarsop, qmdp, fib or lovejoy:M.
        #[arg(long, default_value = "sarsop")]
        solver: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the result record as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the policy as JSON.
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Print the automaton for a formula.
    Automaton {
        #[command(flatten)]
        formula: FormulaArgs,
        /// Print a dot graph instead of HOA.
        #[arg(long)]
        dot: bool,
    },
    /// Print the end components of the product and its success states.
    Mec {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        formula: FormulaArgs,
    },
    /// Estimate a saved policy's satisfaction probability by simulation.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        formula: FormulaArgs,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Write the running estimate as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the summary as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and compare against its tolerance bands.
    Bench {
        suite: String,
        /// Manifest to read instead of the shipped one.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write the rows as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Option<PathBuf>, text: &str) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check {
            model,
            formula,
            eps,
            timeout,
            memory_limit,
            solver,
            seed,
            out,
            policy_out,
        } => {
            let mut cfg = RunConfig::new(model.source()?, formula.source()?, eps);
            cfg.time_limit = timeout.map(Duration::from_secs_f64);
            cfg.memory_limit = memory_limit.map(|mib| mib << 20);
            cfg.solver = solver.parse::<SolverChoice>()?;
            cfg.seed = seed;
            cfg.out = out;
            cfg.policy_out = policy_out;
            let output = check(&cfg)?;
            if matches!(cfg.solver, SolverChoice::Sarsop) {
                println!("{ROW_HEADER}");
            }
            println!("{}", output.row());
            Ok(output.exit_code())
        }
        Command::Automaton { formula, dot } => {
            print!("{}", automaton_text(&formula.source()?, dot)?);
            Ok(0)
        }
        Command::Mec { model, formula } => {
            print!("{}", mec_report(&model.source()?, &formula.source()?)?);
            Ok(0)
        }
        Command::Simulate {
            model,
            formula,
            policy,
            episodes,
            seed,
            max_steps,
            csv,
            out,
        } => {
            let cfg = SimulateConfig {
                model: model.source()?,
                formula: formula.source()?,
                policy,
                episodes,
                seed,
                max_steps,
            };
            let (summary, outcomes) = simulate(&cfg)?;
            let json = serde_json::to_string_pretty(&summary)?;
            write(&csv, &cumulative_csv(&outcomes))?;
            write(&out, &json)?;
            println!("{json}");
            if summary.estimate.cutoff_fraction >= 0.01 {
                eprintln!(
                    "warning: {:.1}% of episodes hit the step cap",
                    100.0 * summary.estimate.cutoff_fraction
                );
            }
            Ok(0)
        }
        Command::Bench {
            suite,
            manifest,
            out,
        } => {
            let manifest = match manifest {
                Some(path) => Manifest::parse(
                    &std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?,
                )?,
                None => Manifest::builtin(),
            };
            let threads = match std::env::var("POMCHECK_THREADS") {
                Ok(v) => Some(
                    v.parse::<usize>()
                        .context("POMCHECK_THREADS must be a positive integer")?,
                ),
                Err(_) => None,
            };
            let rows = run_suite(manifest.suite(&suite)?, threads)?;
            write(&out, &serde_json::to_string_pretty(&rows)?)?;
            print!("{}", format_table(&rows));
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<PipelineError>()
                .map_or(1, PipelineError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
