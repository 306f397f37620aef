// Checks a computed policy by simulation: the estimate should fall inside
// the solver's bounds up to sampling error.

use anyhow::{ensure, Result};
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{build_rocksample, rocksample_preset};
use pomcheck::product::reachability_product;
use pomcheck::sim::{default_max_steps, estimate, rollout};
use pomcheck::solver::{solve_sarsop, SarsopConfig};

pub fn run_example() -> Result<()> {
    let model = build_rocksample(&rocksample_preset(4, 2)?)?;
    let p = reachability_product(model, ltl_to_dra(&parse_ltl("F good & F exit & G !bad")?)?)?;
    let b0 = p.initial_sparse();
    let s = solve_sarsop(&p, &b0, &SarsopConfig::new(1e-3))?;
    let policy = &s.bounds.lower;

    let episode = rollout(&p, policy, &b0, 7, 200, true)?;
    println!(
        "one episode: {:?} after {} steps",
        episode.result, episode.steps
    );
    for step in episode.trace.unwrap_or_default() {
        println!(
            "  {} --a{}--> o{}",
            p.state_name(step.state),
            step.action,
            step.observation
        );
    }

    let mc = estimate(
        &p,
        policy,
        &b0,
        10_000,
        1,
        default_max_steps(p.num_states()),
    )?;
    println!(
        "p_hat {:.4} ± {:.4} against [{:.4}, {:.4}], cutoffs {:.2}%",
        mc.p_hat,
        mc.stderr,
        s.result.lb,
        s.upper_bound(),
        100.0 * mc.cutoff_fraction
    );
    ensure!(
        mc.consistent_with(s.result.lb, s.result.eps),
        "estimate outside the bounds"
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
