// Compares the upper bounds of the QMDP, FIB and fixed-grid baselines with
// the point-based bounds on a small grid world.

use std::time::Duration;

use anyhow::Result;
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{build_gridworld, gridworld_benchmark_labels};
use pomcheck::product::reachability_product;
use pomcheck::solver::{
    alpha_value, grid_size, solve_fib, solve_lovejoy, solve_qmdp, solve_sarsop, SarsopConfig,
};

pub fn run_example() -> Result<()> {
    let grid = build_gridworld(3, 0.7, &gridworld_benchmark_labels(3))?;
    let p = reachability_product(grid, ltl_to_dra(&parse_ltl("!C U A & !C U B")?)?)?;
    let b0 = p.initial_sparse();

    println!("QMDP        {:.4}", alpha_value(&solve_qmdp(&p), &b0));
    println!("FIB         {:.4}", alpha_value(&solve_fib(&p), &b0));
    for m in 1..=2 {
        println!(
            "Lovejoy m={m} {:.4}  ({} grid points)",
            solve_lovejoy(&p, &b0, m)?,
            grid_size(p.num_states(), m)
        );
    }
    let mut cfg = SarsopConfig::new(1e-3);
    cfg.time_limit = Some(Duration::from_secs(10));
    let s = solve_sarsop(&p, &b0, &cfg)?;
    println!("point-based [{:.4}, {:.4}]", s.result.lb, s.upper_bound());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
