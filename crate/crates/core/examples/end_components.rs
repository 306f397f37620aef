// Builds the product of a grid world with a Rabin automaton and lists its
// maximal end components and the states from which the formula is won.

use anyhow::Result;
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{build_gridworld, gridworld_benchmark_labels};
use pomcheck::product::{
    build_product, format_mecs, max_reachability_mdp, maximal_end_components, success_states,
};

pub fn run_example() -> Result<()> {
    let grid = build_gridworld(4, 0.7, &gridworld_benchmark_labels(4))?;
    let dra = ltl_to_dra(&parse_ltl("!C U A & !C U B")?)?;
    let p = build_product(grid, dra)?;
    println!("{} product states ({} live)", p.num_states(), p.num_live());

    let mecs = maximal_end_components(p.underlying_mdp(), None);
    print!("{}", format_mecs(&p, &mecs));

    let success = success_states(&p);
    println!("{} success states", success.len());
    let target: Vec<bool> = (0..p.num_states()).map(|i| success.contains(&i)).collect();
    let values = max_reachability_mdp(p.underlying_mdp(), &target);
    let b0 = p.initial_sparse();
    let full_info: f64 = b0.iter().map(|&(s, q)| q * values[s]).sum();
    println!("fully observable value from the initial belief: {full_info:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
