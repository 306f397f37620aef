// Builds the drone surveillance domain and reports how much of the product
// is winnable and what the fully observable bound is.

use anyhow::Result;
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::build_drone;
use pomcheck::product::{max_reachability_mdp, reachability_product};

pub fn run_example() -> Result<()> {
    let model = build_drone(5)?;
    println!(
        "drone 5x5: {} states, {} actions, {} observations",
        model.num_states(),
        model.num_actions(),
        model.num_observations()
    );
    let p = reachability_product(model, ltl_to_dra(&parse_ltl("!det U B")?)?)?;
    println!(
        "product: {} states, {} success states",
        p.num_states(),
        p.success_set().len()
    );
    let target: Vec<bool> = (0..p.num_states()).map(|i| p.is_success(i)).collect();
    let v = max_reachability_mdp(p.underlying_mdp(), &target);
    let bound: f64 = p.initial_sparse().iter().map(|&(s, q)| q * v[s]).sum();
    println!("fully observable upper bound: {bound:.4}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
