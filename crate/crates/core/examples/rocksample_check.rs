// Bounds the probability of sampling a good rock and leaving on a 4×4
// rock sample instance, with and without the safety conjunct.

use std::time::Duration;

use anyhow::Result;
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{build_rocksample, rocksample_preset};
use pomcheck::product::reachability_product;
use pomcheck::solver::{solve_sarsop, SarsopConfig};

pub fn run_example() -> Result<()> {
    let model = build_rocksample(&rocksample_preset(4, 2)?)?;
    for formula in ["G !bad", "F good & F exit", "F good & F exit & G !bad"] {
        let p = reachability_product(model.clone(), ltl_to_dra(&parse_ltl(formula)?)?)?;
        let mut cfg = SarsopConfig::new(1e-3);
        cfg.time_limit = Some(Duration::from_secs(60));
        let s = solve_sarsop(&p, &p.initial_sparse(), &cfg)?;
        let r = &s.result;
        println!(
            "{formula:<28} LB {:.4}  UB {:.4}  |Gamma| {:>3}  {:?} after {} trials",
            r.lb,
            s.upper_bound(),
            r.num_alpha,
            r.status,
            s.trials
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
