// Saves a policy as JSON, loads it back and queries actions; a policy is
// refused for a product it was not computed on.

use anyhow::{ensure, Result};
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{build_rocksample, rocksample_preset};
use pomcheck::product::reachability_product;
use pomcheck::solver::{solve_sarsop, PolicyFile, SarsopConfig};

pub fn run_example() -> Result<()> {
    let model = build_rocksample(&rocksample_preset(4, 2)?)?;
    let product = |f: &str| -> Result<_> {
        Ok(reachability_product(
            model.clone(),
            ltl_to_dra(&parse_ltl(f)?)?,
        )?)
    };
    let p = product("F good & F exit")?;
    let b0 = p.initial_sparse();
    let s = solve_sarsop(&p, &b0, &SarsopConfig::new(1e-3))?;

    let json = PolicyFile::new(&p, &s).to_json();
    println!("policy file: {} bytes", json.len());
    let loaded = PolicyFile::from_json(&json)?;
    loaded.check_matches(&p)?;
    println!("digest {}", loaded.product_meta.digest);
    println!("first action: {}", loaded.action(&b0));

    let other = product("F good")?;
    let refused = loaded.check_matches(&other);
    ensure!(
        refused.is_err(),
        "a policy must not apply to another product"
    );
    println!("other product: {}", refused.unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
