// Runs the fast cases of the shipped rock sample suite and prints the
// comparison table.

use anyhow::Result;
use pomcheck::pipeline::bench::{format_table, run_suite, Manifest};

pub fn run_example() -> Result<()> {
    let manifest = Manifest::builtin();
    let cases: Vec<_> = manifest
        .suite("rocksample-small")?
        .iter()
        .filter(|c| c.size == 4)
        .cloned()
        .collect();
    let rows = run_suite(&cases, Some(2))?;
    print!("{}", format_table(&rows));
    println!("{}", serde_json::to_string_pretty(&rows[0])?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
