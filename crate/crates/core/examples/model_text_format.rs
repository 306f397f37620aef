// Loads a small POMDP from the text format, checks it, and writes it back.

use anyhow::Result;
use pomcheck::model::{parse_model, write_model};

/// A two-door guessing game. Listening reports the goal door correctly 85%
/// of the time; opening the wrong door is fatal.
const TIGER: &str = "\
# doors 0 and 1 hide the goal; 2 is the goal, 3 the trap
states: 4
actions: 3
observations: 2
start: 0.5 0.5 0 0
T: 0 : 0 : 0 : 1.0
T: 0 : 1 : 1 : 1.0
T: 1 : 0 : 2 : 1.0
T: 1 : 1 : 3 : 1.0
T: 2 : 0 : 3 : 1.0
T: 2 : 1 : 2 : 1.0
T: 0 : 2 : 2 : 1.0
T: 1 : 2 : 2 : 1.0
T: 2 : 2 : 2 : 1.0
T: 0 : 3 : 3 : 1.0
T: 1 : 3 : 3 : 1.0
T: 2 : 3 : 3 : 1.0
O: 0 : 0 : 0 : 0.85
O: 0 : 0 : 1 : 0.15
O: 0 : 1 : 0 : 0.15
O: 0 : 1 : 1 : 0.85
O: 0 : 2 : 0 : 1.0
O: 0 : 3 : 0 : 1.0
O: 1 : 0 : 0 : 1.0
O: 1 : 1 : 0 : 1.0
O: 1 : 2 : 0 : 1.0
O: 1 : 3 : 0 : 1.0
O: 2 : 0 : 0 : 1.0
O: 2 : 1 : 0 : 1.0
O: 2 : 2 : 0 : 1.0
O: 2 : 3 : 0 : 1.0
label: 2 : goal
label: 3 : trap
";

pub fn run_example() -> Result<()> {
    let model = parse_model(TIGER)?;
    println!(
        "{} states, {} actions, {} observations, propositions {:?}",
        model.num_states(),
        model.num_actions(),
        model.num_observations(),
        model.propositions()
    );
    let text = write_model(&model);
    assert_eq!(write_model(&parse_model(&text)?), text);
    print!("{text}");

    // a missing row is reported rather than silently accepted
    let broken = TIGER.replace("T: 0 : 0 : 0 : 1.0\n", "");
    match parse_model(&broken) {
        Ok(_) => anyhow::bail!("the broken model should not validate"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
