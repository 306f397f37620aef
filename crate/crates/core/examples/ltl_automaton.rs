// Translates an LTL formula into a deterministic Rabin automaton and prints
// it in HOA and dot form.

use anyhow::Result;
use pomcheck::ltl::{ltl_to_dra, parse_hoa, parse_ltl, to_nnf, write_hoa};

pub fn run_example() -> Result<()> {
    let f = parse_ltl("G !A & F B")?;
    println!("formula: {f}");
    println!("nnf:     {}", to_nnf(&f)?);
    let dra = ltl_to_dra(&f)?;
    println!(
        "{} states, {} Rabin pair(s), complete: {}",
        dra.num_states(),
        dra.pairs().len(),
        dra.is_complete()
    );
    let hoa = write_hoa(&dra);
    print!("{hoa}");
    // the HOA text reads back to the same automaton
    assert_eq!(write_hoa(&parse_hoa(&hoa, false)?), hoa);

    let word = |props: &[&str]| dra.letter(props.iter().copied());
    let accepted = dra.accepts(&[word(&[])], &[word(&["B"])])?;
    println!("accepts {{}} ({{B}})^w: {accepted}");
    println!("{}", dra.to_dot());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
