//! LTL formulas, deterministic Rabin automata and HOA import/export.

pub mod dra;
pub mod formula;
pub mod hoa;
mod progression;

pub use dra::{ltl_to_dra, Dra, Letter, RabinPair};
pub use formula::{classify, parse_ltl, to_nnf, Fragment, LtlFormula};
pub use hoa::{parse_hoa, write_hoa};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtlError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("negation of `{0}` needs the release operator, which is not supported")]
    UnsupportedNegation(String),
    #[error("conjunct `{0}` is outside the supported fragments (co-safe, safe, G F p, F G p); translate it externally and pass the automaton as HOA")]
    UnsupportedFragment(String),
    #[error("lasso cycle must be nonempty")]
    EmptyCycle,
    #[error("automaton is not deterministic: {0}")]
    NotDeterministic(String),
    #[error("automaton is not complete: {0}")]
    NotComplete(String),
    #[error("unsupported acceptance condition `{0}`")]
    UnsupportedAcceptance(String),
    #[error("HOA: {0}")]
    Hoa(String),
    #[error("automaton: {0}")]
    Automaton(String),
}
