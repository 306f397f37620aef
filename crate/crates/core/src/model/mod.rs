//! POMDP data model, validation, the belief update, the text model format and
//! the benchmark domain builders.

pub mod domains;
pub mod format;
pub mod pomdp;

pub use format::{parse_model, write_model};
pub use pomdp::{Belief, TabularPomdp, Violation};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model dimensions must be positive")]
    EmptyDimension,
    #[error("{kind} index {index} out of range (< {bound})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("expected a vector of length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a probability distribution (sum = {sum})")]
    NotADistribution { sum: f64 },
    #[error("observation {observation} has zero probability after action {action}")]
    ImpossibleObservation { action: usize, observation: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate entry {entry}")]
    DuplicateEntry { line: usize, entry: String },
    #[error("labeled cell {cell} outside a grid of {cells} cells")]
    LabelOutOfRange { cell: usize, cells: usize },
    #[error("rock at ({x}, {y}) is off the grid or duplicated")]
    RockOffGrid { x: usize, y: usize },
    #[error("invalid domain parameter: {0}")]
    InvalidParameter(String),
    #[error("model failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}
