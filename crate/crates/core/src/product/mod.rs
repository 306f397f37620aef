//! Product construction, end component analysis and MDP reachability.

pub mod construct;
pub mod mdp;
pub mod reach;

pub use construct::{
    build_product, reachability_product, success_states, ProductPomdp, SparseBelief,
};
pub use mdp::{maximal_end_components, strongly_connected_components, EndComponent, Mdp};
pub use reach::{can_reach, max_reachability_bounds, max_reachability_mdp, ReachabilityBounds};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProductError {
    #[error("automaton propositions missing from the model labels: {}", .0.join(", "))]
    PropositionMismatch(Vec<String>),
}

/// One line per MEC: its states and, per state, the enabled actions.
pub fn format_mecs(p: &ProductPomdp, mecs: &[EndComponent]) -> String {
    let mut out = String::new();
    for (k, mec) in mecs.iter().enumerate() {
        let body: Vec<String> = mec
            .states
            .iter()
            .zip(&mec.actions)
            .map(|(&s, acts)| {
                let acts: Vec<String> = acts.iter().map(|a| a.to_string()).collect();
                format!("{}:{}[{}]", s, p.state_name(s), acts.join(","))
            })
            .collect();
        out.push_str(&format!("mec {k}: {}\n", body.join(" ")));
    }
    out
}
