//! Alpha-vector policies and their JSON file format.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ltl::write_hoa;
use crate::model::write_model;
use crate::product::ProductPomdp;

use super::{AlphaVector, Solution};

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error(
        "policy was computed for a different product (expected digest {expected}, found {found})"
    )]
    PolicyModelMismatch { expected: String, found: String },
    #[error("policy has no alpha vectors")]
    Empty,
    #[error("malformed policy file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Identity of a product model, embedded in policy files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductMeta {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_observations: usize,
    pub label_hash: String,
    pub automaton_hash: String,
    pub model_hash: String,
    pub digest: String,
}

fn sha(bytes: impl AsRef<[u8]>) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn product_meta(p: &ProductPomdp) -> ProductMeta {
    let base = p.base();
    let mut labels = String::new();
    for s in 0..base.num_states() {
        for a in 0..base.num_actions() {
            let letter: Vec<&str> = base.letter(s, a).into_iter().collect();
            labels.push_str(&format!("{s} {a} {}\n", letter.join(",")));
        }
    }
    let label_hash = sha(labels);
    let automaton_hash = sha(write_hoa(p.automaton()));
    let model_hash = sha(write_model(base));
    let digest = sha(format!(
        "{} {} {} {label_hash} {automaton_hash} {model_hash}",
        p.num_states(),
        p.num_actions(),
        p.num_observations()
    ));
    ProductMeta {
        num_states: p.num_states(),
        num_actions: p.num_actions(),
        num_observations: p.num_observations(),
        label_hash,
        automaton_hash,
        model_hash,
        digest,
    }
}

/// Index of the alpha vector maximizing `α·b`. Near ties (within `1e-12`)
/// go to the lowest action index, then to the lowest vector index.
pub fn best_alpha(alphas: &[AlphaVector], b: &[(usize, f64)]) -> Option<usize> {
    let values: Vec<f64> = alphas.iter().map(|a| a.dot(b)).collect();
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..alphas.len())
        .filter(|&i| values[i] >= best - 1e-12)
        .min_by_key(|&i| (alphas[i].action, i))
}

/// Action of the alpha vector maximizing `α·b`, with the tie rule of
/// [`best_alpha`].
pub fn policy_action(alphas: &[AlphaVector], b: &[(usize, f64)]) -> Option<usize> {
    best_alpha(alphas, b).map(|i| alphas[i].action)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub states: usize,
    pub actions: Vec<usize>,
    pub vectors: Vec<AlphaVector>,
    pub product_meta: ProductMeta,
}

impl PolicyFile {
    pub fn new(p: &ProductPomdp, solution: &Solution) -> Self {
        Self {
            states: p.num_states(),
            actions: (0..p.num_actions()).collect(),
            vectors: solution.bounds.lower.clone(),
            product_meta: product_meta(p),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let file: Self = serde_json::from_str(text)?;
        if file.vectors.is_empty() {
            return Err(PolicyError::Empty);
        }
        Ok(file)
    }

    /// Fails unless the policy was computed for `p`.
    pub fn check_matches(&self, p: &ProductPomdp) -> Result<(), PolicyError> {
        let meta = product_meta(p);
        if meta != self.product_meta {
            return Err(PolicyError::PolicyModelMismatch {
                expected: meta.digest,
                found: self.product_meta.digest.clone(),
            });
        }
        Ok(())
    }

    pub fn action(&self, b: &[(usize, f64)]) -> usize {
        policy_action(&self.vectors, b).expect("nonempty policy")
    }
}
