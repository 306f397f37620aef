//! Bounds on the maximal satisfaction probability: the point-based search,
//! QMDP, FIB and fixed-grid baselines, and policy extraction.

mod baselines;
pub mod policy;
mod reduced;
mod sarsop;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::product::{ProductPomdp, SparseBelief};

pub use baselines::grid_size;
pub use policy::{best_alpha, policy_action, product_meta, PolicyError, PolicyFile, ProductMeta};

use reduced::ReducedModel;

/// Default cap on the number of fixed-grid points.
pub const DEFAULT_GRID_CAP: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },
    #[error("the product has no reachability reward attached")]
    RewardNotAttached,
    #[error("precision must be positive, got {0}")]
    InvalidPrecision(f64),
    #[error("grid resolution must be at least 1")]
    InvalidResolution,
    #[error("belief refers to state {state} of a {states}-state product")]
    BeliefOutOfRange { state: usize, states: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Timeout,
    MemoryLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarsopConfig {
    pub eps: f64,
    pub time_limit: Option<Duration>,
    /// Approximate byte budget for the search tree and alpha vectors.
    pub memory_limit: Option<usize>,
    pub max_depth: usize,
}

impl SarsopConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            time_limit: None,
            memory_limit: None,
            max_depth: 1000,
        }
    }
}

/// A linear function over product states, tagged with the action it prescribes.
///
/// Lower-bound vectors also carry `next`, the index of the vector to follow
/// after each observation; executing these links from a vector achieves at
/// least its values. Upper-bound vectors leave it empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub action: usize,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub next: Vec<usize>,
}

impl AlphaVector {
    pub fn dot(&self, b: &[(usize, f64)]) -> f64 {
        b.iter().map(|&(s, p)| self.values[s] * p).sum()
    }
}

/// `max_α α·b` over a set of alpha vectors.
pub fn alpha_value(alphas: &[AlphaVector], b: &[(usize, f64)]) -> f64 {
    alphas
        .iter()
        .map(|a| a.dot(b))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Lower and upper bounds over product beliefs.
#[derive(Debug, Clone)]
pub struct ValueBounds {
    pub lower: Vec<AlphaVector>,
    /// Sawtooth points `(b_i, v_i)` over product states.
    pub upper_points: Vec<(SparseBelief, f64)>,
    /// Corner value of each product state.
    pub corners: Vec<f64>,
    /// FIB alphas, also an upper bound everywhere.
    pub fib: Vec<AlphaVector>,
    pub gap_at_root: f64,
}

impl ValueBounds {
    pub fn lower_value(&self, b: &[(usize, f64)]) -> f64 {
        alpha_value(&self.lower, b)
    }

    pub fn upper_value(&self, b: &[(usize, f64)]) -> f64 {
        let corner: f64 = b.iter().map(|&(s, p)| self.corners[s] * p).sum();
        let mut best = corner;
        if !self.fib.is_empty() {
            best = best.min(alpha_value(&self.fib, b));
        }
        let lookup: std::collections::HashMap<usize, f64> = b.iter().copied().collect();
        for (bi, vi) in &self.upper_points {
            let ci: f64 = bi.iter().map(|&(s, p)| self.corners[s] * p).sum();
            let ratio = bi
                .iter()
                .map(|&(s, q)| lookup.get(&s).copied().unwrap_or(0.0) / q)
                .fold(f64::INFINITY, f64::min);
            if ratio > 0.0 && ratio.is_finite() {
                best = best.min(corner - ratio * (ci - vi));
            }
        }
        best
    }
}

/// Summary record of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub lb: f64,
    pub eps: f64,
    pub num_alpha: usize,
    pub mec_seconds: f64,
    pub solve_seconds: f64,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub bounds: ValueBounds,
    pub result: CheckResult,
    /// Root `(lower, upper)` after initialization and after every trial.
    pub history: Vec<(f64, f64)>,
    pub trials: usize,
}

impl Solution {
    pub fn upper_bound(&self) -> f64 {
        self.result.lb + self.result.eps
    }
}

fn check_belief(p: &ProductPomdp, b: &[(usize, f64)]) -> Result<(), SolverError> {
    match b.iter().find(|&&(s, _)| s >= p.num_states()) {
        Some(&(state, _)) => Err(SolverError::BeliefOutOfRange {
            state,
            states: p.num_states(),
        }),
        None => Ok(()),
    }
}

fn lift_all(
    m: &ReducedModel,
    alphas: impl IntoIterator<Item = (usize, Vec<f64>)>,
) -> Vec<AlphaVector> {
    alphas
        .into_iter()
        .map(|(action, v)| AlphaVector {
            action,
            values: m.lift(&v),
            next: Vec::new(),
        })
        .collect()
}

/// Point-based search for `Pr^max(b0 ⊨ φ)` on a product with the
/// reachability reward attached.
pub fn solve_sarsop(
    p: &ProductPomdp,
    b0: &[(usize, f64)],
    cfg: &SarsopConfig,
) -> Result<Solution, SolverError> {
    if !p.has_reward() {
        return Err(SolverError::RewardNotAttached);
    }
    if !(cfg.eps > 0.0) {
        return Err(SolverError::InvalidPrecision(cfg.eps));
    }
    check_belief(p, b0)?;
    let start = Instant::now();
    let m = ReducedModel::new(p);
    let (goal, mass, open) = m.split(b0);

    if m.len() == 0 || mass <= 0.0 {
        let lower = vec![AlphaVector {
            action: 0,
            values: m.lift(&vec![0.0; m.len()]),
            next: vec![0; p.num_observations()],
        }];
        let corners = m.lift(&vec![1.0; m.len()]);
        return Ok(Solution {
            bounds: ValueBounds {
                lower,
                upper_points: Vec::new(),
                corners,
                fib: Vec::new(),
                gap_at_root: 0.0,
            },
            result: CheckResult {
                lb: goal,
                eps: 0.0,
                num_alpha: 1,
                mec_seconds: 0.0,
                solve_seconds: start.elapsed().as_secs_f64(),
                status: Status::Converged,
            },
            history: vec![(goal, goal)],
            trials: 0,
        });
    }

    let outcome = sarsop::Search::new(&m, cfg.clone()).run(open, mass, goal);
    let lower: Vec<AlphaVector> = outcome
        .alphas
        .actions
        .iter()
        .zip(outcome.alphas.vectors)
        .zip(outcome.alphas.next)
        .map(|((&action, v), next)| AlphaVector {
            action,
            values: m.lift(&v),
            next,
        })
        .collect();
    let fib = lift_all(&m, outcome.fib);
    let corners = m.lift(&outcome.corners);
    let upper_points = outcome
        .points
        .into_iter()
        .map(|(b, v)| (b.into_iter().map(|(s, q)| (m.states[s], q)).collect(), v))
        .collect();
    let lb = goal + mass * outcome.lower;
    let ub = goal + mass * outcome.upper;
    let eps = (ub - lb).max(0.0);
    Ok(Solution {
        result: CheckResult {
            lb,
            eps,
            num_alpha: lower.len(),
            mec_seconds: 0.0,
            solve_seconds: start.elapsed().as_secs_f64(),
            status: outcome.status,
        },
        bounds: ValueBounds {
            lower,
            upper_points,
            corners,
            fib,
            gap_at_root: eps,
        },
        history: outcome.history,
        trials: outcome.trials,
    })
}

/// QMDP upper bound alphas, one per action.
pub fn solve_qmdp(p: &ProductPomdp) -> Vec<AlphaVector> {
    let m = ReducedModel::new(p);
    let v = m.mdp_values();
    lift_all(&m, baselines::qmdp_alphas(&m, &v))
}

/// Fast informed bound alphas, one per action.
pub fn solve_fib(p: &ProductPomdp) -> Vec<AlphaVector> {
    let m = ReducedModel::new(p);
    let v = m.mdp_values();
    let q = baselines::qmdp_alphas(&m, &v);
    lift_all(&m, baselines::fib_alphas(&m, q))
}

/// Fixed-grid upper bound at `b0` with resolution `m` and the default cap.
pub fn solve_lovejoy(p: &ProductPomdp, b0: &[(usize, f64)], m: usize) -> Result<f64, SolverError> {
    solve_lovejoy_capped(p, b0, m, DEFAULT_GRID_CAP)
}

pub fn solve_lovejoy_capped(
    p: &ProductPomdp,
    b0: &[(usize, f64)],
    m: usize,
    cap: u128,
) -> Result<f64, SolverError> {
    if m == 0 {
        return Err(SolverError::InvalidResolution);
    }
    check_belief(p, b0)?;
    let model = ReducedModel::new(p);
    let (goal, mass, open) = model.split(b0);
    if mass <= 0.0 {
        return Ok(goal);
    }
    let corners = model.mdp_values();
    Ok(goal + mass * baselines::lovejoy_value(&model, &corners, &open, m, cap)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::{ltl_to_dra, parse_ltl, Dra, RabinPair};
    use crate::model::TabularPomdp;
    use crate::product::reachability_product;
    use std::collections::BTreeSet;

    fn all_accepting() -> Dra {
        Dra::new(
            vec![],
            1,
            0,
            vec![Some(0)],
            vec![RabinPair {
                fin: BTreeSet::new(),
                inf: BTreeSet::from([0]),
            }],
        )
        .unwrap()
    }

    /// Two hidden doors; `listen` is noisy, opening the right door reaches `goal`.
    fn tiger() -> TabularPomdp {
        // states: 0 left, 1 right, 2 goal, 3 eaten
        let mut m = TabularPomdp::new(4, 3, 2).unwrap();
        for s in 0..2 {
            m.set_transition(s, 0, s, 1.0).unwrap();
            m.set_transition(s, 1, if s == 0 { 2 } else { 3 }, 1.0)
                .unwrap();
            m.set_transition(s, 2, if s == 1 { 2 } else { 3 }, 1.0)
                .unwrap();
        }
        m.mark_terminal(2).unwrap();
        m.mark_terminal(3).unwrap();
        for a in 0..3 {
            for s in 0..4 {
                let (o0, o1) = match (a, s) {
                    (0, 0) => (0.85, 0.15),
                    (0, 1) => (0.15, 0.85),
                    _ => (0.5, 0.5),
                };
                m.set_observation(a, s, 0, o0).unwrap();
                m.set_observation(a, s, 1, o1).unwrap();
            }
        }
        m.add_label(2, "goal").unwrap();
        m.set_initial_belief(vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        m
    }

    #[test]
    fn success_point_mass_is_exact() {
        let mut m = TabularPomdp::new(1, 1, 1).unwrap();
        m.set_transition(0, 0, 0, 1.0).unwrap();
        m.set_observation(0, 0, 0, 1.0).unwrap();
        let p = reachability_product(m, all_accepting()).unwrap();
        let s = solve_sarsop(&p, &p.initial_sparse(), &SarsopConfig::new(1e-3)).unwrap();
        assert_eq!(
            (s.result.lb, s.result.eps, s.result.num_alpha),
            (1.0, 0.0, 1)
        );
    }

    #[test]
    fn empty_success_set_is_zero() {
        let dra = ltl_to_dra(&parse_ltl("F goal & G !goal").unwrap()).unwrap();
        let p = reachability_product(tiger(), dra).unwrap();
        let s = solve_sarsop(&p, &p.initial_sparse(), &SarsopConfig::new(1e-3)).unwrap();
        assert_eq!((s.result.lb, s.result.eps), (0.0, 0.0));
    }

    #[test]
    fn listening_pays_off_in_the_limit() {
        // with unlimited listening the goal probability approaches 1
        let dra = ltl_to_dra(&parse_ltl("F goal").unwrap()).unwrap();
        let p = reachability_product(tiger(), dra).unwrap();
        let b0 = p.initial_sparse();
        let s = solve_sarsop(&p, &b0, &SarsopConfig::new(1e-2)).unwrap();
        assert_eq!(s.result.status, Status::Converged);
        assert!(s.result.lb > 0.98, "{:?}", s.result);
        for w in s.history.windows(2) {
            assert!(w[1].0 >= w[0].0 - 1e-9 && w[1].1 <= w[0].1 + 1e-9);
        }
        let qmdp = alpha_value(&solve_qmdp(&p), &b0);
        let fib = alpha_value(&solve_fib(&p), &b0);
        assert!(qmdp >= fib - 1e-9 && fib >= s.upper_bound() - 1e-9);
        for m in 1..=4 {
            assert!(solve_lovejoy(&p, &b0, m).unwrap() >= s.result.lb - 1e-9);
        }
    }
}
