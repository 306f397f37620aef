//! Maximal reachability probabilities on MDPs.

use super::mdp::{maximal_end_components, Mdp};

const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 1_000_000;

/// Lower and upper approximations of `Pr^max(F target)` per state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ReachabilityBounds {
    pub fn gap(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }
}

/// States from which `target` is reachable under some policy.
pub fn can_reach(mdp: &Mdp, target: &[bool]) -> Vec<bool> {
    let pred = mdp.predecessors();
    let mut reach = target.to_vec();
    let mut stack: Vec<usize> = (0..mdp.num_states()).filter(|&s| target[s]).collect();
    while let Some(s) = stack.pop() {
        for &(p, _) in &pred[s] {
            if !reach[p] {
                reach[p] = true;
                stack.push(p);
            }
        }
    }
    reach
}

/// States grouped for iteration: each maximal end component among the
/// undecided states becomes one class whose choices are the actions leaving
/// it; every other undecided state is its own class.
pub(crate) struct Quotient {
    pub classes: Vec<Vec<(usize, usize)>>,
    pub members: Vec<Vec<usize>>,
    pub maybe: Vec<bool>,
}

impl Quotient {
    pub fn new(mdp: &Mdp, target: &[bool]) -> Self {
        let n = mdp.num_states();
        let na = mdp.num_actions();
        let reach = can_reach(mdp, target);
        let maybe: Vec<bool> = (0..n).map(|s| reach[s] && !target[s]).collect();
        let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut in_mec = vec![false; n];
        for mec in maximal_end_components(mdp, Some(&maybe)) {
            let mut choices = Vec::new();
            for (&s, enabled) in mec.states.iter().zip(&mec.actions) {
                in_mec[s] = true;
                choices.extend((0..na).filter(|a| !enabled.contains(a)).map(|a| (s, a)));
            }
            classes.push(choices);
            members.push(mec.states);
        }
        for s in (0..n).filter(|&s| maybe[s] && !in_mec[s]) {
            classes.push((0..na).map(|a| (s, a)).collect());
            members.push(vec![s]);
        }
        Self {
            classes,
            members,
            maybe,
        }
    }

    fn eval(mdp: &Mdp, v: &[f64], choices: &[(usize, usize)]) -> f64 {
        choices
            .iter()
            .map(|&(s, a)| mdp.row(s, a).iter().map(|&(sp, p)| p * v[sp]).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// One Gauss-Seidel sweep lowering `upper`; returns the largest decrease.
    pub fn sweep_upper(&self, mdp: &Mdp, upper: &mut [f64]) -> f64 {
        let mut delta: f64 = 0.0;
        for (choices, members) in self.classes.iter().zip(&self.members) {
            let hi = Self::eval(mdp, upper, choices);
            for &s in members {
                if hi < upper[s] {
                    delta = delta.max(upper[s] - hi);
                    upper[s] = hi;
                }
            }
        }
        delta
    }
}

/// Interval iteration for maximal reachability.
///
/// States that cannot reach the target are fixed to 0. End components among
/// the remaining states are collapsed so that iterating down from 1 has a
/// unique fixpoint; both sequences are iterated Gauss-Seidel style until
/// they are within `1e-10` of each other everywhere.
pub fn max_reachability_bounds(mdp: &Mdp, target: &[bool]) -> ReachabilityBounds {
    let n = mdp.num_states();
    let q = Quotient::new(mdp, target);
    let mut lower: Vec<f64> = (0..n).map(|s| if target[s] { 1.0 } else { 0.0 }).collect();
    let mut upper: Vec<f64> = (0..n)
        .map(|s| if target[s] || q.maybe[s] { 1.0 } else { 0.0 })
        .collect();
    for _ in 0..MAX_SWEEPS {
        let mut gap: f64 = 0.0;
        for (choices, members) in q.classes.iter().zip(&q.members) {
            let lo = Quotient::eval(mdp, &lower, choices);
            let hi = Quotient::eval(mdp, &upper, choices).min(1.0);
            for &s in members {
                lower[s] = lower[s].max(lo);
                upper[s] = upper[s].min(hi);
            }
            gap = gap.max(hi - lo);
        }
        if gap < TOLERANCE {
            break;
        }
    }
    ReachabilityBounds { lower, upper }
}

/// Maximal probability of eventually reaching `target`, accurate to `1e-10`.
///
/// The returned values are the upper approximation, so they never
/// underestimate the true probability beyond rounding.
pub fn max_reachability_mdp(mdp: &Mdp, target: &[bool]) -> Vec<f64> {
    max_reachability_bounds(mdp, target).upper
}
