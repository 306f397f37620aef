//! The solver's working model: live product states that are neither success
//! states nor unable to reach one.
//!
//! Success states have value 1 and states that cannot reach a success state
//! have value 0 under every policy, so both are folded into two implicit
//! absorbing outcomes. Beliefs are normalized over the remaining states and
//! the probability of jumping to the goal outcome is carried separately.

use std::collections::HashMap;

use crate::product::{can_reach, max_reachability_mdp, Mdp, ProductPomdp, SparseBelief};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Slot {
    Open(usize),
    Goal,
    Zero,
}

pub(crate) struct ReducedModel<'a> {
    pub product: &'a ProductPomdp,
    /// Product index of each reduced state.
    pub states: Vec<usize>,
    pub slot: Vec<Slot>,
    /// Probability of entering a success state, per `s * na + a`.
    pub goal: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub na: usize,
    pub no: usize,
}

/// One action's outcome from a belief: goal probability plus one normalized
/// child belief per observation with positive probability.
#[derive(Debug, Clone)]
pub(crate) struct Step {
    pub goal: f64,
    pub branches: Vec<(usize, f64, SparseBelief)>,
}

/// Reusable dense buffers for belief arithmetic.
pub(crate) struct Scratch {
    dense: Vec<f64>,
    touched: Vec<usize>,
    per_obs: Vec<Vec<(usize, f64)>>,
}

impl Scratch {
    pub fn new(n: usize, no: usize) -> Self {
        Self {
            dense: vec![0.0; n],
            touched: Vec::new(),
            per_obs: vec![Vec::new(); no],
        }
    }
}

impl<'a> ReducedModel<'a> {
    pub fn new(product: &'a ProductPomdp) -> Self {
        let n = product.num_states();
        let na = product.num_actions();
        let mdp = product.underlying_mdp();
        let target: Vec<bool> = (0..n).map(|i| product.is_success(i)).collect();
        let reach = can_reach(mdp, &target);
        let mut slot = vec![Slot::Zero; n];
        let mut states = Vec::new();
        for i in 0..n {
            if target[i] {
                slot[i] = Slot::Goal;
            } else if reach[i] && product.pair(i).is_some() {
                slot[i] = Slot::Open(states.len());
                states.push(i);
            }
        }
        let mut goal = vec![0.0; states.len() * na];
        let mut rows = Vec::with_capacity(states.len() * na);
        for (r, &i) in states.iter().enumerate() {
            for a in 0..na {
                let mut row = Vec::new();
                for &(j, p) in product.transition_row(i, a) {
                    match slot[j] {
                        Slot::Open(k) => row.push((k, p)),
                        Slot::Goal => goal[r * na + a] += p,
                        Slot::Zero => {}
                    }
                }
                row.sort_unstable_by_key(|&(k, _)| k);
                rows.push(row);
            }
        }
        Self {
            product,
            states,
            slot,
            goal,
            rows,
            na,
            no: product.num_observations(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.rows[s * self.na + a]
    }

    #[inline]
    pub fn goal(&self, s: usize, a: usize) -> f64 {
        self.goal[s * self.na + a]
    }

    #[inline]
    pub fn obs_row(&self, a: usize, s: usize) -> &[f64] {
        self.product.observation_row(a, self.states[s])
    }

    /// The reduced model as an MDP with two extra absorbing states: goal at
    /// index `n`, zero at `n + 1`.
    pub fn as_mdp(&self) -> Mdp {
        let n = self.len();
        let (goal, zero) = (n, n + 1);
        let mut rows = Vec::with_capacity((n + 2) * self.na);
        for s in 0..n {
            for a in 0..self.na {
                let mut row = self.row(s, a).to_vec();
                let g = self.goal(s, a);
                let rest = 1.0 - g - row.iter().map(|&(_, p)| p).sum::<f64>();
                if g > 0.0 {
                    row.push((goal, g));
                }
                if rest > 1e-15 {
                    row.push((zero, rest));
                }
                rows.push(row);
            }
        }
        for t in [goal, zero] {
            for _ in 0..self.na {
                rows.push(vec![(t, 1.0)]);
            }
        }
        Mdp::new(n + 2, self.na, rows)
    }

    /// Maximal reachability value of each reduced state.
    pub fn mdp_values(&self) -> Vec<f64> {
        let n = self.len();
        let mut target = vec![false; n + 2];
        target[n] = true;
        let mut v = max_reachability_mdp(&self.as_mdp(), &target);
        v.truncate(n);
        v
    }

    /// Splits a product belief into (goal mass, open mass, normalized open belief).
    pub fn split(&self, belief: &[(usize, f64)]) -> (f64, f64, SparseBelief) {
        let mut goal = 0.0;
        let mut open = Vec::new();
        for &(i, p) in belief {
            match self.slot[i] {
                Slot::Open(k) => open.push((k, p)),
                Slot::Goal => goal += p,
                Slot::Zero => {}
            }
        }
        open.sort_unstable_by_key(|&(k, _)| k);
        let mass: f64 = open.iter().map(|&(_, p)| p).sum();
        if mass > 0.0 {
            open.iter_mut().for_each(|(_, p)| *p /= mass);
        }
        (goal, mass, open)
    }

    /// Expands a normalized belief under action `a`.
    pub fn step(&self, b: &[(usize, f64)], a: usize, scratch: &mut Scratch) -> Step {
        let mut goal = 0.0;
        for &(s, w) in b {
            goal += w * self.goal(s, a);
            for &(sp, p) in self.row(s, a) {
                if scratch.dense[sp] == 0.0 {
                    scratch.touched.push(sp);
                }
                scratch.dense[sp] += w * p;
            }
        }
        scratch.touched.sort_unstable();
        for &sp in &scratch.touched {
            let w = scratch.dense[sp];
            scratch.dense[sp] = 0.0;
            if w <= 0.0 {
                continue;
            }
            for (o, &po) in self.obs_row(a, sp).iter().enumerate() {
                if po > 0.0 {
                    scratch.per_obs[o].push((sp, w * po));
                }
            }
        }
        scratch.touched.clear();
        let mut branches = Vec::new();
        for (o, list) in scratch.per_obs.iter_mut().enumerate() {
            if list.is_empty() {
                continue;
            }
            let mass: f64 = list.iter().map(|&(_, p)| p).sum();
            if mass > 0.0 {
                let child: SparseBelief = list.iter().map(|&(s, p)| (s, p / mass)).collect();
                branches.push((o, mass, child));
            }
            list.clear();
        }
        Step { goal, branches }
    }

    /// Lifts a vector over reduced states to product states, using 1 for
    /// success states and 0 for the rest.
    pub fn lift(&self, values: &[f64]) -> Vec<f64> {
        self.slot
            .iter()
            .map(|s| match *s {
                Slot::Open(k) => values[k],
                Slot::Goal => 1.0,
                Slot::Zero => 0.0,
            })
            .collect()
    }
}

/// Key used to recognize repeated beliefs. Probabilities are quantized to
/// `1e-12` so that renormalization noise does not split identical beliefs.
pub(crate) fn belief_key(b: &[(usize, f64)]) -> Vec<(u32, i64)> {
    b.iter()
        .map(|&(s, p)| (s as u32, (p * 1e12).round() as i64))
        .filter(|&(_, q)| q != 0)
        .collect()
}

pub(crate) type BeliefIndex = HashMap<Vec<(u32, i64)>, usize>;

#[inline]
pub(crate) fn dot(alpha: &[f64], b: &[(usize, f64)]) -> f64 {
    b.iter().map(|&(s, p)| alpha[s] * p).sum()
}
