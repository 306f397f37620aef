//! Tabular POMDP representation, validation and the Bayes belief update.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ModelError;

/// Tolerance used when checking that probability rows sum to one.
pub const ROW_TOLERANCE: f64 = 1e-9;

/// Normalizers at or below this value make an observation impossible.
pub const IMPOSSIBLE_OBSERVATION: f64 = 1e-12;

/// A finite POMDP with sparse transitions and dense observation tables.
///
/// Transition rows are stored per `(s, a)` as `(s', p)` pairs sorted by
/// successor. Observation probabilities are stored row-major as
/// `[a][s'][o]`. Labels are attached to states; `action_labels` holds
/// propositions that only hold when a given action is taken in a given
/// state (the rock sample `good`/`bad` events).
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPomdp {
    num_states: usize,
    num_actions: usize,
    num_observations: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    observations: Vec<f64>,
    rewards: Option<Vec<f64>>,
    discount: f64,
    labels: Vec<BTreeSet<String>>,
    action_labels: BTreeMap<(usize, usize), BTreeSet<String>>,
    initial_belief: Vec<f64>,
    terminal: BTreeSet<usize>,
}

impl TabularPomdp {
    /// Creates an empty model: no transitions, no observations, uniform start.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        num_observations: usize,
    ) -> Result<Self, ModelError> {
        if num_states == 0 || num_actions == 0 || num_observations == 0 {
            return Err(ModelError::EmptyDimension);
        }
        Ok(Self {
            num_states,
            num_actions,
            num_observations,
            transitions: vec![Vec::new(); num_states * num_actions],
            observations: vec![0.0; num_actions * num_states * num_observations],
            rewards: None,
            discount: 1.0,
            labels: vec![BTreeSet::new(); num_states],
            action_labels: BTreeMap::new(),
            initial_belief: vec![1.0 / num_states as f64; num_states],
            terminal: BTreeSet::new(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn set_discount(&mut self, discount: f64) {
        self.discount = discount;
    }

    fn check_state(&self, s: usize) -> Result<(), ModelError> {
        if s >= self.num_states {
            return Err(ModelError::IndexOutOfRange {
                kind: "state",
                index: s,
                bound: self.num_states,
            });
        }
        Ok(())
    }

    fn check_action(&self, a: usize) -> Result<(), ModelError> {
        if a >= self.num_actions {
            return Err(ModelError::IndexOutOfRange {
                kind: "action",
                index: a,
                bound: self.num_actions,
            });
        }
        Ok(())
    }

    fn check_observation(&self, o: usize) -> Result<(), ModelError> {
        if o >= self.num_observations {
            return Err(ModelError::IndexOutOfRange {
                kind: "observation",
                index: o,
                bound: self.num_observations,
            });
        }
        Ok(())
    }

    /// Replaces the successor distribution of `(s, a)`. Zero entries are dropped
    /// and repeated successors are summed.
    pub fn set_transition_row(
        &mut self,
        s: usize,
        a: usize,
        row: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.check_action(a)?;
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (next, p) in row {
            self.check_state(next)?;
            if p != 0.0 {
                *acc.entry(next).or_insert(0.0) += p;
            }
        }
        self.transitions[s * self.num_actions + a] = acc.into_iter().collect();
        Ok(())
    }

    /// Sets a single transition probability, keeping the row sorted.
    pub fn set_transition(
        &mut self,
        s: usize,
        a: usize,
        next: usize,
        p: f64,
    ) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.check_action(a)?;
        self.check_state(next)?;
        let row = &mut self.transitions[s * self.num_actions + a];
        match row.binary_search_by_key(&next, |&(n, _)| n) {
            Ok(i) if p == 0.0 => {
                row.remove(i);
            }
            Ok(i) => row[i].1 = p,
            Err(_) if p == 0.0 => {}
            Err(i) => row.insert(i, (next, p)),
        }
        Ok(())
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.num_actions + a]
    }

    pub fn transition(&self, s: usize, a: usize, next: usize) -> f64 {
        let row = self.transition_row(s, a);
        row.binary_search_by_key(&next, |&(n, _)| n)
            .map(|i| row[i].1)
            .unwrap_or(0.0)
    }

    pub fn set_observation(
        &mut self,
        a: usize,
        next: usize,
        o: usize,
        p: f64,
    ) -> Result<(), ModelError> {
        self.check_action(a)?;
        self.check_state(next)?;
        self.check_observation(o)?;
        let idx = self.obs_index(a, next) + o;
        self.observations[idx] = p;
        Ok(())
    }

    #[inline]
    fn obs_index(&self, a: usize, next: usize) -> usize {
        (a * self.num_states + next) * self.num_observations
    }

    /// `O(o | s', a)`.
    #[inline]
    pub fn observation(&self, a: usize, next: usize, o: usize) -> f64 {
        self.observations[self.obs_index(a, next) + o]
    }

    /// Full observation distribution emitted when landing in `next` after `a`.
    pub fn observation_row(&self, a: usize, next: usize) -> &[f64] {
        let i = self.obs_index(a, next);
        &self.observations[i..i + self.num_observations]
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    pub fn set_reward(&mut self, s: usize, a: usize, r: f64) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.check_action(a)?;
        let (ns, na) = (self.num_states, self.num_actions);
        self.rewards.get_or_insert_with(|| vec![0.0; ns * na])[s * na + a] = r;
        Ok(())
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards
            .as_ref()
            .map(|r| r[s * self.num_actions + a])
            .unwrap_or(0.0)
    }

    pub fn labels(&self, s: usize) -> &BTreeSet<String> {
        &self.labels[s]
    }

    pub fn add_label(&mut self, s: usize, prop: impl Into<String>) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.labels[s].insert(prop.into());
        Ok(())
    }

    /// Propositions that hold only while `a` is taken in `s`.
    pub fn action_labels(&self, s: usize, a: usize) -> Option<&BTreeSet<String>> {
        self.action_labels.get(&(s, a))
    }

    pub fn add_action_label(
        &mut self,
        s: usize,
        a: usize,
        prop: impl Into<String>,
    ) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.check_action(a)?;
        self.action_labels
            .entry((s, a))
            .or_default()
            .insert(prop.into());
        Ok(())
    }

    pub(crate) fn action_label_entries(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<String>)> {
        self.action_labels.iter()
    }

    /// Letter read by an automaton when `a` is taken in `s`: `L(s)` plus any
    /// action-scoped propositions.
    pub fn letter(&self, s: usize, a: usize) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.labels[s].iter().map(String::as_str).collect();
        if let Some(extra) = self.action_labels.get(&(s, a)) {
            out.extend(extra.iter().map(String::as_str));
        }
        out
    }

    /// Every proposition mentioned anywhere in the model.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.labels.iter().flatten().cloned().collect();
        out.extend(self.action_labels.values().flatten().cloned());
        out
    }

    pub fn initial_belief(&self) -> &[f64] {
        &self.initial_belief
    }

    pub fn set_initial_belief(&mut self, belief: Vec<f64>) -> Result<(), ModelError> {
        if belief.len() != self.num_states {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_states,
                found: belief.len(),
            });
        }
        self.initial_belief = belief;
        Ok(())
    }

    pub fn terminal_states(&self) -> &BTreeSet<usize> {
        &self.terminal
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal.contains(&s)
    }

    /// Flags `s` as terminal and makes it absorbing under every action.
    pub fn mark_terminal(&mut self, s: usize) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.terminal.insert(s);
        for a in 0..self.num_actions {
            self.transitions[s * self.num_actions + a] = vec![(s, 1.0)];
        }
        Ok(())
    }

    /// Flags `s` as terminal without touching its transition rows.
    pub(crate) fn insert_terminal_flag(&mut self, s: usize) -> Result<(), ModelError> {
        self.check_state(s)?;
        self.terminal.insert(s);
        Ok(())
    }

    /// Checks every model invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let row = self.transition_row(s, a);
                if let Some(&(next, p)) = row
                    .iter()
                    .find(|&&(_, p)| !(0.0..=1.0 + ROW_TOLERANCE).contains(&p))
                {
                    out.push(Violation::NegativeTransition {
                        state: s,
                        action: a,
                        next,
                        value: p,
                    });
                }
                let sum: f64 = row.iter().map(|&(_, p)| p).sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    out.push(Violation::TransitionRow {
                        state: s,
                        action: a,
                        residual: sum - 1.0,
                    });
                }
            }
        }
        for a in 0..self.num_actions {
            for next in 0..self.num_states {
                let row = self.observation_row(a, next);
                if let Some((o, &p)) = row.iter().enumerate().find(|&(_, &p)| p < 0.0) {
                    out.push(Violation::NegativeObservation {
                        action: a,
                        next,
                        observation: o,
                        value: p,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOLERANCE {
                    out.push(Violation::ObservationRow {
                        action: a,
                        next,
                        residual: sum - 1.0,
                    });
                }
            }
        }
        let sum: f64 = self.initial_belief.iter().sum();
        if self.initial_belief.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > ROW_TOLERANCE {
            out.push(Violation::InitialBelief {
                residual: sum - 1.0,
            });
        }
        for &s in &self.terminal {
            for a in 0..self.num_actions {
                if (self.transition(s, a, s) - 1.0).abs() > ROW_TOLERANCE {
                    out.push(Violation::TerminalNotAbsorbing {
                        state: s,
                        action: a,
                    });
                }
            }
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            out.push(Violation::Discount {
                value: self.discount,
            });
        }
        out
    }

    /// Bayes filter: `b'(s') ∝ O(o|s',a) Σ_s T(s'|s,a) b(s)`.
    pub fn belief_update(&self, belief: &Belief, a: usize, o: usize) -> Result<Belief, ModelError> {
        if belief.len() != self.num_states {
            return Err(ModelError::DimensionMismatch {
                expected: self.num_states,
                found: belief.len(),
            });
        }
        self.check_action(a)?;
        self.check_observation(o)?;
        let mut next = vec![0.0; self.num_states];
        for (s, &w) in belief.probs().iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(sp, p) in self.transition_row(s, a) {
                next[sp] += w * p;
            }
        }
        let mut norm = 0.0;
        for (sp, v) in next.iter_mut().enumerate() {
            *v *= self.observation(a, sp, o);
            norm += *v;
        }
        if norm <= IMPOSSIBLE_OBSERVATION {
            return Err(ModelError::ImpossibleObservation {
                action: a,
                observation: o,
            });
        }
        next.iter_mut().for_each(|v| *v /= norm);
        Ok(Belief(next))
    }
}

/// One broken invariant found by [`TabularPomdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TransitionRow {
        state: usize,
        action: usize,
        residual: f64,
    },
    NegativeTransition {
        state: usize,
        action: usize,
        next: usize,
        value: f64,
    },
    ObservationRow {
        action: usize,
        next: usize,
        residual: f64,
    },
    NegativeObservation {
        action: usize,
        next: usize,
        observation: usize,
        value: f64,
    },
    InitialBelief {
        residual: f64,
    },
    TerminalNotAbsorbing {
        state: usize,
        action: usize,
    },
    Discount {
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TransitionRow {
                state,
                action,
                residual,
            } => {
                write!(f, "T row (s={state}, a={action}) sums to 1{residual:+.3e}")
            }
            Violation::NegativeTransition {
                state,
                action,
                next,
                value,
            } => {
                write!(
                    f,
                    "T(s'={next} | s={state}, a={action}) = {value} is not a probability"
                )
            }
            Violation::ObservationRow {
                action,
                next,
                residual,
            } => {
                write!(f, "O row (s'={next}, a={action}) sums to 1{residual:+.3e}")
            }
            Violation::NegativeObservation {
                action,
                next,
                observation,
                value,
            } => {
                write!(
                    f,
                    "O(o={observation} | s'={next}, a={action}) = {value} is negative"
                )
            }
            Violation::InitialBelief { residual } => {
                write!(
                    f,
                    "initial belief is not a distribution (sum 1{residual:+.3e})"
                )
            }
            Violation::TerminalNotAbsorbing { state, action } => {
                write!(
                    f,
                    "terminal state {state} is not absorbing under action {action}"
                )
            }
            Violation::Discount { value } => write!(f, "discount {value} outside (0, 1]"),
        }
    }
}

/// A probability distribution over the states of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief(Vec<f64>);

impl Belief {
    /// Wraps `probs` after checking it is a simplex point.
    pub fn new(probs: Vec<f64>) -> Result<Self, ModelError> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty()
            || probs.iter().any(|&p| p < 0.0 || !p.is_finite())
            || (sum - 1.0).abs() > ROW_TOLERANCE
        {
            return Err(ModelError::NotADistribution { sum });
        }
        Ok(Self(probs))
    }

    pub fn point_mass(num_states: usize, s: usize) -> Self {
        let mut v = vec![0.0; num_states];
        v[s] = 1.0;
        Self(v)
    }

    pub fn uniform(num_states: usize) -> Self {
        Self(vec![1.0 / num_states as f64; num_states])
    }

    pub fn initial(model: &TabularPomdp) -> Self {
        Self(model.initial_belief.clone())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state_sensor(accuracy: f64) -> TabularPomdp {
        let mut m = TabularPomdp::new(2, 1, 2).unwrap();
        for s in 0..2 {
            m.set_transition(s, 0, s, 1.0).unwrap();
            for o in 0..2 {
                m.set_observation(0, s, o, if o == s { accuracy } else { 1.0 - accuracy })
                    .unwrap();
            }
        }
        m
    }

    #[test]
    fn well_formed_model_has_no_violations() {
        assert!(two_state_sensor(0.8).validate().is_empty());
    }

    #[test]
    fn short_transition_row_is_reported() {
        let mut m = two_state_sensor(0.8);
        m.set_transition(1, 0, 1, 0.9).unwrap();
        let v = m.validate();
        assert_eq!(v.len(), 1);
        match &v[0] {
            Violation::TransitionRow {
                state: 1,
                action: 0,
                residual,
            } => assert!((residual + 0.1).abs() < 1e-12),
            other => panic!("unexpected violation {other:?}"),
        }
        assert!(v[0].to_string().contains("s=1, a=0"));
    }

    #[test]
    fn terminal_must_absorb() {
        let mut m = two_state_sensor(0.8);
        m.insert_terminal_flag(0).unwrap();
        m.set_transition_row(0, 0, [(1, 1.0)]).unwrap();
        assert!(m
            .validate()
            .iter()
            .any(|v| matches!(v, Violation::TerminalNotAbsorbing { state: 0, .. })));
    }

    #[test]
    fn sensor_update_matches_hand_computation() {
        let m = two_state_sensor(0.8);
        let b = Belief::new(vec![0.5, 0.5]).unwrap();
        let next = m.belief_update(&b, 0, 0).unwrap();
        assert!((next.probs()[0] - 0.8).abs() < 1e-12);
        assert!((next.probs()[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn deterministic_chain_moves_point_mass() {
        let mut m = TabularPomdp::new(3, 1, 1).unwrap();
        for s in 0..3 {
            m.set_transition(s, 0, (s + 1) % 3, 1.0).unwrap();
            m.set_observation(0, s, 0, 1.0).unwrap();
        }
        let next = m.belief_update(&Belief::point_mass(3, 1), 0, 0).unwrap();
        assert_eq!(next.probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = two_state_sensor(1.0);
        let b = Belief::point_mass(2, 0);
        assert!(matches!(
            m.belief_update(&b, 0, 1),
            Err(ModelError::ImpossibleObservation { .. })
        ));
    }

    #[test]
    fn single_state_update_is_trivial() {
        let mut m = TabularPomdp::new(1, 2, 3).unwrap();
        for a in 0..2 {
            m.set_transition(0, a, 0, 1.0).unwrap();
            for o in 0..3 {
                m.set_observation(a, 0, o, 1.0 / 3.0).unwrap();
            }
        }
        let next = m.belief_update(&Belief::point_mass(1, 0), 1, 2).unwrap();
        assert_eq!(next.probs(), &[1.0]);
    }

    #[test]
    fn belief_rejects_non_distributions() {
        assert!(Belief::new(vec![0.5, 0.6]).is_err());
        assert!(Belief::new(vec![-0.1, 1.1]).is_err());
        assert!(Belief::new(vec![]).is_err());
    }
}
