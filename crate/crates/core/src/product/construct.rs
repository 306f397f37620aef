//! The product of a POMDP with a deterministic Rabin automaton.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use crate::ltl::{Dra, Letter};
use crate::model::pomdp::IMPOSSIBLE_OBSERVATION;
use crate::model::{ModelError, TabularPomdp};

use super::mdp::{maximal_end_components, Mdp};
use super::ProductError;

/// Sparse belief: `(state, probability)` pairs sorted by state.
pub type SparseBelief = Vec<(usize, f64)>;

/// Product POMDP over pairs `(s, q)`.
///
/// Live states are the pairs reachable from the initial belief, indexed in
/// `(s, q)` lexicographic order. Two artificial states follow them: the sink
/// (index `num_live`) and the post-success terminal (index `num_live + 1`).
/// Both are absorbing and always emit observation 0.
#[derive(Debug, Clone)]
pub struct ProductPomdp {
    base: Arc<TabularPomdp>,
    automaton: Arc<Dra>,
    pairs: Vec<(usize, usize)>,
    mdp: Mdp,
    initial: Vec<f64>,
    success: BTreeSet<usize>,
    reward_attached: bool,
    artificial_obs: Vec<f64>,
}

/// Automaton letter read when `a` is taken in `s`.
fn letter_of(
    model: &TabularPomdp,
    dra: &Dra,
    base_letters: &[Letter],
    s: usize,
    a: usize,
) -> Letter {
    match model.action_labels(s, a) {
        Some(extra) => base_letters[s] | dra.letter(extra.iter().map(String::as_str)),
        None => base_letters[s],
    }
}

/// Builds the product, keeping only pairs reachable from `(supp b0) × {q0}`.
///
/// Each step reads the source letter: from `(s, q)` under `a` the automaton
/// moves to `δ(q, L(s) ∪ L(s, a))`. Undefined transitions route all mass to
/// the sink.
pub fn build_product(
    model: impl Into<Arc<TabularPomdp>>,
    dra: impl Into<Arc<Dra>>,
) -> Result<ProductPomdp, ProductError> {
    let model: Arc<TabularPomdp> = model.into();
    let dra: Arc<Dra> = dra.into();
    let props = model.propositions();
    let missing: Vec<String> = dra
        .aps()
        .iter()
        .filter(|p| !props.contains(*p))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(ProductError::PropositionMismatch(missing));
    }

    let na = model.num_actions();
    let base_letters: Vec<Letter> = (0..model.num_states())
        .map(|s| dra.letter(model.labels(s).iter().map(String::as_str)))
        .collect();

    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut queue = VecDeque::new();
    for (s, &p) in model.initial_belief().iter().enumerate() {
        if p > 0.0 {
            let key = (s, dra.initial());
            seen.insert(key, ());
            queue.push_back(key);
        }
    }
    while let Some((s, q)) = queue.pop_front() {
        for a in 0..na {
            let Some(qn) = dra.next(q, letter_of(&model, &dra, &base_letters, s, a)) else {
                continue;
            };
            for &(sp, p) in model.transition_row(s, a) {
                if p > 0.0 && seen.insert((sp, qn), ()).is_none() {
                    queue.push_back((sp, qn));
                }
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = seen.into_keys().collect();
    pairs.sort_unstable();
    let index: HashMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let live = pairs.len();
    let (sink, terminal) = (live, live + 1);
    let n = live + 2;

    let mut rows = Vec::with_capacity(n * na);
    for &(s, q) in &pairs {
        for a in 0..na {
            let row = match dra.next(q, letter_of(&model, &dra, &base_letters, s, a)) {
                None => vec![(sink, 1.0)],
                Some(qn) => {
                    let mut r: Vec<(usize, f64)> = model
                        .transition_row(s, a)
                        .iter()
                        .filter(|&&(_, p)| p > 0.0)
                        .map(|&(sp, p)| (index[&(sp, qn)], p))
                        .collect();
                    r.sort_unstable_by_key(|&(i, _)| i);
                    r
                }
            };
            rows.push(row);
        }
    }
    for absorbing in [sink, terminal] {
        for _ in 0..na {
            rows.push(vec![(absorbing, 1.0)]);
        }
    }

    let mut initial = vec![0.0; n];
    for (s, &p) in model.initial_belief().iter().enumerate() {
        if p > 0.0 {
            initial[index[&(s, dra.initial())]] = p;
        }
    }

    let mut artificial_obs = vec![0.0; model.num_observations()];
    artificial_obs[0] = 1.0;
    Ok(ProductPomdp {
        base: model,
        automaton: dra,
        pairs,
        mdp: Mdp::new(n, na, rows),
        initial,
        success: BTreeSet::new(),
        reward_attached: false,
        artificial_obs,
    })
}

impl ProductPomdp {
    pub fn base(&self) -> &TabularPomdp {
        &self.base
    }

    pub fn automaton(&self) -> &Dra {
        &self.automaton
    }

    pub fn num_states(&self) -> usize {
        self.mdp.num_states()
    }

    pub fn num_live(&self) -> usize {
        self.pairs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.mdp.num_actions()
    }

    pub fn num_observations(&self) -> usize {
        self.base.num_observations()
    }

    pub fn sink(&self) -> usize {
        self.pairs.len()
    }

    pub fn terminal(&self) -> usize {
        self.pairs.len() + 1
    }

    /// The `(s, q)` pair behind a live state.
    pub fn pair(&self, i: usize) -> Option<(usize, usize)> {
        self.pairs.get(i).copied()
    }

    pub fn index_of(&self, s: usize, q: usize) -> Option<usize> {
        self.pairs.binary_search(&(s, q)).ok()
    }

    pub fn underlying_mdp(&self) -> &Mdp {
        &self.mdp
    }

    #[inline]
    pub fn transition_row(&self, i: usize, a: usize) -> &[(usize, f64)] {
        self.mdp.row(i, a)
    }

    #[inline]
    pub fn observation_row(&self, a: usize, next: usize) -> &[f64] {
        match self.pairs.get(next) {
            Some(&(s, _)) => self.base.observation_row(a, s),
            None => &self.artificial_obs,
        }
    }

    #[inline]
    pub fn observation(&self, a: usize, next: usize, o: usize) -> f64 {
        self.observation_row(a, next)[o]
    }

    pub fn initial_belief(&self) -> &[f64] {
        &self.initial
    }

    pub fn initial_sparse(&self) -> SparseBelief {
        self.initial
            .iter()
            .enumerate()
            .filter(|&(_, &p)| p > 0.0)
            .map(|(i, &p)| (i, p))
            .collect()
    }

    pub fn success_set(&self) -> &BTreeSet<usize> {
        &self.success
    }

    pub fn is_success(&self, i: usize) -> bool {
        self.success.contains(&i)
    }

    pub fn has_reward(&self) -> bool {
        self.reward_attached
    }

    /// `R(i, a)`: 1 in success states once the reward is attached.
    #[inline]
    pub fn reward(&self, i: usize, _a: usize) -> f64 {
        if self.reward_attached && self.success.contains(&i) {
            1.0
        } else {
            0.0
        }
    }

    /// Makes every state in `success` pay reward 1 and move to the
    /// post-success terminal under every action.
    pub fn attach_reachability(mut self, success: BTreeSet<usize>) -> Self {
        let terminal = self.terminal();
        let na = self.num_actions();
        let rows = self.mdp.rows_mut();
        for &i in &success {
            for a in 0..na {
                rows[i * na + a] = vec![(terminal, 1.0)];
            }
        }
        self.success = success;
        self.reward_attached = true;
        self
    }

    /// Predicted distribution over next states before observing.
    pub fn predict(&self, belief: &[(usize, f64)], a: usize) -> SparseBelief {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &(i, w) in belief {
            for &(j, p) in self.transition_row(i, a) {
                *acc.entry(j).or_insert(0.0) += w * p;
            }
        }
        let mut out: SparseBelief = acc.into_iter().collect();
        out.sort_unstable_by_key(|&(j, _)| j);
        out
    }

    /// Bayes update of a sparse belief.
    pub fn belief_update(
        &self,
        belief: &[(usize, f64)],
        a: usize,
        o: usize,
    ) -> Result<SparseBelief, ModelError> {
        let mut next: SparseBelief = self
            .predict(belief, a)
            .into_iter()
            .map(|(j, p)| (j, p * self.observation(a, j, o)))
            .filter(|&(_, p)| p > 0.0)
            .collect();
        let norm: f64 = next.iter().map(|&(_, p)| p).sum();
        if norm <= IMPOSSIBLE_OBSERVATION {
            return Err(ModelError::ImpossibleObservation {
                action: a,
                observation: o,
            });
        }
        next.iter_mut().for_each(|(_, p)| *p /= norm);
        Ok(next)
    }

    /// Human-readable name of a product state.
    pub fn state_name(&self, i: usize) -> String {
        match self.pair(i) {
            Some((s, q)) => format!("({s},{q})"),
            None if i == self.sink() => "sink".into(),
            None => "terminal".into(),
        }
    }

    /// Exports the product in the plain model representation.
    pub fn to_tabular(&self) -> Result<TabularPomdp, ModelError> {
        let n = self.num_states();
        let na = self.num_actions();
        let no = self.num_observations();
        let mut m = TabularPomdp::new(n, na, no)?;
        for i in 0..n {
            for a in 0..na {
                m.set_transition_row(i, a, self.transition_row(i, a).to_vec())?;
                if self.reward_attached {
                    m.set_reward(i, a, self.reward(i, a))?;
                }
            }
        }
        for a in 0..na {
            for i in 0..n {
                for (o, &p) in self.observation_row(a, i).iter().enumerate() {
                    if p != 0.0 {
                        m.set_observation(a, i, o, p)?;
                    }
                }
            }
        }
        for &i in &self.success {
            m.add_label(i, "success")?;
        }
        m.set_initial_belief(self.initial.clone())?;
        m.insert_terminal_flag(self.sink())?;
        m.insert_terminal_flag(self.terminal())?;
        Ok(m)
    }
}

/// Success states: for each Rabin pair, drop live states whose automaton
/// state is in `fin`, decompose the rest into MECs and keep every MEC that
/// meets `inf`. The union over pairs is returned.
pub fn success_states(p: &ProductPomdp) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for pair in p.automaton().pairs() {
        let allowed: Vec<bool> = (0..p.num_states())
            .map(|i| matches!(p.pair(i), Some((_, q)) if !pair.fin.contains(&q)))
            .collect();
        for mec in maximal_end_components(p.underlying_mdp(), Some(&allowed)) {
            if mec
                .states
                .iter()
                .any(|&i| pair.inf.contains(&p.pair(i).expect("live state").1))
            {
                out.extend(mec.states.iter().copied());
            }
        }
    }
    out
}

/// Product with success states computed and the reachability reward attached.
pub fn reachability_product(
    model: impl Into<Arc<TabularPomdp>>,
    dra: impl Into<Arc<Dra>>,
) -> Result<ProductPomdp, ProductError> {
    let p = build_product(model, dra)?;
    let success = success_states(&p);
    Ok(p.attach_reachability(success))
}
