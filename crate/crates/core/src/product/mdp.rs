//! Sparse MDPs and maximal end component decomposition.

use serde::Serialize;

/// A finite MDP where every action is available in every state.
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    num_states: usize,
    num_actions: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Mdp {
    /// `rows[s * num_actions + a]` lists `(s', p)` pairs.
    pub fn new(num_states: usize, num_actions: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(
            rows.len(),
            num_states * num_actions,
            "one row per state-action pair"
        );
        Self {
            num_states,
            num_actions,
            rows,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.rows[s * self.num_actions + a]
    }

    pub(crate) fn rows_mut(&mut self) -> &mut Vec<Vec<(usize, f64)>> {
        &mut self.rows
    }

    /// Predecessor lists: for each `s'`, the `(s, a)` pairs reaching it.
    pub fn predecessors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut pred = vec![Vec::new(); self.num_states];
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                for &(sp, p) in self.row(s, a) {
                    if p > 0.0 {
                        pred[sp].push((s, a));
                    }
                }
            }
        }
        pred
    }
}

/// An end component: states with the actions that keep it closed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EndComponent {
    pub states: Vec<usize>,
    /// `actions[i]` are the enabled actions of `states[i]`, ascending.
    pub actions: Vec<Vec<usize>>,
}

impl EndComponent {
    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }
}

/// Strongly connected components of a graph given by adjacency lists,
/// computed with an iterative Tarjan traversal. Returns a component id per
/// node; nodes with `alive[v] == false` get `usize::MAX`.
pub fn strongly_connected_components(adj: &[Vec<usize>], alive: &[bool]) -> Vec<usize> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut next_comp = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if !alive[root] || index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            if *edge < adj[v].len() {
                let w = adj[v][*edge];
                *edge += 1;
                if !alive[w] {
                    continue;
                }
                if index[w] == UNSEEN {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Maximal end components of `mdp`, optionally restricted to the states
/// flagged in `restricted_to`.
///
/// Repeatedly computes SCCs over the enabled state-action edges, disables
/// actions that can leave their SCC and drops states left without actions,
/// until nothing changes. Components are returned sorted by smallest state.
pub fn maximal_end_components(mdp: &Mdp, restricted_to: Option<&[bool]>) -> Vec<EndComponent> {
    let n = mdp.num_states();
    let na = mdp.num_actions();
    let mut alive: Vec<bool> = match restricted_to {
        Some(r) => r.to_vec(),
        None => vec![true; n],
    };
    let mut enabled: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            (0..na)
                .map(|a| alive[s] && mdp.row(s, a).iter().all(|&(sp, _)| alive[sp]))
                .collect()
        })
        .collect();
    for s in 0..n {
        if alive[s] && !enabled[s].iter().any(|&e| e) {
            alive[s] = false;
        }
    }

    loop {
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                if !alive[s] {
                    return Vec::new();
                }
                let mut out: Vec<usize> = (0..na)
                    .filter(|&a| enabled[s][a])
                    .flat_map(|a| {
                        mdp.row(s, a)
                            .iter()
                            .filter(|&&(_, p)| p > 0.0)
                            .map(|&(sp, _)| sp)
                    })
                    .collect();
                out.sort_unstable();
                out.dedup();
                out
            })
            .collect();
        let comp = strongly_connected_components(&adj, &alive);
        let mut changed = false;
        for s in 0..n {
            if !alive[s] {
                continue;
            }
            for a in 0..na {
                if enabled[s][a]
                    && mdp
                        .row(s, a)
                        .iter()
                        .any(|&(sp, p)| p > 0.0 && (!alive[sp] || comp[sp] != comp[s]))
                {
                    enabled[s][a] = false;
                    changed = true;
                }
            }
        }
        for s in 0..n {
            if alive[s] && !enabled[s].iter().any(|&e| e) {
                alive[s] = false;
                changed = true;
            }
        }
        if !changed {
            let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
                std::collections::BTreeMap::new();
            for s in (0..n).filter(|&s| alive[s]) {
                groups.entry(comp[s]).or_default().push(s);
            }
            let mut mecs: Vec<EndComponent> = groups
                .into_values()
                .map(|states| {
                    let actions = states
                        .iter()
                        .map(|&s| (0..na).filter(|&a| enabled[s][a]).collect())
                        .collect();
                    EndComponent { states, actions }
                })
                .collect();
            mecs.sort_by_key(|m| m.states[0]);
            return mecs;
        }
    }
}
