//! Gap-driven point-based search with alpha-vector lower bounds and a
//! sawtooth upper bound, for undiscounted reachability.
//!
//! Local upper-bound backups cannot lower values along belief cycles when
//! there is no discount, so the explored belief graph is periodically solved
//! as a finite MDP (frontier beliefs exit to the goal with probability equal
//! to their current upper bound) with its end components collapsed.

use std::time::Instant;

use crate::product::reach::Quotient;
use crate::product::Mdp;

use super::baselines::{blind_alphas, fib_alphas, qmdp_alphas};
use super::reduced::{belief_key, dot, BeliefIndex, ReducedModel, Scratch};
use super::{SarsopConfig, Status};

const GUIDANCE_DISCOUNT: f64 = 0.95;
const IMPROVEMENT: f64 = 1e-12;
const TIE: f64 = 1e-9;

struct Branch {
    obs: usize,
    prob: f64,
    child: usize,
}

struct Edge {
    goal: f64,
    branches: Vec<Branch>,
}

struct Node {
    belief: Vec<(usize, f64)>,
    corner: f64,
    upper: f64,
    upper_stamp: u64,
    lower: f64,
    lower_stamp: u64,
    edges: Option<Vec<Edge>>,
    is_point: bool,
    /// Discounted optimistic value, only used to order exploration.
    explore: f64,
}

/// Lower-bound alpha vectors. Each one is also a node of a plan graph: it
/// prescribes an action and, per observation, the vector to follow next.
/// Successors always have a smaller index, except blind-policy vectors,
/// which point to themselves, so the plan from any vector achieves at
/// least its values.
pub(crate) struct AlphaSet {
    pub vectors: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub next: Vec<Vec<usize>>,
    /// Vectors that take part in the lower bound; the rest are kept only
    /// because some plan leads to them.
    pub active: Vec<usize>,
    stamp: u64,
}

impl AlphaSet {
    fn new() -> Self {
        Self {
            vectors: Vec::new(),
            actions: Vec::new(),
            next: Vec::new(),
            active: Vec::new(),
            stamp: 0,
        }
    }

    /// Index and value of the best active vector at `b`; first index on ties.
    fn best(&self, b: &[(usize, f64)]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for &i in &self.active {
            let x = dot(&self.vectors[i], b);
            if x > best.1 {
                best = (i, x);
            }
        }
        best
    }

    fn push(&mut self, action: usize, values: Vec<f64>, next: Vec<usize>) {
        self.vectors.push(values);
        self.actions.push(action);
        self.next.push(next);
        self.active.push(self.vectors.len() - 1);
        self.stamp += 1;
    }

    /// Narrows the active vectors to the marked ones, then drops stored
    /// vectors no active plan leads to. Returns how many were dropped.
    fn retain(&mut self, active: &[bool]) -> usize {
        self.active.retain(|&i| active[i]);
        let mut keep = vec![false; self.vectors.len()];
        let mut stack = self.active.clone();
        stack.iter().for_each(|&i| keep[i] = true);
        while let Some(i) = stack.pop() {
            for &j in &self.next[i] {
                if !keep[j] {
                    keep[j] = true;
                    stack.push(j);
                }
            }
        }
        let mut remap = vec![usize::MAX; keep.len()];
        let mut k = 0;
        for (i, &kept) in keep.iter().enumerate() {
            if kept {
                remap[i] = k;
                k += 1;
            }
        }
        let mut i = 0;
        self.vectors.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.actions.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.next.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        for succ in &mut self.next {
            succ.iter_mut().for_each(|j| *j = remap[*j]);
        }
        self.active.iter_mut().for_each(|j| *j = remap[*j]);
        self.stamp += 1;
        keep.len() - self.vectors.len()
    }
}

/// Final state of a search, in reduced-model coordinates.
pub(crate) struct SearchOutcome {
    pub alphas: AlphaSet,
    pub corners: Vec<f64>,
    pub fib: Vec<(usize, Vec<f64>)>,
    pub points: Vec<(Vec<(usize, f64)>, f64)>,
    pub lower: f64,
    pub upper: f64,
    pub history: Vec<(f64, f64)>,
    pub status: Status,
    pub trials: usize,
}

pub(crate) struct Search<'m, 'p> {
    m: &'m ReducedModel<'p>,
    cfg: SarsopConfig,
    nodes: Vec<Node>,
    index: BeliefIndex,
    alphas: AlphaSet,
    corners: Vec<f64>,
    fib: Vec<(usize, Vec<f64>)>,
    guidance_v: Vec<f64>,
    points: Vec<usize>,
    point_stamp: u64,
    scratch: Scratch,
    dense: Vec<f64>,
    expanded: usize,
    expanded_at_last_solve: usize,
    alphas_at_last_prune: usize,
    points_at_last_prune: usize,
    memory: usize,
}

impl<'m, 'p> Search<'m, 'p> {
    pub fn new(m: &'m ReducedModel<'p>, cfg: SarsopConfig) -> Self {
        let n = m.len();
        let mdp_values = m.mdp_values();
        let qmdp = qmdp_alphas(m, &mdp_values);
        let fib = fib_alphas(m, qmdp);
        let corners: Vec<f64> = (0..n)
            .map(|s| {
                fib.iter()
                    .map(|(_, v)| v[s])
                    .fold(0.0, f64::max)
                    .min(mdp_values[s])
            })
            .collect();
        let mut alphas = AlphaSet::new();
        for (a, v) in blind_alphas(m) {
            let me = alphas.vectors.len();
            alphas.push(a, v, vec![me; m.no]);
        }
        let guidance_v = guidance_values(m);
        let mut search = Self {
            m,
            cfg,
            nodes: Vec::new(),
            index: BeliefIndex::new(),
            alphas,
            corners,
            fib,
            guidance_v,
            points: Vec::new(),
            point_stamp: 0,
            scratch: Scratch::new(n, m.no),
            dense: vec![0.0; n],
            expanded: 0,
            expanded_at_last_solve: 0,
            alphas_at_last_prune: 0,
            points_at_last_prune: 0,
            memory: 0,
        };
        search.prune_alphas();
        search
    }

    fn fib_value(&self, b: &[(usize, f64)]) -> f64 {
        self.fib.iter().map(|(_, v)| dot(v, b)).fold(0.0, f64::max)
    }

    fn sawtooth(&mut self, b: &[(usize, f64)], corner: f64) -> f64 {
        let mut best = corner.min(self.fib_value(b));
        for &(s, p) in b {
            self.dense[s] = p;
        }
        for &pid in &self.points {
            let node = &self.nodes[pid];
            let drop = node.corner - node.upper;
            // a node being refreshed has lent out its belief
            if drop <= 0.0 || node.belief.is_empty() {
                continue;
            }
            let mut ratio = f64::INFINITY;
            for &(s, q) in &node.belief {
                let r = self.dense[s] / q;
                if r < ratio {
                    ratio = r;
                    if ratio == 0.0 {
                        break;
                    }
                }
            }
            if ratio > 0.0 {
                best = best.min(corner - ratio * drop);
            }
        }
        for &(s, _) in b {
            self.dense[s] = 0.0;
        }
        best.clamp(0.0, 1.0)
    }

    fn node_for(&mut self, belief: Vec<(usize, f64)>) -> usize {
        let key = belief_key(&belief);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let corner = dot(&self.corners, &belief);
        let upper = self.sawtooth(&belief, corner);
        let lower = self.alphas.best(&belief).1.clamp(0.0, 1.0);
        let explore = dot(&self.guidance_v, &belief);
        let id = self.nodes.len();
        self.memory += belief.len() * 16 + key.len() * 16 + 128;
        self.nodes.push(Node {
            belief,
            corner,
            upper: upper.max(lower),
            upper_stamp: self.point_stamp,
            lower,
            lower_stamp: self.alphas.stamp,
            edges: None,
            is_point: false,
            explore,
        });
        self.index.insert(key, id);
        id
    }

    fn refresh(&mut self, id: usize) {
        if self.nodes[id].upper_stamp != self.point_stamp {
            let belief = std::mem::take(&mut self.nodes[id].belief);
            let v = self.sawtooth(&belief, self.nodes[id].corner);
            let node = &mut self.nodes[id];
            node.belief = belief;
            node.upper = node.upper.min(v);
            node.upper_stamp = self.point_stamp;
        }
        if self.nodes[id].lower_stamp != self.alphas.stamp {
            let v = self.alphas.best(&self.nodes[id].belief).1;
            let node = &mut self.nodes[id];
            node.lower = node.lower.max(v.min(1.0));
            node.lower_stamp = self.alphas.stamp;
        }
        let node = &mut self.nodes[id];
        if node.upper < node.lower {
            node.upper = node.lower;
        }
    }

    fn expand(&mut self, id: usize) {
        if self.nodes[id].edges.is_some() {
            return;
        }
        let belief = self.nodes[id].belief.clone();
        let mut edges = Vec::with_capacity(self.m.na);
        for a in 0..self.m.na {
            let step = self.m.step(&belief, a, &mut self.scratch);
            let branches = step
                .branches
                .into_iter()
                .map(|(obs, prob, child)| Branch {
                    obs,
                    prob,
                    child: self.node_for(child),
                })
                .collect::<Vec<_>>();
            self.memory += branches.len() * 24 + 32;
            edges.push(Edge {
                goal: step.goal,
                branches,
            });
        }
        self.nodes[id].edges = Some(edges);
        self.expanded += 1;
    }

    fn refresh_children(&mut self, id: usize) {
        let children: Vec<usize> = self.nodes[id]
            .edges
            .as_ref()
            .map(|e| {
                e.iter()
                    .flat_map(|e| e.branches.iter().map(|b| b.child))
                    .collect()
            })
            .unwrap_or_default();
        for c in children {
            self.refresh(c);
        }
    }

    /// Upper Q value; branches looping back to `id` are solved out.
    fn q_upper(&self, id: usize, a: usize) -> Option<f64> {
        let edge = &self.nodes[id].edges.as_ref()?[a];
        let mut value = edge.goal;
        let mut looping = 0.0;
        for br in &edge.branches {
            if br.child == id {
                looping += br.prob;
            } else {
                value += br.prob * self.nodes[br.child].upper;
            }
        }
        if looping >= 1.0 - 1e-12 {
            return None;
        }
        Some((value / (1.0 - looping)).min(1.0))
    }

    /// Discounted exploration value of taking `a` at node `id`.
    fn q_explore(&self, id: usize, a: usize) -> f64 {
        let edge = &self.nodes[id].edges.as_ref().expect("expanded")[a];
        edge.goal
            + GUIDANCE_DISCOUNT
                * edge
                    .branches
                    .iter()
                    .map(|b| b.prob * self.nodes[b.child].explore)
                    .sum::<f64>()
    }

    /// Action with the best upper bound; near ties go to the best
    /// discounted exploration value, then to the lowest index. A `guided`
    /// choice ranks by the exploration value alone.
    fn select_action(&self, id: usize, guided: bool) -> Option<usize> {
        if guided {
            let mut choice: Option<(usize, f64)> = None;
            for a in 0..self.m.na {
                if self.q_upper(id, a).is_some() {
                    let g = self.q_explore(id, a);
                    if choice.is_none_or(|(_, cg)| g > cg) {
                        choice = Some((a, g));
                    }
                }
            }
            return choice.map(|(a, _)| a);
        }
        let qs: Vec<Option<f64>> = (0..self.m.na).map(|a| self.q_upper(id, a)).collect();
        let best = qs
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return None;
        }
        let mut choice: Option<(usize, f64)> = None;
        for (a, q) in qs.iter().enumerate() {
            if let Some(q) = q {
                if *q >= best - TIE {
                    let g = self.q_explore(id, a);
                    if choice.is_none_or(|(_, cg)| g > cg) {
                        choice = Some((a, g));
                    }
                }
            }
        }
        choice.map(|(a, _)| a)
    }

    fn backup(&mut self, id: usize) {
        self.expand(id);
        self.refresh(id);
        self.refresh_children(id);
        let best_q = (0..self.m.na)
            .filter_map(|a| self.q_upper(id, a))
            .fold(0.0, f64::max);
        let explore = (0..self.m.na)
            .map(|a| self.q_explore(id, a))
            .fold(0.0, f64::max);
        self.nodes[id].explore = self.nodes[id].explore.min(explore);
        let old_upper = self.nodes[id].upper;
        if best_q < old_upper {
            self.nodes[id].upper = best_q.max(self.nodes[id].lower);
        }

        // lower bound: point-based backup
        let n = self.m.len();
        let belief = self.nodes[id].belief.clone();
        let fallback = self.alphas.best(&belief).0;
        let mut best: Option<(f64, usize, Vec<f64>, Vec<usize>)> = None;
        let mut w = vec![0.0; n];
        for a in 0..self.m.na {
            let mut pick = vec![fallback; self.m.no];
            let edge = &self.nodes[id].edges.as_ref().expect("expanded")[a];
            for br in &edge.branches {
                pick[br.obs] = self.alphas.best(&self.nodes[br.child].belief).0;
            }
            for (sp, wv) in w.iter_mut().enumerate() {
                *wv = self
                    .m
                    .obs_row(a, sp)
                    .iter()
                    .enumerate()
                    .filter(|&(_, &po)| po > 0.0)
                    .map(|(o, &po)| po * self.alphas.vectors[pick[o]][sp])
                    .sum();
            }
            let alpha: Vec<f64> = (0..n)
                .map(|s| {
                    (self.m.goal(s, a)
                        + self
                            .m
                            .row(s, a)
                            .iter()
                            .map(|&(sp, p)| p * w[sp])
                            .sum::<f64>())
                    .clamp(0.0, 1.0)
                })
                .collect();
            let value = dot(&alpha, &belief);
            if best.as_ref().is_none_or(|(v, ..)| value > *v) {
                best = Some((value, a, alpha, pick));
            }
        }
        if let Some((value, a, alpha, pick)) = best {
            if value > self.nodes[id].lower + IMPROVEMENT {
                self.memory += n * 8 + self.m.no * 8 + 32;
                self.alphas.push(a, alpha, pick);
                let node = &mut self.nodes[id];
                node.lower = value.min(1.0);
                node.lower_stamp = self.alphas.stamp;
            }
        }
        let node = &mut self.nodes[id];
        if node.upper < node.lower {
            node.upper = node.lower;
        }
        if node.upper < node.corner - IMPROVEMENT {
            if !node.is_point {
                node.is_point = true;
                self.points.push(id);
            }
            if node.upper < old_upper {
                self.point_stamp += 1;
            }
        }
    }

    /// One exploration trial from `root`.
    fn trial(&mut self, root: usize, target: f64, guided: bool, deadline: Option<Instant>) {
        let mut path = Vec::new();
        let mut id = root;
        loop {
            path.push(id);
            self.refresh(id);
            let node = &self.nodes[id];
            if node.upper - node.lower <= target
                || path.len() > self.cfg.max_depth
                || deadline.is_some_and(|d| Instant::now() >= d)
            {
                break;
            }
            self.expand(id);
            self.refresh_children(id);
            let Some(a) = self.select_action(id, guided) else {
                break;
            };
            let edge = &self.nodes[id].edges.as_ref().expect("expanded")[a];
            let mut next: Option<(usize, f64)> = None;
            for br in &edge.branches {
                if br.child == id || path.contains(&br.child) {
                    continue;
                }
                let c = &self.nodes[br.child];
                let score = br.prob * (c.upper - c.lower - target);
                if score > 0.0 && next.is_none_or(|(_, s)| score > s) {
                    next = Some((br.child, score));
                }
            }
            match next {
                Some((child, _)) => id = child,
                None => break,
            }
        }
        for &id in path.iter().rev() {
            self.backup(id);
        }
    }

    /// Solves the explored belief graph as a finite MDP and lowers every
    /// node's upper bound to its value there.
    fn solve_graph(&mut self) {
        let count = self.nodes.len();
        for id in 0..count {
            if self.nodes[id].edges.is_none() {
                self.refresh(id);
            }
        }
        let na = self.m.na;
        let (goal, zero) = (count, count + 1);
        let mut rows = Vec::with_capacity((count + 2) * na);
        for node in &self.nodes {
            match &node.edges {
                Some(edges) => {
                    for e in edges {
                        let mut row: Vec<(usize, f64)> =
                            e.branches.iter().map(|b| (b.child, b.prob)).collect();
                        let rest = 1.0 - e.goal - row.iter().map(|&(_, p)| p).sum::<f64>();
                        if e.goal > 0.0 {
                            row.push((goal, e.goal));
                        }
                        if rest > 0.0 {
                            row.push((zero, rest));
                        }
                        rows.push(row);
                    }
                }
                None => {
                    let u = node.upper;
                    let row = vec![(goal, u), (zero, 1.0 - u)];
                    for _ in 0..na {
                        rows.push(row.clone());
                    }
                }
            }
        }
        for t in [goal, zero] {
            for _ in 0..na {
                rows.push(vec![(t, 1.0)]);
            }
        }
        let mdp = Mdp::new(count + 2, na, rows);
        let mut target = vec![false; count + 2];
        target[goal] = true;
        let quotient = Quotient::new(&mdp, &target);
        let mut values: Vec<f64> = self.nodes.iter().map(|n| n.upper).collect();
        values.push(1.0);
        values.push(0.0);
        for (i, v) in values.iter_mut().enumerate().take(count) {
            if !quotient.maybe[i] {
                *v = 0.0;
            }
        }
        for _ in 0..500 {
            if quotient.sweep_upper(&mdp, &mut values) < 1e-10 {
                break;
            }
        }
        let mut changed = false;
        for (id, &v) in values.iter().enumerate().take(count) {
            let node = &mut self.nodes[id];
            let v = v.max(node.lower);
            if v < node.upper - IMPROVEMENT {
                node.upper = v;
                changed = true;
                if node.edges.is_some() && !node.is_point && v < node.corner - IMPROVEMENT {
                    node.is_point = true;
                    self.points.push(id);
                }
            }
        }
        if changed {
            self.point_stamp += 1;
        }
        self.expanded_at_last_solve = self.expanded;
    }

    /// Keeps alphas that are best at some expanded belief (always including
    /// the root), then drops pointwise dominated ones.
    fn prune_alphas(&mut self) {
        let k = self.alphas.vectors.len();
        let mut keep = vec![false; k];
        if self.nodes.is_empty() {
            self.alphas.active.iter().for_each(|&i| keep[i] = true);
        } else {
            for node in self.nodes.iter().filter(|n| n.edges.is_some()) {
                keep[self.alphas.best(&node.belief).0] = true;
            }
            keep[self.alphas.best(&self.nodes[0].belief).0] = true;
        }
        let n = self.m.len();
        let survivors: Vec<usize> = (0..k).filter(|&i| keep[i]).collect();
        if survivors.len() * survivors.len() * n <= 200_000_000 {
            let root_best = self.nodes.first().map(|r| self.alphas.best(&r.belief).0);
            for &i in &survivors {
                if Some(i) == root_best {
                    continue;
                }
                let vi = &self.alphas.vectors[i];
                let dominated = survivors.iter().any(|&j| {
                    j != i && keep[j] && {
                        let vj = &self.alphas.vectors[j];
                        vi.iter().zip(vj).all(|(x, y)| x <= y) && (vi != vj || j < i)
                    }
                });
                if dominated {
                    keep[i] = false;
                }
            }
        }
        let removed = self.alphas.retain(&keep);
        self.memory = self
            .memory
            .saturating_sub(removed * (n * 8 + self.m.no * 8 + 32));
        self.alphas_at_last_prune = self.alphas.active.len();
    }

    /// Drops sawtooth points whose value is no better than what the other
    /// points already give at their belief. The root is never dropped.
    fn prune_points(&mut self) {
        let mut kept: Vec<usize> = Vec::new();
        let all = std::mem::take(&mut self.points);
        for (k, &pid) in all.iter().enumerate() {
            if pid == 0 {
                kept.push(pid);
                continue;
            }
            let others: Vec<usize> = kept.iter().chain(&all[k + 1..]).copied().collect();
            self.points = others;
            let belief = std::mem::take(&mut self.nodes[pid].belief);
            let v = self.sawtooth(&belief, self.nodes[pid].corner);
            self.nodes[pid].belief = belief;
            if self.nodes[pid].upper < v - IMPROVEMENT {
                kept.push(pid);
            } else {
                self.nodes[pid].is_point = false;
            }
        }
        self.points = kept;
        self.points_at_last_prune = self.points.len();
        self.point_stamp += 1;
    }

    pub fn run(mut self, root_belief: Vec<(usize, f64)>, scale: f64, offset: f64) -> SearchOutcome {
        let start = Instant::now();
        let root = self.node_for(root_belief);
        self.refresh(root);
        let product_bounds = |s: &Self| {
            (
                offset + scale * s.nodes[root].lower,
                offset + scale * s.nodes[root].upper,
            )
        };
        let mut history = vec![product_bounds(&self)];
        let target = 0.9 * self.cfg.eps / scale;
        let mut status = Status::Converged;
        let mut trials = 0;
        loop {
            self.refresh(root);
            let (lb, ub) = product_bounds(&self);
            if ub - lb <= self.cfg.eps {
                break;
            }
            if self.cfg.time_limit.is_some_and(|t| start.elapsed() >= t) {
                status = Status::Timeout;
                break;
            }
            if self.cfg.memory_limit.is_some_and(|m| self.memory >= m) {
                status = Status::MemoryLimit;
                break;
            }
            self.trial(
                root,
                target,
                trials % 2 == 1,
                self.cfg.time_limit.map(|t| start + t),
            );
            trials += 1;
            if (self.expanded - self.expanded_at_last_solve) * 8 >= self.expanded.max(8) {
                self.solve_graph();
            }
            if self.alphas.active.len() >= 2 * self.alphas_at_last_prune + 16 {
                self.prune_alphas();
            }
            if self.points.len() >= 2 * self.points_at_last_prune + 100 {
                self.prune_points();
            }
            self.refresh(root);
            history.push(product_bounds(&self));
        }
        self.prune_alphas();
        let points = self
            .points
            .iter()
            .map(|&p| (self.nodes[p].belief.clone(), self.nodes[p].upper))
            .collect();
        let root_node = &self.nodes[root];
        SearchOutcome {
            lower: root_node.lower,
            upper: root_node.upper,
            alphas: self.alphas,
            corners: self.corners,
            fib: self.fib,
            points,
            history,
            status,
            trials,
        }
    }
}

/// Discounted maximal reachability values, the optimistic start for the
/// exploration values.
fn guidance_values(m: &ReducedModel) -> Vec<f64> {
    let n = m.len();
    let na = m.na;
    let mut v = vec![0.0; n];
    for _ in 0..1000 {
        let mut delta: f64 = 0.0;
        for s in 0..n {
            let mut best: f64 = 0.0;
            for a in 0..na {
                let x = m.goal(s, a)
                    + GUIDANCE_DISCOUNT * m.row(s, a).iter().map(|&(sp, p)| p * v[sp]).sum::<f64>();
                best = best.max(x);
            }
            delta = delta.max((best - v[s]).abs());
            v[s] = best;
        }
        if delta < 1e-9 {
            break;
        }
    }
    v
}
