//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pomcheck::ltl::{Dra, LtlFormula};
use pomcheck::model::TabularPomdp;
use pomcheck::product::{Mdp, ProductPomdp};
use pomcheck::solver::{best_alpha, AlphaVector};

pub type Word = Vec<BTreeSet<String>>;

// ---------------------------------------------------------------------------
// LTL semantics on lasso words

/// Truth of `f` at position 0 of `prefix · cycle^ω`, by fixpoint iteration
/// over the `prefix.len() + cycle.len()` distinct positions.
pub fn eval_lasso(f: &LtlFormula, prefix: &Word, cycle: &Word) -> bool {
    assert!(!cycle.is_empty());
    let n = prefix.len() + cycle.len();
    let succ: Vec<usize> = (0..n)
        .map(|i| if i + 1 < n { i + 1 } else { prefix.len() })
        .collect();
    let letter = |i: usize| {
        if i < prefix.len() {
            &prefix[i]
        } else {
            &cycle[i - prefix.len()]
        }
    };
    fn go<'w>(
        f: &LtlFormula,
        n: usize,
        succ: &[usize],
        letter: &dyn Fn(usize) -> &'w BTreeSet<String>,
    ) -> Vec<bool> {
        use LtlFormula::*;
        // least (init false) or greatest (init true) fixpoint of
        // x[i] = now[i] || (keep[i] && x[succ i])
        let fix = |now: Vec<bool>, keep: Vec<bool>, init: bool| {
            let mut x = vec![init; n];
            loop {
                let next: Vec<bool> = (0..n).map(|i| now[i] || (keep[i] && x[succ[i]])).collect();
                if next == x {
                    return x;
                }
                x = next;
            }
        };
        match f {
            True => vec![true; n],
            False => vec![false; n],
            Atom(p) => (0..n).map(|i| letter(i).contains(p)).collect(),
            Not(g) => go(g, n, succ, letter).into_iter().map(|b| !b).collect(),
            And(a, b) => {
                let (a, b) = (go(a, n, succ, letter), go(b, n, succ, letter));
                (0..n).map(|i| a[i] && b[i]).collect()
            }
            Or(a, b) => {
                let (a, b) = (go(a, n, succ, letter), go(b, n, succ, letter));
                (0..n).map(|i| a[i] || b[i]).collect()
            }
            Next(g) => {
                let g = go(g, n, succ, letter);
                (0..n).map(|i| g[succ[i]]).collect()
            }
            Finally(g) => fix(go(g, n, succ, letter), vec![true; n], false),
            Globally(g) => fix(vec![false; n], go(g, n, succ, letter), true),
            Until(a, b) => fix(go(b, n, succ, letter), go(a, n, succ, letter), false),
            WeakUntil(a, b) => fix(go(b, n, succ, letter), go(a, n, succ, letter), true),
        }
    }
    go(f, n, &succ, &letter)[0]
}

/// Every word of length `0..=max_len` (or `1..=max_len` when `nonempty`)
/// over subsets of `props`.
pub fn all_words(props: &[String], max_len: usize, nonempty: bool) -> Vec<Word> {
    let letters: Vec<BTreeSet<String>> = (0..1u32 << props.len())
        .map(|mask| {
            props
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect();
    let mut out: Vec<Word> = vec![Vec::new()];
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |l| {
                    w.iter()
                        .cloned()
                        .chain(std::iter::once(l.clone()))
                        .collect()
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    if nonempty {
        out.retain(|w| !w.is_empty());
    }
    out
}

pub fn dra_accepts_word(d: &Dra, prefix: &Word, cycle: &Word) -> bool {
    let enc = |w: &Word| {
        w.iter()
            .map(|l| d.letter(l.iter().map(String::as_str)))
            .collect::<Vec<_>>()
    };
    d.accepts(&enc(prefix), &enc(cycle))
        .expect("nonempty cycle")
}

// ---------------------------------------------------------------------------
// End components by exhaustive enumeration

/// Actions of `s` whose successors all stay in `set`.
fn closed_actions(mdp: &Mdp, set: u64, s: usize) -> Vec<usize> {
    (0..mdp.num_actions())
        .filter(|&a| {
            let row = mdp.row(s, a);
            !row.is_empty() && row.iter().all(|&(t, _)| set >> t & 1 == 1)
        })
        .collect()
}

/// True when `set` (a bit mask over states) is the state set of an end component.
fn is_end_component(mdp: &Mdp, set: u64) -> bool {
    let states: Vec<usize> = (0..mdp.num_states())
        .filter(|&s| set >> s & 1 == 1)
        .collect();
    if states.is_empty()
        || states
            .iter()
            .any(|&s| closed_actions(mdp, set, s).is_empty())
    {
        return false;
    }
    // strongly connected under the closed actions: everyone reaches everyone
    let reach_from = |start: usize| {
        let mut seen = 1u64 << start;
        let mut stack = vec![start];
        while let Some(s) = stack.pop() {
            for a in closed_actions(mdp, set, s) {
                for &(t, _) in mdp.row(s, a) {
                    if seen >> t & 1 == 0 {
                        seen |= 1 << t;
                        stack.push(t);
                    }
                }
            }
        }
        seen
    };
    states.iter().all(|&s| reach_from(s) & set == set)
}

/// Maximal end components as `(states, enabled actions per state)`, found
/// by checking every state subset within `allowed`.
pub fn brute_mecs(mdp: &Mdp, allowed: u64) -> BTreeSet<(Vec<usize>, Vec<Vec<usize>>)> {
    let n = mdp.num_states();
    assert!(n <= 20);
    let ecs: Vec<u64> = (1..1u64 << n)
        .filter(|&m| m & !allowed == 0 && is_end_component(mdp, m))
        .collect();
    ecs.iter()
        .filter(|&&m| !ecs.iter().any(|&o| o != m && o & m == m))
        .map(|&m| {
            let states: Vec<usize> = (0..n).filter(|&s| m >> s & 1 == 1).collect();
            let actions = states.iter().map(|&s| closed_actions(mdp, m, s)).collect();
            (states, actions)
        })
        .collect()
}

/// Success states by definition: some end component over states whose
/// automaton component avoids `fin` contains the state and meets `inf`.
pub fn brute_success(p: &ProductPomdp) -> BTreeSet<usize> {
    let mdp = p.underlying_mdp();
    let n = mdp.num_states();
    assert!(n <= 20);
    let mut out = BTreeSet::new();
    for pair in p.automaton().pairs() {
        let allowed: u64 = (0..n)
            .filter(|&i| matches!(p.pair(i), Some((_, q)) if !pair.fin.contains(&q)))
            .fold(0, |m, i| m | 1 << i);
        for set in (1..1u64 << n).filter(|&m| m & !allowed == 0) {
            let meets =
                (0..n).any(|i| set >> i & 1 == 1 && pair.inf.contains(&p.pair(i).unwrap().1));
            if meets && is_end_component(mdp, set) {
                out.extend((0..n).filter(|&i| set >> i & 1 == 1));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Reachability by policy enumeration

/// Reachability probabilities of the Markov chain `rows`, by Gaussian
/// elimination on the states that can reach the target.
pub fn chain_reachability(rows: &[Vec<(usize, f64)>], target: &[bool]) -> Vec<f64> {
    let n = rows.len();
    let mut can = target.to_vec();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !can[s] && rows[s].iter().any(|&(t, p)| p > 0.0 && can[t]) {
                can[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let unknown: Vec<usize> = (0..n).filter(|&s| can[s] && !target[s]).collect();
    let pos: BTreeMap<usize, usize> = unknown.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let k = unknown.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, &s) in unknown.iter().enumerate() {
        a[i][i] += 1.0;
        for &(t, p) in &rows[s] {
            if target[t] {
                a[i][k] += p;
            } else if let Some(&j) = pos.get(&t) {
                a[i][j] -= p;
            }
        }
    }
    for c in 0..k {
        let piv = (c..k)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        for j in c..=k {
            a[c][j] /= d;
        }
        for r in 0..k {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    (0..n)
        .map(|s| {
            if target[s] {
                1.0
            } else {
                pos.get(&s).map_or(0.0, |&i| a[i][k])
            }
        })
        .collect()
}

/// Maximal reachability probability per state, maximized over every
/// deterministic memoryless policy.
pub fn brute_max_reach(mdp: &Mdp, target: &[bool]) -> Vec<f64> {
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let total = (na as u64).pow(n as u32);
    assert!(total <= 1 << 16);
    let mut best = vec![0.0f64; n];
    for code in 0..total {
        let mut c = code;
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|s| {
                let a = (c % na as u64) as usize;
                c /= na as u64;
                mdp.row(s, a).to_vec()
            })
            .collect();
        for (b, v) in best.iter_mut().zip(chain_reachability(&rows, target)) {
            *b = b.max(v);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Policy evaluation

/// Exact value of executing the policy's plan graph from `b0`: the
/// controller starts at the best vector and follows its successor links.
/// Computed by value iteration over (state, vector) pairs from zero, so the
/// result approaches the true value from below.
pub fn plan_value(p: &ProductPomdp, policy: &[AlphaVector], b0: &[(usize, f64)]) -> f64 {
    let (ns, nn) = (p.num_states(), policy.len());
    let mut v = vec![0.0; ns * nn];
    for _ in 0..1_000_000 {
        let mut delta: f64 = 0.0;
        for s in 0..ns {
            for (k, alpha) in policy.iter().enumerate() {
                let a = alpha.action;
                let mut x = p.reward(s, a);
                for &(t, pt) in p.transition_row(s, a) {
                    for (o, &po) in p.observation_row(a, t).iter().enumerate() {
                        if po > 0.0 {
                            let j = alpha.next.get(o).copied().unwrap_or(k);
                            x += pt * po * v[t * nn + j];
                        }
                    }
                }
                delta = delta.max((x - v[s * nn + k]).abs());
                v[s * nn + k] = x;
            }
        }
        if delta < 1e-13 {
            break;
        }
    }
    let start = best_alpha(policy, b0).expect("nonempty policy");
    b0.iter().map(|&(s, q)| q * v[s * nn + start]).sum()
}

/// Optimal value over all policies of horizon `h`, by exhaustive expectimax
/// over the belief tree.
pub fn horizon_value(p: &ProductPomdp, b: &[(usize, f64)], h: usize) -> f64 {
    if h == 0 {
        return 0.0;
    }
    (0..p.num_actions())
        .map(|a| {
            let reward: f64 = b.iter().map(|&(s, q)| q * p.reward(s, a)).sum();
            let pred = p.predict(b, a);
            let future: f64 = (0..p.num_observations())
                .map(|o| {
                    let po: f64 = pred.iter().map(|&(t, q)| q * p.observation(a, t, o)).sum();
                    if po <= 1e-15 {
                        0.0
                    } else {
                        po * horizon_value(p, &p.belief_update(b, a, o).unwrap(), h - 1)
                    }
                })
                .sum();
            reward + future
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Random fixtures

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random distribution over `n` outcomes with support size `1..=k`.
pub fn random_row<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<(usize, f64)> {
    let mut support: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        support.swap(i, rng.gen_range(0..=i));
    }
    support.truncate(rng.gen_range(1..=k.min(n)));
    support.sort_unstable();
    let w: Vec<f64> = support.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    support
        .into_iter()
        .zip(w)
        .map(|(s, x)| (s, x / total))
        .collect()
}

pub fn random_mdp<R: Rng>(rng: &mut R, n: usize, na: usize) -> Mdp {
    let rows = (0..n * na).map(|_| random_row(rng, n, 3)).collect();
    Mdp::new(n, na, rows)
}

/// Random POMDP with labels drawn from `props`.
pub fn random_pomdp<R: Rng>(
    rng: &mut R,
    n: usize,
    na: usize,
    no: usize,
    props: &[&str],
) -> TabularPomdp {
    let mut m = TabularPomdp::new(n, na, no).unwrap();
    for s in 0..n {
        for a in 0..na {
            for (t, p) in random_row(rng, n, 2) {
                m.set_transition(s, a, t, p).unwrap();
            }
        }
    }
    for a in 0..na {
        for t in 0..n {
            let row = random_row(rng, no, no);
            for (o, p) in row {
                m.set_observation(a, t, o, p).unwrap();
            }
        }
    }
    for p in props {
        // every proposition labels at least one state
        m.add_label(rng.gen_range(0..n), *p).unwrap();
        for s in 0..n {
            if rng.gen_bool(0.3) {
                m.add_label(s, *p).unwrap();
            }
        }
    }
    let b0 = random_row(rng, n, 2);
    let mut dense = vec![0.0; n];
    for (s, p) in b0 {
        dense[s] = p;
    }
    m.set_initial_belief(dense).unwrap();
    m
}

/// Tiger-like POMDP: `k` hidden doors, a noisy `listen` action that may let
/// the state drift or fall into the trap, and one `open` action per door.
/// Opening the right door reaches the `a` state, a wrong one the `b` trap.
pub fn random_tiger<R: Rng>(rng: &mut R, k: usize) -> TabularPomdp {
    let (goal, trap) = (k, k + 1);
    let n = k + 2;
    let mut m = TabularPomdp::new(n, k + 1, k).unwrap();
    let accuracy = rng.gen_range(0.55..0.85);
    let drift = rng.gen_range(0.0..0.1);
    let risk = rng.gen_range(0.0..0.05);
    for s in 0..k {
        let mut row = vec![0.0; n];
        row[trap] += risk;
        for t in 0..k {
            row[t] += (1.0 - risk)
                * if t == s {
                    1.0 - drift
                } else {
                    drift / (k - 1) as f64
                };
        }
        for (t, &q) in row.iter().enumerate().filter(|(_, &q)| q > 0.0) {
            m.set_transition(s, 0, t, q).unwrap();
        }
        for door in 0..k {
            let hit = if door == s {
                rng.gen_range(0.8..1.0)
            } else {
                0.0
            };
            if hit > 0.0 {
                m.set_transition(s, door + 1, goal, hit).unwrap();
            }
            m.set_transition(s, door + 1, trap, 1.0 - hit).unwrap();
        }
    }
    for a in 0..=k {
        m.set_transition(goal, a, goal, 1.0).unwrap();
        m.set_transition(trap, a, trap, 1.0).unwrap();
    }
    for a in 0..=k {
        for t in 0..n {
            for o in 0..k {
                let q = if a == 0 && t < k {
                    if o == t {
                        accuracy
                    } else {
                        (1.0 - accuracy) / (k - 1) as f64
                    }
                } else {
                    1.0 / k as f64
                };
                m.set_observation(a, t, o, q).unwrap();
            }
        }
    }
    m.add_label(goal, "a").unwrap();
    m.add_label(trap, "b").unwrap();
    let mut b0 = vec![0.0; n];
    b0[..k].iter_mut().for_each(|x| *x = 1.0 / k as f64);
    m.set_initial_belief(b0).unwrap();
    m
}

/// Formulas over `a` and `b` covering every supported fragment.
pub const SMALL_FORMULAS: &[&str] = &[
    "F a",
    "G !a",
    "a U b",
    "!a U b & F a",
    "G F a",
    "F G b",
    "F a & G !b",
    "X a | F b",
    "G (!a | X b)",
];

/// Formulas used by the benchmarks, with their propositions.
pub const BENCHMARK_FORMULAS: &[&str] = &[
    "!C U A & !C U B",
    "G !C",
    "!det U B",
    "G !bad",
    "F good & F exit",
    "F good & F exit & G !bad",
    "G !A & F B",
    "G F A",
];

// ---------------------------------------------------------------------------
// Product structure

/// Every live, non-success product row projects onto the base model row.
pub fn assert_marginalizes(p: &ProductPomdp) {
    let base = p.base();
    for i in 0..p.num_live() {
        let (s, _) = p.pair(i).unwrap();
        if p.is_success(i) {
            continue;
        }
        for a in 0..p.num_actions() {
            let mut marginal = vec![0.0; base.num_states()];
            for &(j, q) in p.transition_row(i, a) {
                if let Some((t, _)) = p.pair(j) {
                    marginal[t] += q;
                } else if j == p.sink() {
                    // all mass of an undefined automaton move
                    marginal.iter_mut().for_each(|x| *x = f64::NAN);
                }
            }
            if marginal.iter().any(|x| x.is_nan()) {
                continue;
            }
            for t in 0..base.num_states() {
                assert!(
                    (marginal[t] - base.transition(s, a, t)).abs() < 1e-12,
                    "row ({i}, {a})"
                );
            }
        }
    }
}
