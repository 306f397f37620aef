//! Deterministic Rabin automata and the fragment-based LTL translation.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::formula::{classify, to_nnf, Fragment, LtlFormula};
use super::progression::Dnf;
use super::LtlError;

/// A letter: bit `i` is set when proposition `aps[i]` holds.
pub type Letter = u64;

/// One Rabin pair: a run accepts through it when it visits `inf` (K)
/// infinitely often and `fin` (L) only finitely often.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RabinPair {
    pub fin: BTreeSet<usize>,
    pub inf: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dra {
    aps: Vec<String>,
    initial: usize,
    /// `delta[q * 2^|aps| + letter]`; `None` only for partial imported automata.
    delta: Vec<Option<usize>>,
    pairs: Vec<RabinPair>,
    names: Vec<String>,
}

/// Cap on the number of states the translation may create.
const MAX_STATES: usize = 100_000;

impl Dra {
    pub fn new(
        aps: Vec<String>,
        num_states: usize,
        initial: usize,
        delta: Vec<Option<usize>>,
        pairs: Vec<RabinPair>,
    ) -> Result<Self, LtlError> {
        if aps.len() > 16 {
            return Err(LtlError::Automaton(format!(
                "{} propositions is too many",
                aps.len()
            )));
        }
        let letters = 1usize << aps.len();
        if num_states == 0 || initial >= num_states || delta.len() != num_states * letters {
            return Err(LtlError::Automaton(
                "inconsistent automaton dimensions".into(),
            ));
        }
        if delta.iter().flatten().any(|&q| q >= num_states)
            || pairs
                .iter()
                .any(|p| p.fin.iter().chain(&p.inf).any(|&q| q >= num_states))
        {
            return Err(LtlError::Automaton("state index out of range".into()));
        }
        let names = (0..num_states).map(|q| q.to_string()).collect();
        Ok(Self {
            aps,
            initial,
            delta,
            pairs,
            names,
        })
    }

    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn num_letters(&self) -> usize {
        1 << self.aps.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn pairs(&self) -> &[RabinPair] {
        &self.pairs
    }

    /// Human-readable description of state `q` (its progression formula for
    /// translated automata).
    pub fn state_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn next(&self, q: usize, letter: Letter) -> Option<usize> {
        self.delta[q * self.num_letters() + letter as usize]
    }

    pub fn is_complete(&self) -> bool {
        self.delta.iter().all(Option::is_some)
    }

    /// Builds a letter from the propositions that hold; unknown names are ignored.
    pub fn letter<'a>(&self, props: impl IntoIterator<Item = &'a str>) -> Letter {
        let mut out = 0;
        for p in props {
            if let Some(i) = self.aps.iter().position(|a| a == p) {
                out |= 1 << i;
            }
        }
        out
    }

    /// Runs the automaton on the lasso `prefix · cycle^ω` and evaluates the
    /// Rabin condition on the states visited infinitely often.
    pub fn accepts(&self, prefix: &[Letter], cycle: &[Letter]) -> Result<bool, LtlError> {
        if cycle.is_empty() {
            return Err(LtlError::EmptyCycle);
        }
        let mut q = self.initial;
        for &l in prefix {
            match self.next(q, l) {
                Some(n) => q = n,
                None => return Ok(false),
            }
        }
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut trace = Vec::new();
        let mut pos = 0;
        loop {
            if let Some(&start) = seen.get(&(q, pos)) {
                let inf: BTreeSet<usize> = trace[start..].iter().copied().collect();
                return Ok(self
                    .pairs
                    .iter()
                    .any(|p| !inf.is_disjoint(&p.inf) && inf.is_disjoint(&p.fin)));
            }
            seen.insert((q, pos), trace.len());
            trace.push(q);
            match self.next(q, cycle[pos]) {
                Some(n) => q = n,
                None => return Ok(false),
            }
            pos = (pos + 1) % cycle.len();
        }
    }

    /// Adds a rejecting absorbing sink and routes every undefined transition to it.
    pub fn complete_with_sink(&mut self) {
        if self.is_complete() {
            return;
        }
        let sink = self.num_states();
        let letters = self.num_letters();
        for d in self.delta.iter_mut() {
            d.get_or_insert(sink);
        }
        self.delta.extend(std::iter::repeat_n(Some(sink), letters));
        self.names.push("sink".into());
    }

    pub(crate) fn set_names(&mut self, names: Vec<String>) {
        debug_assert_eq!(names.len(), self.names.len());
        self.names = names;
    }

    /// Graphviz rendering with one edge per successor, labeled by the letters
    /// that take it.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dra {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.num_states() {
            let accepting = self.pairs.iter().any(|p| p.inf.contains(&q));
            let shape = if accepting { "doublecircle" } else { "circle" };
            out.push_str(&format!(
                "  q{q} [shape={shape}, label=\"{q}\\n{}\"];\n",
                escape(&self.names[q])
            ));
        }
        out.push_str(&format!("  init -> q{};\n", self.initial));
        for q in 0..self.num_states() {
            let mut by_dest: Vec<(usize, Vec<Letter>)> = Vec::new();
            for l in 0..self.num_letters() as Letter {
                if let Some(d) = self.next(q, l) {
                    match by_dest.iter_mut().find(|(x, _)| *x == d) {
                        Some((_, ls)) => ls.push(l),
                        None => by_dest.push((d, vec![l])),
                    }
                }
            }
            for (d, ls) in by_dest {
                let label: Vec<String> = ls.iter().map(|&l| self.letter_name(l)).collect();
                out.push_str(&format!(
                    "  q{q} -> q{d} [label=\"{}\"];\n",
                    escape(&label.join(", "))
                ));
            }
        }
        out.push_str("}\n");
        out
    }

    fn letter_name(&self, l: Letter) -> String {
        let held: Vec<&str> = (0..self.aps.len())
            .filter(|i| l & (1 << i) != 0)
            .map(|i| self.aps[i].as_str())
            .collect();
        format!("{{{}}}", held.join(","))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Components of a translated state. `None` means the rejecting sink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Component {
    cosafe: Dnf,
    safe: Dnf,
    round: usize,
    round_done: bool,
    persist_ok: bool,
}

/// Translates a formula whose conjuncts are co-safe, safe, recurrence
/// (`G F p`) or persistence (`F G p`) into a complete DRA with one pair.
///
/// Co-safe conjuncts are tracked together by progression and are satisfied
/// once their progression reaches `true`; safe conjuncts likewise fail when
/// theirs reaches `false`. Recurrence conjuncts share a round-robin counter
/// whose completed rounds are the `K` states; persistence conjuncts share a
/// flag recording whether the last letter satisfied all of them, whose
/// negative states form `L`.
pub fn ltl_to_dra(f: &LtlFormula) -> Result<Dra, LtlError> {
    let nnf = to_nnf(f)?;
    let mut cosafe = LtlFormula::True;
    let mut safe = LtlFormula::True;
    let mut recurrence: Vec<LtlFormula> = Vec::new();
    let mut persistence: Option<LtlFormula> = None;
    for (conj, tag) in classify(&nnf) {
        match tag {
            Fragment::CoSafe => cosafe = LtlFormula::and(cosafe, conj),
            Fragment::Safe => safe = LtlFormula::and(safe, conj),
            Fragment::Recurrence => match conj {
                LtlFormula::Globally(inner) => match *inner {
                    LtlFormula::Finally(p) => recurrence.push(*p),
                    _ => unreachable!("classified as recurrence"),
                },
                _ => unreachable!("classified as recurrence"),
            },
            Fragment::Persistence => match conj {
                LtlFormula::Finally(inner) => match *inner {
                    LtlFormula::Globally(p) => {
                        persistence = Some(match persistence.take() {
                            Some(prev) => LtlFormula::and(prev, *p),
                            None => *p,
                        })
                    }
                    _ => unreachable!("classified as persistence"),
                },
                _ => unreachable!("classified as persistence"),
            },
            Fragment::Unsupported => return Err(LtlError::UnsupportedFragment(conj.to_string())),
        }
    }

    let aps: Vec<String> = f.propositions().into_iter().collect();
    if aps.len() > 16 {
        return Err(LtlError::Automaton(format!(
            "{} propositions is too many",
            aps.len()
        )));
    }
    let letters = 1usize << aps.len();
    let holds_in = |l: usize| {
        let aps = &aps;
        move |p: &str| {
            aps.iter()
                .position(|a| a == p)
                .is_some_and(|i| l & (1 << i) != 0)
        }
    };

    let start = Component {
        cosafe: Dnf::of(&cosafe),
        safe: Dnf::of(&safe),
        round: 0,
        round_done: recurrence.is_empty(),
        persist_ok: true,
    };
    let mut index: HashMap<Option<Component>, usize> = HashMap::new();
    let mut states: Vec<Option<Component>> = Vec::new();
    let mut queue = VecDeque::new();
    let intern = |c: Option<Component>,
                  index: &mut HashMap<Option<Component>, usize>,
                  states: &mut Vec<Option<Component>>,
                  queue: &mut VecDeque<usize>|
     -> usize {
        let c = match c {
            Some(c) if c.cosafe.is_false() || c.safe.is_false() => None,
            other => other,
        };
        *index.entry(c.clone()).or_insert_with(|| {
            states.push(c);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };
    let initial = intern(Some(start), &mut index, &mut states, &mut queue);
    let mut delta: Vec<Option<usize>> = Vec::new();
    while let Some(q) = queue.pop_front() {
        if states.len() > MAX_STATES {
            return Err(LtlError::Automaton(format!(
                "more than {MAX_STATES} states"
            )));
        }
        if delta.len() < states.len() * letters {
            delta.resize(states.len() * letters, None);
        }
        for l in 0..letters {
            let holds = holds_in(l);
            let next = states[q].as_ref().map(|c| {
                let mut round = c.round;
                while round < recurrence.len()
                    && recurrence[round]
                        .eval_propositional(&holds)
                        .unwrap_or(false)
                {
                    round += 1;
                }
                let round_done = round == recurrence.len();
                if round_done {
                    round = 0;
                }
                Component {
                    cosafe: c.cosafe.progress(&holds),
                    safe: c.safe.progress(&holds),
                    round,
                    round_done,
                    persist_ok: persistence
                        .as_ref()
                        .is_none_or(|p| p.eval_propositional(&holds).unwrap_or(false)),
                }
            });
            let target = intern(next, &mut index, &mut states, &mut queue);
            if delta.len() < states.len() * letters {
                delta.resize(states.len() * letters, None);
            }
            delta[q * letters + l] = Some(target);
        }
    }

    let mut pair = RabinPair::default();
    for (q, c) in states.iter().enumerate() {
        match c {
            None => {
                pair.fin.insert(q);
            }
            Some(c) => {
                if !c.persist_ok {
                    pair.fin.insert(q);
                } else if c.cosafe.is_true() && c.round_done {
                    pair.inf.insert(q);
                }
            }
        }
    }
    let names = states
        .iter()
        .map(|c| match c {
            None => "sink".to_string(),
            Some(c) => {
                let mut parts = vec![];
                if !c.cosafe.is_true() {
                    parts.push(c.cosafe.describe());
                }
                if !c.safe.is_true() {
                    parts.push(c.safe.describe());
                }
                if !recurrence.is_empty() {
                    parts.push(format!(
                        "round {}{}",
                        c.round,
                        if c.round_done { " done" } else { "" }
                    ));
                }
                if persistence.is_some() && !c.persist_ok {
                    parts.push("persist broken".into());
                }
                if parts.is_empty() {
                    "true".into()
                } else {
                    parts.join(" ; ")
                }
            }
        })
        .collect();
    let mut dra = Dra::new(aps, states.len(), initial, delta, vec![pair])?;
    dra.set_names(names);
    Ok(dra)
}
