//! Formula progression over letters with formulas kept in a canonical
//! disjunctive normal form.
//!
//! A progression state is a set of clauses, each clause a set of temporal
//! terms (literals, `X`, `F`, `G`, `U`, `W` nodes of an NNF formula). The
//! empty clause set is `false`; the set holding only the empty clause is
//! `true`. Clauses containing complementary literals are dropped and
//! subsumed clauses are absorbed, so equal formulas get equal states no
//! matter the order in which they were built.

use std::collections::BTreeSet;

use super::formula::LtlFormula;

pub(crate) type Clause = BTreeSet<LtlFormula>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct Dnf(BTreeSet<Clause>);

impl Dnf {
    pub fn truth() -> Self {
        Dnf(BTreeSet::from([Clause::new()]))
    }

    pub fn falsity() -> Self {
        Dnf(BTreeSet::new())
    }

    pub fn is_true(&self) -> bool {
        self.0.len() == 1 && self.0.iter().next().is_some_and(|c| c.is_empty())
    }

    pub fn is_false(&self) -> bool {
        self.0.is_empty()
    }

    fn term(t: LtlFormula) -> Self {
        let mut c = Clause::new();
        c.insert(t);
        Dnf::normalize(BTreeSet::from([c]))
    }

    fn normalize(clauses: BTreeSet<Clause>) -> Self {
        let consistent: Vec<Clause> = clauses
            .into_iter()
            .filter(|c| {
                !c.iter().any(|t| match t {
                    LtlFormula::Not(p) => c.contains(&**p),
                    LtlFormula::False => true,
                    _ => false,
                })
            })
            .map(|mut c| {
                c.remove(&LtlFormula::True);
                c
            })
            .collect();
        let mut kept = BTreeSet::new();
        for c in &consistent {
            let absorbed = consistent.iter().any(|d| d != c && d.is_subset(c));
            if !absorbed {
                kept.insert(c.clone());
            }
        }
        Dnf(kept)
    }

    pub fn or(&self, other: &Dnf) -> Dnf {
        Dnf::normalize(self.0.union(&other.0).cloned().collect())
    }

    pub fn and(&self, other: &Dnf) -> Dnf {
        let mut out = BTreeSet::new();
        for a in &self.0 {
            for b in &other.0 {
                out.insert(a.union(b).cloned().collect());
            }
        }
        Dnf::normalize(out)
    }

    /// DNF of an NNF formula.
    pub fn of(f: &LtlFormula) -> Dnf {
        match f {
            LtlFormula::True => Dnf::truth(),
            LtlFormula::False => Dnf::falsity(),
            LtlFormula::And(a, b) => Dnf::of(a).and(&Dnf::of(b)),
            LtlFormula::Or(a, b) => Dnf::of(a).or(&Dnf::of(b)),
            other => Dnf::term(other.clone()),
        }
    }

    /// Progression through one letter.
    pub fn progress(&self, holds: &dyn Fn(&str) -> bool) -> Dnf {
        let mut out = Dnf::falsity();
        for clause in &self.0 {
            let mut acc = Dnf::truth();
            for t in clause {
                acc = acc.and(&progress_term(t, holds));
                if acc.is_false() {
                    break;
                }
            }
            out = out.or(&acc);
            if out.is_true() {
                break;
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        if self.is_true() {
            return "true".into();
        }
        if self.is_false() {
            return "false".into();
        }
        self.0
            .iter()
            .map(|c| {
                c.iter()
                    .map(|t| t.to_string())
                    .collect::<Vec<_>>()
                    .join(" & ")
            })
            .map(|c| {
                if self.0.len() > 1 {
                    format!("({c})")
                } else {
                    c
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

fn progress_term(t: &LtlFormula, holds: &dyn Fn(&str) -> bool) -> Dnf {
    use LtlFormula::*;
    let bool_dnf = |b: bool| if b { Dnf::truth() } else { Dnf::falsity() };
    match t {
        True => Dnf::truth(),
        False => Dnf::falsity(),
        Atom(p) => bool_dnf(holds(p)),
        Not(inner) => match &**inner {
            Atom(p) => bool_dnf(!holds(p)),
            other => panic!("progression expects NNF, found !({other})"),
        },
        Next(a) => Dnf::of(a),
        Finally(a) => Dnf::of(a).progress(holds).or(&Dnf::term(t.clone())),
        Globally(a) => Dnf::of(a).progress(holds).and(&Dnf::term(t.clone())),
        Until(a, b) | WeakUntil(a, b) => {
            let stay = Dnf::of(a).progress(holds).and(&Dnf::term(t.clone()));
            Dnf::of(b).progress(holds).or(&stay)
        }
        And(..) | Or(..) => Dnf::of(t).progress(holds),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::formula::{parse_ltl, to_nnf};

    fn dnf(text: &str) -> Dnf {
        Dnf::of(&to_nnf(&parse_ltl(text).unwrap()).unwrap())
    }

    #[test]
    fn canonical_form_is_order_insensitive() {
        assert_eq!(dnf("a & (b | c)"), dnf("(c | b) & a"));
        assert_eq!(dnf("a & (a | b)"), dnf("a"));
        assert_eq!(dnf("a | a & b"), dnf("a"));
        assert!(dnf("a & !a").is_false());
        assert!(dnf("true & (false | true)").is_true());
    }

    #[test]
    fn progression_of_eventually() {
        let f = dnf("F a");
        assert!(f.progress(&|p| p == "a").is_true());
        assert_eq!(f.progress(&|_| false), f);
    }

    #[test]
    fn progression_of_until() {
        let f = dnf("!c U a");
        assert!(f.progress(&|p| p == "a").is_true());
        assert!(f.progress(&|p| p == "c").is_false());
        assert_eq!(f.progress(&|_| false), f);
    }

    #[test]
    fn normalization_is_idempotent() {
        let f = dnf("(F a | G b) & (F a | X c) & F a");
        assert_eq!(Dnf::normalize(f.0.clone()), f);
    }
}
