//! LTL syntax tree, parser, negation normal form and fragment classification.

use std::collections::BTreeSet;
use std::fmt;

use super::LtlError;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Finally(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
    /// Weak until. Not part of the surface syntax; produced by [`to_nnf`]
    /// when negating an until over propositional operands.
    WeakUntil(Box<LtlFormula>, Box<LtlFormula>),
}

use LtlFormula::*;

impl LtlFormula {
    pub fn atom(name: &str) -> Self {
        Atom(name.to_string())
    }

    pub fn not(f: LtlFormula) -> Self {
        Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        Next(Box::new(f))
    }

    pub fn globally(f: LtlFormula) -> Self {
        Globally(Box::new(f))
    }

    pub fn finally(f: LtlFormula) -> Self {
        Finally(Box::new(f))
    }

    pub fn until(a: LtlFormula, b: LtlFormula) -> Self {
        Until(Box::new(a), Box::new(b))
    }

    pub fn weak_until(a: LtlFormula, b: LtlFormula) -> Self {
        WeakUntil(Box::new(a), Box::new(b))
    }

    /// Atomic propositions, sorted.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<String>) {
        match self {
            True | False => {}
            Atom(p) => {
                out.insert(p.clone());
            }
            Not(a) | Next(a) | Globally(a) | Finally(a) => a.collect_props(out),
            And(a, b) | Or(a, b) | Until(a, b) | WeakUntil(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
        }
    }

    /// True when the formula has no temporal operator.
    pub fn is_propositional(&self) -> bool {
        match self {
            True | False | Atom(_) => true,
            Not(a) => a.is_propositional(),
            And(a, b) | Or(a, b) => a.is_propositional() && b.is_propositional(),
            _ => false,
        }
    }

    fn any_node(&self, pred: &dyn Fn(&LtlFormula) -> bool) -> bool {
        pred(self)
            || match self {
                True | False | Atom(_) => false,
                Not(a) | Next(a) | Globally(a) | Finally(a) => a.any_node(pred),
                And(a, b) | Or(a, b) | Until(a, b) | WeakUntil(a, b) => {
                    a.any_node(pred) || b.any_node(pred)
                }
            }
    }

    /// Evaluates a propositional formula on one letter.
    pub fn eval_propositional(&self, holds: &dyn Fn(&str) -> bool) -> Option<bool> {
        Some(match self {
            True => true,
            False => false,
            Atom(p) => holds(p),
            Not(a) => !a.eval_propositional(holds)?,
            And(a, b) => a.eval_propositional(holds)? && b.eval_propositional(holds)?,
            Or(a, b) => a.eval_propositional(holds)? || b.eval_propositional(holds)?,
            _ => return None,
        })
    }

    /// Top-level conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&LtlFormula> {
        match self {
            And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            True => write!(f, "true"),
            False => write!(f, "false"),
            Atom(p) => write!(f, "{p}"),
            Not(a) => write!(f, "!{}", Paren(a)),
            And(a, b) => write!(f, "{} & {}", Paren(a), Paren(b)),
            Or(a, b) => write!(f, "{} | {}", Paren(a), Paren(b)),
            Next(a) => write!(f, "X {}", Paren(a)),
            Globally(a) => write!(f, "G {}", Paren(a)),
            Finally(a) => write!(f, "F {}", Paren(a)),
            Until(a, b) => write!(f, "{} U {}", Paren(a), Paren(b)),
            WeakUntil(a, b) => write!(f, "{} W {}", Paren(a), Paren(b)),
        }
    }
}

struct Paren<'a>(&'a LtlFormula);

impl fmt::Display for Paren<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            True | False | Atom(_) => write!(f, "{}", self.0),
            other => write!(f, "({other})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
    Globally,
    Finally,
    Next,
    Until,
    True,
    False,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, LtlError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        i += 1;
        let tok = match c {
            c if c.is_whitespace() => continue,
            '!' | '~' | '¬' => Tok::Not,
            '&' | '∧' => {
                if matches!(chars.get(i), Some((_, '&'))) {
                    i += 1;
                }
                Tok::And
            }
            '|' | '∨' => {
                if matches!(chars.get(i), Some((_, '|'))) {
                    i += 1;
                }
                Tok::Or
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::from(c);
                while let Some(&(_, c)) = chars.get(i) {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        i += 1;
                    } else {
                        break;
                    }
                }
                match word.as_str() {
                    "G" => Tok::Globally,
                    "F" => Tok::Finally,
                    "X" => Tok::Next,
                    "U" => Tok::Until,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ => Tok::Ident(word),
                }
            }
            other => {
                return Err(LtlError::Parse {
                    position: pos,
                    message: format!("unknown token `{other}`"),
                })
            }
        };
        out.push((pos, tok));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> LtlError {
        LtlError::Parse {
            position: self.pos(),
            message: message.into(),
        }
    }

    fn or_expr(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            lhs = LtlFormula::or(lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<LtlFormula, LtlError> {
        let mut lhs = self.until_expr()?;
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            lhs = LtlFormula::and(lhs, self.until_expr()?);
        }
        Ok(lhs)
    }

    fn until_expr(&mut self) -> Result<LtlFormula, LtlError> {
        let lhs = self.unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.at += 1;
            let rhs = self.until_expr()?;
            return Ok(LtlFormula::until(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlError> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.at += 1;
        match tok {
            Tok::Not => Ok(LtlFormula::not(self.unary()?)),
            Tok::Globally => Ok(LtlFormula::globally(self.unary()?)),
            Tok::Finally => Ok(LtlFormula::finally(self.unary()?)),
            Tok::Next => Ok(LtlFormula::next(self.unary()?)),
            Tok::True => Ok(True),
            Tok::False => Ok(False),
            Tok::Ident(p) => Ok(Atom(p)),
            Tok::LParen => {
                let inner = self.or_expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(self.err("expected `)`"));
                }
                self.at += 1;
                Ok(inner)
            }
            other => {
                self.at -= 1;
                Err(self.err(format!("unexpected token {other:?}")))
            }
        }
    }
}

/// Parses ASCII (or Unicode) LTL. Unary operators bind tightest, then `U`
/// (right-associative), then `&`, then `|`.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, LtlError> {
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let f = p.or_expr()?;
    if p.at != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(f)
}

/// Pushes negations down to atoms.
pub fn to_nnf(f: &LtlFormula) -> Result<LtlFormula, LtlError> {
    Ok(match f {
        True | False | Atom(_) => f.clone(),
        Not(inner) => negate(inner)?,
        And(a, b) => LtlFormula::and(to_nnf(a)?, to_nnf(b)?),
        Or(a, b) => LtlFormula::or(to_nnf(a)?, to_nnf(b)?),
        Next(a) => LtlFormula::next(to_nnf(a)?),
        Globally(a) => LtlFormula::globally(to_nnf(a)?),
        Finally(a) => LtlFormula::finally(to_nnf(a)?),
        Until(a, b) => LtlFormula::until(to_nnf(a)?, to_nnf(b)?),
        WeakUntil(a, b) => LtlFormula::weak_until(to_nnf(a)?, to_nnf(b)?),
    })
}

/// NNF of `¬f`.
fn negate(f: &LtlFormula) -> Result<LtlFormula, LtlError> {
    Ok(match f {
        True => False,
        False => True,
        Atom(_) => LtlFormula::not(f.clone()),
        Not(inner) => to_nnf(inner)?,
        And(a, b) => LtlFormula::or(negate(a)?, negate(b)?),
        Or(a, b) => LtlFormula::and(negate(a)?, negate(b)?),
        Next(a) => LtlFormula::next(negate(a)?),
        Globally(a) => LtlFormula::finally(negate(a)?),
        Finally(a) => LtlFormula::globally(negate(a)?),
        // ¬(a U b) ≡ ¬b W (¬a ∧ ¬b), and dually for W.
        Until(a, b) | WeakUntil(a, b) => {
            if !(a.is_propositional() && b.is_propositional()) {
                return Err(LtlError::UnsupportedNegation(f.to_string()));
            }
            let (na, nb) = (negate(a)?, negate(b)?);
            let rhs = LtlFormula::and(na, nb.clone());
            if matches!(f, Until(..)) {
                LtlFormula::weak_until(nb, rhs)
            } else {
                LtlFormula::until(nb, rhs)
            }
        }
    })
}

/// Fragment of one top-level conjunct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fragment {
    CoSafe,
    Safe,
    Recurrence,
    Persistence,
    Unsupported,
}

fn fragment_of(f: &LtlFormula) -> Fragment {
    let has_g = f.any_node(&|n| matches!(n, Globally(_) | WeakUntil(..)));
    let has_f = f.any_node(&|n| matches!(n, Finally(_) | Until(..)));
    if !has_g {
        return Fragment::CoSafe;
    }
    if !has_f {
        return Fragment::Safe;
    }
    match f {
        Globally(inner) if matches!(&**inner, Finally(p) if p.is_propositional()) => {
            Fragment::Recurrence
        }
        Finally(inner) if matches!(&**inner, Globally(p) if p.is_propositional()) => {
            Fragment::Persistence
        }
        _ => Fragment::Unsupported,
    }
}

/// Splits an NNF formula into top-level conjuncts and tags each one.
pub fn classify(f: &LtlFormula) -> Vec<(LtlFormula, Fragment)> {
    f.conjuncts()
        .into_iter()
        .map(|c| (c.clone(), fragment_of(c)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(p: &str) -> LtlFormula {
        LtlFormula::atom(p)
    }

    #[test]
    fn parses_constrained_reachability() {
        let f = parse_ltl("!C U A & !C U B").unwrap();
        let expected = LtlFormula::and(
            LtlFormula::until(LtlFormula::not(a("C")), a("A")),
            LtlFormula::until(LtlFormula::not(a("C")), a("B")),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn parses_single_atom_and_literals() {
        assert_eq!(parse_ltl("p").unwrap(), a("p"));
        assert_eq!(
            parse_ltl("true | false").unwrap(),
            LtlFormula::or(True, False)
        );
        assert_eq!(parse_ltl("Good").unwrap(), a("Good"));
    }

    #[test]
    fn until_is_right_associative_and_binds_tighter_than_and() {
        let f = parse_ltl("a U b U c").unwrap();
        assert_eq!(
            f,
            LtlFormula::until(a("a"), LtlFormula::until(a("b"), a("c")))
        );
        let f = parse_ltl("G a U b").unwrap();
        assert_eq!(f, LtlFormula::until(LtlFormula::globally(a("a")), a("b")));
        let f = parse_ltl("a | b & c").unwrap();
        assert_eq!(f, LtlFormula::or(a("a"), LtlFormula::and(a("b"), a("c"))));
    }

    #[test]
    fn unbalanced_paren_fails_at_end() {
        match parse_ltl("G (F A") {
            Err(LtlError::Parse { position, .. }) => assert_eq!(position, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_ltl("a $ b"),
            Err(LtlError::Parse { position: 2, .. })
        ));
        assert!(matches!(parse_ltl("a b"), Err(LtlError::Parse { .. })));
    }

    #[test]
    fn display_reparses() {
        for text in [
            "!C U A & !C U B",
            "F good & F exit & G !bad",
            "G (F A) | X (a U !b)",
        ] {
            let f = parse_ltl(text).unwrap();
            assert_eq!(parse_ltl(&f.to_string()).unwrap(), f);
        }
    }

    #[test]
    fn nnf_dualities() {
        let f = to_nnf(&parse_ltl("!(A | B)").unwrap()).unwrap();
        assert_eq!(
            f,
            LtlFormula::and(LtlFormula::not(a("A")), LtlFormula::not(a("B")))
        );
        let f = to_nnf(&parse_ltl("!F A").unwrap()).unwrap();
        assert_eq!(f, LtlFormula::globally(LtlFormula::not(a("A"))));
        let f = to_nnf(&parse_ltl("!X !G A").unwrap()).unwrap();
        assert_eq!(f, LtlFormula::next(LtlFormula::globally(a("A"))));
    }

    #[test]
    fn nnf_rewrites_propositional_until() {
        let f = to_nnf(&parse_ltl("!(a U b)").unwrap()).unwrap();
        let nb = LtlFormula::not(a("b"));
        assert_eq!(
            f,
            LtlFormula::weak_until(nb.clone(), LtlFormula::and(LtlFormula::not(a("a")), nb))
        );
    }

    #[test]
    fn nnf_rejects_temporal_until_negation() {
        assert!(matches!(
            to_nnf(&parse_ltl("!(A U (F B))").unwrap()),
            Err(LtlError::UnsupportedNegation(_))
        ));
    }

    #[test]
    fn classification() {
        let f = to_nnf(&parse_ltl("F good & F exit & G !bad").unwrap()).unwrap();
        let tags: Vec<Fragment> = classify(&f).into_iter().map(|(_, t)| t).collect();
        assert_eq!(
            tags,
            vec![Fragment::CoSafe, Fragment::CoSafe, Fragment::Safe]
        );

        let tags: Vec<Fragment> = classify(&parse_ltl("G F A").unwrap())
            .into_iter()
            .map(|(_, t)| t)
            .collect();
        assert_eq!(tags, vec![Fragment::Recurrence]);

        let f = parse_ltl("G (F A) & F (G B) & (F A U G B)").unwrap();
        let tags: Vec<Fragment> = classify(&f).into_iter().map(|(_, t)| t).collect();
        assert_eq!(
            tags,
            vec![
                Fragment::Recurrence,
                Fragment::Persistence,
                Fragment::Unsupported
            ]
        );
    }
}
