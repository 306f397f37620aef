//! Import and export of deterministic Rabin automata in a subset of the
//! Hanoi Omega-Automata (HOA v1) format: explicit edge labels, state-based
//! acceptance, and `Fin(i) & Inf(j)` pair disjunctions (or `t` / `f`).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::dra::{Dra, Letter, RabinPair};
use super::LtlError;

fn hoa_err(message: impl Into<String>) -> LtlError {
    LtlError::Hoa(message.into())
}

/// Writes `d` as HOA. Each edge label is a disjunction of full minterms.
pub fn write_hoa(d: &Dra) -> String {
    let mut out = String::from("HOA: v1\n");
    let _ = writeln!(out, "States: {}", d.num_states());
    let _ = writeln!(out, "Start: {}", d.initial());
    let aps: Vec<String> = d.aps().iter().map(|a| format!("\"{a}\"")).collect();
    let _ = writeln!(
        out,
        "AP: {}{}{}",
        d.aps().len(),
        if aps.is_empty() { "" } else { " " },
        aps.join(" ")
    );
    let k = d.pairs().len();
    let _ = writeln!(out, "acc-name: Rabin {k}");
    if k == 0 {
        out.push_str("Acceptance: 0 f\n");
    } else {
        let conds: Vec<String> = (0..k)
            .map(|i| format!("(Fin({}) & Inf({}))", 2 * i, 2 * i + 1))
            .collect();
        let _ = writeln!(out, "Acceptance: {} {}", 2 * k, conds.join(" | "));
    }
    out.push_str("properties: trans-labels explicit-labels state-acc deterministic");
    if d.is_complete() {
        out.push_str(" complete");
    }
    out.push_str("\n--BODY--\n");
    let n_aps = d.aps().len();
    for q in 0..d.num_states() {
        let mut sets = Vec::new();
        for (i, p) in d.pairs().iter().enumerate() {
            if p.fin.contains(&q) {
                sets.push(2 * i);
            }
            if p.inf.contains(&q) {
                sets.push(2 * i + 1);
            }
        }
        let _ = write!(out, "State: {q} \"{}\"", d.state_name(q).replace('"', "'"));
        if !sets.is_empty() {
            let s: Vec<String> = sets.iter().map(|x| x.to_string()).collect();
            let _ = write!(out, " {{{}}}", s.join(" "));
        }
        out.push('\n');
        let mut by_dest: Vec<(usize, Vec<Letter>)> = Vec::new();
        for l in 0..d.num_letters() as Letter {
            if let Some(dest) = d.next(q, l) {
                match by_dest.iter_mut().find(|(x, _)| *x == dest) {
                    Some((_, ls)) => ls.push(l),
                    None => by_dest.push((dest, vec![l])),
                }
            }
        }
        for (dest, ls) in by_dest {
            let label = if n_aps == 0 {
                "t".to_string()
            } else {
                ls.iter()
                    .map(|&l| {
                        (0..n_aps)
                            .map(|i| {
                                if l & (1 << i) != 0 {
                                    i.to_string()
                                } else {
                                    format!("!{i}")
                                }
                            })
                            .collect::<Vec<_>>()
                            .join("&")
                    })
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            let _ = writeln!(out, "[{label}] {dest}");
        }
    }
    out.push_str("--END--\n");
    out
}

#[derive(Debug, Clone)]
enum Label {
    True,
    False,
    Ap(usize),
    Not(Box<Label>),
    And(Box<Label>, Box<Label>),
    Or(Box<Label>, Box<Label>),
}

impl Label {
    fn eval(&self, l: Letter) -> bool {
        match self {
            Label::True => true,
            Label::False => false,
            Label::Ap(i) => l & (1 << i) != 0,
            Label::Not(a) => !a.eval(l),
            Label::And(a, b) => a.eval(l) && b.eval(l),
            Label::Or(a, b) => a.eval(l) || b.eval(l),
        }
    }
}

/// Tokens shared by label and acceptance expressions.
fn lex(text: &str) -> Result<Vec<String>, LtlError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if "!&|()".contains(c) {
            out.push(c.to_string());
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(chars[start..i].iter().collect());
        } else {
            return Err(hoa_err(format!("unexpected character `{c}` in `{text}`")));
        }
    }
    Ok(out)
}

struct LabelParser<'a> {
    toks: &'a [String],
    at: usize,
    num_aps: usize,
}

impl LabelParser<'_> {
    fn peek(&self) -> Option<&str> {
        self.toks.get(self.at).map(String::as_str)
    }

    fn or(&mut self) -> Result<Label, LtlError> {
        let mut lhs = self.and()?;
        while self.peek() == Some("|") {
            self.at += 1;
            lhs = Label::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Label, LtlError> {
        let mut lhs = self.atom()?;
        while self.peek() == Some("&") {
            self.at += 1;
            lhs = Label::And(Box::new(lhs), Box::new(self.atom()?));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Label, LtlError> {
        let tok = self
            .peek()
            .ok_or_else(|| hoa_err("truncated label"))?
            .to_string();
        self.at += 1;
        match tok.as_str() {
            "!" => Ok(Label::Not(Box::new(self.atom()?))),
            "t" => Ok(Label::True),
            "f" => Ok(Label::False),
            "(" => {
                let inner = self.or()?;
                if self.peek() != Some(")") {
                    return Err(hoa_err("expected `)` in label"));
                }
                self.at += 1;
                Ok(inner)
            }
            num => {
                let i: usize = num
                    .parse()
                    .map_err(|_| hoa_err(format!("bad label token `{num}`")))?;
                if i >= self.num_aps {
                    return Err(hoa_err(format!("AP index {i} out of range")));
                }
                Ok(Label::Ap(i))
            }
        }
    }
}

fn parse_label(text: &str, num_aps: usize) -> Result<Label, LtlError> {
    let toks = lex(text)?;
    let mut p = LabelParser {
        toks: &toks,
        at: 0,
        num_aps,
    };
    let l = p.or()?;
    if p.at != toks.len() {
        return Err(hoa_err(format!("trailing tokens in label `{text}`")));
    }
    Ok(l)
}

/// Parses `Fin(a) & Inf(b) | ...`, `t` or `f` into `(fin set, inf set)` pairs.
fn parse_acceptance(cond: &str) -> Result<Vec<(usize, usize)>, LtlError> {
    let toks = lex(cond)?;
    let unsupported = || LtlError::UnsupportedAcceptance(cond.trim().to_string());
    match toks.as_slice() {
        [t] if t == "t" => return Ok(vec![(usize::MAX, usize::MAX)]),
        [f] if f == "f" => return Ok(vec![]),
        _ => {}
    }
    let mut pairs = Vec::new();
    let mut i = 0;
    let set_ref = |toks: &[String], i: &mut usize, kind: &str| -> Option<usize> {
        if toks.get(*i)? != kind || toks.get(*i + 1)? != "(" || toks.get(*i + 3)? != ")" {
            return None;
        }
        let n = toks.get(*i + 2)?.parse().ok()?;
        *i += 4;
        Some(n)
    };
    loop {
        let paren = toks.get(i).map(String::as_str) == Some("(");
        if paren {
            i += 1;
        }
        let (fin, inf) = if toks.get(i).map(String::as_str) == Some("Fin") {
            let fin = set_ref(&toks, &mut i, "Fin").ok_or_else(unsupported)?;
            if toks.get(i).map(String::as_str) != Some("&") {
                return Err(unsupported());
            }
            i += 1;
            (fin, set_ref(&toks, &mut i, "Inf").ok_or_else(unsupported)?)
        } else {
            let inf = set_ref(&toks, &mut i, "Inf").ok_or_else(unsupported)?;
            if toks.get(i).map(String::as_str) != Some("&") {
                return Err(unsupported());
            }
            i += 1;
            (set_ref(&toks, &mut i, "Fin").ok_or_else(unsupported)?, inf)
        };
        if paren {
            if toks.get(i).map(String::as_str) != Some(")") {
                return Err(unsupported());
            }
            i += 1;
        }
        pairs.push((fin, inf));
        match toks.get(i).map(String::as_str) {
            None => break,
            Some("|") => i += 1,
            Some(_) => return Err(unsupported()),
        }
    }
    Ok(pairs)
}

fn split_quoted(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('"') {
        let after = &rest[start + 1..];
        match after.find('"') {
            Some(end) => {
                out.push(after[..end].to_string());
                rest = &after[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Parses a deterministic, state-based Rabin automaton. When `complete_sink`
/// is set, missing transitions go to an added rejecting sink instead of
/// producing [`LtlError::NotComplete`].
pub fn parse_hoa(text: &str, complete_sink: bool) -> Result<Dra, LtlError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("/*"));
    let first = lines.next().ok_or_else(|| hoa_err("empty input"))?;
    if first.split_whitespace().collect::<Vec<_>>() != ["HOA:", "v1"] {
        return Err(hoa_err("expected `HOA: v1` header"));
    }
    let mut num_states: Option<usize> = None;
    let mut start: Option<usize> = None;
    let mut aps: Vec<String> = Vec::new();
    let mut acceptance: Option<(usize, Vec<(usize, usize)>)> = None;
    let mut in_body = false;
    let mut current: Option<usize> = None;
    let mut state_sets: Vec<BTreeSet<usize>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut edges: Vec<Vec<(Label, usize)>> = Vec::new();
    let mut ended = false;

    for line in lines {
        if !in_body {
            if line == "--BODY--" {
                let n = num_states.ok_or_else(|| hoa_err("missing `States:`"))?;
                state_sets = vec![BTreeSet::new(); n];
                names = (0..n).map(|q| q.to_string()).collect();
                edges = (0..n).map(|_| Vec::new()).collect();
                in_body = true;
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| hoa_err(format!("bad header line `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "States" => num_states = Some(value.parse().map_err(|_| hoa_err("bad `States:`"))?),
                "Start" => {
                    if start.is_some() || value.contains('&') {
                        return Err(LtlError::NotDeterministic("multiple initial states".into()));
                    }
                    start = Some(value.parse().map_err(|_| hoa_err("bad `Start:`"))?);
                }
                "AP" => {
                    let count: usize = value
                        .split_whitespace()
                        .next()
                        .and_then(|c| c.parse().ok())
                        .ok_or_else(|| hoa_err("bad `AP:`"))?;
                    aps = split_quoted(value);
                    if aps.len() != count {
                        return Err(hoa_err(format!(
                            "`AP:` declares {count} names, found {}",
                            aps.len()
                        )));
                    }
                }
                "Acceptance" => {
                    let (count, cond) =
                        value.split_once(char::is_whitespace).unwrap_or((value, ""));
                    let count: usize = count.parse().map_err(|_| hoa_err("bad `Acceptance:`"))?;
                    acceptance = Some((count, parse_acceptance(cond)?));
                }
                "acc-name" => {
                    let name = value.split_whitespace().next().unwrap_or("");
                    if !matches!(name, "Rabin" | "all" | "none") {
                        return Err(LtlError::UnsupportedAcceptance(value.to_string()));
                    }
                }
                _ => {}
            }
            continue;
        }
        if line == "--END--" {
            ended = true;
            break;
        }
        if let Some(rest) = line.strip_prefix("State:") {
            let rest = rest.trim();
            let (id, tail) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let q: usize = id
                .parse()
                .map_err(|_| hoa_err(format!("bad state id `{id}`")))?;
            if q >= state_sets.len() {
                return Err(hoa_err(format!("state {q} out of range")));
            }
            let mut tail = tail.trim_start();
            if tail.starts_with('[') {
                return Err(hoa_err("state labels are not supported"));
            }
            if let Some(named) = tail.strip_prefix('"') {
                let (name, t) = named.split_once('"').unwrap_or((named, ""));
                names[q] = name.to_string();
                tail = t;
            }
            if let (Some(open), Some(close)) = (tail.rfind('{'), tail.rfind('}')) {
                for s in tail[open + 1..close].split_whitespace() {
                    state_sets[q].insert(
                        s.parse()
                            .map_err(|_| hoa_err(format!("bad acceptance set `{s}`")))?,
                    );
                }
            }
            current = Some(q);
            continue;
        }
        let q = current.ok_or_else(|| hoa_err("edge before any `State:`"))?;
        let rest = line
            .strip_prefix('[')
            .ok_or_else(|| hoa_err("implicit edge labels are not supported"))?;
        let close = rest
            .find(']')
            .ok_or_else(|| hoa_err("unterminated edge label"))?;
        let label = parse_label(&rest[..close], aps.len())?;
        let tail = rest[close + 1..].trim();
        if tail.contains('{') {
            return Err(LtlError::UnsupportedAcceptance(
                "transition-based acceptance".into(),
            ));
        }
        let dest_text = tail
            .split_whitespace()
            .next()
            .ok_or_else(|| hoa_err("edge without destination"))?;
        if dest_text.contains('&') {
            return Err(LtlError::NotDeterministic("universal branching".into()));
        }
        let dest: usize = dest_text
            .parse()
            .map_err(|_| hoa_err(format!("bad destination `{dest_text}`")))?;
        if dest >= state_sets.len() {
            return Err(hoa_err(format!("destination {dest} out of range")));
        }
        edges[q].push((label, dest));
    }
    if !ended {
        return Err(hoa_err("missing `--END--`"));
    }
    let n = state_sets.len();
    let (_, acc_pairs) = acceptance.ok_or_else(|| hoa_err("missing `Acceptance:`"))?;
    let start = start.ok_or_else(|| hoa_err("missing `Start:`"))?;
    if aps.len() > 16 {
        return Err(hoa_err("too many propositions"));
    }
    let letters = 1usize << aps.len();
    let mut delta = vec![None; n * letters];
    let mut incomplete = None;
    for q in 0..n {
        for l in 0..letters {
            let dests: BTreeSet<usize> = edges[q]
                .iter()
                .filter(|(lab, _)| lab.eval(l as Letter))
                .map(|&(_, d)| d)
                .collect();
            match dests.len() {
                0 => incomplete = incomplete.or(Some((q, l))),
                1 => delta[q * letters + l] = dests.into_iter().next(),
                _ => {
                    return Err(LtlError::NotDeterministic(format!(
                        "state {q} has several successors on letter {l}"
                    )))
                }
            }
        }
    }
    let pairs = acc_pairs
        .into_iter()
        .map(|(fin, inf)| {
            if fin == usize::MAX {
                RabinPair {
                    fin: BTreeSet::new(),
                    inf: (0..n).collect(),
                }
            } else {
                RabinPair {
                    fin: (0..n).filter(|q| state_sets[*q].contains(&fin)).collect(),
                    inf: (0..n).filter(|q| state_sets[*q].contains(&inf)).collect(),
                }
            }
        })
        .collect();
    let mut dra = Dra::new(aps, n, start, delta, pairs)?;
    dra.set_names(names);
    if let Some((q, l)) = incomplete {
        if !complete_sink {
            return Err(LtlError::NotComplete(format!(
                "state {q} has no successor on letter {l}"
            )));
        }
        dra.complete_with_sink();
    }
    Ok(dra)
}
