//! Line-oriented text format for tabular POMDPs.
//!
//! ```text
//! # comment
//! states: 2
//! actions: 1
//! observations: 2
//! discount: 1
//! start: 0.5 0.5          # or `start: uniform`
//! terminal: 1
//! T: 0 : 0 : 1 : 1.0      # T: a : s : s' : p
//! O: 0 : 1 : 0 : 1.0      # O: a : s' : o : p
//! R: 0 : 0 : 1.0          # R: a : s : r (optional)
//! label: 1 : goal done
//! alabel: 0 : 0 : fired   # alabel: s : a : props (action-scoped labels)
//! ```
//!
//! Indices are 0-based and unlisted probabilities are zero. Numbers are
//! written with 17 significant digits so that a written model parses back to
//! an identical value.

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{ModelError, TabularPomdp};

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<TabularPomdp, ModelError> {
    let model = parse_model_unchecked(text)?;
    let violations = model.validate();
    if violations.is_empty() {
        Ok(model)
    } else {
        Err(ModelError::Invalid(violations))
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        message: message.into(),
    }
}

fn parse_usize(line: usize, field: &str) -> Result<usize, ModelError> {
    field.trim().parse().map_err(|_| {
        syntax(
            line,
            format!("expected a non-negative integer, found `{}`", field.trim()),
        )
    })
}

fn parse_f64(line: usize, field: &str) -> Result<f64, ModelError> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| syntax(line, format!("expected a number, found `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(syntax(line, "non-finite number"));
    }
    Ok(v)
}

/// Parses a model without running the validator.
pub fn parse_model_unchecked(text: &str) -> Result<TabularPomdp, ModelError> {
    let mut dims: [Option<usize>; 3] = [None; 3];
    let mut model: Option<TabularPomdp> = None;
    let mut seen_t = HashSet::new();
    let mut seen_o = HashSet::new();
    let mut seen_r = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| syntax(line_no, "expected `key: value`"))?;
        let key = key.trim();
        let rest = rest.trim();

        let dim_slot = match key {
            "states" => Some(0),
            "actions" => Some(1),
            "observations" => Some(2),
            _ => None,
        };
        if let Some(slot) = dim_slot {
            if model.is_some() || dims[slot].is_some() {
                return Err(syntax(
                    line_no,
                    format!("`{key}` declared twice or after model entries"),
                ));
            }
            let n = parse_usize(line_no, rest)?;
            if n == 0 {
                return Err(syntax(line_no, format!("`{key}` must be positive")));
            }
            dims[slot] = Some(n);
            continue;
        }

        if model.is_none() {
            match dims {
                [Some(s), Some(a), Some(o)] => model = Some(TabularPomdp::new(s, a, o)?),
                _ => {
                    return Err(syntax(
                        line_no,
                        "`states`, `actions` and `observations` must come first",
                    ))
                }
            }
        }
        let m = model.as_mut().expect("initialized above");
        let at = |e: ModelError| match e {
            ModelError::IndexOutOfRange { .. } => syntax(line_no, e.to_string()),
            other => other,
        };

        match key {
            "discount" => m.set_discount(parse_f64(line_no, rest)?),
            "start" => {
                if rest == "uniform" {
                    let n = m.num_states();
                    m.set_initial_belief(vec![1.0 / n as f64; n])?;
                } else {
                    let probs = rest
                        .split_whitespace()
                        .map(|f| parse_f64(line_no, f))
                        .collect::<Result<Vec<_>, _>>()?;
                    m.set_initial_belief(probs)
                        .map_err(|e| syntax(line_no, e.to_string()))?;
                }
            }
            "terminal" => {
                for f in rest.split_whitespace() {
                    m.insert_terminal_flag(parse_usize(line_no, f)?)
                        .map_err(at)?;
                }
            }
            "T" | "O" => {
                let fields: Vec<&str> = rest.split(':').collect();
                if fields.len() != 4 {
                    return Err(syntax(
                        line_no,
                        format!("`{key}` expects 4 colon-separated fields"),
                    ));
                }
                let a = parse_usize(line_no, fields[0])?;
                let x = parse_usize(line_no, fields[1])?;
                let y = parse_usize(line_no, fields[2])?;
                let p = parse_f64(line_no, fields[3])?;
                let fresh = if key == "T" {
                    seen_t.insert((a, x, y))
                } else {
                    seen_o.insert((a, x, y))
                };
                if !fresh {
                    return Err(ModelError::DuplicateEntry {
                        line: line_no,
                        entry: format!("{key}: {a} : {x} : {y}"),
                    });
                }
                if key == "T" {
                    m.set_transition(x, a, y, p).map_err(at)?;
                } else {
                    m.set_observation(a, x, y, p).map_err(at)?;
                }
            }
            "R" => {
                let fields: Vec<&str> = rest.split(':').collect();
                if fields.len() != 3 {
                    return Err(syntax(line_no, "`R` expects 3 colon-separated fields"));
                }
                let a = parse_usize(line_no, fields[0])?;
                let s = parse_usize(line_no, fields[1])?;
                if !seen_r.insert((a, s)) {
                    return Err(ModelError::DuplicateEntry {
                        line: line_no,
                        entry: format!("R: {a} : {s}"),
                    });
                }
                m.set_reward(s, a, parse_f64(line_no, fields[2])?)
                    .map_err(at)?;
            }
            "label" => {
                let (s, props) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line_no, "`label` expects `s : props`"))?;
                let s = parse_usize(line_no, s)?;
                for p in props.split_whitespace() {
                    m.add_label(s, p).map_err(at)?;
                }
            }
            "alabel" => {
                let fields: Vec<&str> = rest.splitn(3, ':').collect();
                if fields.len() != 3 {
                    return Err(syntax(line_no, "`alabel` expects `s : a : props`"));
                }
                let s = parse_usize(line_no, fields[0])?;
                let a = parse_usize(line_no, fields[1])?;
                for p in fields[2].split_whitespace() {
                    m.add_action_label(s, a, p).map_err(at)?;
                }
            }
            other => return Err(syntax(line_no, format!("unknown declaration `{other}`"))),
        }
    }

    match (model, dims) {
        (Some(m), _) => Ok(m),
        (None, [Some(s), Some(a), Some(o)]) => TabularPomdp::new(s, a, o),
        _ => Err(syntax(
            text.lines().count().max(1),
            "missing `states`, `actions` or `observations`",
        )),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a model. `parse_model_unchecked(&write_model(m)) == m`.
pub fn write_model(m: &TabularPomdp) -> String {
    let mut out = String::new();
    let (ns, na, no) = (m.num_states(), m.num_actions(), m.num_observations());
    let _ = writeln!(out, "states: {ns}\nactions: {na}\nobservations: {no}");
    let _ = writeln!(out, "discount: {}", num(m.discount()));
    let uniform = 1.0 / ns as f64;
    if m.initial_belief().iter().all(|&p| p == uniform) {
        out.push_str("start: uniform\n");
    } else {
        let probs: Vec<String> = m.initial_belief().iter().map(|&p| num(p)).collect();
        let _ = writeln!(out, "start: {}", probs.join(" "));
    }
    if !m.terminal_states().is_empty() {
        let ts: Vec<String> = m.terminal_states().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "terminal: {}", ts.join(" "));
    }
    for s in 0..ns {
        if !m.labels(s).is_empty() {
            let props: Vec<&str> = m.labels(s).iter().map(String::as_str).collect();
            let _ = writeln!(out, "label: {s} : {}", props.join(" "));
        }
    }
    for (&(s, a), props) in m.action_label_entries() {
        let props: Vec<&str> = props.iter().map(String::as_str).collect();
        let _ = writeln!(out, "alabel: {s} : {a} : {}", props.join(" "));
    }
    for s in 0..ns {
        for a in 0..na {
            for &(sp, p) in m.transition_row(s, a) {
                let _ = writeln!(out, "T: {a} : {s} : {sp} : {}", num(p));
            }
        }
    }
    for a in 0..na {
        for sp in 0..ns {
            for (o, &p) in m.observation_row(a, sp).iter().enumerate() {
                if p != 0.0 {
                    let _ = writeln!(out, "O: {a} : {sp} : {o} : {}", num(p));
                }
            }
        }
    }
    if let Some(rewards) = m.rewards() {
        let mut any = false;
        for s in 0..ns {
            for a in 0..na {
                let r = rewards[s * na + a];
                if r != 0.0 {
                    any = true;
                    let _ = writeln!(out, "R: {a} : {s} : {}", num(r));
                }
            }
        }
        if !any {
            let _ = writeln!(out, "R: 0 : 0 : {}", num(0.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_STATE: &str = "\
# a single absorbing state
states: 1
actions: 1
observations: 1
T: 0 : 0 : 0 : 1.0
O: 0 : 0 : 0 : 1.0
";

    #[test]
    fn minimal_model_parses() {
        let m = parse_model(ONE_STATE).unwrap();
        assert_eq!(m.num_states(), 1);
        assert_eq!(m.transition(0, 0, 0), 1.0);
        assert_eq!(m.initial_belief(), &[1.0]);
    }

    #[test]
    fn duplicate_transition_is_rejected() {
        let text = format!("{ONE_STATE}T: 0 : 0 : 0 : 1.0\n");
        match parse_model(&text) {
            Err(ModelError::DuplicateEntry { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected DuplicateEntry, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = "states: 1\nactions: 1\nobservations: 1\nT: 0 : 0 : zero : 1\n";
        assert!(matches!(
            parse_model(text),
            Err(ModelError::Syntax { line: 4, .. })
        ));
        let text = "states: 1\nactions: 1\nobservations: 1\nT: 0 : 0 : 3 : 1\n";
        assert!(matches!(
            parse_model(text),
            Err(ModelError::Syntax { line: 4, .. })
        ));
        assert!(matches!(
            parse_model("T: 0 : 0 : 0 : 1\n"),
            Err(ModelError::Syntax { line: 1, .. })
        ));
        let text = "states: 1\nactions: 1\nobservations: 1\nfoo: 1\n";
        assert!(matches!(
            parse_model(text),
            Err(ModelError::Syntax { line: 4, .. })
        ));
    }

    #[test]
    fn validation_runs_after_parse() {
        let text = "states: 1\nactions: 1\nobservations: 1\nT: 0 : 0 : 0 : 0.9\nO: 0 : 0 : 0 : 1\n";
        assert!(matches!(parse_model(text), Err(ModelError::Invalid(v)) if v.len() == 1));
        assert!(parse_model_unchecked(text).is_ok());
    }

    #[test]
    fn round_trip_keeps_labels_terminals_and_rewards() {
        let mut m = TabularPomdp::new(3, 2, 2).unwrap();
        for s in 0..3 {
            for a in 0..2 {
                m.set_transition_row(s, a, [((s + a) % 3, 0.3), ((s + 1) % 3, 0.7)])
                    .unwrap();
                m.set_observation(a, s, 0, 1.0 / 3.0).unwrap();
                m.set_observation(a, s, 1, 2.0 / 3.0).unwrap();
            }
        }
        m.mark_terminal(2).unwrap();
        m.add_label(1, "goal").unwrap();
        m.add_action_label(0, 1, "fired").unwrap();
        m.set_reward(0, 1, 0.1).unwrap();
        m.set_initial_belief(vec![0.1, 0.2, 0.7]).unwrap();
        let back = parse_model_unchecked(&write_model(&m)).unwrap();
        assert_eq!(back, m);
    }
}
