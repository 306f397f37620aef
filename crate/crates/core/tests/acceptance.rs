//! Acceptance suite. Each criterion prints one PASS/FAIL line on stderr
//! (bypassing output capture) and then asserts.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore};

use common::{
    all_words, assert_marginalizes, brute_mecs, dra_accepts_word, eval_lasso, random_mdp,
    random_pomdp, rng, BENCHMARK_FORMULAS,
};
use pomcheck::ltl::{ltl_to_dra, parse_ltl};
use pomcheck::model::domains::{
    build_drone, build_gridworld, build_rocksample, gridworld_benchmark_labels, rocksample_preset,
};
use pomcheck::pipeline::bench::{BenchCase, Manifest};
use pomcheck::pipeline::{check, prepare, CheckOutput, FormulaSource, ModelSource, RunConfig};
use pomcheck::product::{maximal_end_components, reachability_product, ProductPomdp};
use pomcheck::sim::{default_max_steps, estimate, McEstimate};
use pomcheck::solver::{
    alpha_value, solve_fib, solve_lovejoy, solve_qmdp, solve_sarsop, SarsopConfig, Solution,
};

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "criterion {n:>2} {verdict}  {title}: {detail}"
    );
}

/// A manifest case solved once and shared between criteria.
struct Solved {
    case: BenchCase,
    product: ProductPomdp,
    solution: Solution,
    seconds: f64,
}

fn cases() -> &'static [(BenchCase, OnceLock<Solved>)] {
    static CASES: OnceLock<Vec<(BenchCase, OnceLock<Solved>)>> = OnceLock::new();
    CASES.get_or_init(|| {
        let m = Manifest::builtin();
        ["rocksample-small", "gridworld", "drone"]
            .iter()
            .flat_map(|s| m.suite(s).unwrap().to_vec())
            .map(|c| (c, OnceLock::new()))
            .collect()
    })
}

fn solved(name: &str) -> &'static Solved {
    let (case, cell) = cases()
        .iter()
        .find(|(c, _)| c.name == name)
        .unwrap_or_else(|| panic!("no case `{name}` in the manifest"));
    cell.get_or_init(|| {
        let cfg = case.config();
        let prepared = prepare(&cfg.model, &cfg.formula).unwrap();
        let p = prepared.product;
        let solution = solve_sarsop(&p, &p.initial_sparse(), &cfg.sarsop_config()).unwrap();
        let seconds = prepared.mec_seconds + solution.result.solve_seconds;
        Solved {
            case: case.clone(),
            product: p,
            solution,
            seconds,
        }
    })
}

/// Checks the manifest expectations plus a wall-clock budget.
fn table_rows(n: u32, title: &str, names: &[&str], budget_s: f64) {
    let mut pass = true;
    let mut details = Vec::new();
    for name in names {
        let s = solved(name);
        let r = &s.solution.result;
        let mut failures = s.case.failures(r);
        if s.seconds >= budget_s {
            failures.push(format!("{:.1} s >= {budget_s} s", s.seconds));
        }
        pass &= failures.is_empty();
        details.push(format!(
            "[{name}] LB {:.4} eps {:.1e} |Gamma| {} {:.2} s{}",
            r.lb,
            r.eps,
            r.num_alpha,
            s.seconds,
            if failures.is_empty() {
                String::new()
            } else {
                format!(" ({})", failures.join("; "))
            }
        ));
    }
    report(n, title, pass, &details.join("; "));
    assert!(pass, "{}", details.join("\n"));
}

#[test]
fn criterion_01_rock_4x4_safety() {
    table_rows(1, "rock [4,4] G !bad", &["rock [4,4] G !bad"], 10.0);
}

#[test]
fn criterion_02_rock_4x4_reach() {
    table_rows(
        2,
        "rock [4,4] reach",
        &[
            "rock [4,4] F good & F exit",
            "rock [4,4] F good & F exit & G !bad",
        ],
        60.0,
    );
}

#[test]
fn criterion_03_rock_5x5_reach() {
    table_rows(
        3,
        "rock [5,5] reach",
        &[
            "rock [5,5] F good & F exit",
            "rock [5,5] F good & F exit & G !bad",
        ],
        f64::INFINITY,
    );
}

#[test]
fn criterion_04_grid_10x10() {
    table_rows(4, "grid 10x10", &["grid 10x10 !C U A & !C U B"], 1800.0);
}

#[test]
fn criterion_05_drone_5x5() {
    table_rows(5, "drone [5,5]", &["drone [5,5] !det U B"], 1800.0);
}

fn simulate(s: &Solved) -> McEstimate {
    let p = &s.product;
    estimate(
        p,
        &s.solution.bounds.lower,
        &p.initial_sparse(),
        10_000,
        2024,
        default_max_steps(p.num_states()),
    )
    .unwrap()
}

#[test]
fn criterion_06_monte_carlo_consistency() {
    let mut pass = true;
    let mut details = Vec::new();
    for (case, _) in cases() {
        let s = solved(&case.name);
        let r = &s.solution.result;
        let mc = simulate(s);
        let ok = mc.consistent_with(r.lb, r.eps) && mc.cutoff_fraction < 0.01;
        pass &= ok;
        details.push(format!(
            "[{}] p_hat {:.4} ± {:.4} vs [{:.4}, {:.4}] cutoff {:.3}{}",
            case.name,
            mc.p_hat,
            mc.stderr,
            r.lb,
            r.lb + r.eps,
            mc.cutoff_fraction,
            if ok { "" } else { " (outside)" }
        ));
    }
    report(6, "Monte Carlo consistency", pass, &details.join("; "));
    assert!(pass, "{}", details.join("\n"));
}

#[test]
fn criterion_07_upper_bound_ordering() {
    let grid = build_gridworld(3, 0.7, &gridworld_benchmark_labels(3)).unwrap();
    let p = reachability_product(
        grid,
        ltl_to_dra(&parse_ltl("!C U A & !C U B").unwrap()).unwrap(),
    )
    .unwrap();
    let b0 = p.initial_sparse();
    let mut cfg = SarsopConfig::new(1e-3);
    cfg.time_limit = Some(Duration::from_secs(60));
    let s = solve_sarsop(&p, &b0, &cfg).unwrap();
    let (lb, ub) = (s.result.lb, s.upper_bound());
    let qmdp = alpha_value(&solve_qmdp(&p), &b0);
    let fib = alpha_value(&solve_fib(&p), &b0);
    let lovejoy: Vec<f64> = (1..=5)
        .map(|m| solve_lovejoy(&p, &b0, m).unwrap())
        .collect();
    let tol = 1e-9;
    let ordered = qmdp >= fib - tol && fib >= ub - tol && ub >= lb - tol;
    let monotone = lovejoy.windows(2).all(|w| w[1] <= w[0] + tol);
    let above = lovejoy.iter().all(|&v| v >= lb - tol);
    let pass = ordered && monotone && above;
    let detail = format!(
        "QMDP {qmdp:.4} >= FIB {fib:.4} >= UB {ub:.4} >= LB {lb:.4}: {ordered}; \
         Lovejoy m=1..5 {lovejoy:.4?} nonincreasing: {monotone}, >= LB: {above}"
    );
    report(7, "upper bound ordering on the 3x3 grid", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_08_mec_oracle() {
    let start = Instant::now();
    let mut r = rng(808);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = 1 + (r.next_u32() % 6) as usize;
        let na = 1 + (r.next_u32() % 2) as usize;
        let mdp = random_mdp(&mut r, n, na);
        let got: BTreeSet<_> = maximal_end_components(&mdp, None)
            .into_iter()
            .map(|m| (m.states, m.actions))
            .collect();
        if got != brute_mecs(&mdp, (1u64 << n) - 1) {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches == 0 && secs < 60.0;
    let detail = format!("{mismatches} of 100 differ, {secs:.2} s");
    report(8, "MEC oracle", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_09_automaton_oracle() {
    let mut checked = 0usize;
    let mut disagreements = Vec::new();
    for text in BENCHMARK_FORMULAS {
        let f = parse_ltl(text).unwrap();
        let d = ltl_to_dra(&f).unwrap();
        let props: Vec<String> = f.propositions().into_iter().collect();
        let cycles = all_words(&props, 3, true);
        for u in all_words(&props, 4, false) {
            for v in &cycles {
                checked += 1;
                if dra_accepts_word(&d, &u, v) != eval_lasso(&f, &u, v) {
                    disagreements.push(format!("{text} on {u:?} ({v:?})^w"));
                }
            }
        }
    }
    let pass = disagreements.is_empty();
    let detail = format!(
        "{} formulas, {checked} lassos, {} disagreements",
        BENCHMARK_FORMULAS.len(),
        disagreements.len()
    );
    report(9, "automaton oracle", pass, &detail);
    assert!(pass, "{detail}\n{}", disagreements.join("\n"));
}

/// Applies 1000 random Bayes updates and returns the largest deviation of
/// the belief mass from 1, or infinity if an entry left [0, 1].
fn simplex_drift(p: &ProductPomdp, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut b = p.initial_sparse();
    let mut state = b[r.gen_range(0..b.len())].0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = r.gen_range(0..p.num_actions());
        let row = p.transition_row(state, a);
        let next = row[r.gen_range(0..row.len())].0;
        let obs = p.observation_row(a, next);
        let choices: Vec<usize> = (0..obs.len()).filter(|&o| obs[o] > 0.0).collect();
        let o = choices[r.gen_range(0..choices.len())];
        b = p.belief_update(&b, a, o).unwrap();
        if b.iter().any(|&(_, q)| !(0.0..=1.0 + 1e-12).contains(&q)) {
            return f64::INFINITY;
        }
        worst = worst.max((b.iter().map(|&(_, q)| q).sum::<f64>() - 1.0).abs());
        state = next;
    }
    worst
}

fn built_products() -> Vec<(String, ProductPomdp)> {
    let dra = |f: &str| ltl_to_dra(&parse_ltl(f).unwrap()).unwrap();
    let mut out = Vec::new();
    for size in [3, 10] {
        let grid = build_gridworld(size, 0.7, &gridworld_benchmark_labels(size)).unwrap();
        for f in ["!C U A & !C U B", "G !C"] {
            out.push((
                format!("grid {size} {f}"),
                reachability_product(grid.clone(), dra(f)).unwrap(),
            ));
        }
    }
    for (n, k) in [(4, 2), (5, 3)] {
        let rock = build_rocksample(&rocksample_preset(n, k).unwrap()).unwrap();
        for f in ["G !bad", "F good & F exit", "F good & F exit & G !bad"] {
            out.push((
                format!("rock {n} {f}"),
                reachability_product(rock.clone(), dra(f)).unwrap(),
            ));
        }
    }
    out.push((
        "drone 5".into(),
        reachability_product(build_drone(5).unwrap(), dra("!det U B")).unwrap(),
    ));
    out
}

#[test]
fn criterion_10_invariants() {
    let mut failures = Vec::new();
    let mut ok = |name: &str, good: bool| {
        if !good {
            failures.push(name.to_string());
        }
    };

    // belief simplex on random and benchmark products
    let products = built_products();
    let mut r = rng(10);
    for i in 0..20 {
        let m = random_pomdp(&mut r, 6, 3, 3, &["a", "b"]);
        let p = reachability_product(m, ltl_to_dra(&parse_ltl("a U b").unwrap()).unwrap()).unwrap();
        ok(&format!("simplex random {i}"), simplex_drift(&p, i) < 1e-9);
    }
    for (i, (name, p)) in products.iter().enumerate() {
        ok(
            &format!("simplex {name}"),
            simplex_drift(p, i as u64) < 1e-9,
        );
    }

    // marginalization on every built product
    for (name, p) in &products {
        let marginal =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| assert_marginalizes(p)))
                .is_ok();
        ok(&format!("marginalization {name}"), marginal);
    }

    // sandwich, monotone history and alpha range for every solved instance
    for (case, _) in cases() {
        let s = &solved(&case.name).solution;
        let h = &s.history;
        let sandwich = h.iter().all(|&(l, u)| l <= u + 1e-9);
        let monotone = h
            .windows(2)
            .all(|w| w[1].0 >= w[0].0 - 1e-9 && w[1].1 <= w[0].1 + 1e-9);
        let in_range = s
            .bounds
            .lower
            .iter()
            .chain(&s.bounds.fib)
            .flat_map(|a| &a.values)
            .chain(&s.bounds.corners)
            .all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v));
        ok(&format!("sandwich {}", case.name), sandwich);
        ok(&format!("monotone {}", case.name), monotone);
        ok(&format!("alpha range {}", case.name), in_range);
    }

    // end-to-end determinism of the written outputs
    let dir = tempfile::tempdir().unwrap();
    let run = |i: usize| {
        let mut cfg = RunConfig::new(
            ModelSource::Builtin(pomcheck::pipeline::DomainSpec {
                domain: "rocksample".parse().unwrap(),
                size: 4,
                rocks: Some(2),
            }),
            FormulaSource::Ltl("F good & F exit & G !bad".into()),
            1e-3,
        );
        cfg.out = Some(dir.path().join(format!("out{i}.json")));
        cfg.policy_out = Some(dir.path().join(format!("policy{i}.json")));
        let result = match check(&cfg).unwrap() {
            CheckOutput::Solved { result, .. } => result,
            CheckOutput::UpperBound { .. } => unreachable!(),
        };
        let policy = std::fs::read(cfg.policy_out.as_ref().unwrap()).unwrap();
        let mut record: serde_json::Value =
            serde_json::from_slice(&std::fs::read(cfg.out.as_ref().unwrap()).unwrap()).unwrap();
        // wall-clock fields are the only permitted difference
        for key in ["mec_seconds", "solve_seconds"] {
            record[key] = serde_json::Value::Null;
        }
        (result.lb, policy, record)
    };
    ok("end-to-end determinism", run(0) == run(1));

    // G !C: no belief concentrated on a grid cell can satisfy the formula
    let s = solved("grid 10x10 G !C");
    let p = &s.product;
    let cells = p.base().num_states() - 1;
    let zero_everywhere = (0..cells).all(|c| {
        (0..p.automaton().num_states())
            .filter_map(|q| p.index_of(c, q))
            .all(|i| s.solution.bounds.upper_value(&[(i, 1.0)]).abs() < 1e-12)
    });
    ok("G !C point masses are worth 0", zero_everywhere);

    let pass = failures.is_empty();
    let detail = if pass {
        "simplex, marginalization, bound sandwich and monotonicity, alpha range, \
         determinism, G !C zero value"
            .to_string()
    } else {
        format!("failed: {}", failures.join(", "))
    };
    report(10, "invariants", pass, &detail);
    assert!(pass, "{detail}");
}
