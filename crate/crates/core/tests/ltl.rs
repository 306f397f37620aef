mod common;

use common::{all_words, dra_accepts_word, eval_lasso, BENCHMARK_FORMULAS, SMALL_FORMULAS};
use pomcheck::ltl::{classify, ltl_to_dra, parse_hoa, parse_ltl, to_nnf, write_hoa, LtlError};

/// Checks the automaton of `text` against the lasso evaluator on every lasso
/// with a prefix of at most `u` letters and a cycle of at most `v`.
fn agree_on_lassos(text: &str, u: usize, v: usize) -> usize {
    let f = parse_ltl(text).unwrap();
    let d = ltl_to_dra(&f).unwrap();
    let props: Vec<String> = f.propositions().into_iter().collect();
    let prefixes = all_words(&props, u, false);
    let cycles = all_words(&props, v, true);
    let mut checked = 0;
    for p in &prefixes {
        for c in &cycles {
            assert_eq!(
                dra_accepts_word(&d, p, c),
                eval_lasso(&f, p, c),
                "{text} on {p:?} ({c:?})^w"
            );
            checked += 1;
        }
    }
    checked
}

#[test]
fn small_formulas_agree_with_lasso_semantics() {
    for f in SMALL_FORMULAS {
        assert!(agree_on_lassos(f, 3, 3) > 0);
    }
}

#[test]
fn benchmark_formulas_agree_on_short_lassos() {
    for f in BENCHMARK_FORMULAS {
        agree_on_lassos(f, 2, 2);
    }
}

#[test]
fn nnf_preserves_meaning() {
    for text in ["!(a U b)", "!F a", "!G (a & b)", "!(X a | b)", "!!a"] {
        let f = parse_ltl(text).unwrap();
        let g = to_nnf(&f).unwrap();
        let props: Vec<String> = f.propositions().into_iter().collect();
        for p in all_words(&props, 2, false) {
            for c in all_words(&props, 2, true) {
                assert_eq!(eval_lasso(&f, &p, &c), eval_lasso(&g, &p, &c), "{text}");
            }
        }
    }
}

#[test]
fn hoa_round_trip_preserves_language() {
    for text in SMALL_FORMULAS.iter().chain(BENCHMARK_FORMULAS) {
        let f = parse_ltl(text).unwrap();
        let d = ltl_to_dra(&f).unwrap();
        let e = parse_hoa(&write_hoa(&d), false).unwrap();
        let props: Vec<String> = f.propositions().into_iter().collect();
        for p in all_words(&props, 2, false) {
            for c in all_words(&props, 2, true) {
                assert_eq!(
                    dra_accepts_word(&d, &p, &c),
                    dra_accepts_word(&e, &p, &c),
                    "{text}"
                );
            }
        }
    }
}

#[test]
fn fragments_outside_support_are_rejected() {
    let f = parse_ltl("G F a & F G (a U b)").unwrap();
    assert!(classify(&f).len() == 2);
    assert!(matches!(
        ltl_to_dra(&f),
        Err(LtlError::UnsupportedFragment(_))
    ));
}

#[test]
fn g_not_a_and_f_b_automaton_shape() {
    let d = ltl_to_dra(&parse_ltl("G !A & F B").unwrap()).unwrap();
    assert_eq!(d.num_states(), 3);
    assert_eq!(d.pairs().len(), 1);
    let accept = |u: &[&[&str]], v: &[&[&str]]| {
        let enc = |w: &[&[&str]]| {
            w.iter()
                .map(|l| d.letter(l.iter().copied()))
                .collect::<Vec<_>>()
        };
        d.accepts(&enc(u), &enc(v)).unwrap()
    };
    assert!(accept(&[&[]], &[&["B"]]));
    assert!(!accept(&[&["A"]], &[&["B"]]));
    assert!(!accept(&[], &[&[]]));
}
