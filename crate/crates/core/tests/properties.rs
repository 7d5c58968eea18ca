mod common;

use common::{c1, c2};
use lck::generate::{leaves, unary_ops, Binary, Unary};
use lck::par::Execution;
use lck::syntax::{negative_k_counts, print_formula};
use lck::{check_validity, decide_formula, parse_formula, prove_formula, Formula, ProverOptions, Sequent};
use proptest::prelude::*;

fn formula_strategy(leaves: Vec<Formula>, unary: Vec<Unary>) -> impl Strategy<Value = Formula> {
    let leaf = proptest::sample::select(leaves);
    leaf.prop_recursive(4, 24, 2, move |inner| {
        let unary = unary.clone();
        prop_oneof![
            (proptest::sample::select(unary), inner.clone()).prop_map(|(op, f)| op.apply(f)),
            (proptest::sample::select(Binary::ALL.to_vec()), inner.clone(), inner)
                .prop_map(|(op, a, b)| op.apply(a, b)),
        ]
    })
}

fn c2_formulas() -> impl Strategy<Value = Formula> {
    let st = c2();
    formula_strategy(leaves(&st, &["p", "q"]), unary_ops(&st))
}

fn c1_formulas() -> impl Strategy<Value = Formula> {
    let st = c1();
    formula_strategy(leaves(&st, &["p"]), unary_ops(&st))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_is_identity(f in c2_formulas()) {
        let st = c2();
        let text = print_formula(&f);
        prop_assert_eq!(parse_formula(&text, &st).unwrap(), f, "{}", text);
    }

    #[test]
    fn negation_swaps_polarity(f in c2_formulas()) {
        let pos = negative_k_counts(&Sequent::goal("s", f.clone()));
        let as_assumption = negative_k_counts(&Sequent::new().assume("s", f.clone()));
        let negated = negative_k_counts(&Sequent::goal("s", Formula::not(f.clone())));
        prop_assert_eq!(&as_assumption, &negated);
        let double = negative_k_counts(&Sequent::new().assume("s", Formula::not(f)));
        prop_assert_eq!(&pos, &double);
    }

    #[test]
    fn decide_matches_prove(f in c2_formulas()) {
        let st = c2();
        let opts = ProverOptions::default();
        let proved = prove_formula(&f, &st, &opts).unwrap().provable;
        prop_assert_eq!(decide_formula(&f, &st, &opts).unwrap(), proved);
    }

    #[test]
    fn parallel_branches_do_not_change_verdicts(f in c2_formulas()) {
        let st = c2();
        let seq = prove_formula(&f, &st, &ProverOptions::default()).unwrap();
        let par_opts = ProverOptions { parallel_branches: true, ..ProverOptions::default() };
        prop_assert_eq!(prove_formula(&f, &st, &par_opts).unwrap().provable, seq.provable);
    }

    #[test]
    fn prover_agrees_with_models(f in c1_formulas()) {
        let st = c1();
        let valid = check_validity(&f, &st, &f.atoms()).unwrap();
        prop_assert_eq!(decide_formula(&f, &st, &ProverOptions::default()).unwrap(), valid, "{}", f);
    }

    #[test]
    fn batch_modes_return_the_same_results(fs in proptest::collection::vec(c1_formulas(), 1..12)) {
        let st = c1();
        let run = |e: Execution| e.map(&fs, |f| decide_formula(f, &st, &ProverOptions::default()).unwrap());
        prop_assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
    }
}
