//! Proof search against the model oracle and the loop-check audits.

mod common;

use common::{c1, c2, min3, three_agents, union3};
use lck::engine::{audit_left_knowledge_pairs, audit_right_knowledge_chains};
use lck::generate::FormulaGen;
use lck::semantics::{sequent_valid, ModelSpace};
use lck::tables::{chain_depth, init_tables_with};
use lck::*;

fn formula(text: &str, st: &ObservationStructure) -> Formula {
    parse_formula(text, st).unwrap()
}

#[test]
fn documented_verdicts() {
    let st = c2();
    let o = ProverOptions::default();
    let cases = [
        ("K{a}(p -> q) -> (K{a} p -> K{a} q)", true),
        ("K{a} p -> K{a,b} p", true),
        ("obs{a}(oa)^0 | obs{a}(oa)^1", true),
        ("p -> K{a} p", false),
        ("obs{a}(oa)^0", false),
        ("K{a} p & ~p", false),
        ("obs{a}(oa)^1 -> K{a} obs{a}(oa)^1", true),
        ("K{} p -> K{b} p", true),
        ("K{b} p -> K{} p", false),
    ];
    for (text, expected) in cases {
        assert_eq!(prove_formula(&formula(text, &st), &st, &o).unwrap().provable, expected, "{text}");
    }
}

#[test]
fn kripke_derivation_starts_with_implication() {
    let st = c2();
    let r = prove_formula(&formula("K{a}(p -> q) -> (K{a} p -> K{a} q)", &st), &st, &ProverOptions::default()).unwrap();
    assert_eq!(r.tree.step.rule(), Some(RuleId::ImpR));
    assert!(r.tree.is_closed());
}

#[test]
fn monotonicity_uses_mon() {
    let st = c2();
    let seq = parse_sequent("s: K{a} obs{b}(ob1)^0, s ~{a,b} t |- t: obs{b}(ob1)^0", &st).unwrap();
    let r = prove(&seq, &st, &ProverOptions::default()).unwrap();
    assert!(r.provable);
    let rules: Vec<_> = r.tree.branches().into_iter().flatten().filter_map(|n| n.step.rule()).collect();
    assert!(rules.contains(&RuleId::Mon));
}

#[test]
fn result_split_on_disjunction() {
    let st = c2();
    let r = prove_formula(&formula("obs{a}(oa)^0 | obs{a}(oa)^1", &st), &st, &ProverOptions::default()).unwrap();
    let oyr = r.tree.branches().into_iter().flatten().find(|n| n.step.rule() == Some(RuleId::OYR)).unwrap();
    assert_eq!(oyr.premises.len(), 2);
}

#[test]
fn formulas_agree_with_oracle_on_other_structures() {
    for (st, depth) in [(min3(), 3), (union3(), 3), (three_agents(), 3)] {
        let atoms = ["p"].iter().map(|a| lck::structure::Name::from(*a)).collect();
        let space = ModelSpace::new(&st, &atoms, 5_000_000).unwrap();
        let mut gen = FormulaGen::new(&st, &["p"], 11);
        for _ in 0..200 {
            let f = gen.formula(depth);
            let expected = space.is_valid(&f).unwrap();
            let got = decide_formula(&f, &st, &ProverOptions::default()).unwrap();
            assert_eq!(got, expected, "{f}");
        }
    }
}

#[test]
fn connected_sequents_agree_with_oracle() {
    for (st, atoms, seed) in [(c1(), &["p", "q"][..], 5), (c2(), &["p", "q"][..], 6), (three_agents(), &["p"][..], 7)] {
        let mut gen = FormulaGen::new(&st, atoms, seed);
        for _ in 0..150 {
            let seq = gen.sequent(&st, 3, 2);
            let expected = sequent_valid(&seq, &st, 5_000_000).unwrap();
            let r = prove(&seq, &st, &ProverOptions::default()).unwrap();
            assert_eq!(r.provable, expected, "{seq}");
            audit_left_knowledge_pairs(&r.tree).unwrap();
            audit_right_knowledge_chains(&r.tree, &seq, ChainBound::PerGroup).unwrap();
        }
    }
}

#[test]
fn disconnected_labels_are_beyond_the_rules() {
    // Valid because ~{} relates every pair of states, but no rule links
    // labels that share no relational atom.
    let st = c2();
    let seq = parse_sequent("s: K{} p |- t: p", &st).unwrap();
    assert!(sequent_valid(&seq, &st, 5_000_000).unwrap());
    assert!(!prove(&seq, &st, &ProverOptions::default()).unwrap().provable);
    let linked = parse_sequent("s: K{} p, s ~{a} t |- t: p", &st).unwrap();
    assert!(prove(&linked, &st, &ProverOptions::default()).unwrap().provable);
}

#[test]
fn aggregate_bound_gives_the_same_verdicts() {
    let st = c2();
    let mut gen = FormulaGen::new(&st, &["p", "q"], 21);
    let aggregate = ProverOptions { chain_bound: ChainBound::Aggregate, ..ProverOptions::default() };
    for _ in 0..300 {
        let f = gen.formula(4);
        let a = decide_formula(&f, &st, &ProverOptions::default()).unwrap();
        let b = decide_formula(&f, &st, &aggregate).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn strict_mode_is_sound() {
    let st = c2();
    let atoms = ["p", "q"].iter().map(|a| lck::structure::Name::from(*a)).collect();
    let space = ModelSpace::new(&st, &atoms, 5_000_000).unwrap();
    let mut gen = FormulaGen::new(&st, &["p", "q"], 31);
    for _ in 0..300 {
        let f = gen.formula(4);
        if decide_formula(&f, &st, &ProverOptions::strict()).unwrap() {
            assert!(space.is_valid(&f).unwrap(), "{f}");
        }
    }
}

#[test]
fn parallel_branches_match_sequential() {
    let st = c2();
    let mut gen = FormulaGen::new(&st, &["p", "q"], 41);
    let par = ProverOptions { parallel_branches: true, ..ProverOptions::default() };
    for _ in 0..100 {
        let f = gen.formula(4);
        let a = prove_formula(&f, &st, &ProverOptions::default()).unwrap();
        let b = prove_formula(&f, &st, &par).unwrap();
        assert_eq!(a.tree_json(), b.tree_json(), "{f}");
    }
}

#[test]
fn chain_bounds_from_root() {
    let st = c2();
    let ga = Group::new(["a"]);
    let root = parse_sequent("s: K{a} p |- s: K{a} K{a} p", &st).unwrap();
    let tables = init_tables_with(&root, ChainBound::PerGroup);
    assert_eq!(tables.rk.max_for(&ga), 2);
    assert_eq!(init_tables(&parse_sequent("|- s: K{a} p", &st).unwrap()).rk.max_for(&ga), 1);
    assert!(init_tables(&parse_sequent("|- s: p", &st).unwrap()).rk.max.is_empty());
    assert_eq!(chain_depth(&tables.rk, &ga, &Formula::atom("p"), &Label::new("s")), 0);
}

#[test]
fn stats_reflect_the_tree() {
    let st = c2();
    let r = prove_formula(&formula("~K{a} p -> K{a} ~K{a} p", &st), &st, &ProverOptions::default()).unwrap();
    assert!(r.provable);
    assert_eq!(r.stats.nodes, r.tree.node_count());
    assert_eq!(r.stats.depth, r.tree.depth());
    assert!(r.stats.table_lk_size > 0);
    assert!(r.stats.table_rk_chains > 0);
    let json = r.to_json();
    assert!(json["tree"]["premises"].is_array());
    assert_eq!(json["tree"]["rule"], "=>->");
}

#[test]
fn sequent_without_record_has_no_sequents() {
    let st = c2();
    let f = formula("K{a} p -> p", &st);
    let r = prove_formula(&f, &st, &ProverOptions { record_sequents: false, ..ProverOptions::default() }).unwrap();
    assert!(r.tree.sequent.is_none());
    assert!(r.provable);
}

#[test]
fn time_cap_is_inconclusive_not_negative() {
    let st = c2();
    let f = formula("K{a} p & K{b} q -> K{a,b}(p & q)", &st);
    let o = ProverOptions { max_nodes: 5, ..ProverOptions::default() };
    assert!(matches!(decide_formula(&f, &st, &o), Err(ProveError::Inconclusive(_))));
}

#[test]
fn malformed_input_is_rejected() {
    let st = c2();
    let top = Sequent::goal("s", Formula::Top);
    assert!(matches!(prove(&top, &st, &ProverOptions::default()), Err(ProveError::Malformed(_))));
    let bad = Sequent::goal("s", Formula::know(Group::new(["z"]), Formula::atom("p")));
    assert!(prove(&bad, &st, &ProverOptions::default()).is_err());
}
