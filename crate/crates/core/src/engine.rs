//! Depth-first proof search with loop checks.
//!
//! Each goal is handled by the first step that applies: axiom check,
//! single-premise propositional rules, branching propositional rules, left
//! knowledge rules, right knowledge rules, splits on observation results,
//! then the relational and observational rules. A goal where nothing applies
//! is an open leaf and the search fails. Branching rules get their own copy
//! of the loop-check tables.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::calculus::{Axiom, RuleId, RuleInstance};
use crate::error::ProveError;
use crate::kernel::{AxiomHit, Goal, Inst, Kernel, LabelNames, Tables};
use crate::par::Execution;
use crate::structure::{Group, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, Sequent};
use crate::tables::{init_tables_with, ChainBound, LoopTables, RkTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverOptions {
    /// Search nodes allowed before giving up as inconclusive.
    pub max_nodes: usize,
    pub max_millis: Option<u64>,
    /// Split on unresolved full observations once nothing else applies.
    /// Without it some valid sequents over structures with a single
    /// observation per agent end in open leaves.
    pub completion: bool,
    pub chain_bound: ChainBound,
    /// Keep the sequent at every node of the returned tree.
    pub record_sequents: bool,
    /// Explore the premises of branching rules on the rayon pool.
    pub parallel_branches: bool,
}

impl Default for ProverOptions {
    fn default() -> Self {
        ProverOptions {
            max_nodes: 1_000_000,
            max_millis: None,
            completion: true,
            chain_bound: ChainBound::PerGroup,
            record_sequents: true,
            parallel_branches: false,
        }
    }
}

impl ProverOptions {
    /// The rule set exactly as given, with no completion split.
    pub fn strict() -> Self {
        ProverOptions { completion: false, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: usize,
    pub depth: usize,
    pub table_lk_size: usize,
    pub table_rk_chains: usize,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Axiom(Axiom),
    Rule(RuleInstance),
    Open,
}

impl Step {
    pub fn name(&self) -> String {
        match self {
            Step::Axiom(a) => a.to_string(),
            Step::Rule(r) => r.rule().notation().to_string(),
            Step::Open => "Open".to_string(),
        }
    }

    pub fn principal(&self) -> String {
        match self {
            Step::Axiom(a) => a.principal.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "),
            Step::Rule(r) => r.principal(),
            Step::Open => String::new(),
        }
    }

    pub fn rule(&self) -> Option<RuleId> {
        match self {
            Step::Rule(r) => Some(r.rule()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    /// Absent when the search ran with `record_sequents` off.
    pub sequent: Option<Sequent>,
    pub step: Step,
    pub premises: Vec<ProofNode>,
}

impl ProofNode {
    pub fn is_closed(&self) -> bool {
        match self.step {
            Step::Axiom(_) => true,
            Step::Open => false,
            Step::Rule(_) => !self.premises.is_empty() && self.premises.iter().all(ProofNode::is_closed),
        }
    }

    pub fn node_count(&self) -> usize {
        let mut count = 0;
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            count += 1;
            stack.extend(&n.premises);
        }
        count
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 1)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            stack.extend(n.premises.iter().map(|p| (p, d + 1)));
        }
        best
    }

    /// First open leaf in depth-first order.
    pub fn open_leaf(&self) -> Option<&ProofNode> {
        if self.step == Step::Open {
            return Some(self);
        }
        self.premises.iter().find_map(ProofNode::open_leaf)
    }

    /// Every root-to-leaf path, as lists of nodes.
    pub fn branches(&self) -> Vec<Vec<&ProofNode>> {
        let mut out = Vec::new();
        let mut stack = vec![(self, Vec::new())];
        while let Some((n, mut path)) = stack.pop() {
            path.push(n);
            if n.premises.is_empty() {
                out.push(path);
            } else {
                for p in n.premises.iter().rev() {
                    stack.push((p, path.clone()));
                }
            }
        }
        out
    }

    /// Indented one-line-per-node rendering.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut stack = vec![(self, 0usize)];
        while let Some((n, indent)) = stack.pop() {
            out.push_str(&"  ".repeat(indent));
            out.push_str(&format!("[{}]", n.step.name()));
            let principal = n.step.principal();
            if !principal.is_empty() {
                out.push_str(&format!(" {principal}"));
            }
            if let Some(seq) = &n.sequent {
                out.push_str(&format!("    {seq}"));
            }
            out.push('\n');
            for p in n.premises.iter().rev() {
                stack.push((p, indent + 1));
            }
        }
        out
    }
}

impl Serialize for ProofNode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        map.serialize_entry("sequent", &self.sequent.as_ref().map(|q| q.to_string()))?;
        map.serialize_entry("rule", &self.step.name())?;
        map.serialize_entry("principal", &self.step.principal())?;
        map.serialize_entry("premises", &self.premises)?;
        map.end()
    }
}

#[derive(Clone, Debug)]
pub struct ProofResult {
    pub provable: bool,
    pub root: Sequent,
    pub tree: ProofNode,
    pub stats: Stats,
}

impl ProofResult {
    /// The tree alone, for byte-level comparisons between runs.
    pub fn tree_json(&self) -> String {
        serde_json::to_string(&self.tree).expect("proof trees serialize")
    }

    /// Verdict, tree and stats.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "provable": self.provable,
            "root": self.root.to_string(),
            "tree": self.tree,
            "stats": self.stats,
        })
    }
}

/// Verdict and stats without a proof tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub provable: bool,
    pub stats: Stats,
}

enum IStep {
    Axiom(AxiomHit),
    Rule(Inst),
    Open,
}

struct INode {
    goal: Option<Goal>,
    step: IStep,
    premises: Vec<INode>,
    closed: bool,
}

struct Search<'k, 's> {
    kernel: &'k Kernel<'s>,
    options: &'k ProverOptions,
    start: Instant,
    nodes: AtomicUsize,
    stop: AtomicBool,
    max_lk: AtomicUsize,
    max_rk: AtomicUsize,
}

impl Search<'_, '_> {
    fn tick(&self) -> Result<(), ProveError> {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        if n > self.options.max_nodes {
            self.stop.store(true, Ordering::Relaxed);
            return Err(ProveError::Inconclusive(format!("node limit {} reached", self.options.max_nodes)));
        }
        if let Some(ms) = self.options.max_millis {
            if n.is_multiple_of(256) && self.start.elapsed().as_millis() > ms as u128 {
                self.stop.store(true, Ordering::Relaxed);
                return Err(ProveError::Inconclusive(format!("time limit {ms} ms reached")));
            }
        }
        if self.stop.load(Ordering::Relaxed) {
            return Err(ProveError::Inconclusive("search cancelled".into()));
        }
        Ok(())
    }

    fn leaf_tables(&self, tables: &Tables) {
        self.max_lk.fetch_max(tables.lk.len(), Ordering::Relaxed);
        self.max_rk.fetch_max(tables.rk.links(), Ordering::Relaxed);
    }

    fn run(&self, mut goal: Goal, mut tables: Tables) -> Result<INode, ProveError> {
        let kernel = self.kernel;
        let record = self.options.record_sequents;
        let mut chain: Vec<(Option<Goal>, Inst)> = Vec::new();
        let mut node = loop {
            self.tick()?;
            if let Some(hit) = kernel.axiom(&goal) {
                self.leaf_tables(&tables);
                break INode { goal: record.then_some(goal), step: IStep::Axiom(hit), premises: vec![], closed: true };
            }
            match kernel.first_instance(&goal, &tables) {
                None => {
                    self.leaf_tables(&tables);
                    break INode { goal: record.then_some(goal), step: IStep::Open, premises: vec![], closed: false };
                }
                Some(inst) if inst.is_branching() => {
                    let goals = kernel.branch(&goal, inst);
                    let premises = self.branches(goals, &tables)?;
                    let closed = premises.len() == kernel_premise_count(kernel, inst) && premises.iter().all(|p| p.closed);
                    break INode { goal: record.then_some(goal), step: IStep::Rule(inst), premises, closed };
                }
                Some(inst) => {
                    chain.push((record.then(|| goal.clone()), inst));
                    kernel.apply_in_place(&mut goal, &mut tables, inst);
                }
            }
        };
        while let Some((g, inst)) = chain.pop() {
            let closed = node.closed;
            node = INode { goal: g, step: IStep::Rule(inst), premises: vec![node], closed };
        }
        Ok(node)
    }

    /// Premises in order, stopping after the first one that fails.
    fn branches(&self, goals: Vec<Goal>, tables: &Tables) -> Result<Vec<INode>, ProveError> {
        let mut out = Vec::with_capacity(goals.len());
        if self.options.parallel_branches && Execution::Parallel.is_parallel() {
            let results = Execution::Parallel.map(&goals, |g| self.run(g.clone(), tables.clone()));
            for r in results {
                let n = r?;
                let closed = n.closed;
                out.push(n);
                if !closed {
                    break;
                }
            }
            return Ok(out);
        }
        for g in goals {
            let n = self.run(g, tables.clone())?;
            let closed = n.closed;
            out.push(n);
            if !closed {
                break;
            }
        }
        Ok(out)
    }
}

fn kernel_premise_count(kernel: &Kernel<'_>, inst: Inst) -> usize {
    match inst {
        Inst::Oyr { .. } => kernel.results as usize,
        _ => 2,
    }
}

fn inode_depth(root: &INode) -> usize {
    let mut best = 0;
    let mut stack = vec![(root, 1)];
    while let Some((n, d)) = stack.pop() {
        best = best.max(d);
        stack.extend(n.premises.iter().map(|p| (p, d + 1)));
    }
    best
}

fn inode_count(root: &INode) -> usize {
    let mut count = 0;
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        count += 1;
        stack.extend(&n.premises);
    }
    count
}

fn convert(kernel: &Kernel<'_>, node: &INode, names: &mut LabelNames<'_>) -> ProofNode {
    let step = match &node.step {
        IStep::Axiom(hit) => {
            let mut principal = vec![LabelledFormula::new(names.get(hit.label), kernel.arena.formula(hit.first).clone())];
            if hit.second != hit.first {
                principal.push(LabelledFormula::new(names.get(hit.label), kernel.arena.formula(hit.second).clone()));
            }
            Step::Axiom(Axiom { kind: hit.kind, principal })
        }
        IStep::Rule(inst) => Step::Rule(kernel.public_instance(inst, names)),
        IStep::Open => Step::Open,
    };
    ProofNode {
        sequent: node.goal.as_ref().map(|g| kernel.sequent(g, names)),
        step,
        premises: node.premises.iter().map(|p| convert(kernel, p, names)).collect(),
    }
}

fn search<'s>(
    seq: &Sequent,
    structure: &'s ObservationStructure,
    options: &ProverOptions,
) -> Result<(Kernel<'s>, INode, Stats), ProveError> {
    let start = Instant::now();
    seq.validate(structure)?;
    let mut kernel = Kernel::new(structure, options.completion);
    let goal = kernel.compile(seq)?;
    let tables = kernel.compile_tables(&init_tables_with(seq, options.chain_bound))?;
    let root = {
        let s = Search {
            kernel: &kernel,
            options,
            start,
            nodes: AtomicUsize::new(0),
            stop: AtomicBool::new(false),
            max_lk: AtomicUsize::new(0),
            max_rk: AtomicUsize::new(0),
        };
        let root = s.run(goal, tables)?;
        let stats = Stats {
            nodes: inode_count(&root),
            depth: inode_depth(&root),
            table_lk_size: s.max_lk.load(Ordering::Relaxed),
            table_rk_chains: s.max_rk.load(Ordering::Relaxed),
            elapsed_ms: 0,
        };
        (root, stats)
    };
    let (root, mut stats) = root;
    stats.elapsed_ms = start.elapsed().as_millis();
    Ok((kernel, root, stats))
}

/// Runs the search on `seq`. Hitting a resource cap is an error, never a
/// negative verdict.
pub fn prove(seq: &Sequent, structure: &ObservationStructure, options: &ProverOptions) -> Result<ProofResult, ProveError> {
    let (kernel, root, mut stats) = search(seq, structure, options)?;
    let start = Instant::now();
    let mut names = LabelNames::new(&kernel.labels);
    let tree = convert(&kernel, &root, &mut names);
    stats.elapsed_ms += start.elapsed().as_millis();
    Ok(ProofResult { provable: root.closed, root: seq.clone(), tree, stats })
}

/// `prove` on the goal `s: f`.
pub fn prove_formula(
    f: &Formula,
    structure: &ObservationStructure,
    options: &ProverOptions,
) -> Result<ProofResult, ProveError> {
    prove(&Sequent::goal(crate::parser::ROOT_LABEL, f.clone()), structure, options)
}

/// The verdict alone; skips building the public tree.
pub fn decide(seq: &Sequent, structure: &ObservationStructure, options: &ProverOptions) -> Result<Decision, ProveError> {
    let options = ProverOptions { record_sequents: false, ..options.clone() };
    let (_, root, stats) = search(seq, structure, &options)?;
    Ok(Decision { provable: root.closed, stats })
}

pub fn decide_formula(f: &Formula, structure: &ObservationStructure, options: &ProverOptions) -> Result<bool, ProveError> {
    Ok(decide(&Sequent::goal(crate::parser::ROOT_LABEL, f.clone()), structure, options)?.provable)
}

/// Checks that no branch applies a left knowledge rule twice to the same
/// principal formula and relational atom.
pub fn audit_left_knowledge_pairs(tree: &ProofNode) -> Result<(), String> {
    for branch in tree.branches() {
        let mut seen = BTreeSet::new();
        for node in branch {
            if let Step::Rule(RuleInstance::KIL { principal, relation } | RuleInstance::KNL { principal, relation }) =
                &node.step
            {
                if !seen.insert((principal.clone(), relation.clone())) {
                    return Err(format!("pair ({principal}, {relation}) used twice on one branch"));
                }
            }
        }
    }
    Ok(())
}

/// Checks that chains of labels created by right knowledge rules stay within
/// the bound derived from `root`.
pub fn audit_right_knowledge_chains(tree: &ProofNode, root: &Sequent, bound: ChainBound) -> Result<(), String> {
    let tables: LoopTables = init_tables_with(root, bound);
    for branch in tree.branches() {
        let mut chains: RkTable<(Group, Formula), Label> = RkTable::new();
        for node in branch {
            if let Step::Rule(RuleInstance::KIR { principal, fresh }) = &node.step {
                let Formula::Know(group, body) = &principal.formula else {
                    return Err(format!("=>K_I on non-knowledge formula {principal}"));
                };
                let max = tables.rk.max_for(group);
                let key = (group.clone(), (**body).clone());
                chains.record(key.clone(), max, principal.label.clone(), fresh.clone());
                let depth = chains.depth(&key, fresh);
                if depth > max {
                    return Err(format!("chain for {principal} reaches length {depth} > {max}"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_sequent};
    use crate::structure::tests::{c1, c2};

    fn proves(text: &str, st: &ObservationStructure, options: &ProverOptions) -> bool {
        prove_formula(&parse_formula(text, st).unwrap(), st, options).unwrap().provable
    }

    #[test]
    fn known_verdicts() {
        let st = c2();
        let o = ProverOptions::default();
        assert!(proves("K{a}(p -> q) -> (K{a} p -> K{a} q)", &st, &o));
        assert!(proves("K{a} p -> K{a,b} p", &st, &o));
        assert!(proves("obs{a}(oa)^0 | obs{a}(oa)^1", &st, &o));
        assert!(!proves("p -> K{a} p", &st, &o));
        assert!(proves("K{a} p -> p", &st, &o));
        assert!(proves("K{a} p -> K{a} K{a} p", &st, &o));
        assert!(proves("~K{a} p -> K{a} ~K{a} p", &st, &o));
    }

    #[test]
    fn axiom_leaf() {
        let st = c2();
        let r = prove(&parse_sequent("s: p |- s: p", &st).unwrap(), &st, &ProverOptions::default()).unwrap();
        assert!(r.provable);
        assert_eq!(r.tree.node_count(), 1);
        assert_eq!(r.tree.step.name(), "Axiom(1)");
    }

    #[test]
    fn completion_needed_over_single_observations() {
        let st = c1();
        assert!(proves("p -> K{a} p", &st, &ProverOptions::default()));
        assert!(!proves("p -> K{a} p", &st, &ProverOptions::strict()));
    }

    #[test]
    fn open_leaf_reported() {
        let st = c2();
        let r = prove_formula(&parse_formula("p -> K{a} p", &st).unwrap(), &st, &ProverOptions::default()).unwrap();
        assert!(!r.provable);
        assert!(r.tree.open_leaf().is_some());
        assert!(!r.tree.is_closed());
    }

    #[test]
    fn node_cap_is_inconclusive() {
        let st = c2();
        let f = parse_formula("K{a}(p -> q) -> (K{a} p -> K{a} q)", &st).unwrap();
        let o = ProverOptions { max_nodes: 3, ..ProverOptions::default() };
        assert!(matches!(prove_formula(&f, &st, &o), Err(ProveError::Inconclusive(_))));
    }

    #[test]
    fn audits_pass_and_json_is_stable() {
        let st = c2();
        let f = parse_formula("K{a} p & K{b} q -> K{a,b}(p & q)", &st).unwrap();
        let r1 = prove_formula(&f, &st, &ProverOptions::default()).unwrap();
        let r2 = prove_formula(&f, &st, &ProverOptions::default()).unwrap();
        assert!(r1.provable);
        assert_eq!(r1.tree_json(), r2.tree_json());
        audit_left_knowledge_pairs(&r1.tree).unwrap();
        audit_right_knowledge_chains(&r1.tree, &r1.root, ChainBound::PerGroup).unwrap();
        assert_eq!(r1.stats.nodes, r1.tree.node_count());
        assert_eq!(r1.stats.depth, r1.tree.depth());
    }

    #[test]
    fn parallel_branches_same_tree() {
        let st = c2();
        let f = parse_formula("(obs{a}(oa)^0 | obs{a}(oa)^1) & (K{a} p -> p)", &st).unwrap();
        let seq = prove_formula(&f, &st, &ProverOptions::default()).unwrap();
        let par = prove_formula(&f, &st, &ProverOptions { parallel_branches: true, ..Default::default() }).unwrap();
        assert_eq!(seq.tree_json(), par.tree_json());
    }
}
