//! Finite correlation models and the brute-force validity oracle.
//!
//! A state is a total function from full joint observations to results. The
//! relation `~I` for a nonempty group holds between states with equal
//! `I`-local states; `~{}` relates every pair of states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{OracleError, StructureError};
use crate::structure::{Group, JointObservation, Mask, Name, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, RelAtom, Sequent};

/// Default cap on the number of models an exhaustive sweep may visit.
pub const DEFAULT_MODEL_BUDGET: u128 = 5_000_000;

/// Models are evaluated with one bit per state.
pub const MAX_MODEL_STATES: usize = 64;

/// A state: the result of every full joint observation, as result indices
/// aligned with the lexicographic order of `O_N`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    outcomes: Vec<u16>,
}

impl State {
    /// Builds a state from result names listed in `O_N` order.
    pub fn from_results<S: AsRef<str>>(
        structure: &ObservationStructure,
        results: &[S],
    ) -> Result<Self, OracleError> {
        if results.len() != structure.full_count() {
            return Err(OracleError::Model(format!(
                "a state needs {} outcomes, found {}",
                structure.full_count(),
                results.len()
            )));
        }
        let outcomes = results
            .iter()
            .map(|r| {
                structure
                    .result_index(r.as_ref())
                    .map(|i| i as u16)
                    .ok_or_else(|| StructureError::UnknownResult(r.as_ref().to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(State { outcomes })
    }

    /// Result indices in `O_N` order.
    pub fn outcome_indices(&self) -> &[u16] {
        &self.outcomes
    }

    /// The result this state assigns to a full joint observation.
    pub fn outcome(&self, structure: &ObservationStructure, o: &JointObservation) -> Result<Name, OracleError> {
        let (mask, idx) = structure.joint_index(o)?;
        if mask != structure.full_mask() {
            return Err(OracleError::Model(format!("{o} is not a full joint observation")));
        }
        Ok(structure.results()[self.outcomes[idx] as usize].clone())
    }
}

fn local_index(structure: &ObservationStructure, state: &State, mask: Mask, e: usize) -> Result<usize, StructureError> {
    structure.compose_indices(
        structure
            .extension_indices(mask, e)
            .iter()
            .map(|&o| state.outcomes[o as usize] as usize),
    )
}

/// `s_I(e)`: the composition of the outcomes of every full observation
/// extending `e`.
pub fn local_state(
    state: &State,
    group: &Group,
    e: &JointObservation,
    structure: &ObservationStructure,
) -> Result<Name, OracleError> {
    if e.group != *group {
        return Err(OracleError::Model(format!("{e} is not a joint observation of {group}")));
    }
    let (mask, idx) = structure.joint_index(e)?;
    Ok(structure.results()[local_index(structure, state, mask, idx)?].clone())
}

/// `s ~I t`. Always true for the empty group.
pub fn observationally_equivalent(
    s: &State,
    t: &State,
    group: &Group,
    structure: &ObservationStructure,
) -> Result<bool, OracleError> {
    let mask = structure.mask_of(group)?;
    if mask == 0 {
        return Ok(true);
    }
    for e in 0..structure.joint_count(mask) {
        if local_index(structure, s, mask, e)? != local_index(structure, t, mask, e)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A finite model: a nonempty list of distinct states, the atoms true at
/// each state, and the derived equivalence relations.
#[derive(Clone, Debug)]
pub struct CorrelationModel<'s> {
    structure: &'s ObservationStructure,
    states: Vec<State>,
    names: Vec<String>,
    valuation: Vec<BTreeSet<Name>>,
    /// `local[state][mask][e]`
    local: Vec<Vec<Vec<u16>>>,
    /// `related[mask][state]`: bit set of states related to `state`.
    related: Vec<Vec<u64>>,
    atom_bits: BTreeMap<Name, u64>,
}

impl<'s> CorrelationModel<'s> {
    /// States are named `s0, s1, ...` in list order.
    pub fn new(
        structure: &'s ObservationStructure,
        states: Vec<State>,
        valuation: Vec<BTreeSet<Name>>,
    ) -> Result<Self, OracleError> {
        let names = (0..states.len()).map(|i| format!("s{i}")).collect();
        Self::with_names(structure, states, names, valuation)
    }

    pub fn with_names(
        structure: &'s ObservationStructure,
        states: Vec<State>,
        names: Vec<String>,
        valuation: Vec<BTreeSet<Name>>,
    ) -> Result<Self, OracleError> {
        if states.is_empty() {
            return Err(OracleError::Model("a model needs at least one state".into()));
        }
        if states.len() > MAX_MODEL_STATES {
            return Err(OracleError::Model(format!(
                "{} states (at most {MAX_MODEL_STATES})",
                states.len()
            )));
        }
        if valuation.len() != states.len() || names.len() != states.len() {
            return Err(OracleError::Model("valuation and names must cover every state".into()));
        }
        for s in &states {
            if s.outcomes.len() != structure.full_count()
                || s.outcomes.iter().any(|&r| r as usize >= structure.results().len())
            {
                return Err(OracleError::Model("state does not fit the structure".into()));
            }
        }
        let groups = 1usize << structure.agents().len();
        let mut local = Vec::with_capacity(states.len());
        for s in &states {
            let mut per_mask = Vec::with_capacity(groups);
            for mask in 0..groups as Mask {
                let row = (0..structure.joint_count(mask))
                    .map(|e| local_index(structure, s, mask, e).map(|r| r as u16))
                    .collect::<Result<Vec<_>, _>>()?;
                per_mask.push(row);
            }
            local.push(per_mask);
        }
        let n = states.len();
        let everyone = all_bits(n);
        let related = (0..groups)
            .map(|mask| {
                (0..n)
                    .map(|i| {
                        if mask == 0 {
                            return everyone;
                        }
                        (0..n)
                            .filter(|&j| local[i][mask] == local[j][mask])
                            .fold(0u64, |acc, j| acc | 1 << j)
                    })
                    .collect()
            })
            .collect();
        let mut atom_bits: BTreeMap<Name, u64> = BTreeMap::new();
        for (i, atoms) in valuation.iter().enumerate() {
            for a in atoms {
                *atom_bits.entry(a.clone()).or_insert(0) |= 1 << i;
            }
        }
        Ok(CorrelationModel { structure, states, names, valuation, local, related, atom_bits })
    }

    pub fn structure(&self) -> &'s ObservationStructure {
        self.structure
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Atoms true at the state with this index.
    pub fn true_atoms(&self, state: usize) -> &BTreeSet<Name> {
        &self.valuation[state]
    }

    pub fn index_of(&self, state: &State) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    /// Whether states `i` and `j` are related by `~group`.
    pub fn equivalent(&self, i: usize, j: usize, group: &Group) -> Result<bool, OracleError> {
        let mask = self.structure.mask_of(group)?;
        if i >= self.states.len() || j >= self.states.len() {
            return Err(OracleError::UnknownState);
        }
        Ok(self.related[mask as usize][i] & (1 << j) != 0)
    }

    fn everyone(&self) -> u64 {
        all_bits(self.states.len())
    }

    /// Bit set of the states where `f` holds.
    pub fn truth_set(&self, f: &Formula) -> Result<u64, OracleError> {
        Ok(Compiled::new(f, self.structure)?.eval(self))
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump::from_model(self)
    }
}

fn all_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// `M, s |= A`.
pub fn satisfies(model: &CorrelationModel<'_>, state: &State, f: &Formula) -> Result<bool, OracleError> {
    let idx = model.index_of(state).ok_or(OracleError::UnknownState)?;
    satisfies_at(model, idx, f)
}

/// `M, s |= A` for the state with this index.
pub fn satisfies_at(model: &CorrelationModel<'_>, state: usize, f: &Formula) -> Result<bool, OracleError> {
    if state >= model.states.len() {
        return Err(OracleError::UnknownState);
    }
    Ok(model.truth_set(f)? & (1 << state) != 0)
}

/// Checks the four model conditions on the relations as materialized: each
/// `~I` is an equivalence, `I ⊆ J` implies `~J ⊆ ~I`, `~N` is the identity and
/// `~{}` is universal.
pub fn validate_model(model: &CorrelationModel<'_>) -> Result<(), OracleError> {
    let n = model.states.len();
    let groups = model.related.len();
    let holds = |mask: usize, i: usize, j: usize| model.related[mask][i] & (1 << j) != 0;
    for mask in 0..groups {
        let g = model.structure.group_of(mask as Mask);
        for i in 0..n {
            if !holds(mask, i, i) {
                return Err(OracleError::Model(format!("~{g} is not reflexive at {}", model.names[i])));
            }
            for j in 0..n {
                if holds(mask, i, j) != holds(mask, j, i) {
                    return Err(OracleError::Model(format!("~{g} is not symmetric")));
                }
                for k in 0..n {
                    if holds(mask, i, j) && holds(mask, j, k) && !holds(mask, i, k) {
                        return Err(OracleError::Model(format!("~{g} is not transitive")));
                    }
                }
            }
        }
    }
    for small in 0..groups {
        for big in 0..groups {
            if small & !big != 0 {
                continue;
            }
            for i in 0..n {
                if model.related[big][i] & !model.related[small][i] != 0 {
                    return Err(OracleError::Model(format!(
                        "information is not monotonic between {} and {}",
                        model.structure.group_of(small as Mask),
                        model.structure.group_of(big as Mask)
                    )));
                }
            }
        }
    }
    let full = model.structure.full_mask() as usize;
    for i in 0..n {
        if model.related[full][i] != 1 << i {
            return Err(OracleError::Model(format!(
                "observability fails: {} is ~N-related to another state",
                model.names[i]
            )));
        }
        if model.related[0][i] != model.everyone() {
            return Err(OracleError::Model("~{} is not universal".into()));
        }
    }
    Ok(())
}

enum Op {
    Atom(Name),
    Obs { mask: Mask, e: usize, r: u16 },
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Implies(usize, usize),
    Know(Mask, usize),
    Top,
    Bottom,
}

/// A formula resolved against a structure, ready for repeated evaluation.
pub struct Compiled {
    ops: Vec<Op>,
}

impl Compiled {
    pub fn new(f: &Formula, structure: &ObservationStructure) -> Result<Self, OracleError> {
        f.validate(structure)?;
        let mut ops = Vec::new();
        Self::push(f, structure, &mut ops)?;
        Ok(Compiled { ops })
    }

    fn push(f: &Formula, structure: &ObservationStructure, ops: &mut Vec<Op>) -> Result<usize, OracleError> {
        let op = match f {
            Formula::Atom(p) => Op::Atom(p.clone()),
            Formula::Obs(atom) => {
                let (mask, e) = structure.joint_index(&atom.observation)?;
                let r = structure
                    .result_index(&atom.result)
                    .ok_or_else(|| StructureError::UnknownResult(atom.result.to_string()))?;
                Op::Obs { mask, e, r: r as u16 }
            }
            Formula::Not(a) => Op::Not(Self::push(a, structure, ops)?),
            Formula::And(a, b) => Op::And(Self::push(a, structure, ops)?, Self::push(b, structure, ops)?),
            Formula::Or(a, b) => Op::Or(Self::push(a, structure, ops)?, Self::push(b, structure, ops)?),
            Formula::Implies(a, b) => {
                Op::Implies(Self::push(a, structure, ops)?, Self::push(b, structure, ops)?)
            }
            Formula::Know(g, a) => {
                let mask = structure.mask_of(g)?;
                Op::Know(mask, Self::push(a, structure, ops)?)
            }
            Formula::Top => Op::Top,
            Formula::Bottom => Op::Bottom,
        };
        ops.push(op);
        Ok(ops.len() - 1)
    }

    /// Propositional atoms the formula mentions.
    pub fn atoms(&self) -> impl Iterator<Item = &Name> {
        self.ops.iter().filter_map(|op| match op {
            Op::Atom(p) => Some(p),
            _ => None,
        })
    }

    pub fn eval(&self, model: &CorrelationModel<'_>) -> u64 {
        let everyone = model.everyone();
        let n = model.states.len();
        let mut vals: Vec<u64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Atom(ref p) => model.atom_bits.get(p).copied().unwrap_or(0),
                Op::Obs { mask, e, r } => (0..n)
                    .filter(|&i| model.local[i][mask as usize][e] == r)
                    .fold(0, |acc, i| acc | 1 << i),
                Op::Not(a) => !vals[a] & everyone,
                Op::And(a, b) => vals[a] & vals[b],
                Op::Or(a, b) => vals[a] | vals[b],
                Op::Implies(a, b) => (!vals[a] | vals[b]) & everyone,
                Op::Know(mask, a) => {
                    let body = vals[a];
                    let row = &model.related[mask as usize];
                    (0..n).filter(|&i| row[i] & !body == 0).fold(0, |acc, i| acc | 1 << i)
                }
                Op::Top => everyone,
                Op::Bottom => 0,
            };
            vals.push(v);
        }
        vals.last().copied().unwrap_or(0)
    }
}

/// Every function from `O_N` to `R`, in lexicographic order with the first
/// full observation most significant.
pub fn state_space(structure: &ObservationStructure) -> Result<Vec<State>, OracleError> {
    let n = structure.full_count();
    let r = structure.results().len() as u128;
    let count = r
        .checked_pow(n as u32)
        .filter(|&c| c <= MAX_MODEL_STATES as u128)
        .ok_or(OracleError::Budget(u128::MAX, MAX_MODEL_STATES as u128))?;
    Ok((0..count)
        .map(|mut k| {
            let mut outcomes = vec![0u16; n];
            for slot in outcomes.iter_mut().rev() {
                *slot = (k % r) as u16;
                k /= r;
            }
            State { outcomes }
        })
        .collect())
}

/// `Σ_{∅≠S'⊆S} 2^(|S'|·atoms)` for a state space of size `states`.
pub fn model_count(states: usize, atoms: usize) -> Option<u128> {
    let per_state = 1u128.checked_shl(atoms as u32)?;
    (per_state + 1).checked_pow(states as u32).map(|c| c - 1)
}

/// Lazily yields every model over the given atoms: nonempty subsets of the
/// state space in increasing bit-mask order, then every valuation.
pub struct ModelIter<'s> {
    structure: &'s ObservationStructure,
    space: Vec<State>,
    atoms: Vec<Name>,
    subset: u64,
    members: Vec<usize>,
    valuation: u128,
    valuations: u128,
}

impl<'s> Iterator for ModelIter<'s> {
    type Item = CorrelationModel<'s>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.valuation >= self.valuations {
            let limit = all_bits(self.space.len());
            if self.subset >= limit {
                return None;
            }
            self.subset += 1;
            self.members = (0..self.space.len()).filter(|&i| self.subset & (1 << i) != 0).collect();
            self.valuation = 0;
            self.valuations = 1u128 << (self.members.len() * self.atoms.len());
        }
        let a = self.atoms.len();
        let v = self.valuation;
        self.valuation += 1;
        let states = self.members.iter().map(|&i| self.space[i].clone()).collect();
        let valuation = (0..self.members.len())
            .map(|i| {
                (0..a)
                    .filter(|&j| v & (1u128 << (i * a + j)) != 0)
                    .map(|j| self.atoms[j].clone())
                    .collect()
            })
            .collect();
        let model = CorrelationModel::new(self.structure, states, valuation)
            .expect("enumerated states fit the structure");
        Some(model)
    }
}

/// Every model over `atoms`, refusing spaces larger than `budget`.
pub fn enumerate_models<'s>(
    structure: &'s ObservationStructure,
    atoms: &BTreeSet<Name>,
    budget: u128,
) -> Result<ModelIter<'s>, OracleError> {
    let space = state_space(structure)?;
    let count = model_count(space.len(), atoms.len()).unwrap_or(u128::MAX);
    if count > budget {
        return Err(OracleError::Budget(count, budget));
    }
    Ok(ModelIter {
        structure,
        space,
        atoms: atoms.iter().cloned().collect(),
        subset: 0,
        members: Vec::new(),
        valuation: 0,
        valuations: 0,
    })
}

/// A state of a model at which a formula fails.
#[derive(Clone, Debug)]
pub struct Witness<'s> {
    pub model: CorrelationModel<'s>,
    pub state: usize,
}

impl Witness<'_> {
    pub fn state_name(&self) -> &str {
        &self.model.names[self.state]
    }
}

/// All models over a fixed atom set, materialized once so many formulas can
/// be checked against them.
pub struct ModelSpace<'s> {
    structure: &'s ObservationStructure,
    atoms: BTreeSet<Name>,
    models: Vec<CorrelationModel<'s>>,
}

impl<'s> ModelSpace<'s> {
    pub fn new(
        structure: &'s ObservationStructure,
        atoms: &BTreeSet<Name>,
        budget: u128,
    ) -> Result<Self, OracleError> {
        let models = enumerate_models(structure, atoms, budget)?.collect();
        Ok(ModelSpace { structure, atoms: atoms.clone(), models })
    }

    pub fn models(&self) -> &[CorrelationModel<'s>] {
        &self.models
    }

    pub fn atoms(&self) -> &BTreeSet<Name> {
        &self.atoms
    }

    fn compile(&self, f: &Formula) -> Result<Compiled, OracleError> {
        let compiled = Compiled::new(f, self.structure)?;
        if let Some(p) = compiled.atoms().find(|p| !self.atoms.contains(*p)) {
            return Err(OracleError::Model(format!("atom {p} is outside the model space")));
        }
        Ok(compiled)
    }

    /// The first model and state (in enumeration order) falsifying `f`.
    pub fn countermodel(&self, f: &Formula) -> Result<Option<Witness<'s>>, OracleError> {
        let compiled = self.compile(f)?;
        for model in &self.models {
            let missing = !compiled.eval(model) & model.everyone();
            if missing != 0 {
                return Ok(Some(Witness { model: model.clone(), state: missing.trailing_zeros() as usize }));
            }
        }
        Ok(None)
    }

    pub fn is_valid(&self, f: &Formula) -> Result<bool, OracleError> {
        let compiled = self.compile(f)?;
        Ok(self.models.iter().all(|m| compiled.eval(m) == m.everyone()))
    }
}

/// Validity over every model for the given atoms. `atoms` must include every
/// atom of `f`; extra atoms are harmless.
pub fn check_validity(f: &Formula, structure: &ObservationStructure, atoms: &BTreeSet<Name>) -> Result<bool, OracleError> {
    Ok(find_countermodel(f, structure, atoms, DEFAULT_MODEL_BUDGET)?.is_none())
}

pub fn find_countermodel<'s>(
    f: &Formula,
    structure: &'s ObservationStructure,
    atoms: &BTreeSet<Name>,
    budget: u128,
) -> Result<Option<Witness<'s>>, OracleError> {
    let compiled = Compiled::new(f, structure)?;
    if let Some(p) = compiled.atoms().find(|p| !atoms.contains(*p)) {
        return Err(OracleError::Model(format!("atom {p} is outside the model space")));
    }
    for model in enumerate_models(structure, atoms, budget)? {
        let missing = !compiled.eval(&model) & model.everyone();
        if missing != 0 {
            let state = missing.trailing_zeros() as usize;
            return Ok(Some(Witness { model, state }));
        }
    }
    Ok(None)
}

/// Formulas over labelled formulas and relational atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExtFormula {
    Labelled(LabelledFormula),
    Relation(RelAtom),
    And(Box<ExtFormula>, Box<ExtFormula>),
    Or(Box<ExtFormula>, Box<ExtFormula>),
    Implies(Box<ExtFormula>, Box<ExtFormula>),
}

impl fmt::Display for ExtFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtFormula::Labelled(lf) => write!(f, "[{lf}]"),
            ExtFormula::Relation(r) => write!(f, "[{r}]"),
            ExtFormula::And(a, b) => write!(f, "{a} & {b}"),
            ExtFormula::Or(a, b) => write!(f, "{a} | {b}"),
            ExtFormula::Implies(a, b) => write!(f, "({a}) -> ({b})"),
        }
    }
}

fn fold_ext(items: Vec<ExtFormula>, op: fn(Box<ExtFormula>, Box<ExtFormula>) -> ExtFormula) -> ExtFormula {
    let mut iter = items.into_iter().rev();
    let mut acc = iter.next().expect("caller supplies at least one item");
    for f in iter {
        acc = op(Box::new(f), Box::new(acc));
    }
    acc
}

/// `(Γ as a conjunction) -> (Δ as a disjunction)`. An empty side becomes
/// `s: ⊤` or `s: ⊥` at the least label of the sequent (`s` if it has none).
pub fn formula_of_sequent(seq: &Sequent) -> ExtFormula {
    let label = seq.labels().into_iter().next().unwrap_or_else(|| Label::new("s"));
    let mut left: Vec<ExtFormula> = seq.antecedent.iter().cloned().map(ExtFormula::Labelled).collect();
    left.extend(seq.relations.iter().cloned().map(ExtFormula::Relation));
    if left.is_empty() {
        left.push(ExtFormula::Labelled(LabelledFormula::new(label.clone(), Formula::Top)));
    }
    let mut right: Vec<ExtFormula> = seq.succedent.iter().cloned().map(ExtFormula::Labelled).collect();
    if right.is_empty() {
        right.push(ExtFormula::Labelled(LabelledFormula::new(label, Formula::Bottom)));
    }
    ExtFormula::Implies(Box::new(fold_ext(left, ExtFormula::And)), Box::new(fold_ext(right, ExtFormula::Or)))
}

/// A model and an assignment of labels to its states falsifying a sequent.
#[derive(Clone, Debug)]
pub struct SequentWitness<'s> {
    pub model: CorrelationModel<'s>,
    pub assignment: BTreeMap<Label, usize>,
}

struct ExtProgram {
    labels: Vec<Label>,
    root: ExtNode,
    formulas: Vec<Compiled>,
}

enum ExtNode {
    Labelled(usize, usize),
    Relation(Mask, usize, usize),
    And(Box<ExtNode>, Box<ExtNode>),
    Or(Box<ExtNode>, Box<ExtNode>),
    Implies(Box<ExtNode>, Box<ExtNode>),
}

impl ExtProgram {
    fn new(f: &ExtFormula, structure: &ObservationStructure) -> Result<Self, OracleError> {
        let mut prog = ExtProgram { labels: Vec::new(), root: ExtNode::Labelled(0, 0), formulas: Vec::new() };
        prog.root = prog.node(f, structure)?;
        Ok(prog)
    }

    fn label(&mut self, l: &Label) -> usize {
        match self.labels.iter().position(|x| x == l) {
            Some(i) => i,
            None => {
                self.labels.push(l.clone());
                self.labels.len() - 1
            }
        }
    }

    fn node(&mut self, f: &ExtFormula, structure: &ObservationStructure) -> Result<ExtNode, OracleError> {
        Ok(match f {
            ExtFormula::Labelled(lf) => {
                let l = self.label(&lf.label);
                self.formulas.push(Compiled::new(&lf.formula, structure)?);
                ExtNode::Labelled(l, self.formulas.len() - 1)
            }
            ExtFormula::Relation(r) => {
                let mask = structure.mask_of(&r.group)?;
                ExtNode::Relation(mask, self.label(&r.left), self.label(&r.right))
            }
            ExtFormula::And(a, b) => ExtNode::And(Box::new(self.node(a, structure)?), Box::new(self.node(b, structure)?)),
            ExtFormula::Or(a, b) => ExtNode::Or(Box::new(self.node(a, structure)?), Box::new(self.node(b, structure)?)),
            ExtFormula::Implies(a, b) => {
                ExtNode::Implies(Box::new(self.node(a, structure)?), Box::new(self.node(b, structure)?))
            }
        })
    }
}

fn eval_ext(node: &ExtNode, model: &CorrelationModel<'_>, truth: &[u64], assign: &[usize]) -> bool {
    match node {
        ExtNode::Labelled(l, f) => truth[*f] & (1 << assign[*l]) != 0,
        ExtNode::Relation(mask, l, r) => model.related[*mask as usize][assign[*l]] & (1 << assign[*r]) != 0,
        ExtNode::And(a, b) => eval_ext(a, model, truth, assign) && eval_ext(b, model, truth, assign),
        ExtNode::Or(a, b) => eval_ext(a, model, truth, assign) || eval_ext(b, model, truth, assign),
        ExtNode::Implies(a, b) => !eval_ext(a, model, truth, assign) || eval_ext(b, model, truth, assign),
    }
}

/// Searches every model over the sequent's atoms and every assignment of its
/// labels to states for one that falsifies the sequent formula.
pub fn sequent_countermodel<'s>(
    seq: &Sequent,
    structure: &'s ObservationStructure,
    budget: u128,
) -> Result<Option<SequentWitness<'s>>, OracleError> {
    seq.validate(structure)?;
    let prog = ExtProgram::new(&formula_of_sequent(seq), structure)?;
    let atoms = seq.atoms();
    let space = state_space(structure)?;
    let labels = prog.labels.len() as u32;
    let work = model_count(space.len(), atoms.len())
        .and_then(|m| (space.len() as u128).checked_pow(labels).and_then(|a| m.checked_mul(a)))
        .unwrap_or(u128::MAX);
    if work > budget {
        return Err(OracleError::Budget(work, budget));
    }
    for model in enumerate_models(structure, &atoms, u128::MAX)? {
        let truth: Vec<u64> = prog.formulas.iter().map(|c| c.eval(&model)).collect();
        let k = model.states.len();
        let mut assign = vec![0usize; prog.labels.len()];
        loop {
            if !eval_ext(&prog.root, &model, &truth, &assign) {
                let assignment = prog.labels.iter().cloned().zip(assign.iter().copied()).collect();
                return Ok(Some(SequentWitness { model, assignment }));
            }
            // Odometer over label assignments.
            let mut pos = 0;
            while pos < assign.len() {
                assign[pos] += 1;
                if assign[pos] < k {
                    break;
                }
                assign[pos] = 0;
                pos += 1;
            }
            if pos == assign.len() {
                break;
            }
        }
    }
    Ok(None)
}

/// True iff the sequent formula holds in every model under every label
/// assignment.
pub fn sequent_valid(seq: &Sequent, structure: &ObservationStructure, budget: u128) -> Result<bool, OracleError> {
    Ok(sequent_countermodel(seq, structure, budget)?.is_none())
}

/// JSON form of a model. Outcome keys join the components of a full joint
/// observation with commas, in agent order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDump {
    pub states: Vec<StateDump>,
    pub valuation: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDump {
    pub name: String,
    pub outcomes: BTreeMap<String, String>,
}

fn observation_key(o: &JointObservation) -> String {
    o.components.iter().map(|c| c.as_ref()).collect::<Vec<_>>().join(",")
}

impl ModelDump {
    pub fn from_model(model: &CorrelationModel<'_>) -> Self {
        let s = model.structure;
        let full = s.full_mask();
        let keys: Vec<String> = (0..s.full_count()).map(|i| observation_key(&s.joint_at(full, i))).collect();
        let states = model
            .states
            .iter()
            .zip(&model.names)
            .map(|(st, name)| StateDump {
                name: name.clone(),
                outcomes: keys
                    .iter()
                    .zip(&st.outcomes)
                    .map(|(k, &r)| (k.clone(), s.results()[r as usize].to_string()))
                    .collect(),
            })
            .collect();
        let valuation = model
            .names
            .iter()
            .zip(&model.valuation)
            .map(|(name, atoms)| (name.clone(), atoms.iter().map(|a| a.to_string()).collect()))
            .collect();
        ModelDump { states, valuation }
    }

    pub fn into_model(self, structure: &ObservationStructure) -> Result<CorrelationModel<'_>, OracleError> {
        let full = structure.full_mask();
        let keys: Vec<String> =
            (0..structure.full_count()).map(|i| observation_key(&structure.joint_at(full, i))).collect();
        let mut names = Vec::new();
        let mut states = Vec::new();
        for st in &self.states {
            if names.contains(&st.name) {
                return Err(OracleError::Model(format!("state name {} is used twice", st.name)));
            }
            if let Some(k) = st.outcomes.keys().find(|k| !keys.contains(k)) {
                return Err(OracleError::Model(format!("{}: unknown full observation {k:?}", st.name)));
            }
            let results = keys
                .iter()
                .map(|k| {
                    st.outcomes
                        .get(k)
                        .ok_or_else(|| OracleError::Model(format!("{}: no outcome for {k:?}", st.name)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            states.push(State::from_results(structure, &results)?);
            names.push(st.name.clone());
        }
        if let Some(k) = self.valuation.keys().find(|k| !names.contains(k)) {
            return Err(OracleError::Model(format!("valuation names unknown state {k}")));
        }
        let valuation = names
            .iter()
            .map(|n| {
                self.valuation
                    .get(n)
                    .map(|atoms| atoms.iter().map(|a| Name::from(a.as_str())).collect())
                    .unwrap_or_default()
            })
            .collect();
        CorrelationModel::with_names(structure, states, names, valuation)
    }
}
