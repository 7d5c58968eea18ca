//! Interned sequents and the rule machinery the search runs on.
//!
//! Formulas are hash-consed into an arena before search starts, so the search
//! itself only moves integer ids. Every observation atom of the structure is
//! interned first, in (group mask, observation, result) order, which makes the
//! id of `e^r` a simple function of its slot.

use std::collections::HashMap;
use std::ops::ControlFlow;

use crate::calculus::{AxiomKind, RuleId, RuleInstance};
use crate::error::{ProveError, StructureError};
use crate::structure::{Mask, Name, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, RelAtom, Sequent};
use crate::tables::{LoopTables, RkTable};

pub(crate) type F = u32;
pub(crate) type Lab = u32;

const UNKNOWN: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Atom(u32),
    Obs { mask: Mask, e: u32, r: u32 },
    Not(F),
    And(F, F),
    Or(F, F),
    Imp(F, F),
    Know(Mask, F),
}

/// A sorted, duplicate-free vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct SortedVec<T>(Vec<T>);

impl<T> Default for SortedVec<T> {
    fn default() -> Self {
        SortedVec(Vec::new())
    }
}

impl<T: Ord + Copy> SortedVec<T> {
    pub fn contains(&self, x: &T) -> bool {
        self.0.binary_search(x).is_ok()
    }

    pub fn insert(&mut self, x: T) -> bool {
        match self.0.binary_search(&x) {
            Ok(_) => false,
            Err(i) => {
                self.0.insert(i, x);
                true
            }
        }
    }

    pub fn remove(&mut self, x: &T) -> bool {
        match self.0.binary_search(x) {
            Ok(i) => {
                self.0.remove(i);
                true
            }
            Err(_) => false,
        }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// The contiguous run of elements whose key under `f` equals `key`.
    pub fn run<K: Ord>(&self, key: K, f: impl Fn(&T) -> K) -> &[T] {
        let lo = self.0.partition_point(|x| f(x) < key);
        let hi = lo + self.0[lo..].partition_point(|x| f(x) == key);
        &self.0[lo..hi]
    }
}

/// A sequent in interned form. Labels only ever accumulate along a branch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub(crate) struct Goal {
    pub left: SortedVec<(Lab, F)>,
    pub right: SortedVec<(Lab, F)>,
    pub rels: SortedVec<(Mask, Lab, Lab)>,
    pub labels: SortedVec<Lab>,
    /// Fresh labels created so far on this branch.
    pub fresh: u32,
}

impl Goal {
    fn left_at(&self, s: Lab) -> &[(Lab, F)] {
        self.left.run(s, |x| x.0)
    }

    fn successors(&self, mask: Mask, s: Lab) -> &[(Mask, Lab, Lab)] {
        self.rels.run((mask, s), |x| (x.0, x.1))
    }

    fn with_mask(&self, mask: Mask) -> &[(Mask, Lab, Lab)] {
        self.rels.run(mask, |x| x.0)
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Tables {
    pub lk: SortedVec<(Lab, F, Lab)>,
    pub rk: RkTable<F, Lab>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Inst {
    Prop(RuleId, Lab, F),
    Kil { s: Lab, k: F, t: Lab },
    Knl { s: Lab, k: F },
    Kir { s: Lab, k: F, t: Lab },
    Knr { s: Lab, k: F },
    Oe { mask: Mask, s: Lab, t: Lab },
    Oyr { s: Lab, mask: Mask, e: u32, completion: bool },
    Cr { s: Lab, mask: Mask, e: u32, r: u32 },
    /// `s: f` from `t: f` and `s ~N t`.
    SubP { s: Lab, t: Lab, f: F },
    /// `s: f` from `t: f` and `s ~I t`, `I` the group of `f`.
    SubO { s: Lab, t: Lab, f: F },
    Ref { s: Lab, mask: Mask },
    /// `s ~ t` from `s ~ m` and `m ~ t`.
    Trans { mask: Mask, s: Lab, m: Lab, t: Lab },
    /// `m ~ t` from `s ~ m` and `s ~ t`.
    Eucl { mask: Mask, s: Lab, m: Lab, t: Lab },
    Mon { big: Mask, small: Mask, s: Lab, t: Lab },
}

impl Inst {
    pub fn rule(&self) -> RuleId {
        match *self {
            Inst::Prop(rule, ..) => rule,
            Inst::Kil { .. } => RuleId::KIL,
            Inst::Knl { .. } => RuleId::KNL,
            Inst::Kir { .. } => RuleId::KIR,
            Inst::Knr { .. } => RuleId::KNR,
            Inst::Oe { .. } => RuleId::OE,
            Inst::Oyr { .. } => RuleId::OYR,
            Inst::Cr { .. } => RuleId::CR,
            Inst::SubP { .. } => RuleId::SubP,
            Inst::SubO { .. } => RuleId::SubO,
            Inst::Ref { .. } => RuleId::Ref,
            Inst::Trans { .. } => RuleId::Trans,
            Inst::Eucl { .. } => RuleId::Eucl,
            Inst::Mon { .. } => RuleId::Mon,
        }
    }

    pub fn is_branching(&self) -> bool {
        matches!(
            self.rule(),
            RuleId::OrL | RuleId::AndR | RuleId::ImpL | RuleId::OYR
        )
    }
}

/// Axiom found in a goal: its kind and the principal formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct AxiomHit {
    pub kind: AxiomKind,
    pub label: Lab,
    pub first: F,
    pub second: F,
}

pub(crate) struct Arena {
    nodes: Vec<Node>,
    formulas: Vec<Formula>,
    index: HashMap<Node, F>,
    atoms: Vec<Name>,
    atom_index: HashMap<Name, u32>,
}

impl Arena {
    pub fn node(&self, f: F) -> Node {
        self.nodes[f as usize]
    }

    pub fn formula(&self, f: F) -> &Formula {
        &self.formulas[f as usize]
    }

    fn add(&mut self, node: Node, formula: impl FnOnce() -> Formula) -> F {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as F;
        self.nodes.push(node);
        self.formulas.push(formula());
        self.index.insert(node, id);
        id
    }
}

pub(crate) struct LabelSpace {
    names: Vec<Name>,
    index: HashMap<Name, Lab>,
}

impl LabelSpace {
    fn register(&mut self, name: &Name) -> Lab {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as Lab;
        self.names.push(name.clone());
        self.index.insert(name.clone(), id);
        id
    }

    pub fn registered(&self) -> u32 {
        self.names.len() as u32
    }

    /// Name of a label id. Ids past the registered labels are fresh labels
    /// `w0, w1, ...`, skipping names already registered.
    pub fn name(&self, id: Lab) -> Label {
        if let Some(n) = self.names.get(id as usize) {
            return Label(n.clone());
        }
        let mut k = id - self.registered();
        let mut j = 0u32;
        loop {
            let candidate = format!("w{j}");
            if !self.index.contains_key(candidate.as_str()) {
                if k == 0 {
                    return Label::new(&candidate);
                }
                k -= 1;
            }
            j += 1;
        }
    }
}

/// Caches label names while converting many goals.
pub(crate) struct LabelNames<'k> {
    space: &'k LabelSpace,
    cache: Vec<Option<Label>>,
}

impl<'k> LabelNames<'k> {
    pub fn new(space: &'k LabelSpace) -> Self {
        LabelNames { space, cache: Vec::new() }
    }

    pub fn get(&mut self, id: Lab) -> Label {
        let i = id as usize;
        if i >= self.cache.len() {
            self.cache.resize(i + 1, None);
        }
        self.cache[i].get_or_insert_with(|| self.space.name(id)).clone()
    }
}

pub(crate) struct Kernel<'s> {
    pub structure: &'s ObservationStructure,
    pub arena: Arena,
    pub labels: LabelSpace,
    pub full: Mask,
    pub groups: u32,
    pub results: u32,
    /// First observation slot of each group mask; slot `offset[mask] + e`.
    slot_offset: Vec<u32>,
    slots: u32,
    /// Chain bound per group mask.
    pub max_chain: Vec<usize>,
    pub completion: bool,
}

macro_rules! emit {
    ($sink:expr, $inst:expr) => {
        if $sink($inst).is_break() {
            return ControlFlow::Break(());
        }
    };
}

impl<'s> Kernel<'s> {
    pub fn new(structure: &'s ObservationStructure, completion: bool) -> Self {
        let groups = 1u32 << structure.agents().len();
        let results = structure.results().len() as u32;
        let mut slot_offset = vec![0u32; groups as usize];
        let mut slots = 0;
        for mask in 1..groups {
            slot_offset[mask as usize] = slots;
            slots += structure.joint_count(mask) as u32;
        }
        let mut arena = Arena {
            nodes: Vec::new(),
            formulas: Vec::new(),
            index: HashMap::new(),
            atoms: Vec::new(),
            atom_index: HashMap::new(),
        };
        for mask in 1..groups {
            for e in 0..structure.joint_count(mask) {
                let observation = structure.joint_at(mask, e);
                for r in 0..results {
                    let result = structure.results()[r as usize].clone();
                    let obs = observation.clone();
                    arena.add(Node::Obs { mask, e: e as u32, r }, || {
                        Formula::Obs(crate::syntax::ObsAtom { observation: obs, result })
                    });
                }
            }
        }
        Kernel {
            structure,
            arena,
            labels: LabelSpace { names: Vec::new(), index: HashMap::new() },
            full: structure.full_mask(),
            groups,
            results,
            slot_offset,
            slots,
            max_chain: vec![1; groups as usize],
            completion,
        }
    }

    pub fn set_chain_bounds(&mut self, tables: &LoopTables) -> Result<(), ProveError> {
        for (group, &max) in &tables.rk.max {
            let mask = self.structure.mask_of(group)?;
            self.max_chain[mask as usize] = max;
        }
        Ok(())
    }

    fn slot(&self, mask: Mask, e: u32) -> u32 {
        self.slot_offset[mask as usize] + e
    }

    pub fn obs_id(&self, mask: Mask, e: u32, r: u32) -> F {
        self.slot(mask, e) * self.results + r
    }

    pub fn intern(&mut self, f: &Formula) -> Result<F, ProveError> {
        let node = match f {
            Formula::Atom(p) => {
                let idx = match self.arena.atom_index.get(p) {
                    Some(&i) => i,
                    None => {
                        let i = self.arena.atoms.len() as u32;
                        self.arena.atoms.push(p.clone());
                        self.arena.atom_index.insert(p.clone(), i);
                        i
                    }
                };
                Node::Atom(idx)
            }
            Formula::Obs(atom) => {
                if atom.observation.group.is_empty() {
                    return Err(StructureError::EmptyObservationGroup.into());
                }
                let (mask, e) = self.structure.joint_index(&atom.observation)?;
                let r = self
                    .structure
                    .result_index(&atom.result)
                    .ok_or_else(|| StructureError::UnknownResult(atom.result.to_string()))?;
                return Ok(self.obs_id(mask, e as u32, r as u32));
            }
            Formula::Not(a) => Node::Not(self.intern(a)?),
            Formula::And(a, b) => Node::And(self.intern(a)?, self.intern(b)?),
            Formula::Or(a, b) => Node::Or(self.intern(a)?, self.intern(b)?),
            Formula::Implies(a, b) => Node::Imp(self.intern(a)?, self.intern(b)?),
            Formula::Know(g, a) => {
                let mask = self.structure.mask_of(g)?;
                Node::Know(mask, self.intern(a)?)
            }
            Formula::Top | Formula::Bottom => {
                return Err(ProveError::Malformed("⊤ and ⊥ cannot occur in sequents".into()))
            }
        };
        Ok(self.arena.add(node, || f.clone()))
    }

    fn register(&mut self, label: &Label) -> Lab {
        self.labels.register(&label.0)
    }

    /// Registers every label and interns every formula of the sequent.
    pub fn compile(&mut self, seq: &Sequent) -> Result<Goal, ProveError> {
        let mut goal = Goal::default();
        for l in seq.labels() {
            let id = self.register(&l);
            goal.labels.insert(id);
        }
        for lf in &seq.antecedent {
            let f = self.intern(&lf.formula)?;
            let s = self.register(&lf.label);
            goal.left.insert((s, f));
        }
        for lf in &seq.succedent {
            let f = self.intern(&lf.formula)?;
            let s = self.register(&lf.label);
            goal.right.insert((s, f));
        }
        for r in &seq.relations {
            let mask = self.structure.mask_of(&r.group)?;
            let (s, t) = (self.register(&r.left), self.register(&r.right));
            goal.rels.insert((mask, s, t));
        }
        Ok(goal)
    }

    pub fn compile_tables(&mut self, tables: &LoopTables) -> Result<Tables, ProveError> {
        self.set_chain_bounds(tables)?;
        let mut out = Tables::default();
        for (lf, rel) in &tables.lk.entries {
            let k = self.intern(&lf.formula)?;
            let s = self.register(&lf.label);
            let t = self.register(&rel.right);
            out.lk.insert((s, k, t));
        }
        for ((group, body), row) in tables.rk.table.rows() {
            let k = self.intern(&Formula::know(group.clone(), body.clone()))?;
            for l in &row.expanded {
                let id = self.register(l);
                out.rk.mark_expanded(k, row.max, id);
            }
            for (child, parent) in &row.parent {
                let (c, p) = (self.register(child), self.register(parent));
                out.rk.link(k, row.max, p, c);
            }
        }
        Ok(out)
    }

    fn group(&self, mask: Mask) -> crate::structure::Group {
        self.structure.group_of(mask)
    }

    pub fn sequent(&self, goal: &Goal, names: &mut LabelNames<'_>) -> Sequent {
        let mut seq = Sequent::new();
        for &(s, f) in goal.left.iter() {
            seq.antecedent.insert(LabelledFormula::new(names.get(s), self.arena.formula(f).clone()));
        }
        for &(s, f) in goal.right.iter() {
            seq.succedent.insert(LabelledFormula::new(names.get(s), self.arena.formula(f).clone()));
        }
        for &(m, s, t) in goal.rels.iter() {
            seq.relations.insert(RelAtom::new(names.get(s), self.group(m), names.get(t)));
        }
        seq
    }

    fn lf(&self, names: &mut LabelNames<'_>, s: Lab, f: F) -> LabelledFormula {
        LabelledFormula::new(names.get(s), self.arena.formula(f).clone())
    }

    fn rel(&self, names: &mut LabelNames<'_>, mask: Mask, s: Lab, t: Lab) -> RelAtom {
        RelAtom::new(names.get(s), self.group(mask), names.get(t))
    }

    pub fn public_instance(&self, inst: &Inst, names: &mut LabelNames<'_>) -> RuleInstance {
        match *inst {
            Inst::Prop(rule, s, f) => RuleInstance::Prop { rule, principal: self.lf(names, s, f) },
            Inst::Kil { s, k, t } => {
                let Node::Know(mask, _) = self.arena.node(k) else { unreachable!() };
                RuleInstance::KIL { principal: self.lf(names, s, k), relation: self.rel(names, mask, s, t) }
            }
            Inst::Knl { s, k } => {
                RuleInstance::KNL { principal: self.lf(names, s, k), relation: self.rel(names, self.full, s, s) }
            }
            Inst::Kir { s, k, t } => RuleInstance::KIR { principal: self.lf(names, s, k), fresh: names.get(t) },
            Inst::Knr { s, k } => {
                RuleInstance::KNR { principal: self.lf(names, s, k), relation: self.rel(names, self.full, s, s) }
            }
            Inst::Oe { mask, s, t } => RuleInstance::OE { relation: self.rel(names, mask, s, t) },
            Inst::Oyr { s, mask, e, completion } => RuleInstance::OYR {
                label: names.get(s),
                observation: self.structure.joint_at(mask, e as usize),
                completion,
            },
            Inst::Cr { s, mask, e, r } => RuleInstance::CR { conclusion: self.lf(names, s, self.obs_id(mask, e, r)) },
            Inst::SubP { s, t, f } => RuleInstance::SubP {
                source: self.lf(names, t, f),
                relation: self.rel(names, self.full, s, t),
            },
            Inst::SubO { s, t, f } => {
                let Node::Obs { mask, .. } = self.arena.node(f) else { unreachable!() };
                RuleInstance::SubO { source: self.lf(names, t, f), relation: self.rel(names, mask, s, t) }
            }
            Inst::Ref { s, mask } => RuleInstance::Ref { relation: self.rel(names, mask, s, s) },
            Inst::Trans { mask, s, m, t } => RuleInstance::Trans {
                first: self.rel(names, mask, s, m),
                second: self.rel(names, mask, m, t),
            },
            Inst::Eucl { mask, s, m, t } => RuleInstance::Eucl {
                first: self.rel(names, mask, s, m),
                second: self.rel(names, mask, s, t),
            },
            Inst::Mon { big, small, s, t } => RuleInstance::Mon {
                relation: self.rel(names, big, s, t),
                group: self.group(small),
            },
        }
    }

    fn labelled_ids(&mut self, lf: &LabelledFormula) -> Result<(Lab, F), ProveError> {
        let f = self.intern(&lf.formula)?;
        Ok((self.register(&lf.label), f))
    }

    fn rel_ids(&mut self, r: &RelAtom) -> Result<(Mask, Lab, Lab), ProveError> {
        let mask = self.structure.mask_of(&r.group)?;
        Ok((mask, self.register(&r.left), self.register(&r.right)))
    }

    /// Interns a public instance. Shape errors (a principal of the wrong
    /// form) are reported as `NotApplicable`.
    pub fn internal_instance(&mut self, inst: &RuleInstance) -> Result<Inst, ProveError> {
        let bad = || ProveError::NotApplicable(inst.to_string());
        Ok(match inst {
            RuleInstance::Prop { rule, principal } => {
                let (s, f) = self.labelled_ids(principal)?;
                Inst::Prop(*rule, s, f)
            }
            RuleInstance::KIL { principal, relation } => {
                let (s, k) = self.labelled_ids(principal)?;
                let (_, s2, t) = self.rel_ids(relation)?;
                if s2 != s {
                    return Err(bad());
                }
                Inst::Kil { s, k, t }
            }
            RuleInstance::KNL { principal, .. } => {
                let (s, k) = self.labelled_ids(principal)?;
                Inst::Knl { s, k }
            }
            RuleInstance::KIR { principal, fresh } => {
                let (s, k) = self.labelled_ids(principal)?;
                Inst::Kir { s, k, t: self.register(fresh) }
            }
            RuleInstance::KNR { principal, .. } => {
                let (s, k) = self.labelled_ids(principal)?;
                Inst::Knr { s, k }
            }
            RuleInstance::OE { relation } => {
                let (mask, s, t) = self.rel_ids(relation)?;
                Inst::Oe { mask, s, t }
            }
            RuleInstance::OYR { label, observation, completion } => {
                let (mask, e) = self.structure.joint_index(observation)?;
                Inst::Oyr { s: self.register(label), mask, e: e as u32, completion: *completion }
            }
            RuleInstance::CR { conclusion } => {
                let (s, f) = self.labelled_ids(conclusion)?;
                let Node::Obs { mask, e, r } = self.arena.node(f) else { return Err(bad()) };
                Inst::Cr { s, mask, e, r }
            }
            RuleInstance::SubP { source, relation } => {
                let (t, f) = self.labelled_ids(source)?;
                let (_, s, t2) = self.rel_ids(relation)?;
                if t2 != t {
                    return Err(bad());
                }
                Inst::SubP { s, t, f }
            }
            RuleInstance::SubO { source, relation } => {
                let (t, f) = self.labelled_ids(source)?;
                let (_, s, t2) = self.rel_ids(relation)?;
                if t2 != t {
                    return Err(bad());
                }
                Inst::SubO { s, t, f }
            }
            RuleInstance::Ref { relation } => {
                let (mask, s, t) = self.rel_ids(relation)?;
                if s != t {
                    return Err(bad());
                }
                Inst::Ref { s, mask }
            }
            RuleInstance::Trans { first, second } => {
                let (m1, s, m) = self.rel_ids(first)?;
                let (m2, m_, t) = self.rel_ids(second)?;
                if m1 != m2 || m != m_ {
                    return Err(bad());
                }
                Inst::Trans { mask: m1, s, m, t }
            }
            RuleInstance::Eucl { first, second } => {
                let (m1, s, m) = self.rel_ids(first)?;
                let (m2, s_, t) = self.rel_ids(second)?;
                if m1 != m2 || s != s_ {
                    return Err(bad());
                }
                Inst::Eucl { mask: m1, s, m, t }
            }
            RuleInstance::Mon { relation, group } => {
                let (big, s, t) = self.rel_ids(relation)?;
                let small = self.structure.mask_of(group)?;
                Inst::Mon { big, small, s, t }
            }
        })
    }

    pub fn axiom(&self, goal: &Goal) -> Option<AxiomHit> {
        let mut prev: Option<(Lab, F, u32)> = None;
        for &(s, f) in goal.left.iter() {
            match self.arena.node(f) {
                Node::Atom(_) => {
                    if goal.right.contains(&(s, f)) {
                        return Some(AxiomHit { kind: AxiomKind::Atom, label: s, first: f, second: f });
                    }
                }
                Node::Obs { .. } => {
                    if goal.right.contains(&(s, f)) {
                        return Some(AxiomHit { kind: AxiomKind::Observation, label: s, first: f, second: f });
                    }
                    // Atoms of one observation sit next to each other.
                    let slot = f / self.results;
                    if let Some((ps, pf, pslot)) = prev {
                        if ps == s && pslot == slot {
                            return Some(AxiomHit { kind: AxiomKind::Conflict, label: s, first: pf, second: f });
                        }
                    }
                    prev = Some((s, f, slot));
                }
                _ => {}
            }
        }
        None
    }

    /// Full-observation and group results known at each label, indexed
    /// `[label * slots + slot]`.
    fn known_results(&self, goal: &Goal) -> Vec<u32> {
        let width = self.slots as usize;
        let labels = goal.labels.iter().last().map_or(0, |&l| l as usize + 1);
        let mut table = vec![UNKNOWN; labels * width];
        for &(s, f) in goal.left.iter() {
            if let Node::Obs { r, .. } = self.arena.node(f) {
                table[s as usize * width + (f / self.results) as usize] = r;
            }
        }
        table
    }

    fn fresh_label(&self, goal: &Goal) -> Lab {
        self.labels.registered() + goal.fresh
    }

    /// Calls `sink` with every applicable instance in search priority order
    /// until it breaks. With `tables` absent the loop-check gates are skipped.
    pub fn instances(
        &self,
        goal: &Goal,
        tables: Option<&Tables>,
        sink: &mut dyn FnMut(Inst) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let arena = &self.arena;

        // Non-branching propositional rules.
        for rule in [RuleId::NegL, RuleId::NegR, RuleId::OrR, RuleId::AndL, RuleId::ImpR] {
            let side = if matches!(rule, RuleId::NegL | RuleId::AndL) { &goal.left } else { &goal.right };
            for &(s, f) in side.iter() {
                let hit = matches!(
                    (rule, arena.node(f)),
                    (RuleId::NegL | RuleId::NegR, Node::Not(_))
                        | (RuleId::OrR, Node::Or(..))
                        | (RuleId::AndL, Node::And(..))
                        | (RuleId::ImpR, Node::Imp(..))
                );
                if hit {
                    emit!(sink, Inst::Prop(rule, s, f));
                }
            }
        }

        // Branching propositional rules.
        for rule in [RuleId::OrL, RuleId::AndR, RuleId::ImpL] {
            let side = if rule == RuleId::AndR { &goal.right } else { &goal.left };
            for &(s, f) in side.iter() {
                let hit = matches!(
                    (rule, arena.node(f)),
                    (RuleId::OrL, Node::Or(..)) | (RuleId::AndR, Node::And(..)) | (RuleId::ImpL, Node::Imp(..))
                );
                if hit {
                    emit!(sink, Inst::Prop(rule, s, f));
                }
            }
        }

        // Left knowledge rules, gated by TableLK.
        for &(s, k) in goal.left.iter() {
            if let Node::Know(mask, a) = arena.node(k) {
                if mask == self.full {
                    continue;
                }
                for &(_, _, t) in goal.successors(mask, s) {
                    if goal.left.contains(&(t, a)) || tables.is_some_and(|tb| tb.lk.contains(&(s, k, t))) {
                        continue;
                    }
                    emit!(sink, Inst::Kil { s, k, t });
                }
            }
        }
        for &(s, k) in goal.left.iter() {
            if let Node::Know(mask, a) = arena.node(k) {
                if mask != self.full
                    || !goal.rels.contains(&(mask, s, s))
                    || goal.left.contains(&(s, a))
                    || tables.is_some_and(|tb| tb.lk.contains(&(s, k, s)))
                {
                    continue;
                }
                emit!(sink, Inst::Knl { s, k });
            }
        }

        // Right knowledge rule, gated by TableRK.
        let fresh = self.fresh_label(goal);
        for &(s, k) in goal.right.iter() {
            if let Node::Know(mask, _) = arena.node(k) {
                if mask == self.full {
                    continue;
                }
                if let Some(tb) = tables {
                    if !tb.rk.may_expand(&k, &s, self.max_chain[mask as usize]) {
                        continue;
                    }
                }
                emit!(sink, Inst::Kir { s, k, t: fresh });
            }
        }

        // Observations yield results, for atoms already in the succedent.
        for &(s, f) in goal.right.iter() {
            if let Node::Obs { mask, e, .. } = arena.node(f) {
                if !self.has_result(goal, s, mask, e) {
                    emit!(sink, Inst::Oyr { s, mask, e, completion: false });
                }
            }
        }

        // Right K_N.
        for &(s, k) in goal.right.iter() {
            if let Node::Know(mask, a) = arena.node(k) {
                if mask == self.full && goal.rels.contains(&(mask, s, s)) && !goal.right.contains(&(s, a)) {
                    emit!(sink, Inst::Knr { s, k });
                }
            }
        }

        let known = self.known_results(goal);
        let width = self.slots as usize;
        let results_at = |s: Lab, mask: Mask| {
            let lo = s as usize * width + self.slot_offset[mask as usize] as usize;
            &known[lo..lo + self.structure.joint_count(mask)]
        };

        // Observational equivalence.
        for mask in 1..self.groups {
            for &s in goal.labels.iter() {
                let rs = results_at(s, mask);
                if rs.contains(&UNKNOWN) {
                    continue;
                }
                for &t in goal.labels.iter().filter(|&&t| t > s) {
                    if results_at(t, mask) == rs && !goal.rels.contains(&(mask, s, t)) {
                        emit!(sink, Inst::Oe { mask, s, t });
                    }
                }
            }
        }

        // Result composition.
        let full_results = |s: Lab| results_at(s, self.full);
        for &s in goal.labels.iter() {
            let fr = full_results(s);
            for mask in 1..self.groups {
                if mask == self.full {
                    continue;
                }
                for e in 0..self.structure.joint_count(mask) {
                    let ext = self.structure.extension_indices(mask, e);
                    if ext.iter().any(|&o| fr[o as usize] == UNKNOWN) {
                        continue;
                    }
                    let r = self
                        .structure
                        .compose_indices(ext.iter().map(|&o| fr[o as usize] as usize))
                        .expect("composition is total on loaded structures") as u32;
                    if !goal.left.contains(&(s, self.obs_id(mask, e as u32, r))) {
                        emit!(sink, Inst::Cr { s, mask, e: e as u32, r });
                    }
                }
            }
        }

        // Substitution of atoms along ~N.
        for &(_, s, t) in goal.with_mask(self.full) {
            if s == t {
                continue;
            }
            for &(_, f) in goal.left_at(t) {
                if matches!(arena.node(f), Node::Atom(_)) && !goal.left.contains(&(s, f)) {
                    emit!(sink, Inst::SubP { s, t, f });
                }
            }
        }

        // Substitution of observation atoms along ~I.
        for &(mask, s, t) in goal.rels.iter() {
            if mask == 0 || s == t {
                continue;
            }
            for &(_, f) in goal.left_at(t) {
                if let Node::Obs { mask: m, .. } = arena.node(f) {
                    if m == mask && !goal.left.contains(&(s, f)) {
                        emit!(sink, Inst::SubO { s, t, f });
                    }
                }
            }
        }

        for &s in goal.labels.iter() {
            for mask in 0..self.groups {
                if !goal.rels.contains(&(mask, s, s)) {
                    emit!(sink, Inst::Ref { s, mask });
                }
            }
        }

        for &(mask, s, m) in goal.rels.iter() {
            for &(_, _, t) in goal.successors(mask, m) {
                if !goal.rels.contains(&(mask, s, t)) {
                    emit!(sink, Inst::Trans { mask, s, m, t });
                }
            }
        }

        for &(mask, s, m) in goal.rels.iter() {
            for &(_, _, t) in goal.successors(mask, s) {
                if !goal.rels.contains(&(mask, m, t)) {
                    emit!(sink, Inst::Eucl { mask, s, m, t });
                }
            }
        }

        for &(big, s, t) in goal.rels.iter() {
            for small in 0..big {
                if small & !big == 0 && !goal.rels.contains(&(small, s, t)) {
                    emit!(sink, Inst::Mon { big, small, s, t });
                }
            }
        }

        // Completion: split on the result of a full observation nobody has
        // decided yet.
        if self.completion {
            for &s in goal.labels.iter() {
                let fr = full_results(s);
                for (e, &r) in fr.iter().enumerate() {
                    if r == UNKNOWN {
                        emit!(sink, Inst::Oyr { s, mask: self.full, e: e as u32, completion: true });
                    }
                }
            }
        }
        ControlFlow::Continue(())
    }

    fn has_result(&self, goal: &Goal, s: Lab, mask: Mask, e: u32) -> bool {
        (0..self.results).any(|r| goal.left.contains(&(s, self.obs_id(mask, e, r))))
    }

    pub fn first_instance(&self, goal: &Goal, tables: &Tables) -> Option<Inst> {
        let mut found = None;
        let _ = self.instances(goal, Some(tables), &mut |inst| {
            found = Some(inst);
            ControlFlow::Break(())
        });
        found
    }

    pub fn all_instances(&self, goal: &Goal, tables: Option<&Tables>) -> Vec<Inst> {
        let mut out = Vec::new();
        let _ = self.instances(goal, tables, &mut |inst| {
            out.push(inst);
            ControlFlow::Continue(())
        });
        out
    }

    /// Applies a single-premise instance in place.
    pub fn apply_in_place(&self, goal: &mut Goal, tables: &mut Tables, inst: Inst) {
        let arena = &self.arena;
        match inst {
            Inst::Prop(rule, s, f) => match (rule, arena.node(f)) {
                (RuleId::NegL, Node::Not(a)) => {
                    goal.left.remove(&(s, f));
                    goal.right.insert((s, a));
                }
                (RuleId::NegR, Node::Not(a)) => {
                    goal.right.remove(&(s, f));
                    goal.left.insert((s, a));
                }
                (RuleId::OrR, Node::Or(a, b)) => {
                    goal.right.remove(&(s, f));
                    goal.right.insert((s, a));
                    goal.right.insert((s, b));
                }
                (RuleId::AndL, Node::And(a, b)) => {
                    goal.left.remove(&(s, f));
                    goal.left.insert((s, a));
                    goal.left.insert((s, b));
                }
                (RuleId::ImpR, Node::Imp(a, b)) => {
                    goal.right.remove(&(s, f));
                    goal.left.insert((s, a));
                    goal.right.insert((s, b));
                }
                _ => unreachable!("branching or mismatched propositional instance"),
            },
            Inst::Kil { s, k, t } => {
                let Node::Know(_, a) = arena.node(k) else { unreachable!() };
                goal.left.insert((t, a));
                tables.lk.insert((s, k, t));
            }
            Inst::Knl { s, k } => {
                let Node::Know(_, a) = arena.node(k) else { unreachable!() };
                goal.left.insert((s, a));
                tables.lk.insert((s, k, s));
            }
            Inst::Kir { s, k, t } => {
                let Node::Know(mask, a) = arena.node(k) else { unreachable!() };
                goal.right.remove(&(s, k));
                goal.rels.insert((mask, s, t));
                goal.right.insert((t, a));
                if goal.labels.insert(t) && t >= self.labels.registered() {
                    goal.fresh = goal.fresh.max(t - self.labels.registered() + 1);
                }
                tables.rk.record(k, self.max_chain[mask as usize], s, t);
            }
            Inst::Knr { s, k } => {
                let Node::Know(_, a) = arena.node(k) else { unreachable!() };
                goal.right.remove(&(s, k));
                goal.right.insert((s, a));
            }
            Inst::Oe { mask, s, t } => {
                goal.rels.insert((mask, s, t));
            }
            Inst::Cr { s, mask, e, r } => {
                goal.left.insert((s, self.obs_id(mask, e, r)));
            }
            Inst::SubP { s, f, .. } | Inst::SubO { s, f, .. } => {
                goal.left.insert((s, f));
            }
            Inst::Ref { s, mask } => {
                goal.rels.insert((mask, s, s));
            }
            Inst::Trans { mask, s, t, .. } => {
                goal.rels.insert((mask, s, t));
            }
            Inst::Eucl { mask, m, t, .. } => {
                goal.rels.insert((mask, m, t));
            }
            Inst::Mon { small, s, t, .. } => {
                goal.rels.insert((small, s, t));
            }
            Inst::Oyr { .. } => unreachable!("branching instance"),
        }
    }

    /// Premises of a branching instance.
    pub fn branch(&self, goal: &Goal, inst: Inst) -> Vec<Goal> {
        let arena = &self.arena;
        let with = |edit: &dyn Fn(&mut Goal)| {
            let mut g = goal.clone();
            edit(&mut g);
            g
        };
        match inst {
            Inst::Prop(RuleId::OrL, s, f) => {
                let Node::Or(a, b) = arena.node(f) else { unreachable!() };
                vec![
                    with(&|g| {
                        g.left.remove(&(s, f));
                        g.left.insert((s, a));
                    }),
                    with(&|g| {
                        g.left.remove(&(s, f));
                        g.left.insert((s, b));
                    }),
                ]
            }
            Inst::Prop(RuleId::AndR, s, f) => {
                let Node::And(a, b) = arena.node(f) else { unreachable!() };
                vec![
                    with(&|g| {
                        g.right.remove(&(s, f));
                        g.right.insert((s, a));
                    }),
                    with(&|g| {
                        g.right.remove(&(s, f));
                        g.right.insert((s, b));
                    }),
                ]
            }
            Inst::Prop(RuleId::ImpL, s, f) => {
                let Node::Imp(a, b) = arena.node(f) else { unreachable!() };
                vec![
                    with(&|g| {
                        g.left.remove(&(s, f));
                        g.right.insert((s, a));
                    }),
                    with(&|g| {
                        g.left.remove(&(s, f));
                        g.left.insert((s, b));
                    }),
                ]
            }
            Inst::Oyr { s, mask, e, .. } => (0..self.results)
                .map(|r| with(&|g| {
                    g.left.insert((s, self.obs_id(mask, e, r)));
                }))
                .collect(),
            _ => unreachable!("single-premise instance"),
        }
    }

    /// Checks the side conditions of `inst` on `goal`, ignoring loop tables.
    /// For `=>K_I` any label not occurring in the goal is accepted.
    pub fn is_applicable(&self, goal: &Goal, inst: &Inst) -> bool {
        if let Inst::Kir { s, k, t } = *inst {
            let fresh_ok = !goal.labels.contains(&t);
            return fresh_ok
                && self
                    .all_instances(goal, None)
                    .iter()
                    .any(|i| matches!(*i, Inst::Kir { s: s2, k: k2, .. } if s2 == s && k2 == k));
        }
        self.all_instances(goal, None).contains(inst)
    }

    /// Premises of any instance, without touching loop tables.
    pub fn premises(&self, goal: &Goal, inst: Inst) -> Vec<Goal> {
        if inst.is_branching() {
            return self.branch(goal, inst);
        }
        let mut g = goal.clone();
        let mut scratch = Tables::default();
        self.apply_in_place(&mut g, &mut scratch, inst);
        vec![g]
    }
}

