//! The rules of the labelled calculus: axiom recognition, applicable rule
//! instances with their side conditions, and premise construction.
//!
//! These functions work on public [`Sequent`] values and are meant for
//! inspection and testing. The prover runs the same rules on interned goals.

use std::fmt;
use std::ops::ControlFlow;

use serde::{Serialize, Serializer};

use crate::error::ProveError;
use crate::kernel::{Kernel, LabelNames};
use crate::structure::{Group, JointObservation, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, RelAtom, Sequent};
use crate::tables::LoopTables;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    NegL,
    NegR,
    OrL,
    OrR,
    AndL,
    AndR,
    ImpL,
    ImpR,
    KIL,
    KIR,
    KNL,
    KNR,
    OE,
    OYR,
    CR,
    SubP,
    SubO,
    Ref,
    Trans,
    Eucl,
    Mon,
}

impl RuleId {
    pub const ALL: [RuleId; 21] = [
        RuleId::NegL,
        RuleId::NegR,
        RuleId::OrL,
        RuleId::OrR,
        RuleId::AndL,
        RuleId::AndR,
        RuleId::ImpL,
        RuleId::ImpR,
        RuleId::KIL,
        RuleId::KIR,
        RuleId::KNL,
        RuleId::KNR,
        RuleId::OE,
        RuleId::OYR,
        RuleId::CR,
        RuleId::SubP,
        RuleId::SubO,
        RuleId::Ref,
        RuleId::Trans,
        RuleId::Eucl,
        RuleId::Mon,
    ];

    pub fn notation(self) -> &'static str {
        match self {
            RuleId::NegL => "~=>",
            RuleId::NegR => "=>~",
            RuleId::OrL => "v=>",
            RuleId::OrR => "=>v",
            RuleId::AndL => "&=>",
            RuleId::AndR => "=>&",
            RuleId::ImpL => "->=>",
            RuleId::ImpR => "=>->",
            RuleId::KIL => "K_I=>",
            RuleId::KIR => "=>K_I",
            RuleId::KNL => "K_N=>",
            RuleId::KNR => "=>K_N",
            RuleId::OE => "OE",
            RuleId::OYR => "OYR",
            RuleId::CR => "CR",
            RuleId::SubP => "Sub(p)=>",
            RuleId::SubO => "Sub(o^r)=>",
            RuleId::Ref => "Ref",
            RuleId::Trans => "Trans",
            RuleId::Eucl => "Eucl",
            RuleId::Mon => "Mon",
        }
    }

    pub fn from_notation(text: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.notation() == text)
    }

    /// Rules with more than one premise.
    pub fn is_branching(self) -> bool {
        matches!(self, RuleId::OrL | RuleId::AndR | RuleId::ImpL | RuleId::OYR)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.notation())
    }
}

impl Serialize for RuleId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.notation())
    }
}

/// The three axiom shapes: a propositional atom on both sides, an
/// observation atom on both sides, or two results of one observation on the
/// left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomKind {
    Atom,
    Observation,
    Conflict,
}

impl AxiomKind {
    pub fn number(self) -> u8 {
        match self {
            AxiomKind::Atom => 1,
            AxiomKind::Observation => 2,
            AxiomKind::Conflict => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    /// One formula for kinds 1 and 2 (it occurs on both sides), two for kind 3.
    pub principal: Vec<LabelledFormula>,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Axiom({})", self.kind.number())
    }
}

/// A rule together with its principal formulas and parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleInstance {
    /// Any propositional rule.
    Prop { rule: RuleId, principal: LabelledFormula },
    KIL { principal: LabelledFormula, relation: RelAtom },
    KIR { principal: LabelledFormula, fresh: Label },
    KNL { principal: LabelledFormula, relation: RelAtom },
    KNR { principal: LabelledFormula, relation: RelAtom },
    /// Adds `relation` from matching results at both ends.
    OE { relation: RelAtom },
    /// Splits on the result of `observation` at `label`. `completion` marks
    /// the split taken for a full observation with no result in sight.
    OYR { label: Label, observation: JointObservation, completion: bool },
    /// Adds the composed group result `conclusion`.
    CR { conclusion: LabelledFormula },
    SubP { source: LabelledFormula, relation: RelAtom },
    SubO { source: LabelledFormula, relation: RelAtom },
    Ref { relation: RelAtom },
    Trans { first: RelAtom, second: RelAtom },
    Eucl { first: RelAtom, second: RelAtom },
    /// Adds `relation` restricted to the subgroup `group`.
    Mon { relation: RelAtom, group: Group },
}

impl RuleInstance {
    pub fn rule(&self) -> RuleId {
        match self {
            RuleInstance::Prop { rule, .. } => *rule,
            RuleInstance::KIL { .. } => RuleId::KIL,
            RuleInstance::KIR { .. } => RuleId::KIR,
            RuleInstance::KNL { .. } => RuleId::KNL,
            RuleInstance::KNR { .. } => RuleId::KNR,
            RuleInstance::OE { .. } => RuleId::OE,
            RuleInstance::OYR { .. } => RuleId::OYR,
            RuleInstance::CR { .. } => RuleId::CR,
            RuleInstance::SubP { .. } => RuleId::SubP,
            RuleInstance::SubO { .. } => RuleId::SubO,
            RuleInstance::Ref { .. } => RuleId::Ref,
            RuleInstance::Trans { .. } => RuleId::Trans,
            RuleInstance::Eucl { .. } => RuleId::Eucl,
            RuleInstance::Mon { .. } => RuleId::Mon,
        }
    }

    /// The principal formulas and parameters, as printed in proof trees.
    pub fn principal(&self) -> String {
        match self {
            RuleInstance::Prop { principal, .. } => principal.to_string(),
            RuleInstance::KIL { principal, relation }
            | RuleInstance::KNL { principal, relation }
            | RuleInstance::KNR { principal, relation } => format!("{principal}, {relation}"),
            RuleInstance::KIR { principal, fresh } => format!("{principal}; fresh {fresh}"),
            RuleInstance::OE { relation } | RuleInstance::Ref { relation } => relation.to_string(),
            RuleInstance::OYR { label, observation, completion } => {
                let group = &observation.group;
                let tag = if *completion { "; completion" } else { "" };
                format!("{label}: obs{group}{observation}{tag}")
            }
            RuleInstance::CR { conclusion } => conclusion.to_string(),
            RuleInstance::SubP { source, relation } | RuleInstance::SubO { source, relation } => {
                format!("{source}, {relation}")
            }
            RuleInstance::Trans { first, second } | RuleInstance::Eucl { first, second } => {
                format!("{first}, {second}")
            }
            RuleInstance::Mon { relation, group } => format!("{relation}; {group}"),
        }
    }
}

impl fmt::Display for RuleInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.rule(), self.principal())
    }
}

/// Recognizes an axiom. Only atomic formulas count.
pub fn is_axiom(seq: &Sequent) -> Option<Axiom> {
    for lf in &seq.antecedent {
        let kind = match &lf.formula {
            Formula::Atom(_) => AxiomKind::Atom,
            Formula::Obs(_) => AxiomKind::Observation,
            _ => continue,
        };
        if seq.succedent.contains(lf) {
            return Some(Axiom { kind, principal: vec![lf.clone()] });
        }
    }
    let obs: Vec<_> = seq
        .antecedent
        .iter()
        .filter_map(|lf| match &lf.formula {
            Formula::Obs(atom) => Some((lf, atom)),
            _ => None,
        })
        .collect();
    for (i, (l1, a1)) in obs.iter().enumerate() {
        for (l2, a2) in &obs[i + 1..] {
            if l1.label == l2.label && a1.observation == a2.observation && a1.result != a2.result {
                return Some(Axiom { kind: AxiomKind::Conflict, principal: vec![(*l1).clone(), (*l2).clone()] });
            }
        }
    }
    None
}

/// First label `w0, w1, ...` not occurring in the sequent.
pub fn fresh_label(seq: &Sequent) -> Label {
    let used = seq.labels();
    (0..)
        .map(|k| Label::new(&format!("w{k}")))
        .find(|l| !used.contains(l))
        .expect("unbounded label supply")
}

/// Every instance whose side conditions and loop-check gates hold, in search
/// priority order. Includes the completion split.
pub fn applicable_instances(
    seq: &Sequent,
    tables: &LoopTables,
    structure: &ObservationStructure,
) -> Result<Vec<RuleInstance>, ProveError> {
    applicable_instances_with(seq, tables, structure, true)
}

pub fn applicable_instances_with(
    seq: &Sequent,
    tables: &LoopTables,
    structure: &ObservationStructure,
    completion: bool,
) -> Result<Vec<RuleInstance>, ProveError> {
    seq.validate(structure)?;
    let mut kernel = Kernel::new(structure, completion);
    let goal = kernel.compile(seq)?;
    let tb = kernel.compile_tables(tables)?;
    let mut names = LabelNames::new(&kernel.labels);
    let mut out = Vec::new();
    let _ = kernel.instances(&goal, Some(&tb), &mut |inst| {
        out.push(kernel.public_instance(&inst, &mut names));
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Premises of `inst` applied to `seq`. Side conditions are checked, loop
/// tables are not. For `=>K_I` any label absent from `seq` may serve as the
/// fresh label.
pub fn apply_rule(
    inst: &RuleInstance,
    seq: &Sequent,
    structure: &ObservationStructure,
) -> Result<Vec<Sequent>, ProveError> {
    seq.validate(structure)?;
    let mut kernel = Kernel::new(structure, true);
    let goal = kernel.compile(seq)?;
    let internal = kernel.internal_instance(inst)?;
    if !kernel.is_applicable(&goal, &internal) {
        return Err(ProveError::NotApplicable(inst.to_string()));
    }
    let mut names = LabelNames::new(&kernel.labels);
    Ok(kernel
        .premises(&goal, internal)
        .iter()
        .map(|g| kernel.sequent(g, &mut names))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_sequent;
    use crate::structure::tests::{c1, c2};

    fn seq(text: &str, st: &ObservationStructure) -> Sequent {
        parse_sequent(text, st).unwrap()
    }

    #[test]
    fn notation_round_trip() {
        for r in RuleId::ALL {
            assert_eq!(RuleId::from_notation(r.notation()), Some(r));
        }
        assert_eq!(RuleId::from_notation("cut"), None);
    }

    #[test]
    fn axioms() {
        let st = c2();
        assert_eq!(is_axiom(&seq("s: p |- s: p", &st)).unwrap().kind, AxiomKind::Atom);
        let conflict = seq("s: obs{a}(oa)^0, s: obs{a}(oa)^1 |- s: q", &st);
        assert_eq!(is_axiom(&conflict).unwrap().kind, AxiomKind::Conflict);
        assert!(is_axiom(&seq("s: p |- t: p", &st)).is_none());
        assert!(is_axiom(&seq("s: p & q |- s: p & q", &st)).is_none());
    }

    #[test]
    fn fresh_labels() {
        let st = c2();
        assert_eq!(fresh_label(&Sequent::new()), Label::new("w0"));
        assert_eq!(fresh_label(&seq("|- s: p", &st)), Label::new("w0"));
        assert_eq!(fresh_label(&seq("|- s: p, w0: q", &st)), Label::new("w1"));
    }

    #[test]
    fn kil_instance_listed() {
        let st = c2();
        let s = seq("s: K{a} p, s ~{a} t |-", &st);
        let insts = applicable_instances(&s, &LoopTables::default(), &st).unwrap();
        assert!(insts.iter().any(|i| matches!(i, RuleInstance::KIL { relation, .. }
            if relation.right == Label::new("t"))));
        assert_eq!(insts[0].rule(), RuleId::KIL);
    }

    #[test]
    fn mon_instances_cover_subgroups() {
        let st = c2();
        let s = seq("s ~{a,b} t |-", &st);
        let insts = applicable_instances_with(&s, &LoopTables::default(), &st, false).unwrap();
        let mut groups: Vec<Group> = insts
            .iter()
            .filter_map(|i| match i {
                RuleInstance::Mon { group, .. } => Some(group.clone()),
                _ => None,
            })
            .collect();
        groups.sort();
        let mut expected = vec![Group::empty(), Group::new(["a"]), Group::new(["b"])];
        expected.sort();
        assert_eq!(groups, expected);
        assert!(insts.iter().any(|i| i.rule() == RuleId::Ref));
    }

    #[test]
    fn premises_of_basic_rules() {
        let st = c2();
        let or = seq("|- s: p | q", &st);
        let inst = RuleInstance::Prop {
            rule: RuleId::OrR,
            principal: or.succedent.iter().next().unwrap().clone(),
        };
        assert_eq!(apply_rule(&inst, &or, &st).unwrap(), vec![seq("|- s: p, s: q", &st)]);

        let k = seq("|- s: K{a} p", &st);
        let inst = RuleInstance::KIR {
            principal: k.succedent.iter().next().unwrap().clone(),
            fresh: Label::new("t"),
        };
        assert_eq!(apply_rule(&inst, &k, &st).unwrap(), vec![seq("s ~{a} t |- t: p", &st)]);

        let o = seq("|- s: obs{a}(oa)^1", &st);
        let oa = JointObservation::new(Group::new(["a"]), vec!["oa".into()]);
        let inst = RuleInstance::OYR { label: Label::new("s"), observation: oa, completion: false };
        assert_eq!(
            apply_rule(&inst, &o, &st).unwrap(),
            vec![
                seq("s: obs{a}(oa)^0 |- s: obs{a}(oa)^1", &st),
                seq("s: obs{a}(oa)^1 |- s: obs{a}(oa)^1", &st)
            ]
        );
    }

    #[test]
    fn composition_rule() {
        let st = c2();
        let s = seq("s: obs{a,b}(oa,ob1)^0, s: obs{a,b}(oa,ob2)^1 |-", &st);
        let insts = applicable_instances(&s, &LoopTables::default(), &st).unwrap();
        let cr: Vec<_> = insts.iter().filter(|i| i.rule() == RuleId::CR).collect();
        assert!(cr.iter().any(|i| i.principal() == "s: obs{a}(oa)^1"));
        let premise = apply_rule(cr[0], &s, &st).unwrap();
        assert_eq!(premise.len(), 1);
    }

    #[test]
    fn inapplicable_rejected() {
        let st = c1();
        let s = seq("s: p |- s: q", &st);
        let inst = RuleInstance::Prop { rule: RuleId::NegL, principal: s.antecedent.iter().next().unwrap().clone() };
        assert!(matches!(apply_rule(&inst, &s, &st), Err(ProveError::NotApplicable(_))));
    }
}
