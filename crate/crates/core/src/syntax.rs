//! Formulas, labelled formulas, relational atoms and sequents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::StructureError;
use crate::structure::{Group, JointObservation, Name, ObservationStructure};

/// `o^r`: the joint observation `o` of its group yields result `r`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObsAtom {
    pub observation: JointObservation,
    pub result: Name,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(Name),
    Obs(ObsAtom),
    Not(Arc<Formula>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Implies(Arc<Formula>, Arc<Formula>),
    Know(Group, Arc<Formula>),
    /// Only produced by sequent-to-formula conversion.
    Top,
    /// Only produced by sequent-to-formula conversion.
    Bottom,
}

impl Formula {
    pub fn atom(name: &str) -> Self {
        Formula::Atom(Name::from(name))
    }

    pub fn obs(observation: JointObservation, result: &str) -> Self {
        Formula::Obs(ObsAtom { observation, result: Name::from(result) })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Arc::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Arc::new(a), Arc::new(b))
    }

    pub fn know(group: Group, f: Formula) -> Self {
        Formula::Know(group, Arc::new(f))
    }

    /// Conjunction of `items`, folded to the right; `Top` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        fold_right(items.into_iter().collect(), Formula::Top, Formula::and)
    }

    /// Disjunction of `items`, folded to the right; `Bottom` when empty.
    pub fn disjunction(items: impl IntoIterator<Item = Formula>) -> Self {
        fold_right(items.into_iter().collect(), Formula::Bottom, Formula::or)
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Formula::Atom(_) | Formula::Obs(_))
    }

    /// Propositional atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Name>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(a) | Formula::Know(_, a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Obs(_) | Formula::Top | Formula::Bottom => {}
        }
    }

    /// Checks every group and observation atom against the structure.
    /// Observation atoms must have a nonempty group.
    pub fn validate(&self, structure: &ObservationStructure) -> Result<(), StructureError> {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bottom => Ok(()),
            Formula::Obs(atom) => {
                if atom.observation.group.is_empty() {
                    return Err(StructureError::EmptyObservationGroup);
                }
                structure.joint_index(&atom.observation)?;
                structure
                    .result_index(&atom.result)
                    .map(|_| ())
                    .ok_or_else(|| StructureError::UnknownResult(atom.result.to_string()))
            }
            Formula::Not(a) => a.validate(structure),
            Formula::Know(g, a) => {
                structure.mask_of(g)?;
                a.validate(structure)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.validate(structure)?;
                b.validate(structure)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) | Formula::Know(..) => 4,
            _ => 5,
        }
    }
}

fn fold_right(mut items: Vec<Formula>, empty: Formula, op: fn(Formula, Formula) -> Formula) -> Formula {
    let Some(mut acc) = items.pop() else {
        return empty;
    };
    while let Some(f) = items.pop() {
        acc = op(f, acc);
    }
    acc
}

/// Connective count; atoms, `Top` and `Bottom` have complexity 0.
pub fn formula_complexity(f: &Formula) -> usize {
    match f {
        Formula::Atom(_) | Formula::Obs(_) | Formula::Top | Formula::Bottom => 0,
        Formula::Not(a) | Formula::Know(_, a) => 1 + formula_complexity(a),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            1 + formula_complexity(a) + formula_complexity(b)
        }
    }
}

struct Child<'a>(&'a Formula, u8);

impl fmt::Display for Child<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{p}"),
            Formula::Obs(atom) => write!(
                f,
                "obs{}{}^{}",
                atom.observation.group, atom.observation, atom.result
            ),
            Formula::Top => write!(f, "⊤"),
            Formula::Bottom => write!(f, "⊥"),
            Formula::Not(a) => write!(f, "~{}", Child(a, 4)),
            Formula::Know(g, a) => write!(f, "K{g} {}", Child(a, 4)),
            // `&` and `|` associate to the left, `->` to the right.
            Formula::And(a, b) => write!(f, "{} & {}", Child(a, 3), Child(b, 4)),
            Formula::Or(a, b) => write!(f, "{} | {}", Child(a, 2), Child(b, 3)),
            Formula::Implies(a, b) => write!(f, "{} -> {}", Child(a, 2), Child(b, 1)),
        }
    }
}

/// Minimal-parenthesis rendering in the concrete grammar.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub Name);

impl Label {
    pub fn new(name: &str) -> Self {
        Label(Name::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `s: A`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelledFormula {
    pub label: Label,
    pub formula: Formula,
}

impl LabelledFormula {
    pub fn new(label: Label, formula: Formula) -> Self {
        LabelledFormula { label, formula }
    }
}

impl fmt::Display for LabelledFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.label, self.formula)
    }
}

/// `s ~{I} t`
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelAtom {
    pub group: Group,
    pub left: Label,
    pub right: Label,
}

impl RelAtom {
    pub fn new(left: Label, group: Group, right: Label) -> Self {
        RelAtom { group, left, right }
    }
}

impl fmt::Display for RelAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ~{} {}", self.left, self.group, self.right)
    }
}

/// `Γ ⇒ Δ` with set semantics on both sides. Relational atoms live only in
/// the antecedent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sequent {
    pub antecedent: BTreeSet<LabelledFormula>,
    pub relations: BTreeSet<RelAtom>,
    pub succedent: BTreeSet<LabelledFormula>,
}

impl Sequent {
    pub fn new() -> Self {
        Sequent::default()
    }

    /// `⇒ s: A`
    pub fn goal(label: &str, formula: Formula) -> Self {
        let mut seq = Sequent::new();
        seq.succedent.insert(LabelledFormula::new(Label::new(label), formula));
        seq
    }

    pub fn assume(mut self, label: &str, formula: Formula) -> Self {
        self.antecedent.insert(LabelledFormula::new(Label::new(label), formula));
        self
    }

    pub fn relate(mut self, left: &str, group: Group, right: &str) -> Self {
        self.relations.insert(RelAtom::new(Label::new(left), group, Label::new(right)));
        self
    }

    pub fn conclude(mut self, label: &str, formula: Formula) -> Self {
        self.succedent.insert(LabelledFormula::new(Label::new(label), formula));
        self
    }

    pub fn labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        for lf in self.antecedent.iter().chain(&self.succedent) {
            out.insert(lf.label.clone());
        }
        for r in &self.relations {
            out.insert(r.left.clone());
            out.insert(r.right.clone());
        }
        out
    }

    pub fn atoms(&self) -> BTreeSet<Name> {
        self.antecedent
            .iter()
            .chain(&self.succedent)
            .flat_map(|lf| lf.formula.atoms())
            .collect()
    }

    pub fn validate(&self, structure: &ObservationStructure) -> Result<(), StructureError> {
        for lf in self.antecedent.iter().chain(&self.succedent) {
            lf.formula.validate(structure)?;
        }
        for r in &self.relations {
            structure.mask_of(&r.group)?;
        }
        Ok(())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let left: Vec<String> = self
            .antecedent
            .iter()
            .map(ToString::to_string)
            .chain(self.relations.iter().map(ToString::to_string))
            .collect();
        let right: Vec<String> = self.succedent.iter().map(ToString::to_string).collect();
        match (left.is_empty(), right.is_empty()) {
            (true, true) => write!(f, "|-"),
            (true, false) => write!(f, "|- {}", right.join(", ")),
            (false, true) => write!(f, "{} |-", left.join(", ")),
            (false, false) => write!(f, "{} |- {}", left.join(", "), right.join(", ")),
        }
    }
}

/// Polarity-aware walk: calls `visit` on every `K_I` occurrence that sits
/// at negative polarity.
fn walk_negative_k(f: &Formula, positive: bool, visit: &mut dyn FnMut(&Group)) {
    match f {
        Formula::Atom(_) | Formula::Obs(_) | Formula::Top | Formula::Bottom => {}
        Formula::Not(a) => walk_negative_k(a, !positive, visit),
        Formula::And(a, b) | Formula::Or(a, b) => {
            walk_negative_k(a, positive, visit);
            walk_negative_k(b, positive, visit);
        }
        Formula::Implies(a, b) => {
            walk_negative_k(a, !positive, visit);
            walk_negative_k(b, positive, visit);
        }
        Formula::Know(g, a) => {
            if !positive {
                visit(g);
            }
            walk_negative_k(a, positive, visit);
        }
    }
}

/// Negative occurrences of every knowledge group in the sequent.
pub fn negative_k_counts(seq: &Sequent) -> BTreeMap<Group, usize> {
    let mut counts = BTreeMap::new();
    let mut bump = |g: &Group| *counts.entry(g.clone()).or_insert(0) += 1;
    for lf in &seq.antecedent {
        walk_negative_k(&lf.formula, false, &mut bump);
    }
    for lf in &seq.succedent {
        walk_negative_k(&lf.formula, true, &mut bump);
    }
    counts
}

/// `n(K_I)`: negative occurrences of `K_I` for exactly this group.
pub fn negative_k_occurrences(seq: &Sequent, group: &Group) -> usize {
    negative_k_counts(seq).get(group).copied().unwrap_or(0)
}

/// Negative knowledge occurrences summed over every group.
pub fn negative_k_total(seq: &Sequent) -> usize {
    negative_k_counts(seq).values().sum()
}

/// Every group that labels a knowledge operator somewhere in the sequent.
pub fn knowledge_groups(seq: &Sequent) -> BTreeSet<Group> {
    fn go(f: &Formula, out: &mut BTreeSet<Group>) {
        match f {
            Formula::Know(g, a) => {
                out.insert(g.clone());
                go(a, out);
            }
            Formula::Not(a) => go(a, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                go(a, out);
                go(b, out);
            }
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    for lf in seq.antecedent.iter().chain(&seq.succedent) {
        go(&lf.formula, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ga() -> Group {
        Group::new(["a"])
    }

    #[test]
    fn printing() {
        let p = Formula::atom("p");
        assert_eq!(print_formula(&Formula::know(ga(), p.clone())), "K{a} p");
        assert_eq!(print_formula(&Formula::implies(p.clone(), Formula::not(p.clone()))), "p -> ~p");
        let o = JointObservation::new(Group::new(["a", "b"]), vec!["oa".into(), "ob1".into()]);
        assert_eq!(print_formula(&Formula::obs(o, "0")), "obs{a,b}(oa,ob1)^0");
        assert_eq!(print_formula(&Formula::know(Group::empty(), p.clone())), "K{} p");
        let q = Formula::atom("q");
        let r = Formula::atom("r");
        assert_eq!(
            print_formula(&Formula::implies(Formula::implies(p.clone(), q.clone()), r.clone())),
            "(p -> q) -> r"
        );
        assert_eq!(
            print_formula(&Formula::implies(p.clone(), Formula::implies(q.clone(), r.clone()))),
            "p -> q -> r"
        );
        assert_eq!(print_formula(&Formula::and(p.clone(), Formula::or(q.clone(), r.clone()))), "p & (q | r)");
        assert_eq!(print_formula(&Formula::or(Formula::and(p.clone(), q.clone()), r.clone())), "p & q | r");
        assert_eq!(print_formula(&Formula::and(p.clone(), Formula::and(q.clone(), r.clone()))), "p & (q & r)");
        assert_eq!(print_formula(&Formula::and(Formula::and(p.clone(), q.clone()), r.clone())), "p & q & r");
        assert_eq!(print_formula(&Formula::not(Formula::know(ga(), p.clone()))), "~K{a} p");
        assert_eq!(print_formula(&Formula::know(ga(), Formula::not(p.clone()))), "K{a} ~p");
        assert_eq!(print_formula(&Formula::not(Formula::and(p, q))), "~(p & q)");
    }

    #[test]
    fn complexity() {
        let p = Formula::atom("p");
        assert_eq!(formula_complexity(&p), 0);
        assert_eq!(formula_complexity(&Formula::not(p.clone())), 1);
        assert_eq!(formula_complexity(&Formula::implies(Formula::know(ga(), p.clone()), p)), 2);
    }

    #[test]
    fn negative_occurrences() {
        let kp = Formula::know(ga(), Formula::atom("p"));
        assert_eq!(negative_k_occurrences(&Sequent::goal("s", kp.clone()), &ga()), 0);
        let seq = Sequent::new().assume("s", kp.clone()).conclude("s", Formula::atom("q"));
        assert_eq!(negative_k_occurrences(&seq, &ga()), 1);
        let kq = Formula::know(ga(), Formula::atom("q"));
        let seq = Sequent::new()
            .conclude("s", Formula::not(kp.clone()))
            .conclude("s", Formula::implies(kq, Formula::atom("r")));
        assert_eq!(negative_k_occurrences(&seq, &ga()), 2);
        // Relational atoms contribute nothing.
        let seq = Sequent::new().relate("s", ga(), "t");
        assert_eq!(negative_k_occurrences(&seq, &ga()), 0);
        assert_eq!(negative_k_occurrences(&Sequent::goal("s", kp), &Group::empty()), 0);
    }

    #[test]
    fn sequent_display() {
        let seq = Sequent::new()
            .assume("s", Formula::know(ga(), Formula::atom("p")))
            .relate("s", ga(), "t")
            .conclude("t", Formula::atom("p"));
        assert_eq!(seq.to_string(), "s: K{a} p, s ~{a} t |- t: p");
        assert_eq!(Sequent::new().to_string(), "|-");
    }

    #[test]
    fn conjunction_folds() {
        assert_eq!(Formula::conjunction([]), Formula::Top);
        assert_eq!(Formula::disjunction([]), Formula::Bottom);
        let (p, q, r) = (Formula::atom("p"), Formula::atom("q"), Formula::atom("r"));
        assert_eq!(
            Formula::conjunction([p.clone(), q.clone(), r.clone()]),
            Formula::and(p, Formula::and(q, r))
        );
    }
}
