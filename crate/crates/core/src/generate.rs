//! Formula and sequent generators for sweeps and property tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::structure::{joint_observations, Group, ObservationStructure};
use crate::syntax::{Formula, Label, LabelledFormula, RelAtom, Sequent};

/// Propositional atoms followed by every observation atom of every nonempty
/// group, in group order.
pub fn leaves(structure: &ObservationStructure, atoms: &[&str]) -> Vec<Formula> {
    let mut out: Vec<Formula> = atoms.iter().map(|a| Formula::atom(a)).collect();
    for group in structure.groups().into_iter().filter(|g| !g.is_empty()) {
        for o in joint_observations(structure, &group).expect("groups of the structure") {
            for r in structure.results() {
                out.push(Formula::obs(o.clone(), r));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Unary {
    Not,
    Know(Group),
}

impl Unary {
    pub fn apply(&self, f: Formula) -> Formula {
        match self {
            Unary::Not => Formula::not(f),
            Unary::Know(g) => Formula::know(g.clone(), f),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Binary {
    And,
    Or,
    Implies,
}

impl Binary {
    pub const ALL: [Binary; 3] = [Binary::And, Binary::Or, Binary::Implies];

    pub fn apply(self, a: Formula, b: Formula) -> Formula {
        match self {
            Binary::And => Formula::and(a, b),
            Binary::Or => Formula::or(a, b),
            Binary::Implies => Formula::implies(a, b),
        }
    }
}

/// Negation and knowledge for every group, including the empty one.
pub fn unary_ops(structure: &ObservationStructure) -> Vec<Unary> {
    std::iter::once(Unary::Not).chain(structure.groups().into_iter().map(Unary::Know)).collect()
}

/// Every formula over `leaves` with at most `max` connectives, grouped by
/// connective count.
pub fn formulas_by_size(leaves: &[Formula], unary: &[Unary], max: usize) -> Vec<Vec<Formula>> {
    let mut levels: Vec<Vec<Formula>> = vec![leaves.to_vec()];
    for n in 1..=max {
        let mut level = Vec::new();
        for op in unary {
            level.extend(levels[n - 1].iter().map(|f| op.apply(f.clone())));
        }
        for op in Binary::ALL {
            for i in 0..n {
                for a in &levels[i] {
                    for b in &levels[n - 1 - i] {
                        level.push(op.apply(a.clone(), b.clone()));
                    }
                }
            }
        }
        levels.push(level);
    }
    levels
}

/// Flattened [`formulas_by_size`].
pub fn formulas_up_to(leaves: &[Formula], unary: &[Unary], max: usize) -> Vec<Formula> {
    formulas_by_size(leaves, unary, max).into_iter().flatten().collect()
}

/// Number of formulas [`formulas_up_to`] yields, without building them.
pub fn count_up_to(leaves: usize, unary: usize, max: usize) -> u128 {
    let mut levels = vec![leaves as u128];
    for n in 1..=max {
        let binary: u128 = (0..n).map(|i| levels[i] * levels[n - 1 - i]).sum();
        levels.push(unary as u128 * levels[n - 1] + 3 * binary);
    }
    levels.iter().sum()
}

/// Random formulas of bounded depth. Depth 0 is a leaf.
pub struct FormulaGen {
    pub leaves: Vec<Formula>,
    pub unary: Vec<Unary>,
    pub rng: StdRng,
}

impl FormulaGen {
    pub fn new(structure: &ObservationStructure, atoms: &[&str], seed: u64) -> Self {
        FormulaGen {
            leaves: leaves(structure, atoms),
            unary: unary_ops(structure),
            rng: StdRng::seed_from_u64(seed),
        }
    }

    pub fn formula(&mut self, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return self.leaves.choose(&mut self.rng).expect("nonempty leaves").clone();
        }
        if self.rng.gen_bool(0.45) {
            let op = self.unary.choose(&mut self.rng).expect("nonempty unary ops").clone();
            op.apply(self.formula(depth - 1))
        } else {
            let op = *Binary::ALL.choose(&mut self.rng).expect("three ops");
            let a = self.formula(depth - 1);
            let b = self.formula(depth - 1);
            op.apply(a, b)
        }
    }

    pub fn leaf(&mut self) -> Formula {
        self.leaves.choose(&mut self.rng).expect("nonempty leaves").clone()
    }

    /// A sequent over labels `s, t, u` whose labels are all linked to `s`
    /// by some relational atom, with `formulas` labelled formulas of depth
    /// at most `depth`.
    pub fn sequent(&mut self, structure: &ObservationStructure, formulas: usize, depth: usize) -> Sequent {
        let names = ["s", "t", "u"];
        let count = self.rng.gen_range(1..=names.len());
        let labels = &names[..count];
        let groups = structure.groups();
        let mut seq = Sequent::new();
        for (i, l) in labels.iter().enumerate().skip(1) {
            let from = labels[self.rng.gen_range(0..i)];
            let g = groups.choose(&mut self.rng).expect("groups").clone();
            seq.relations.insert(RelAtom::new(Label::new(from), g, Label::new(l)));
        }
        for _ in 0..formulas {
            let l = Label::new(labels.choose(&mut self.rng).expect("labels"));
            let lf = LabelledFormula::new(l, self.formula(depth));
            if self.rng.gen_bool(0.5) {
                seq.antecedent.insert(lf);
            } else {
                seq.succedent.insert(lf);
            }
        }
        seq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::tests::c1;

    #[test]
    fn exhaustive_counts() {
        let st = c1();
        let l = leaves(&st, &["p"]);
        let u = unary_ops(&st);
        assert_eq!((l.len(), u.len()), (7, 5));
        let levels = formulas_by_size(&l, &u, 2);
        assert_eq!(levels.iter().map(Vec::len).collect::<Vec<_>>(), vec![7, 182, 8554]);
        assert_eq!(count_up_to(7, 5, 3), 510_153);
    }

    #[test]
    fn seeded_generation_repeats() {
        let st = c1();
        let a: Vec<_> = {
            let mut g = FormulaGen::new(&st, &["p", "q"], 7);
            (0..20).map(|_| g.formula(4)).collect()
        };
        let mut g = FormulaGen::new(&st, &["p", "q"], 7);
        let b: Vec<_> = (0..20).map(|_| g.formula(4)).collect();
        assert_eq!(a, b);
    }
}
