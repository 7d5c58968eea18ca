//! Instances of the fourteen Hilbert axiom schemata over a structure.
//!
//! Metavariables `A, B, C` become atoms `p, q, r`. Group parameters range
//! over every group (every pair `I ⊆ J` for H8); observation schemata range
//! over every nonempty group, observation and result assignment.

use serde::Serialize;

use crate::engine::{prove_formula, ProofResult, ProverOptions};
use crate::error::ProveError;
use crate::par::Execution;
use crate::structure::{extension_set, joint_observations, Group, JointObservation, Name, ObservationStructure};
use crate::syntax::Formula;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    /// `H1` to `H14`.
    pub schema: &'static str,
    pub formula: Formula,
}

pub const SCHEMATA: [&str; 14] =
    ["H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8", "H9", "H10", "H11", "H12", "H13", "H14"];

fn all_assignments(len: usize, results: &[Name]) -> Vec<Vec<Name>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                results.iter().map(move |r| {
                    let mut v = prefix.clone();
                    v.push(r.clone());
                    v
                })
            })
            .collect();
    }
    out
}

fn observed(obs: &[JointObservation], results: &[Name]) -> Formula {
    Formula::conjunction(obs.iter().zip(results).map(|(o, r)| Formula::obs(o.clone(), r)))
}

pub fn corpus(structure: &ObservationStructure) -> Vec<CorpusEntry> {
    let (a, b, c) = (Formula::atom("p"), Formula::atom("q"), Formula::atom("r"));
    let imp = Formula::implies;
    let not = Formula::not;
    let k = |g: &Group, f: Formula| Formula::know(g.clone(), f);
    let groups = structure.groups();
    let nonempty: Vec<Group> = groups.iter().filter(|g| !g.is_empty()).cloned().collect();
    let results = structure.results();
    let joint = |g: &Group| joint_observations(structure, g).expect("groups of the structure");
    let mut out = Vec::new();
    let mut push = |schema, formula| out.push(CorpusEntry { schema, formula });

    push("H1", imp(a.clone(), imp(b.clone(), a.clone())));
    push(
        "H2",
        imp(
            imp(a.clone(), imp(b.clone(), c.clone())),
            imp(imp(a.clone(), b.clone()), imp(a.clone(), c.clone())),
        ),
    );
    push("H3", imp(imp(not(a.clone()), not(b.clone())), imp(b.clone(), a.clone())));
    for g in &groups {
        push("H4", imp(k(g, imp(a.clone(), b.clone())), imp(k(g, a.clone()), k(g, b.clone()))));
    }
    for g in &groups {
        push("H5", imp(k(g, a.clone()), a.clone()));
    }
    for g in &groups {
        push("H6", imp(k(g, a.clone()), k(g, k(g, a.clone()))));
    }
    for g in &groups {
        push("H7", imp(not(k(g, a.clone())), k(g, not(k(g, a.clone())))));
    }
    for i in &groups {
        for j in groups.iter().filter(|j| i.is_subset(j)) {
            push("H8", imp(k(i, a.clone()), k(j, a.clone())));
        }
    }
    push("H9", imp(a.clone(), k(&structure.all_agents(), a.clone())));
    for g in &nonempty {
        let each = joint(g)
            .into_iter()
            .map(|o| Formula::disjunction(results.iter().map(|r| Formula::obs(o.clone(), r))));
        push("H10", Formula::conjunction(each));
    }
    for g in &nonempty {
        for o in joint(g) {
            for r in results {
                for p in results.iter().filter(|p| *p != r) {
                    push("H11", imp(Formula::obs(o.clone(), r), not(Formula::obs(o.clone(), p))));
                }
            }
        }
    }
    for g in &nonempty {
        for o in joint(g) {
            for r in results {
                let atom = Formula::obs(o.clone(), r);
                push("H12", imp(atom.clone(), k(g, atom)));
            }
        }
    }
    for g in &nonempty {
        let obs = joint(g);
        for rs in all_assignments(obs.len(), results) {
            let seen = observed(&obs, &rs);
            push(
                "H13",
                imp(
                    Formula::and(seen.clone(), k(g, a.clone())),
                    k(&Group::empty(), imp(seen, a.clone())),
                ),
            );
        }
    }
    for g in &nonempty {
        for e in joint(g) {
            let ext = extension_set(structure, &e).expect("valid observation");
            for rs in all_assignments(ext.len(), results) {
                let composed = crate::structure::compose_results(structure, &rs).expect("results of the structure");
                push("H14", imp(observed(&ext, &rs), Formula::obs(e.clone(), &composed)));
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemaReport {
    pub schema: &'static str,
    pub instances: usize,
    pub proved: usize,
    /// Instances that failed, printed.
    pub failures: Vec<String>,
}

impl SchemaReport {
    pub fn passed(&self) -> bool {
        self.instances > 0 && self.proved == self.instances
    }
}

/// Proves every instance. Results come back in corpus order.
pub fn prove_corpus(
    structure: &ObservationStructure,
    options: &ProverOptions,
    execution: Execution,
) -> Vec<(CorpusEntry, Result<ProofResult, ProveError>)> {
    let entries = corpus(structure);
    let results = execution.map(&entries, |e| prove_formula(&e.formula, structure, options));
    entries.into_iter().zip(results).collect()
}

/// One report per schema, in schema order.
pub fn summarize(results: &[(CorpusEntry, Result<ProofResult, ProveError>)]) -> Vec<SchemaReport> {
    SCHEMATA
        .iter()
        .map(|&schema| {
            let mine: Vec<_> = results.iter().filter(|(e, _)| e.schema == schema).collect();
            let failures: Vec<String> = mine
                .iter()
                .filter_map(|(e, r)| match r {
                    Ok(p) if p.provable => None,
                    Ok(_) => Some(format!("{}: not provable", e.formula)),
                    Err(err) => Some(format!("{}: {err}", e.formula)),
                })
                .collect();
            SchemaReport { schema, instances: mine.len(), proved: mine.len() - failures.len(), failures }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::tests::c2;

    #[test]
    fn every_schema_has_instances() {
        let st = c2();
        let entries = corpus(&st);
        for schema in SCHEMATA {
            assert!(entries.iter().any(|e| e.schema == schema), "{schema}");
        }
        // 4 groups and 9 pairs I ⊆ J over two agents.
        assert_eq!(entries.iter().filter(|e| e.schema == "H4").count(), 4);
        assert_eq!(entries.iter().filter(|e| e.schema == "H8").count(), 9);
        // Observations: {a}: 1, {b}: 2, {a,b}: 2. H13 tuples: 2 + 4 + 4.
        assert_eq!(entries.iter().filter(|e| e.schema == "H13").count(), 10);
        // H14: (oa) extends to 2 full observations, each other one to 1.
        assert_eq!(entries.iter().filter(|e| e.schema == "H14").count(), 4 + 2 * 2 + 2 * 2);
    }
}
