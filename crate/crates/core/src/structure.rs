//! Observation structures: the agents, their observation sets, the result
//! domain and the result-composition operation that every proof and every
//! model is relative to.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::StructureError;

/// Interned identifier used for agents, observations, results, atoms and labels.
pub type Name = Arc<str>;

/// Bit set over agent indices of a structure.
pub(crate) type Mask = u32;

/// Largest agent set the structure accepts; every subset of `N` is enumerated
/// by the relational rules and the oracle.
pub const MAX_AGENTS: usize = 8;

/// Upper bound on `|O_N|`, the number of full joint observations.
pub const MAX_FULL_OBSERVATIONS: usize = 4096;

/// A set of agents, kept sorted and duplicate free.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Group(Vec<Name>);

impl Group {
    pub fn new<I, S>(agents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: BTreeSet<Name> = agents.into_iter().map(|a| Name::from(a.as_ref())).collect();
        Group(set.into_iter().collect())
    }

    pub fn empty() -> Self {
        Group(Vec::new())
    }

    pub fn agents(&self) -> &[Name] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, agent: &str) -> bool {
        self.0.binary_search_by(|a| a.as_ref().cmp(agent)).is_ok()
    }

    pub fn is_subset(&self, other: &Group) -> bool {
        self.0.iter().all(|a| other.contains(a))
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

/// A tuple of observations, one per agent of `group`; `components[i]` belongs
/// to `group.agents()[i]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointObservation {
    pub group: Group,
    pub components: Vec<Name>,
}

impl JointObservation {
    pub fn new(group: Group, components: Vec<Name>) -> Self {
        JointObservation { group, components }
    }

    /// The observation this tuple assigns to `agent`, if the agent is in the group.
    pub fn component(&self, agent: &str) -> Option<&Name> {
        let idx = self.group.0.binary_search_by(|a| a.as_ref().cmp(agent)).ok()?;
        self.components.get(idx)
    }
}

impl fmt::Display for JointObservation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Built-in result compositions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// Greatest result in the declared order of `results`.
    Max,
    /// Least result in the declared order of `results`.
    Min,
    /// Set union. Each result names a set by its element characters
    /// (`"xy"` is `{x,y}`, `"_"` is the empty set).
    Union,
}

impl Composition {
    pub fn name(self) -> &'static str {
        match self {
            Composition::Max => "max",
            Composition::Min => "min",
            Composition::Union => "union",
        }
    }
}

impl std::str::FromStr for Composition {
    type Err = StructureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Composition::Max),
            "min" => Ok(Composition::Min),
            "union" => Ok(Composition::Union),
            other => Err(StructureError::UnknownComposition(other.to_string())),
        }
    }
}

/// On-disk form of a structure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureConfig {
    pub agents: Vec<String>,
    pub observations: BTreeMap<String, Vec<String>>,
    pub results: Vec<String>,
    pub compose: String,
}

/// The signature `(N, O, R, Σ)`. Immutable once built.
#[derive(Clone, Debug)]
pub struct ObservationStructure {
    agents: Vec<Name>,
    observations: Vec<Vec<Name>>,
    results: Vec<Name>,
    compose: Composition,
    union_bits: Vec<u64>,
    /// `joint[mask]` lists `O_I` for the group with that mask, each tuple as
    /// per-agent observation indices in agent order.
    joint: Vec<Vec<Vec<u16>>>,
    /// `extension[mask][e]` lists indices into `O_N` of the tuples agreeing with `e`.
    extension: Vec<Vec<Vec<u32>>>,
}

impl ObservationStructure {
    pub fn new(config: &StructureConfig) -> Result<Self, StructureError> {
        let compose: Composition = config.compose.parse()?;
        if config.agents.is_empty() {
            return Err(StructureError::NoAgents);
        }
        if config.agents.len() > MAX_AGENTS {
            return Err(StructureError::TooLarge(format!(
                "{} agents (at most {MAX_AGENTS})",
                config.agents.len()
            )));
        }
        let mut agents: Vec<Name> = Vec::new();
        for a in &config.agents {
            check_identifier(a)?;
            agents.push(Name::from(a.as_str()));
        }
        agents.sort();
        if agents.windows(2).any(|w| w[0] == w[1]) {
            return Err(StructureError::Duplicate(format!("agent list {:?}", config.agents)));
        }
        for key in config.observations.keys() {
            if !agents.iter().any(|a| a.as_ref() == key) {
                return Err(StructureError::UnknownAgent(key.clone()));
            }
        }
        let mut observations = Vec::with_capacity(agents.len());
        for a in &agents {
            let obs = config
                .observations
                .get(a.as_ref())
                .filter(|o| !o.is_empty())
                .ok_or_else(|| StructureError::NoObservations(a.to_string()))?;
            let mut names: Vec<Name> = Vec::new();
            for o in obs {
                check_identifier(o)?;
                names.push(Name::from(o.as_str()));
            }
            names.sort();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(StructureError::Duplicate(format!("observations of agent {a}")));
            }
            observations.push(names);
        }
        if config.results.is_empty() {
            return Err(StructureError::NoResults);
        }
        let mut results: Vec<Name> = Vec::new();
        for r in &config.results {
            check_identifier(r)?;
            if results.iter().any(|x| x.as_ref() == r) {
                return Err(StructureError::Duplicate(format!("result {r}")));
            }
            results.push(Name::from(r.as_str()));
        }
        let union_bits = if compose == Composition::Union {
            union_encoding(&results)?
        } else {
            Vec::new()
        };

        let full_size: usize = observations
            .iter()
            .try_fold(1usize, |acc, o| acc.checked_mul(o.len()))
            .unwrap_or(usize::MAX);
        if full_size > MAX_FULL_OBSERVATIONS {
            return Err(StructureError::TooLarge(format!(
                "{full_size} full joint observations (at most {MAX_FULL_OBSERVATIONS})"
            )));
        }

        let n = agents.len();
        let mut joint = Vec::with_capacity(1 << n);
        for mask in 0..(1u32 << n) {
            joint.push(product(&observations, mask));
        }
        let full_mask = (1u32 << n) - 1;
        let full = &joint[full_mask as usize];
        let mut extension = Vec::with_capacity(1 << n);
        for mask in 0..(1u32 << n) {
            let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let ext: Vec<Vec<u32>> = joint[mask as usize]
                .iter()
                .map(|e| {
                    full.iter()
                        .enumerate()
                        .filter(|(_, o)| members.iter().zip(e).all(|(&a, &c)| o[a] == c))
                        .map(|(i, _)| i as u32)
                        .collect()
                })
                .collect();
            extension.push(ext);
        }

        let structure = ObservationStructure {
            agents,
            observations,
            results,
            compose,
            union_bits,
            joint,
            extension,
        };
        structure.check_laws()?;
        Ok(structure)
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        let config: StructureConfig =
            serde_json::from_str(text).map_err(|e| StructureError::Config(e.to_string()))?;
        Self::new(&config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StructureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| StructureError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_config(&self) -> StructureConfig {
        StructureConfig {
            agents: self.agents.iter().map(|a| a.to_string()).collect(),
            observations: self
                .agents
                .iter()
                .zip(&self.observations)
                .map(|(a, o)| (a.to_string(), o.iter().map(|x| x.to_string()).collect()))
                .collect(),
            results: self.results.iter().map(|r| r.to_string()).collect(),
            compose: self.compose.name().to_string(),
        }
    }

    /// Agents in canonical (lexicographic) order.
    pub fn agents(&self) -> &[Name] {
        &self.agents
    }

    /// The observation set of `agent`, sorted.
    pub fn observations_of(&self, agent: &str) -> Option<&[Name]> {
        let idx = self.agent_index(agent)?;
        Some(&self.observations[idx])
    }

    /// Results in declared order.
    pub fn results(&self) -> &[Name] {
        &self.results
    }

    pub fn composition(&self) -> Composition {
        self.compose
    }

    pub fn all_agents(&self) -> Group {
        Group(self.agents.clone())
    }

    /// Every subset of `N`, ordered by agent bit mask (so `∅` first, `N` last).
    pub fn groups(&self) -> Vec<Group> {
        (0..(1u32 << self.agents.len())).map(|m| self.group_of(m)).collect()
    }

    pub fn result_index(&self, result: &str) -> Option<usize> {
        self.results.iter().position(|r| r.as_ref() == result)
    }

    pub(crate) fn agent_index(&self, agent: &str) -> Option<usize> {
        self.agents.binary_search_by(|a| a.as_ref().cmp(agent)).ok()
    }

    pub(crate) fn full_mask(&self) -> Mask {
        (1u32 << self.agents.len()) - 1
    }

    pub(crate) fn mask_of(&self, group: &Group) -> Result<Mask, StructureError> {
        let mut mask = 0;
        for a in group.agents() {
            let idx = self
                .agent_index(a)
                .ok_or_else(|| StructureError::UnknownAgent(a.to_string()))?;
            mask |= 1 << idx;
        }
        Ok(mask)
    }

    pub(crate) fn group_of(&self, mask: Mask) -> Group {
        Group(
            (0..self.agents.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| self.agents[i].clone())
                .collect(),
        )
    }

    /// Number of joint observations of the group with this mask.
    pub(crate) fn joint_count(&self, mask: Mask) -> usize {
        self.joint[mask as usize].len()
    }

    pub(crate) fn full_count(&self) -> usize {
        self.joint[self.full_mask() as usize].len()
    }

    /// `ē` as indices into `O_N`.
    pub(crate) fn extension_indices(&self, mask: Mask, e: usize) -> &[u32] {
        &self.extension[mask as usize][e]
    }

    /// Position of a joint observation within `O_I` for its group.
    pub(crate) fn joint_index(&self, obs: &JointObservation) -> Result<(Mask, usize), StructureError> {
        let mask = self.mask_of(&obs.group)?;
        if obs.components.len() != obs.group.len() {
            return Err(StructureError::Arity {
                group: obs.group.to_string(),
                expected: obs.group.len(),
                found: obs.components.len(),
            });
        }
        let mut tuple = Vec::with_capacity(obs.components.len());
        for (agent, comp) in obs.group.agents().iter().zip(&obs.components) {
            let a = self.agent_index(agent).expect("checked by mask_of");
            let o = self.observations[a]
                .binary_search_by(|x| x.as_ref().cmp(comp))
                .map_err(|_| StructureError::UnknownObservation {
                    agent: agent.to_string(),
                    observation: comp.to_string(),
                })?;
            tuple.push(o as u16);
        }
        let idx = self.joint[mask as usize]
            .iter()
            .position(|t| *t == tuple)
            .expect("product covers every tuple");
        Ok((mask, idx))
    }

    pub(crate) fn joint_at(&self, mask: Mask, idx: usize) -> JointObservation {
        let members: Vec<usize> = (0..self.agents.len()).filter(|i| mask & (1 << i) != 0).collect();
        let tuple = &self.joint[mask as usize][idx];
        JointObservation {
            group: self.group_of(mask),
            components: members
                .iter()
                .zip(tuple)
                .map(|(&a, &o)| self.observations[a][o as usize].clone())
                .collect(),
        }
    }

    /// `Σ` over result indices; duplicates collapse.
    pub(crate) fn compose_indices<I>(&self, values: I) -> Result<usize, StructureError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut iter = values.into_iter();
        let first = iter.next().ok_or(StructureError::EmptyComposition)?;
        match self.compose {
            Composition::Max => Ok(iter.fold(first, usize::max)),
            Composition::Min => Ok(iter.fold(first, usize::min)),
            Composition::Union => {
                let bits = iter.fold(self.union_bits[first], |acc, r| acc | self.union_bits[r]);
                self.union_bits
                    .iter()
                    .position(|&b| b == bits)
                    .ok_or_else(|| StructureError::CompositionUndefined(format!("union bits {bits:#b}")))
            }
        }
    }

    fn check_laws(&self) -> Result<(), StructureError> {
        let r = self.results.len();
        // Closure under pairwise union implies closure under every finite
        // union, which keeps composition total on the proof-search path.
        if self.compose == Composition::Union {
            for i in 0..r {
                for j in i + 1..r {
                    self.compose_indices([i, j])?;
                }
            }
        }
        for i in 0..r {
            if self.compose_indices([i])? != i {
                return Err(StructureError::SingletonLaw(self.results[i].to_string()));
            }
        }
        // Exhaustive partition check; beyond eight results the Bell numbers
        // get large and the built-in catalog is known to satisfy the law.
        if r > 8 {
            return Ok(());
        }
        for subset in 1u32..(1 << r) {
            let members: Vec<usize> = (0..r).filter(|i| subset & (1 << i) != 0).collect();
            let whole = self.compose_indices(members.iter().copied())?;
            let mut law_holds = Ok(());
            for_each_partition(&members, &mut |blocks| {
                if law_holds.is_err() {
                    return;
                }
                let parts: Result<Vec<usize>, _> = blocks
                    .iter()
                    .map(|b| self.compose_indices(b.iter().copied()))
                    .collect();
                law_holds = parts.and_then(|p| {
                    if self.compose_indices(p)? == whole {
                        Ok(())
                    } else {
                        Err(StructureError::PartitionLaw(format!("{blocks:?}")))
                    }
                });
            });
            law_holds?;
        }
        Ok(())
    }
}

fn check_identifier(s: &str) -> Result<(), StructureError> {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        Ok(())
    } else {
        Err(StructureError::BadIdentifier(s.to_string()))
    }
}

fn union_encoding(results: &[Name]) -> Result<Vec<u64>, StructureError> {
    let elements: BTreeSet<char> = results
        .iter()
        .filter(|r| r.as_ref() != "_")
        .flat_map(|r| r.chars())
        .collect();
    if elements.len() > 64 || elements.contains(&'_') {
        return Err(StructureError::BadUnionResult(format!("{results:?}")));
    }
    let position: BTreeMap<char, usize> = elements.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    results
        .iter()
        .map(|r| {
            if r.as_ref() == "_" {
                return Ok(0);
            }
            let chars: Vec<char> = r.chars().collect();
            if chars.windows(2).any(|w| w[0] >= w[1]) {
                return Err(StructureError::BadUnionResult(r.to_string()));
            }
            Ok(chars.iter().fold(0u64, |acc, c| acc | 1 << position[c]))
        })
        .collect()
}

/// Cartesian product of the observation sets of the agents in `mask`, in
/// lexicographic order.
fn product(observations: &[Vec<Name>], mask: Mask) -> Vec<Vec<u16>> {
    let mut out: Vec<Vec<u16>> = vec![Vec::new()];
    for (a, obs) in observations.iter().enumerate() {
        if mask & (1 << a) == 0 {
            continue;
        }
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..obs.len() as u16).map(move |o| {
                    let mut t = prefix.clone();
                    t.push(o);
                    t
                })
            })
            .collect();
    }
    out
}

/// Calls `f` with every partition of `items` into nonempty blocks.
fn for_each_partition(items: &[usize], f: &mut dyn FnMut(&[Vec<usize>])) {
    fn go(items: &[usize], i: usize, blocks: &mut Vec<Vec<usize>>, f: &mut dyn FnMut(&[Vec<usize>])) {
        if i == items.len() {
            f(blocks);
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(items[i]);
            go(items, i + 1, blocks, f);
            blocks[b].pop();
        }
        blocks.push(vec![items[i]]);
        go(items, i + 1, blocks, f);
        blocks.pop();
    }
    go(items, 0, &mut Vec::new(), f);
}

/// `O_I`: every joint observation of `group`. The empty group yields the
/// single empty tuple.
pub fn joint_observations(
    structure: &ObservationStructure,
    group: &Group,
) -> Result<Vec<JointObservation>, StructureError> {
    let mask = structure.mask_of(group)?;
    Ok((0..structure.joint_count(mask))
        .map(|i| structure.joint_at(mask, i))
        .collect())
}

/// `ē`: the full joint observations agreeing with `e` on its group.
pub fn extension_set(
    structure: &ObservationStructure,
    e: &JointObservation,
) -> Result<Vec<JointObservation>, StructureError> {
    let (mask, idx) = structure.joint_index(e)?;
    let full = structure.full_mask();
    Ok(structure
        .extension_indices(mask, idx)
        .iter()
        .map(|&i| structure.joint_at(full, i as usize))
        .collect())
}

/// `Σ` applied to the set underlying `values`.
pub fn compose_results<S: AsRef<str>>(
    structure: &ObservationStructure,
    values: &[S],
) -> Result<Name, StructureError> {
    let indices: Vec<usize> = values
        .iter()
        .map(|v| {
            structure
                .result_index(v.as_ref())
                .ok_or_else(|| StructureError::UnknownResult(v.as_ref().to_string()))
        })
        .collect::<Result<_, _>>()?;
    let idx = structure.compose_indices(indices)?;
    Ok(structure.results[idx].clone())
}
