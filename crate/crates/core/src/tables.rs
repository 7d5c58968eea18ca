//! Loop-check tables for proof search.
//!
//! `TableLK` records every principal pair used by a left knowledge rule on the
//! current branch. `TableRK` records, per right knowledge formula, the labels
//! already expanded and the chain of labels each expansion created, so chains
//! can be cut at a fixed length.

use std::collections::{BTreeMap, BTreeSet};

use crate::structure::Group;
use crate::syntax::{knowledge_groups, negative_k_counts, Formula, Label, LabelledFormula, RelAtom, Sequent};

/// How the maximum chain length is derived from the root sequent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChainBound {
    /// `n(K_I) + 1`, counting negative occurrences of `K_I` only.
    #[default]
    PerGroup,
    /// Negative knowledge occurrences of every group, plus one.
    Aggregate,
}

/// One row: the labels at which the formula has been expanded and the parent
/// of every label the expansions created.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RkRow<L> {
    pub max: usize,
    pub expanded: BTreeSet<L>,
    pub parent: BTreeMap<L, L>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RkTable<K, L> {
    rows: BTreeMap<K, RkRow<L>>,
}

impl<K, L> Default for RkTable<K, L> {
    fn default() -> Self {
        RkTable { rows: BTreeMap::new() }
    }
}

impl<K: Ord + Clone, L: Ord + Clone> RkTable<K, L> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&self, key: &K) -> Option<&RkRow<L>> {
        self.rows.get(key)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&K, &RkRow<L>)> {
        self.rows.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Parent links from `label` back to a label with no parent in this row.
    pub fn depth(&self, key: &K, label: &L) -> usize {
        let Some(row) = self.rows.get(key) else {
            return 0;
        };
        let mut depth = 0;
        let mut cur = label;
        while let Some(p) = row.parent.get(cur) {
            depth += 1;
            cur = p;
        }
        depth
    }

    pub fn is_expanded(&self, key: &K, label: &L) -> bool {
        self.rows.get(key).is_some_and(|row| row.expanded.contains(label))
    }

    /// The gate on right knowledge expansions: `label` has not been expanded
    /// for this formula and its chain is shorter than `max`.
    pub fn may_expand(&self, key: &K, label: &L, max: usize) -> bool {
        !self.is_expanded(key, label) && self.depth(key, label) < max
    }

    pub fn record(&mut self, key: K, max: usize, label: L, fresh: L) {
        let row = self.row_mut(key, max);
        row.expanded.insert(label.clone());
        row.parent.insert(fresh, label);
    }

    pub fn mark_expanded(&mut self, key: K, max: usize, label: L) {
        self.row_mut(key, max).expanded.insert(label);
    }

    pub fn link(&mut self, key: K, max: usize, parent: L, child: L) {
        self.row_mut(key, max).parent.insert(child, parent);
    }

    fn row_mut(&mut self, key: K, max: usize) -> &mut RkRow<L> {
        self.rows.entry(key).or_insert_with(|| RkRow {
            max,
            expanded: BTreeSet::new(),
            parent: BTreeMap::new(),
        })
    }

    /// Total number of recorded chain links.
    pub fn links(&self) -> usize {
        self.rows.values().map(|r| r.parent.len()).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableLK {
    pub entries: BTreeSet<(LabelledFormula, RelAtom)>,
}

impl TableLK {
    pub fn contains(&self, principal: &LabelledFormula, relation: &RelAtom) -> bool {
        self.entries.contains(&(principal.clone(), relation.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rows are keyed by the group and body of `K_I A`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TableRK {
    pub max: BTreeMap<Group, usize>,
    pub table: RkTable<(Group, Formula), Label>,
}

impl TableRK {
    /// Chain bound for the group; groups absent from the root get 1.
    pub fn max_for(&self, group: &Group) -> usize {
        self.max.get(group).copied().unwrap_or(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoopTables {
    pub lk: TableLK,
    pub rk: TableRK,
}

/// Empty tables with chain bounds `n(K_I) + 1` computed on the root sequent.
pub fn init_tables(root: &Sequent) -> LoopTables {
    init_tables_with(root, ChainBound::PerGroup)
}

pub fn init_tables_with(root: &Sequent, bound: ChainBound) -> LoopTables {
    let counts = negative_k_counts(root);
    let total: usize = counts.values().sum();
    let max = knowledge_groups(root)
        .into_iter()
        .map(|g| {
            let n = match bound {
                ChainBound::PerGroup => counts.get(&g).copied().unwrap_or(0),
                ChainBound::Aggregate => total,
            };
            (g, n + 1)
        })
        .collect();
    LoopTables { lk: TableLK::default(), rk: TableRK { max, table: RkTable::new() } }
}

/// Chain length of `label` in the row for `K_group formula`.
pub fn chain_depth(table: &TableRK, group: &Group, formula: &Formula, label: &Label) -> usize {
    table.table.depth(&(group.clone(), formula.clone()), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Sequent;

    fn ga() -> Group {
        Group::new(["a"])
    }

    #[test]
    fn chain_depths() {
        let p = Formula::atom("p");
        let mut t = init_tables(&Sequent::goal("s", Formula::know(ga(), p.clone())));
        assert_eq!(t.rk.max_for(&ga()), 1);
        assert_eq!(chain_depth(&t.rk, &ga(), &p, &Label::new("s")), 0);
        let key = (ga(), p.clone());
        t.rk.table.record(key.clone(), 3, Label::new("s"), Label::new("w0"));
        assert_eq!(chain_depth(&t.rk, &ga(), &p, &Label::new("w0")), 1);
        t.rk.table.record(key.clone(), 3, Label::new("w0"), Label::new("w1"));
        assert_eq!(chain_depth(&t.rk, &ga(), &p, &Label::new("w1")), 2);
        assert!(!t.rk.table.may_expand(&key, &Label::new("s"), 3));
        assert!(t.rk.table.may_expand(&key, &Label::new("w1"), 3));
        assert!(!t.rk.table.may_expand(&key, &Label::new("w1"), 2));
        assert_eq!(t.rk.table.links(), 2);
    }

    #[test]
    fn bounds_from_root() {
        let kp = Formula::know(ga(), Formula::atom("p"));
        let root = Sequent::new().assume("s", kp.clone()).conclude("s", Formula::know(ga(), kp));
        let t = init_tables(&root);
        assert_eq!(t.rk.max_for(&ga()), 2);
        let none = init_tables(&Sequent::goal("s", Formula::atom("p")));
        assert!(none.rk.max.is_empty() && none.rk.table.is_empty());

        let kb = Formula::know(Group::new(["b"]), Formula::atom("q"));
        let root = Sequent::new()
            .assume("s", Formula::know(ga(), Formula::atom("p")))
            .assume("s", kb.clone())
            .conclude("s", kb);
        let agg = init_tables_with(&root, ChainBound::Aggregate);
        assert_eq!(agg.rk.max_for(&ga()), 3);
        assert_eq!(init_tables(&root).rk.max_for(&Group::new(["b"])), 2);
    }
}
