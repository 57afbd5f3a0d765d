//! Root and mandatory-child reduction.
//!
//! t-sets that mention the root feature, or a feature that is logically
//! equivalent to another surviving feature, never need explicit coverage:
//! any row covering the corresponding t-set over surviving features covers
//! them too. This module finds those features with SAT tests, maps the
//! value space onto the survivors, rewrites the constraints, and expands
//! arrays generated on the reduced space back to full width.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cnf::{Clause, CnfFormula, Literal, Value};
use crate::fm::FeatureId;
use crate::sat::{SolveResult, Solver};
use crate::tsets::{CoveringArray, Row};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("the constraints have no valid product")]
    Unsatisfiable,
    #[error("constraint {0} became empty after reduction")]
    EmptyClause(usize),
    #[error("row {row} has width {width}, expected {expected}")]
    RowWidth { row: usize, width: usize, expected: usize },
}

/// Root test: `f` is core when the constraints force its selection.
pub fn root_test(cnf: &CnfFormula, f: FeatureId) -> bool {
    root_test_with(&Solver::new(cnf), f)
}

fn root_test_with(solver: &Solver, f: FeatureId) -> bool {
    solver.solve(&[Literal::feature(f, false)]) == SolveResult::Unsat
}

/// Mandatory child test: `f1` and `f2` always share a polarity.
pub fn mandatory_child_test(cnf: &CnfFormula, f1: FeatureId, f2: FeatureId) -> bool {
    assert_ne!(f1, f2);
    let solver = Solver::new(cnf);
    let differ = |a: bool| solver.solve(&[Literal::feature(f1, a), Literal::feature(f2, !a)]).is_sat();
    !differ(false) && !differ(true)
}

/// Root feature plus every feature merged into a lower-indexed survivor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionSet {
    num_features: usize,
    root: Option<FeatureId>,
    /// child → representative; representatives are the root or survivors
    mandatories: BTreeMap<FeatureId, FeatureId>,
}

impl ReductionSet {
    pub fn new(
        num_features: usize,
        root: Option<FeatureId>,
        mandatories: BTreeMap<FeatureId, FeatureId>,
    ) -> Self {
        ReductionSet { num_features, root, mandatories }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// `None` only for constraint sets without any core feature.
    pub fn root(&self) -> Option<FeatureId> {
        self.root
    }

    pub fn mandatories(&self) -> &BTreeMap<FeatureId, FeatureId> {
        &self.mandatories
    }

    pub fn reduceable(&self) -> BTreeSet<FeatureId> {
        self.root.into_iter().chain(self.mandatories.keys().copied()).collect()
    }

    /// `m`, the number of reduceable features.
    pub fn len(&self) -> usize {
        self.mandatories.len() + self.root.is_some() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_reduceable(&self, f: FeatureId) -> bool {
        self.root == Some(f) || self.mandatories.contains_key(&f)
    }

    /// Features that stay in the annealed space, ascending.
    pub fn survivors(&self) -> Vec<FeatureId> {
        (0..self.num_features).map(FeatureId).filter(|&f| !self.is_reduceable(f)).collect()
    }
}

/// Finds the root (first core feature) and partitions the remaining
/// features into equivalence classes; every class member above the lowest
/// index is mapped to that lowest member. Core features join the root.
pub fn find_mand_and_root(cnf: &CnfFormula) -> Result<ReductionSet, ReductionError> {
    let n = cnf.num_features();
    let solver = Solver::new(cnf);
    // Models seen so far; a feature deselected in any of them is not core,
    // two features that differ in any of them are not equivalent.
    let mut witnesses: Vec<Vec<bool>> = Vec::new();
    match solver.solve(&[]) {
        SolveResult::Sat(m) => witnesses.push(m.into_inner()),
        SolveResult::Unsat => return Err(ReductionError::Unsatisfiable),
    }

    let mut core = vec![false; n];
    for f in 0..n {
        if witnesses.iter().any(|w| !w[f]) {
            continue;
        }
        match solver.solve(&[Literal::feature(FeatureId(f), false)]) {
            SolveResult::Sat(m) => witnesses.push(m.into_inner()),
            SolveResult::Unsat => core[f] = true,
        }
    }

    let root = core.iter().position(|&c| c).map(FeatureId);
    let mut mandatories = BTreeMap::new();
    let mut representatives: Vec<usize> = Vec::new();
    for f in 0..n {
        if core[f] {
            if Some(FeatureId(f)) != root {
                mandatories.insert(FeatureId(f), root.expect("a core feature exists"));
            }
            continue;
        }
        let mut merged = None;
        'reps: for &r in &representatives {
            if witnesses.iter().any(|w| w[r] != w[f]) {
                continue;
            }
            for r_selected in [false, true] {
                let probe = [Literal::feature(FeatureId(r), r_selected), Literal::feature(FeatureId(f), !r_selected)];
                if let SolveResult::Sat(m) = solver.solve(&probe) {
                    witnesses.push(m.into_inner());
                    continue 'reps;
                }
            }
            merged = Some(r);
            break;
        }
        match merged {
            Some(r) => {
                mandatories.insert(FeatureId(f), FeatureId(r));
            }
            None => representatives.push(f),
        }
    }

    let rset = ReductionSet { num_features: n, root, mandatories };
    debug_assert!(rset.mandatories.iter().all(|(&c, &p)| {
        if Some(p) == rset.root {
            root_test_with(&solver, c)
        } else {
            mandatory_child_test(cnf, p, c)
        }
    }));
    Ok(rset)
}

/// Old ↔ new value maps between the full and the reduced space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueMapping {
    old_to_new: Vec<Value>,
    new_to_old: Vec<Value>,
    reduced_features: usize,
}

impl ValueMapping {
    pub fn old_to_new(&self, v: Value) -> Value {
        self.old_to_new[v.0 as usize]
    }

    /// Defined on the reduced range and, when there is a root, on the two
    /// values just above it.
    pub fn new_to_old(&self, v: Value) -> Value {
        self.new_to_old[v.0 as usize]
    }

    /// `n − m`.
    pub fn reduced_features(&self) -> usize {
        self.reduced_features
    }

    pub fn old_values(&self) -> usize {
        self.old_to_new.len()
    }

    pub fn new_values(&self) -> usize {
        self.new_to_old.len()
    }

    /// True for the out-of-range pair that stands for the root.
    pub fn is_root_value(&self, v: Value) -> bool {
        v.0 as usize >= 2 * self.reduced_features
    }
}

pub fn generate_mappings(rset: &ReductionSet) -> ValueMapping {
    let n = rset.num_features;
    let survivors = rset.survivors();
    let k = survivors.len();
    let mut pair_of = vec![usize::MAX; n];
    let mut new_to_old = Vec::with_capacity(2 * k + 2);
    for (new, &f) in survivors.iter().enumerate() {
        pair_of[f.0] = new;
        new_to_old.push(Value::selected(f));
        new_to_old.push(Value::deselected(f));
    }
    if let Some(root) = rset.root {
        pair_of[root.0] = k;
        new_to_old.push(Value::selected(root));
        new_to_old.push(Value::deselected(root));
    }
    for (&child, &parent) in &rset.mandatories {
        pair_of[child.0] = pair_of[parent.0];
    }
    let old_to_new = (0..2 * n as u32)
        .map(|v| Value(2 * pair_of[(v / 2) as usize] as u32 + v % 2))
        .collect();
    ValueMapping { old_to_new, new_to_old, reduced_features: k }
}

/// Rewrites every clause through `old_to_new`. Root literals are resolved
/// (the root is always selected), and clauses made tautological by merged
/// features are dropped, so the result stays inside the reduced range.
pub fn adapt_constraints(cnf: &CnfFormula, map: &ValueMapping) -> Result<CnfFormula, ReductionError> {
    let mut clauses: Vec<Clause> = Vec::new();
    'clauses: for (idx, clause) in cnf.clauses().iter().enumerate() {
        let mut lits = Vec::with_capacity(clause.literals().len());
        for &l in clause.literals() {
            let mapped = Literal { value: map.old_to_new(l.value), negated: l.negated };
            if map.is_root_value(mapped.value) {
                if mapped.requirement().1 {
                    continue 'clauses;
                }
                continue;
            }
            lits.push(mapped);
        }
        let Some(c) = Clause::new(lits) else {
            return Err(ReductionError::EmptyClause(idx));
        };
        if !c.is_tautology() && !clauses.contains(&c) {
            clauses.push(c);
        }
    }
    Ok(CnfFormula::new(map.reduced_features, clauses).expect("mapped values lie in the reduced range"))
}

/// First expansion step: each reduced value replaced by its old value.
pub fn map_row_to_old(row: &[Value], map: &ValueMapping) -> Vec<Value> {
    let mut out: Vec<Value> = row.iter().map(|&v| map.new_to_old(v)).collect();
    out.sort();
    out
}

/// Expands one reduced row: map values back, select the root, then give each
/// merged feature its representative's polarity.
pub fn expand_row(row: &[Value], map: &ValueMapping, rset: &ReductionSet) -> Row {
    let mut selected = vec![false; rset.num_features];
    for v in map_row_to_old(row, map) {
        selected[v.feature().0] = v.is_selection();
    }
    if let Some(root) = rset.root {
        selected[root.0] = true;
    }
    for (&child, &parent) in &rset.mandatories {
        selected[child.0] = selected[parent.0];
    }
    Row::from_selection(&selected)
}

pub fn expand(
    tca: &CoveringArray,
    map: &ValueMapping,
    rset: &ReductionSet,
) -> Result<CoveringArray, ReductionError> {
    let mut rows = Vec::with_capacity(tca.rows.len());
    for (i, row) in tca.rows.iter().enumerate() {
        if row.width() != map.reduced_features {
            return Err(ReductionError::RowWidth { row: i, width: row.width(), expected: map.reduced_features });
        }
        rows.push(expand_row(row.values(), map, rset));
    }
    Ok(CoveringArray::new(tca.strength, rset.num_features, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::encode_fm_to_cnf;
    use crate::fixtures;
    use crate::fm::{parse_feature_model, FeatureModel};

    fn aircraft() -> (FeatureModel, CnfFormula) {
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        let cnf = encode_fm_to_cnf(&fm);
        (fm, cnf)
    }

    fn id(fm: &FeatureModel, name: &str) -> FeatureId {
        fm.id_of(name).unwrap()
    }

    fn clause(lits: &[Literal]) -> Clause {
        Clause::new(lits.to_vec()).unwrap()
    }

    fn values(vs: &[u32]) -> Vec<Value> {
        vs.iter().map(|&v| Value(v)).collect()
    }

    #[test]
    fn root_tests() {
        let (fm, cnf) = aircraft();
        assert!(root_test(&cnf, id(&fm, "Aircraft")));
        assert!(!root_test(&cnf, id(&fm, "Engine")));
        assert!(root_test(&cnf, id(&fm, "Wing")));
    }

    #[test]
    fn mandatory_child_tests() {
        let (fm, cnf) = aircraft();
        assert!(mandatory_child_test(&cnf, id(&fm, "Metal"), id(&fm, "Rust")));
        assert!(mandatory_child_test(&cnf, id(&fm, "Aircraft"), id(&fm, "Wing")));
        assert!(!mandatory_child_test(&cnf, id(&fm, "Piston"), id(&fm, "Jet")));
    }

    #[test]
    fn aircraft_reduction_set() {
        let (fm, cnf) = aircraft();
        let rset = find_mand_and_root(&cnf).unwrap();
        assert_eq!(rset.root(), Some(id(&fm, "Aircraft")));
        let expected: BTreeMap<_, _> = [("Wing", "Aircraft"), ("Materials", "Aircraft"), ("Rust", "Metal")]
            .into_iter()
            .map(|(c, p)| (id(&fm, c), id(&fm, p)))
            .collect();
        assert_eq!(rset.mandatories(), &expected);
        assert_eq!(rset.len(), 4);
    }

    #[test]
    fn single_root_model() {
        let cnf = encode_fm_to_cnf(&parse_feature_model("Root\n").unwrap());
        let rset = find_mand_and_root(&cnf).unwrap();
        assert_eq!(rset.root(), Some(FeatureId(0)));
        assert!(rset.mandatories().is_empty());
        assert_eq!(rset.len(), 1);
    }

    #[test]
    fn mandatory_chain_joins_root_class() {
        let cnf = encode_fm_to_cnf(&parse_feature_model("R\n  A: mandatory\n    B: mandatory\n").unwrap());
        let rset = find_mand_and_root(&cnf).unwrap();
        assert_eq!(rset.reduceable(), [0, 1, 2].into_iter().map(FeatureId).collect());
        assert!(rset.mandatories().values().all(|&p| p == FeatureId(0)));
    }

    #[test]
    fn optional_chain_merges_to_lowest_member() {
        let cnf = encode_fm_to_cnf(&parse_feature_model("R\n  A\n    B: mandatory\n      C: mandatory\n").unwrap());
        let rset = find_mand_and_root(&cnf).unwrap();
        assert_eq!(rset.mandatories().get(&FeatureId(2)), Some(&FeatureId(1)));
        assert_eq!(rset.mandatories().get(&FeatureId(3)), Some(&FeatureId(1)));
    }

    #[test]
    fn unsatisfiable_constraints_rejected() {
        let (_, cnf) = aircraft();
        let void = cnf.with_clause(clause(&[Literal::neg(0)])).unwrap();
        assert_eq!(find_mand_and_root(&void), Err(ReductionError::Unsatisfiable));
    }

    #[test]
    fn aircraft_mappings_match_table() {
        let (_, cnf) = aircraft();
        let map = generate_mappings(&find_mand_and_root(&cnf).unwrap());
        assert_eq!(map.old_to_new(Value(0)), Value(20));
        assert_eq!(map.new_to_old(Value(12)), Value(18));
        // new selected value per feature in list order
        let expected_new = [20, 20, 0, 20, 2, 4, 6, 8, 10, 12, 14, 16, 18, 12];
        for (f, &new) in expected_new.iter().enumerate() {
            assert_eq!(map.old_to_new(Value(2 * f as u32)), Value(new));
            assert_eq!(map.old_to_new(Value(2 * f as u32 + 1)), Value(new + 1));
        }
        assert_eq!(map.reduced_features(), 10);
        assert_eq!(map.old_values(), 28);
        assert_eq!(map.new_values(), 22);
    }

    #[test]
    fn new_to_old_inverts_survivors() {
        let (_, cnf) = aircraft();
        let rset = find_mand_and_root(&cnf).unwrap();
        let map = generate_mappings(&rset);
        for f in rset.survivors() {
            for v in [Value::selected(f), Value::deselected(f)] {
                assert_eq!(map.new_to_old(map.old_to_new(v)), v);
            }
        }
    }

    #[test]
    fn adapted_constraints() {
        let (_, cnf) = aircraft();
        let map = generate_mappings(&find_mand_and_root(&cnf).unwrap());
        let reduced = adapt_constraints(&cnf, &map).unwrap();
        assert_eq!(reduced.num_features(), 10);
        let has = |c: Clause| reduced.clauses().contains(&c);
        assert!(has(clause(&[Literal::neg(12), Literal::neg(14), Literal::pos(2)])));
        assert!(has(clause(&[Literal::neg(8), Literal::neg(10)])));
        // Engine ⇒ Aircraft disappears with the root literal.
        assert!(!reduced.clauses().iter().any(|c| c.literals() == [Literal::neg(0)]));
        assert!(reduced.clauses().iter().all(|c| !c.is_tautology()));
    }

    #[test]
    fn root_deselection_literal_is_dropped() {
        let cnf = CnfFormula::new(2, vec![clause(&[Literal::pos(0)]), clause(&[Literal::neg(0), Literal::pos(2)])]).unwrap();
        let rset = find_mand_and_root(&cnf).unwrap();
        // both features core: everything collapses into the root
        assert_eq!(rset.len(), 2);
        let map = generate_mappings(&rset);
        let reduced = adapt_constraints(&cnf, &map).unwrap();
        assert_eq!(reduced.num_features(), 0);
        assert!(reduced.clauses().is_empty());
        // root deselected (1) is false and vanishes from the clause
        let cnf = CnfFormula::new(
            3,
            vec![clause(&[Literal::pos(0)]), clause(&[Literal::pos(1), Literal::pos(2), Literal::pos(4)])],
        )
        .unwrap();
        let map = generate_mappings(&find_mand_and_root(&cnf).unwrap());
        let reduced = adapt_constraints(&cnf, &map).unwrap();
        assert_eq!(reduced.clauses(), &[clause(&[Literal::pos(0), Literal::pos(2)])]);
    }

    #[test]
    fn expansion_matches_running_example() {
        let (_, cnf) = aircraft();
        let rset = find_mand_and_root(&cnf).unwrap();
        let map = generate_mappings(&rset);
        let reduced = values(&[1, 2, 5, 7, 9, 11, 12, 15, 17, 19]);
        assert_eq!(map_row_to_old(&reduced, &map), values(&[5, 8, 11, 13, 15, 17, 18, 21, 23, 25]));
        let row = expand_row(&reduced, &map, &rset);
        assert_eq!(row.values(), values(&[0, 2, 5, 6, 8, 11, 13, 15, 17, 18, 21, 23, 25, 26]));
        assert!(cnf.holds(&row.selection()));
    }

    #[test]
    fn deselected_parent_deselects_child() {
        let (fm, cnf) = aircraft();
        let rset = find_mand_and_root(&cnf).unwrap();
        let map = generate_mappings(&rset);
        // Metal deselected (13), Wood selected (14)
        let row = expand_row(&values(&[1, 3, 5, 6, 9, 11, 13, 14, 17, 19]), &map, &rset);
        assert!(!row.is_selected(id(&fm, "Rust")));
        assert!(cnf.holds(&row.selection()));
    }

    #[test]
    fn expanding_empty_array() {
        let (_, cnf) = aircraft();
        let rset = find_mand_and_root(&cnf).unwrap();
        let map = generate_mappings(&rset);
        let out = expand(&CoveringArray::new(3, 10, vec![]), &map, &rset).unwrap();
        assert!(out.rows.is_empty());
        assert_eq!(out.num_features, 14);
    }
}
