//! t-sets, rows, covering arrays and the coverage check.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::cnf::{CnfFormula, Literal, Value};
use crate::fm::FeatureId;
use crate::sat::{SolveResult, Solver};

/// Default number of uncovered t-sets listed in a coverage report.
pub const DEFAULT_MISSING_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TSetError {
    #[error("feature {0} appears twice in a t-set")]
    DuplicateFeature(FeatureId),
    #[error("row {row}: {msg}")]
    MalformedRow { row: usize, msg: String },
    #[error("row {row} has width {width}, expected {expected}")]
    RowWidth { row: usize, width: usize, expected: usize },
    #[error("row {row} violates the constraints")]
    InvalidRow { row: usize },
    #[error("array file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// A partial configuration: `t` features, each with a polarity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TSet {
    // (feature, selected), ascending by feature
    entries: Vec<(FeatureId, bool)>,
}

impl TSet {
    pub fn new(mut entries: Vec<(FeatureId, bool)>) -> Result<Self, TSetError> {
        entries.sort();
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(TSetError::DuplicateFeature(w[0].0));
            }
        }
        Ok(TSet { entries })
    }

    /// Builds a t-set from selected and deselected feature lists.
    pub fn from_sets(sel: &[FeatureId], desel: &[FeatureId]) -> Result<Self, TSetError> {
        let entries = sel.iter().map(|&f| (f, true)).chain(desel.iter().map(|&f| (f, false))).collect();
        TSet::new(entries)
    }

    pub fn entries(&self) -> &[(FeatureId, bool)] {
        &self.entries
    }

    pub fn strength(&self) -> usize {
        self.entries.len()
    }

    pub fn sel(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.entries.iter().filter(|e| e.1).map(|e| e.0)
    }

    pub fn desel(&self) -> impl Iterator<Item = FeatureId> + '_ {
        self.entries.iter().filter(|e| !e.1).map(|e| e.0)
    }

    pub fn literals(&self) -> Vec<Literal> {
        self.entries.iter().map(|&(f, s)| Literal::feature(f, s)).collect()
    }

    pub fn display_with<'a>(&'a self, names: &'a [&'a str]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a TSet, &'a [&'a str]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let list = |want: bool| -> Vec<&str> {
                    self.0.entries.iter().filter(|e| e.1 == want).map(|e| self.1[e.0 .0]).collect()
                };
                write!(f, "[{{{}}}, {{{}}}]", list(true).join(", "), list(false).join(", "))
            }
        }
        D(self, names)
    }
}

impl fmt::Display for TSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self.entries.iter().map(|&(id, s)| Value::of(id, s).to_string()).collect();
        write!(f, "{{{}}}", values.join(", "))
    }
}

/// One full configuration as ascending values, one per feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Row {
    values: Vec<Value>,
}

impl Row {
    pub fn from_selection(selected: &[bool]) -> Self {
        Row { values: selected.iter().enumerate().map(|(i, &s)| Value::of(FeatureId(i), s)).collect() }
    }

    /// Accepts values in any order; each feature must appear exactly once.
    pub fn from_values(mut values: Vec<Value>) -> Result<Self, String> {
        values.sort();
        for (i, v) in values.iter().enumerate() {
            if v.feature().0 != i {
                return Err(format!("value {v} does not fit column {i}"));
            }
        }
        Ok(Row { values })
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn width(&self) -> usize {
        self.values.len()
    }

    pub fn is_selected(&self, f: FeatureId) -> bool {
        self.values[f.0].is_selection()
    }

    pub fn selection(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.is_selection()).collect()
    }
}

impl fmt::Display for Row {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Rows that together cover every valid t-set of a feature space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringArray {
    pub strength: usize,
    pub num_features: usize,
    pub rows: Vec<Row>,
}

impl CoveringArray {
    pub fn new(strength: usize, num_features: usize, rows: Vec<Row>) -> Self {
        CoveringArray { strength, num_features, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Drops repeated rows, keeping first occurrences in order.
    pub fn dedup_rows(&mut self) {
        let mut seen = BTreeSet::new();
        self.rows.retain(|r| seen.insert(r.clone()));
    }

    /// Array file: row count, then one line of ascending values per row.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{}\n", self.rows.len());
        for r in &self.rows {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}

/// Reads an array file. The width comes from `num_features`.
pub fn parse_array_file(text: &str, strength: usize, num_features: usize) -> Result<CoveringArray, TSetError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.is_empty())
        .ok_or(TSetError::Malformed { line: 1, msg: "missing row count".into() })?;
    let count: usize = header
        .parse()
        .map_err(|_| TSetError::Malformed { line: hline, msg: format!("expected a row count, found `{header}`") })?;
    let mut rows = Vec::with_capacity(count);
    for (line, l) in lines {
        if l.is_empty() && num_features > 0 {
            continue;
        }
        if rows.len() == count {
            if l.is_empty() {
                continue;
            }
            return Err(TSetError::Malformed { line, msg: format!("more than {count} rows") });
        }
        let values = l
            .split_whitespace()
            .map(|s| s.parse::<u32>().map(Value))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| TSetError::Malformed { line, msg: "expected non-negative values".into() })?;
        if values.len() != num_features {
            return Err(TSetError::RowWidth { row: rows.len(), width: values.len(), expected: num_features });
        }
        let row = Row::from_values(values).map_err(|msg| TSetError::MalformedRow { row: rows.len(), msg })?;
        rows.push(row);
    }
    if rows.len() != count {
        return Err(TSetError::Malformed { line: hline, msg: format!("declared {count} rows, found {}", rows.len()) });
    }
    Ok(CoveringArray::new(strength, num_features, rows))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of t-sets over `n` features: `C(n, t) · 2^t`.
pub fn count_tsets(n: usize, t: usize) -> u128 {
    binomial(n, t) << t
}

/// Lexicographic stream of t-sets over the features not in `excluded`:
/// feature combinations first, then polarity patterns with the first
/// feature as the most significant bit (0 = selected).
pub struct TSetIter {
    features: Vec<FeatureId>,
    t: usize,
    combo: Vec<usize>,
    mask: u32,
    done: bool,
}

impl Iterator for TSetIter {
    type Item = TSet;

    fn next(&mut self) -> Option<TSet> {
        if self.done {
            return None;
        }
        let entries = self
            .combo
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.features[c], self.mask >> (self.t - 1 - i) & 1 == 0))
            .collect();
        let item = TSet { entries };
        self.mask += 1;
        if self.mask == 1 << self.t {
            self.mask = 0;
            self.done = !next_combination(&mut self.combo, self.features.len());
        }
        Some(item)
    }
}

/// Advances `combo` to the next lexicographic t-combination of `0..k`.
fn next_combination(combo: &mut [usize], k: usize) -> bool {
    let t = combo.len();
    let mut i = t;
    while i > 0 {
        i -= 1;
        if combo[i] < k - t + i {
            combo[i] += 1;
            for j in i + 1..t {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn enumerate_tsets(n: usize, t: usize, excluded: &BTreeSet<FeatureId>) -> TSetIter {
    let features: Vec<FeatureId> = (0..n).map(FeatureId).filter(|f| !excluded.contains(f)).collect();
    let done = t > features.len();
    TSetIter { combo: (0..t).collect(), features, t, mask: 0, done }
}

/// Definition-level validity: some model of `cnf` covers `ts`.
pub fn is_valid_tset(cnf: &CnfFormula, ts: &TSet) -> bool {
    Solver::new(cnf).solve(&ts.literals()).is_sat()
}

pub fn covers(row: &Row, ts: &TSet) -> bool {
    ts.entries.iter().all(|&(f, s)| row.is_selected(f) == s)
}

/// Dense indexing of all t-sets over a feature subset.
///
/// A t-set over local positions `c0 < … < c(t-1)` with polarity mask `m`
/// (bit `i` set when `ci` is deselected) gets id `rank(c) · 2^t + m`, where
/// `rank` is the colexicographic combination rank `Σ C(ci, i+1)`.
#[derive(Debug, Clone)]
pub struct TSetSpace {
    features: Vec<FeatureId>,
    t: usize,
    // binom[n][k] for n <= features.len(), k <= t
    binom: Vec<Vec<usize>>,
}

impl TSetSpace {
    pub fn new(features: Vec<FeatureId>, t: usize) -> Self {
        let k = features.len();
        let binom = (0..=k).map(|n| (0..=t).map(|r| binomial(n, r) as usize).collect()).collect();
        TSetSpace { features, t, binom }
    }

    pub fn strength(&self) -> usize {
        self.t
    }

    pub fn features(&self) -> &[FeatureId] {
        &self.features
    }

    pub fn binom(&self, n: usize, k: usize) -> usize {
        if k > self.t || n >= self.binom.len() {
            return binomial(n, k) as usize;
        }
        self.binom[n][k]
    }

    pub fn len(&self) -> usize {
        if self.t > self.features.len() {
            return 0;
        }
        self.binom(self.features.len(), self.t) << self.t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Colex rank of ascending local positions.
    pub fn rank(&self, combo: &[usize]) -> usize {
        combo.iter().enumerate().map(|(i, &c)| self.binom(c, i + 1)).sum()
    }

    /// Calls `f(id)` for every t-set covered by a full selection vector.
    pub fn for_each_covered(&self, selected: &[bool], mut f: impl FnMut(usize)) {
        let (k, t) = (self.features.len(), self.t);
        if t > k {
            return;
        }
        let mut combo: Vec<usize> = (0..t).collect();
        loop {
            let mut mask = 0;
            for (i, &c) in combo.iter().enumerate() {
                if !selected[self.features[c].0] {
                    mask |= 1 << i;
                }
            }
            f(self.rank(&combo) << t | mask);
            if !next_combination(&mut combo, k) {
                break;
            }
        }
    }

    pub fn decode(&self, id: usize) -> TSet {
        let t = self.t;
        let mask = id & ((1 << t) - 1);
        let mut rank = id >> t;
        let mut combo = vec![0; t];
        let mut hi = self.features.len();
        for i in (0..t).rev() {
            let mut c = i;
            while c + 1 < hi && self.binom(c + 1, i + 1) <= rank {
                c += 1;
            }
            rank -= self.binom(c, i + 1);
            combo[i] = c;
            hi = c;
        }
        let entries = combo.iter().enumerate().map(|(i, &c)| (self.features[c], mask >> i & 1 == 0)).collect();
        TSet { entries }
    }

    /// Validity flag per id. Each SAT witness marks every t-set it covers,
    /// so solver calls are only made for t-sets no earlier witness reached.
    pub fn valid_flags(&self, solver: &Solver) -> Vec<bool> {
        let mut valid = vec![false; self.len()];
        for id in 0..valid.len() {
            if valid[id] {
                continue;
            }
            if let SolveResult::Sat(model) = solver.solve(&self.decode(id).literals()) {
                self.for_each_covered(model.selected(), |j| valid[j] = true);
            }
        }
        valid
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub covered: usize,
    pub total: usize,
    /// Uncovered valid t-sets in lexicographic order, truncated at the cap.
    pub missing: Vec<TSet>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.covered == self.total
    }

    pub fn percent(&self) -> f64 {
        if self.total == 0 {
            100.0
        } else {
            100.0 * self.covered as f64 / self.total as f64
        }
    }
}

/// Counts the valid t-sets over non-excluded features and how many of them
/// the array covers. Every row must satisfy `cnf`.
pub fn verify_coverage(
    array: &CoveringArray,
    cnf: &CnfFormula,
    excluded: &BTreeSet<FeatureId>,
    missing_cap: usize,
) -> Result<CoverageReport, TSetError> {
    let n = cnf.num_features();
    let mut selections = Vec::with_capacity(array.rows.len());
    for (i, row) in array.rows.iter().enumerate() {
        if row.width() != n {
            return Err(TSetError::RowWidth { row: i, width: row.width(), expected: n });
        }
        let sel = row.selection();
        if !cnf.holds(&sel) {
            return Err(TSetError::InvalidRow { row: i });
        }
        selections.push(sel);
    }
    let features = (0..n).map(FeatureId).filter(|f| !excluded.contains(f)).collect();
    let space = TSetSpace::new(features, array.strength);
    let valid = space.valid_flags(&Solver::new(cnf));
    let mut covered = vec![false; space.len()];
    for sel in &selections {
        space.for_each_covered(sel, |id| covered[id] = true);
    }
    let total = valid.iter().filter(|&&v| v).count();
    let mut missing: Vec<TSet> = Vec::new();
    let mut hits = 0;
    for id in 0..space.len() {
        if valid[id] {
            if covered[id] {
                hits += 1;
            } else {
                missing.push(space.decode(id));
            }
        }
    }
    missing.sort();
    missing.truncate(missing_cap);
    Ok(CoverageReport { covered: hits, total, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::encode_fm_to_cnf;
    use crate::fixtures;
    use crate::fm::{parse_feature_model, FeatureModel};
    use crate::sat::enumerate_models;
    use proptest::prelude::*;

    fn aircraft() -> (FeatureModel, CnfFormula) {
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        let cnf = encode_fm_to_cnf(&fm);
        (fm, cnf)
    }

    fn named(fm: &FeatureModel, sel: &[&str], desel: &[&str]) -> TSet {
        let ids = |ns: &[&str]| ns.iter().map(|n| fm.id_of(n).unwrap()).collect::<Vec<_>>();
        TSet::from_sets(&ids(sel), &ids(desel)).unwrap()
    }

    fn fs1(fm: &FeatureModel) -> Row {
        let mut sel = vec![false; fm.len()];
        for n in ["Aircraft", "Wing", "High", "Materials", "Metal", "Rust"] {
            sel[fm.id_of(n).unwrap().0] = true;
        }
        Row::from_selection(&sel)
    }

    #[test]
    fn counts() {
        assert_eq!(count_tsets(14, 3), 2912);
        assert_eq!(count_tsets(10, 3), 960);
        assert_eq!(count_tsets(7, 0), 1);
        assert_eq!(count_tsets(2, 3), 0);
    }

    #[test]
    fn enumeration_with_exclusions() {
        let excluded: BTreeSet<_> = [0, 1, 3, 13].into_iter().map(FeatureId).collect();
        let all: Vec<_> = enumerate_tsets(14, 3, &excluded).collect();
        assert_eq!(all.len(), 960);
        assert!(all.iter().all(|ts| ts.entries().iter().all(|e| !excluded.contains(&e.0))));
        let everything: BTreeSet<_> = (0..4).map(FeatureId).collect();
        assert_eq!(enumerate_tsets(4, 2, &everything).count(), 0);
    }

    #[test]
    fn pair_enumeration_order() {
        let got: Vec<_> = enumerate_tsets(2, 2, &BTreeSet::new()).collect();
        let f = |a, b| TSet::new(vec![(FeatureId(0), a), (FeatureId(1), b)]).unwrap();
        assert_eq!(got, vec![f(true, true), f(true, false), f(false, true), f(false, false)]);
    }

    #[test]
    fn running_example_validity() {
        let (fm, cnf) = aircraft();
        assert!(is_valid_tset(&cnf, &named(&fm, &["Wing", "Piston"], &["Wood"])));
        assert!(!is_valid_tset(&cnf, &named(&fm, &["Metal", "Wood"], &["High"])));
        assert!(!is_valid_tset(&cnf, &named(&fm, &["Piston", "Jet"], &[])));
    }

    #[test]
    fn running_example_coverage() {
        let (fm, _) = aircraft();
        let row = fs1(&fm);
        assert!(covers(&row, &named(&fm, &["Aircraft"], &["Engine", "Wood"])));
        assert!(covers(&row, &named(&fm, &["Metal"], &["Engine", "Wood"])));
        assert!(!covers(&row, &named(&fm, &["Wood"], &["Engine"])));
        assert!(covers(&row, &TSet::new(vec![]).unwrap()));
    }

    #[test]
    fn duplicate_feature_in_tset_rejected() {
        assert!(TSet::new(vec![(FeatureId(1), true), (FeatureId(1), false)]).is_err());
    }

    #[test]
    fn row_from_values_validation() {
        assert!(Row::from_values(vec![Value(2), Value(1), Value(5)]).is_ok());
        assert!(Row::from_values(vec![Value(0), Value(1)]).is_err());
        assert!(Row::from_values(vec![Value(0), Value(4)]).is_err());
    }

    #[test]
    fn space_decode_inverts_covered_ids() {
        let features: Vec<_> = [1, 2, 4, 5, 7, 9].into_iter().map(FeatureId).collect();
        let space = TSetSpace::new(features, 3);
        let mut ids = BTreeSet::new();
        for ts in enumerate_tsets(10, 3, &[0, 3, 6, 8].into_iter().map(FeatureId).collect()) {
            let mut sel = vec![false; 10];
            for &(f, s) in ts.entries() {
                sel[f.0] = s;
            }
            let mut found = None;
            space.for_each_covered(&sel, |id| {
                if space.decode(id) == ts {
                    found = Some(id);
                }
            });
            ids.insert(found.expect("t-set has an id"));
        }
        assert_eq!(ids.len(), space.len());
        assert_eq!(*ids.iter().next_back().unwrap(), space.len() - 1);
    }

    #[test]
    fn empty_array_covers_nothing() {
        let (_, cnf) = aircraft();
        let report = verify_coverage(&CoveringArray::new(2, 14, vec![]), &cnf, &BTreeSet::new(), 5).unwrap();
        assert_eq!(report.covered, 0);
        assert!(report.total > 0);
        assert_eq!(report.missing.len(), 5);
    }

    #[test]
    fn all_products_cover_everything() {
        let (fm, cnf) = aircraft();
        let rows = enumerate_models(&cnf, 1 << 14)
            .unwrap()
            .iter()
            .map(|a| Row::from_selection(a.selected()))
            .collect();
        let array = CoveringArray::new(3, fm.len(), rows);
        let report = verify_coverage(&array, &cnf, &BTreeSet::new(), 10).unwrap();
        assert!(report.is_complete());
        assert!(report.missing.is_empty());
        assert_eq!(report.percent(), 100.0);
    }

    #[test]
    fn invalid_rows_are_rejected() {
        let (fm, cnf) = aircraft();
        let array = CoveringArray::new(2, fm.len(), vec![Row::from_selection(&vec![false; fm.len()])]);
        assert_eq!(verify_coverage(&array, &cnf, &BTreeSet::new(), 1), Err(TSetError::InvalidRow { row: 0 }));
    }

    #[test]
    fn array_file_round_trip() {
        let (fm, _) = aircraft();
        let array = CoveringArray::new(3, fm.len(), vec![fs1(&fm)]);
        let text = array.to_file_string();
        assert_eq!(text, "1\n0 2 5 6 8 11 13 15 17 18 21 23 25 26\n");
        assert_eq!(parse_array_file(&text, 3, fm.len()).unwrap(), array);
        assert!(parse_array_file("2\n0 2\n", 3, 2).is_err());
        assert!(matches!(parse_array_file("1\n0 2 4\n", 3, 2), Err(TSetError::RowWidth { .. })));
    }

    proptest! {
        #[test]
        fn enumeration_count_matches_formula(n in 0usize..=16, t in 0usize..=4) {
            prop_assert_eq!(enumerate_tsets(n, t, &BTreeSet::new()).count() as u128, count_tsets(n, t));
        }

        #[test]
        fn coverage_is_monotone(bits in any::<u16>(), entries in prop::collection::btree_map(0usize..16, any::<bool>(), 0..5), drop in any::<u8>()) {
            let sel: Vec<bool> = (0..16).map(|i| bits >> i & 1 == 1).collect();
            let row = Row::from_selection(&sel);
            let ts = TSet::new(entries.iter().map(|(&f, &s)| (FeatureId(f), s)).collect()).unwrap();
            let mut sub = ts.entries().to_vec();
            if !sub.is_empty() {
                sub.remove(drop as usize % sub.len());
            }
            let sub = TSet::new(sub).unwrap();
            if covers(&row, &ts) {
                prop_assert!(covers(&row, &sub));
            }
        }
    }
}
