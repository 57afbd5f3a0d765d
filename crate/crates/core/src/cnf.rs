//! CNF over CASA values and the two-file CASA input format.
//!
//! Feature `i` owns two values: `2i` (selected) and `2i + 1` (deselected).
//! Every row picks exactly one of them, so the exclusion and totality
//! clauses for each pair are structural and never stored explicitly.

use std::fmt;

use thiserror::Error;

use crate::fm::{CtcFormula, FeatureId, FeatureModel, GroupKind, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value(pub u32);

impl Value {
    pub fn selected(f: FeatureId) -> Self {
        Value(2 * f.0 as u32)
    }

    pub fn deselected(f: FeatureId) -> Self {
        Value(2 * f.0 as u32 + 1)
    }

    pub fn of(f: FeatureId, selected: bool) -> Self {
        if selected {
            Self::selected(f)
        } else {
            Self::deselected(f)
        }
    }

    pub fn feature(self) -> FeatureId {
        FeatureId((self.0 / 2) as usize)
    }

    /// True for the even value of a pair.
    pub fn is_selection(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// The other value of the same feature.
    pub fn complement(self) -> Self {
        Value(self.0 ^ 1)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub value: Value,
    pub negated: bool,
}

impl Literal {
    pub fn pos(value: u32) -> Self {
        Literal { value: Value(value), negated: false }
    }

    pub fn neg(value: u32) -> Self {
        Literal { value: Value(value), negated: true }
    }

    /// Literal true exactly when `f` has the given polarity.
    pub fn feature(f: FeatureId, selected: bool) -> Self {
        Literal { value: Value::selected(f), negated: !selected }
    }

    /// `(feature, polarity)` this literal demands; `¬2i` and `2i+1` agree.
    pub fn requirement(self) -> (FeatureId, bool) {
        (self.value.feature(), self.value.is_selection() != self.negated)
    }

    pub fn holds(self, selected: &[bool]) -> bool {
        let (f, want) = self.requirement();
        selected[f.0] == want
    }

    pub fn negate(self) -> Self {
        Literal { value: self.value, negated: !self.negated }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬{}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

/// Non-empty disjunction; literals kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause(Vec<Literal>);

impl Clause {
    pub fn new(mut literals: Vec<Literal>) -> Option<Self> {
        literals.sort();
        literals.dedup();
        if literals.is_empty() {
            None
        } else {
            Some(Clause(literals))
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.0
    }

    pub fn holds(&self, selected: &[bool]) -> bool {
        self.0.iter().any(|l| l.holds(selected))
    }

    /// True if some pair of literals demands opposite polarities of one feature.
    pub fn is_tautology(&self) -> bool {
        let reqs: Vec<_> = self.0.iter().map(|l| l.requirement()).collect();
        reqs.iter().any(|&(f, p)| reqs.contains(&(f, !p)))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, lit) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("column {column} has {level} values; feature models only allow 2")]
    NonBinaryLevel { column: usize, level: u32 },
    #[error("value {value} out of range for {num_features} features")]
    ValueOutOfRange { value: u32, num_features: usize },
    #[error("header declares {declared} clauses but {found} were found")]
    ClauseCountMismatch { declared: usize, found: usize },
}

/// Clauses over the values of `num_features` features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_features: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_features: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        for c in &clauses {
            for l in c.literals() {
                if l.value.0 as usize >= 2 * num_features {
                    return Err(CnfError::ValueOutOfRange { value: l.value.0, num_features });
                }
            }
        }
        Ok(CnfFormula { num_features, clauses })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Explicit clauses, without the structural per-feature pairs.
    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// `¬2i ∨ ¬(2i+1)` and `2i ∨ 2i+1` for every feature.
    pub fn structural_clauses(&self) -> impl Iterator<Item = Clause> + '_ {
        (0..self.num_features as u32).flat_map(|i| {
            [
                Clause(vec![Literal::neg(2 * i), Literal::neg(2 * i + 1)]),
                Clause(vec![Literal::pos(2 * i), Literal::pos(2 * i + 1)]),
            ]
        })
    }

    /// Explicit and structural clauses together.
    pub fn all_clauses(&self) -> impl Iterator<Item = Clause> + '_ {
        self.clauses.iter().cloned().chain(self.structural_clauses())
    }

    pub fn with_clause(&self, clause: Clause) -> Result<Self, CnfError> {
        let mut clauses = self.clauses.clone();
        clauses.push(clause);
        CnfFormula::new(self.num_features, clauses)
    }

    pub fn holds(&self, selected: &[bool]) -> bool {
        assert_eq!(selected.len(), self.num_features);
        self.clauses.iter().all(|c| c.holds(selected))
    }

    pub fn violations(&self, selected: &[bool]) -> usize {
        self.clauses.iter().filter(|c| !c.holds(selected)).count()
    }
}

/// Translates a feature model to CNF over its values.
pub fn encode_fm_to_cnf(fm: &FeatureModel) -> CnfFormula {
    let mut clauses: Vec<Clause> = Vec::new();
    let mut push = |lits: Vec<Literal>| {
        if let Some(c) = Clause::new(lits) {
            if !c.is_tautology() && !clauses.contains(&c) {
                clauses.push(c);
            }
        }
    };
    let sel = |f: FeatureId| Literal::feature(f, true);
    let not = |f: FeatureId| Literal::feature(f, false);

    push(vec![sel(fm.root())]);
    for (i, feat) in fm.features().iter().enumerate() {
        let id = FeatureId(i);
        if let Some(parent) = feat.parent {
            push(vec![not(id), sel(parent)]);
            if feat.kind == NodeKind::Mandatory {
                push(vec![not(parent), sel(id)]);
            }
        }
    }
    for (i, feat) in fm.features().iter().enumerate() {
        let Some(group) = feat.group else { continue };
        let parent = FeatureId(i);
        let members: Vec<FeatureId> = fm.children(parent).collect();
        let mut any = vec![not(parent)];
        any.extend(members.iter().map(|&m| sel(m)));
        push(any);
        if group == GroupKind::Xor {
            for (k, &a) in members.iter().enumerate() {
                for &b in &members[k + 1..] {
                    push(vec![not(a), not(b)]);
                }
            }
        }
    }
    for ctc in fm.ctcs() {
        for lits in ctc_to_cnf(ctc) {
            push(lits.into_iter().map(|(f, positive)| Literal::feature(f, positive)).collect());
        }
    }
    CnfFormula::new(fm.len(), clauses).expect("encoder only emits in-range values")
}

enum Nnf {
    Lit(FeatureId, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
}

fn to_nnf(e: &CtcFormula, positive: bool) -> Nnf {
    match e {
        CtcFormula::Var(f) => Nnf::Lit(*f, positive),
        CtcFormula::Not(inner) => to_nnf(inner, !positive),
        CtcFormula::And(a, b) if positive => Nnf::And(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, true))),
        CtcFormula::And(a, b) => Nnf::Or(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, false))),
        CtcFormula::Or(a, b) if positive => Nnf::Or(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, true))),
        CtcFormula::Or(a, b) => Nnf::And(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, false))),
        CtcFormula::Implies(a, b) if positive => {
            Nnf::Or(Box::new(to_nnf(a, false)), Box::new(to_nnf(b, true)))
        }
        CtcFormula::Implies(a, b) => Nnf::And(Box::new(to_nnf(a, true)), Box::new(to_nnf(b, false))),
    }
}

fn distribute(e: &Nnf) -> Vec<Vec<(FeatureId, bool)>> {
    match e {
        Nnf::Lit(f, p) => vec![vec![(*f, *p)]],
        Nnf::And(a, b) => {
            let mut out = distribute(a);
            out.extend(distribute(b));
            out
        }
        Nnf::Or(a, b) => {
            let (left, right) = (distribute(a), distribute(b));
            let mut out = Vec::with_capacity(left.len() * right.len());
            for l in &left {
                for r in &right {
                    let mut c = l.clone();
                    c.extend_from_slice(r);
                    out.push(c);
                }
            }
            out
        }
    }
}

/// Naive CNF conversion by distribution; no auxiliary variables.
pub fn ctc_to_cnf(e: &CtcFormula) -> Vec<Vec<(FeatureId, bool)>> {
    distribute(&to_nnf(e, true))
}

/// Contents of the CASA model (properties) file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelFile {
    pub strength: usize,
    pub levels: Vec<u32>,
}

impl ModelFile {
    pub fn binary(strength: usize, num_features: usize) -> Self {
        ModelFile { strength, levels: vec![2; num_features] }
    }

    pub fn num_features(&self) -> usize {
        self.levels.len()
    }
}

impl fmt::Display for ModelFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.strength)?;
        writeln!(f, "{}", self.levels.len())?;
        let levels: Vec<String> = self.levels.iter().map(u32::to_string).collect();
        writeln!(f, "{}", levels.join(" "))
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_count(line: usize, s: &str, what: &str) -> Result<usize, CnfError> {
    s.parse().map_err(|_| CnfError::Malformed { line, msg: format!("expected {what}, found `{s}`") })
}

/// Parses the three-line model file: strength, column count, levels.
/// Blank lines are skipped.
pub fn parse_model_file(text: &str) -> Result<ModelFile, CnfError> {
    let lines: Vec<(usize, &str)> = content_lines(text).collect();
    if lines.len() != 3 {
        let line = lines.get(3).map_or(lines.len() + 1, |l| l.0);
        return Err(CnfError::Malformed { line, msg: format!("expected 3 lines, found {}", lines.len()) });
    }
    let strength = parse_count(lines[0].0, lines[0].1, "the strength")?;
    if strength == 0 {
        return Err(CnfError::Malformed { line: lines[0].0, msg: "strength must be at least 1".into() });
    }
    let k = parse_count(lines[1].0, lines[1].1, "the number of columns")?;
    let levels = lines[2]
        .1
        .split_whitespace()
        .map(|s| {
            s.parse::<u32>().map_err(|_| CnfError::Malformed {
                line: lines[2].0,
                msg: format!("expected a level count, found `{s}`"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if levels.len() != k {
        return Err(CnfError::Malformed {
            line: lines[2].0,
            msg: format!("declared {k} columns but listed {} levels", levels.len()),
        });
    }
    if let Some((column, &level)) = levels.iter().enumerate().find(|(_, &l)| l != 2) {
        return Err(CnfError::NonBinaryLevel { column, level });
    }
    Ok(ModelFile { strength, levels })
}

fn parse_clause_line(line: usize, s: &str, num_features: usize) -> Result<Clause, CnfError> {
    let mut literals = Vec::new();
    let mut chars = s.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        let negated = match c {
            ' ' | '\t' => continue,
            '+' => false,
            '-' => true,
            other => {
                return Err(CnfError::Malformed { line, msg: format!("expected `+` or `-`, found `{other}`") })
            }
        };
        while matches!(chars.peek(), Some((_, ' ' | '\t'))) {
            chars.next();
        }
        let mut digits = String::new();
        while let Some(&(_, d)) = chars.peek() {
            if !d.is_ascii_digit() {
                break;
            }
            digits.push(d);
            chars.next();
        }
        let value: u32 = digits
            .parse()
            .map_err(|_| CnfError::Malformed { line, msg: "sign not followed by a value".into() })?;
        if value as usize >= 2 * num_features {
            return Err(CnfError::ValueOutOfRange { value, num_features });
        }
        literals.push(Literal { value: Value(value), negated });
    }
    Clause::new(literals).ok_or_else(|| CnfError::Malformed { line, msg: "empty clause".into() })
}

/// Parses a constraints file: a clause count, then one clause per line as
/// signed values (`-14 -16`, a space after the sign is tolerated).
pub fn parse_constraints_file(text: &str, num_features: usize) -> Result<CnfFormula, CnfError> {
    let mut lines = content_lines(text);
    let (hline, header) =
        lines.next().ok_or(CnfError::Malformed { line: 1, msg: "missing clause count".into() })?;
    let declared = parse_count(hline, header, "the clause count")?;
    let mut clauses = Vec::with_capacity(declared);
    for (line, s) in lines {
        clauses.push(parse_clause_line(line, s, num_features)?);
    }
    if clauses.len() != declared {
        return Err(CnfError::ClauseCountMismatch { declared, found: clauses.len() });
    }
    CnfFormula::new(num_features, clauses)
}

pub fn write_constraints_file(cnf: &CnfFormula) -> String {
    let mut out = format!("{}\n", cnf.clauses().len());
    for c in cnf.clauses() {
        let terms: Vec<String> = c
            .literals()
            .iter()
            .map(|l| format!("{}{}", if l.negated { '-' } else { '+' }, l.value))
            .collect();
        out.push_str(&terms.join(" "));
        out.push('\n');
    }
    out
}
