//! Feature models and their line-based text format.
//!
//! A model is written one feature per line, nesting expressed by two spaces
//! of indentation per level:
//!
//! ```text
//! Aircraft
//!   Wing: mandatory xor
//!   Engine: optional xor
//! Wing
//!   High
//!   Low
//! Engine
//!   Piston
//!   Jet
//! constraint: Piston => !Low
//! ```
//!
//! The depth-0 line that introduces a new name is the root. A later depth-0
//! line naming an already declared feature reopens it so that further
//! children can be attached; this is how breadth-first feature orders are
//! written. After the colon a line may carry a relation (`mandatory` or
//! `optional`, default `optional`) and/or a group kind (`or`, `xor`) that
//! turns all of the feature's children into group members.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Longest cross-tree constraint accepted, counted in feature occurrences.
pub const MAX_CTC_LITERALS: usize = 16;

/// Position of a feature in the feature list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub usize);

impl FeatureId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    Or,
    Xor,
}

impl GroupKind {
    fn keyword(self) -> &'static str {
        match self {
            GroupKind::Or => "or",
            GroupKind::Xor => "xor",
        }
    }
}

/// How a feature hangs off its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Root,
    Mandatory,
    Optional,
    OrMember,
    XorMember,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Feature {
    pub name: String,
    pub kind: NodeKind,
    pub parent: Option<FeatureId>,
    /// Group formed by this feature's children, if any.
    pub group: Option<GroupKind>,
}

/// Propositional cross-tree constraint over features.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtcFormula {
    Var(FeatureId),
    Not(Box<CtcFormula>),
    And(Box<CtcFormula>, Box<CtcFormula>),
    Or(Box<CtcFormula>, Box<CtcFormula>),
    Implies(Box<CtcFormula>, Box<CtcFormula>),
}

impl CtcFormula {
    pub fn negation(e: CtcFormula) -> Self {
        CtcFormula::Not(Box::new(e))
    }

    pub fn and(a: CtcFormula, b: CtcFormula) -> Self {
        CtcFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: CtcFormula, b: CtcFormula) -> Self {
        CtcFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: CtcFormula, b: CtcFormula) -> Self {
        CtcFormula::Implies(Box::new(a), Box::new(b))
    }

    /// Number of feature occurrences in the expression.
    pub fn literal_count(&self) -> usize {
        match self {
            CtcFormula::Var(_) => 1,
            CtcFormula::Not(e) => e.literal_count(),
            CtcFormula::And(a, b) | CtcFormula::Or(a, b) | CtcFormula::Implies(a, b) => {
                a.literal_count() + b.literal_count()
            }
        }
    }

    /// Evaluates the formula under a selection vector indexed by feature.
    pub fn eval(&self, selected: &[bool]) -> bool {
        match self {
            CtcFormula::Var(f) => selected[f.0],
            CtcFormula::Not(e) => !e.eval(selected),
            CtcFormula::And(a, b) => a.eval(selected) && b.eval(selected),
            CtcFormula::Or(a, b) => a.eval(selected) || b.eval(selected),
            CtcFormula::Implies(a, b) => !a.eval(selected) || b.eval(selected),
        }
    }

    fn max_feature(&self) -> usize {
        match self {
            CtcFormula::Var(f) => f.0,
            CtcFormula::Not(e) => e.max_feature(),
            CtcFormula::And(a, b) | CtcFormula::Or(a, b) | CtcFormula::Implies(a, b) => {
                a.max_feature().max(b.max_feature())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FmError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: duplicate feature name `{name}`")]
    DuplicateFeature { line: usize, name: String },
    #[error("group under `{parent}` has {members} member(s), at least 2 required")]
    GroupTooSmall { parent: String, members: usize },
    #[error("line {line}: constraint references unknown feature `{name}`")]
    UnknownFeature { line: usize, name: String },
    #[error("line {line}: second root feature `{name}`")]
    MultipleRoots { line: usize, name: String },
    #[error("line {line}: constraint has {literals} literals, limit is {MAX_CTC_LITERALS}")]
    CtcTooLarge { line: usize, literals: usize },
    #[error("model declares no features")]
    Empty,
    #[error("invalid model structure: {0}")]
    Structure(String),
}

/// A feature tree plus cross-tree constraints. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureModel {
    features: Vec<Feature>,
    ctcs: Vec<CtcFormula>,
}

impl FeatureModel {
    /// Builds a model from raw parts, checking every structural invariant.
    pub fn from_parts(features: Vec<Feature>, ctcs: Vec<CtcFormula>) -> Result<Self, FmError> {
        if features.is_empty() {
            return Err(FmError::Empty);
        }
        let bad = |msg: String| Err(FmError::Structure(msg));
        let mut seen = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if f.name.is_empty() || !f.name.chars().all(is_name_char) {
                return bad(format!("invalid feature name `{}`", f.name));
            }
            if seen.insert(f.name.as_str(), i).is_some() {
                return Err(FmError::DuplicateFeature { line: 0, name: f.name.clone() });
            }
            match (i, f.parent, f.kind) {
                (0, None, NodeKind::Root) => {}
                (0, _, _) => return bad("feature 0 must be the parentless root".into()),
                (_, None, _) => {
                    return Err(FmError::MultipleRoots { line: 0, name: f.name.clone() })
                }
                (_, Some(_), NodeKind::Root) => {
                    return bad(format!("`{}` has a parent but is marked root", f.name))
                }
                (_, Some(p), kind) => {
                    if p.0 >= i {
                        return bad(format!("`{}` must be declared after its parent", f.name));
                    }
                    let expected = match features[p.0].group {
                        Some(GroupKind::Or) => Some(NodeKind::OrMember),
                        Some(GroupKind::Xor) => Some(NodeKind::XorMember),
                        None => None,
                    };
                    let ok = match expected {
                        Some(member) => kind == member,
                        None => matches!(kind, NodeKind::Mandatory | NodeKind::Optional),
                    };
                    if !ok {
                        return bad(format!("`{}` has kind {:?} inconsistent with its parent", f.name, kind));
                    }
                }
            }
        }
        let mut members = vec![0usize; features.len()];
        for f in &features {
            if let Some(p) = f.parent {
                members[p.0] += 1;
            }
        }
        for (i, f) in features.iter().enumerate() {
            if f.group.is_some() && members[i] < 2 {
                return Err(FmError::GroupTooSmall { parent: f.name.clone(), members: members[i] });
            }
        }
        for c in &ctcs {
            if c.max_feature() >= features.len() {
                return bad("constraint references a feature out of range".into());
            }
            if c.literal_count() > MAX_CTC_LITERALS {
                return Err(FmError::CtcTooLarge { line: 0, literals: c.literal_count() });
            }
        }
        Ok(FeatureModel { features, ctcs })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn root(&self) -> FeatureId {
        FeatureId(0)
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, id: FeatureId) -> &Feature {
        &self.features[id.0]
    }

    pub fn ctcs(&self) -> &[CtcFormula] {
        &self.ctcs
    }

    pub fn name(&self, id: FeatureId) -> &str {
        &self.features[id.0].name
    }

    pub fn id_of(&self, name: &str) -> Option<FeatureId> {
        self.features.iter().position(|f| f.name == name).map(FeatureId)
    }

    /// The declaration-ordered feature list.
    pub fn feature_list(&self) -> Vec<(FeatureId, &str)> {
        self.features
            .iter()
            .enumerate()
            .map(|(i, f)| (FeatureId(i), f.name.as_str()))
            .collect()
    }

    pub fn children(&self, id: FeatureId) -> impl Iterator<Item = FeatureId> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.parent == Some(id))
            .map(|(i, _)| FeatureId(i))
    }

    /// Tree-semantics check of a full selection, independent of any CNF.
    pub fn is_valid_product(&self, selected: &[bool]) -> bool {
        assert_eq!(selected.len(), self.len());
        if !selected[0] {
            return false;
        }
        for (i, f) in self.features.iter().enumerate() {
            if let Some(p) = f.parent {
                if selected[i] && !selected[p.0] {
                    return false;
                }
                if f.kind == NodeKind::Mandatory && selected[p.0] && !selected[i] {
                    return false;
                }
            }
            if let Some(group) = f.group {
                if selected[i] {
                    let chosen = self.children(FeatureId(i)).filter(|c| selected[c.0]).count();
                    let ok = match group {
                        GroupKind::Or => chosen >= 1,
                        GroupKind::Xor => chosen == 1,
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        self.ctcs.iter().all(|c| c.eval(selected))
    }
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-' || c == '.'
}

/// Parses a model in the indentation-based text format.
pub fn parse_feature_model(text: &str) -> Result<FeatureModel, FmError> {
    let mut features: Vec<Feature> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    // (line, column of expression start, expression text)
    let mut pending_ctcs: Vec<(usize, usize, String)> = Vec::new();
    // Open ancestors; stack[d] is the feature at depth d.
    let mut stack: Vec<usize> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim_end();
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start_matches(' ').len();
        let body = &content[indent..];
        if body.starts_with('\t') {
            return Err(syntax(line, indent + 1, "tabs are not allowed in indentation"));
        }
        if indent % 2 != 0 {
            return Err(syntax(line, 1, "indentation must be a multiple of two spaces"));
        }
        let depth = indent / 2;

        if depth == 0 {
            if let Some(expr) = body.strip_prefix("constraint:") {
                let offset = indent + "constraint:".len() + 1;
                pending_ctcs.push((line, offset, expr.to_string()));
                continue;
            }
        }

        let (name, kinds) = split_feature_line(body, line, indent + 1)?;
        if depth == 0 {
            if features.is_empty() {
                let (relation, group) = parse_kinds(&kinds, line)?;
                if let Some((_, col)) = relation {
                    return Err(syntax(line, col, "the root feature takes no relation"));
                }
                index.insert(name.to_string(), 0);
                features.push(Feature { name: name.to_string(), kind: NodeKind::Root, parent: None, group });
                stack = vec![0];
            } else if let Some(&id) = index.get(name) {
                if let Some((_, col)) = kinds.first() {
                    return Err(syntax(line, *col, "a reopened feature cannot change its kind"));
                }
                stack = vec![id];
            } else {
                return Err(FmError::MultipleRoots { line, name: name.to_string() });
            }
            continue;
        }

        if stack.len() < depth {
            return Err(syntax(line, 1, "indentation skips a level"));
        }
        stack.truncate(depth);
        let parent = stack[depth - 1];
        if index.contains_key(name) {
            return Err(FmError::DuplicateFeature { line, name: name.to_string() });
        }
        let (relation, group) = parse_kinds(&kinds, line)?;
        let kind = match (features[parent].group, relation) {
            (Some(_), Some((_, col))) => {
                return Err(syntax(line, col, "group members take no mandatory/optional relation"))
            }
            (Some(GroupKind::Or), None) => NodeKind::OrMember,
            (Some(GroupKind::Xor), None) => NodeKind::XorMember,
            (None, Some((kind, _))) => kind,
            (None, None) => NodeKind::Optional,
        };
        let id = features.len();
        index.insert(name.to_string(), id);
        features.push(Feature { name: name.to_string(), kind, parent: Some(FeatureId(parent)), group });
        stack.push(id);
    }

    if features.is_empty() {
        return Err(FmError::Empty);
    }

    let mut ctcs = Vec::with_capacity(pending_ctcs.len());
    for (line, col, expr) in pending_ctcs {
        let formula = ExprParser::new(&expr, line, col, &index).parse()?;
        let literals = formula.literal_count();
        if literals > MAX_CTC_LITERALS {
            return Err(FmError::CtcTooLarge { line, literals });
        }
        ctcs.push(formula);
    }

    FeatureModel::from_parts(features, ctcs)
}

fn syntax(line: usize, col: usize, msg: &str) -> FmError {
    FmError::Syntax { line, col, msg: msg.to_string() }
}

/// Kind tokens with their columns.
type KindTokens<'a> = Vec<(&'a str, usize)>;

/// Splits `name [: kind...]` into the name and its kind tokens.
fn split_feature_line(body: &str, line: usize, col0: usize) -> Result<(&str, KindTokens<'_>), FmError> {
    let (name_part, kinds_part) = match body.find(':') {
        Some(p) => (&body[..p], Some((&body[p + 1..], p + 1))),
        None => (body, None),
    };
    let name = name_part.trim_end();
    if name.is_empty() {
        return Err(syntax(line, col0, "expected a feature name"));
    }
    if let Some(bad) = name.char_indices().find(|(_, c)| !is_name_char(*c)) {
        return Err(syntax(line, col0 + bad.0, &format!("unexpected character `{}` in feature name", bad.1)));
    }
    let mut kinds = Vec::new();
    if let Some((rest, offset)) = kinds_part {
        let mut pos = 0;
        for token in rest.split(' ') {
            if !token.is_empty() {
                kinds.push((token, col0 + offset + pos));
            }
            pos += token.len() + 1;
        }
        if kinds.is_empty() {
            return Err(syntax(line, col0 + offset, "expected a kind after `:`"));
        }
    }
    Ok((name, kinds))
}

type Relation = Option<(NodeKind, usize)>;

fn parse_kinds(kinds: &[(&str, usize)], line: usize) -> Result<(Relation, Option<GroupKind>), FmError> {
    let mut relation = None;
    let mut group = None;
    for &(token, col) in kinds {
        match token {
            "mandatory" | "optional" => {
                if relation.is_some() {
                    return Err(syntax(line, col, "relation given twice"));
                }
                let kind = if token == "mandatory" { NodeKind::Mandatory } else { NodeKind::Optional };
                relation = Some((kind, col));
            }
            "or" | "xor" => {
                if group.is_some() {
                    return Err(syntax(line, col, "group kind given twice"));
                }
                group = Some(if token == "or" { GroupKind::Or } else { GroupKind::Xor });
            }
            other => return Err(syntax(line, col, &format!("unknown kind `{other}`"))),
        }
    }
    Ok((relation, group))
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Name(&'a str),
    Not,
    And,
    Or,
    Implies,
    Open,
    Close,
}

struct ExprParser<'a> {
    tokens: Vec<(Token<'a>, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
    src: &'a str,
    col0: usize,
    index: &'a HashMap<String, usize>,
}

impl<'a> ExprParser<'a> {
    fn new(src: &'a str, line: usize, col0: usize, index: &'a HashMap<String, usize>) -> Self {
        ExprParser { tokens: Vec::new(), pos: 0, line, end_col: col0 + src.len(), src, col0, index }
    }

    fn tokenize(&mut self) -> Result<(), FmError> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let col = self.col0 + i;
            let c = self.src[i..].chars().next().unwrap();
            match c {
                ' ' => i += 1,
                '!' => {
                    self.tokens.push((Token::Not, col));
                    i += 1;
                }
                '&' => {
                    self.tokens.push((Token::And, col));
                    i += 1;
                }
                '|' => {
                    self.tokens.push((Token::Or, col));
                    i += 1;
                }
                '(' => {
                    self.tokens.push((Token::Open, col));
                    i += 1;
                }
                ')' => {
                    self.tokens.push((Token::Close, col));
                    i += 1;
                }
                '=' if bytes.get(i + 1) == Some(&b'>') => {
                    self.tokens.push((Token::Implies, col));
                    i += 2;
                }
                c if is_name_char(c) => {
                    let start = i;
                    while i < bytes.len() {
                        let c = self.src[i..].chars().next().unwrap();
                        if !is_name_char(c) {
                            break;
                        }
                        i += c.len_utf8();
                    }
                    self.tokens.push((Token::Name(&self.src[start..i]), col));
                }
                other => return Err(syntax(self.line, col, &format!("unexpected character `{other}`"))),
            }
        }
        Ok(())
    }

    fn parse(mut self) -> Result<CtcFormula, FmError> {
        self.tokenize()?;
        let e = self.implication()?;
        if let Some((_, col)) = self.tokens.get(self.pos) {
            return Err(syntax(self.line, *col, "unexpected token after expression"));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn implication(&mut self) -> Result<CtcFormula, FmError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Token::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(CtcFormula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<CtcFormula, FmError> {
        let mut e = self.conjunction()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            e = CtcFormula::or(e, self.conjunction()?);
        }
        Ok(e)
    }

    fn conjunction(&mut self) -> Result<CtcFormula, FmError> {
        let mut e = self.unary()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            e = CtcFormula::and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<CtcFormula, FmError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(CtcFormula::negation(self.unary()?))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let e = self.implication()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(syntax(self.line, self.col(), "expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Token::Name(name)) => {
                self.pos += 1;
                match self.index.get(name) {
                    Some(&id) => Ok(CtcFormula::Var(FeatureId(id))),
                    None => Err(FmError::UnknownFeature { line: self.line, name: name.to_string() }),
                }
            }
            _ => Err(syntax(self.line, col, "expected a feature name, `!` or `(`")),
        }
    }
}

struct CtcDisplay<'a> {
    fm: &'a FeatureModel,
    expr: &'a CtcFormula,
}

impl fmt::Display for CtcDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let operand = |f: &mut fmt::Formatter<'_>, e: &CtcFormula| -> fmt::Result {
            let inner = CtcDisplay { fm: self.fm, expr: e };
            match e {
                CtcFormula::Var(_) | CtcFormula::Not(_) => write!(f, "{inner}"),
                _ => write!(f, "({inner})"),
            }
        };
        match self.expr {
            CtcFormula::Var(id) => write!(f, "{}", self.fm.name(*id)),
            CtcFormula::Not(e) => {
                write!(f, "!")?;
                operand(f, e)
            }
            CtcFormula::And(a, b) | CtcFormula::Or(a, b) | CtcFormula::Implies(a, b) => {
                let op = match self.expr {
                    CtcFormula::And(..) => "&",
                    CtcFormula::Or(..) => "|",
                    _ => "=>",
                };
                operand(f, a)?;
                write!(f, " {op} ")?;
                operand(f, b)
            }
        }
    }
}

impl FeatureModel {
    pub fn display_ctc<'a>(&'a self, expr: &'a CtcFormula) -> impl fmt::Display + 'a {
        CtcDisplay { fm: self, expr }
    }
}

/// Writes the model back in the text format; parsing the output yields an
/// equal model, feature order included.
impl fmt::Display for FeatureModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kinds = |feat: &Feature| {
            let mut parts = Vec::new();
            if feat.kind == NodeKind::Mandatory {
                parts.push("mandatory");
            }
            if let Some(g) = feat.group {
                parts.push(g.keyword());
            }
            if parts.is_empty() {
                String::new()
            } else {
                format!(": {}", parts.join(" "))
            }
        };
        let root = &self.features[0];
        writeln!(f, "{}{}", root.name, kinds(root))?;
        let mut open = 0;
        for feat in &self.features[1..] {
            let parent = feat.parent.expect("non-root feature has a parent").0;
            if parent != open {
                writeln!(f, "{}", self.features[parent].name)?;
                open = parent;
            }
            writeln!(f, "  {}{}", feat.name, kinds(feat))?;
        }
        for c in &self.ctcs {
            writeln!(f, "constraint: {}", self.display_ctc(c))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn aircraft_feature_list_order() {
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        let names: Vec<&str> = fm.feature_list().into_iter().map(|(_, n)| n).collect();
        assert_eq!(
            names,
            [
                "Aircraft", "Wing", "Engine", "Materials", "High", "Shoulder", "Low", "Piston", "Jet",
                "Metal", "Wood", "Plastic", "Cloth", "Rust"
            ]
        );
        assert_eq!(fm.feature_list()[0].0, FeatureId(0));
    }

    #[test]
    fn aircraft_ctc_is_an_implication() {
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        assert_eq!(fm.ctcs().len(), 1);
        let id = |n| CtcFormula::Var(fm.id_of(n).unwrap());
        assert_eq!(fm.ctcs()[0], CtcFormula::implies(CtcFormula::and(id("Metal"), id("Wood")), id("High")));
    }

    #[test]
    fn minimal_model() {
        let fm = parse_feature_model("Root\n").unwrap();
        assert_eq!(fm.len(), 1);
        assert!(fm.ctcs().is_empty());
        assert_eq!(fm.feature_list().len(), 1);
    }

    #[test]
    fn nested_declaration_and_defaults() {
        let fm = parse_feature_model("A\n  B\n    C: mandatory\n  D: xor\n    E\n    F\n").unwrap();
        let names: Vec<&str> = fm.feature_list().into_iter().map(|(_, n)| n).collect();
        assert_eq!(names, ["A", "B", "C", "D", "E", "F"]);
        assert_eq!(fm.feature(FeatureId(1)).kind, NodeKind::Optional);
        assert_eq!(fm.feature(FeatureId(2)).kind, NodeKind::Mandatory);
        assert_eq!(fm.feature(FeatureId(2)).parent, Some(FeatureId(1)));
        assert_eq!(fm.feature(FeatureId(4)).kind, NodeKind::XorMember);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let fm = parse_feature_model("# header\n\nA  # root\n  B\n\n").unwrap();
        assert_eq!(fm.len(), 2);
    }

    #[test]
    fn precedence_and_right_associative_implication() {
        let fm = parse_feature_model("R\n  A\n  B\n  C\nconstraint: !A & B | C => A => B\n").unwrap();
        let v = |i| CtcFormula::Var(FeatureId(i));
        let expected = CtcFormula::implies(
            CtcFormula::or(CtcFormula::and(CtcFormula::negation(v(1)), v(2)), v(3)),
            CtcFormula::implies(v(1), v(2)),
        );
        assert_eq!(fm.ctcs()[0], expected);
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_feature_model("R\n  A: sometimes\n").unwrap_err();
        assert_eq!(err, FmError::Syntax { line: 2, col: 6, msg: "unknown kind `sometimes`".into() });
        let err = parse_feature_model("R\n   A\n").unwrap_err();
        assert!(matches!(err, FmError::Syntax { line: 2, .. }));
        let err = parse_feature_model("R\n  A\nconstraint: A & (A\n").unwrap_err();
        assert!(matches!(err, FmError::Syntax { line: 3, .. }));
    }

    #[test]
    fn duplicate_names_rejected() {
        let err = parse_feature_model("R\n  A\n  A\n").unwrap_err();
        assert_eq!(err, FmError::DuplicateFeature { line: 3, name: "A".into() });
    }

    #[test]
    fn small_groups_rejected() {
        let err = parse_feature_model("R\n  G: or\n    A\n").unwrap_err();
        assert_eq!(err, FmError::GroupTooSmall { parent: "G".into(), members: 1 });
    }

    #[test]
    fn unknown_ctc_feature_rejected() {
        let err = parse_feature_model("R\n  A\nconstraint: A => Z\n").unwrap_err();
        assert_eq!(err, FmError::UnknownFeature { line: 3, name: "Z".into() });
    }

    #[test]
    fn second_root_rejected() {
        let err = parse_feature_model("R\n  A\nS\n").unwrap_err();
        assert_eq!(err, FmError::MultipleRoots { line: 3, name: "S".into() });
    }

    #[test]
    fn oversized_ctc_rejected() {
        let mut text = String::from("R\n  A\nconstraint: A");
        for _ in 0..MAX_CTC_LITERALS {
            text.push_str(" | A");
        }
        let err = parse_feature_model(&text).unwrap_err();
        assert!(matches!(err, FmError::CtcTooLarge { literals, .. } if literals == MAX_CTC_LITERALS + 1));
    }

    #[test]
    fn group_members_take_no_relation() {
        assert!(parse_feature_model("R\n  G: xor\n    A: mandatory\n    B\n").is_err());
    }

    #[test]
    fn aircraft_running_example_products() {
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        let select = |names: &[&str]| {
            let mut s = vec![false; fm.len()];
            for n in names {
                s[fm.id_of(n).unwrap().0] = true;
            }
            s
        };
        assert!(fm.is_valid_product(&select(&["Aircraft", "Wing", "High", "Materials", "Metal", "Rust"])));
        assert!(!fm.is_valid_product(&select(&["Aircraft", "Wing", "Low", "Materials", "Metal", "Rust", "Wood"])));
    }

    #[test]
    fn printing_round_trips_fixtures() {
        for (name, text) in fixtures::ALL {
            let fm = parse_feature_model(text).unwrap();
            let again = parse_feature_model(&fm.to_string()).unwrap();
            assert_eq!(fm, again, "fixture {name}");
        }
    }
}
