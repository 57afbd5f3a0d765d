//! A small DPLL solver over feature variables.
//!
//! Each feature is one boolean variable (true = selected). Literals over
//! CASA values are translated on the way in, which makes the structural
//! exclusion/totality clauses hold by construction.

use thiserror::Error;

use crate::cnf::{CnfFormula, Literal};
use crate::fm::FeatureId;

/// Total polarity assignment; `selected()[i]` is feature `i`'s polarity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(Vec<bool>);

impl Assignment {
    pub fn new(selected: Vec<bool>) -> Self {
        Assignment(selected)
    }

    pub fn selected(&self) -> &[bool] {
        &self.0
    }

    pub fn is_selected(&self, f: FeatureId) -> bool {
        self.0[f.0]
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Assignment),
    Unsat,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn model(self) -> Option<Assignment> {
        match self {
            SolveResult::Sat(a) => Some(a),
            SolveResult::Unsat => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("formula has more than {cap} models")]
    TooManyModels { cap: usize },
}

/// Decision heuristic knobs. The default is ascending variable order,
/// selected polarity first, with pure-literal elimination.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions<'a> {
    pub phase: Option<&'a [bool]>,
    pub order: Option<&'a [usize]>,
    pub pure_literals: bool,
}

impl Default for SearchOptions<'_> {
    fn default() -> Self {
        SearchOptions { phase: None, order: None, pure_literals: true }
    }
}

// Internal literal: variable index and the polarity that satisfies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit {
    var: u32,
    positive: bool,
}

impl From<Literal> for Lit {
    fn from(l: Literal) -> Self {
        let (f, positive) = l.requirement();
        Lit { var: f.0 as u32, positive }
    }
}

const UNASSIGNED: i8 = -1;

/// Clause database compiled from a formula. Immutable; each `solve` call
/// runs its own search state, so one instance can serve many threads.
#[derive(Debug, Clone)]
pub struct Solver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    occurs: Vec<Vec<usize>>,
}

impl Solver {
    pub fn new(cnf: &CnfFormula) -> Self {
        let num_vars = cnf.num_features();
        let mut clauses = Vec::with_capacity(cnf.clauses().len());
        let mut occurs = vec![Vec::new(); num_vars];
        for c in cnf.clauses() {
            let mut lits: Vec<Lit> = Vec::with_capacity(c.literals().len());
            for &l in c.literals() {
                let lit = Lit::from(l);
                if !lits.contains(&lit) {
                    lits.push(lit);
                }
            }
            let tautology = lits.iter().any(|a| lits.iter().any(|b| a.var == b.var && a.positive != b.positive));
            if tautology {
                continue;
            }
            let idx = clauses.len();
            for l in &lits {
                occurs[l.var as usize].push(idx);
            }
            clauses.push(lits);
        }
        Solver { num_vars, clauses, occurs }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn solve(&self, assumptions: &[Literal]) -> SolveResult {
        self.solve_with(assumptions, SearchOptions::default())
    }

    pub fn solve_with(&self, assumptions: &[Literal], opts: SearchOptions<'_>) -> SolveResult {
        let mut search = Search::new(self);
        if !search.assume(assumptions) {
            return SolveResult::Unsat;
        }
        match search.run(opts, None) {
            true => SolveResult::Sat(search.assignment()),
            false => SolveResult::Unsat,
        }
    }

    /// All models in ascending-variable, selected-first order.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Assignment>, SatError> {
        let mut search = Search::new(self);
        let mut models = Vec::new();
        if !search.assume(&[]) {
            return Ok(models);
        }
        let opts = SearchOptions { pure_literals: false, ..SearchOptions::default() };
        let mut sink = |a: Assignment| {
            models.push(a);
            models.len() <= cap
        };
        search.run(opts, Some(&mut sink));
        if models.len() > cap {
            return Err(SatError::TooManyModels { cap });
        }
        Ok(models)
    }
}

struct Decision {
    trail_len: usize,
    var: usize,
    value: bool,
    flipped: bool,
}

struct Search<'s> {
    solver: &'s Solver,
    value: Vec<i8>,
    trail: Vec<usize>,
    qhead: usize,
    decisions: Vec<Decision>,
}

impl<'s> Search<'s> {
    fn new(solver: &'s Solver) -> Self {
        Search {
            solver,
            value: vec![UNASSIGNED; solver.num_vars],
            trail: Vec::with_capacity(solver.num_vars),
            qhead: 0,
            decisions: Vec::new(),
        }
    }

    fn assign(&mut self, var: usize, value: bool) {
        self.value[var] = value as i8;
        self.trail.push(var);
    }

    fn lit_value(&self, l: Lit) -> i8 {
        match self.value[l.var as usize] {
            UNASSIGNED => UNASSIGNED,
            v => ((v == 1) == l.positive) as i8,
        }
    }

    /// Applies assumptions and unit clauses at level zero.
    fn assume(&mut self, assumptions: &[Literal]) -> bool {
        for &a in assumptions {
            let l = Lit::from(a);
            match self.lit_value(l) {
                0 => return false,
                1 => {}
                _ => self.assign(l.var as usize, l.positive),
            }
        }
        for c in &self.solver.clauses {
            if c.len() == 1 {
                match self.lit_value(c[0]) {
                    0 => return false,
                    1 => {}
                    _ => self.assign(c[0].var as usize, c[0].positive),
                }
            }
        }
        true
    }

    /// Unit propagation over clauses touching newly assigned variables.
    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let var = self.trail[self.qhead];
            self.qhead += 1;
            for &ci in &self.solver.occurs[var] {
                let clause = &self.solver.clauses[ci];
                let mut open = None;
                let mut open_count = 0;
                let mut satisfied = false;
                for &l in clause {
                    match self.lit_value(l) {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        UNASSIGNED => {
                            open_count += 1;
                            open = Some(l);
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match (open_count, open) {
                    (0, _) => return false,
                    (1, Some(l)) => self.assign(l.var as usize, l.positive),
                    _ => {}
                }
            }
        }
        true
    }

    fn undo(&mut self, trail_len: usize) {
        for &v in &self.trail[trail_len..] {
            self.value[v] = UNASSIGNED;
        }
        self.trail.truncate(trail_len);
        self.qhead = trail_len;
    }

    /// Undoes to the latest unflipped decision and takes its other branch.
    fn backtrack(&mut self) -> bool {
        while let Some(d) = self.decisions.pop() {
            self.undo(d.trail_len);
            if !d.flipped {
                self.decisions.push(Decision { flipped: true, value: !d.value, ..d });
                self.assign(d.var, !d.value);
                return true;
            }
        }
        false
    }

    fn assign_pure_literals(&mut self) -> bool {
        let n = self.solver.num_vars;
        let mut seen = vec![0u8; n]; // bit 0: positive, bit 1: negative
        for c in &self.solver.clauses {
            if c.iter().any(|&l| self.lit_value(l) == 1) {
                continue;
            }
            for &l in c {
                if self.value[l.var as usize] == UNASSIGNED {
                    seen[l.var as usize] |= if l.positive { 1 } else { 2 };
                }
            }
        }
        let mut any = false;
        for (var, &s) in seen.iter().enumerate() {
            if s == 1 || s == 2 {
                self.assign(var, s == 1);
                any = true;
            }
        }
        any
    }

    fn next_decision(&self, opts: &SearchOptions<'_>) -> Option<usize> {
        match opts.order {
            Some(order) => order.iter().copied().find(|&v| self.value[v] == UNASSIGNED),
            None => (0..self.solver.num_vars).find(|&v| self.value[v] == UNASSIGNED),
        }
    }

    fn assignment(&self) -> Assignment {
        Assignment(self.value.iter().map(|&v| v == 1).collect())
    }

    /// Runs DPLL. With a sink, every model is reported and the search
    /// continues until the space is exhausted or the sink returns false.
    fn run(&mut self, opts: SearchOptions<'_>, mut sink: Option<&mut dyn FnMut(Assignment) -> bool>) -> bool {
        loop {
            if !self.propagate() {
                if !self.backtrack() {
                    return false;
                }
                continue;
            }
            if opts.pure_literals && self.assign_pure_literals() {
                continue;
            }
            let Some(var) = self.next_decision(&opts) else {
                match sink.as_mut() {
                    None => return true,
                    Some(sink) => {
                        if !sink(self.assignment()) || !self.backtrack() {
                            return true;
                        }
                        continue;
                    }
                }
            };
            let value = opts.phase.is_none_or(|p| p[var]);
            self.decisions.push(Decision { trail_len: self.trail.len(), var, value, flipped: false });
            self.assign(var, value);
        }
    }
}

/// Decides `cnf ∧ assumptions` with the default heuristic.
pub fn solve(cnf: &CnfFormula, assumptions: &[Literal]) -> SolveResult {
    Solver::new(cnf).solve(assumptions)
}

/// Every model of `cnf`, or an error once more than `cap` exist.
pub fn enumerate_models(cnf: &CnfFormula, cap: usize) -> Result<Vec<Assignment>, SatError> {
    assert!(cap >= 1, "cap must be at least 1");
    Solver::new(cnf).enumerate(cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{encode_fm_to_cnf, Clause};
    use crate::fixtures;
    use crate::fm::parse_feature_model;
    use proptest::prelude::*;

    fn aircraft() -> CnfFormula {
        encode_fm_to_cnf(&parse_feature_model(fixtures::AIRCRAFT).unwrap())
    }

    #[test]
    fn root_cannot_be_deselected() {
        assert_eq!(solve(&aircraft(), &[Literal::neg(0)]), SolveResult::Unsat);
    }

    #[test]
    fn rust_follows_metal() {
        let cnf = aircraft();
        assert_eq!(solve(&cnf, &[Literal::neg(18), Literal::pos(26)]), SolveResult::Unsat);
        assert_eq!(solve(&cnf, &[Literal::pos(18), Literal::neg(26)]), SolveResult::Unsat);
        assert!(solve(&cnf, &[Literal::pos(18), Literal::pos(26)]).is_sat());
    }

    #[test]
    fn unconstrained_solve_yields_a_product() {
        let cnf = aircraft();
        let fm = parse_feature_model(fixtures::AIRCRAFT).unwrap();
        let model = solve(&cnf, &[]).model().unwrap();
        assert!(cnf.holds(model.selected()));
        assert!(fm.is_valid_product(model.selected()));
    }

    #[test]
    fn contradictory_assumptions_are_unsat() {
        assert_eq!(solve(&aircraft(), &[Literal::pos(4), Literal::pos(5)]), SolveResult::Unsat);
    }

    #[test]
    fn enumeration_of_minimal_model() {
        let cnf = encode_fm_to_cnf(&parse_feature_model("Root\n").unwrap());
        let models = enumerate_models(&cnf, 10).unwrap();
        assert_eq!(models, vec![Assignment::new(vec![true])]);
    }

    #[test]
    fn enumeration_of_unsat_formula_is_empty() {
        let cnf = aircraft().with_clause(Clause::new(vec![Literal::neg(0)]).unwrap()).unwrap();
        assert!(enumerate_models(&cnf, 10).unwrap().is_empty());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let cnf = CnfFormula::new(4, vec![]).unwrap();
        assert_eq!(enumerate_models(&cnf, 16).unwrap().len(), 16);
        assert_eq!(enumerate_models(&cnf, 15).unwrap_err(), SatError::TooManyModels { cap: 15 });
    }

    #[test]
    fn deterministic_witness() {
        let cnf = aircraft();
        let a = solve(&cnf, &[Literal::pos(20)]);
        let b = solve(&cnf, &[Literal::pos(20)]);
        assert_eq!(a, b);
    }

    #[test]
    fn phase_preference_steers_witness() {
        let cnf = CnfFormula::new(3, vec![]).unwrap();
        let solver = Solver::new(&cnf);
        let phase = [false, true, false];
        let opts = SearchOptions { phase: Some(&phase), pure_literals: false, ..Default::default() };
        assert_eq!(solver.solve_with(&[], opts).model().unwrap().selected(), &phase);
    }

    fn brute_force(cnf: &CnfFormula) -> Vec<Vec<bool>> {
        let n = cnf.num_features();
        (0..1u32 << n)
            .map(|bits| (0..n).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>())
            .filter(|s| cnf.holds(s))
            .collect()
    }

    fn arb_cnf() -> impl Strategy<Value = CnfFormula> {
        (1usize..=10).prop_flat_map(|n| {
            let lit = (0..2 * n as u32, any::<bool>()).prop_map(|(v, neg)| Literal { value: crate::cnf::Value(v), negated: neg });
            let clause = prop::collection::vec(lit, 1..4).prop_map(|l| Clause::new(l).unwrap());
            prop::collection::vec(clause, 0..3 * n).prop_map(move |cs| CnfFormula::new(n, cs).unwrap())
        })
    }

    proptest! {
        #[test]
        fn solve_agrees_with_truth_table(cnf in arb_cnf(), pick in any::<u64>()) {
            let truth = brute_force(&cnf);
            let n = cnf.num_features();
            let assumption = Literal::feature(FeatureId(pick as usize % n), pick & 1 == 0);
            for assumptions in [vec![], vec![assumption]] {
                let expected = truth.iter().any(|s| assumptions.iter().all(|a| a.holds(s)));
                match solve(&cnf, &assumptions) {
                    SolveResult::Sat(a) => {
                        prop_assert!(expected);
                        prop_assert!(cnf.holds(a.selected()));
                        prop_assert!(assumptions.iter().all(|l| l.holds(a.selected())));
                    }
                    SolveResult::Unsat => prop_assert!(!expected),
                }
            }
        }

        #[test]
        fn enumeration_matches_truth_table(cnf in arb_cnf()) {
            let mut truth = brute_force(&cnf);
            let mut models: Vec<Vec<bool>> =
                enumerate_models(&cnf, 1 << 10).unwrap().into_iter().map(Assignment::into_inner).collect();
            truth.sort();
            models.sort();
            prop_assert_eq!(models, truth);
        }
    }
}
