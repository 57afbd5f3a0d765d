//! Simulated annealing for constrained covering arrays.
//!
//! A candidate is a fixed number of rows over the feature space. Its fitness
//! is the number of valid t-sets no row covers plus a penalty per violated
//! clause; zero means a valid covering array. Moves flip one feature in one
//! row, or occasionally replace a whole row with a fresh SAT witness aimed
//! at an uncovered t-set. An outer binary search looks for the smallest row
//! count the annealer can still solve, starting from a greedy upper bound.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{CnfFormula, Literal};
use crate::fm::FeatureId;
use crate::sat::{SearchOptions, SolveResult, Solver};
use crate::tsets::{CoveringArray, Row, TSetSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnealError {
    #[error("the constraints have no valid product")]
    Unsatisfiable,
    #[error("invalid annealing configuration: {0}")]
    InvalidConfig(String),
    #[error("strength must be at least 1")]
    ZeroStrength,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealConfig {
    pub initial_temperature: f64,
    /// Multiplies the temperature once per `iterations_per_temperature`.
    pub cooling_factor: f64,
    pub iterations_per_temperature: u64,
    /// Inner iteration budget per row-count probe.
    pub max_iterations: u64,
    /// A probe gives up after this many iterations without a new best.
    pub max_stagnation: u64,
    pub replace_probability: f64,
    pub violation_penalty: u64,
    /// Witnesses tried per greedy step.
    pub greedy_probes: usize,
    pub rng_seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            initial_temperature: 0.5,
            cooling_factor: 1.0 - 1e-6,
            iterations_per_temperature: 1,
            max_iterations: 2_000_000,
            max_stagnation: 100_000,
            replace_probability: 0.1,
            violation_penalty: 10,
            greedy_probes: 32,
            rng_seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AnnealError> {
        let bad = |m: &str| Err(AnnealError::InvalidConfig(m.to_string()));
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return bad("initial temperature must be positive");
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return bad("cooling factor must lie strictly between 0 and 1");
        }
        if self.iterations_per_temperature == 0 {
            return bad("iterations per temperature must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.replace_probability) {
            return bad("replace probability must lie in [0, 1]");
        }
        if self.greedy_probes == 0 {
            return bad("greedy probes must be at least 1");
        }
        Ok(())
    }
}

/// Metropolis acceptance probability of a move changing fitness by `delta`.
pub fn acceptance_probability(delta: i64, temperature: f64) -> f64 {
    if delta <= 0 {
        1.0
    } else if temperature <= 0.0 {
        0.0
    } else {
        (-(delta as f64) / temperature).exp()
    }
}

/// Everything about one (formula, strength) pair that stays fixed while
/// annealing: the t-set index, validity of each t-set, and clause lookups.
pub struct Problem {
    num_features: usize,
    strength: usize,
    solver: Solver,
    space: TSetSpace,
    valid: Vec<bool>,
    valid_count: usize,
    // per feature, flat records [rank, bit of the feature, c0 .. c(t-1)]
    combos_with: Vec<Vec<u32>>,
    clauses: Vec<Vec<(usize, bool)>>,
    occurs: Vec<Vec<usize>>,
}

impl Problem {
    /// Strength is capped at the number of features.
    pub fn new(cnf: &CnfFormula, strength: usize) -> Result<Self, AnnealError> {
        if strength == 0 {
            return Err(AnnealError::ZeroStrength);
        }
        let n = cnf.num_features();
        let t = strength.min(n);
        let solver = Solver::new(cnf);
        if !solver.solve(&[]).is_sat() {
            return Err(AnnealError::Unsatisfiable);
        }
        let space = TSetSpace::new((0..n).map(FeatureId).collect(), t);
        let valid = space.valid_flags(&solver);
        let valid_count = valid.iter().filter(|&&v| v).count();

        let mut combos_with = vec![Vec::new(); n];
        if t > 0 {
            let mut combo: Vec<usize> = (0..t).collect();
            loop {
                let rank = space.rank(&combo) as u32;
                for (bit, &f) in combo.iter().enumerate() {
                    let rec = &mut combos_with[f];
                    rec.push(rank);
                    rec.push(bit as u32);
                    rec.extend(combo.iter().map(|&c| c as u32));
                }
                if !advance(&mut combo, n) {
                    break;
                }
            }
        }

        let clauses: Vec<Vec<(usize, bool)>> = cnf
            .clauses()
            .iter()
            .map(|c| c.literals().iter().map(|l| {
                let (f, want) = l.requirement();
                (f.0, want)
            }).collect())
            .collect();
        let mut occurs = vec![Vec::new(); n];
        for (ci, c) in clauses.iter().enumerate() {
            for &(f, _) in c {
                if !occurs[f].contains(&ci) {
                    occurs[f].push(ci);
                }
            }
        }
        Ok(Problem { num_features: n, strength: t, solver, space, valid, valid_count, combos_with, clauses, occurs })
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    /// Effective strength, `min(t, n)`.
    pub fn strength(&self) -> usize {
        self.strength
    }

    pub fn valid_tsets(&self) -> usize {
        self.valid_count
    }

    pub fn space(&self) -> &TSetSpace {
        &self.space
    }

    fn violations(&self, row: &[bool]) -> u32 {
        self.clauses.iter().filter(|c| !c.iter().any(|&(f, want)| row[f] == want)).count() as u32
    }

    /// A SAT witness under random polarity preferences and variable order,
    /// optionally forced to cover the t-set `target`.
    fn random_witness(&self, rng: &mut ChaCha8Rng, target: Option<usize>) -> Option<Vec<bool>> {
        let phase: Vec<bool> = (0..self.num_features).map(|_| rng.gen()).collect();
        let mut order: Vec<usize> = (0..self.num_features).collect();
        order.shuffle(rng);
        let assumptions: Vec<Literal> = target.map(|id| self.space.decode(id).literals()).unwrap_or_default();
        let opts = SearchOptions { phase: Some(&phase), order: Some(&order), pure_literals: false };
        match self.solver.solve_with(&assumptions, opts) {
            SolveResult::Sat(m) => Some(m.into_inner()),
            SolveResult::Unsat => None,
        }
    }
}

fn advance(combo: &mut [usize], k: usize) -> bool {
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

/// Set of t-set ids with O(1) insert, remove and random pick.
#[derive(Debug, Clone)]
struct IdSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl IdSet {
    fn new(universe: usize) -> Self {
        IdSet { items: Vec::new(), pos: vec![ABSENT; universe] }
    }

    fn insert(&mut self, id: usize) {
        if self.pos[id] == ABSENT {
            self.pos[id] = self.items.len() as u32;
            self.items.push(id as u32);
        }
    }

    fn remove(&mut self, id: usize) {
        let p = self.pos[id];
        if p == ABSENT {
            return;
        }
        let last = self.items.pop().expect("non-empty");
        if last as usize != id {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[id] = ABSENT;
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        if self.items.is_empty() {
            None
        } else {
            Some(self.items[rng.gen_range(0..self.items.len())] as usize)
        }
    }
}

/// Result of annealing at one row count.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub rows: Vec<Vec<bool>>,
    pub uncovered: usize,
    pub violations: usize,
    pub fitness: u64,
    pub iterations: u64,
}

impl SearchState {
    pub fn is_solution(&self) -> bool {
        self.fitness == 0
    }
}

struct Candidate<'p> {
    problem: &'p Problem,
    penalty: u64,
    rows: Vec<Vec<bool>>,
    cover: Vec<u32>,
    uncovered: IdSet,
    row_violations: Vec<u32>,
    total_violations: u64,
}

impl<'p> Candidate<'p> {
    fn new(problem: &'p Problem, rows: Vec<Vec<bool>>, penalty: u64) -> Self {
        let mut c = Candidate {
            problem,
            penalty,
            cover: vec![0; problem.space.len()],
            uncovered: IdSet::new(problem.space.len()),
            row_violations: rows.iter().map(|r| problem.violations(r)).collect(),
            total_violations: 0,
            rows,
        };
        c.total_violations = c.row_violations.iter().map(|&v| v as u64).sum();
        for r in &c.rows {
            problem.space.for_each_covered(r, |id| c.cover[id] += 1);
        }
        for (id, &v) in problem.valid.iter().enumerate() {
            if v && c.cover[id] == 0 {
                c.uncovered.insert(id);
            }
        }
        c
    }

    fn fitness(&self) -> u64 {
        self.uncovered.len() as u64 + self.penalty * self.total_violations
    }

    fn mask_of(&self, row: &[bool], combo: &[u32]) -> usize {
        combo.iter().enumerate().fold(0, |m, (i, &c)| m | ((!row[c as usize] as usize) << i))
    }

    /// Fitness change of flipping feature `f` in row `r`, without applying it.
    fn flip_delta(&self, r: usize, f: usize) -> (i64, i64) {
        let p = self.problem;
        let t = p.strength;
        let row = &self.rows[r];
        let mut cover_delta = 0i64;
        for rec in p.combos_with[f].chunks_exact(t + 2) {
            let base = (rec[0] as usize) << t;
            let old = base | self.mask_of(row, &rec[2..]);
            let new = old ^ (1 << rec[1]);
            if p.valid[old] && self.cover[old] == 1 {
                cover_delta += 1;
            }
            if p.valid[new] && self.cover[new] == 0 {
                cover_delta -= 1;
            }
        }
        let mut viol_delta = 0i64;
        for &ci in &p.occurs[f] {
            let clause = &p.clauses[ci];
            let before = clause.iter().any(|&(g, want)| row[g] == want);
            let after = clause.iter().any(|&(g, want)| if g == f { row[g] != want } else { row[g] == want });
            viol_delta += before as i64 - after as i64;
        }
        (cover_delta, viol_delta)
    }

    fn apply_flip(&mut self, r: usize, f: usize, viol_delta: i64) {
        let p = self.problem;
        let t = p.strength;
        for rec in p.combos_with[f].chunks_exact(t + 2) {
            let base = (rec[0] as usize) << t;
            let old = base | self.mask_of(&self.rows[r], &rec[2..]);
            let new = old ^ (1 << rec[1]);
            self.cover[old] -= 1;
            if self.cover[old] == 0 && p.valid[old] {
                self.uncovered.insert(old);
            }
            self.cover[new] += 1;
            if self.cover[new] == 1 {
                self.uncovered.remove(new);
            }
        }
        self.rows[r][f] = !self.rows[r][f];
        self.row_violations[r] = (self.row_violations[r] as i64 + viol_delta) as u32;
        self.total_violations = (self.total_violations as i64 + viol_delta) as u64;
    }

    fn remove_row(&mut self, r: usize) {
        let p = self.problem;
        let (cover, uncovered) = (&mut self.cover, &mut self.uncovered);
        p.space.for_each_covered(&self.rows[r], |id| {
            cover[id] -= 1;
            if cover[id] == 0 && p.valid[id] {
                uncovered.insert(id);
            }
        });
        self.total_violations -= self.row_violations[r] as u64;
    }

    fn insert_row(&mut self, r: usize, row: Vec<bool>) {
        let p = self.problem;
        let (cover, uncovered) = (&mut self.cover, &mut self.uncovered);
        p.space.for_each_covered(&row, |id| {
            cover[id] += 1;
            if cover[id] == 1 {
                uncovered.remove(id);
            }
        });
        self.row_violations[r] = p.violations(&row);
        self.total_violations += self.row_violations[r] as u64;
        self.rows[r] = row;
    }

    fn state(&self, iterations: u64) -> SearchState {
        SearchState {
            rows: self.rows.clone(),
            uncovered: self.uncovered.len(),
            violations: self.total_violations as usize,
            fitness: self.fitness(),
            iterations,
        }
    }
}

/// Anneals a candidate of `n_rows` rows and returns the best state seen.
pub fn anneal_at_size(problem: &Problem, n_rows: usize, cfg: &AnnealConfig, rng: &mut ChaCha8Rng) -> SearchState {
    assert!(n_rows >= 1, "row count must be at least 1");
    let rows: Vec<Vec<bool>> = (0..n_rows)
        .map(|_| problem.random_witness(rng, None).expect("formula is satisfiable"))
        .collect();
    let mut cand = Candidate::new(problem, rows, cfg.violation_penalty);
    let mut best = cand.state(0);
    if best.is_solution() || problem.num_features == 0 {
        return best;
    }

    let mut temperature = cfg.initial_temperature;
    let mut since_best = 0u64;
    let mut iteration = 0u64;
    while iteration < cfg.max_iterations {
        iteration += 1;
        let current = cand.fitness() as i64;
        if rng.gen_bool(cfg.replace_probability) {
            let r = rng.gen_range(0..n_rows);
            let target = cand.uncovered.pick(rng);
            if let Some(witness) = problem.random_witness(rng, target) {
                let old = cand.rows[r].clone();
                cand.remove_row(r);
                cand.insert_row(r, witness);
                let delta = cand.fitness() as i64 - current;
                if rng.gen::<f64>() >= acceptance_probability(delta, temperature) {
                    cand.remove_row(r);
                    cand.insert_row(r, old);
                }
            }
        } else {
            let r = rng.gen_range(0..n_rows);
            let f = rng.gen_range(0..problem.num_features);
            let (cover_delta, viol_delta) = cand.flip_delta(r, f);
            let delta = cover_delta + cfg.violation_penalty as i64 * viol_delta;
            if delta <= 0 || rng.gen::<f64>() < acceptance_probability(delta, temperature) {
                cand.apply_flip(r, f, viol_delta);
            }
        }

        let fitness = cand.fitness();
        if fitness < best.fitness {
            best = cand.state(iteration);
            since_best = 0;
            if fitness == 0 {
                break;
            }
        } else {
            since_best += 1;
            if since_best >= cfg.max_stagnation {
                break;
            }
        }
        if iteration.is_multiple_of(cfg.iterations_per_temperature) {
            temperature *= cfg.cooling_factor;
        }
    }
    best.iterations = iteration;
    best
}

/// One-pass greedy cover: each step keeps the best of several witnesses,
/// every one forced onto a random uncovered t-set so each step gains.
pub fn greedy_cover(problem: &Problem, cfg: &AnnealConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<bool>> {
    let space = &problem.space;
    let mut covered = vec![false; space.len()];
    let mut uncovered = IdSet::new(space.len());
    for (id, &v) in problem.valid.iter().enumerate() {
        if v {
            uncovered.insert(id);
        }
    }
    let mut rows = Vec::new();
    while uncovered.len() > 0 {
        let mut best: Option<(usize, Vec<bool>)> = None;
        for _ in 0..cfg.greedy_probes {
            let target = uncovered.pick(rng);
            let Some(w) = problem.random_witness(rng, target) else { continue };
            let mut gain = 0;
            space.for_each_covered(&w, |id| {
                if problem.valid[id] && !covered[id] {
                    gain += 1;
                }
            });
            if best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, w));
            }
        }
        let (_, row) = best.expect("valid t-sets have witnesses");
        space.for_each_covered(&row, |id| {
            covered[id] = true;
            uncovered.remove(id);
        });
        rows.push(row);
    }
    if rows.is_empty() {
        rows.push(problem.random_witness(rng, None).expect("formula is satisfiable"));
    }
    rows
}

/// Outcome of a full generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealOutcome {
    pub array: CoveringArray,
    /// False only if no probe, greedy included, reached full coverage.
    pub complete: bool,
    pub greedy_rows: usize,
    /// `(row count, solved)` for every annealing probe, in order.
    pub probes: Vec<(usize, bool)>,
}

/// Binary search on the row count between 1 and the greedy bound.
pub fn outer_size_search(problem: &Problem, cfg: &AnnealConfig, strength: usize) -> Result<AnnealOutcome, AnnealError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let n = problem.num_features;
    let to_array = |rows: &[Vec<bool>]| {
        let mut a = CoveringArray::new(strength, n, rows.iter().map(|r| Row::from_selection(r)).collect());
        a.dedup_rows();
        a
    };

    let greedy = greedy_cover(problem, cfg, &mut rng);
    let greedy_rows = greedy.len();
    let mut best = greedy;
    let mut probes = Vec::new();
    let (mut lo, mut hi) = (1, greedy_rows);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let state = anneal_at_size(problem, mid, cfg, &mut rng);
        probes.push((mid, state.is_solution()));
        if state.is_solution() {
            best = state.rows;
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let complete = {
        let cand = Candidate::new(problem, best.clone(), cfg.violation_penalty);
        cand.fitness() == 0
    };
    Ok(AnnealOutcome { array: to_array(&best), complete, greedy_rows, probes })
}

/// Generates a covering array of the given strength for `cnf`.
pub fn generate_covering_array(cnf: &CnfFormula, strength: usize, cfg: &AnnealConfig) -> Result<AnnealOutcome, AnnealError> {
    let problem = Problem::new(cnf, strength)?;
    outer_size_search(&problem, cfg, strength)
}
