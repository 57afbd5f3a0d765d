//! End-to-end generation with or without the root/mandatory reduction.

use thiserror::Error;

use crate::anneal::{generate_covering_array, AnnealConfig, AnnealError};
use crate::cnf::CnfFormula;
use crate::reduction::{adapt_constraints, expand, find_mand_and_root, generate_mappings, ReductionError, ReductionSet};
use crate::tsets::{count_tsets, CoveringArray};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Anneal(#[from] AnnealError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("generated row {0} violates the constraints")]
    InvalidRow(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub strength: usize,
    pub reduce: bool,
    pub anneal: AnnealConfig,
}

impl GenerateOptions {
    pub fn new(strength: usize) -> Self {
        GenerateOptions { strength, reduce: true, anneal: AnnealConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    /// Full-width rows over the original features.
    pub array: CoveringArray,
    /// Present when reduction ran.
    pub reduction: Option<ReductionSet>,
    pub complete: bool,
    /// Row count before expansion and deduplication.
    pub greedy_rows: usize,
}

impl Generated {
    pub fn removed_features(&self) -> usize {
        self.reduction.as_ref().map_or(0, |r| r.len())
    }
}

/// Sizes of the t-set universe before and after removing `m` features.
pub fn tset_counts(n: usize, m: usize, t: usize) -> (u128, u128) {
    (count_tsets(n, t), count_tsets(n - m, t))
}

/// Reduction percentage between a full and a reduced universe size.
pub fn reduction_percent(full: u128, reduced: u128) -> f64 {
    if full == 0 {
        0.0
    } else {
        100.0 * (full - reduced) as f64 / full as f64
    }
}

pub fn generate(cnf: &CnfFormula, opts: &GenerateOptions) -> Result<Generated, PipelineError> {
    let out = if opts.reduce {
        let rset = find_mand_and_root(cnf)?;
        let map = generate_mappings(&rset);
        let reduced = adapt_constraints(cnf, &map)?;
        let inner = generate_covering_array(&reduced, opts.strength, &opts.anneal)?;
        let mut array = expand(&inner.array, &map, &rset)?;
        array.dedup_rows();
        Generated { array, reduction: Some(rset), complete: inner.complete, greedy_rows: inner.greedy_rows }
    } else {
        let inner = generate_covering_array(cnf, opts.strength, &opts.anneal)?;
        Generated { array: inner.array, reduction: None, complete: inner.complete, greedy_rows: inner.greedy_rows }
    };
    for (i, row) in out.array.rows.iter().enumerate() {
        if !cnf.holds(&row.selection()) {
            return Err(PipelineError::InvalidRow(i));
        }
    }
    Ok(out)
}
