//! Paired benchmark of reduced against unreduced generation.
//!
//! Both variants run with the same seed list. Runs are interleaved so slow
//! drift in machine load hits both variants alike. Only generation is timed;
//! the coverage check runs afterwards and aborts on the first failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::AnnealConfig;
use crate::cnf::CnfFormula;
use crate::pipeline::{generate, reduction_percent, tset_counts, GenerateOptions, PipelineError};
use crate::reduction::{find_mand_and_root, ReductionError};
use crate::stats::{median, speedup_percent, wilcoxon_rank_sum, wilcoxon_signed_rank, StatsError, TestResult};
use crate::tsets::{verify_coverage, TSetError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least 2 runs per variant are required, got {0}")]
    TooFewRuns(usize),
    #[error("{model}: {variant} run with seed {seed} covered only {percent:.2}% of the t-sets")]
    Coverage { model: String, variant: Variant, seed: u64, percent: f64 },
    #[error("{model}: {variant} run with seed {seed} failed: {source}")]
    Run { model: String, variant: Variant, seed: u64, source: PipelineError },
    #[error("{model}: {source}")]
    Verify { model: String, source: TSetError },
    #[error("{model}: {source}")]
    Reduction { model: String, source: ReductionError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Reduced,
    Full,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Reduced => "reduced",
            Variant::Full => "full",
        })
    }
}

/// One timed run; also the CSV row layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: String,
    pub variant: Variant,
    pub seed: u64,
    pub elapsed_ms: f64,
    pub rows: usize,
    pub n: usize,
    pub m: usize,
    pub tsets_full: u64,
    pub tsets_reduced: u64,
}

#[derive(Debug, Clone)]
pub struct BenchModel {
    pub name: String,
    pub cnf: CnfFormula,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub seed_base: u64,
    pub strength: usize,
    pub anneal: AnnealConfig,
    /// Worker threads; 1 keeps timings free of contention.
    pub jobs: usize,
}

impl BenchConfig {
    pub fn new(runs: usize, seed_base: u64) -> Self {
        BenchConfig { runs, seed_base, strength: 3, anneal: AnnealConfig::default(), jobs: 1 }
    }
}

struct Task {
    model: usize,
    variant: Variant,
    seed: u64,
}

struct ModelInfo {
    n: usize,
    m: usize,
    full: u64,
    reduced: u64,
}

/// Runs every model `runs` times per variant and returns the records in
/// model, seed, variant order whatever the worker count.
pub fn run_bench(models: &[BenchModel], cfg: &BenchConfig) -> Result<Vec<RunRecord>, BenchError> {
    if cfg.runs < 2 {
        return Err(BenchError::TooFewRuns(cfg.runs));
    }
    let mut infos = Vec::with_capacity(models.len());
    for model in models {
        let rset = find_mand_and_root(&model.cnf)
            .map_err(|source| BenchError::Reduction { model: model.name.clone(), source })?;
        let n = model.cnf.num_features();
        let m = rset.len();
        let (full, reduced) = tset_counts(n, m, cfg.strength);
        infos.push(ModelInfo { n, m, full: full as u64, reduced: reduced as u64 });
    }

    let mut tasks = Vec::new();
    for model in 0..models.len() {
        for i in 0..cfg.runs as u64 {
            let seed = cfg.seed_base + i;
            // alternate which variant goes first
            let order = if i % 2 == 0 { [Variant::Reduced, Variant::Full] } else { [Variant::Full, Variant::Reduced] };
            for variant in order {
                tasks.push(Task { model, variant, seed });
            }
        }
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunRecord, BenchError>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    let failed = std::sync::atomic::AtomicBool::new(false);
    std::thread::scope(|scope| {
        for _ in 0..cfg.jobs.max(1) {
            scope.spawn(|| loop {
                if failed.load(Ordering::Relaxed) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(k) else { break };
                let outcome = run_one(&models[task.model], &infos[task.model], task, cfg);
                if outcome.is_err() {
                    failed.store(true, Ordering::Relaxed);
                }
                results.lock().expect("no panics while holding the lock")[k] = Some(outcome);
            });
        }
    });

    let mut records = Vec::with_capacity(tasks.len());
    for r in results.into_inner().expect("workers joined").into_iter().flatten() {
        records.push(r?);
    }
    records.sort_by(|a, b| {
        let ma = models.iter().position(|m| m.name == a.model);
        let mb = models.iter().position(|m| m.name == b.model);
        (ma, a.seed, a.variant).cmp(&(mb, b.seed, b.variant))
    });
    Ok(records)
}

fn run_one(model: &BenchModel, info: &ModelInfo, task: &Task, cfg: &BenchConfig) -> Result<RunRecord, BenchError> {
    let opts = GenerateOptions {
        strength: cfg.strength,
        reduce: task.variant == Variant::Reduced,
        anneal: cfg.anneal.clone().with_seed(task.seed),
    };
    let start = Instant::now();
    let generated = generate(&model.cnf, &opts);
    let elapsed = start.elapsed();
    let generated = generated.map_err(|source| BenchError::Run {
        model: model.name.clone(),
        variant: task.variant,
        seed: task.seed,
        source,
    })?;
    let report = verify_coverage(&generated.array, &model.cnf, &BTreeSet::new(), 0)
        .map_err(|source| BenchError::Verify { model: model.name.clone(), source })?;
    if !report.is_complete() {
        return Err(BenchError::Coverage {
            model: model.name.clone(),
            variant: task.variant,
            seed: task.seed,
            percent: report.percent(),
        });
    }
    Ok(RunRecord {
        model: model.name.clone(),
        variant: task.variant,
        seed: task.seed,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        rows: generated.array.len(),
        n: info.n,
        m: info.m,
        tsets_full: info.full,
        tsets_reduced: info.reduced,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub n: usize,
    pub m: usize,
    pub tsets_full: u64,
    pub tsets_reduced: u64,
    pub tset_reduction_percent: f64,
    pub runs: usize,
    pub median_ms_reduced: f64,
    pub median_ms_full: f64,
    pub speedup_percent: f64,
    /// Rank-sum of reduced against full times; `None` when too few runs.
    pub rank_sum: Option<TestResult>,
    pub median_rows_reduced: f64,
    pub median_rows_full: f64,
    /// Positive when reduced arrays are larger.
    pub size_difference_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub models: Vec<ModelSummary>,
    /// Signed-rank over per-model median times, reduced first.
    pub time_test: Result<TestResult, StatsError>,
    /// Signed-rank over per-model median sizes, reduced first.
    pub size_test: Result<TestResult, StatsError>,
}

/// Models appear in order of first occurrence.
pub fn summarize(records: &[RunRecord]) -> BenchSummary {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        if !groups.contains_key(r.model.as_str()) {
            order.push(&r.model);
        }
        groups.entry(&r.model).or_default().push(r);
    }
    let mut models = Vec::new();
    for name in order {
        let rs = &groups[name];
        let pick = |v: Variant, f: fn(&RunRecord) -> f64| -> Vec<f64> {
            rs.iter().filter(|r| r.variant == v).map(|r| f(r)).collect()
        };
        let t_red = pick(Variant::Reduced, |r| r.elapsed_ms);
        let t_full = pick(Variant::Full, |r| r.elapsed_ms);
        let s_red = pick(Variant::Reduced, |r| r.rows as f64);
        let s_full = pick(Variant::Full, |r| r.rows as f64);
        let med = |v: &[f64]| median(v).unwrap_or(f64::NAN);
        let first = rs[0];
        let (mr, mf) = (med(&s_red), med(&s_full));
        models.push(ModelSummary {
            model: name.to_string(),
            n: first.n,
            m: first.m,
            tsets_full: first.tsets_full,
            tsets_reduced: first.tsets_reduced,
            tset_reduction_percent: reduction_percent(first.tsets_full as u128, first.tsets_reduced as u128),
            runs: t_red.len().min(t_full.len()),
            median_ms_reduced: med(&t_red),
            median_ms_full: med(&t_full),
            speedup_percent: speedup_percent(med(&t_red), med(&t_full)),
            rank_sum: wilcoxon_rank_sum(&t_red, &t_full).ok(),
            median_rows_reduced: mr,
            median_rows_full: mf,
            size_difference_percent: (mr - mf) / mf * 100.0,
        });
    }
    let time_pairs: Vec<(f64, f64)> = models.iter().map(|m| (m.median_ms_reduced, m.median_ms_full)).collect();
    let size_pairs: Vec<(f64, f64)> = models.iter().map(|m| (m.median_rows_reduced, m.median_rows_full)).collect();
    BenchSummary {
        time_test: wilcoxon_signed_rank(&time_pairs),
        size_test: wilcoxon_signed_rank(&size_pairs),
        models,
    }
}

pub fn write_records<W: io::Write>(out: W, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: io::Read>(input: R) -> Result<Vec<RunRecord>, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for r in rd.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    model: &'a str,
    n: usize,
    m: usize,
    tsets_full: u64,
    tsets_reduced: u64,
    tset_reduction_percent: f64,
    runs: usize,
    median_ms_reduced: f64,
    median_ms_full: f64,
    speedup_percent: f64,
    rank_sum_p: Option<f64>,
    median_rows_reduced: f64,
    median_rows_full: f64,
    size_difference_percent: f64,
}

pub fn write_summary<W: io::Write>(out: W, summary: &BenchSummary) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for m in &summary.models {
        w.serialize(SummaryRow {
            model: &m.model,
            n: m.n,
            m: m.m,
            tsets_full: m.tsets_full,
            tsets_reduced: m.tsets_reduced,
            tset_reduction_percent: m.tset_reduction_percent,
            runs: m.runs,
            median_ms_reduced: m.median_ms_reduced,
            median_ms_full: m.median_ms_full,
            speedup_percent: m.speedup_percent,
            rank_sum_p: m.rank_sum.map(|r| r.p_value),
            median_rows_reduced: m.median_rows_reduced,
            median_rows_full: m.median_rows_full,
            size_difference_percent: m.size_difference_percent,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Counts values into `[lo, lo + width)` bins spanning the data.
pub fn histogram(values: &[f64], width: f64) -> Vec<(f64, f64, usize)> {
    assert!(width > 0.0, "bin width must be positive");
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Vec::new();
    }
    let lo = (finite.iter().copied().fold(f64::INFINITY, f64::min) / width).floor() as i64;
    let hi = (finite.iter().copied().fold(f64::NEG_INFINITY, f64::max) / width).floor() as i64;
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for v in finite {
        counts[((v / width).floor() as i64 - lo) as usize] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let start = (lo + i as i64) as f64 * width;
            (start, start + width, c)
        })
        .collect()
}

#[derive(Serialize)]
struct HistRow<'a> {
    metric: &'a str,
    bin_start: f64,
    bin_end: f64,
    models: usize,
}

/// Histograms of the t-set reduction and the median time reduction per model.
pub fn write_histograms<W: io::Write>(out: W, summary: &BenchSummary, width: f64) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    let tsets: Vec<f64> = summary.models.iter().map(|m| m.tset_reduction_percent).collect();
    let times: Vec<f64> = summary.models.iter().map(|m| m.speedup_percent).collect();
    for (metric, values) in [("tset_reduction_percent", tsets), ("time_reduction_percent", times)] {
        for (bin_start, bin_end, models) in histogram(&values, width) {
            w.serialize(HistRow { metric, bin_start, bin_end, models })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::encode_fm_to_cnf;
    use crate::fixtures;
    use crate::fm::parse_feature_model;

    fn quick(runs: usize, jobs: usize) -> BenchConfig {
        let mut c = BenchConfig::new(runs, 7);
        c.strength = 2;
        c.jobs = jobs;
        c.anneal.max_iterations = 100_000;
        c.anneal.max_stagnation = 10_000;
        c
    }

    fn phone() -> Vec<BenchModel> {
        let cnf = encode_fm_to_cnf(&parse_feature_model(fixtures::PHONE).unwrap());
        vec![BenchModel { name: "phone".into(), cnf }]
    }

    #[test]
    fn two_runs_one_model_four_rows() {
        let recs = run_bench(&phone(), &quick(2, 1)).unwrap();
        assert_eq!(recs.len(), 4);
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert_eq!(text.lines().next().unwrap(), "model,variant,seed,elapsed_ms,rows,n,m,tsets_full,tsets_reduced");
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn one_run_rejected() {
        assert!(matches!(run_bench(&phone(), &quick(1, 1)), Err(BenchError::TooFewRuns(1))));
    }

    #[test]
    fn thread_count_does_not_change_arrays() {
        let a = run_bench(&phone(), &quick(3, 1)).unwrap();
        let b = run_bench(&phone(), &quick(3, 3)).unwrap();
        let strip = |rs: &[RunRecord]| rs.iter().map(|r| (r.variant, r.seed, r.rows)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
    }

    #[test]
    fn histogram_bins() {
        let h = histogram(&[0.0, 5.0, 12.0, 19.9, 20.0], 10.0);
        assert_eq!(h, vec![(0.0, 10.0, 2), (10.0, 20.0, 2), (20.0, 30.0, 1)]);
        assert!(histogram(&[], 10.0).is_empty());
    }

    #[test]
    fn summary_of_identical_variants() {
        let mut recs = Vec::new();
        for seed in 0..8 {
            for variant in [Variant::Reduced, Variant::Full] {
                recs.push(RunRecord {
                    model: "x".into(),
                    variant,
                    seed,
                    elapsed_ms: 10.0 + seed as f64,
                    rows: 12,
                    n: 10,
                    m: 3,
                    tsets_full: 960,
                    tsets_reduced: 280,
                });
            }
        }
        let s = summarize(&recs);
        assert_eq!(s.models.len(), 1);
        let m = &s.models[0];
        assert_eq!(m.speedup_percent, 0.0);
        assert!(m.rank_sum.unwrap().p_value >= 0.5);
        assert_eq!(m.size_difference_percent, 0.0);
        assert!(matches!(s.size_test, Err(StatsError::NoInformation)));
    }
}
