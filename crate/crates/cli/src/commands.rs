use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use splca::bench::{self, BenchConfig, BenchModel, BenchSummary};
use splca::cnf::{parse_constraints_file, parse_model_file, write_constraints_file};
use splca::pipeline::{reduction_percent, tset_counts};
use splca::reduction::find_mand_and_root;
use splca::stats::{ALPHA_RANK_SUM, ALPHA_SIGNED_RANK};
use splca::tsets::{parse_array_file, verify_coverage};
use splca::{encode_fm_to_cnf, fixtures, generate as run_generate, parse_feature_model, AnnealConfig, CnfFormula, GenerateOptions, ModelFile};

use crate::{AnnealArgs, BenchArgs, ConvertArgs, GenerateArgs, ReduceArgs, ReportFormat, Source, StatsArgs, VerifyArgs};

const DEFAULT_STRENGTH: usize = 3;

struct Input {
    cnf: CnfFormula,
    names: Vec<String>,
    header_strength: Option<usize>,
}

impl Input {
    fn strength(&self, flag: Option<usize>) -> usize {
        flag.or(self.header_strength).unwrap_or(DEFAULT_STRENGTH)
    }

    fn names(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).collect()
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(src: &Source) -> Result<Input> {
    if let Some(path) = &src.fm {
        let fm = parse_feature_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let names = fm.feature_list().into_iter().map(|(_, n)| n.to_string()).collect();
        return Ok(Input { cnf: encode_fm_to_cnf(&fm), names, header_strength: None });
    }
    let (Some(model), Some(constraints)) = (&src.model, &src.constraints) else {
        bail!("give either --fm or both --model and --constraints");
    };
    let header = parse_model_file(&read(model)?).with_context(|| format!("parsing {}", model.display()))?;
    let n = header.num_features();
    let cnf = parse_constraints_file(&read(constraints)?, n).with_context(|| format!("parsing {}", constraints.display()))?;
    let names = (0..n).map(|i| format!("f{i}")).collect();
    Ok(Input { cnf, names, header_strength: Some(header.strength) })
}

fn anneal_config(a: &AnnealArgs) -> AnnealConfig {
    let mut c = AnnealConfig::default();
    if let Some(v) = a.iterations {
        c.max_iterations = v;
    }
    if let Some(v) = a.stagnation {
        c.max_stagnation = v;
    }
    if let Some(v) = a.temperature {
        c.initial_temperature = v;
    }
    if let Some(v) = a.cooling {
        c.cooling_factor = v;
    }
    if let Some(v) = a.epoch {
        c.iterations_per_temperature = v;
    }
    c
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

pub fn generate(a: GenerateArgs) -> Result<ExitCode> {
    let input = load(&a.source)?;
    let anneal = anneal_config(&a.anneal).with_seed(a.seed);
    anneal.validate()?;
    let opts = GenerateOptions { strength: input.strength(a.strength), reduce: !a.no_reduce, anneal };
    let out = run_generate(&input.cnf, &opts)?;
    write_output(a.out.as_deref(), &out.array.to_file_string())?;
    eprintln!(
        "{} rows, t={}, {} of {} features reduced",
        out.array.len(),
        opts.strength,
        out.removed_features(),
        input.cnf.num_features()
    );
    if !out.complete {
        eprintln!("warning: search budget exhausted before full coverage");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn convert(a: ConvertArgs) -> Result<ExitCode> {
    let fm = parse_feature_model(&read(&a.fm)?).with_context(|| format!("parsing {}", a.fm.display()))?;
    let cnf = encode_fm_to_cnf(&fm);
    let model = ModelFile::binary(a.strength, fm.len()).to_string();
    let constraints = write_constraints_file(&cnf);
    match a.out {
        Some(prefix) => {
            let with_ext = |ext: &str| {
                let mut p = prefix.clone().into_os_string();
                p.push(ext);
                std::path::PathBuf::from(p)
            };
            write_output(Some(&with_ext(".model")), &model)?;
            write_output(Some(&with_ext(".constraints")), &constraints)?;
        }
        None => write_output(None, &format!("{model}\n{constraints}"))?,
    }
    Ok(ExitCode::SUCCESS)
}

pub fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let input = load(&a.source)?;
    let t = input.strength(a.strength);
    let n = input.cnf.num_features();
    let array = parse_array_file(&read(&a.array)?, t, n).with_context(|| format!("parsing {}", a.array.display()))?;
    let report = verify_coverage(&array, &input.cnf, &BTreeSet::new(), a.missing_cap)?;
    println!("valid t-sets: {}", report.total);
    println!("covered: {}", report.covered);
    println!("coverage: {:.2}%", report.percent());
    if !report.is_complete() {
        let names = input.names();
        println!("missing (showing {} of {}):", report.missing.len(), report.total - report.covered);
        for ts in &report.missing {
            println!("  {}", ts.display_with(&names));
        }
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn reduce(a: ReduceArgs) -> Result<ExitCode> {
    let input = load(&a.source)?;
    let t = input.strength(a.strength);
    let rset = find_mand_and_root(&input.cnf)?;
    let n = input.cnf.num_features();
    let m = rset.len();
    let (full, reduced) = tset_counts(n, m, t);
    let pct = reduction_percent(full, reduced);
    let names: Vec<&str> = rset.reduceable().iter().map(|f| input.names[f.0].as_str()).collect();
    let text = match a.report {
        ReportFormat::Text => {
            let mut s = format!("features: {n}\nreduceable: {m}\n");
            if let Some(root) = rset.root() {
                s += &format!("  root {}\n", input.names[root.0]);
            }
            for (child, rep) in rset.mandatories() {
                s += &format!("  {} = {}\n", input.names[child.0], input.names[rep.0]);
            }
            s += &format!("t-sets (t={t}): full {full}, reduced {reduced}\nreduction: {pct:.1}%\n");
            s
        }
        ReportFormat::Csv => format!(
            "n,m,reduceable,strength,tsets_full,tsets_reduced,reduction_percent\n{n},{m},{},{t},{full},{reduced},{pct:.2}\n",
            names.join(";")
        ),
    };
    write_output(None, &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn bench(a: BenchArgs) -> Result<ExitCode> {
    let mut models = Vec::new();
    if a.fixtures {
        for (name, text) in fixtures::ALL {
            let fm = parse_feature_model(text).expect("bundled models parse");
            models.push(BenchModel { name: name.to_string(), cnf: encode_fm_to_cnf(&fm) });
        }
    }
    for path in &a.models {
        let fm = parse_feature_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        models.push(BenchModel { name, cnf: encode_fm_to_cnf(&fm) });
    }
    let mut cfg = BenchConfig::new(a.runs, a.seed_base);
    cfg.strength = a.strength;
    cfg.jobs = a.jobs;
    cfg.anneal = anneal_config(&a.anneal);
    cfg.anneal.validate()?;
    let records = bench::run_bench(&models, &cfg)?;

    // reports are written after all timed runs finish
    let mut buf = Vec::new();
    bench::write_records(&mut buf, &records)?;
    write_output(a.out.as_deref(), std::str::from_utf8(&buf)?)?;
    let summary = bench::summarize(&records);
    if let Some(p) = &a.summary {
        bench::write_summary(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?, &summary)?;
    }
    if let Some(p) = &a.histograms {
        let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        bench::write_histograms(f, &summary, a.bin_width)?;
    }
    print_summary(&mut io::stderr(), &summary)?;
    Ok(ExitCode::SUCCESS)
}

pub fn stats(a: StatsArgs) -> Result<ExitCode> {
    let records = bench::read_records(fs::File::open(&a.csv).with_context(|| format!("opening {}", a.csv.display()))?)?;
    print_summary(&mut io::stdout(), &bench::summarize(&records))?;
    Ok(ExitCode::SUCCESS)
}

fn print_summary(w: &mut impl Write, s: &BenchSummary) -> Result<()> {
    writeln!(
        w,
        "{:<14} {:>4} {:>3} {:>8} {:>8} {:>12} {:>12} {:>8} {:>10} {:>7} {:>7}",
        "model", "n", "m", "tsets", "reduced", "ms reduced", "ms full", "speedup", "p", "rows r", "rows f"
    )?;
    for m in &s.models {
        let p = m.rank_sum.map_or("n/a".to_string(), |r| format!("{:.3e}", r.p_value));
        let mark = if m.rank_sum.is_some_and(|r| r.rejects(ALPHA_RANK_SUM)) { "*" } else { "" };
        writeln!(
            w,
            "{:<14} {:>4} {:>3} {:>8} {:>8} {:>12.2} {:>12.2} {:>7.1}% {:>9}{:1} {:>7.1} {:>7.1}",
            m.model, m.n, m.m, m.tsets_full, m.tsets_reduced, m.median_ms_reduced, m.median_ms_full,
            m.speedup_percent, p, mark, m.median_rows_reduced, m.median_rows_full
        )?;
    }
    for (label, test) in [("median times", &s.time_test), ("median sizes", &s.size_test)] {
        match test {
            Ok(r) => writeln!(
                w,
                "signed-rank over {label}: R+={} R-={} p={:.3e}{}",
                r.r_plus.unwrap_or(0.0),
                r.r_minus.unwrap_or(0.0),
                r.p_value,
                if r.rejects(ALPHA_SIGNED_RANK) { " (significant)" } else { "" }
            )?,
            Err(e) => writeln!(w, "signed-rank over {label}: {e}")?,
        }
    }
    Ok(())
}
