use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use splca::reduction::find_mand_and_root;
use splca::{encode_fm_to_cnf, fixtures, generate, parse_feature_model, AnnealConfig, GenerateOptions};

fn options(reduce: bool) -> GenerateOptions {
    GenerateOptions { strength: 3, reduce, anneal: AnnealConfig::default().with_seed(1) }
}

fn generation(c: &mut Criterion) {
    let mut group = c.benchmark_group("generate_t3");
    group.sample_size(10);
    for name in ["aircraft", "phone", "webshop"] {
        let text = fixtures::ALL.iter().find(|(n, _)| *n == name).unwrap().1;
        let cnf = encode_fm_to_cnf(&parse_feature_model(text).unwrap());
        for (label, reduce) in [("reduced", true), ("full", false)] {
            let opts = options(reduce);
            group.bench_with_input(BenchmarkId::new(label, name), &cnf, |b, cnf| {
                b.iter(|| generate(black_box(cnf), &opts).unwrap())
            });
        }
    }
    group.finish();
}

fn analysis(c: &mut Criterion) {
    let cnf = encode_fm_to_cnf(&parse_feature_model(fixtures::GPL).unwrap());
    c.bench_function("find_mand_and_root/gpl", |b| b.iter(|| find_mand_and_root(black_box(&cnf)).unwrap()));
}

criterion_group!(benches, generation, analysis);
criterion_main!(benches);
