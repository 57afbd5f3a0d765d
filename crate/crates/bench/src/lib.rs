//! Criterion benchmarks for the generation pipeline live in `benches/`.
