//! Criterion benchmarks for kitwpa-core; see `benches/`.
