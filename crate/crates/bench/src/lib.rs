//! Criterion benchmarks for the likelihood and optimizer live in `benches/`.
