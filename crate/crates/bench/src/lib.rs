//! Criterion benchmarks for rmoment live in `benches/`.
