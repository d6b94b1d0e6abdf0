//! Criterion benchmarks for the copart solvers; see `benches/`.
