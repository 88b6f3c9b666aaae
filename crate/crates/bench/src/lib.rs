//! Criterion benchmarks for the bbmlab kernels; see `benches/kernels.rs`.
