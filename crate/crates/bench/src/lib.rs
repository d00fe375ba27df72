//! Criterion benchmarks for the numerical kernels of `cosym-core`; see `benches/`.
