//! Benchmarks for amp-core live under `benches/`.
