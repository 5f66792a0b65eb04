//! Criterion benchmarks for the `etclab-core` hot paths live in `benches/`.
