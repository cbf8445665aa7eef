//! Criterion benchmarks for `nof1-core`; see `benches/`.
