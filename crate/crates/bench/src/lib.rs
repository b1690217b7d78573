//! Criterion benchmarks for `imgent-core`; see `benches/entropy.rs`.
