//! Criterion benchmarks for the vector potential solver live in `benches/`.
