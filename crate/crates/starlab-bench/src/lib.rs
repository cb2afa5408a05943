//! Criterion benchmarks for the starlab solvers; see `benches/solvers.rs`.
