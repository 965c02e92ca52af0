//! Benchmark-only crate; see `benches/flip_dynamics.rs`.
