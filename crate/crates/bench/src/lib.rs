//! Benchmarks live under `benches/`; run with `cargo bench -p chanpred-bench`.
