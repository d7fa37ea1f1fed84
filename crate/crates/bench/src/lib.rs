//! Criterion benchmarks for the smsplit drivers; see `benches/drivers.rs`.
//!
//! Run with `cargo bench -p smsplit-bench`.
