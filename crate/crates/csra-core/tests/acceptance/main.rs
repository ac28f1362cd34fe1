//! Acceptance suite: every release criterion runs as one test and prints a
//! `acceptance <criterion>: PASS (...)` line (visible with `--nocapture`).
//!
//! Run with `cargo test -p csra-core --test acceptance`.

mod benchmark;
mod metrics_oracle;
mod support;
