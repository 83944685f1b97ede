//! Holds the `acceptance` test target, which checks the toolkit's headline
//! properties end to end and prints one PASS/FAIL line per property.
//!
//! ```text
//! cargo test -p moirebench-validation --test acceptance
//! ```
