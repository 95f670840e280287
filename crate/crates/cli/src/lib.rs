//! Library surface of the harness so external tooling (tests, fuzzers) can
//! reach the config schema and the experiment runner.

pub mod config;
pub mod experiment;
