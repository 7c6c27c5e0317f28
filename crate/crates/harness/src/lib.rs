//! Command-line tooling around the `pseudolabel` library: synthetic data,
//! run configuration, the teacher/student experiment, and an HTTP endpoint.

pub mod config;
pub mod experiment;
pub mod presets;
pub mod serve;
pub mod synth;
