//! Synthetic workloads and the experiment harness.

pub mod experiments;
pub mod gen;
pub mod report;
pub mod zipf;

pub use experiments::{experiment1, experiment2, experiment3, experiment4, run_experiment, BenchOptions, Grid};
pub use gen::{generate, GenSpec, Workload};
pub use report::{Report, ReportRow};
pub use zipf::Zipf;
