//! Orchestration behind the `lintsf` binary: benchmark grids, equivalence
//! suites, convergence studies and the FITS bias report.

pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod convergence;
pub mod dump;
pub mod equivalence;
pub mod fits_bias;
pub mod registry;
pub mod report;

pub use bench::cmd_bench;
pub use config::ExperimentConfig;
pub use convergence::cmd_convergence;
pub use equivalence::cmd_equivalence;
pub use fits_bias::cmd_fits_bias_report;
