//! Batch front end for the risk engine: scenario files in, reports out.
//!
//! A scenario file describes one leveraged position, the protocol
//! parameters, and the analyses to run; each verb of the `clamp-risk`
//! binary executes one analysis and writes a JSON report (plus a CSV view
//! for tabular results). Identical scenario files always produce
//! byte-identical reports.

pub mod error;
pub mod report;
pub mod run;
pub mod scenario;
pub mod simulate;

pub use error::CliError;
pub use report::OutputFormat;
pub use run::{execute, execute_all, RunOptions, Verb};
pub use scenario::{load, Scenario, ScenarioConfig};
pub use simulate::{simulate, SimulationTrace, TraceAction, TraceEvent};
