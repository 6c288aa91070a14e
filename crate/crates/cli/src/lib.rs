//! Scenario-file front end for the `binary-povm` library.

pub mod error;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::{CliError, CliResult};
pub use report::{RunReport, Status};
pub use run::run;
pub use scenario::{parse_scenario, parse_scenario_str, parse_scenario_with, Overrides, Scenario};
