//! Scenario-driven front end for `kfredholm`: scenario files, reports,
//! verification suites and the command dispatcher behind the binary.

pub mod checks;
pub mod commands;
pub mod report;
pub mod scenario;
pub mod suites;
