//! Scenario files, reports, output artifacts and the command implementations behind the
//! `swarmstab` binary.

pub mod commands;
pub mod instances;
pub mod output;
pub mod report;
pub mod scenario;
pub mod selftest;
