//! Configuration ingestion, experiment orchestration, and machine-readable
//! result emission for the spectra library.

pub mod config;
pub mod report;
pub mod runner;
pub mod verify;
