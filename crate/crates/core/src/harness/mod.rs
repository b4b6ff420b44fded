//! User-facing surface: configuration ingestion, report emission, and the
//! lemma-verification suite runner.

pub mod config;
pub mod report;
pub mod verify;
