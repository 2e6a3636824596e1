//! Library surface of the `cdm` command-line tool.
//!
//! Everything the binary does lives here so integration tests can exercise
//! file formats, configuration resolution, and whole commands in-process.

pub mod commands;
pub mod config;
pub mod formats;
pub mod manifest;
