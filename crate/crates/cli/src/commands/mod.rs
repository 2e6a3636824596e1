//! One module per subcommand.
//!
//! Each command follows the same shape: a clap `Args` struct gathers flags,
//! `run` resolves them (flags > config file > defaults) into a serializable
//! `Resolved*` value, and `execute` does the actual work against an output
//! directory. The resolved value is snapshotted into the run manifest, so
//! `rerun` can deserialize it and call the very same `execute`.

pub mod bench;
pub mod diagnose;
pub mod evaluate;
pub mod fit;
pub mod rerun;
pub mod simulate;
