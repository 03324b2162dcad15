//! Library side of the command line harness, split out so integration tests
//! can drive the commands without spawning processes.

pub mod commands;
pub mod config;
