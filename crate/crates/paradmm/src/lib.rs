//! Std companion of `paradmm-core`: the message-passing runtime, instance
//! and matrix files, run configuration, history output and the `paradmm`
//! command-line tool.

pub mod bench;
pub mod config;
pub mod error;
pub mod exec;
pub mod format;
pub mod instance;
pub mod output;
pub mod runtime;

pub use error::{Error, Result};
pub use paradmm_core as core;
