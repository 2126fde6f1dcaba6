//! File formats, a multi-threaded driver, batch processing and the command
//! line for [`csd_core`].

pub mod atomic;
pub mod cli;
pub mod config;
pub mod driver;
mod error;
pub mod export;
pub mod formats;
pub mod run;

pub use config::RunConfig;
pub use error::{FormatError, Result};
