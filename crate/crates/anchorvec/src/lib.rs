//! File formats, parallel training and the command-line tool for anchored
//! interpretable word embeddings. The model, priors, optimizer and
//! evaluation live in [`anchorvec_core`], re-exported here as [`core`].

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod run;

pub use anchorvec_core as core;
pub use config::RunConfig;
pub use error::{AppError, AppResult};
