//! File formats, configuration, the parallel experiment runner and the
//! command-line front end for `boxctx-core`.

pub mod config;
pub mod io;
pub mod pipeline;
pub mod report;

pub use boxctx_core as core;
pub use config::RunConfig;
pub use pipeline::{execute, optimize, run_folds, workers_from_env, Manifest, RunError, RunOutputs};
