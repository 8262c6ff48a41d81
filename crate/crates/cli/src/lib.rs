//! File formats, baselines, evaluation and the command-line front end for
//! [`icd_core`].

pub mod baselines;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod formats;
pub mod selfcheck;
