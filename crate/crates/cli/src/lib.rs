//! Library half of the experiment harness: configuration parsing, the
//! replicated experiment drivers, and run execution/output. The `urank`
//! binary is a thin argument-parsing shell over this crate.

pub mod config;
pub mod experiments;
pub mod runner;
