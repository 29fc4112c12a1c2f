//! File formats, a thread-pool executor and the `pldpch` command line.

pub mod app;
pub mod exec;
pub mod formats;
