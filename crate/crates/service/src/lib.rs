//! Session service, conformance stub and command-line tooling around `hragent-core`.

pub mod app;
pub mod background;
pub mod bench;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod store;
pub mod stub;
