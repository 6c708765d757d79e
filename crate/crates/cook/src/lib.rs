//! Std side of cook: registry files, HTTP providers, datasets, the
//! concurrent evaluation runner and the `cook` command line.

pub mod cli;
pub mod dataset;
pub mod eval;
pub mod fanout;
pub mod http;
pub mod jsonl;
pub mod registry_io;
pub mod resolve;
pub mod transcript;
pub mod wire;

pub use cook_core;
