//! File formats, project storage, the batch CLI and the HTTP API around
//! [`reviewlens_core`].

pub mod cli;
pub mod files;
pub mod project;
pub mod server;
