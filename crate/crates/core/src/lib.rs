#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod embedding;
pub mod ingest;
pub mod opinion;
pub mod preprocess;
pub mod sentiment;
pub mod topics;
pub mod analytics;
pub mod pipeline;
