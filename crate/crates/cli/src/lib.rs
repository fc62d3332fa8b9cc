//! Configuration, caching and the end-to-end pipeline behind the `ylift` binary.

pub mod cache;
pub mod config;
pub mod pipeline;
