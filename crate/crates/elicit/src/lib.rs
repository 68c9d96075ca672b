//! Batch generation, evaluation and reporting on top of `elicit-core`.

pub mod batch;
pub mod client;
pub mod config;
pub mod corpus;
pub mod mock;
pub mod pipeline;
pub mod report;
pub mod store;
