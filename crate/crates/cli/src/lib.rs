pub mod artifacts;
pub mod config;
pub mod pipeline;
pub mod reports;
