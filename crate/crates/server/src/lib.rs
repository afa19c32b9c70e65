//! Application server: project workflow, authentication and the HTTP API
//! over the core pipeline.

pub mod auth;
pub mod config;
pub mod error;
pub mod events;
pub mod http;
pub mod lease;
pub mod project;
pub mod service;
pub mod startup;
