//! Terminal client for the workbench server. It validates arguments,
//! calls the server's HTTP API and formats the replies; it has no access to
//! storage of its own.

pub mod app;
pub mod client;
pub mod config;
pub mod error;
pub mod present;
pub mod validate;
