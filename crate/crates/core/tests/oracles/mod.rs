//! Brute-force reference implementations and random input generators,
//! shared by the integration tests of this crate and the acceptance suite.
#![allow(dead_code)]

pub mod fixture;
pub mod graphs;
pub mod index;
pub mod records;
pub mod terms;
