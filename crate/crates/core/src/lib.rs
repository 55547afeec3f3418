pub mod cell;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod linalg;
pub mod lts;
pub mod macroscale;
pub mod microstructure;

pub use error::{Error, Result};
