//! Exact enumeration and high-fugacity analysis of hard-core lattice
//! particle systems.

pub mod coverings;
pub mod enumeration;
pub mod cli;
pub mod error;
pub mod gfc;
pub mod lattice;
pub mod leeyang;
pub mod ratio;
pub mod region;
pub mod series;

pub use error::{Error, Result};
