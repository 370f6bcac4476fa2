//! Citation-flow analytics: journal registry and corpus handling, the
//! classified counts cube, self-referentiality and self-impact indicators,
//! reference-asymmetry matrices, energy-distance equality tests, scheme
//! robustness runs, and a deterministic report pipeline.

pub mod asymmetry;
pub mod classify;
pub mod corpus;
pub mod cube;
pub mod error;
pub mod fetch;
pub mod indicators;
pub mod registry;
pub mod report;
pub mod robustness;
pub mod share;
pub mod stats;

pub use error::{Error, Result};
