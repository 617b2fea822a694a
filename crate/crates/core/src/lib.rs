//! Simulation of Gaussian free fields, Liouville quantum gravity measures and
//! the Liouville graph distance on rectangular domains.

pub mod brute;
pub mod catalog;
pub mod config;
pub mod distance;
pub mod error;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod io;
pub mod measure;
pub mod noise;
pub mod oracle;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use field::{FieldSample, SamplerKind};
pub use grid::{CellRect, GridSpec, Point};
pub use noise::WhiteNoiseDecomposition;
pub use measure::MeasureGrid;
pub use catalog::{Ball, BallCatalog};
pub use distance::DistanceResult;
