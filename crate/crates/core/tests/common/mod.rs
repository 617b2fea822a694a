#![allow(dead_code)]

use liouville_core::oracle;
use liouville_core::{GridSpec, MeasureGrid};

pub use liouville_core::oracle::OracleInstance as Instance;

pub fn random_measure(w: usize, h: usize, gamma: f64, seed: u64) -> MeasureGrid {
    oracle::random_measure(w, h, gamma, seed).unwrap()
}

pub fn uniform_measure(w: usize, h: usize) -> MeasureGrid {
    MeasureGrid::uniform(&GridSpec::with_pad_cells(w, h, 1.0, 1).unwrap())
}

pub fn random_instance(w: usize, h: usize, stride: usize, r_cap: f64, seed: u64) -> Instance {
    oracle::random_instance(w, h, stride, r_cap, seed).unwrap()
}
