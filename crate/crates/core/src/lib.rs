//! Numerical laboratory for the fractional Caffarelli–Kohn–Nirenberg
//! inequality written in Hardy form: the weight coefficient C(α), ground
//! states on logarithmic-radius grids, linearized spectra, Hardy-type
//! inequalities and the smoothed fundamental solution.

pub mod coeffs;
pub mod config;
pub mod cylcore;
pub mod error;
pub mod ineqlab;
pub mod kernel;
pub mod linalg;
pub mod quad;
pub mod solver;
pub mod spectral;
pub mod supersol;
pub mod sweep;
pub mod verify;
pub mod specfun;

pub use error::{Error, Result};
pub use specfun::{Order, Params};
