//! Command-line front end for `thinspec`: expansions, eps-sweeps against direct
//! solves, oscillator spectra and the acceptance suite.

pub mod config;
pub mod expand;
pub mod model;
pub mod report;
pub mod spectrum;
pub mod sweep;
pub mod validate;
