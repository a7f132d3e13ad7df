//! Dirichlet eigenvalues of thin domains: asymptotic expansions from the local
//! geometry at the widest point, and direct reference solves on the mapped
//! cylinder.
//!
//! The pipeline is [`width`] (geometry) → [`taylor`] (local jet) →
//! [`oscillator`] (effective transverse operator) → [`expansion`]
//! (coefficients), with [`direct`] as the independent numerical check.

pub mod direct;
pub mod eigen;
pub mod error;
pub mod expansion;
pub mod moments;
pub mod oscillator;
pub mod par;
pub mod poly;
pub mod sparse;
pub mod spline;
pub mod taylor;
pub mod width;

pub use error::{Error, Result};
pub use expansion::{ellipsoid_expansion, evaluate_expansion, first_eigenvalue_coeffs, ExpansionResult};
pub use poly::{MonomialPolynomial, MultiIndex};
pub use taylor::{ellipsoid_taylor, extract_taylor, jet_at_widest_point, locate_max, TaylorWidthData};
pub use width::WidthModel;
