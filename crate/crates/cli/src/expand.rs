//! `expand`: jet and expansion coefficients of one eigenvalue branch.

use anyhow::Result;
use serde::Serialize;
use thinspec::expansion::{level_coeffs, Provenance};
use thinspec::{first_eigenvalue_coeffs, ExpansionResult, MultiIndex};

use crate::config::RunConfig;
use crate::model::{describe, resolve_jet, JetSummary};
use crate::report::SCHEMA;

#[derive(Clone, Debug, Serialize)]
pub struct Coefficients {
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
    /// Only known for the ground state.
    pub c4: Option<f64>,
}

impl From<&ExpansionResult> for Coefficients {
    fn from(r: &ExpansionResult) -> Self {
        Coefficients {
            c0: r.c0,
            c2: r.c2k,
            c3: r.c2k1,
            c4: r.c2k2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub n: usize,
    pub m: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpandReport {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub model: String,
    pub jet: JetSummary,
    pub level: Level,
    pub coefficients: Coefficients,
    pub provenance: Provenance,
    pub eta_exponent: f64,
    pub remainder_order: f64,
    pub unresolved_degeneracy: bool,
}

pub fn run(cfg: &RunConfig) -> Result<ExpandReport> {
    let spec = cfg.require_model()?;
    let (jet, source) = resolve_jet(spec)?;
    let m = match &cfg.m {
        Some(m) => MultiIndex(m.clone()),
        None => MultiIndex::zero(jet.n()),
    };
    let res = if cfg.mode == 1 && m.degree() == 0 {
        first_eigenvalue_coeffs(&jet)?
    } else {
        level_coeffs(&jet, cfg.mode, &m)?
    };
    Ok(ExpandReport {
        schema: SCHEMA,
        command: "expand",
        version: env!("CARGO_PKG_VERSION"),
        model: describe(spec),
        jet: JetSummary::new(&jet, source, cfg.mode),
        level: Level {
            n: res.n,
            m: res.m.0.clone(),
        },
        coefficients: Coefficients::from(&res),
        provenance: res.provenance.clone(),
        eta_exponent: res.eta_exponent,
        remainder_order: res.remainder_order,
        unresolved_degeneracy: res.unresolved_degeneracy,
    })
}
