//! `spectrum`: levels of the transverse oscillator, optionally checked
//! numerically, and the splitting matrix of one degenerate group.

use anyhow::Result;
use serde::Serialize;
use thinspec::expansion::{degenerate_c3_matrix, SplittingMatrix};
use thinspec::oscillator::{default_box, oscillator_spectrum, schrodinger_solve_numeric, OscillatorSpectrum};
use thinspec::{Error, TaylorWidthData};

use crate::config::RunConfig;
use crate::model::{describe, resolve_jet, JetSummary};
use crate::report::SCHEMA;

#[derive(Clone, Debug, Serialize)]
pub struct LevelRow {
    pub lambda: f64,
    pub index: Vec<usize>,
    pub group: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Group {
    pub group: usize,
    pub lambda: f64,
    pub multiplicity: usize,
    pub members: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericCheck {
    pub values: Vec<f64>,
    pub box_halfwidth: f64,
    pub box_delta: f64,
    pub max_relative_difference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub model: String,
    pub jet: JetSummary,
    pub n: usize,
    pub theta: Vec<f64>,
    pub levels: Vec<LevelRow>,
    pub groups: Vec<Group>,
    pub numeric: Option<NumericCheck>,
    pub splitting: Option<SplittingMatrix>,
}

/// Smallest spectrum that contains every member of `group`.
fn spectrum_through_group(jet: &TaylorWidthData, n: usize, group: usize) -> Result<OscillatorSpectrum> {
    let mut count = group + 2;
    loop {
        let s = oscillator_spectrum(jet, n, count)?;
        if s.levels.last().is_some_and(|l| l.group > group) {
            return Ok(s);
        }
        count *= 2;
    }
}

pub fn run(cfg: &RunConfig) -> Result<SpectrumReport> {
    let spec = cfg.require_model()?;
    let (jet, source) = resolve_jet(spec)?;
    let n = cfg.mode;
    let s = oscillator_spectrum(&jet, n, cfg.levels)?;
    let levels: Vec<LevelRow> = s
        .levels
        .iter()
        .map(|l| LevelRow {
            lambda: l.lambda,
            index: l.index.0.clone(),
            group: l.group,
        })
        .collect();
    let mut groups: Vec<Group> = Vec::new();
    for l in &s.levels {
        match groups.last_mut() {
            Some(g) if g.group == l.group => {
                g.multiplicity += 1;
                g.members.push(l.index.0.clone());
            }
            _ => groups.push(Group {
                group: l.group,
                lambda: l.lambda,
                multiplicity: 1,
                members: vec![l.index.0.clone()],
            }),
        }
    }

    let numeric = if cfg.numeric {
        let (half, points) = default_box(&s.theta);
        let num = schrodinger_solve_numeric(&jet.h2_poly(), jet.h0, n, half, points, cfg.levels)?;
        let max_relative_difference = num
            .values
            .iter()
            .zip(s.values())
            .map(|(a, b)| (a - b).abs() / b.abs())
            .fold(0.0f64, f64::max);
        Some(NumericCheck {
            values: num.values,
            box_halfwidth: half,
            box_delta: num.box_delta,
            max_relative_difference,
        })
    } else {
        None
    };

    let splitting = match cfg.group {
        Some(g) => {
            let full = spectrum_through_group(&jet, n, g)?;
            let members = full.group(g);
            if members.is_empty() {
                return Err(Error::InvalidInput(format!("no level group {g}")).into());
            }
            Some(degenerate_c3_matrix(&jet, &full, &members, n)?)
        }
        None => None,
    };

    Ok(SpectrumReport {
        schema: SCHEMA,
        command: "spectrum",
        version: env!("CARGO_PKG_VERSION"),
        model: describe(spec),
        jet: JetSummary::new(&jet, source, n),
        n,
        theta: s.theta.clone(),
        levels,
        groups,
        numeric,
        splitting,
    })
}
