//! `sweep`: asymptotic expansion against direct solves over a list of `eps`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use thinspec::direct::{export_eigenvector, solve_thin_domain_with, SolveOptions};
use thinspec::expansion::reference_linear_coefficient;
use thinspec::{evaluate_expansion, first_eigenvalue_coeffs, Error, ExpansionResult, WidthModel};

use crate::config::RunConfig;
use crate::expand::Coefficients;
use crate::model::{describe, resolve_jet, width_model, JetSummary};
use crate::report::{cell, ensure_dir, error_kind, to_json, SCHEMA};

pub const CSV_HEADER: &str = "eps,asym3,asym4,num,num_rich,diff3,diff4,order_fit,residual,seconds";

#[derive(Clone, Debug, Serialize)]
pub struct RowError {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    /// `ok`, `no-expansion` (solved, but the geometry has no jet) or `failed`.
    pub status: &'static str,
    pub asym3: Option<f64>,
    pub asym4: Option<f64>,
    /// Finest-grid eigenvalue.
    pub num: Option<f64>,
    /// Richardson-extrapolated eigenvalue.
    pub num_rich: Option<f64>,
    pub diff3: Option<f64>,
    pub diff4: Option<f64>,
    /// Largest eigen-residual norm on the finest grid.
    pub residual: Option<f64>,
    pub error_estimate: Option<f64>,
    pub measured_order: Option<f64>,
    pub order_flag: Option<bool>,
    pub unknowns: Option<usize>,
    pub seconds: f64,
    pub error: Option<RowError>,
    pub vector: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub command: &'static str,
    pub version: &'static str,
    pub model: String,
    pub jet: Option<JetSummary>,
    pub jet_error: Option<RowError>,
    pub expansion: Option<Coefficients>,
    /// Published `eps` coefficient used for `asym4`, when one exists.
    pub linear_reference: Option<f64>,
    pub resolution: usize,
    pub count: usize,
    pub tol: f64,
    pub jobs: usize,
    /// Least-squares slope of `log diff3` against `log eps`.
    pub order_fit3: Option<f64>,
    pub order_fit4: Option<f64>,
    pub rows: Vec<SweepRow>,
}

fn row_error(e: &anyhow::Error) -> RowError {
    RowError {
        kind: error_kind(e),
        message: format!("{e:#}"),
    }
}

/// Least-squares slope of `log y` against `log x` over points with `y > 0`.
pub fn fit_slope(points: &[(f64, Option<f64>)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(x, y)| y.filter(|v| v.is_finite() && *v > 0.0).map(|v| (x.ln(), v.ln())))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn solve_row(
    model: &WidthModel,
    eps: f64,
    index: usize,
    cfg: &RunConfig,
    expansion: Option<&ExpansionResult>,
    linear: Option<f64>,
) -> SweepRow {
    let start = Instant::now();
    // three nonzero terms c0, c2, c4 (c3 vanishes for the ground state)
    let asym3 = expansion.and_then(|e| evaluate_expansion(e, eps).ok());
    let asym4 = asym3.zip(linear).map(|(a, c5)| a + c5 * eps);
    let mut row = SweepRow {
        eps,
        status: "failed",
        asym3,
        asym4,
        num: None,
        num_rich: None,
        diff3: None,
        diff4: None,
        residual: None,
        error_estimate: None,
        measured_order: None,
        order_flag: None,
        unknowns: None,
        seconds: 0.0,
        error: None,
        vector: None,
    };
    let solved = (|| -> Result<_> {
        let d = model.dim();
        if !(2..=3).contains(&d) {
            return Err(Error::UnsupportedGeometry(format!("direct solves need d = 2 or 3, got {d}")).into());
        }
        let mut opts = SolveOptions::new(cfg.resolution, cfg.count);
        opts.eigen.tol = cfg.tol;
        opts.keep_vectors = cfg.export_vectors;
        let res = solve_thin_domain_with(model, eps, &opts)?;
        let vector = match (&res.vectors, &cfg.out) {
            (Some(v), Some(dir)) => {
                let path = dir.join("vectors").join(format!("eps_{index}.f64"));
                export_eigenvector(&path, &v[0], res.grid(), eps, res.eigenvalues[0])?;
                Some(path.display().to_string())
            }
            _ => None,
        };
        Ok((res, vector))
    })();
    match solved {
        Ok((res, vector)) => {
            let rich = res.extrapolated.as_ref().map(|e| e[0].clone());
            row.num = Some(res.eigenvalues[0]);
            row.num_rich = Some(res.best(0));
            row.residual = Some(res.residual_norms[0]);
            row.error_estimate = rich.as_ref().map(|r| r.error_estimate);
            row.measured_order = rich.as_ref().map(|r| r.measured_order);
            row.order_flag = rich.as_ref().map(|r| r.order_flag);
            row.unknowns = Some(res.grid().unknowns);
            row.diff3 = asym3.map(|a| (res.best(0) - a).abs());
            row.diff4 = asym4.map(|a| (res.best(0) - a).abs());
            row.status = if expansion.is_some() { "ok" } else { "no-expansion" };
            row.vector = vector;
        }
        Err(e) => row.error = Some(row_error(&e)),
    }
    row.seconds = start.elapsed().as_secs_f64();
    row
}

pub fn run(cfg: &RunConfig) -> Result<SweepReport> {
    let spec = cfg.require_model()?;
    let model = width_model(spec)?;
    if cfg.export_vectors && cfg.out.is_none() {
        return Err(Error::InvalidInput("export_vectors needs an output directory".into()).into());
    }
    let (jet, jet_error, expansion) = match resolve_jet(spec).and_then(|(j, s)| {
        let e = first_eigenvalue_coeffs(&j)?;
        Ok((j, s, e))
    }) {
        Ok((j, s, e)) => (Some(JetSummary::new(&j, s, 1)), None, Some(e)),
        Err(e) => (None, Some(row_error(&e)), None),
    };

    let linear_reference = expansion.as_ref().and(reference_linear_coefficient(&model));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .context("building the sweep thread pool")?;
    let rows: Vec<SweepRow> = pool.install(|| {
        cfg.eps
            .par_iter()
            .enumerate()
            .map(|(i, &eps)| solve_row(&model, eps, i, cfg, expansion.as_ref(), linear_reference))
            .collect()
    });

    let order_fit3 = fit_slope(&rows.iter().map(|r| (r.eps, r.diff3)).collect::<Vec<_>>());
    let order_fit4 = fit_slope(&rows.iter().map(|r| (r.eps, r.diff4)).collect::<Vec<_>>());
    Ok(SweepReport {
        schema: SCHEMA,
        command: "sweep",
        version: env!("CARGO_PKG_VERSION"),
        model: describe(spec),
        jet,
        jet_error,
        expansion: expansion.as_ref().map(Coefficients::from),
        linear_reference,
        resolution: cfg.resolution,
        count: cfg.count,
        tol: cfg.tol,
        jobs: cfg.jobs,
        order_fit3,
        order_fit4,
        rows,
    })
}

/// Deterministic CSV: the `seconds` column is left empty, timings go to a
/// separate file so that identical runs give identical bytes.
pub fn csv_text(report: &SweepReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(','))?;
    for r in &report.rows {
        w.write_record([
            cell(Some(r.eps)),
            cell(r.asym3),
            cell(r.asym4),
            cell(r.num),
            cell(r.num_rich),
            cell(r.diff3),
            cell(r.diff4),
            cell(report.order_fit3),
            cell(r.residual),
            String::new(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn timings_text(report: &SweepReport) -> String {
    let mut s = String::from("eps,seconds\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{}", cell(Some(r.eps)), cell(Some(r.seconds)));
    }
    s
}

/// Write `sweep.csv`, `sweep.timings.csv` and `sweep.json` into `dir`.
pub fn write_outputs(report: &SweepReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let files = [
        (dir.join("sweep.csv"), csv_text(report)?),
        (dir.join("sweep.timings.csv"), timings_text(report)),
        (dir.join("sweep.json"), to_json(report)?),
    ];
    for (path, text) in &files {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(files.into_iter().map(|f| f.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, Option<f64>)> = [0.2, 0.1, 0.05].iter().map(|&e| (e, Some(3.0 * e * e))).collect();
        assert_relative_eq!(fit_slope(&pts).unwrap(), 2.0, epsilon = 1e-12);
        assert!(fit_slope(&[(0.1, Some(1.0)), (0.2, None)]).is_none());
    }
}
