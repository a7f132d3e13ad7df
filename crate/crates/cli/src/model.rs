//! Turning a [`ModelSpec`] into geometry and a local jet.

use std::f64::consts::PI;

use anyhow::Result;
use serde::Serialize;
use thinspec::taylor::JetOptions;
use thinspec::{ellipsoid_taylor, jet_at_widest_point, Error, MonomialPolynomial, MultiIndex, TaylorWidthData, WidthModel};

use crate::config::ModelSpec;

pub fn width_model(spec: &ModelSpec) -> Result<WidthModel> {
    Ok(match spec {
        ModelSpec::Ellipsoid { axes } => WidthModel::ellipsoid(axes)?,
        ModelSpec::Lemniscate => WidthModel::Lemniscate,
        ModelSpec::Slab { lengths, h_plus, h_minus } => WidthModel::slab(lengths, *h_plus, *h_minus)?,
        ModelSpec::Sampled { path } => WidthModel::sampled_from_csv(path)?,
        ModelSpec::Jet { .. } => {
            return Err(Error::UnsupportedGeometry("a bare jet has no geometry to solve on".into()).into())
        }
    })
}

pub fn describe(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Jet { theta, .. } => format!("jet(theta={theta:?})"),
        ModelSpec::Sampled { path } => format!("sampled({})", path.display()),
        other => match width_model(other) {
            Ok(m) => m.describe(),
            Err(_) => format!("{other:?}"),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JetSource {
    ClosedForm,
    Numeric,
    Given,
}

/// Jet at the widest point: exact for ellipsoids, extracted numerically otherwise.
pub fn resolve_jet(spec: &ModelSpec) -> Result<(TaylorWidthData, JetSource)> {
    match spec {
        ModelSpec::Ellipsoid { axes } => Ok((ellipsoid_taylor(axes)?, JetSource::ClosedForm)),
        ModelSpec::Jet { theta, beta } => Ok((synthetic_jet(theta, beta.as_deref())?, JetSource::Given)),
        other => {
            let model = width_model(other)?;
            Ok((jet_at_widest_point(&model, &JetOptions::default())?, JetSource::Numeric))
        }
    }
}

/// `H0 = 1`, `alpha = theta / pi` (so mode 1 has frequencies `theta`), no quartic part.
pub fn synthetic_jet(theta: &[f64], beta: Option<&[f64]>) -> Result<TaylorWidthData> {
    let n = theta.len();
    if n == 0 || theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidInput(format!("theta must be positive, got {theta:?}")).into());
    }
    let mut h3 = MonomialPolynomial::zero(n);
    if let Some(b) = beta {
        if b.len() != n * n * n {
            return Err(Error::InvalidInput(format!("beta needs {} entries, got {}", n * n * n, b.len())).into());
        }
        for p in 0..n {
            for q in 0..n {
                for j in 0..n {
                    let v = b[(p * n + q) * n + j];
                    let w = b[(q * n + p) * n + j];
                    let u = b[(j * n + q) * n + p];
                    if (v - w).abs() > 1e-12 * (1.0 + v.abs()) || (v - u).abs() > 1e-12 * (1.0 + v.abs()) {
                        return Err(Error::InvalidInput("beta must be a symmetric tensor".into()).into());
                    }
                    let mut e = vec![0usize; n];
                    e[p] += 1;
                    e[q] += 1;
                    e[j] += 1;
                    h3.add_term(MultiIndex(e), v);
                }
            }
        }
    }
    let alpha = theta.iter().map(|t| t / PI).collect();
    Ok(TaylorWidthData::from_rotated_parts(
        1.0,
        alpha,
        &h3,
        MonomialPolynomial::zero(n),
        vec![0.0; n],
    )?)
}

/// Jet fields as reported.
#[derive(Clone, Debug, Serialize)]
pub struct JetSummary {
    pub source: JetSource,
    pub d: usize,
    pub x_bar: Vec<f64>,
    pub h0: f64,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub grad_h1: Vec<f64>,
    pub fit_residual: f64,
}

impl JetSummary {
    pub fn new(jet: &TaylorWidthData, source: JetSource, mode: usize) -> Self {
        JetSummary {
            source,
            d: jet.d,
            x_bar: jet.x_bar.clone(),
            h0: jet.h0,
            alpha: jet.alpha.clone(),
            theta: jet.theta(mode),
            beta: jet.beta.clone(),
            grad_h1: jet.grad_h1.clone(),
            fit_residual: jet.fit_residual,
        }
    }
}
