//! Thin-domain geometries described by width functions over a base domain.
//!
//! A model fixes `h_plus` and `h_minus` on `omega ⊂ R^{d-1}`; the thin domain is
//! `{ -eps h_minus(x') < x_d < eps h_plus(x'), x' in omega }` and the total width
//! is `H = h_plus + h_minus`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Error, Result};
use crate::poly::MonomialPolynomial;
use crate::spline::TensorSpline;

/// Axis-aligned box containing `omega`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

/// Width values at a point of `omega`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthValues {
    pub h_plus: f64,
    pub h_minus: f64,
    pub total: f64,
}

/// First derivatives of the width functions.
#[derive(Clone, Debug, PartialEq)]
pub struct WidthGradient {
    pub total: Vec<f64>,
    pub h_minus: Vec<f64>,
}

/// Width functions given by polynomials in absolute coordinates over a box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolynomialWidth {
    pub bounds: BoundingBox,
    pub h_plus: MonomialPolynomial,
    pub h_minus: MonomialPolynomial,
}

/// Width functions sampled on a tensor grid and interpolated by cubic splines.
#[derive(Clone, Debug)]
pub struct SampledWidth {
    h_plus: TensorSpline,
    h_minus: TensorSpline,
}

impl SampledWidth {
    /// Build from a tensor grid. `values` rows are `(x', h_plus, h_minus)`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return invalid("sampled width: no rows");
        };
        let ncols = first.len();
        if ncols < 3 {
            return invalid("sampled width: need columns x1..x_{d-1}, h_plus, h_minus");
        }
        let dim = ncols - 2;
        if rows.iter().any(|r| r.len() != ncols) {
            return invalid("sampled width: ragged rows");
        }
        let points: Vec<Vec<f64>> = rows.iter().map(|r| r[..dim].to_vec()).collect();
        let hp: Vec<f64> = rows.iter().map(|r| r[dim]).collect();
        let hm: Vec<f64> = rows.iter().map(|r| r[dim + 1]).collect();
        if hp.iter().zip(&hm).any(|(a, b)| a + b < 0.0) {
            return invalid("sampled width: h_plus + h_minus must be nonnegative");
        }
        Ok(SampledWidth {
            h_plus: TensorSpline::from_scattered_grid(&points, &hp)?,
            h_minus: TensorSpline::from_scattered_grid(&points, &hm)?,
        })
    }

    /// Load from CSV with columns `x1..x_{d-1}, h_plus, h_minus`; a header line is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if i == 0 => continue,
                Err(e) => return invalid(format!("{}: line {}: {e}", path.display(), i + 1)),
            }
        }
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.h_plus.dim()
    }
}

/// Catalog tag reported alongside results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatalogTag {
    Ellipsoid,
    Lemniscate,
    Custom,
}

/// A thin-domain geometry.
#[derive(Clone, Debug)]
pub enum WidthModel {
    /// `sum (x_i/a_i)^2 <= 1`, thinned along the last axis.
    Ellipsoid { axes: Vec<f64> },
    /// `(x1^2 + x2^2)^2 = x1^2 - x2^2`, thinned along `x2`.
    Lemniscate,
    /// `omega = prod (0, L_i)` with constant widths.
    Slab {
        lengths: Vec<f64>,
        h_plus: f64,
        h_minus: f64,
    },
    Polynomial(PolynomialWidth),
    Sampled(SampledWidth),
    /// `inner` evaluated at `center + R (x' - center)`.
    Rotated {
        inner: Box<WidthModel>,
        rotation: Vec<Vec<f64>>,
        center: Vec<f64>,
    },
}

impl WidthModel {
    pub fn ellipsoid(axes: &[f64]) -> Result<Self> {
        if axes.len() < 2 {
            return invalid("ellipsoid needs at least two semi-axes");
        }
        if axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return invalid(format!("ellipsoid semi-axes must be positive, got {axes:?}"));
        }
        Ok(WidthModel::Ellipsoid { axes: axes.to_vec() })
    }

    /// The rectangle `(0, length) x (-1/2, 1/2)` and its higher-dimensional boxes.
    pub fn slab(lengths: &[f64], h_plus: f64, h_minus: f64) -> Result<Self> {
        if lengths.is_empty() || lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return invalid("slab lengths must be positive");
        }
        if !(h_plus + h_minus > 0.0) {
            return invalid("slab width must be positive");
        }
        Ok(WidthModel::Slab {
            lengths: lengths.to_vec(),
            h_plus,
            h_minus,
        })
    }

    pub fn rotated(inner: WidthModel, rotation: Vec<Vec<f64>>, center: Vec<f64>) -> Result<Self> {
        let n = inner.dim() - 1;
        if rotation.len() != n || rotation.iter().any(|r| r.len() != n) || center.len() != n {
            return invalid("rotation/center dimension mismatch");
        }
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-12 {
                    return invalid("rotation matrix is not orthogonal");
                }
            }
        }
        Ok(WidthModel::Rotated {
            inner: Box::new(inner),
            rotation,
            center,
        })
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        match self {
            WidthModel::Ellipsoid { axes } => axes.len(),
            WidthModel::Lemniscate => 2,
            WidthModel::Slab { lengths, .. } => lengths.len() + 1,
            WidthModel::Polynomial(p) => p.bounds.dim() + 1,
            WidthModel::Sampled(s) => s.dim() + 1,
            WidthModel::Rotated { inner, .. } => inner.dim(),
        }
    }

    pub fn catalog_tag(&self) -> CatalogTag {
        match self {
            WidthModel::Ellipsoid { .. } => CatalogTag::Ellipsoid,
            WidthModel::Lemniscate => CatalogTag::Lemniscate,
            _ => CatalogTag::Custom,
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            WidthModel::Ellipsoid { axes } => format!("ellipsoid{axes:?}"),
            WidthModel::Lemniscate => "lemniscate".into(),
            WidthModel::Slab { lengths, h_plus, h_minus } => {
                format!("slab{lengths:?}(h+={h_plus}, h-={h_minus})")
            }
            WidthModel::Polynomial(_) => "polynomial".into(),
            WidthModel::Sampled(_) => "sampled".into(),
            WidthModel::Rotated { inner, .. } => format!("rotated {}", inner.describe()),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            WidthModel::Ellipsoid { axes } => {
                let n = axes.len() - 1;
                BoundingBox {
                    lower: axes[..n].iter().map(|a| -a).collect(),
                    upper: axes[..n].to_vec(),
                }
            }
            WidthModel::Lemniscate => BoundingBox {
                lower: vec![-1.0],
                upper: vec![1.0],
            },
            WidthModel::Slab { lengths, .. } => BoundingBox {
                lower: vec![0.0; lengths.len()],
                upper: lengths.clone(),
            },
            WidthModel::Polynomial(p) => p.bounds.clone(),
            WidthModel::Sampled(s) => s.h_plus.bounds(),
            WidthModel::Rotated {
                inner,
                rotation,
                center,
            } => {
                // preimage of the inner box corners under x -> c + R (x - c)
                let ib = inner.bounding_box();
                let n = ib.dim();
                let mut lower = vec![f64::INFINITY; n];
                let mut upper = vec![f64::NEG_INFINITY; n];
                for mask in 0..(1usize << n) {
                    let corner: Vec<f64> = (0..n)
                        .map(|i| if mask >> i & 1 == 1 { ib.upper[i] } else { ib.lower[i] })
                        .collect();
                    for j in 0..n {
                        let v = center[j]
                            + (0..n)
                                .map(|i| rotation[i][j] * (corner[i] - center[i]))
                                .sum::<f64>();
                        lower[j] = lower[j].min(v);
                        upper[j] = upper[j].max(v);
                    }
                }
                BoundingBox { lower, upper }
            }
        }
    }

    fn to_inner(rotation: &[Vec<f64>], center: &[f64], x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| center[i] + (0..n).map(|j| rotation[i][j] * (x[j] - center[j])).sum::<f64>())
            .collect()
    }

    /// Width functions at `x'`; `Ok(None)` when `x'` lies outside `omega`.
    pub fn eval_width(&self, x: &[f64]) -> Result<Option<WidthValues>> {
        check_finite(x)?;
        if x.len() + 1 != self.dim() {
            return invalid(format!("expected {} coordinates, got {}", self.dim() - 1, x.len()));
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> Option<WidthValues> {
        let both = |h: f64| WidthValues {
            h_plus: h,
            h_minus: h,
            total: 2.0 * h,
        };
        match self {
            WidthModel::Ellipsoid { axes } => {
                let n = axes.len() - 1;
                let s: f64 = x.iter().zip(&axes[..n]).map(|(xi, ai)| (xi / ai).powi(2)).sum();
                if s > 1.0 {
                    return None;
                }
                Some(both(axes[n] * (1.0 - s).sqrt()))
            }
            WidthModel::Lemniscate => {
                let t = x[0];
                if t.abs() > 1.0 {
                    return None;
                }
                Some(both(lemniscate_half_width(t)))
            }
            WidthModel::Slab {
                lengths,
                h_plus,
                h_minus,
            } => {
                if x.iter().zip(lengths).any(|(xi, l)| *xi < 0.0 || xi > l) {
                    return None;
                }
                Some(WidthValues {
                    h_plus: *h_plus,
                    h_minus: *h_minus,
                    total: h_plus + h_minus,
                })
            }
            WidthModel::Polynomial(p) => {
                if !p.bounds.contains(x) {
                    return None;
                }
                let hp = p.h_plus.eval(x);
                let hm = p.h_minus.eval(x);
                Some(WidthValues {
                    h_plus: hp,
                    h_minus: hm,
                    total: hp + hm,
                })
            }
            WidthModel::Sampled(s) => {
                let hp = s.h_plus.eval(x)?;
                let hm = s.h_minus.eval(x)?;
                Some(WidthValues {
                    h_plus: hp,
                    h_minus: hm,
                    total: hp + hm,
                })
            }
            WidthModel::Rotated {
                inner,
                rotation,
                center,
            } => inner.eval_unchecked(&Self::to_inner(rotation, center, x)),
        }
    }

    /// `H(x')`, or `None` outside `omega`.
    pub fn total_width(&self, x: &[f64]) -> Option<f64> {
        self.eval_unchecked(x).map(|w| w.total)
    }

    /// Gradients of `H` and `h_minus`; `None` outside `omega` or where they blow up.
    pub fn gradient(&self, x: &[f64]) -> Option<WidthGradient> {
        match self {
            WidthModel::Ellipsoid { axes } => {
                let n = axes.len() - 1;
                let s: f64 = x.iter().zip(&axes[..n]).map(|(xi, ai)| (xi / ai).powi(2)).sum();
                if s >= 1.0 {
                    return None;
                }
                let root = (1.0 - s).sqrt();
                let gm: Vec<f64> = (0..n).map(|i| -axes[n] * x[i] / (axes[i] * axes[i] * root)).collect();
                Some(WidthGradient {
                    total: gm.iter().map(|g| 2.0 * g).collect(),
                    h_minus: gm,
                })
            }
            WidthModel::Lemniscate => {
                let t = x[0];
                if t.abs() >= 1.0 {
                    return None;
                }
                let y = lemniscate_half_width(t);
                if y <= 0.0 {
                    return None;
                }
                let s = y * y;
                let ds = -(4.0 * t * s + 4.0 * t.powi(3) - 2.0 * t) / (2.0 * s + 2.0 * t * t + 1.0);
                let dy = ds / (2.0 * y);
                Some(WidthGradient {
                    total: vec![2.0 * dy],
                    h_minus: vec![dy],
                })
            }
            WidthModel::Slab { lengths, .. } => {
                if x.iter().zip(lengths).any(|(xi, l)| *xi < 0.0 || xi > l) {
                    return None;
                }
                Some(WidthGradient {
                    total: vec![0.0; lengths.len()],
                    h_minus: vec![0.0; lengths.len()],
                })
            }
            WidthModel::Polynomial(p) => {
                if !p.bounds.contains(x) {
                    return None;
                }
                let n = x.len();
                let gm: Vec<f64> = (0..n).map(|i| p.h_minus.partial(i).eval(x)).collect();
                let gp: Vec<f64> = (0..n).map(|i| p.h_plus.partial(i).eval(x)).collect();
                Some(WidthGradient {
                    total: gp.iter().zip(&gm).map(|(a, b)| a + b).collect(),
                    h_minus: gm,
                })
            }
            WidthModel::Sampled(s) => {
                let gp = s.h_plus.gradient(x)?;
                let gm = s.h_minus.gradient(x)?;
                Some(WidthGradient {
                    total: gp.iter().zip(&gm).map(|(a, b)| a + b).collect(),
                    h_minus: gm,
                })
            }
            WidthModel::Rotated {
                inner,
                rotation,
                center,
            } => {
                let g = inner.gradient(&Self::to_inner(rotation, center, x))?;
                let n = x.len();
                // grad (f o A)(x) = R^T grad f
                let pull = |v: &[f64]| -> Vec<f64> {
                    (0..n).map(|j| (0..n).map(|i| rotation[i][j] * v[i]).sum()).collect()
                };
                Some(WidthGradient {
                    total: pull(&g.total),
                    h_minus: pull(&g.h_minus),
                })
            }
        }
    }

    /// Load a sampled-grid model from CSV.
    pub fn sampled_from_csv(path: &Path) -> Result<Self> {
        Ok(WidthModel::Sampled(SampledWidth::from_csv(path)?))
    }

    /// Reject models whose `H` is negative somewhere on a sampling grid.
    pub fn check_nonnegative(&self, points_per_axis: usize) -> Result<()> {
        let bb = self.bounding_box();
        let n = bb.dim();
        let total = points_per_axis.pow(n as u32);
        let mut x = vec![0.0; n];
        for flat in 0..total {
            let mut rest = flat;
            for i in 0..n {
                let k = rest % points_per_axis;
                rest /= points_per_axis;
                let f = k as f64 / (points_per_axis - 1).max(1) as f64;
                x[i] = bb.lower[i] + f * (bb.upper[i] - bb.lower[i]);
            }
            if let Some(w) = self.eval_unchecked(&x) {
                if w.total < -1e-14 {
                    return Err(Error::UnsupportedGeometry(format!("H = {} < 0 at {x:?}", w.total)));
                }
            }
        }
        Ok(())
    }
}

/// Upper half-width `y(x) >= 0` of the lemniscate `(x^2 + y^2)^2 = x^2 - y^2`.
///
/// `s = y^2` is the nonnegative root of `s^2 + (2x^2 + 1) s + x^4 - x^2 = 0`,
/// written in the cancellation-free product form and polished by one Newton step.
pub fn lemniscate_half_width(x: f64) -> f64 {
    let x2 = x * x;
    let b = 2.0 * x2 + 1.0;
    let mut s = 2.0 * (x2 - x2 * x2) / (b + (8.0 * x2 + 1.0).sqrt());
    if s <= 0.0 {
        return 0.0;
    }
    let f = s * s + b * s + x2 * x2 - x2;
    let df = 2.0 * s + b;
    s -= f / df;
    s.max(0.0).sqrt()
}
