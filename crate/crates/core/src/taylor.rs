//! Local jet of the width function at its maximum.
//!
//! The jet is stored in the frame that diagonalizes the Hessian of `H`, so the
//! quadratic part reads `H2(y) = -1/2 sum alpha_i^2 y_i^2`. Cubic and quartic
//! parts, and the gradient of `h_minus`, are expressed in the same frame.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::{MonomialPolynomial, MultiIndex};
use crate::width::WidthModel;

/// Taylor data of `H` and `h_minus` at the maximum point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorWidthData {
    /// Ambient dimension `d`.
    pub d: usize,
    pub x_bar: Vec<f64>,
    pub h0: f64,
    /// Order of the first nonvanishing term after `H0` is `2k`.
    pub k: usize,
    /// Sorted descending.
    pub alpha: Vec<f64>,
    /// `basis[i][j]`: component `i` of the `j`-th rotated axis.
    pub basis: Vec<Vec<f64>>,
    /// Fully symmetric cubic coefficients, `beta[(p * n + q) * n + j]`.
    pub beta: Vec<f64>,
    /// Quartic part in the rotated frame.
    pub h4: MonomialPolynomial,
    /// `grad h_minus (x_bar)` in the rotated frame.
    pub grad_h1: Vec<f64>,
    pub fit_residual: f64,
}

impl TaylorWidthData {
    /// Assemble a jet directly in its diagonal frame (basis = identity, `x_bar = 0`).
    ///
    /// `h3` is any cubic form; its symmetric coefficient tensor is derived from it.
    pub fn from_rotated_parts(
        h0: f64,
        alpha: Vec<f64>,
        h3: &MonomialPolynomial,
        h4: MonomialPolynomial,
        grad_h1: Vec<f64>,
    ) -> Result<Self> {
        let n = alpha.len();
        if n == 0 {
            return invalid("jet needs at least one transverse coordinate");
        }
        if h3.dim() != n || h4.dim() != n || grad_h1.len() != n {
            return invalid("jet parts have inconsistent dimensions");
        }
        if h3.terms().any(|(k, _)| k.degree() != 3) || h4.terms().any(|(k, _)| k.degree() != 4) {
            return invalid("h3 must be cubic and h4 quartic (homogeneous)");
        }
        let basis = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let jet = TaylorWidthData {
            d: n + 1,
            x_bar: vec![0.0; n],
            h0,
            k: 1,
            alpha,
            basis,
            beta: beta_from_cubic(h3),
            h4,
            grad_h1,
            fit_residual: 0.0,
        };
        jet.validate()?;
        Ok(jet)
    }

    /// Number of transverse coordinates, `d - 1`.
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return invalid(format!("H0 must be positive, got {}", self.h0));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return invalid(format!("alpha must be positive, got {:?}", self.alpha));
        }
        let n = self.n();
        if self.beta.len() != n * n * n {
            return invalid("beta has wrong size");
        }
        let defect = orthogonality_defect(&self.basis);
        if defect > 1e-12 {
            return invalid(format!("basis is not orthogonal (defect {defect:e})"));
        }
        Ok(())
    }

    pub fn beta(&self, p: usize, q: usize, j: usize) -> f64 {
        let n = self.n();
        self.beta[(p * n + q) * n + j]
    }

    /// Oscillator frequencies `theta_j = pi n alpha_j / H0^{3/2}` for transverse mode `mode`.
    pub fn theta(&self, mode: usize) -> Vec<f64> {
        let s = std::f64::consts::PI * mode as f64 / self.h0.powf(1.5);
        self.alpha.iter().map(|a| s * a).collect()
    }

    /// `H2(y) = -1/2 sum alpha_i^2 y_i^2`.
    pub fn h2_poly(&self) -> MonomialPolynomial {
        let n = self.n();
        let mut p = MonomialPolynomial::zero(n);
        for (i, a) in self.alpha.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 2;
            p.add_term(MultiIndex(e), -0.5 * a * a);
        }
        p
    }

    /// `H3(y) = sum_{p,q,j} beta_pqj y_p y_q y_j`.
    pub fn h3_poly(&self) -> MonomialPolynomial {
        let n = self.n();
        let mut p = MonomialPolynomial::zero(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = self.beta(a, b, c);
                    if v != 0.0 {
                        let mut e = vec![0; n];
                        e[a] += 1;
                        e[b] += 1;
                        e[c] += 1;
                        p.add_term(MultiIndex(e), v);
                    }
                }
            }
        }
        p
    }

    pub fn h4_poly(&self) -> MonomialPolynomial {
        self.h4.clone()
    }

    /// `H0 + H2 + H3 + H4` evaluated at `x_bar + v` (`v` in original coordinates).
    pub fn eval_jet(&self, v: &[f64]) -> f64 {
        let n = self.n();
        let y: Vec<f64> = (0..n).map(|j| (0..n).map(|i| self.basis[i][j] * v[i]).sum()).collect();
        self.h0 + self.h2_poly().eval(&y) + self.h3_poly().eval(&y) + self.h4.eval(&y)
    }
}

/// Symmetric tensor of a cubic form: the coefficient of `y^gamma` is spread
/// evenly over the `3!/gamma!` index orderings that produce it.
pub fn beta_from_cubic(h3: &MonomialPolynomial) -> Vec<f64> {
    let n = h3.dim();
    let mut beta = vec![0.0; n * n * n];
    for p in 0..n {
        for q in 0..n {
            for j in 0..n {
                let mut e = vec![0; n];
                e[p] += 1;
                e[q] += 1;
                e[j] += 1;
                let key = MultiIndex(e);
                let count = 6.0 / key.factorial();
                beta[(p * n + q) * n + j] = h3.coeff(&key) / count;
            }
        }
    }
    beta
}

fn orthogonality_defect(b: &[Vec<f64>]) -> f64 {
    let n = b.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dot: f64 = (0..n).map(|k| b[k][i] * b[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Closed-form jet of the ellipsoid with semi-axes `a`, thinned along the last axis.
pub fn ellipsoid_taylor(a: &[f64]) -> Result<TaylorWidthData> {
    if a.len() < 2 || a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid(format!("ellipsoid semi-axes must be positive (at least two), got {a:?}"));
    }
    let n = a.len() - 1;
    let ad = a[n];
    // alpha_i = sqrt(2 a_d) / a_i, sorted descending => a_i ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
    let axes: Vec<f64> = order.iter().map(|&i| a[i]).collect();
    let alpha: Vec<f64> = axes.iter().map(|ai| (2.0 * ad).sqrt() / ai).collect();
    let mut basis = vec![vec![0.0; n]; n];
    for (col, &i) in order.iter().enumerate() {
        basis[i][col] = 1.0;
    }
    // H4 = -(a_d / 4) (sum y_i^2 / a_i^2)^2
    let mut h4 = MonomialPolynomial::zero(n);
    for i in 0..n {
        for j in 0..n {
            let mut e = vec![0; n];
            e[i] += 2;
            e[j] += 2;
            h4.add_term(MultiIndex(e), -ad / (4.0 * axes[i].powi(2) * axes[j].powi(2)));
        }
    }
    let jet = TaylorWidthData {
        d: n + 1,
        x_bar: vec![0.0; n],
        h0: 2.0 * ad,
        k: 1,
        alpha,
        basis,
        beta: vec![0.0; n * n * n],
        h4,
        grad_h1: vec![0.0; n],
        fit_residual: 0.0,
    };
    jet.validate()?;
    Ok(jet)
}

/// Options for numeric jet extraction.
#[derive(Clone, Copy, Debug)]
pub struct JetOptions {
    /// Base finite-difference step. Derivatives of order `k` start from a
    /// stencil step of `c_k * step` (`c_k` between 2 and 32) and shrink by √2 from there.
    pub step: f64,
    /// Largest accepted deviation of the quartic jet from `H` on the test stencil.
    pub fit_tolerance: f64,
    /// Radius of the fit test stencil.
    pub fit_radius: f64,
}

impl Default for JetOptions {
    fn default() -> Self {
        JetOptions {
            step: 1e-2,
            fit_tolerance: 1e-6,
            fit_radius: 1e-2,
        }
    }
}

/// One-dimensional central stencils `(offset / h, weight)` of second order.
fn stencil(order: usize) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("derivative order above 4"),
    }
}

fn eval_h(model: &WidthModel, x: &[f64]) -> Result<f64> {
    model.total_width(x).ok_or_else(|| {
        Error::UnsupportedGeometry(format!("difference stencil leaves the base domain at {x:?}"))
    })
}

/// Mixed partial `D^gamma f(x)` by a tensor-product central stencil of step `h`.
fn fd_partial(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], gamma: &[usize], h: f64) -> Result<f64> {
    let n = x.len();
    let stencils: Vec<&[(i32, f64)]> = gamma.iter().map(|&g| stencil(g)).collect();
    let mut idx = vec![0usize; n];
    let mut acc = 0.0;
    let mut pt = vec![0.0; n];
    loop {
        let mut w = 1.0;
        for i in 0..n {
            let (off, wi) = stencils[i][idx[i]];
            w *= wi;
            pt[i] = x[i] + off as f64 * h;
        }
        acc += w * f(&pt)?;
        // odometer
        let mut i = 0;
        loop {
            if i == n {
                let deg: usize = gamma.iter().sum();
                return Ok(acc / h.powi(deg as i32));
            }
            idx[i] += 1;
            if idx[i] < stencils[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Stencil step for a derivative of total order `degree`, relative to the base step.
///
/// Higher derivatives divide by `h^degree`, so they get wider stencils to keep
/// roundoff below the truncation error.
fn order_step(base: f64, degree: usize) -> f64 {
    base * match degree {
        0 | 1 => 2.0,
        2 => 4.0,
        3 => 16.0,
        _ => 32.0,
    }
}

/// Partial derivative refined by Richardson extrapolation over `h, h/2, h/4, h/8`
/// (eighth order).
fn richardson_tableau(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], gamma: &[usize], h: f64) -> Result<f64> {
    let mut t: Vec<f64> = (0..4)
        .map(|i| fd_partial(f, x, gamma, h * 0.5f64.powi(i)))
        .collect::<Result<_>>()?;
    let mut factor = 4.0;
    for level in 1..t.len() {
        for i in (level..t.len()).rev() {
            t[i] = (factor * t[i] - t[i - 1]) / (factor - 1.0);
        }
        factor *= 4.0;
    }
    Ok(t[3])
}

/// Rungs of the step ladder, each √2 below the last.
const STEP_LEVELS: usize = 13;

/// Richardson-refined partial derivative with automatic step choice.
///
/// Extrapolated estimates are formed on a geometric ladder of steps starting
/// at the order-dependent maximum. The window of neighbouring estimates that
/// agree best marks the balance between truncation and roundoff; its mean is
/// returned. Windows of three are preferred, since two noisy values can agree
/// by chance. Steps whose stencil leaves the base domain are skipped.
fn richardson_partial(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], gamma: &[usize], base: f64) -> Result<f64> {
    let top = order_step(base, gamma.iter().sum());
    let mut estimates = Vec::with_capacity(STEP_LEVELS);
    let mut last_err = None;
    for j in 0..STEP_LEVELS {
        match richardson_tableau(f, x, gamma, top * std::f64::consts::FRAC_1_SQRT_2.powi(j as i32)) {
            Ok(v) => estimates.push(v),
            Err(e) => last_err = Some(e),
        }
    }
    if estimates.is_empty() {
        return Err(last_err.expect("at least one attempt failed"));
    }
    let width = estimates.len().min(3);
    let spread = |w: &[f64]| {
        let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let best = estimates
        .windows(width)
        .min_by(|a, b| spread(a).total_cmp(&spread(b)))
        .expect("at least one window");
    Ok(best.iter().sum::<f64>() / width as f64)
}

fn hessian_of(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut g = vec![0; n];
            g[i] += 1;
            g[j] += 1;
            let v = richardson_partial(f, x, &g, h)?;
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    Ok(hess)
}

fn gradient_of(f: &dyn Fn(&[f64]) -> Result<f64>, x: &[f64], h: f64) -> Result<Vec<f64>> {
    (0..x.len())
        .map(|i| {
            let mut g = vec![0; x.len()];
            g[i] = 1;
            richardson_partial(f, x, &g, h)
        })
        .collect()
}

/// Eigen-decomposition with deterministic ordering and signs.
///
/// Eigenvalues ascending. Within a cluster of (numerically) equal eigenvalues
/// the basis is rebuilt by projecting the coordinate axes onto the eigenspace,
/// so exactly isotropic data yields coordinate axes rather than an arbitrary
/// rotation. Each column's first nonzero component is made positive.
pub(crate) fn sorted_symmetric_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let eig = SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut cols: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..n).map(|i| eig.eigenvectors[(i, k)]).collect())
        .collect();

    let scale = values.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[end] - values[start]).abs() <= 1e-7 * scale {
            end += 1;
        }
        if end - start > 1 {
            let span: Vec<Vec<f64>> = cols[start..end].to_vec();
            let mut fresh: Vec<Vec<f64>> = Vec::new();
            for axis in 0..n {
                if fresh.len() == span.len() {
                    break;
                }
                // projection of e_axis onto the cluster eigenspace
                let mut v = vec![0.0; n];
                for s in &span {
                    let c = s[axis];
                    for i in 0..n {
                        v[i] += c * s[i];
                    }
                }
                for f in &fresh {
                    let c: f64 = (0..n).map(|i| f[i] * v[i]).sum();
                    for i in 0..n {
                        v[i] -= c * f[i];
                    }
                }
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    fresh.push(v.iter().map(|x| x / norm).collect());
                }
            }
            if fresh.len() == span.len() {
                cols[start..end].clone_from_slice(&fresh);
            }
        }
        start = end;
    }
    for c in cols.iter_mut() {
        if let Some(first) = c.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    // basis[i][j] = component i of column j
    let basis = (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect();
    (values, basis)
}

/// Options for [`locate_max`].
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub max_iterations: usize,
    /// Difference step for gradient and Hessian estimates.
    pub step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_iterations: 200,
            step: 1e-3,
        }
    }
}

/// Locate the maximum of `H` by damped Newton ascent from `seed`.
pub fn locate_max(model: &WidthModel, seed: &[f64], tol: f64) -> Result<Vec<f64>> {
    locate_max_with(model, seed, tol, SearchOptions::default())
}

pub fn locate_max_with(model: &WidthModel, seed: &[f64], tol: f64, opts: SearchOptions) -> Result<Vec<f64>> {
    let n = model.dim() - 1;
    if seed.len() != n {
        return invalid(format!("seed has {} coordinates, expected {n}", seed.len()));
    }
    crate::error::check_finite(seed)?;
    let f = |x: &[f64]| eval_h(model, x);
    let mut x = seed.to_vec();
    let mut hx = model
        .total_width(&x)
        .ok_or_else(|| Error::InvalidInput(format!("seed {seed:?} lies outside the base domain")))?;
    let h = opts.step;
    let mut grad_norm = f64::INFINITY;

    for _ in 0..opts.max_iterations {
        let g = gradient_of(&f, &x, h).map_err(|_| boundary_error(&x))?;
        grad_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm <= tol {
            reject_flat(model, &x, h)?;
            return Ok(x);
        }
        let hess = hessian_of(&f, &x, h).map_err(|_| boundary_error(&x))?;
        let (vals, basis) = sorted_symmetric_eigen(&hess);
        // Newton on the negative-definite part, gradient ascent otherwise
        let scale = vals.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-12);
        let mut step = vec![0.0; n];
        for j in 0..n {
            let gj: f64 = (0..n).map(|i| basis[i][j] * g[i]).sum();
            let curv = if vals[j] < -1e-8 * scale { -vals[j] } else { scale.max(1.0) };
            for i in 0..n {
                step[i] += basis[i][j] * gj / curv;
            }
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if let Some(ht) = model.total_width(&trial) {
                if ht >= hx - 1e-15 * hx.abs().max(1.0) {
                    x = trial;
                    hx = ht;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Err(Error::SearchFailed {
        iterations: opts.max_iterations,
        best: x,
        grad_norm,
    })
}

/// Widest sample of a uniform scan with `per_axis` points per axis of the
/// bounding box (endpoints excluded). Ties keep the first sample in scan order.
pub fn scan_for_max(model: &WidthModel, per_axis: usize) -> Option<Vec<f64>> {
    let bb = model.bounding_box();
    let n = bb.dim();
    let total = per_axis.checked_pow(n as u32)?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for flat in 0..total {
        let mut rem = flat;
        let x: Vec<f64> = (0..n)
            .map(|a| {
                let k = rem % per_axis;
                rem /= per_axis;
                bb.lower[a] + (bb.upper[a] - bb.lower[a]) * (k as f64 + 1.0) / (per_axis as f64 + 1.0)
            })
            .collect();
        if let Some(h) = model.total_width(&x) {
            if h > 0.0 && best.as_ref().is_none_or(|b| h > b.0) {
                best = Some((h, x));
            }
        }
    }
    best.map(|b| b.1)
}

/// Scan for the widest point, refine it and extract the jet there.
pub fn jet_at_widest_point(model: &WidthModel, opts: &JetOptions) -> Result<TaylorWidthData> {
    let per_axis = match model.dim() - 1 {
        1 => 401,
        2 => 61,
        _ => 21,
    };
    let seed = scan_for_max(model, per_axis)
        .ok_or_else(|| Error::DegenerateDomain(format!("{} has no positive width", model.describe())))?;
    let x_bar = locate_max(model, &seed, 1e-10)?;
    extract_taylor(model, &x_bar, 4, opts)
}

fn boundary_error(x: &[f64]) -> Error {
    Error::UnsupportedGeometry(format!(
        "maximum search reached the boundary of the base domain near {x:?}"
    ))
}

fn reject_flat(model: &WidthModel, x: &[f64], h: f64) -> Result<()> {
    let h0 = eval_h(model, x)?;
    let n = x.len();
    let r = 10.0 * h;
    let mut all_flat = true;
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut p = x.to_vec();
            p[i] += s * r;
            match model.total_width(&p) {
                Some(v) if (v - h0).abs() <= 1e-13 * h0.abs().max(1.0) => {}
                _ => all_flat = false,
            }
        }
    }
    if all_flat {
        return Err(Error::UnsupportedGeometry(format!(
            "H is constant near {x:?}: no isolated maximum"
        )));
    }
    Ok(())
}

/// Extract the quartic jet of `H` and the gradient of `h_minus` at `x_bar`.
pub fn extract_taylor(model: &WidthModel, x_bar: &[f64], order: usize, opts: &JetOptions) -> Result<TaylorWidthData> {
    if order != 4 {
        return invalid(format!("jet order {order} unsupported (only 4)"));
    }
    let n = model.dim() - 1;
    if x_bar.len() != n {
        return invalid(format!("x_bar has {} coordinates, expected {n}", x_bar.len()));
    }
    crate::error::check_finite(x_bar)?;
    let f = |x: &[f64]| eval_h(model, x);
    let h0 = eval_h(model, x_bar)?;
    if !(h0 > 0.0) {
        return Err(Error::UnsupportedGeometry(format!("H(x_bar) = {h0} is not positive")));
    }

    // Hessian in the original coordinates fixes the rotated frame
    let mut hess = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let mut g = vec![0; n];
            g[i] += 1;
            g[j] += 1;
            let d = richardson_partial(&f, x_bar, &g, opts.step)?;
            hess[i][j] = d;
            hess[j][i] = d;
        }
    }
    let (mu, basis) = sorted_symmetric_eigen(&hess);
    let scale = mu.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if mu.iter().any(|&m| !(m < -1e-6 * scale.max(1e-12))) || scale < 1e-10 {
        return Err(Error::DegenerateMaximum { eigenvalues: mu });
    }
    let alpha: Vec<f64> = mu.iter().map(|m| (-m).sqrt()).collect();

    // Cubic and quartic parts are differenced along the rotated axes
    // directly: mixed stencils in a frame aligned with the Hessian carry far
    // less roundoff than rotating original-frame coefficients afterwards.
    let g = |y: &[f64]| {
        let x: Vec<f64> = (0..n)
            .map(|i| x_bar[i] + (0..n).map(|j| basis[i][j] * y[j]).sum::<f64>())
            .collect();
        eval_h(model, &x)
    };
    let origin = vec![0.0; n];
    let mut rotated: Vec<MonomialPolynomial> = Vec::new();
    for deg in 3..=4 {
        let mut p = MonomialPolynomial::zero(n);
        for gamma in MultiIndex::of_degree(n, deg) {
            let d = richardson_partial(&g, &origin, gamma.as_slice(), opts.step)?;
            p.add_term(gamma.clone(), d / gamma.factorial());
        }
        rotated.push(p);
    }
    let (h3_rot, h4_rot) = (&rotated[0], &rotated[1]);
    let gm = model
        .gradient(x_bar)
        .ok_or_else(|| Error::UnsupportedGeometry("h_minus is not differentiable at x_bar".into()))?
        .h_minus;
    let grad_h1: Vec<f64> = (0..n).map(|j| (0..n).map(|i| basis[i][j] * gm[i]).sum()).collect();

    let mut jet = TaylorWidthData {
        d: n + 1,
        x_bar: x_bar.to_vec(),
        h0,
        k: 1,
        alpha,
        basis,
        beta: beta_from_cubic(&h3_rot.homogeneous_part(3)),
        h4: h4_rot.homogeneous_part(4),
        grad_h1,
        fit_residual: 0.0,
    };
    jet.fit_residual = jet_fit_residual(model, &jet, opts.fit_radius)?;
    jet.validate()?;
    if jet.fit_residual > opts.fit_tolerance {
        return Err(Error::Accuracy {
            residual: jet.fit_residual,
            tolerance: opts.fit_tolerance,
        });
    }
    Ok(jet)
}

/// Largest `|H(x_bar + v) - jet(v)|` over axis and diagonal points at radius `r`.
pub fn jet_fit_residual(model: &WidthModel, jet: &TaylorWidthData, r: f64) -> Result<f64> {
    let n = jet.n();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        dirs.push(e);
        for j in i + 1..n {
            for s in [-1.0, 1.0] {
                let mut e = vec![0.0; n];
                e[i] = std::f64::consts::FRAC_1_SQRT_2;
                e[j] = s * std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(e);
            }
        }
    }
    let mut worst: f64 = 0.0;
    for d in &dirs {
        for s in [-1.0, 1.0] {
            let v: Vec<f64> = d.iter().map(|c| s * r * c).collect();
            let x: Vec<f64> = jet.x_bar.iter().zip(&v).map(|(a, b)| a + b).collect();
            let h = eval_h(model, &x)?;
            worst = worst.max((h - jet.eval_jet(&v)).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ellipse_closed_form() {
        let jet = ellipsoid_taylor(&[1.0, 1.0]).unwrap();
        assert_eq!(jet.h0, 2.0);
        assert_relative_eq!(jet.alpha[0], 2f64.sqrt(), epsilon = 1e-15);
        assert!(jet.beta.iter().all(|b| *b == 0.0));
        assert_eq!(jet.grad_h1, vec![0.0]);
    }

    #[test]
    fn ellipsoid_alpha_sorted_and_h4_coefficients() {
        let a = [2.0, 1.0, 3.0];
        let jet = ellipsoid_taylor(&a).unwrap();
        assert_eq!(jet.h0, 6.0);
        assert_relative_eq!(jet.alpha[0], 6f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(jet.alpha[1], 6f64.sqrt() / 2.0, epsilon = 1e-14);
        // rotated axis 0 is the original axis 1 (a = 1)
        assert_eq!(jet.basis[1][0], 1.0);
        let (ai, aj) = (1.0, 2.0);
        let x2y2 = jet.h4.coeff(&MultiIndex(vec![2, 2]));
        assert_relative_eq!(x2y2, -3.0 * 2.0 / (4.0 * ai * ai * aj * aj), epsilon = 1e-15);
        let x4 = jet.h4.coeff(&MultiIndex(vec![4, 0]));
        assert_relative_eq!(x4, -3.0 / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn ellipsoid_taylor_rejects_bad_axes() {
        assert!(ellipsoid_taylor(&[0.0, 1.0]).is_err());
        assert!(ellipsoid_taylor(&[1.0, -2.0]).is_err());
    }

    #[test]
    fn numeric_matches_closed_form_ellipse() {
        let m = WidthModel::ellipsoid(&[2.0, 2.0]).unwrap();
        let num = extract_taylor(&m, &[0.0], 4, &JetOptions::default()).unwrap();
        let exact = ellipsoid_taylor(&[2.0, 2.0]).unwrap();
        assert!((num.h0 - exact.h0).abs() < 1e-8);
        assert!((num.alpha[0] - exact.alpha[0]).abs() < 1e-8);
        assert!(num.beta.iter().all(|b| b.abs() < 1e-8));
        for (k, c) in exact.h4.terms() {
            assert!((num.h4.coeff(k) - c).abs() < 1e-8, "{k:?}");
        }
    }

    #[test]
    fn beta_is_symmetric() {
        let h3 = MonomialPolynomial::from_terms(
            3,
            [
                (MultiIndex(vec![1, 1, 1]), 0.6),
                (MultiIndex(vec![2, 1, 0]), -0.9),
                (MultiIndex(vec![0, 0, 3]), 0.25),
            ],
        )
        .unwrap();
        let b = beta_from_cubic(&h3);
        let idx = |p: usize, q: usize, j: usize| b[(p * 3 + q) * 3 + j];
        assert!((idx(0, 1, 2) - 0.1).abs() < 1e-16);
        for (p, q, j) in [(0, 1, 2), (0, 0, 1), (2, 2, 2)] {
            let v = idx(p, q, j);
            for (a, bb, c) in [(p, j, q), (q, p, j), (q, j, p), (j, p, q), (j, q, p)] {
                assert_eq!(v.to_bits(), idx(a, bb, c).to_bits());
            }
        }
    }

    #[test]
    fn flat_width_is_rejected() {
        let m = WidthModel::slab(&[1.0], 0.5, 0.5).unwrap();
        assert!(matches!(locate_max(&m, &[0.5], 1e-10), Err(Error::UnsupportedGeometry(_))));
        assert!(matches!(
            extract_taylor(&m, &[0.5], 4, &JetOptions::default()),
            Err(Error::DegenerateMaximum { .. })
        ));
    }
}
