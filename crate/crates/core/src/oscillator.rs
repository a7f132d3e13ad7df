//! Spectrum of the effective transverse operator
//! `G_n = -Laplacian - 2 pi^2 n^2 H_{2k}(xi) / H0^3`.
//!
//! For a quadratic well (`k = 1`) this is a tensor harmonic oscillator with
//! frequencies `theta_j`, whose levels are `Lambda(m) = sum (2 m_j + 1) theta_j`.
//! General polynomial wells go through a finite-difference solve.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::f64::consts::PI;

use serde::Serialize;

use crate::eigen::{smallest_eigenvalues_with, EigenOptions};
use crate::error::{invalid, Error, Result};
use crate::poly::{MonomialPolynomial, MultiIndex};
use crate::sparse::CsrMatrix;
use crate::taylor::TaylorWidthData;

/// Hard cap on the number of levels the analytic enumeration will produce.
pub const LEVEL_CAP: usize = 100_000;

/// One oscillator eigenvalue with its quantum numbers.
#[derive(Clone, Debug, Serialize)]
pub struct Level {
    pub lambda: f64,
    pub index: MultiIndex,
    /// Levels sharing a group id are degenerate (within the grouping tolerance).
    pub group: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OscillatorSpectrum {
    pub n: usize,
    pub theta: Vec<f64>,
    pub levels: Vec<Level>,
}

impl OscillatorSpectrum {
    /// Multi-indices of every level in group `group`, in stored order.
    pub fn group(&self, group: usize) -> Vec<MultiIndex> {
        self.levels.iter().filter(|l| l.group == group).map(|l| l.index.clone()).collect()
    }

    pub fn group_of(&self, m: &MultiIndex) -> Option<usize> {
        self.levels.iter().find(|l| &l.index == m).map(|l| l.group)
    }

    pub fn values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.lambda).collect()
    }
}

/// `Lambda(m) = sum_j (2 m_j + 1) theta_j`.
pub fn ladder_value(theta: &[f64], m: &MultiIndex) -> f64 {
    theta
        .iter()
        .zip(m.as_slice())
        .map(|(t, &k)| (2 * k + 1) as f64 * t)
        .sum()
}

/// Two levels are degenerate when they differ by at most `1e-9 (1 + |Lambda|)`.
pub fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

struct Candidate {
    lambda: f64,
    index: MultiIndex,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // reversed: BinaryHeap pops the smallest lambda first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lambda
            .total_cmp(&self.lambda)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Lowest `count` levels of the harmonic oscillator with the given frequencies.
///
/// A degenerate group is always generated completely and ordered
/// lexicographically by multi-index before the list is truncated, so the
/// first `count` levels are a prefix of the first `count + j` levels.
pub fn ladder_levels(theta: &[f64], count: usize) -> Result<Vec<Level>> {
    if count == 0 {
        return invalid("level count must be at least 1");
    }
    if count > LEVEL_CAP {
        return Err(Error::CapExceeded { cap: LEVEL_CAP });
    }
    if theta.is_empty() || theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return invalid(format!("oscillator frequencies must be positive, got {theta:?}"));
    }
    let dim = theta.len();
    let mut heap = BinaryHeap::new();
    let mut seen = BTreeSet::new();
    let zero = MultiIndex::zero(dim);
    heap.push(Candidate {
        lambda: ladder_value(theta, &zero),
        index: zero.clone(),
    });
    seen.insert(zero);

    // popped in ascending lambda; collect groups
    let mut groups: Vec<Vec<(f64, MultiIndex)>> = Vec::new();
    let mut total = 0usize;
    while let Some(c) = heap.pop() {
        let joins = groups.last().is_some_and(|g| same_level(g[0].0, c.lambda));
        if !joins && total >= count {
            break;
        }
        for j in 0..dim {
            let mut next = c.index.clone();
            next.0[j] += 1;
            if seen.insert(next.clone()) {
                heap.push(Candidate {
                    lambda: ladder_value(theta, &next),
                    index: next,
                });
            }
        }
        if joins {
            groups.last_mut().expect("group exists").push((c.lambda, c.index));
        } else {
            groups.push(vec![(c.lambda, c.index)]);
        }
        total += 1;
        if seen.len() > 64 * LEVEL_CAP {
            return Err(Error::CapExceeded { cap: LEVEL_CAP });
        }
    }
    let mut levels = Vec::with_capacity(count);
    for (gid, mut g) in groups.into_iter().enumerate() {
        g.sort_by(|a, b| a.1.cmp(&b.1));
        for (lambda, index) in g {
            if levels.len() == count {
                break;
            }
            levels.push(Level {
                lambda,
                index,
                group: gid,
            });
        }
    }
    Ok(levels)
}

/// Analytic spectrum of `G_n` for a quadratic well.
pub fn oscillator_spectrum(jet: &TaylorWidthData, n: usize, count: usize) -> Result<OscillatorSpectrum> {
    if jet.k != 1 {
        return Err(Error::UseNumericPath(jet.k));
    }
    if n == 0 {
        return invalid("transverse mode n starts at 1");
    }
    let theta = jet.theta(n);
    let levels = ladder_levels(&theta, count)?;
    Ok(OscillatorSpectrum { n, theta, levels })
}

/// Normalized Hermite function `prod_j h_{m_j}(sqrt(theta_j) xi_j) exp(-theta_j xi_j^2 / 2)`.
#[derive(Clone, Debug, Serialize)]
pub struct HermiteEigenfunction {
    pub multi_index: MultiIndex,
    pub theta: Vec<f64>,
    /// `prod_j H_{m_j}(sqrt(theta_j) xi_j)` (physicists' Hermite) in monomials of `xi`.
    pub polynomial_part: MonomialPolynomial,
    /// `prod_j (theta_j/pi)^{1/4} / sqrt(2^{m_j} m_j!)`.
    pub normalization: f64,
}

impl HermiteEigenfunction {
    pub fn new(theta: &[f64], m: &MultiIndex) -> Result<Self> {
        if m.dim() != theta.len() {
            return invalid(format!(
                "multi-index {:?} does not match {} oscillator axes",
                m.as_slice(),
                theta.len()
            ));
        }
        if theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return invalid(format!("oscillator frequencies must be positive, got {theta:?}"));
        }
        let dim = theta.len();
        let mut poly = MonomialPolynomial::constant(dim, 1.0);
        let mut norm = 1.0;
        for (j, (&t, &k)) in theta.iter().zip(m.as_slice()).enumerate() {
            let coeffs = hermite_coefficients(k);
            let s = t.sqrt();
            let mut factor = MonomialPolynomial::zero(dim);
            for (p, c) in coeffs.iter().enumerate() {
                if *c != 0.0 {
                    let mut e = vec![0; dim];
                    e[j] = p;
                    factor.add_term(MultiIndex(e), c * s.powi(p as i32));
                }
            }
            poly = &poly * &factor;
            norm *= (t / PI).powf(0.25) / (2f64.powi(k as i32) * crate::poly::factorial(k)).sqrt();
        }
        Ok(HermiteEigenfunction {
            multi_index: m.clone(),
            theta: theta.to_vec(),
            polynomial_part: poly,
            normalization: norm,
        })
    }

    /// Polynomial `Q` with `f = Q Psi0`, where `Psi0` is the normalized ground state.
    pub fn relative_polynomial(&self) -> MonomialPolynomial {
        let ground: f64 = self.theta.iter().map(|t| (t / PI).powf(0.25)).product();
        self.polynomial_part.scaled(self.normalization / ground)
    }

    pub fn eigenvalue(&self) -> f64 {
        ladder_value(&self.theta, &self.multi_index)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        let gauss: f64 = self.theta.iter().zip(xi).map(|(t, x)| -0.5 * t * x * x).sum();
        self.normalization * self.polynomial_part.eval(xi) * gauss.exp()
    }
}

pub fn hermite_eigenfunction(spec: &OscillatorSpectrum, m: &MultiIndex) -> Result<HermiteEigenfunction> {
    HermiteEigenfunction::new(&spec.theta, m)
}

/// Coefficients of the physicists' Hermite polynomial `H_k`, lowest power first.
pub fn hermite_coefficients(k: usize) -> Vec<f64> {
    let mut prev = vec![1.0];
    if k == 0 {
        return prev;
    }
    let mut cur = vec![0.0, 2.0];
    for j in 1..k {
        // H_{j+1} = 2x H_j - 2j H_{j-1}
        let mut next = vec![0.0; j + 2];
        for (p, c) in cur.iter().enumerate() {
            next[p + 1] += 2.0 * c;
        }
        for (p, c) in prev.iter().enumerate() {
            next[p] -= 2.0 * j as f64 * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Options for the finite-difference Schrodinger solve.
#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    /// Accepted level shift when the box grows by 25%, relative to `1 + |Lambda|`.
    pub box_tolerance: f64,
    /// Eigen-solver residual target.
    pub tol: f64,
    /// Richardson-refine with a second grid of twice the density.
    pub richardson: bool,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            box_tolerance: 1e-7,
            tol: 1e-10,
            richardson: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericSpectrum {
    pub values: Vec<f64>,
    /// Raw values on the base grid and, with Richardson, on the refined grid.
    pub coarse: Vec<f64>,
    pub fine: Option<Vec<f64>>,
    /// Largest level shift observed when the box grew by 25%.
    pub box_delta: f64,
}

/// Box half-width and grid used by default for frequencies `theta`.
pub fn default_box(theta: &[f64]) -> (f64, usize) {
    let tmin = theta.iter().copied().fold(f64::INFINITY, f64::min);
    (8.0 / tmin.sqrt(), 201)
}

/// Lowest `count` eigenvalues of `-Laplacian + V` with `V = -2 pi^2 n^2 well / H0^3`
/// on `(-L, L)^{dim}` with Dirichlet walls, by second-order finite differences.
pub fn schrodinger_solve_numeric(
    well: &MonomialPolynomial,
    h0: f64,
    n: usize,
    box_halfwidth: f64,
    grid_points: usize,
    count: usize,
) -> Result<NumericSpectrum> {
    schrodinger_solve_with(well, h0, n, box_halfwidth, grid_points, count, &NumericOptions::default())
}

pub fn schrodinger_solve_with(
    well: &MonomialPolynomial,
    h0: f64,
    n: usize,
    box_halfwidth: f64,
    grid_points: usize,
    count: usize,
    opts: &NumericOptions,
) -> Result<NumericSpectrum> {
    let dim = well.dim();
    if dim == 0 || dim > 3 {
        return invalid(format!("numeric oscillator supports 1 to 3 axes, got {dim}"));
    }
    if !(h0 > 0.0) || n == 0 || !(box_halfwidth > 0.0) || grid_points < 5 || count == 0 {
        return invalid("need H0 > 0, n >= 1, box > 0, grid >= 5 points, count >= 1");
    }
    let scale = 2.0 * PI * PI * (n * n) as f64 / h0.powi(3);
    let potential = well.scaled(-scale);
    check_confining(&potential, box_halfwidth)?;

    let h = 2.0 * box_halfwidth / (grid_points - 1) as f64;
    let coarse = fd_levels(&potential, box_halfwidth, grid_points - 2, count, opts.tol)?;

    // same spacing, 25% larger box
    let big_half = 1.25 * box_halfwidth;
    let big_interior = ((2.0 * big_half / h).round() as usize).saturating_sub(1);
    let big = fd_levels(&potential, 0.5 * (big_interior + 1) as f64 * h, big_interior, count, opts.tol)?;
    let box_delta = coarse
        .iter()
        .zip(&big)
        .map(|(a, b)| (a - b).abs() / (1.0 + a.abs()))
        .fold(0.0f64, f64::max);
    if box_delta > opts.box_tolerance {
        return Err(Error::BoxTooSmall {
            delta: box_delta,
            tolerance: opts.box_tolerance,
        });
    }

    if !opts.richardson {
        return Ok(NumericSpectrum {
            values: coarse.clone(),
            coarse,
            fine: None,
            box_delta,
        });
    }
    // halve the spacing: 2N - 1 points in total
    let fine = fd_levels(&potential, box_halfwidth, 2 * grid_points - 3, count, opts.tol)?;
    let values = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    Ok(NumericSpectrum {
        values,
        coarse,
        fine: Some(fine),
        box_delta,
    })
}

fn check_confining(potential: &MonomialPolynomial, half: f64) -> Result<()> {
    let dim = potential.dim();
    let samples = 16usize;
    let total = (2 * samples + 1).pow(dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; dim];
        for xi in x.iter_mut() {
            let k = rem % (2 * samples + 1);
            rem /= 2 * samples + 1;
            *xi = (k as f64 - samples as f64) / samples as f64 * half;
        }
        if x.iter().all(|v| *v == 0.0) {
            continue;
        }
        let v = potential.eval(&x);
        if !(v > 0.0) {
            return Err(Error::InvalidPotential(format!(
                "potential is not positive away from the origin (V({x:?}) = {v:e})"
            )));
        }
    }
    Ok(())
}

/// Eigenvalues of the FD operator with `m` interior points per axis on `(-L, L)`.
///
/// A separable potential (no mixed monomials) makes the tensor-grid matrix a
/// Kronecker sum, whose spectrum is exactly the sums of the per-axis spectra.
fn fd_levels(potential: &MonomialPolynomial, half: f64, m: usize, count: usize, tol: f64) -> Result<Vec<f64>> {
    let dim = potential.dim();
    if dim > 1 && potential.terms().all(|(k, _)| k.0.iter().filter(|&&e| e > 0).count() <= 1) {
        let mut axes = vec![MonomialPolynomial::zero(1); dim];
        for (k, c) in potential.terms() {
            let a = k.0.iter().position(|&e| e > 0).unwrap_or(0);
            axes[a].add_term(MultiIndex(vec![k.0[a]]), c);
        }
        let mut sums = vec![0.0];
        for axis in &axes {
            let levels = fd_levels_full(axis, half, m, count.min(m), tol)?;
            let mut next: Vec<f64> = sums.iter().flat_map(|s| levels.iter().map(move |l| s + l)).collect();
            next.sort_by(f64::total_cmp);
            next.truncate(count);
            sums = next;
        }
        if sums.len() < count {
            return invalid(format!("grid has fewer than {count} levels"));
        }
        return Ok(sums);
    }
    fd_levels_full(potential, half, m, count, tol)
}

fn fd_levels_full(potential: &MonomialPolynomial, half: f64, m: usize, count: usize, tol: f64) -> Result<Vec<f64>> {
    let dim = potential.dim();
    let h = 2.0 * half / (m + 1) as f64;
    let inv = 1.0 / (h * h);
    let total = m.pow(dim as u32);
    let coord = |k: usize| -half + (k + 1) as f64 * h;
    // last axis fastest so each grid line along it is a contiguous block
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
    let mut vmin = f64::INFINITY;
    for flat in 0..total {
        let mut idx = vec![0usize; dim];
        let mut rem = flat;
        for a in (0..dim).rev() {
            idx[a] = rem % m;
            rem /= m;
        }
        let x: Vec<f64> = idx.iter().map(|&k| coord(k)).collect();
        let v = potential.eval(&x);
        vmin = vmin.min(v);
        let mut row = Vec::with_capacity(2 * dim + 1);
        let mut stride = 1;
        let mut strides = vec![0; dim];
        for a in (0..dim).rev() {
            strides[a] = stride;
            stride *= m;
        }
        for a in 0..dim {
            if idx[a] > 0 {
                row.push((flat - strides[a], -inv));
            }
        }
        row.push((flat, 2.0 * dim as f64 * inv + v));
        for a in (0..dim).rev() {
            if idx[a] + 1 < m {
                row.push((flat + strides[a], -inv));
            }
        }
        row.sort_by_key(|e| e.0);
        rows.push(row);
    }
    let starts: Vec<usize> = (0..=total / m).map(|k| k * m).collect();
    let a = CsrMatrix::from_rows(rows)?.with_lines(starts)?;
    // V >= vmin and -Laplacian > 0 on the grid, so vmin is a strict lower bound
    let shift = vmin.min(0.0) - 1e-3;
    let opts = EigenOptions {
        tol,
        extra: 4,
        ..EigenOptions::default()
    };
    Ok(smallest_eigenvalues_with(&a, count, shift, &opts)?.values)
}
