//! Smallest eigenpairs of sparse symmetric matrices.
//!
//! Shift-invert block subspace iteration: each sweep solves
//! `(A - shift I) Y = X` with line-preconditioned conjugate gradients, then
//! orthonormalizes `Y` and applies Rayleigh-Ritz with the unshifted `A`.
//! Reported residuals are `||A x - lambda x||` for unit `x`, always computed
//! with the original matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::par;
use crate::sparse::{CsrMatrix, LinePreconditioner};

/// Dimension below which the matrix is simply densified.
const DENSE_LIMIT: usize = 400;

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Convergence: residual <= tol * max(1, |lambda|).
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Relative residual target of each inner solve.
    pub inner_tol: f64,
    /// Guard vectors carried beyond `count`.
    pub extra: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_outer: 300,
            max_inner: 20_000,
            inner_tol: 1e-11,
            extra: 3,
            seed: 0x5eed_7411,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub values: Vec<f64>,
    /// Unit eigenvectors, sign-fixed so the largest-magnitude entry is positive.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Largest unconverged residual after each outer sweep.
    pub trace: Vec<f64>,
}

/// `count` smallest eigenpairs of `a`, with `shift` strictly below them all.
pub fn smallest_eigenvalues(a: &CsrMatrix, count: usize, shift: f64, tol: f64) -> Result<EigenResult> {
    let opts = EigenOptions {
        tol,
        ..EigenOptions::default()
    };
    smallest_eigenvalues_with(a, count, shift, &opts)
}

pub fn smallest_eigenvalues_with(a: &CsrMatrix, count: usize, shift: f64, opts: &EigenOptions) -> Result<EigenResult> {
    let n = a.dim();
    if count == 0 {
        return invalid("eigenvalue count must be at least 1");
    }
    if count > n {
        return invalid(format!("requested {count} eigenvalues from a {n}-dimensional operator"));
    }
    if !shift.is_finite() {
        return invalid("shift must be finite");
    }
    if n <= DENSE_LIMIT {
        return dense_eigen(a, count, shift);
    }
    let pre = LinePreconditioner::new(a, shift).ok_or(Error::ShiftAboveSpectrum { shift })?;
    let b = (count + opts.extra).min(n);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut x);
    // first sweep: plain solves from zero
    let mut ritz: Vec<f64> = vec![f64::INFINITY; b];
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut ax = vec![vec![0.0; n]; b];

    for outer in 1..=opts.max_outer {
        let mut y: Vec<Vec<f64>> = Vec::with_capacity(b);
        for (xi, &ri) in x.iter().zip(&ritz) {
            let mut yi = if ri.is_finite() && ri - shift > 0.0 {
                xi.iter().map(|v| v / (ri - shift)).collect()
            } else {
                vec![0.0; n]
            };
            inner_total += pcg(a, shift, &pre, xi, &mut yi, opts.inner_tol, opts.max_inner)?;
            y.push(yi);
        }
        orthonormalize(&mut y);
        let ay: Vec<Vec<f64>> = y
            .iter()
            .map(|v| {
                let mut o = vec![0.0; n];
                a.matvec(v, &mut o);
                o
            })
            .collect();
        let m = y.len();
        let g = DMatrix::from_fn(m, m, |i, j| {
            let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
            par::dot(&y[lo], &ay[hi])
        });
        let (vals, vecs) = sorted_eigen(g);
        x = combine(&y, &vecs);
        ax = combine(&ay, &vecs);
        ritz = vals;
        while ritz.len() < b {
            ritz.push(f64::INFINITY);
        }
        let res: Vec<f64> = (0..count).map(|k| residual(&ax[k], &x[k], ritz[k])).collect();
        let worst = res
            .iter()
            .zip(&ritz)
            .map(|(r, l)| r / l.abs().max(1.0))
            .fold(0.0f64, f64::max);
        trace.push(worst);
        if ritz[0] <= shift {
            return Err(Error::ShiftAboveSpectrum { shift });
        }
        if worst <= opts.tol {
            let mut vectors: Vec<Vec<f64>> = x.into_iter().take(count).collect();
            vectors.iter_mut().for_each(|v| fix_sign(v));
            return Ok(EigenResult {
                values: ritz[..count].to_vec(),
                vectors,
                residuals: res,
                outer_iterations: outer,
                inner_iterations: inner_total,
                trace,
            });
        }
    }
    let _ = ax;
    Err(Error::Convergence {
        reason: format!("subspace iteration did not reach tol {:e} in {} sweeps", opts.tol, opts.max_outer),
        trace,
    })
}

fn dense_eigen(a: &CsrMatrix, count: usize, shift: f64) -> Result<EigenResult> {
    let n = a.dim();
    let d = a.to_dense();
    let g = DMatrix::from_fn(n, n, |i, j| if i <= j { d[i][j] } else { d[j][i] });
    let (vals, vecs) = sorted_eigen(g);
    if vals[0] <= shift {
        return Err(Error::ShiftAboveSpectrum { shift });
    }
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for k in 0..count {
        let mut v: Vec<f64> = (0..n).map(|i| vecs[(i, k)]).collect();
        fix_sign(&mut v);
        let mut av = vec![0.0; n];
        a.matvec(&v, &mut av);
        residuals.push(residual(&av, &v, vals[k]));
        vectors.push(v);
    }
    Ok(EigenResult {
        values: vals[..count].to_vec(),
        vectors,
        residuals,
        outer_iterations: 1,
        inner_iterations: 0,
        trace: vec![],
    })
}

fn sorted_eigen(g: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = g.nrows();
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let n = basis[0].len();
    (0..coeffs.ncols())
        .map(|k| {
            let mut out = vec![0.0; n];
            for (j, bj) in basis.iter().enumerate() {
                par::axpy(coeffs[(j, k)], bj, &mut out);
            }
            out
        })
        .collect()
}

fn residual(ax: &[f64], x: &[f64], lambda: f64) -> f64 {
    let mut r = ax.to_vec();
    par::axpy(-lambda, x, &mut r);
    par::norm(&r) / par::norm(x)
}

fn fix_sign(v: &mut [f64]) {
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        par::scale(-1.0, v);
    }
}

/// Twice-iterated modified Gram-Schmidt. Vectors that collapse are replaced
/// by deterministic pseudo-random directions.
fn orthonormalize(vs: &mut [Vec<f64>]) {
    for i in 0..vs.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let (head, tail) = vs.split_at_mut(i);
                let c = par::dot(&head[j], &tail[0]);
                par::axpy(-c, &head[j], &mut tail[0]);
            }
        }
        let nrm = par::norm(&vs[i]);
        if nrm < 1e-300 || !nrm.is_finite() {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64 + 1);
            vs[i].iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            for j in 0..i {
                let (head, tail) = vs.split_at_mut(i);
                let c = par::dot(&head[j], &tail[0]);
                par::axpy(-c, &head[j], &mut tail[0]);
            }
            let nrm = par::norm(&vs[i]);
            par::scale(1.0 / nrm, &mut vs[i]);
        } else {
            par::scale(1.0 / nrm, &mut vs[i]);
        }
    }
}

/// Preconditioned CG for `(A - shift I) x = b`, starting from the given `x`.
/// Returns the iteration count.
pub fn pcg(
    a: &CsrMatrix,
    shift: f64,
    pre: &LinePreconditioner,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let bnorm = par::norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    par::axpy(-shift, x, &mut r);
    // r = b - (A - s) x
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut trace = Vec::new();
    for it in 0..max_iter {
        let rn = par::norm(&r);
        if rn <= rel_tol * bnorm {
            return Ok(it);
        }
        if it % 50 == 0 {
            trace.push(rn / bnorm);
        }
        a.matvec(&p, &mut ap);
        par::axpy(-shift, &p, &mut ap);
        let pap = par::dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::ShiftAboveSpectrum { shift });
        }
        let alpha = rz / pap;
        par::axpy(alpha, &p, x);
        par::axpy(-alpha, &ap, &mut r);
        pre.apply(&r, &mut z);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        par::xpby(&z, beta, &mut p);
    }
    let rn = par::norm(&r) / bnorm;
    trace.push(rn);
    Err(Error::Convergence {
        reason: format!("inner CG stagnated at relative residual {rn:.3e} after {max_iter} iterations"),
        trace,
    })
}
