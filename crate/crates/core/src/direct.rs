//! Reference eigenvalues of the Dirichlet Laplacian on the thin domain.
//!
//! The domain is mapped onto the cylinder `omega x (0, 1)` with
//! `t = (x_d + eps h_minus) / (eps H)`. In these coordinates the Dirichlet
//! energy of `u(x', t)` is
//!
//! ```text
//! E[u] = int H ( |grad' u + K u_t|^2 + u_t^2 / (eps H)^2 ),   K_i = (d_i h_minus - t d_i H) / H,
//! ```
//!
//! with mass `int H u^2`. Both are discretized cell by cell with trilinear
//! (bilinear) elements, edge-averaged gradients and lumped mass, and the
//! generalized problem is symmetrized as `M^{-1/2} A M^{-1/2}`, i.e. in the
//! variable `sqrt(H) u`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::eigen::{smallest_eigenvalues_with, EigenOptions, EigenResult};
use crate::error::{invalid, Error, Result};
use crate::par;
use crate::sparse::CsrMatrix;
use crate::width::{BoundingBox, WidthModel};

/// Discretization parameters.
#[derive(Clone, Copy, Debug)]
pub struct GridOptions {
    /// Intervals per `x'` axis across the bounding box of `omega`.
    pub resolution: usize,
    /// Intervals across the thin direction, as a fraction of `resolution`.
    pub t_ratio: f64,
    /// Nodes with `H < floor_factor * dx * |grad H|` are treated as Dirichlet.
    pub floor_factor: f64,
}

impl GridOptions {
    pub fn new(resolution: usize) -> Self {
        GridOptions {
            resolution,
            t_ratio: 0.25,
            floor_factor: 2.0,
        }
    }

    fn with_resolution(&self, resolution: usize) -> Self {
        GridOptions { resolution, ..*self }
    }

    pub fn nt(&self) -> usize {
        ((self.resolution as f64 * self.t_ratio).round() as usize).max(2)
    }
}

/// Grid actually used by one solve.
#[derive(Clone, Debug, Serialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Intervals per `x'` axis.
    pub nx: usize,
    /// Intervals in `t`.
    pub nt: usize,
    /// Largest width among nodes removed by the floor test (0 if none).
    pub h_floor: f64,
    pub unknowns: usize,
}

impl GridSpec {
    /// Node counts per axis, `x'` axes first, `t` last.
    pub fn shape(&self) -> Vec<usize> {
        let mut s = vec![self.nx + 1; self.lower.len()];
        s.push(self.nt + 1);
        s
    }

    pub fn dx(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.nx as f64
    }
}

/// The assembled symmetric operator and its bookkeeping.
#[derive(Clone, Debug)]
pub struct MappedOperator {
    pub matrix: CsrMatrix,
    pub grid: GridSpec,
    pub eps: f64,
    /// Flat grid node of each unknown (`t` fastest).
    pub node_of_unknown: Vec<usize>,
    /// `M^{-1/2}` per unknown: maps symmetric eigenvectors back to `u`.
    pub inv_sqrt_mass: Vec<f64>,
    /// Largest `H` over the cells in use.
    pub h_max: f64,
}

impl MappedOperator {
    /// Scatter an eigenvector of the symmetric matrix into `u` on the full node grid.
    pub fn to_grid(&self, v: &[f64]) -> Vec<f64> {
        let total: usize = self.grid.shape().iter().product();
        let mut out = vec![0.0; total];
        for ((&node, &s), &x) in self.node_of_unknown.iter().zip(&self.inv_sqrt_mass).zip(v) {
            out[node] = s * x;
        }
        out
    }

    /// Shift guaranteed to lie below the discrete spectrum.
    ///
    /// Every cell column carries at least the one-dimensional Dirichlet
    /// problem across the thin direction, whose lowest discrete eigenvalue is
    /// `4 nt^2 sin^2(pi / (2 nt)) / (eps H)^2`; the factor 0.9 leaves a margin.
    pub fn safe_shift(&self) -> f64 {
        let nt = self.grid.nt as f64;
        let disc = 4.0 * nt * nt * (PI / (2.0 * nt)).sin().powi(2);
        0.9 * disc / (self.eps * self.h_max).powi(2)
    }
}

struct CellData {
    h: f64,
    grad_h: Vec<f64>,
    grad_hm: Vec<f64>,
}

/// Coefficients of the mapped operator sampled at the grid nodes.
#[derive(Clone, Debug, Serialize)]
pub struct MappedOperatorCoefficients {
    pub eps: f64,
    pub grid: GridSpec,
    /// `1 / H^2` per node (0 where inactive).
    pub kd: Vec<f64>,
    /// `K_i` per node, `ki[i][node]`.
    pub ki: Vec<Vec<f64>>,
    /// Zeroth-order term `V = (1/2) Laplacian H / H - (3/4) |grad H|^2 / H^2`
    /// of the operator acting on `sqrt(H) u`.
    pub potential: Vec<f64>,
    pub active: Vec<bool>,
}

/// Node counts and flat indexing over the `(x', t)` grid.
struct Layout {
    n: usize,
    nx: usize,
    nt: usize,
    lower: Vec<f64>,
    dx: Vec<f64>,
    dt: f64,
}

impl Layout {
    fn new(bbox: &BoundingBox, nx: usize, nt: usize) -> Self {
        let n = bbox.dim();
        let dx = (0..n).map(|i| (bbox.upper[i] - bbox.lower[i]) / nx as f64).collect();
        Layout {
            n,
            nx,
            nt,
            lower: bbox.lower.clone(),
            dx,
            dt: 1.0 / nt as f64,
        }
    }

    fn x_nodes(&self) -> usize {
        (self.nx + 1).pow(self.n as u32)
    }

    fn x_cells(&self) -> usize {
        self.nx.pow(self.n as u32)
    }

    fn split(&self, flat: usize, base: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        let mut rem = flat;
        for a in (0..self.n).rev() {
            idx[a] = rem % base;
            rem /= base;
        }
        idx
    }

    fn join(&self, idx: &[usize], base: usize) -> usize {
        idx.iter().fold(0, |acc, &i| acc * base + i)
    }

    fn x_node_coord(&self, flat: usize) -> Vec<f64> {
        self.split(flat, self.nx + 1)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lower[a] + i as f64 * self.dx[a])
            .collect()
    }

    fn x_cell_center(&self, flat: usize) -> Vec<f64> {
        self.split(flat, self.nx)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lower[a] + (i as f64 + 0.5) * self.dx[a])
            .collect()
    }

    fn cell_volume(&self) -> f64 {
        self.dx.iter().product::<f64>() * self.dt
    }
}

/// Local floor test: a node is dropped when `H < factor * dx * |grad H|`,
/// i.e. when it lies within about `factor` grid spacings of the zero set of
/// `H` by a first-order distance estimate. A single global `max |grad H|` is
/// useless for widths with square-root edges, where the gradient is unbounded.
fn below_floor(model: &WidthModel, x: &[f64], h: f64, dx: f64, factor: f64) -> bool {
    if factor == 0.0 {
        return false;
    }
    match model.gradient(x) {
        Some(g) => {
            let gn = g.total.iter().map(|v| v * v).sum::<f64>().sqrt();
            !gn.is_finite() || h < factor * dx * gn
        }
        None => true,
    }
}

/// Local stiffness matrix of one cell; corner `l` has bit `a` set when it sits
/// on the upper face along axis `a` (`x'` axes first, `t` last).
fn element_matrix(layout: &Layout, cell: &CellData, t_center: f64, eps: f64) -> Vec<f64> {
    let n = layout.n;
    let d = n + 1;
    let corners = 1usize << d;
    let edges = (corners / 2) as f64;
    let vol = layout.cell_volume();
    let h = cell.h;
    let k: Vec<f64> = (0..n)
        .map(|i| (cell.grad_hm[i] - t_center * cell.grad_h[i]) / h)
        .collect();
    let k2: f64 = k.iter().map(|v| v * v).sum();
    let mut coef: Vec<f64> = vec![h; n];
    coef.push(h * k2 + 1.0 / (eps * eps * h));
    let step: Vec<f64> = layout.dx.iter().copied().chain([layout.dt]).collect();

    let mut m = vec![0.0; corners * corners];
    for a in 0..d {
        let w = vol * coef[a] / (edges * step[a] * step[a]);
        for l in 0..corners {
            if l & (1 << a) == 0 {
                let u = l | (1 << a);
                m[l * corners + l] += w;
                m[u * corners + u] += w;
                m[l * corners + u] -= w;
                m[u * corners + l] -= w;
            }
        }
    }
    // mixed term 2 H sum_i K_i Dbar_i Dbar_t with Dbar_a = g_a . u
    let g = |a: usize, l: usize| {
        let s = if l & (1 << a) != 0 { 1.0 } else { -1.0 };
        s / (edges * step[a])
    };
    for i in 0..n {
        let w = vol * h * k[i];
        if w == 0.0 {
            continue;
        }
        for l in 0..corners {
            for r in 0..corners {
                m[l * corners + r] += w * (g(i, l) * g(n, r) + g(n, l) * g(i, r));
            }
        }
    }
    // exact symmetry
    for l in 0..corners {
        for r in l + 1..corners {
            let v = 0.5 * (m[l * corners + r] + m[r * corners + l]);
            m[l * corners + r] = v;
            m[r * corners + l] = v;
        }
    }
    m
}

/// Assemble the symmetric mapped operator on a grid with `resolution`
/// intervals per `x'` axis.
pub fn assemble_mapped_operator(model: &WidthModel, eps: f64, grid: &GridOptions) -> Result<MappedOperator> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if grid.resolution < 2 {
        return invalid("resolution must be at least 2");
    }
    let bbox = model.bounding_box();
    let layout = Layout::new(&bbox, grid.resolution, grid.nt());
    let n = layout.n;
    let dx_max = layout.dx.iter().copied().fold(0.0f64, f64::max);

    let cells: Vec<Option<CellData>> = par::map_range(layout.x_cells(), |c| {
        let x = layout.x_cell_center(c);
        let h = model.total_width(&x)?;
        if !(h > 0.0) {
            return None;
        }
        let g = model.gradient(&x)?;
        Some(CellData {
            h,
            grad_h: g.total,
            grad_hm: g.h_minus,
        })
    });
    for (c, cell) in cells.iter().enumerate() {
        if let Some(cd) = cell {
            if !cd.h.is_finite() || cd.grad_h.iter().chain(&cd.grad_hm).any(|v| !v.is_finite()) {
                return Err(Error::FloorViolation(layout.x_cell_center(c)));
            }
        }
    }
    let h_max = cells.iter().flatten().map(|c| c.h).fold(0.0f64, f64::max);

    // x'-nodes eligible to carry unknowns
    // (active, width of a node removed by the floor test)
    let x_state: Vec<(bool, f64)> = par::map_range(layout.x_nodes(), |k| {
        let x = layout.x_node_coord(k);
        let idx = layout.split(k, layout.nx + 1);
        let on_box = idx.iter().any(|&i| i == 0 || i == layout.nx);
        if on_box || !neighbor_cells(&layout, &idx).iter().any(|c| cells[*c].is_some()) {
            return (false, 0.0);
        }
        match model.total_width(&x) {
            Some(h) if h > 0.0 => {
                if below_floor(model, &x, h, dx_max, grid.floor_factor) {
                    (false, h)
                } else {
                    (true, 0.0)
                }
            }
            _ => (false, 0.0),
        }
    });
    let x_active: Vec<bool> = x_state.iter().map(|s| s.0).collect();
    let h_floor = x_state.iter().map(|s| s.1).fold(0.0f64, f64::max);

    let nt = layout.nt;
    let mut node_of_unknown = Vec::new();
    let mut unknown_of_node = vec![usize::MAX; layout.x_nodes() * (nt + 1)];
    let mut line_starts = vec![0];
    for (k, &act) in x_active.iter().enumerate() {
        if !act {
            continue;
        }
        for j in 1..nt {
            let node = k * (nt + 1) + j;
            unknown_of_node[node] = node_of_unknown.len();
            node_of_unknown.push(node);
        }
        line_starts.push(node_of_unknown.len());
    }
    let unknowns = node_of_unknown.len();
    if unknowns == 0 {
        return Err(Error::DegenerateDomain(format!(
            "no active nodes (largest floored width {h_floor:e}, resolution {})",
            grid.resolution
        )));
    }

    let corners = 1usize << (n + 1);
    let vol = layout.cell_volume();
    // Row-wise assembly: each row visits its adjacent cells in ascending cell
    // order, so A_ab and A_ba accumulate identical terms in identical order.
    let rows: Vec<(Vec<(usize, f64)>, f64)> = par::map_range(unknowns, |u| {
        let node = node_of_unknown[u];
        let xk = node / (nt + 1);
        let j = node % (nt + 1);
        let xidx = layout.split(xk, layout.nx + 1);
        let mut slots: Vec<(usize, f64)> = Vec::new();
        let mut mass = 0.0;
        for (xc, xoff) in neighbor_cells_with_offsets(&layout, &xidx) {
            let Some(cell) = &cells[xc] else { continue };
            for tc in [j - 1, j] {
                let t_center = (tc as f64 + 0.5) * layout.dt;
                let em = element_matrix(&layout, cell, t_center, eps);
                // local corner of this node inside the cell
                let mut me = 0usize;
                for (a, &o) in xoff.iter().enumerate() {
                    if o == 1 {
                        me |= 1 << a;
                    }
                }
                if tc + 1 == j {
                    me |= 1 << n;
                }
                mass += vol * cell.h / corners as f64;
                let cidx = layout.split(xc, layout.nx);
                for other in 0..corners {
                    let v = em[me * corners + other];
                    if v == 0.0 {
                        continue;
                    }
                    let mut oidx = vec![0usize; n];
                    for a in 0..n {
                        oidx[a] = cidx[a] + ((other >> a) & 1);
                    }
                    let ot = tc + ((other >> n) & 1);
                    let onode = layout.join(&oidx, layout.nx + 1) * (nt + 1) + ot;
                    let ou = unknown_of_node[onode];
                    if ou == usize::MAX {
                        continue;
                    }
                    match slots.iter_mut().find(|s| s.0 == ou) {
                        Some(s) => s.1 += v,
                        None => slots.push((ou, v)),
                    }
                }
            }
        }
        slots.sort_by_key(|s| s.0);
        (slots, mass)
    });

    let inv_sqrt_mass: Vec<f64> = rows.iter().map(|r| 1.0 / r.1.sqrt()).collect();
    if let Some(u) = inv_sqrt_mass.iter().position(|s| !s.is_finite()) {
        let node = node_of_unknown[u];
        return Err(Error::FloorViolation(layout.x_node_coord(node / (nt + 1))));
    }
    let scaled: Vec<Vec<(usize, f64)>> = rows
        .into_iter()
        .enumerate()
        .map(|(u, (r, _))| {
            r.into_iter()
                .map(|(c, v)| (c, v * (inv_sqrt_mass[u] * inv_sqrt_mass[c])))
                .collect()
        })
        .collect();
    let matrix = CsrMatrix::from_rows(scaled)?.with_lines(line_starts)?;
    Ok(MappedOperator {
        matrix,
        grid: GridSpec {
            lower: bbox.lower.clone(),
            upper: bbox.upper.clone(),
            nx: layout.nx,
            nt,
            h_floor,
            unknowns,
        },
        eps,
        node_of_unknown,
        inv_sqrt_mass,
        h_max,
    })
}

/// Cells adjacent to an interior `x'` node, ascending.
fn neighbor_cells(layout: &Layout, idx: &[usize]) -> Vec<usize> {
    neighbor_cells_with_offsets(layout, idx).into_iter().map(|(c, _)| c).collect()
}

/// Adjacent cells with the per-axis offset (`-1` stored as 1, `0` as 0) of the
/// cell relative to the node, in ascending cell index.
fn neighbor_cells_with_offsets(layout: &Layout, idx: &[usize]) -> Vec<(usize, Vec<usize>)> {
    let n = layout.n;
    let mut out = Vec::with_capacity(1 << n);
    for combo in 0..(1usize << n) {
        // most significant bit drives axis 0 so that iteration is lexicographic
        let mut cidx = vec![0usize; n];
        let mut offs = vec![0usize; n];
        let mut ok = true;
        for a in 0..n {
            let lower = (combo >> (n - 1 - a)) & 1 == 0;
            if lower {
                if idx[a] == 0 {
                    ok = false;
                    break;
                }
                cidx[a] = idx[a] - 1;
                offs[a] = 1;
            } else {
                if idx[a] >= layout.nx {
                    ok = false;
                    break;
                }
                cidx[a] = idx[a];
            }
        }
        if ok {
            out.push((layout.join(&cidx, layout.nx), offs));
        }
    }
    out
}

/// Sample the mapped-operator coefficients at every grid node.
pub fn mapped_coefficients(model: &WidthModel, eps: f64, grid: &GridOptions) -> Result<MappedOperatorCoefficients> {
    let op = assemble_mapped_operator(model, eps, grid)?;
    let bbox = model.bounding_box();
    let layout = Layout::new(&bbox, grid.resolution, grid.nt());
    let n = layout.n;
    let nt = layout.nt;
    let total = layout.x_nodes() * (nt + 1);
    let mut active = vec![false; total];
    for &node in &op.node_of_unknown {
        active[node] = true;
    }
    let mut kd = vec![0.0; total];
    let mut ki = vec![vec![0.0; total]; n];
    let mut potential = vec![0.0; total];
    let step = 1e-4;
    for k in 0..layout.x_nodes() {
        if !active[k * (nt + 1) + 1] {
            continue;
        }
        let x = layout.x_node_coord(k);
        let (Some(h), Some(g)) = (model.total_width(&x), model.gradient(&x)) else {
            continue;
        };
        let mut lap = 0.0;
        for a in 0..n {
            let mut p = x.clone();
            let mut q = x.clone();
            p[a] += step;
            q[a] -= step;
            match (model.total_width(&p), model.total_width(&q)) {
                (Some(hp), Some(hq)) => lap += (hp - 2.0 * h + hq) / (step * step),
                _ => return Err(Error::FloorViolation(x)),
            }
        }
        let g2: f64 = g.total.iter().map(|v| v * v).sum();
        let v = 0.5 * lap / h - 0.75 * g2 / (h * h);
        for j in 0..=nt {
            let node = k * (nt + 1) + j;
            let t = j as f64 / nt as f64;
            kd[node] = 1.0 / (h * h);
            for a in 0..n {
                ki[a][node] = (g.h_minus[a] - t * g.total[a]) / h;
            }
            potential[node] = v;
        }
    }
    Ok(MappedOperatorCoefficients {
        eps,
        grid: op.grid,
        kd,
        ki,
        potential,
        active,
    })
}

/// Solver settings for [`solve_thin_domain_with`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub grid: GridOptions,
    pub count: usize,
    pub eigen: EigenOptions,
    /// Explicit shift; defaults to [`MappedOperator::safe_shift`].
    pub shift: Option<f64>,
    /// Keep finest-grid eigenvectors (as `u` on the full node grid).
    pub keep_vectors: bool,
    /// Run the coarse/medium/fine ladder and extrapolate.
    pub richardson: bool,
}

impl SolveOptions {
    pub fn new(resolution: usize, count: usize) -> Self {
        SolveOptions {
            grid: GridOptions::new(resolution),
            count,
            eigen: EigenOptions::default(),
            shift: None,
            keep_vectors: false,
            richardson: true,
        }
    }
}

/// Eigenvalues on one grid.
#[derive(Clone, Debug, Serialize)]
pub struct GridSolve {
    pub grid: GridSpec,
    pub shift: f64,
    pub values: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

/// Richardson-refined eigenvalue.
#[derive(Clone, Debug, Serialize)]
pub struct Extrapolated {
    pub value: f64,
    /// Distance to the extrapolation from the two coarser grids.
    pub error_estimate: f64,
    /// Convergence order measured from the three grids (NaN if not monotone).
    pub measured_order: f64,
    /// Measured order differs from 2 by more than 0.3.
    pub order_flag: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectSolveResult {
    pub eps: f64,
    /// Finest-grid values, ascending.
    pub eigenvalues: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub tolerance: f64,
    pub iterations: usize,
    /// Every grid solved, coarse to fine.
    pub levels: Vec<GridSolve>,
    pub extrapolated: Option<Vec<Extrapolated>>,
    #[serde(skip)]
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl DirectSolveResult {
    /// Best available estimate of eigenvalue `k`: extrapolated if present.
    pub fn best(&self, k: usize) -> f64 {
        match &self.extrapolated {
            Some(e) => e[k].value,
            None => self.eigenvalues[k],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.levels.last().expect("at least one grid").grid
    }
}

fn solve_grid(model: &WidthModel, eps: f64, opts: &SolveOptions, grid: &GridOptions) -> Result<(GridSolve, EigenResult, MappedOperator)> {
    let op = assemble_mapped_operator(model, eps, grid)?;
    let shift = opts.shift.unwrap_or_else(|| op.safe_shift());
    let res = smallest_eigenvalues_with(&op.matrix, opts.count, shift, &opts.eigen)?;
    let gs = GridSolve {
        grid: op.grid.clone(),
        shift,
        values: res.values.clone(),
        residual_norms: res.residuals.clone(),
        outer_iterations: res.outer_iterations,
        inner_iterations: res.inner_iterations,
    };
    Ok((gs, res, op))
}

/// Lowest `count` eigenvalues with default settings at `resolution`.
pub fn solve_thin_domain(model: &WidthModel, eps: f64, resolution: usize, count: usize) -> Result<DirectSolveResult> {
    solve_thin_domain_with(model, eps, &SolveOptions::new(resolution, count))
}

/// Solve on resolutions `N/2, N, 2N` and Richardson-extrapolate the two finest.
pub fn solve_thin_domain_with(model: &WidthModel, eps: f64, opts: &SolveOptions) -> Result<DirectSolveResult> {
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    let n = opts.grid.resolution;
    if n < 32 {
        return invalid(format!("resolution must be at least 32, got {n}"));
    }
    let ladder: Vec<usize> = if opts.richardson { vec![n / 2, n, 2 * n] } else { vec![n] };
    let mut levels = Vec::new();
    let mut last = None;
    for (i, &r) in ladder.iter().enumerate() {
        let (gs, res, op) = solve_grid(model, eps, opts, &opts.grid.with_resolution(r))?;
        levels.push(gs);
        if i + 1 == ladder.len() {
            last = Some((res, op));
        }
    }
    let (res, op) = last.expect("ladder is nonempty");
    let fine = levels.last().expect("nonempty");
    let extrapolated = opts.richardson.then(|| {
        (0..opts.count)
            .map(|k| {
                let (c, m, f) = (levels[0].values[k], levels[1].values[k], levels[2].values[k]);
                let value = (4.0 * f - m) / 3.0;
                let lower = (4.0 * m - c) / 3.0;
                let ratio = (c - m) / (m - f);
                let measured_order = if ratio > 0.0 { ratio.log2() } else { f64::NAN };
                Extrapolated {
                    value,
                    error_estimate: (value - lower).abs(),
                    measured_order,
                    order_flag: !((measured_order - 2.0).abs() <= 0.3),
                }
            })
            .collect()
    });
    let vectors = opts
        .keep_vectors
        .then(|| res.vectors.iter().map(|v| op.to_grid(v)).collect());
    Ok(DirectSolveResult {
        eps,
        eigenvalues: fine.values.clone(),
        residual_norms: fine.residual_norms.clone(),
        tolerance: opts.eigen.tol,
        iterations: levels.iter().map(|l| l.outer_iterations).sum(),
        levels,
        extrapolated,
        vectors,
    })
}

/// Sidecar written next to an exported eigenvector.
#[derive(Clone, Debug, Serialize)]
pub struct VectorSidecar {
    pub schema: u32,
    pub dtype: &'static str,
    pub layout: &'static str,
    pub shape: Vec<usize>,
    pub grid: GridSpec,
    pub eps: f64,
    pub eigenvalue: f64,
}

/// Write `values` as raw little-endian `f64` to `path` and the sidecar to `path.json`.
pub fn export_eigenvector(path: &Path, values: &[f64], grid: &GridSpec, eps: f64, eigenvalue: f64) -> Result<PathBuf> {
    let shape = grid.shape();
    if shape.iter().product::<usize>() != values.len() {
        return invalid("eigenvector length does not match the grid shape");
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let side = VectorSidecar {
        schema: 1,
        dtype: "f64-le",
        layout: "row-major, x' axes first, t fastest",
        shape,
        grid: grid.clone(),
        eps,
        eigenvalue,
    };
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    let side_path = PathBuf::from(name);
    let mut f = fs::File::create(&side_path)?;
    serde_json::to_writer_pretty(&mut f, &side)?;
    f.write_all(b"\n")?;
    Ok(side_path)
}

/// Smallest cut fraction; nodes closer to the boundary are clamped to it.
const MIN_CUT_FRACTION: f64 = 1e-2;

/// Smallest eigenvalue of the 5-point Laplacian on the physical grid, with
/// nodes outside the thin domain masked out and the Dirichlet condition
/// imposed at the true boundary crossing. Only for `d = 2`.
pub fn solve_masked_2d(model: &WidthModel, eps: f64, resolution: usize) -> Result<DirectSolveResult> {
    if model.dim() != 2 {
        return Err(Error::UnsupportedGeometry("masked solver handles d = 2 only".into()));
    }
    if !(eps.is_finite() && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    if eps < 0.2 {
        return Err(Error::AccuracyRefused(format!(
            "the masked grid is too coarse for eps = {eps} < 0.2; use the mapped solver"
        )));
    }
    if resolution < 8 {
        return invalid("resolution must be at least 8");
    }
    let bbox = model.bounding_box();
    let (x0, x1) = (bbox.lower[0], bbox.upper[0]);
    let hx = (x1 - x0) / resolution as f64;
    let samples: Vec<(f64, f64)> = (0..=resolution)
        .map(|i| {
            let x = x0 + i as f64 * hx;
            model
                .eval_width(&[x])
                .ok()
                .flatten()
                .map_or((0.0, 0.0), |w| (w.h_plus, w.h_minus))
        })
        .collect();
    let top = samples.iter().map(|s| s.0).fold(0.0f64, f64::max) * eps;
    let bottom = samples.iter().map(|s| s.1).fold(0.0f64, f64::max) * eps;
    let ny = ((top + bottom) / hx).ceil().max(2.0) as usize;
    let hy = (top + bottom) / ny as f64;
    let y0 = -bottom;

    let mut id = vec![usize::MAX; (resolution + 1) * (ny + 1)];
    let mut nodes = Vec::new();
    let mut starts = vec![0];
    for i in 1..resolution {
        let x = x0 + i as f64 * hx;
        let Some(w) = model.eval_width(&[x])? else { continue };
        for j in 1..ny {
            let y = y0 + j as f64 * hy;
            if y > -eps * w.h_minus && y < eps * w.h_plus {
                id[i * (ny + 1) + j] = nodes.len();
                nodes.push((i, j));
            }
        }
        if *starts.last().expect("nonempty") != nodes.len() {
            starts.push(nodes.len());
        }
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateDomain("no grid node inside the domain".into()));
    }
    let (ix, iy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let inside = |x: f64, y: f64| match model.eval_width(&[x]) {
        Ok(Some(w)) => y > -eps * w.h_minus && y < eps * w.h_plus,
        _ => false,
    };
    // Fraction of the way to an outside neighbour at which the boundary is
    // crossed, by bisection on the membership test.
    let crossing = |(xa, ya): (f64, f64), (xb, yb): (f64, f64)| {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if inside(xa + mid * (xb - xa), ya + mid * (yb - ya)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.max(MIN_CUT_FRACTION)
    };
    let coord = |i: usize, j: usize| (x0 + i as f64 * hx, y0 + j as f64 * hy);
    let rows: Vec<Vec<(usize, f64)>> = nodes
        .iter()
        .map(|&(i, j)| {
            let mut r = Vec::with_capacity(5);
            let mut diag = 0.0;
            // Dirichlet data at the true crossing by linear extrapolation to
            // the outside node: only the diagonal changes, so the matrix
            // stays symmetric.
            for (ii, jj, w) in [(i - 1, j, ix), (i, j - 1, iy), (i, j + 1, iy), (i + 1, j, ix)] {
                let u = id[ii * (ny + 1) + jj];
                if u != usize::MAX {
                    r.push((u, -w));
                    diag += w;
                } else {
                    diag += w / crossing(coord(i, j), coord(ii, jj));
                }
            }
            r.push((id[i * (ny + 1) + j], diag));
            r.sort_by_key(|e| e.0);
            r
        })
        .collect();
    let matrix = CsrMatrix::from_rows(rows)?.with_lines(starts)?;
    // discrete Dirichlet ground state of the enclosing box bounds the spectrum
    let bx = 4.0 * ix * (PI / (2.0 * resolution as f64)).sin().powi(2);
    let by = 4.0 * iy * (PI / (2.0 * ny as f64)).sin().powi(2);
    let shift = 0.9 * (bx + by);
    let opts = EigenOptions::default();
    let res = smallest_eigenvalues_with(&matrix, 1, shift, &opts)?;
    let grid = GridSpec {
        lower: vec![x0, y0],
        upper: vec![x1, top],
        nx: resolution,
        nt: ny,
        h_floor: 0.0,
        unknowns: nodes.len(),
    };
    Ok(DirectSolveResult {
        eps,
        eigenvalues: res.values.clone(),
        residual_norms: res.residuals.clone(),
        tolerance: opts.tol,
        iterations: res.outer_iterations,
        levels: vec![GridSolve {
            grid,
            shift,
            values: res.values,
            residual_norms: res.residuals,
            outer_iterations: res.outer_iterations,
            inner_iterations: res.inner_iterations,
        }],
        extrapolated: None,
        vectors: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_is_separable_five_point() {
        let m = WidthModel::slab(&[1.0], 0.5, 0.5).unwrap();
        let op = assemble_mapped_operator(&m, 0.5, &GridOptions::new(16)).unwrap();
        assert_eq!(op.matrix.symmetry_defect(), 0.0);
        let nt = op.grid.nt;
        let (dx, dt) = (1.0 / 16.0, 1.0 / nt as f64);
        // interior row: 2/dx^2 + 2/(eps^2 dt^2) on the diagonal
        let u = op.matrix.dim() / 2;
        let want = 2.0 / (dx * dx) + 2.0 / (0.25 * dt * dt);
        assert!((op.matrix.get(u, u) - want).abs() < 1e-9 * want);
        let disc = |h: f64| 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let exact = disc(dx) + disc(dt) / 0.25;
        let r = smallest_eigenvalues_with(&op.matrix, 1, op.safe_shift(), &EigenOptions::default()).unwrap();
        assert!((r.values[0] - exact).abs() < 1e-8 * exact, "{} vs {exact}", r.values[0]);
    }

    #[test]
    fn empty_domain_rejected() {
        let m = WidthModel::ellipsoid(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            assemble_mapped_operator(&m, -1.0, &GridOptions::new(8)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn masked_refuses_thin() {
        let m = WidthModel::ellipsoid(&[1.0, 1.0]).unwrap();
        assert!(matches!(solve_masked_2d(&m, 0.1, 64), Err(Error::AccuracyRefused(_))));
    }
}
