//! Natural cubic splines on tensor grids.

use crate::error::{invalid, Result};
use crate::width::BoundingBox;

#[derive(Clone, Debug)]
pub struct Spline1D {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline1D {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return invalid("spline needs at least two nodes and matching lengths");
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("spline nodes must be strictly increasing");
        }
        let m = second_derivatives(&x, &y);
        Ok(Spline1D { x, y, m })
    }

    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    pub fn in_range(&self, t: f64) -> bool {
        t >= self.x[0] && t <= self.x[self.x.len() - 1]
    }

    /// Value and first derivative at `t`.
    pub fn eval_with_derivative(&self, t: f64) -> (f64, f64) {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let v = a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0;
        let d = (self.y[i + 1] - self.y[i]) / h
            + (-(3.0 * a * a - 1.0) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0;
        (v, d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_derivative(t).0
    }
}

fn second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations, natural end conditions.
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[j] = (h0 + h1) / 3.0;
        upper[j] = h1 / 6.0;
        rhs[j] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    for j in 1..k {
        let lower = (x[j + 1] - x[j]) / 6.0;
        let w = lower / diag[j - 1];
        diag[j] -= w * upper[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    let mut sol = vec![0.0; k];
    sol[k - 1] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        sol[j] = (rhs[j] - upper[j] * sol[j + 1]) / diag[j];
    }
    m[1..n - 1].copy_from_slice(&sol);
    m
}

/// Tensor product of natural cubic splines, evaluated axis by axis.
#[derive(Clone, Debug)]
pub enum TensorSpline {
    Leaf(Spline1D),
    Node {
        axis: Vec<f64>,
        children: Vec<TensorSpline>,
    },
}

impl TensorSpline {
    /// `values` laid out with the first axis slowest.
    pub fn from_grid(axes: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        let expected: usize = axes.iter().map(|a| a.len()).product();
        if values.len() != expected {
            return invalid("tensor spline: value count does not match grid");
        }
        match axes {
            [] => invalid("tensor spline needs at least one axis"),
            [only] => Ok(TensorSpline::Leaf(Spline1D::new(only.clone(), values.to_vec())?)),
            [first, rest @ ..] => {
                let stride = values.len() / first.len();
                let children = (0..first.len())
                    .map(|i| Self::from_grid(rest, &values[i * stride..(i + 1) * stride]))
                    .collect::<Result<Vec<_>>>()?;
                if first.windows(2).any(|w| !(w[1] > w[0])) || first.len() < 2 {
                    return invalid("tensor spline axis must be strictly increasing with >= 2 nodes");
                }
                Ok(TensorSpline::Node {
                    axis: first.clone(),
                    children,
                })
            }
        }
    }

    /// Build from unordered rows covering a full tensor grid.
    pub fn from_scattered_grid(points: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        let dim = points[0].len();
        let mut axes: Vec<Vec<f64>> = (0..dim)
            .map(|k| {
                let mut a: Vec<f64> = points.iter().map(|p| p[k]).collect();
                a.sort_by(f64::total_cmp);
                a.dedup();
                a
            })
            .collect();
        let expected: usize = axes.iter().map(|a| a.len()).product();
        if expected != points.len() {
            return invalid(format!(
                "sampled grid is not a full tensor grid ({} rows, {} grid nodes)",
                points.len(),
                expected
            ));
        }
        let mut grid = vec![f64::NAN; expected];
        for (p, &v) in points.iter().zip(values) {
            let mut flat = 0;
            for k in 0..dim {
                let idx = axes[k].binary_search_by(|a| a.total_cmp(&p[k])).expect("coordinate on axis");
                flat = flat * axes[k].len() + idx;
            }
            grid[flat] = v;
        }
        if grid.iter().any(|v| v.is_nan()) {
            return invalid("sampled grid has duplicate rows");
        }
        for a in axes.iter_mut() {
            a.shrink_to_fit();
        }
        Self::from_grid(&axes, &grid)
    }

    pub fn dim(&self) -> usize {
        match self {
            TensorSpline::Leaf(_) => 1,
            TensorSpline::Node { children, .. } => 1 + children[0].dim(),
        }
    }

    pub fn bounds(&self) -> BoundingBox {
        match self {
            TensorSpline::Leaf(s) => BoundingBox {
                lower: vec![s.x[0]],
                upper: vec![s.x[s.x.len() - 1]],
            },
            TensorSpline::Node { axis, children } => {
                let inner = children[0].bounds();
                let mut lower = vec![axis[0]];
                let mut upper = vec![axis[axis.len() - 1]];
                lower.extend(inner.lower);
                upper.extend(inner.upper);
                BoundingBox { lower, upper }
            }
        }
    }

    /// Value and gradient, or `None` outside the grid.
    pub fn eval_with_gradient(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        match self {
            TensorSpline::Leaf(s) => {
                if !s.in_range(x[0]) {
                    return None;
                }
                let (v, d) = s.eval_with_derivative(x[0]);
                Some((v, vec![d]))
            }
            TensorSpline::Node { axis, children } => {
                if x[0] < axis[0] || x[0] > axis[axis.len() - 1] {
                    return None;
                }
                let sub: Vec<(f64, Vec<f64>)> = children
                    .iter()
                    .map(|c| c.eval_with_gradient(&x[1..]))
                    .collect::<Option<Vec<_>>>()?;
                let vals: Vec<f64> = sub.iter().map(|s| s.0).collect();
                let line = Spline1D::new(axis.clone(), vals).ok()?;
                let (v, d0) = line.eval_with_derivative(x[0]);
                let mut grad = vec![d0];
                for k in 0..x.len() - 1 {
                    let comp: Vec<f64> = sub.iter().map(|s| s.1[k]).collect();
                    grad.push(Spline1D::new(axis.clone(), comp).ok()?.eval(x[0]));
                }
                Some((v, grad))
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        self.eval_with_gradient(x).map(|(v, _)| v)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.eval_with_gradient(x).map(|(_, g)| g)
    }
}
