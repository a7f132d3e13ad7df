//! Data-parallel kernels with a sequential fallback.
//!
//! With the `parallel` feature (default) the kernels run on the rayon pool;
//! without it they run on the calling thread. Both paths produce bit-identical
//! results: reductions are split into fixed-size chunks whose partial sums are
//! combined in chunk order, so the floating-point summation order never
//! depends on scheduling.

/// Reduction chunk length. Changing it changes the low bits of every dot product.
pub const CHUNK: usize = 4096;

fn dot_chunk(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product, sequential path.
pub fn dot_seq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.chunks(CHUNK)
        .zip(b.chunks(CHUNK))
        .map(|(x, y)| dot_chunk(x, y))
        .fold(0.0, |acc, s| acc + s)
}

/// Dot product, rayon path.
#[cfg(feature = "parallel")]
pub fn dot_par(a: &[f64], b: &[f64]) -> f64 {
    use rayon::prelude::*;
    debug_assert_eq!(a.len(), b.len());
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| dot_chunk(x, y))
        .collect();
    partial.into_iter().fold(0.0, |acc, s| acc + s)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    #[cfg(feature = "parallel")]
    {
        if a.len() > CHUNK {
            return dot_par(a, b);
        }
    }
    dot_seq(a, b)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        if y.len() > CHUNK {
            use rayon::prelude::*;
            y.par_chunks_mut(CHUNK)
                .zip(x.par_chunks(CHUNK))
                .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi += alpha * xi));
            return;
        }
    }
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// `y = x + beta * y`
pub fn xpby(x: &[f64], beta: f64, y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        if y.len() > CHUNK {
            use rayon::prelude::*;
            y.par_chunks_mut(CHUNK)
                .zip(x.par_chunks(CHUNK))
                .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(yi, xi)| *yi = xi + beta * *yi));
            return;
        }
    }
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi + beta * *yi);
}

pub fn scale(alpha: f64, y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v *= alpha);
}

/// Fill `out[i] = f(i)` for every index, in parallel when enabled.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
}

/// Map `0..n` to a vector, preserving order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
