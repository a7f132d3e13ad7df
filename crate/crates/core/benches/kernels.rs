//! Sequential vs data-parallel kernels. Assembly and the full solve follow the
//! `parallel` feature; compare them with `--no-default-features`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thinspec::direct::{assemble_mapped_operator, GridOptions};
use thinspec::eigen::smallest_eigenvalues;
use thinspec::par;
use thinspec::WidthModel;

fn ellipse() -> WidthModel {
    WidthModel::ellipsoid(&[1.0, 1.0]).unwrap()
}

fn bench_matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("matvec");
    for res in [128usize, 512] {
        let op = assemble_mapped_operator(&ellipse(), 0.1, &GridOptions::new(res)).unwrap();
        let n = op.matrix.dim();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut y = vec![0.0; n];
        g.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| op.matrix.matvec_seq(black_box(&x), &mut y))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| op.matrix.matvec_par(black_box(&x), &mut y))
        });
    }
    g.finish();
}

fn bench_dot(c: &mut Criterion) {
    let mut g = c.benchmark_group("dot");
    for n in [10_000usize, 1_000_000] {
        let a: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b2: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        g.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| par::dot_seq(black_box(&a), black_box(&b2)))
        });
        #[cfg(feature = "parallel")]
        g.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| par::dot_par(black_box(&a), black_box(&b2)))
        });
    }
    g.finish();
}

fn bench_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assemble");
    g.sample_size(10);
    let model = ellipse();
    for res in [64usize, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(res), &res, |b, &r| {
            b.iter(|| assemble_mapped_operator(&model, 0.1, &GridOptions::new(r)).unwrap())
        });
    }
    g.finish();
}

fn bench_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("ground_state");
    g.sample_size(10);
    let op = assemble_mapped_operator(&ellipse(), 0.1, &GridOptions::new(64)).unwrap();
    g.bench_function("ellipse_eps0.1_res64", |b| {
        b.iter(|| smallest_eigenvalues(&op.matrix, 1, op.safe_shift(), 1e-9).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_matvec, bench_dot, bench_assembly, bench_solve);
criterion_main!(benches);
