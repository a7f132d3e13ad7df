use std::f64::consts::PI;

use approx::assert_relative_eq;
use thinspec::direct::{
    assemble_mapped_operator, export_eigenvector, solve_masked_2d, solve_thin_domain, solve_thin_domain_with,
    GridOptions, SolveOptions,
};
use thinspec::{Error, WidthModel};

fn ellipse() -> WidthModel {
    WidthModel::ellipsoid(&[1.0, 1.0]).unwrap()
}

fn single_grid(resolution: usize) -> SolveOptions {
    let mut o = SolveOptions::new(resolution, 1);
    o.richardson = false;
    o
}

fn first(model: &WidthModel, eps: f64, opts: &SolveOptions) -> f64 {
    solve_thin_domain_with(model, eps, opts).unwrap().eigenvalues[0]
}

#[test]
fn rectangle_eigenvalue() {
    // (0, 1) x (-eps/2, eps/2): pi^2 (1 + 1/eps^2)
    let slab = WidthModel::slab(&[1.0], 0.5, 0.5).unwrap();
    let r = solve_thin_domain(&slab, 0.5, 64, 2).unwrap();
    assert_relative_eq!(r.best(0), PI * PI * 5.0, max_relative = 1e-5);
    assert_relative_eq!(r.best(1), PI * PI * 8.0, max_relative = 1e-5);
    let x = r.extrapolated.as_ref().unwrap();
    assert!(!x[0].order_flag, "measured order {}", x[0].measured_order);
}

/// Second-order differences approach the thin-direction eigenvalue from
/// below, so refinement raises the value, by a quarter of the previous step.
#[test]
fn refinement_is_monotone_and_second_order() {
    for (model, eps) in [(ellipse(), 0.2), (WidthModel::Lemniscate, 0.2)] {
        let v: Vec<f64> = [64, 128, 256].iter().map(|&n| first(&model, eps, &single_grid(n))).collect();
        assert!(v.windows(2).all(|w| w[1] > w[0]), "{v:?}");
        let ratio = (v[1] - v[0]) / (v[2] - v[1]);
        assert!((3.5..4.5).contains(&ratio), "{v:?}: ratio {ratio}");
    }
}

#[test]
fn thicker_ellipse_has_lower_eigenvalue() {
    let model = ellipse();
    let values: Vec<f64> = [0.2, 0.3, 0.5].iter().map(|&e| first(&model, e, &single_grid(64))).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}

#[test]
fn result_does_not_depend_on_the_shift() {
    let model = ellipse();
    let mut a = single_grid(64);
    a.eigen.tol = 1e-11;
    let op = assemble_mapped_operator(&model, 0.2, &a.grid).unwrap();
    let mut b = a.clone();
    b.shift = Some(0.5 * op.safe_shift());
    let x = first(&model, 0.2, &a);
    let y = first(&model, 0.2, &b);
    assert_relative_eq!(x, y, max_relative = 1e-8);
}

#[test]
fn solves_are_deterministic() {
    let model = ellipse();
    let x = solve_thin_domain_with(&model, 0.3, &single_grid(64)).unwrap();
    let y = solve_thin_domain_with(&model, 0.3, &single_grid(64)).unwrap();
    assert_eq!(x.eigenvalues[0].to_bits(), y.eigenvalues[0].to_bits());
}

#[test]
fn assembled_operators_are_symmetric() {
    for (model, eps) in [(ellipse(), 0.1), (WidthModel::Lemniscate, 0.2)] {
        let op = assemble_mapped_operator(&model, eps, &GridOptions::new(64)).unwrap();
        assert_eq!(op.matrix.symmetry_defect(), 0.0);
    }
    let sphere = WidthModel::ellipsoid(&[1.0, 1.0, 1.0]).unwrap();
    let op = assemble_mapped_operator(&sphere, 0.3, &GridOptions::new(32)).unwrap();
    assert_eq!(op.matrix.symmetry_defect(), 0.0);
}

#[test]
fn pinch_is_floored() {
    let op = assemble_mapped_operator(&WidthModel::Lemniscate, 0.2, &GridOptions::new(64)).unwrap();
    assert!(op.grid.h_floor > 0.0);
    assert!(op.grid.unknowns > 0);
}

#[test]
fn masked_grid_agrees_with_mapped_solver() {
    let model = ellipse();
    let mapped = solve_thin_domain(&model, 0.5, 64, 1).unwrap().best(0);
    let masked = solve_masked_2d(&model, 0.5, 128).unwrap().eigenvalues[0];
    assert!((masked - mapped).abs() <= 0.01 * mapped, "{masked} vs {mapped}");
}

#[test]
fn masked_disk() {
    let lambda = solve_masked_2d(&ellipse(), 1.0, 64).unwrap().eigenvalues[0];
    // square of the first zero of J0
    assert!((lambda - 5.783185962946784).abs() <= 5e-2, "{lambda}");
}

#[test]
fn masked_grid_refuses_thin_or_spatial_domains() {
    assert!(matches!(solve_masked_2d(&ellipse(), 0.1, 64), Err(Error::AccuracyRefused(_))));
    let sphere = WidthModel::ellipsoid(&[1.0, 1.0, 1.0]).unwrap();
    assert!(matches!(solve_masked_2d(&sphere, 0.5, 64), Err(Error::UnsupportedGeometry(_))));
}

#[test]
fn invalid_parameters() {
    let model = ellipse();
    assert!(matches!(solve_thin_domain(&model, 0.0, 64, 1), Err(Error::InvalidInput(_))));
    assert!(matches!(solve_thin_domain(&model, 1.5, 64, 1), Err(Error::InvalidInput(_))));
    assert!(matches!(solve_thin_domain(&model, 0.5, 16, 1), Err(Error::InvalidInput(_))));
}

#[test]
fn eigenvector_export() {
    let mut opts = single_grid(32);
    opts.keep_vectors = true;
    let r = solve_thin_domain_with(&ellipse(), 0.5, &opts).unwrap();
    let v = &r.vectors.as_ref().unwrap()[0];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("u.f64");
    let side = export_eigenvector(&path, v, r.grid(), 0.5, r.eigenvalues[0]).unwrap();

    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 8 * v.len());
    let back: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!(&back, v);

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
    let shape: Vec<usize> = json["shape"].as_array().unwrap().iter().map(|s| s.as_u64().unwrap() as usize).collect();
    assert_eq!(shape, r.grid().shape());
    assert_eq!(shape.iter().product::<usize>(), v.len());
    assert_eq!(json["eps"].as_f64().unwrap(), 0.5);

    assert!(export_eigenvector(&path, &v[1..], r.grid(), 0.5, 1.0).is_err());
}
