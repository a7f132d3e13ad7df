use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use thinspec::taylor::JetOptions;
use thinspec::width::{BoundingBox, PolynomialWidth};
use thinspec::{
    ellipsoid_taylor, extract_taylor, jet_at_widest_point, locate_max, Error, MonomialPolynomial, MultiIndex,
    TaylorWidthData, WidthModel,
};

fn jet_of(model: &WidthModel, x_bar: &[f64]) -> TaylorWidthData {
    extract_taylor(model, x_bar, 4, &JetOptions::default()).unwrap()
}

fn assert_jets_close(a: &TaylorWidthData, b: &TaylorWidthData, tol: f64) {
    assert_eq!(a.n(), b.n());
    assert_abs_diff_eq!(a.h0, b.h0, epsilon = tol);
    for (x, y) in a.alpha.iter().zip(&b.alpha) {
        assert_abs_diff_eq!(*x, *y, epsilon = tol);
    }
    for (x, y) in a.beta.iter().zip(&b.beta) {
        assert_abs_diff_eq!(*x, *y, epsilon = tol);
    }
    for (x, y) in a.grad_h1.iter().zip(&b.grad_h1) {
        assert_abs_diff_eq!(*x, *y, epsilon = tol);
    }
    let diff = &a.h4 - &b.h4;
    assert!(diff.max_abs_coeff() <= tol, "h4 differs by {}", diff.max_abs_coeff());
}

/// `1 - x^2 - 2 y^2 + 0.3 x^2 y - 0.1 y^3 - 0.05 x^4 + 0.02 x^2 y^2`, split so
/// that `h_minus = 0.2 x`.
fn polynomial_model() -> (WidthModel, MonomialPolynomial) {
    let m = |a: usize, b: usize| MultiIndex(vec![a, b]);
    let total = MonomialPolynomial::from_terms(
        2,
        [
            (m(0, 0), 1.0),
            (m(2, 0), -1.0),
            (m(0, 2), -2.0),
            (m(2, 1), 0.3),
            (m(0, 3), -0.1),
            (m(4, 0), -0.05),
            (m(2, 2), 0.02),
        ],
    )
    .unwrap();
    let h_minus = MonomialPolynomial::from_terms(2, [(m(1, 0), 0.2)]).unwrap();
    let h_plus = &total - &h_minus;
    let model = WidthModel::Polynomial(PolynomialWidth {
        bounds: BoundingBox {
            lower: vec![-0.5, -0.5],
            upper: vec![0.5, 0.5],
        },
        h_plus,
        h_minus,
    });
    (model, total)
}

#[test]
fn width_values_at_known_points() {
    let e = WidthModel::ellipsoid(&[1.0, 1.0]).unwrap();
    let w = e.eval_width(&[0.0]).unwrap().unwrap();
    assert_eq!((w.h_plus, w.h_minus, w.total), (1.0, 1.0, 2.0));
    let edge = e.eval_width(&[1.0]).unwrap().unwrap();
    assert_eq!(edge.total, 0.0);

    let lem = WidthModel::Lemniscate;
    let x = 3f64.sqrt() / (2.0 * 2f64.sqrt());
    let h = lem.total_width(&[x]).unwrap();
    assert_abs_diff_eq!(h, FRAC_1_SQRT_2, epsilon = 1e-10);

    assert!(matches!(e.eval_width(&[f64::NAN]), Err(Error::InvalidInput(_))));
    assert!(matches!(e.eval_width(&[f64::INFINITY]), Err(Error::InvalidInput(_))));
}

#[test]
fn evaluation_is_deterministic() {
    let lem = WidthModel::Lemniscate;
    for i in 0..50 {
        let x = -0.99 + 0.04 * i as f64;
        let a = lem.eval_width(&[x]).unwrap();
        let b = lem.eval_width(&[x]).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn maximum_search() {
    let e = WidthModel::ellipsoid(&[1.0, 2.0, 3.0]).unwrap();
    let x = locate_max(&e, &[0.3, -0.2], 1e-12).unwrap();
    assert!(x.iter().all(|v| v.abs() <= 1e-10), "{x:?}");

    let x = locate_max(&WidthModel::Lemniscate, &[0.5], 1e-12).unwrap();
    assert_abs_diff_eq!(x[0], 0.61237243569579, epsilon = 1e-6);

    let slab = WidthModel::slab(&[1.0], 0.5, 0.5).unwrap();
    assert!(matches!(locate_max(&slab, &[0.5], 1e-10), Err(Error::UnsupportedGeometry(_))));
}

#[test]
fn closed_form_matches_extraction() {
    for a in [vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 2.0, 3.0], vec![0.7, 1.3, 0.9]] {
        let model = WidthModel::ellipsoid(&a).unwrap();
        let n = a.len() - 1;
        let numeric = jet_of(&model, &vec![0.0; n]);
        let exact = ellipsoid_taylor(&a).unwrap();
        assert_jets_close(&numeric, &exact, 1e-8);
    }
}

#[test]
fn ellipsoid_closed_form_values() {
    let j = ellipsoid_taylor(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(j.h0, 6.0);
    assert_abs_diff_eq!(j.alpha[0], 6f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(j.alpha[1], 6f64.sqrt() / 2.0, epsilon = 1e-15);
    let theta = j.theta(1);
    assert_abs_diff_eq!(theta[0], PI / 3.0 / 2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(theta[1], PI / 6.0 / 2.0, epsilon = 1e-14);
    // x_i^2 x_j^2 coefficient is -a_d (2 - delta_ij) / (4 a_i^2 a_j^2)
    assert_abs_diff_eq!(j.h4.coeff(&MultiIndex(vec![2, 2])), -3.0 * 2.0 / (4.0 * 4.0), epsilon = 1e-15);
    assert_abs_diff_eq!(j.h4.coeff(&MultiIndex(vec![4, 0])), -3.0 / 4.0, epsilon = 1e-15);
    assert!(matches!(ellipsoid_taylor(&[1.0, -1.0]), Err(Error::InvalidInput(_))));
}

#[test]
fn lemniscate_jet() {
    let j = jet_at_widest_point(&WidthModel::Lemniscate, &JetOptions::default()).unwrap();
    assert_abs_diff_eq!(j.h0, FRAC_1_SQRT_2, epsilon = 1e-6);
    assert_abs_diff_eq!(j.alpha[0], 2.0 * 3f64.sqrt() * 2f64.powf(-0.75), epsilon = 1e-5);
    assert_abs_diff_eq!(j.theta(1)[0], 2.0 * 3f64.sqrt() * PI, epsilon = 1e-4);
}

#[test]
fn polynomial_jet_is_exact() {
    let (model, total) = polynomial_model();
    let j = jet_of(&model, &[0.0, 0.0]);
    assert_abs_diff_eq!(j.h0, 1.0, epsilon = 1e-12);
    // H2 = -x^2 - 2y^2: alpha^2 = (4, 2), so the first rotated axis is y
    assert_abs_diff_eq!(j.alpha[0], 2.0, epsilon = 1e-8);
    assert_abs_diff_eq!(j.alpha[1], 2f64.sqrt(), epsilon = 1e-8);
    assert_abs_diff_eq!(j.basis[1][0].abs(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(j.grad_h1[1].abs(), 0.2, epsilon = 1e-12);
    for v in [[0.1, 0.05], [-0.2, 0.13], [0.07, -0.3]] {
        assert_abs_diff_eq!(j.eval_jet(&v), total.eval(&v), epsilon = 1e-8);
    }
}

#[test]
fn alpha_follows_axis_permutation() {
    let a = jet_of(&WidthModel::ellipsoid(&[1.0, 2.0, 3.0]).unwrap(), &[0.0, 0.0]);
    let b = jet_of(&WidthModel::ellipsoid(&[2.0, 1.0, 3.0]).unwrap(), &[0.0, 0.0]);
    for (x, y) in a.alpha.iter().zip(&b.alpha) {
        assert_abs_diff_eq!(*x, *y, epsilon = 1e-9);
    }
    // the first rotated axis is x1 for one model and x2 for the other
    assert_abs_diff_eq!(a.basis[0][0].abs(), 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(b.basis[1][0].abs(), 1.0, epsilon = 1e-9);
    assert!(a.alpha[0] > a.alpha[1]);
}

fn remainder_slope(model: &WidthModel, jet: &TaylorWidthData, dir: &[f64]) -> f64 {
    let scales = [1e-1, 5e-2, 2.5e-2];
    let errs: Vec<f64> = scales
        .iter()
        .map(|&s| {
            let v: Vec<f64> = dir.iter().map(|d| s * d).collect();
            let x: Vec<f64> = jet.x_bar.iter().zip(&v).map(|(a, b)| a + b).collect();
            (model.total_width(&x).unwrap() - jet.eval_jet(&v)).abs()
        })
        .collect();
    let k = scales.len() - 1;
    (errs[0] / errs[k]).ln() / (scales[0] / scales[k]).ln()
}

#[test]
fn taylor_remainder_is_fifth_order() {
    let lem = WidthModel::Lemniscate;
    let j = jet_at_widest_point(&lem, &JetOptions::default()).unwrap();
    for dir in [[1.0], [-1.0]] {
        let s = remainder_slope(&lem, &j, &dir);
        assert!(s >= 4.7, "lemniscate slope {s}");
    }

    let c = 0.6f64.cos();
    let s = 0.6f64.sin();
    let model = WidthModel::rotated(
        WidthModel::ellipsoid(&[1.0, 1.7, 1.2]).unwrap(),
        vec![vec![c, -s], vec![s, c]],
        vec![0.0, 0.0],
    )
    .unwrap();
    let j = jet_of(&model, &[0.0, 0.0]);
    for dir in [[0.6, 0.8], [-0.28, 0.96]] {
        let slope = remainder_slope(&model, &j, &dir);
        assert!(slope >= 4.7, "rotated ellipsoid slope {slope}");
    }
}

#[test]
fn beta_is_fully_symmetric() {
    let (model, _) = polynomial_model();
    let j = jet_of(&model, &[0.0, 0.0]);
    let n = j.n();
    assert!(j.beta.iter().any(|b| *b != 0.0));
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                let v = j.beta(p, q, r);
                for w in [j.beta(p, r, q), j.beta(q, p, r), j.beta(q, r, p), j.beta(r, p, q), j.beta(r, q, p)] {
                    assert_eq!(v.to_bits(), w.to_bits());
                }
            }
        }
    }
}

#[test]
fn basis_is_orthogonal() {
    let c = 0.3f64.cos();
    let s = 0.3f64.sin();
    let model = WidthModel::rotated(
        WidthModel::ellipsoid(&[1.0, 1.5, 2.0]).unwrap(),
        vec![vec![c, -s], vec![s, c]],
        vec![0.0, 0.0],
    )
    .unwrap();
    let j = jet_of(&model, &[0.0, 0.0]);
    for i in 0..2 {
        for k in 0..2 {
            let dot: f64 = (0..2).map(|r| j.basis[r][i] * j.basis[r][k]).sum();
            assert_abs_diff_eq!(dot, if i == k { 1.0 } else { 0.0 }, epsilon = 1e-12);
        }
    }
}

#[test]
fn sampled_ellipse_from_csv() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "x1,h_plus,h_minus").unwrap();
    let n = 400;
    for i in 0..=n {
        let x = -1.0 + 2.0 * i as f64 / n as f64;
        let h = (1.0 - x * x).max(0.0).sqrt();
        writeln!(f, "{x},{h},{h}").unwrap();
    }
    f.flush().unwrap();
    let model = WidthModel::sampled_from_csv(f.path()).unwrap();
    let w = model.eval_width(&[0.0]).unwrap().unwrap();
    assert_abs_diff_eq!(w.total, 2.0, epsilon = 1e-12);
    let x = locate_max(&model, &[0.2], 1e-8).unwrap();
    assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-4);
}

#[test]
fn negative_width_rejected() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "0,1,1\n0.5,1,-2\n1,1,1").unwrap();
    f.flush().unwrap();
    assert!(matches!(WidthModel::sampled_from_csv(f.path()), Err(Error::InvalidInput(_))));
}

fn rotation2(angle: f64) -> Vec<Vec<f64>> {
    let (s, c) = angle.sin_cos();
    vec![vec![c, -s], vec![s, c]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rotation_leaves_jet_invariants(angle in 0.0f64..std::f64::consts::TAU, a1 in 0.6f64..2.0, a2 in 0.6f64..2.0) {
        prop_assume!((a1 - a2).abs() > 0.05);
        let base = WidthModel::ellipsoid(&[a1, a2, 1.0]).unwrap();
        let rotated = WidthModel::rotated(base, rotation2(angle), vec![0.0, 0.0]).unwrap();
        let j = jet_of(&rotated, &[0.0, 0.0]);
        let exact = ellipsoid_taylor(&[a1, a2, 1.0]).unwrap();
        prop_assert!((j.h0 - exact.h0).abs() < 1e-8);
        for (x, y) in j.alpha.iter().zip(&exact.alpha) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}
