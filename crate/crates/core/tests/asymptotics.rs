use std::f64::consts::PI;

use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use thinspec::expansion::{degenerate_c3_matrix, level_coeffs};
use thinspec::moments::{gaussian_moment, polynomial_inner};
use thinspec::oscillator::{default_box, oscillator_spectrum, schrodinger_solve_numeric};
use thinspec::taylor::JetOptions;
use thinspec::{
    ellipsoid_expansion, ellipsoid_taylor, evaluate_expansion, extract_taylor, first_eigenvalue_coeffs, Error,
    MonomialPolynomial, MultiIndex, TaylorWidthData, WidthModel,
};

/// Trapezoid rule for `int x^p sqrt(theta/pi) exp(-theta x^2) dx`; spectrally
/// accurate for this integrand.
fn quad_axis(p: usize, theta: f64) -> f64 {
    let half = 14.0 / theta.sqrt();
    let steps = 2800;
    let h = 2.0 * half / steps as f64;
    let norm = (theta / PI).sqrt();
    (0..=steps)
        .map(|i| {
            let x = -half + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            w * x.powi(p as i32) * norm * (-theta * x * x).exp()
        })
        .sum::<f64>()
        * h
}

/// Tensor trapezoid over the plane.
fn quad_plane(p: [usize; 2], theta: [f64; 2]) -> f64 {
    let steps = 700;
    let axes: Vec<(f64, Vec<f64>)> = (0..2)
        .map(|k| {
            let half = 14.0 / theta[k].sqrt();
            let h = 2.0 * half / steps as f64;
            let norm = (theta[k] / PI).sqrt();
            let vals = (0..=steps)
                .map(|i| {
                    let x = -half + i as f64 * h;
                    let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
                    w * x.powi(p[k] as i32) * norm * (-theta[k] * x * x).exp() * h
                })
                .collect();
            (h, vals)
        })
        .collect();
    let mut total = 0.0;
    for a in &axes[0].1 {
        for b in &axes[1].1 {
            total += a * b;
        }
    }
    total
}

const THETAS: [f64; 4] = [0.5, 1.0, PI / 2.0, 3.0];

#[test]
fn one_axis_moments_match_quadrature() {
    for &t in &THETAS {
        for p in 0..=8 {
            let exact = gaussian_moment(&[t], &MultiIndex(vec![p]));
            let q = quad_axis(p, t);
            if p % 2 == 1 {
                assert!(exact == 0.0 && q.abs() < 1e-12);
            } else {
                assert_relative_eq!(exact, q, max_relative = 1e-10);
            }
        }
    }
}

#[test]
fn plane_moments_match_quadrature() {
    for (i, &t1) in THETAS.iter().enumerate() {
        let t2 = THETAS[(i + 1) % THETAS.len()];
        for deg in [0, 2, 4, 6, 8] {
            for a in (0..=deg).step_by(2) {
                let p = [a, deg - a];
                let exact = gaussian_moment(&[t1, t2], &MultiIndex(p.to_vec()));
                assert_relative_eq!(exact, quad_plane(p, [t1, t2]), max_relative = 1e-10);
            }
        }
    }
}

fn poly2(coeffs: &[f64]) -> MonomialPolynomial {
    let keys = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2], [3, 0], [2, 1], [1, 2], [0, 3]];
    MonomialPolynomial::from_terms(2, keys.iter().zip(coeffs).map(|(k, &c)| (MultiIndex(k.to_vec()), c))).unwrap()
}

fn jet_from_alpha(alpha: Vec<f64>) -> TaylorWidthData {
    let n = alpha.len();
    TaylorWidthData::from_rotated_parts(
        1.0,
        alpha,
        &MonomialPolynomial::zero(n),
        MonomialPolynomial::zero(n),
        vec![0.0; n],
    )
    .unwrap()
}

/// Random cubic in the plane.
fn cubic(c: &[f64]) -> MonomialPolynomial {
    let keys = [[3, 0], [2, 1], [1, 2], [0, 3]];
    MonomialPolynomial::from_terms(2, keys.iter().zip(c).map(|(k, &v)| (MultiIndex(k.to_vec()), v))).unwrap()
}

#[test]
fn ellipse_numeric_levels_match_ladder() {
    let jet = ellipsoid_taylor(&[1.0, 1.0]).unwrap();
    let s = oscillator_spectrum(&jet, 1, 5).unwrap();
    for (i, l) in s.levels.iter().enumerate() {
        assert_relative_eq!(l.lambda, (2 * i + 1) as f64 * PI / 2.0, max_relative = 1e-14);
    }
    let (half, points) = default_box(&s.theta);
    let num = schrodinger_solve_numeric(&jet.h2_poly(), jet.h0, 1, half, points, 5).unwrap();
    for (a, b) in num.values.iter().zip(s.values()) {
        assert_relative_eq!(*a, b, max_relative = 1e-5);
    }
}

#[test]
fn analytic_ladder_needs_quadratic_well() {
    let mut jet = ellipsoid_taylor(&[1.0, 1.0]).unwrap();
    jet.k = 2;
    assert!(matches!(oscillator_spectrum(&jet, 1, 3), Err(Error::UseNumericPath(2))));
}

#[test]
fn golden_coefficients() {
    let e = first_eigenvalue_coeffs(&ellipsoid_taylor(&[1.0, 1.0]).unwrap()).unwrap();
    assert_abs_diff_eq!(e.c0, PI * PI / 4.0, epsilon = 1e-12);
    assert_abs_diff_eq!(e.c2k, PI / 2.0, epsilon = 1e-12);
    assert_eq!(e.c2k1, 0.0);
    assert_abs_diff_eq!(e.c2k2.unwrap(), 0.75, epsilon = 1e-12);
    let at = evaluate_expansion(&e, 0.1).unwrap();
    assert_relative_eq!(at, (PI * PI / 4.0 + PI / 2.0 * 0.1 + 0.75 * 0.01) / 0.01, max_relative = 1e-14);
}

#[test]
fn isotropic_ellipsoid_reduction() {
    for (r, ad) in [(1.0, 1.0), (1.5, 0.7), (0.8, 2.0)] {
        for d in 2..=4usize {
            let mut a = vec![r; d - 1];
            a.push(ad);
            let e = ellipsoid_expansion(&a).unwrap();
            assert_relative_eq!(e.c2k, (d - 1) as f64 * PI / (2.0 * ad * r), max_relative = 1e-14);
        }
    }
    // permuting the in-plane axes leaves every coefficient unchanged
    let a = ellipsoid_expansion(&[0.9, 1.4, 2.2, 1.0]).unwrap();
    let b = ellipsoid_expansion(&[2.2, 0.9, 1.4, 1.0]).unwrap();
    assert_abs_diff_eq!(a.c2k, b.c2k, epsilon = 1e-12);
    assert_abs_diff_eq!(a.c2k2.unwrap(), b.c2k2.unwrap(), epsilon = 1e-12);
    let ja = first_eigenvalue_coeffs(&ellipsoid_taylor(&[0.9, 1.4, 2.2, 1.0]).unwrap()).unwrap();
    let jb = first_eigenvalue_coeffs(&ellipsoid_taylor(&[2.2, 0.9, 1.4, 1.0]).unwrap()).unwrap();
    assert_abs_diff_eq!(ja.c2k2.unwrap(), jb.c2k2.unwrap(), epsilon = 1e-12);
}

#[test]
fn coefficients_scale_with_the_domain() {
    // stretching the whole domain by s divides every eigenvalue by s^2
    let base = [0.8, 1.3, 1.1];
    let e = ellipsoid_expansion(&base).unwrap();
    for s in [0.5, 2.0, 3.0] {
        let a: Vec<f64> = base.iter().map(|v| v * s).collect();
        let f = first_eigenvalue_coeffs(&ellipsoid_taylor(&a).unwrap()).unwrap();
        assert_relative_eq!(f.c0 * s * s, e.c0, max_relative = 1e-13);
        assert_relative_eq!(f.c2k * s * s, e.c2k, max_relative = 1e-13);
        assert_relative_eq!(f.c2k2.unwrap() * s * s, e.c2k2.unwrap(), max_relative = 1e-12);
    }
}

#[test]
fn simple_excited_level_has_no_odd_term() {
    let jet = ellipsoid_taylor(&[1.0, 1.7, 1.0]).unwrap();
    let r = level_coeffs(&jet, 1, &MultiIndex(vec![1, 0])).unwrap();
    assert_eq!(r.c2k1, 0.0);
    assert!(r.c2k2.is_none());
    assert!(!r.unresolved_degeneracy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner_product_is_symmetric(
        a in prop::collection::vec(-2.0f64..2.0, 10),
        b in prop::collection::vec(-2.0f64..2.0, 10),
        t1 in 0.3f64..4.0,
        t2 in 0.3f64..4.0,
    ) {
        let (pa, pb) = (poly2(&a), poly2(&b));
        let x = polynomial_inner(&[t1, t2], &pa, &pb).unwrap();
        let y = polynomial_inner(&[t1, t2], &pb, &pa).unwrap();
        prop_assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn inner_product_is_linear(
        a in prop::collection::vec(-1.0f64..1.0, 10),
        a2 in prop::collection::vec(-1.0f64..1.0, 10),
        b in prop::collection::vec(-1.0f64..1.0, 10),
        t1 in 0.5f64..3.0,
        t2 in 0.5f64..3.0,
    ) {
        let theta = [t1, t2];
        let (pa, pa2, pb) = (poly2(&a), poly2(&a2), poly2(&b));
        let sum = &pa + &pa2;
        let lhs = polynomial_inner(&theta, &sum, &pb).unwrap();
        let rhs = polynomial_inner(&theta, &pa, &pb).unwrap() + polynomial_inner(&theta, &pa2, &pb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn ladder_scales_with_alpha(
        alpha in prop::collection::vec(0.2f64..3.0, 1..4),
        s in 0.1f64..10.0,
    ) {
        let base = oscillator_spectrum(&jet_from_alpha(alpha.clone()), 1, 12).unwrap();
        let scaled = oscillator_spectrum(&jet_from_alpha(alpha.iter().map(|a| a * s).collect()), 1, 12).unwrap();
        for (x, y) in base.levels.iter().zip(&scaled.levels) {
            prop_assert!((y.lambda - s * x.lambda).abs() <= 1e-10 * y.lambda.abs());
        }
    }

    #[test]
    fn level_order_is_a_prefix(alpha in prop::collection::vec(0.2f64..3.0, 1..4), count in 1usize..20) {
        let jet = jet_from_alpha(alpha);
        let short = oscillator_spectrum(&jet, 1, count).unwrap();
        let long = oscillator_spectrum(&jet, 1, count + 5).unwrap();
        prop_assert_eq!(short.levels.len(), count);
        for (a, b) in short.levels.iter().zip(&long.levels) {
            prop_assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
            prop_assert_eq!(&a.index, &b.index);
        }
    }

    #[test]
    fn closed_form_chain(a in prop::collection::vec(0.5f64..3.0, 2..5)) {
        let x = first_eigenvalue_coeffs(&ellipsoid_taylor(&a).unwrap()).unwrap();
        let y = ellipsoid_expansion(&a).unwrap();
        for (u, v) in [(x.c0, y.c0), (x.c2k, y.c2k), (x.c2k1, y.c2k1), (x.c2k2.unwrap(), y.c2k2.unwrap())] {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + v.abs()), "{} vs {}", u, v);
        }
    }

    #[test]
    fn splitting_matrix_is_symmetric(c in prop::collection::vec(-1.0f64..1.0, 4), a in 0.5f64..2.0) {
        // theta ratio 2:1 makes (1,0) and (0,2) degenerate
        let h3 = cubic(&c);
        let jet = TaylorWidthData::from_rotated_parts(
            1.0,
            vec![2.0 * a, a],
            &h3,
            MonomialPolynomial::zero(2),
            vec![0.0, 0.0],
        )
        .unwrap();
        let spec = oscillator_spectrum(&jet, 1, 10).unwrap();
        let g = spec.group_of(&MultiIndex(vec![1, 0])).unwrap();
        let members = spec.group(g);
        prop_assert_eq!(members.len(), 2);
        let m = degenerate_c3_matrix(&jet, &spec, &members, 1).unwrap();
        prop_assert!(m.symmetry_defect <= 1e-12);
        prop_assert!((m.entries[0][1] - m.entries[1][0]).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coefficients_survive_rotation(angle in 0.0f64..std::f64::consts::TAU, a1 in 0.7f64..2.5, a2 in 0.7f64..2.5) {
        let (s, c) = angle.sin_cos();
        let model = WidthModel::rotated(
            WidthModel::ellipsoid(&[a1, a2, 1.0]).unwrap(),
            vec![vec![c, -s], vec![s, c]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let jet = extract_taylor(&model, &[0.0, 0.0], 4, &JetOptions::default()).unwrap();
        let x = first_eigenvalue_coeffs(&jet).unwrap();
        let y = ellipsoid_expansion(&[a1, a2, 1.0]).unwrap();
        for (u, v) in [(x.c0, y.c0), (x.c2k, y.c2k), (x.c2k1, y.c2k1), (x.c2k2.unwrap(), y.c2k2.unwrap())] {
            prop_assert!((u - v).abs() <= 1e-8, "{} vs {}", u, v);
        }
    }
}
