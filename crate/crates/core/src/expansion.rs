//! Eigenvalue expansion coefficients in powers of `eta = eps^{1/(k+1)}`.
//!
//! For a quadratic well (`k = 1`) the first eigenvalue reads
//! `c0/eps^2 + c2/eps + c3/eps^{1/2} + c4 + O(eps^{1/2})` with `c3 = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::moments::{hermite_inner, polynomial_inner};
use crate::oscillator::{ladder_value, oscillator_spectrum, same_level, HermiteEigenfunction, OscillatorSpectrum};
use crate::poly::{MonomialPolynomial, MultiIndex};
use crate::taylor::TaylorWidthData;
use crate::width::WidthModel;

/// Polynomial part `R` of the first eigenfunction corrector `Psi1 = R Psi0`,
/// the solution of `(G1 - Lambda) Psi1 = (2 pi^2 / H0^3) H3 Psi0`.
#[derive(Clone, Debug, Serialize)]
pub struct Psi1Corrector {
    pub r: MonomialPolynomial,
    pub theta: Vec<f64>,
    /// `C_pqj`, flattened as `(p * n + q) * n + j`.
    pub cubic: Vec<f64>,
    /// `C_j`.
    pub linear: Vec<f64>,
    /// Largest weak-form residual over the monomial test set.
    pub residual: f64,
}

/// Largest total degree of the monomial test functions `xi^gamma Psi0`.
pub const TEST_DEGREE: usize = 5;
/// Weak-form residual accepted at construction.
pub const CORRECTOR_TOLERANCE: f64 = 1e-9;

/// `(G1 - Lambda)(P Psi0) = Psi0 (-Laplacian P + 2 sum theta_i xi_i d_i P)`.
pub fn shifted_oscillator_action(theta: &[f64], p: &MonomialPolynomial) -> MonomialPolynomial {
    let mut out = -&p.laplacian();
    for (k, c) in p.terms() {
        let weight: f64 = theta.iter().zip(k.as_slice()).map(|(t, &e)| 2.0 * t * e as f64).sum();
        out.add_term(k.clone(), weight * c);
    }
    out
}

/// Largest `|<(G1 - Lambda)(R Psi0) - rhs Psi0, xi^gamma Psi0>|` over `|gamma| <= degree`.
pub fn corrector_residual(
    theta: &[f64],
    r: &MonomialPolynomial,
    rhs: &MonomialPolynomial,
    degree: usize,
) -> Result<f64> {
    let lhs = &shifted_oscillator_action(theta, r) - rhs;
    let dim = theta.len();
    let mut worst: f64 = 0.0;
    for d in 0..=degree {
        for gamma in MultiIndex::of_degree(dim, d) {
            let phi = MonomialPolynomial::monomial(gamma, 1.0);
            worst = worst.max(polynomial_inner(theta, &lhs, &phi)?.abs());
        }
    }
    Ok(worst)
}

/// Build the corrector for the ground state of `jet` (transverse mode 1).
pub fn build_psi1(jet: &TaylorWidthData, spec: &OscillatorSpectrum) -> Result<Psi1Corrector> {
    if jet.k != 1 {
        return Err(Error::UseNumericPath(jet.k));
    }
    if spec.n != 1 || spec.theta != jet.theta(1) {
        return invalid("corrector needs the n = 1 spectrum of the same jet");
    }
    let theta = &spec.theta;
    let n = theta.len();
    let pref = PI * PI / jet.h0.powi(3);
    let mut cubic = vec![0.0; n * n * n];
    for p in 0..n {
        for q in 0..n {
            for j in 0..n {
                cubic[(p * n + q) * n + j] = pref * jet.beta(p, q, j) / (theta[p] + theta[q] + theta[j]);
            }
        }
    }
    let linear: Vec<f64> = (0..n)
        .map(|j| 3.0 * (0..n).map(|p| cubic[(p * n + p) * n + j]).sum::<f64>() / theta[j])
        .collect();

    let mut r = MonomialPolynomial::zero(n);
    for p in 0..n {
        for q in 0..n {
            for j in 0..n {
                let c = cubic[(p * n + q) * n + j];
                if c != 0.0 {
                    let mut e = vec![0; n];
                    e[p] += 1;
                    e[q] += 1;
                    e[j] += 1;
                    r.add_term(MultiIndex(e), c);
                }
            }
        }
    }
    for (j, c) in linear.iter().enumerate() {
        r.add_term(MultiIndex::unit(n, j), *c);
    }

    let rhs = jet.h3_poly().scaled(2.0 * pref);
    let residual = corrector_residual(theta, &r, &rhs, TEST_DEGREE)?;
    let scale = 1.0 + rhs.max_abs_coeff();
    if residual > CORRECTOR_TOLERANCE * scale {
        return Err(Error::Accuracy {
            residual,
            tolerance: CORRECTOR_TOLERANCE * scale,
        });
    }
    let one = MonomialPolynomial::constant(n, 1.0);
    let mean = polynomial_inner(theta, &r, &one)?;
    if mean.abs() > 1e-12 * (1.0 + r.max_abs_coeff()) {
        return Err(Error::Accuracy {
            residual: mean.abs(),
            tolerance: 1e-12,
        });
    }
    Ok(Psi1Corrector {
        r,
        theta: theta.clone(),
        cubic,
        linear,
        residual,
    })
}

/// How a coefficient was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Analytic,
    ClosedForm,
    NumericOscillator,
    DegenerateMatrix,
    /// The coefficient vanishes by parity for a simple level.
    Parity,
    /// No formula is available for this level.
    Unavailable,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub c0: Source,
    pub c2k: Source,
    pub c2k1: Source,
    pub c2k2: Source,
}

/// Expansion coefficients of one eigenvalue branch.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionResult {
    pub n: usize,
    pub m: MultiIndex,
    pub k: usize,
    pub c0: f64,
    pub c2k: f64,
    pub c2k1: f64,
    pub c2k2: Option<f64>,
    /// `eta = eps^{eta_exponent}`.
    pub eta_exponent: f64,
    /// Error of the truncated series is `O(eps^{remainder_order})`.
    pub remainder_order: f64,
    pub provenance: Provenance,
    /// Set when a degenerate level could not be split at this order.
    pub unresolved_degeneracy: bool,
}

/// Three-term expansion of the first eigenvalue plus the constant term `c4`.
pub fn first_eigenvalue_coeffs(jet: &TaylorWidthData) -> Result<ExpansionResult> {
    jet.validate()?;
    let spec = oscillator_spectrum(jet, 1, 1)?;
    let theta = &spec.theta;
    let h0 = jet.h0;
    let c0 = PI * PI / (h0 * h0);
    let c2: f64 = theta.iter().sum();

    let h2 = jet.h2_poly();
    let quartic = &(&h2 * &h2).scaled(3.0) - &jet.h4_poly().scaled(2.0 * h0);
    let one = MonomialPolynomial::constant(jet.n(), 1.0);
    let bulk = PI * PI / h0.powi(4) * polynomial_inner(theta, &quartic, &one)?;
    let tilt = PI * PI / (h0 * h0) * jet.grad_h1.iter().map(|g| g * g).sum::<f64>();
    let psi1 = build_psi1(jet, &spec)?;
    let cubic = 2.0 * PI * PI / h0.powi(3) * polynomial_inner(theta, &jet.h3_poly(), &psi1.r)?;
    let c4 = bulk + tilt - cubic;

    Ok(ExpansionResult {
        n: 1,
        m: MultiIndex::zero(jet.n()),
        k: 1,
        c0,
        c2k: c2,
        c2k1: 0.0,
        c2k2: Some(c4),
        eta_exponent: 0.5,
        remainder_order: 0.5,
        provenance: Provenance {
            c0: Source::Analytic,
            c2k: Source::Analytic,
            c2k1: Source::Parity,
            c2k2: Source::Analytic,
        },
        unresolved_degeneracy: false,
    })
}

/// Matrix `T_ml = 2 pi^2 n^2 H0^{-3} <H3 Psi_m, Psi_l>` on one degenerate level.
#[derive(Clone, Debug, Serialize)]
pub struct SplittingMatrix {
    pub group: Vec<MultiIndex>,
    pub lambda: f64,
    pub entries: Vec<Vec<f64>>,
    /// `max |T_ml - T_lm|` before symmetrization.
    pub symmetry_defect: f64,
    /// Eigenvalues of `T`, ascending.
    pub tau: Vec<f64>,
    /// `c_{2k+1}` candidates `-tau`, ascending.
    pub c3: Vec<f64>,
    /// Column `r` holds the level-basis coefficients of the eigenvector for `tau[r]`.
    pub rotation: Vec<Vec<f64>>,
    /// Two or more `tau` coincide: the splitting is not resolved at this order.
    pub repeated: bool,
}

pub fn degenerate_c3_matrix(
    jet: &TaylorWidthData,
    spec: &OscillatorSpectrum,
    level_group: &[MultiIndex],
    n: usize,
) -> Result<SplittingMatrix> {
    if level_group.is_empty() {
        return invalid("empty level group");
    }
    if spec.n != n {
        return invalid(format!("spectrum was built for n = {}, not {n}", spec.n));
    }
    let theta = &spec.theta;
    if level_group.iter().any(|m| m.dim() != theta.len()) {
        return Err(Error::InvalidLevel(level_group.iter().map(|m| m.0.clone()).collect()));
    }
    let lambda = ladder_value(theta, &level_group[0]);
    if level_group.iter().any(|m| !same_level(ladder_value(theta, m), lambda)) {
        return Err(Error::InvalidLevel(level_group.iter().map(|m| m.0.clone()).collect()));
    }
    let funcs: Vec<HermiteEigenfunction> = level_group
        .iter()
        .map(|m| HermiteEigenfunction::new(theta, m))
        .collect::<Result<_>>()?;
    let h3 = jet.h3_poly();
    let pref = 2.0 * PI * PI * (n * n) as f64 / jet.h0.powi(3);
    let size = funcs.len();
    let mut raw = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in 0..size {
            raw[i][j] = pref * hermite_inner(theta, &h3, &funcs[i], &funcs[j])?;
        }
    }
    let mut defect: f64 = 0.0;
    for i in 0..size {
        for j in 0..size {
            defect = defect.max((raw[i][j] - raw[j][i]).abs());
        }
    }
    let entries: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|j| 0.5 * (raw[i][j] + raw[j][i])).collect())
        .collect();
    let eig = SymmetricEigen::new(DMatrix::from_fn(size, size, |i, j| entries[i][j]));
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let tau: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let rotation: Vec<Vec<f64>> = (0..size)
        .map(|i| order.iter().map(|&k| eig.eigenvectors[(i, k)]).collect())
        .collect();
    let mut c3: Vec<f64> = tau.iter().map(|t| -t).collect();
    c3.sort_by(f64::total_cmp);
    let scale = 1.0 + tau.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let repeated = tau.windows(2).any(|w| (w[1] - w[0]).abs() <= 1e-9 * scale);
    Ok(SplittingMatrix {
        group: level_group.to_vec(),
        lambda,
        entries,
        symmetry_defect: defect,
        tau,
        c3,
        rotation,
        repeated,
    })
}

/// Coefficients `c0, c2, c3` of the branch attached to oscillator level `m`
/// of transverse mode `n`. No constant term is available beyond the ground state.
///
/// Inside a degenerate group the `r`-th member (lexicographic order) is
/// assigned the `r`-th smallest `c3` candidate.
pub fn level_coeffs(jet: &TaylorWidthData, n: usize, m: &MultiIndex) -> Result<ExpansionResult> {
    if n == 1 && m.degree() == 0 {
        return first_eigenvalue_coeffs(jet);
    }
    if m.dim() != jet.n() {
        return Err(Error::InvalidLevel(vec![m.0.clone()]));
    }
    let theta = jet.theta(n);
    let lambda = ladder_value(&theta, m);
    let mut count = 1;
    let spec = loop {
        let s = oscillator_spectrum(jet, n, count)?;
        let last = s.levels.last().expect("nonempty").lambda;
        if last > lambda && !same_level(last, lambda) {
            break s;
        }
        count *= 2;
    };
    let gid = spec
        .group_of(m)
        .ok_or_else(|| Error::InvalidLevel(vec![m.0.clone()]))?;
    let group = spec.group(gid);
    let split = degenerate_c3_matrix(jet, &spec, &group, n)?;
    let rank = group.iter().position(|g| g == m).expect("member of its group");
    let (c3, source) = if group.len() == 1 {
        (0.0, Source::Parity)
    } else {
        (split.c3[rank], Source::DegenerateMatrix)
    };
    Ok(ExpansionResult {
        n,
        m: m.clone(),
        k: 1,
        c0: PI * PI * (n * n) as f64 / (jet.h0 * jet.h0),
        c2k: lambda,
        c2k1: c3,
        c2k2: None,
        eta_exponent: 0.5,
        remainder_order: 0.0,
        provenance: Provenance {
            c0: Source::Analytic,
            c2k: Source::Analytic,
            c2k1: source,
            c2k2: Source::Unavailable,
        },
        unresolved_degeneracy: group.len() > 1 && split.repeated,
    })
}

/// `eps^{-2} (c0 + c2k eta^{2k} + c2k1 eta^{2k+1} + c2k2 eta^{2k+2})`, `eta = eps^{1/(k+1)}`.
pub fn evaluate_expansion(res: &ExpansionResult, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    let k = res.k as i32;
    let eta = eps.powf(1.0 / (res.k + 1) as f64);
    let mut s = res.c0 + res.c2k * eta.powi(2 * k) + res.c2k1 * eta.powi(2 * k + 1);
    if let Some(c) = res.c2k2 {
        s += c * eta.powi(2 * k + 2);
    }
    Ok(s / (eps * eps))
}

/// Closed-form expansion for the ellipsoid with semi-axes `a`, thin along the last axis.
pub fn ellipsoid_expansion(a: &[f64]) -> Result<ExpansionResult> {
    if a.len() < 2 || a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid(format!("ellipsoid semi-axes must be positive (at least two), got {a:?}"));
    }
    let d = a.len();
    let ad = a[d - 1];
    let t = &a[..d - 1];
    let inv_sum: f64 = t.iter().map(|x| 1.0 / x).sum();
    let inv_sq: f64 = t.iter().map(|x| 1.0 / (x * x)).sum();
    let mut cross = 0.0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            cross += 1.0 / (t[i] * t[j]);
        }
    }
    Ok(ExpansionResult {
        n: 1,
        m: MultiIndex::zero(d - 1),
        k: 1,
        c0: PI * PI / (4.0 * ad * ad),
        c2k: PI / (2.0 * ad) * inv_sum,
        c2k1: 0.0,
        c2k2: Some(0.25 * (3.0 * inv_sq + 2.0 * cross)),
        eta_exponent: 0.5,
        remainder_order: 0.5,
        provenance: Provenance {
            c0: Source::ClosedForm,
            c2k: Source::ClosedForm,
            c2k1: Source::ClosedForm,
            c2k2: Source::ClosedForm,
        },
        unresolved_degeneracy: false,
    })
}

/// Published coefficient of the `eps` term for the first eigenvalue, where one
/// is known: planar ellipses (rescaled from radii 1 and `eps`) and the
/// lemniscate. The series then reads `c0/eps^2 + c2/eps + c4 + c5 eps + O(eps^2)`.
pub fn reference_linear_coefficient(model: &WidthModel) -> Option<f64> {
    match model {
        WidthModel::Ellipsoid { axes } if axes.len() == 2 => {
            let (a1, a2) = (axes[0], axes[1]);
            Some((11.0 / (8.0 * PI) + PI / 12.0) * a2 / a1.powi(3))
        }
        WidthModel::Lemniscate => {
            let r3 = 3f64.sqrt();
            Some(593.0 / (64.0 * r3 * PI) + r3 * PI / 4.0)
        }
        _ => None,
    }
}

/// Joseph's small-eccentricity expansion of the first ellipse eigenvalue.
pub fn joseph_ellipse_eccentricity(lambda_disk: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return invalid(format!("eccentricity must lie in [0, 1), got {e}"));
    }
    if !(lambda_disk.is_finite() && lambda_disk > 0.0) {
        return invalid("disk eigenvalue must be positive");
    }
    let l = lambda_disk;
    let q = 3.0 - l / 2.0;
    Ok(l * (1.0 - e * e / 2.0 - e.powi(4) / 16.0 * q - e.powi(6) / 32.0 * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taylor::{ellipsoid_taylor, TaylorWidthData};
    use approx::assert_relative_eq;

    #[test]
    fn linear_reference_scales_with_the_ellipse() {
        let unit = reference_linear_coefficient(&WidthModel::ellipsoid(&[1.0, 1.0]).unwrap()).unwrap();
        assert_relative_eq!(unit, 11.0 / (8.0 * PI) + PI / 12.0, epsilon = 1e-15);
        // radii (2, 3): lambda(eps) = lambda_unit(3 eps / 2) / 4
        let e = ellipsoid_expansion(&[2.0, 3.0]).unwrap();
        let u = ellipsoid_expansion(&[1.0, 1.0]).unwrap();
        let d = 1.5;
        assert_relative_eq!(e.c0, u.c0 / (d * d) / 4.0, epsilon = 1e-14);
        assert_relative_eq!(e.c2k, u.c2k / d / 4.0, epsilon = 1e-14);
        assert_relative_eq!(e.c2k2.unwrap(), u.c2k2.unwrap() / 4.0, epsilon = 1e-14);
        let lin = reference_linear_coefficient(&WidthModel::ellipsoid(&[2.0, 3.0]).unwrap()).unwrap();
        assert_relative_eq!(lin, unit * d / 4.0, epsilon = 1e-14);
        assert!(reference_linear_coefficient(&WidthModel::ellipsoid(&[1.0, 1.0, 1.0]).unwrap()).is_none());
    }

    #[test]
    fn ellipse_coefficients() {
        let r = first_eigenvalue_coeffs(&ellipsoid_taylor(&[1.0, 1.0]).unwrap()).unwrap();
        assert!((r.c0 - PI * PI / 4.0).abs() < 1e-12);
        assert!((r.c2k - PI / 2.0).abs() < 1e-12);
        assert_eq!(r.c2k1, 0.0);
        assert!((r.c2k2.unwrap() - 0.75).abs() < 1e-12);
        let v = evaluate_expansion(&r, 0.1).unwrap();
        assert_relative_eq!(v, 25.0 * PI * PI + 5.0 * PI + 0.75, epsilon = 1e-10);
    }

    #[test]
    fn closed_forms() {
        assert_relative_eq!(ellipsoid_expansion(&[1.0, 1.0, 1.0]).unwrap().c2k2.unwrap(), 2.0);
        assert_relative_eq!(ellipsoid_expansion(&[1.0, 2.0, 3.0]).unwrap().c2k2.unwrap(), 1.1875);
        let e = ellipsoid_expansion(&[0.7, 1.9, 1.3, 2.2]).unwrap();
        let g = first_eigenvalue_coeffs(&ellipsoid_taylor(&[0.7, 1.9, 1.3, 2.2]).unwrap()).unwrap();
        assert_relative_eq!(e.c2k2.unwrap(), g.c2k2.unwrap(), max_relative = 1e-12);
        assert_relative_eq!(e.c2k, g.c2k, max_relative = 1e-12);
        assert!(ellipsoid_expansion(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn corrector_single_axis() {
        let h3 = MonomialPolynomial::monomial(MultiIndex(vec![3]), 1.0);
        // theta = pi alpha / H0^{3/2} = 1 with H0 = 1
        let jet = TaylorWidthData::from_rotated_parts(
            1.0,
            vec![1.0 / PI],
            &h3,
            MonomialPolynomial::zero(1),
            vec![0.0],
        )
        .unwrap();
        let spec = oscillator_spectrum(&jet, 1, 1).unwrap();
        let c = build_psi1(&jet, &spec).unwrap();
        assert_relative_eq!(c.cubic[0], PI * PI / 3.0, epsilon = 1e-12);
        assert_relative_eq!(c.linear[0], PI * PI, epsilon = 1e-12);
    }

    #[test]
    fn ellipsoid_corrector_vanishes() {
        let jet = ellipsoid_taylor(&[1.0, 2.0, 3.0]).unwrap();
        let spec = oscillator_spectrum(&jet, 1, 1).unwrap();
        assert!(build_psi1(&jet, &spec).unwrap().r.is_zero());
    }

    #[test]
    fn splitting_matrix_zero_for_even_width() {
        let jet = ellipsoid_taylor(&[1.0, 1.0, 1.0]).unwrap();
        let spec = oscillator_spectrum(&jet, 1, 3).unwrap();
        let t = degenerate_c3_matrix(&jet, &spec, &spec.group(1), 1).unwrap();
        assert!(t.entries.iter().flatten().all(|v| *v == 0.0));
        assert!(t.repeated);
        let bad = [MultiIndex(vec![0, 0]), MultiIndex(vec![1, 0])];
        assert!(matches!(
            degenerate_c3_matrix(&jet, &spec, &bad, 1),
            Err(Error::InvalidLevel(_))
        ));
    }

    #[test]
    fn joseph_limits() {
        assert_eq!(joseph_ellipse_eccentricity(5.783186, 0.0).unwrap(), 5.783186);
        let e = 1e-3;
        let slope = (joseph_ellipse_eccentricity(5.783186, e).unwrap() - 5.783186) / (e * e);
        assert!((slope + 5.783186 / 2.0).abs() < 1e-4);
        assert!(joseph_ellipse_eccentricity(5.0, 1.0).is_err());
    }
}
