//! Polynomial moments of the anisotropic Gaussian ground-state density.
//!
//! With `Psi0(xi) = prod_j (theta_j/pi)^{1/4} exp(-theta_j xi_j^2 / 2)`, the
//! density `Psi0^2` factorizes into centred normals of variance `1/(2 theta_j)`,
//! so every monomial moment is a product of one-dimensional double-factorial
//! moments (Isserlis). All inner products used by the expansion reduce to
//! these closed forms.

use crate::error::{invalid, Result};
use crate::oscillator::HermiteEigenfunction;
use crate::poly::{MonomialPolynomial, MultiIndex};

/// `int xi^(2r) Psi0^2 = (2r-1)!! / (2 theta)^r` for one axis; odd powers vanish.
pub fn axis_moment(power: usize, theta: f64) -> f64 {
    if power % 2 == 1 {
        return 0.0;
    }
    let r = power / 2;
    let mut m = 1.0;
    for i in 0..r {
        m *= (2 * i + 1) as f64 / (2.0 * theta);
    }
    m
}

/// `int xi^alpha Psi0(xi)^2 d xi` over `R^{d-1}`.
pub fn gaussian_moment(theta: &[f64], alpha: &MultiIndex) -> f64 {
    debug_assert_eq!(theta.len(), alpha.dim());
    alpha
        .as_slice()
        .iter()
        .zip(theta)
        .map(|(&p, &t)| axis_moment(p, t))
        .product()
}

fn check_theta(theta: &[f64]) -> Result<()> {
    if theta.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return invalid(format!("oscillator frequencies must be positive, got {theta:?}"));
    }
    Ok(())
}

/// `<A Psi0, B Psi0>` in `L2(R^{d-1})`.
pub fn polynomial_inner(theta: &[f64], a: &MonomialPolynomial, b: &MonomialPolynomial) -> Result<f64> {
    check_theta(theta)?;
    if a.dim() != theta.len() || b.dim() != theta.len() {
        return invalid(format!(
            "dimension mismatch: theta has {} axes, polynomials have {} and {}",
            theta.len(),
            a.dim(),
            b.dim()
        ));
    }
    // Sum in a canonical order (by the smaller-then-larger key pair) so that
    // inner(A, B) and inner(B, A) add identical terms in identical order.
    let mut pairs: Vec<(&MultiIndex, &MultiIndex, f64)> = Vec::with_capacity(a.len() * b.len());
    for (ka, ca) in a.terms() {
        for (kb, cb) in b.terms() {
            let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
            pairs.push((lo, hi, ca * cb));
        }
    }
    pairs.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)).then(x.2.total_cmp(&y.2)));
    Ok(pairs
        .into_iter()
        .map(|(lo, hi, c)| c * gaussian_moment(theta, &lo.add(hi)))
        .sum())
}

/// `<A f, g>` for two oscillator eigenfunctions sharing the same frequencies.
pub fn hermite_inner(
    theta: &[f64],
    a: &MonomialPolynomial,
    f: &HermiteEigenfunction,
    g: &HermiteEigenfunction,
) -> Result<f64> {
    let same = |t: &[f64]| t.len() == theta.len() && t.iter().zip(theta).all(|(x, y)| x == y);
    if !same(&f.theta) || !same(&g.theta) {
        return invalid("hermite_inner: eigenfunctions were built for different frequencies");
    }
    let fa = a * &f.relative_polynomial();
    polynomial_inner(theta, &fa, &g.relative_polynomial())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    #[test]
    fn spec_moment_examples() {
        assert_relative_eq!(gaussian_moment(&[1.0], &mi(&[2])), 0.5);
        assert_relative_eq!(gaussian_moment(&[1.0], &mi(&[4])), 0.75);
        assert_relative_eq!(gaussian_moment(&[2.0, 3.0], &mi(&[2, 2])), 1.0 / 24.0, epsilon = 1e-15);
        assert_eq!(gaussian_moment(&[0.7, 1.3], &mi(&[3, 2])), 0.0);
        assert_eq!(gaussian_moment(&[0.7, 1.3], &mi(&[2, 5])), 0.0);
    }

    #[test]
    fn inner_normalization_and_variance() {
        let one = MonomialPolynomial::constant(2, 1.0);
        assert_relative_eq!(polynomial_inner(&[0.3, 2.0], &one, &one).unwrap(), 1.0);
        let x = MonomialPolynomial::variable(1, 0);
        let t = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(
            polynomial_inner(&[t], &x, &x).unwrap(),
            1.0 / std::f64::consts::PI,
            epsilon = 1e-15
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let x = MonomialPolynomial::variable(2, 0);
        assert!(polynomial_inner(&[1.0], &x, &x).is_err());
        assert!(polynomial_inner(&[1.0, -1.0], &x, &x).is_err());
    }
}
