//! Sparse multivariate polynomials in monomial form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Exponent vector of a monomial, ordered lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// All exponent vectors of the given total degree, in lexicographic order.
    pub fn of_degree(dim: usize, degree: usize) -> Vec<MultiIndex> {
        fn rec(dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
            if cur.len() + 1 == dim {
                cur.push(left);
                out.push(MultiIndex(cur.clone()));
                cur.pop();
                return;
            }
            for k in 0..=left {
                cur.push(k);
                rec(dim, left - k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        if dim == 0 {
            if degree == 0 {
                out.push(MultiIndex(vec![]));
            }
            return out;
        }
        rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
        out.sort();
        out
    }

    /// `prod_i gamma_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| factorial(k)).product()
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// Polynomial in `dim` variables stored as a map from exponent vectors to
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolynomialRepr", from = "PolynomialRepr")]
pub struct MonomialPolynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

/// Serialized form: JSON object keys must be strings, so terms become a list.
#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    dim: usize,
    terms: Vec<(Vec<usize>, f64)>,
}

impl From<MonomialPolynomial> for PolynomialRepr {
    fn from(p: MonomialPolynomial) -> Self {
        PolynomialRepr {
            dim: p.dim,
            terms: p.terms.into_iter().map(|(k, c)| (k.0, c)).collect(),
        }
    }
}

impl From<PolynomialRepr> for MonomialPolynomial {
    fn from(r: PolynomialRepr) -> Self {
        let mut p = MonomialPolynomial::zero(r.dim);
        for (k, c) in r.terms {
            if k.len() == r.dim {
                p.add_term(MultiIndex(k), c);
            }
        }
        p
    }
}

impl fmt::Debug for MonomialPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| format!("{c:+e}*x^{:?}", k.0))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl MonomialPolynomial {
    pub fn zero(dim: usize) -> Self {
        MonomialPolynomial {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate function `xi_i`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::unit(dim, i), 1.0);
        p
    }

    pub fn monomial(exponents: MultiIndex, coeff: f64) -> Self {
        let mut p = Self::zero(exponents.dim());
        p.add_term(exponents, coeff);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (k, c) in terms {
            if k.dim() != dim {
                return invalid(format!("exponent {:?} has wrong dimension (expected {dim})", k.0));
            }
            p.add_term(k, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &MultiIndex) -> f64 {
        self.terms.get(k).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, k: MultiIndex, c: f64) {
        assert_eq!(k.dim(), self.dim, "exponent dimension mismatch");
        if c == 0.0 {
            return;
        }
        let sum = {
            let entry = self.terms.entry(k.clone()).or_insert(0.0);
            *entry += c;
            *entry
        };
        if sum == 0.0 {
            self.terms.remove(&k);
        }
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|k| k.degree()).max()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, c) in self.terms() {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    /// Terms of exactly the given total degree.
    pub fn homogeneous_part(&self, degree: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, c) in self.terms() {
            if k.degree() == degree {
                out.add_term(k.clone(), c);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|(k, c)| c * k.0.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, c) in self.terms() {
            if k.0[i] > 0 {
                let mut e = k.clone();
                e.0[i] -= 1;
                out.add_term(e, c * k.0[i] as f64);
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.dim);
        for i in 0..self.dim {
            out = &out + &self.partial(i).partial(i);
        }
        out
    }

    /// `p(M y)` as a polynomial in `y`, where `(M y)_i = sum_j m[i][j] y_j`.
    pub fn substitute_linear(&self, m: &[Vec<f64>]) -> Self {
        let n = self.dim;
        let forms: Vec<MonomialPolynomial> = (0..n)
            .map(|i| {
                let mut f = Self::zero(n);
                for (j, &mij) in m[i].iter().enumerate() {
                    f.add_term(MultiIndex::unit(n, j), mij);
                }
                f
            })
            .collect();
        let mut out = Self::zero(n);
        for (k, c) in self.terms() {
            let mut prod = Self::constant(n, c);
            for (i, &e) in k.0.iter().enumerate() {
                for _ in 0..e {
                    prod = &prod * &forms[i];
                }
            }
            out = &out + &prod;
        }
        out
    }

    /// Largest absolute coefficient (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Add for &MonomialPolynomial {
    type Output = MonomialPolynomial;
    fn add(self, rhs: &MonomialPolynomial) -> MonomialPolynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = self.clone();
        for (k, c) in rhs.terms() {
            out.add_term(k.clone(), c);
        }
        out
    }
}

impl Sub for &MonomialPolynomial {
    type Output = MonomialPolynomial;
    fn sub(self, rhs: &MonomialPolynomial) -> MonomialPolynomial {
        self + &rhs.scaled(-1.0)
    }
}

impl Neg for &MonomialPolynomial {
    type Output = MonomialPolynomial;
    fn neg(self) -> MonomialPolynomial {
        self.scaled(-1.0)
    }
}

impl Mul for &MonomialPolynomial {
    type Output = MonomialPolynomial;
    fn mul(self, rhs: &MonomialPolynomial) -> MonomialPolynomial {
        assert_eq!(self.dim, rhs.dim);
        let mut out = MonomialPolynomial::zero(self.dim);
        for (ka, ca) in self.terms() {
            for (kb, cb) in rhs.terms() {
                out.add_term(ka.add(kb), ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_enumeration_counts() {
        assert_eq!(MultiIndex::of_degree(2, 3).len(), 4);
        assert_eq!(MultiIndex::of_degree(3, 4).len(), 15);
        assert_eq!(MultiIndex::of_degree(1, 5), vec![MultiIndex(vec![5])]);
    }

    #[test]
    fn cancellation_removes_term() {
        let x = MonomialPolynomial::variable(2, 0);
        let z = &x - &x;
        assert!(z.is_zero());
    }

    #[test]
    fn laplacian_of_cubic() {
        // x^3 + x y^2 -> 6x + 2x = 8x
        let p = MonomialPolynomial::from_terms(
            2,
            [(MultiIndex(vec![3, 0]), 1.0), (MultiIndex(vec![1, 2]), 1.0)],
        )
        .unwrap();
        let l = p.laplacian();
        assert_eq!(l.coeff(&MultiIndex(vec![1, 0])), 8.0);
        assert_eq!(l.len(), 1);
    }

    #[test]
    fn linear_substitution_matches_pointwise() {
        let p = MonomialPolynomial::from_terms(
            2,
            [
                (MultiIndex(vec![2, 1]), 1.5),
                (MultiIndex(vec![0, 3]), -0.7),
                (MultiIndex(vec![1, 0]), 2.0),
            ],
        )
        .unwrap();
        let (c, s) = (0.6f64, 0.8f64);
        let m = vec![vec![c, -s], vec![s, c]];
        let q = p.substitute_linear(&m);
        let y = [0.3, -1.1];
        let x = [c * y[0] - s * y[1], s * y[0] + c * y[1]];
        assert!((q.eval(&y) - p.eval(&x)).abs() < 1e-13);
    }
}
