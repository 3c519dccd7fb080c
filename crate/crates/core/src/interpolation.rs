//! Lagrange and Hermite interpolation bases on a finite node set.
//!
//! Node indices are zero-based throughout. The Hermite matrix stores, in row
//! pair `(2n, 2n + 1)`, the monomial coefficients of `H_n` and `H~_n`, so that
//! multiplying it by `(1, z, z^2, ...)` evaluates every basis polynomial at
//! `z`. It is the inverse of the confluent Vandermonde matrix.

use thiserror::Error;

use crate::numkernel::{Matrix, Polynomial, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpolationError {
    #[error("nodes {i} and {j} coincide to working precision")]
    DuplicateNodes { i: usize, j: usize },
    #[error("node set is empty")]
    Empty,
    #[error("node index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Ordered, pairwise distinct interpolation nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet<R> {
    nodes: Vec<R>,
}

impl<R: Real> NodeSet<R> {
    /// Rejects pairs closer than `10^(4 - DIGITS) * max|x|`.
    pub fn new(nodes: Vec<R>) -> Result<Self, InterpolationError> {
        if nodes.is_empty() {
            return Err(InterpolationError::Empty);
        }
        let scale = crate::numkernel::max_abs(&nodes);
        let threshold = R::precision_floor(4) * scale;
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                let gap = (nodes[i].clone() - &nodes[j]).abs();
                if gap.is_zero() || gap <= threshold {
                    return Err(InterpolationError::DuplicateNodes { i, j });
                }
            }
        }
        Ok(NodeSet { nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[R] {
        &self.nodes
    }

    fn check(&self, n: usize) -> Result<(), InterpolationError> {
        if n >= self.len() {
            return Err(InterpolationError::IndexOutOfRange {
                index: n,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// `L_n(z) = prod_{j != n} (z - x_j) / (x_n - x_j)`, evaluated in product
    /// form.
    pub fn lagrange_value(&self, n: usize, z: &R) -> Result<R, InterpolationError> {
        self.check(n)?;
        let xn = &self.nodes[n];
        let mut v = R::one();
        for (j, xj) in self.nodes.iter().enumerate() {
            if j != n {
                v *= (z.clone() - xj) / (xn.clone() - xj);
            }
        }
        Ok(v)
    }

    /// `L_n'(x_n) = sum_{j != n} 1 / (x_n - x_j)`.
    pub fn lagrange_log_derivative(&self, n: usize) -> Result<R, InterpolationError> {
        self.check(n)?;
        let xn = &self.nodes[n];
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != n)
            .fold(R::zero(), |s, (_, xj)| s + R::one() / (xn.clone() - xj)))
    }

    /// `(H_n(z), H~_n(z))` from the factored form, without expanding
    /// coefficients. This is the accurate way to evaluate far from the nodes.
    pub fn hermite_values(&self, n: usize, z: &R) -> Result<(R, R), InterpolationError> {
        let l = self.lagrange_value(n, z)?;
        let dl = self.lagrange_log_derivative(n)?;
        let shift = z.clone() - &self.nodes[n];
        let l2 = l.clone() * &l;
        let h = (R::one() - R::from_i64(2) * &shift * &dl) * &l2;
        Ok((h, shift * l2))
    }
}

/// Pair of Hermite basis polynomials attached to node `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitePair<R> {
    pub n: usize,
    pub h: Polynomial<R>,
    pub h_tilde: Polynomial<R>,
}

pub fn lagrange_basis<R: Real>(
    nodes: &NodeSet<R>,
    n: usize,
) -> Result<Polynomial<R>, InterpolationError> {
    nodes.check(n)?;
    let xn = &nodes.nodes[n];
    let mut p = Polynomial::constant(R::one());
    for (j, xj) in nodes.nodes.iter().enumerate() {
        if j != n {
            let denom = xn.clone() - xj;
            p = p
                .mul(&Polynomial::linear_factor(xj))
                .scale(&(R::one() / denom));
        }
    }
    Ok(p)
}

pub fn hermite_basis<R: Real>(
    nodes: &NodeSet<R>,
    n: usize,
) -> Result<HermitePair<R>, InterpolationError> {
    let l = lagrange_basis(nodes, n)?;
    let dl = nodes.lagrange_log_derivative(n)?;
    let l2 = l.mul(&l);
    let xn = &nodes.nodes[n];
    let shift = Polynomial::linear_factor(xn);
    let two_dl = R::from_i64(2) * dl;
    // 1 - 2 L'(x_n) (z - x_n)
    let factor = Polynomial::constant(R::one()).add(&shift.scale(&-two_dl));
    let mut h = factor.mul(&l2);
    let mut h_tilde = shift.mul(&l2);
    let len = 2 * nodes.len();
    truncate_to(&mut h, len);
    truncate_to(&mut h_tilde, len);
    Ok(HermitePair { n, h, h_tilde })
}

fn truncate_to<R: Real>(p: &mut Polynomial<R>, len: usize) {
    let mut c = p.coeffs().to_vec();
    c.resize(len, R::zero());
    *p = Polynomial::new(c);
}

/// The `2S x 2S` Hermite matrix.
pub fn hermite_matrix<R: Real>(nodes: &NodeSet<R>) -> Result<Matrix<R>, InterpolationError> {
    let s = nodes.len();
    let mut m = Matrix::zeros(2 * s, 2 * s);
    for n in 0..s {
        let pair = hermite_basis(nodes, n)?;
        for j in 0..2 * s {
            m[(2 * n, j)] = pair.h.coeff(j);
            m[(2 * n + 1, j)] = pair.h_tilde.coeff(j);
        }
    }
    Ok(m)
}

/// Confluent Vandermonde matrix with `rows` rows: row `k` holds
/// `(x_n^k, k x_n^(k-1))` for each node. With `rows = 2S` it is the inverse of
/// the Hermite matrix.
pub fn confluent_vandermonde<R: Real>(nodes: &NodeSet<R>, rows: usize) -> Matrix<R> {
    let s = nodes.len();
    Matrix::from_fn(rows, 2 * s, |k, c| {
        let x = &nodes.nodes[c / 2];
        if c % 2 == 0 {
            x.powi(k as i32)
        } else if k == 0 {
            R::zero()
        } else {
            R::from_usize(k) * x.powi(k as i32 - 1)
        }
    })
}
