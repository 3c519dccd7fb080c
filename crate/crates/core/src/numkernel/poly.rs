use super::Real;

/// Polynomial in monomial coordinates: `coeffs[j]` multiplies `z^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<R> {
    coeffs: Vec<R>,
}

impl<R: Real> Polynomial<R> {
    pub fn new(coeffs: Vec<R>) -> Self {
        Polynomial { coeffs }
    }

    pub fn constant(c: R) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    /// `z - root`
    pub fn linear_factor(root: &R) -> Self {
        Polynomial {
            coeffs: vec![-root.clone(), R::one()],
        }
    }

    pub fn coeffs(&self) -> &[R] {
        &self.coeffs
    }

    /// Coefficient of `z^j`, zero past the stored length.
    pub fn coeff(&self, j: usize) -> R {
        self.coeffs.get(j).cloned().unwrap_or_else(R::zero)
    }

    /// Highest index with a nonzero coefficient; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// Horner evaluation.
    pub fn eval(&self, z: &R) -> R {
        self.coeffs
            .iter()
            .rev()
            .fold(R::zero(), |acc, c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Polynomial::constant(R::zero());
        }
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(j, c)| c.clone() * R::from_usize(j))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Polynomial::constant(R::zero());
        }
        let mut out = vec![R::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a.clone() * b;
            }
        }
        Polynomial { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Polynomial {
            coeffs: (0..n).map(|j| self.coeff(j) + other.coeff(j)).collect(),
        }
    }

    pub fn scale(&self, s: &R) -> Self {
        Polynomial {
            coeffs: self.coeffs.iter().map(|c| c.clone() * s).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_zeros_do_not_change_evaluation() {
        let p = Polynomial::new(vec![1.0, 2.0, 3.0]);
        let q = Polynomial::new(vec![1.0, 2.0, 3.0, 0.0, 0.0]);
        assert_eq!(p.degree(), Some(2));
        assert_eq!(q.degree(), Some(2));
        for z in [-1.5, 0.0, 0.3, 2.0] {
            assert_eq!(p.eval(&z), q.eval(&z));
        }
    }

    #[test]
    fn product_and_derivative() {
        // (z - 1)(z - 2) = z^2 - 3z + 2
        let p = Polynomial::linear_factor(&1.0).mul(&Polynomial::linear_factor(&2.0));
        assert_eq!(p.coeffs(), &[2.0, -3.0, 1.0]);
        assert_eq!(p.derivative().coeffs(), &[-3.0, 2.0]);
        assert_eq!(Polynomial::new(vec![0.0f64]).degree(), None);
    }
}
