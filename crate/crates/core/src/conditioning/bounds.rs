//! Quantities behind the exponential decay of the condition numbers: node
//! products `xi`, their log-sums `theta`, the dilogarithm integrals `J`, and
//! checks of the inequalities relating them.

use crate::numkernel::{dilog_exp_neg, Real};
use crate::spectral::GapConstants;

use super::ConditionError;

/// `J_{w1,w2}(alpha) = (Li2(e^{-alpha w1}) - Li2(e^{-alpha w2})) / alpha`,
/// the integral of `-log(1 - e^{-alpha x})` over `[w1, w2]`. `w2 = None`
/// means infinity.
pub fn j_integral<R: Real>(w1: &R, w2: Option<&R>, alpha: &R) -> Result<R, ConditionError> {
    if *alpha <= R::zero() {
        return Err(ConditionError::Domain("alpha must be positive".into()));
    }
    if *w1 < R::zero() || w2.is_some_and(|w| w <= w1) {
        return Err(ConditionError::Domain("need 0 <= w1 < w2".into()));
    }
    let upper = dilog_exp_neg(&(alpha.clone() * w1))?;
    let lower = match w2 {
        Some(w) => dilog_exp_neg(&(alpha.clone() * w))?,
        None => R::zero(),
    };
    Ok((upper - lower) / alpha)
}

/// `M_phi = exp(2 (J_{0,inf}(2 v d) + J_{0,inf}(3 v d)))` for the lower gap
/// constant `v` and the smallest admissible step `d`.
pub fn lagrange_bound_constant<R: Real>(upsilon: &R, delta_floor: &R) -> Result<R, ConditionError> {
    let zero = R::zero();
    let a = j_integral(&zero, None, &(R::from_i64(2) * upsilon * delta_floor))?;
    let b = j_integral(&zero, None, &(R::from_i64(3) * upsilon * delta_floor))?;
    Ok((R::from_i64(2) * (a + b)).exp())
}

/// `-log(1 - e^{-x})`
fn neg_log_gap<R: Real>(x: R) -> R {
    -(-(-x).exp()).ln_1p()
}

/// Diagnostics for mode `n` (counted from 1) of an `N1`-term model.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundDiagnostics<R> {
    pub n: usize,
    pub n1: usize,
    pub delta: R,
    pub xi1: R,
    pub xi2: R,
    pub xi3: R,
    pub xi4: R,
    pub theta1: R,
    /// Zero for `n = 1` (empty sum).
    pub theta2: R,
    /// Zero for `n = N1` (empty sum).
    pub theta3: R,
    pub big_theta: R,
    pub sigma: i64,
    /// `L_n^2(phi_{N1+1}) = xi1 / (xi2 xi3)`.
    pub lagrange_sq: R,
    /// `xi4 Delta exp(-Delta lambda_{N1})`, bounded in `Delta`.
    pub xi4_scaled: R,
    /// Right-hand sides of the exponential rewritings of `xi1`, `xi2`,
    /// `xi3` and `L_n^2`.
    pub xi1_identity: R,
    pub xi2_identity: R,
    pub xi3_identity: R,
    pub lagrange_identity: R,
}

impl<R: Real> BoundDiagnostics<R> {
    /// Largest relative mismatch among the four exponential rewritings.
    pub fn identity_error(&self) -> R {
        [
            (&self.xi1, &self.xi1_identity),
            (&self.xi2, &self.xi2_identity),
            (&self.xi3, &self.xi3_identity),
            (&self.lagrange_sq, &self.lagrange_identity),
        ]
        .into_iter()
        .map(|(a, b)| super::relative_difference(a, b))
        .fold(R::zero(), R::max)
    }

    /// `L_n^2(phi_{N1+1}) exp(2 Delta v sigma)`, to be compared with `M_phi`.
    pub fn lagrange_scaled(&self, upsilon: &R) -> R {
        self.lagrange_sq.clone()
            * (R::from_i64(2) * &self.delta * upsilon * R::from_i64(self.sigma)).exp()
    }
}

/// `sigma(n, N) = sum_{j=n+1}^{N} (j^2 - n^2)`.
pub fn sigma(n: usize, n1: usize) -> i64 {
    let (n, big) = (n as i64, n1 as i64);
    big * (big + 1) * (2 * big + 1) / 6 - n * (n + 1) * (2 * n + 1) / 6 - (big - n) * n * n
}

/// Computes every diagnostic for mode `n` from `eigenvalues[j - 1] = lambda_j`,
/// which must extend at least to `lambda_{N1+1}`.
pub fn bound_diagnostics<R: Real>(
    eigenvalues: &[R],
    n: usize,
    n1: usize,
    delta: &R,
) -> Result<BoundDiagnostics<R>, ConditionError> {
    if n == 0 || n > n1 {
        return Err(ConditionError::Domain(format!("mode {n} outside 1..={n1}")));
    }
    if eigenvalues.len() < n1 + 1 {
        return Err(ConditionError::Domain(format!(
            "{} eigenvalues given, {} needed",
            eigenvalues.len(),
            n1 + 1
        )));
    }
    let lam = |j: usize| &eigenvalues[j - 1];
    let phi: Vec<R> = eigenvalues[..=n1]
        .iter()
        .map(|l| (-(l.clone() * delta)).exp())
        .collect();
    let ph = |j: usize| &phi[j - 1];
    let two = R::from_i64(2);
    let sq = |x: R| x.clone() * x;

    let others = || (1..=n1).filter(move |&j| j != n);
    let below = 1..n;
    let above = n + 1..=n1;

    let xi1 = others().fold(R::one(), |p, j| p * sq(ph(n1 + 1).clone() - ph(j)));
    let xi2 = below
        .clone()
        .fold(R::one(), |p, j| p * sq(ph(n).clone() - ph(j)));
    let xi3 = above
        .clone()
        .fold(R::one(), |p, j| p * sq(ph(n).clone() - ph(j)));
    let xi4 = others().fold(R::zero(), |s, k| {
        s + R::one() / (ph(n).clone() - ph(k)).abs()
    });

    let theta1 = others().fold(R::zero(), |s, j| {
        s + neg_log_gap((lam(n1 + 1).clone() - lam(j)) * delta)
    });
    let theta2 = below.clone().fold(R::zero(), |s, j| {
        s + neg_log_gap((lam(n).clone() - lam(j)) * delta)
    });
    let theta3 = above.clone().fold(R::zero(), |s, j| {
        s + neg_log_gap((lam(j).clone() - lam(n)) * delta)
    });
    let big_theta = -(two.clone() * (theta1.clone() - &theta2 - &theta3));

    let sum_others = others().fold(R::zero(), |s, j| s + lam(j));
    let sum_below = below.clone().fold(R::zero(), |s, j| s + lam(j));
    let above_gap = above
        .clone()
        .fold(R::zero(), |s, j| s + lam(j).clone() - lam(n));
    let xi1_identity = (-(two.clone() * delta * sum_others) - two.clone() * &theta1).exp();
    let xi2_identity = (-(two.clone() * delta * sum_below) - two.clone() * &theta2).exp();
    let xi3_identity =
        (-(two.clone() * delta * R::from_usize(n1 - n) * lam(n)) - two.clone() * &theta3).exp();
    let lagrange_identity = (-(two.clone() * delta * above_gap) + &big_theta).exp();

    let lagrange_sq = xi1.clone() / (xi2.clone() * &xi3);
    let xi4_scaled = xi4.clone() * delta * (-(delta.clone() * lam(n1))).exp();

    Ok(BoundDiagnostics {
        n,
        n1,
        delta: delta.clone(),
        xi1,
        xi2,
        xi3,
        xi4,
        theta1,
        theta2,
        theta3,
        big_theta,
        sigma: sigma(n, n1),
        lagrange_sq,
        xi4_scaled,
        xi1_identity,
        xi2_identity,
        xi3_identity,
        lagrange_identity,
    })
}

/// Lower and upper bounds on `theta1..theta3` from the gap constants. The
/// `theta2` bounds exist for `n > 1`, the `theta3` bounds for `n < N1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaBounds<R> {
    pub theta1: (R, R),
    pub theta2: Option<(R, R)>,
    pub theta3: Option<(R, R)>,
}

impl<R: Real> ThetaBounds<R> {
    /// Whether every bound holds, allowing a relative slack of `10^(6-D)`.
    pub fn contains(&self, d: &BoundDiagnostics<R>) -> bool {
        let slack = R::precision_floor(6);
        let within = |(lo, hi): &(R, R), v: &R| {
            let tol = slack.clone() * (R::one() + v.abs());
            *v >= lo.clone() - &tol && *v <= hi.clone() + &tol
        };
        within(&self.theta1, &d.theta1)
            && self.theta2.as_ref().is_none_or(|b| within(b, &d.theta2))
            && self.theta3.as_ref().is_none_or(|b| within(b, &d.theta3))
    }
}

pub fn theta_bounds<R: Real>(
    n: usize,
    n1: usize,
    delta: &R,
    gaps: &GapConstants<R>,
) -> Result<ThetaBounds<R>, ConditionError> {
    if n == 0 || n > n1 {
        return Err(ConditionError::Domain(format!("mode {n} outside 1..={n1}")));
    }
    let zero = R::zero();
    let one = R::one();
    let two = R::from_i64(2);
    let lo_rate = delta.clone() * &gaps.lower;
    let hi_rate = delta.clone() * &gaps.upper;
    let f = R::from_usize;
    let log_gap = |x: R| (-(-x).exp()).ln_1p();

    let t1_hi = j_integral(&zero, None, &(lo_rate.clone() * f(n1)))?
        + log_gap(lo_rate.clone() * f((n1 + 1 - n) * (n1 + 1)));
    let t1_lo = j_integral(&one, Some(&two), &(hi_rate.clone() * f(2 * n1 + 1)))?
        + log_gap(hi_rate.clone() * f((n1 + 1 - n) * (2 * n1 + 1)));
    let theta2 = if n > 1 {
        Some((
            j_integral(&one, Some(&two), &(hi_rate.clone() * f(2 * n - 1)))?,
            j_integral(&zero, None, &(lo_rate.clone() * f(n + 1)))?,
        ))
    } else {
        None
    };
    let theta3 = if n < n1 {
        Some((
            j_integral(&one, Some(&two), &(hi_rate * f(n1 + n + 1)))?,
            j_integral(&zero, None, &(lo_rate * f(2 * n + 1)))?,
        ))
    } else {
        None
    };
    Ok(ThetaBounds {
        theta1: (t1_lo, t1_hi),
        theta2,
        theta3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn squares(k: usize) -> Vec<f64> {
        (1..=k).map(|n| (n * n) as f64).collect()
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(1, 2), 3);
        for n1 in 1..8 {
            for n in 1..=n1 {
                let direct: i64 = (n + 1..=n1).map(|j| (j * j - n * n) as i64).sum();
                assert_eq!(sigma(n, n1), direct);
            }
        }
    }

    #[test]
    fn xi4_single_term() {
        let d = bound_diagnostics(&squares(3), 1, 2, &1.0).unwrap();
        let want = 1.0 / ((-1.0f64).exp() - (-4.0f64).exp());
        assert!((d.xi4 - want).abs() < 1e-14);
        assert!((d.xi4 - 2.86071).abs() < 1e-5);
        assert_eq!(d.xi2, 1.0);
        assert_eq!(d.theta2, 0.0);
    }

    #[test]
    fn identities_hold() {
        for n1 in 2..=5 {
            for n in 1..=n1 {
                for delta in [0.25, 1.0, 3.0] {
                    let d = bound_diagnostics(&squares(n1 + 1), n, n1, &delta).unwrap();
                    assert!(d.identity_error() < 1e-12, "n {n} n1 {n1} delta {delta}");
                }
            }
        }
    }

    #[test]
    fn j_integral_values() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((j_integral(&0.0, None, &1.0).unwrap() - pi2 / 6.0).abs() < 1e-14);
        assert!(j_integral(&0.0, None, &2.0).unwrap() < j_integral(&0.0, None, &1.0).unwrap());
        assert!(j_integral(&1.0, Some(&2.0), &50.0).unwrap() < 1e-20);
        assert!(j_integral(&1.0, Some(&0.5), &1.0).is_err());
        assert!(j_integral(&0.0, None, &0.0).is_err());
    }
}
