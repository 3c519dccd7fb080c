//! ESPRIT fit of `N1` real decaying exponentials to equispaced samples.
//!
//! The first `2 N1` samples fill an `(N1 + 1) x N1` Hankel matrix; its left
//! singular vectors span the signal subspace, whose shift invariance gives the
//! nodes `phi_n = exp(-lambda_n Delta)` as eigenvalues of a small matrix.
//! Amplitudes then follow from a Vandermonde least-squares fit.

use rayon::prelude::*;
use thiserror::Error;

use crate::expmodel::{synthesize, ExponentialModel, SampleGrid};
use crate::numkernel::{eig_small, least_squares, svd, Matrix, NumError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EspritError {
    #[error("ESPRIT needs at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("model order must be at least 1")]
    ZeroOrder,
    #[error("samples must be finite")]
    NonFinite,
    #[error("node {index} is complex (relative imaginary part {ratio:e})")]
    ComplexNodes { index: usize, ratio: f64 },
    #[error("node {index} has non-positive real part")]
    NonPositiveNode { index: usize },
    #[error("rescaled errors need a positive noise level")]
    DivideByZero,
    #[error("cannot match {estimated} estimates to {truth} true values")]
    LengthMismatch { estimated: usize, truth: usize },
    #[error(transparent)]
    Numerical(#[from] NumError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig<R> {
    pub n1: usize,
    pub delta: R,
}

impl<R: Real> FitConfig<R> {
    pub fn new(n1: usize, delta: R) -> Self {
        FitConfig { n1, delta }
    }

    /// Largest tolerated `|Im phi| / |phi|`.
    pub fn imaginary_tolerance() -> R {
        if R::DIGITS >= 32 {
            R::from_f64(1e-6)
        } else {
            R::from_f64(1e-3)
        }
    }
}

/// Fitted terms sorted by increasing rate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialFit<R> {
    pub rates: Vec<R>,
    pub amplitudes: Vec<R>,
    pub nodes: Vec<R>,
}

pub fn esprit_fit<R: Real>(
    samples: &[R],
    cfg: &FitConfig<R>,
) -> Result<ExponentialFit<R>, EspritError> {
    let n1 = cfg.n1;
    if n1 == 0 {
        return Err(EspritError::ZeroOrder);
    }
    if samples.len() < 2 * n1 {
        return Err(EspritError::TooFewSamples {
            got: samples.len(),
            need: 2 * n1,
        });
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(EspritError::NonFinite);
    }
    let hankel = Matrix::from_fn(n1 + 1, n1, |i, j| samples[i + j].clone());
    let u = svd(&hankel)?.u;
    let top = Matrix::from_fn(n1, n1, |i, j| u[(i, j)].clone());
    let bottom = Matrix::from_fn(n1, n1, |i, j| u[(i + 1, j)].clone());
    // Top is square, so the least-squares shift equation is solved column by
    // column with the same QR.
    let mut psi = Matrix::zeros(n1, n1);
    for c in 0..n1 {
        let col = least_squares(&top, &bottom.column(c))?;
        for (r, v) in col.into_iter().enumerate() {
            psi[(r, c)] = v;
        }
    }
    let eig = eig_small(&psi)?;
    let tol = FitConfig::<R>::imaginary_tolerance();
    let mut nodes = Vec::with_capacity(n1);
    for (index, z) in eig.iter().enumerate() {
        let modulus = z.modulus();
        if !z.im.is_zero() {
            let ratio = z.im.abs() / &modulus;
            if ratio > tol {
                return Err(EspritError::ComplexNodes {
                    index,
                    ratio: ratio.to_f64(),
                });
            }
        }
        if z.re <= R::zero() {
            return Err(EspritError::NonPositiveNode { index });
        }
        nodes.push(z.re.clone());
    }
    // Largest node first means smallest rate first.
    nodes.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let rates: Vec<R> = nodes.iter().map(|p| -(p.ln() / &cfg.delta)).collect();
    let vandermonde = Matrix::from_fn(samples.len(), n1, |k, n| nodes[n].powi(k as i32));
    let amplitudes = least_squares(&vandermonde, samples)?;
    Ok(ExponentialFit {
        rates,
        amplitudes,
        nodes,
    })
}

/// Pairs estimates with true values by rank: `out[t]` is the index of the
/// estimate matched to `truth[t]`. Ties keep their input order.
pub fn index_match<R: Real>(estimated: &[R], truth: &[R]) -> Result<Vec<usize>, EspritError> {
    if estimated.len() != truth.len() {
        return Err(EspritError::LengthMismatch {
            estimated: estimated.len(),
            truth: truth.len(),
        });
    }
    let rank_order = |xs: &[R]| {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| {
            xs[a]
                .partial_cmp(&xs[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        idx
    };
    let est = rank_order(estimated);
    let tru = rank_order(truth);
    let mut out = vec![0; truth.len()];
    for (e, t) in est.into_iter().zip(tru) {
        out[t] = e;
    }
    Ok(out)
}

/// `(|lambda~ - lambda| / eps, |y~ - y| / eps)` per matched mode.
pub fn rescaled_errors<R: Real>(
    rates: &[R],
    amplitudes: &[R],
    true_rates: &[R],
    true_amplitudes: &[R],
    epsilon: &R,
) -> Result<(Vec<R>, Vec<R>), EspritError> {
    if *epsilon <= R::zero() {
        return Err(EspritError::DivideByZero);
    }
    let scaled = |a: &[R], b: &[R]| -> Vec<R> {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x.clone() - y).abs() / epsilon)
            .collect()
    };
    Ok((
        scaled(rates, true_rates),
        scaled(amplitudes, true_amplitudes),
    ))
}

/// A fit matched against the generating model.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryResult<R> {
    pub delta: R,
    /// Matched to the model's main terms, ascending.
    pub rates: Vec<R>,
    pub amplitudes: Vec<R>,
    pub permutation: Vec<usize>,
    /// Rescaled errors, present when the noise level is positive.
    pub rate_errors: Option<Vec<R>>,
    pub amplitude_errors: Option<Vec<R>>,
}

/// Synthesizes the minimal `2 N1` samples of `model`, fits them and matches
/// the result against the main terms.
pub fn recover<R: Real>(
    model: &ExponentialModel<R>,
    delta: &R,
) -> Result<RecoveryResult<R>, EspritError> {
    let grid =
        SampleGrid::minimal(model, delta.clone()).map_err(|_| EspritError::TooFewSamples {
            got: 0,
            need: 2 * model.n1(),
        })?;
    let samples = synthesize(model, &grid).total;
    let fit = esprit_fit(&samples, &FitConfig::new(model.n1(), delta.clone()))?;
    let true_rates: Vec<R> = model.main().iter().map(|m| m.rate.clone()).collect();
    let true_amps: Vec<R> = model.main().iter().map(|m| m.amplitude.clone()).collect();
    let permutation = index_match(&fit.rates, &true_rates)?;
    let rates: Vec<R> = permutation.iter().map(|&e| fit.rates[e].clone()).collect();
    let amplitudes: Vec<R> = permutation
        .iter()
        .map(|&e| fit.amplitudes[e].clone())
        .collect();
    let (rate_errors, amplitude_errors) = if model.epsilon().is_zero() {
        (None, None)
    } else {
        let (a, b) = rescaled_errors(
            &rates,
            &amplitudes,
            &true_rates,
            &true_amps,
            model.epsilon(),
        )?;
        (Some(a), Some(b))
    };
    Ok(RecoveryResult {
        delta: delta.clone(),
        rates,
        amplitudes,
        permutation,
        rate_errors,
        amplitude_errors,
    })
}

/// [`recover`] over a grid of steps, in parallel, results in input order.
pub fn recovery_sweep<R: Real>(
    model: &ExponentialModel<R>,
    deltas: &[R],
) -> Vec<Result<RecoveryResult<R>, EspritError>> {
    deltas.par_iter().map(|d| recover(model, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_noiseless() {
        let phi = [0.5f64, 0.25];
        let samples: Vec<f64> = (0..4).map(|k| phi[0].powi(k) + phi[1].powi(k)).collect();
        let fit = esprit_fit(&samples, &FitConfig::new(2, 1.0)).unwrap();
        for (got, want) in fit.nodes.iter().zip(phi) {
            assert!((got - want).abs() < 1e-12);
        }
        for a in &fit.amplitudes {
            assert!((a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_ratio() {
        let fit = esprit_fit(&[3.0, 3.0 * 0.4], &FitConfig::new(1, 0.5)).unwrap();
        assert!((fit.nodes[0] - 0.4).abs() < 1e-15);
        assert!((fit.amplitudes[0] - 3.0).abs() < 1e-15);
        assert!((fit.rates[0] + 0.4f64.ln() / 0.5).abs() < 1e-14);
    }

    #[test]
    fn matching() {
        assert_eq!(index_match(&[4.1, 0.9], &[1.0, 4.0]).unwrap(), vec![1, 0]);
        assert_eq!(
            index_match(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            vec![0, 1, 2]
        );
        let est = [2.0, 2.0 + 1e-9];
        let truth = [2.0 + 1e-9, 2.0];
        let p = index_match(&est, &truth).unwrap();
        for (t, &e) in p.iter().enumerate() {
            assert!((est[e] - truth[t]).abs() <= 1e-9 + 1e-15);
        }
    }

    #[test]
    fn rescaling() {
        let (r, a) = rescaled_errors(&[1.001], &[1.0], &[1.0], &[1.0], &0.1).unwrap();
        assert!((r[0] - 1e-2).abs() < 1e-12);
        assert_eq!(a[0], 0.0);
        assert!(matches!(
            rescaled_errors(&[1.0], &[1.0], &[1.0], &[1.0], &0.0),
            Err(EspritError::DivideByZero)
        ));
    }

    #[test]
    fn complex_nodes_rejected() {
        // Damped cosine: nodes 0.5 e^{+-i}.
        let samples: Vec<f64> = (0..4).map(|k| 0.5f64.powi(k) * (k as f64).cos()).collect();
        assert!(matches!(
            esprit_fit(&samples, &FitConfig::new(2, 1.0)),
            Err(EspritError::ComplexNodes { .. })
        ));
    }
}
