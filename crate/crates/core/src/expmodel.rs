//! Exponential-sum measurement model
//!
//! `y(t_k) = sum_{n <= N1} y_n exp(-lambda_n k Delta) + eps * sum_{tail} y_m exp(-lambda_m k Delta)`,
//!
//! its residual map, and a Newton solver that follows the root of the
//! residual from the true parameters as the tail weight `eps` is switched on.

use thiserror::Error;

use crate::numkernel::{max_abs, solve_linear, Matrix, NumError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("decay rates must be strictly increasing (index {0})")]
    UnorderedRates(usize),
    #[error("main amplitude {0} is zero")]
    ZeroAmplitude(usize),
    #[error("noise level must be non-negative")]
    NegativeEpsilon,
    #[error("the model needs at least one main term")]
    NoMainTerms,
    #[error("sampling step must be positive")]
    NonPositiveStep,
    #[error("amplitude ratio {ratio} exceeds the bound {bound}")]
    RatioBound { ratio: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Newton iteration diverged after {steps} steps (residual {residual:e})")]
    NewtonDiverged { steps: usize, residual: f64 },
    #[error("Jacobian is singular to working precision")]
    SingularJacobian,
    #[error(transparent)]
    Numerical(NumError),
}

impl From<NumError> for ModelError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::SingularMatrix { .. } => ModelError::SingularJacobian,
            other => ModelError::Numerical(other),
        }
    }
}

/// One exponential term `amplitude * exp(-rate * t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode<R> {
    pub rate: R,
    pub amplitude: R,
}

impl<R: Real> Mode<R> {
    pub fn new(rate: R, amplitude: R) -> Self {
        Mode { rate, amplitude }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialModel<R> {
    main: Vec<Mode<R>>,
    tail: Vec<Mode<R>>,
    epsilon: R,
}

impl<R: Real> ExponentialModel<R> {
    pub fn new(main: Vec<Mode<R>>, tail: Vec<Mode<R>>, epsilon: R) -> Result<Self, ModelError> {
        if main.is_empty() {
            return Err(ModelError::NoMainTerms);
        }
        if epsilon < R::zero() {
            return Err(ModelError::NegativeEpsilon);
        }
        for (n, m) in main.iter().enumerate() {
            if m.amplitude.is_zero() {
                return Err(ModelError::ZeroAmplitude(n + 1));
            }
        }
        let rates: Vec<&R> = main.iter().chain(&tail).map(|m| &m.rate).collect();
        for i in 1..rates.len() {
            if rates[i] <= rates[i - 1] {
                return Err(ModelError::UnorderedRates(i + 1));
            }
        }
        Ok(ExponentialModel {
            main,
            tail,
            epsilon,
        })
    }

    /// Convenience constructor from parallel lists; the first `n1` entries
    /// form the main part.
    pub fn from_lists(
        rates: &[R],
        amplitudes: &[R],
        n1: usize,
        epsilon: R,
    ) -> Result<Self, ModelError> {
        if rates.len() != amplitudes.len() || n1 > rates.len() {
            return Err(ModelError::Dimension(format!(
                "{} rates, {} amplitudes, N1 = {n1}",
                rates.len(),
                amplitudes.len()
            )));
        }
        let modes: Vec<Mode<R>> = rates
            .iter()
            .zip(amplitudes)
            .map(|(l, y)| Mode::new(l.clone(), y.clone()))
            .collect();
        let tail = modes[n1..].to_vec();
        let mut main = modes;
        main.truncate(n1);
        Self::new(main, tail, epsilon)
    }

    /// Checks `|y_m| / |y_n| <= bound` for every main `n` and tail `m`.
    pub fn check_ratio_bound(&self, bound: &R) -> Result<(), ModelError> {
        for n in &self.main {
            for m in &self.tail {
                let ratio = m.amplitude.abs() / n.amplitude.abs();
                if ratio > *bound {
                    return Err(ModelError::RatioBound {
                        ratio: ratio.to_f64(),
                        bound: bound.to_f64(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n1(&self) -> usize {
        self.main.len()
    }

    pub fn n2(&self) -> usize {
        self.tail.len()
    }

    pub fn main(&self) -> &[Mode<R>] {
        &self.main
    }

    pub fn tail(&self) -> &[Mode<R>] {
        &self.tail
    }

    pub fn epsilon(&self) -> &R {
        &self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: R) -> Result<Self, ModelError> {
        Self::new(self.main.clone(), self.tail.clone(), epsilon)
    }

    /// `phi_n = exp(-lambda_n Delta)` for main then tail terms.
    pub fn nodes_for(&self, delta: &R) -> Vec<R> {
        self.main
            .iter()
            .chain(&self.tail)
            .map(|m| (-(m.rate.clone() * delta)).exp())
            .collect()
    }

    /// The true main parameters as a candidate.
    pub fn true_parameters(&self) -> CandidateParameters<R> {
        CandidateParameters::from_modes(&self.main)
    }
}

/// Equispaced sample times `t_k = k Delta`, `k = 0..count`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid<R> {
    delta: R,
    count: usize,
}

impl<R: Real> SampleGrid<R> {
    pub fn new(delta: R, count: usize) -> Result<Self, ModelError> {
        if delta <= R::zero() {
            return Err(ModelError::NonPositiveStep);
        }
        if count == 0 {
            return Err(ModelError::Dimension("empty sample grid".into()));
        }
        Ok(SampleGrid { delta, count })
    }

    /// The minimal grid of `2 N1` samples.
    pub fn minimal(model: &ExponentialModel<R>, delta: R) -> Result<Self, ModelError> {
        Self::new(delta, 2 * model.n1())
    }

    pub fn delta(&self) -> &R {
        &self.delta
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn times(&self) -> Vec<R> {
        (0..self.count)
            .map(|k| R::from_usize(k) * &self.delta)
            .collect()
    }
}

/// Flattened candidate `(y_1, lambda_1, y_2, lambda_2, ...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateParameters<R> {
    values: Vec<R>,
}

impl<R: Real> CandidateParameters<R> {
    pub fn from_modes(modes: &[Mode<R>]) -> Self {
        CandidateParameters {
            values: modes
                .iter()
                .flat_map(|m| [m.amplitude.clone(), m.rate.clone()])
                .collect(),
        }
    }

    pub fn from_vec(values: Vec<R>) -> Result<Self, ModelError> {
        if values.len() % 2 != 0 {
            return Err(ModelError::Dimension(format!(
                "candidate vector of odd length {}",
                values.len()
            )));
        }
        Ok(CandidateParameters { values })
    }

    pub fn len(&self) -> usize {
        self.values.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn amplitude(&self, n: usize) -> &R {
        &self.values[2 * n]
    }

    pub fn rate(&self, n: usize) -> &R {
        &self.values[2 * n + 1]
    }

    pub fn amplitudes(&self) -> Vec<R> {
        (0..self.len()).map(|n| self.amplitude(n).clone()).collect()
    }

    pub fn rates(&self) -> Vec<R> {
        (0..self.len()).map(|n| self.rate(n).clone()).collect()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.values
    }

    pub fn modes(&self) -> Vec<Mode<R>> {
        (0..self.len())
            .map(|n| Mode::new(self.rate(n).clone(), self.amplitude(n).clone()))
            .collect()
    }

    pub fn rates_increasing(&self) -> bool {
        (1..self.len()).all(|n| self.rate(n) > self.rate(n - 1))
    }
}

/// Synthesized samples with the two sums kept apart.
#[derive(Clone, Debug, PartialEq)]
pub struct Synthesis<R> {
    pub main: Vec<R>,
    /// The unweighted tail sum; `total = main + eps * tail`.
    pub tail: Vec<R>,
    pub total: Vec<R>,
}

fn exp_sum<R: Real>(modes: &[Mode<R>], delta: &R, k: usize) -> R {
    let t = R::from_usize(k) * delta;
    modes.iter().fold(R::zero(), |s, m| {
        s + m.amplitude.clone() * (-(m.rate.clone() * &t)).exp()
    })
}

pub fn synthesize<R: Real>(model: &ExponentialModel<R>, grid: &SampleGrid<R>) -> Synthesis<R> {
    let main: Vec<R> = (0..grid.count)
        .map(|k| exp_sum(&model.main, &grid.delta, k))
        .collect();
    let tail: Vec<R> = (0..grid.count)
        .map(|k| exp_sum(&model.tail, &grid.delta, k))
        .collect();
    let total = if model.epsilon.is_zero() {
        main.clone()
    } else {
        main.iter()
            .zip(&tail)
            .map(|(m, t)| m.clone() + model.epsilon.clone() * t)
            .collect()
    };
    Synthesis { main, tail, total }
}

/// `F_k = sum_n y^_n exp(-lambda^_n Delta k) - y(t_k)`.
pub fn residual<R: Real>(
    candidate: &CandidateParameters<R>,
    data: &[R],
    grid: &SampleGrid<R>,
) -> Result<Vec<R>, ModelError> {
    if data.len() != grid.count {
        return Err(ModelError::Dimension(format!(
            "{} data points for a grid of {}",
            data.len(),
            grid.count
        )));
    }
    let modes = candidate.modes();
    Ok(data
        .iter()
        .enumerate()
        .map(|(k, d)| exp_sum(&modes, &grid.delta, k) - d)
        .collect())
}

/// Partial derivatives of the residual: column `2n` is `d/dy_n`, column
/// `2n + 1` is `d/dlambda_n`.
pub fn jacobian<R: Real>(candidate: &CandidateParameters<R>, grid: &SampleGrid<R>) -> Matrix<R> {
    let n1 = candidate.len();
    let mut j = Matrix::zeros(grid.count, 2 * n1);
    for k in 0..grid.count {
        let t = R::from_usize(k) * &grid.delta;
        for n in 0..n1 {
            let e = (-(candidate.rate(n).clone() * &t)).exp();
            j[(k, 2 * n + 1)] = -(t.clone() * candidate.amplitude(n) * &e);
            j[(k, 2 * n)] = e;
        }
    }
    j
}

/// Root of the residual reached from the true parameters.
#[derive(Clone, Debug)]
pub struct EpsApproximation<R> {
    pub parameters: CandidateParameters<R>,
    /// Sum of Newton steps, `P^(eps) - P`, accumulated without cancellation.
    pub displacement: CandidateParameters<R>,
    pub steps: usize,
    pub residual_norm: R,
}

const NEWTON_MAX_STEPS: usize = 50;
const NEWTON_MAX_INCREASES: usize = 5;

/// `F(P + s; eps)` expanded around the true main terms,
/// `sum_n [y_n phi_n^k expm1(-s_lambda_n t_k) + s_y_n phi_n^k exp(-s_lambda_n t_k)] - eps tail_k`,
/// so that the tiny displacements of well-conditioned modes are resolved to
/// full relative precision instead of being absorbed into `lambda_n`.
fn displaced_residual<R: Real>(
    model: &ExponentialModel<R>,
    shift: &[R],
    grid: &SampleGrid<R>,
    tail: &[R],
) -> Vec<R> {
    (0..grid.count)
        .map(|k| {
            let t = R::from_usize(k) * &grid.delta;
            let main = model
                .main
                .iter()
                .enumerate()
                .fold(R::zero(), |acc, (n, m)| {
                    let base = (-(m.rate.clone() * &t)).exp();
                    let arg = -(shift[2 * n + 1].clone() * &t);
                    acc + (m.amplitude.clone() * arg.exp_m1() + shift[2 * n].clone() * arg.exp())
                        * base
                });
            main - model.epsilon.clone() * &tail[k]
        })
        .collect()
}

fn shifted<R: Real>(model: &ExponentialModel<R>, shift: &[R]) -> CandidateParameters<R> {
    let mut p = model.true_parameters();
    for (v, s) in p.values.iter_mut().zip(shift) {
        *v += s;
    }
    p
}

/// Newton iteration on `F(P^; eps) = 0` from the true main parameters, on the
/// minimal grid of `2 N1` samples. The iterate is carried as its displacement
/// from the true parameters; one polishing step follows convergence.
pub fn solve_eps_approximation<R: Real>(
    model: &ExponentialModel<R>,
    delta: &R,
) -> Result<EpsApproximation<R>, ModelError> {
    let grid = SampleGrid::minimal(model, delta.clone())?;
    let synthesis = synthesize(model, &grid);
    let tol = R::precision_floor(6) * max_abs(&synthesis.total);
    let newton_step = |shift: &[R], f: Vec<R>| -> Result<Vec<R>, ModelError> {
        let j = jacobian(&shifted(model, shift), &grid);
        let rhs: Vec<R> = f.into_iter().map(|x| -x).collect();
        let s = solve_linear(&j, &rhs)?;
        Ok(shift.iter().zip(s).map(|(a, b)| a.clone() + b).collect())
    };
    let mut shift = vec![R::zero(); 2 * model.n1()];
    let mut previous: Option<R> = None;
    let mut increases = 0;
    for step in 0..=NEWTON_MAX_STEPS {
        let f = displaced_residual(model, &shift, &grid, &synthesis.tail);
        let norm = max_abs(&f);
        let diverged = |steps| ModelError::NewtonDiverged {
            steps,
            residual: norm.to_f64(),
        };
        if !norm.is_finite() {
            return Err(diverged(step));
        }
        if norm <= tol {
            let mut residual_norm = norm.clone();
            if !norm.is_zero() {
                let polished = newton_step(&shift, f)?;
                let polished_norm = max_abs(&displaced_residual(
                    model,
                    &polished,
                    &grid,
                    &synthesis.tail,
                ));
                if polished_norm <= norm {
                    shift = polished;
                    residual_norm = polished_norm;
                }
            }
            let parameters = shifted(model, &shift);
            if !parameters.rates_increasing() {
                return Err(diverged(step));
            }
            return Ok(EpsApproximation {
                parameters,
                displacement: CandidateParameters { values: shift },
                steps: step,
                residual_norm,
            });
        }
        if let Some(prev) = &previous {
            if norm > *prev {
                increases += 1;
                if increases >= NEWTON_MAX_INCREASES {
                    return Err(diverged(step));
                }
            } else {
                increases = 0;
            }
        }
        if step == NEWTON_MAX_STEPS {
            return Err(diverged(step));
        }
        previous = Some(norm);
        shift = newton_step(&shift, f)?;
    }
    unreachable!("loop returns on its last step")
}
