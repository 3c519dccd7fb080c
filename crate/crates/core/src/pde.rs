//! Method-of-lines simulation of `z_t = (p z_x)_x + q z` on `(0, 1)` with
//! Dirichlet ends, non-local measurements `y(t) = int c(x) z(x, t) dx`, and
//! the end-to-end identification pipeline: simulate, measure, subsample,
//! ESPRIT, mode recovery and a `(p, q)` regression.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::esprit::{esprit_fit, index_match, EspritError, FitConfig};
use crate::numkernel::{least_squares, symmetric_eigen, Matrix, NumError, Real};
use crate::spectral::{analytic_spectrum, fd_spectrum, SpectralError, SturmLiouvilleProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("filter coefficient {index} is zero")]
    ZeroFilterCoefficient { index: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Esprit(#[from] EspritError),
    #[error(transparent)]
    Numerical(#[from] NumError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn as_usize(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PdeConfig<R> {
    pub problem: SturmLiouvilleProblem<R>,
    /// Interior grid points.
    pub nx: usize,
    pub order: StencilOrder,
    pub horizon: R,
    /// `z_n(0)` in the eigenbasis of the discrete operator, `n = 1, 2, ...`.
    pub initial_modes: Vec<R>,
}

/// `z_n(0) = (-1)^(n+1) / (sqrt(2) n^3)`.
pub fn reference_initial_modes<R: Real>(count: usize) -> Vec<R> {
    let sqrt2 = R::from_i64(2).sqrt();
    (1..=count)
        .map(|n| {
            let v = R::one() / (sqrt2.clone() * R::from_usize(n).powi(3));
            if n % 2 == 1 {
                v
            } else {
                -v
            }
        })
        .collect()
}

impl<R: Real> PdeConfig<R> {
    /// `p = q = 0.1`, 60 interior points, fourth order, `T = 2` and the
    /// reference initial condition in every resolved mode.
    pub fn reference() -> Self {
        let tenth = R::parse_decimal("0.1").expect("literal");
        let nx = 60;
        PdeConfig {
            problem: SturmLiouvilleProblem::constant(tenth.clone(), tenth)
                .expect("valid constants"),
            nx,
            order: StencilOrder::Fourth,
            horizon: R::from_i64(2),
            initial_modes: reference_initial_modes(nx),
        }
    }

    fn validate(&self) -> Result<(), PdeError> {
        if self.nx < 5 {
            return Err(PdeError::InvalidConfig(format!(
                "nx = {} is below 5",
                self.nx
            )));
        }
        if self.horizon <= R::zero() {
            return Err(PdeError::InvalidConfig(
                "time horizon must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> R {
        R::one() / R::from_usize(self.nx + 1)
    }
}

/// Solution on the grid `x_j = j h`, `j = 0..=nx+1`, as a discrete modal
/// expansion that is exact in time.
#[derive(Clone, Debug)]
pub struct Field<R> {
    /// Includes both boundary points.
    pub grid: Vec<R>,
    /// Decay rates of the discrete operator, ascending.
    pub rates: Vec<R>,
    /// Discrete eigenfunctions on the full grid (zero at both ends),
    /// normalised to `h sum v^2 = 1` with a positive first interior sample.
    pub modes: Vec<Vec<R>>,
    /// Modal coefficients of the initial condition.
    pub coefficients: Vec<R>,
    /// Stencil actually used.
    pub order: StencilOrder,
    pub horizon: R,
}

impl<R: Real> Field<R> {
    pub fn spacing(&self) -> R {
        self.grid[1].clone() - &self.grid[0]
    }

    pub fn at(&self, t: &R) -> Vec<R> {
        let mut z = vec![R::zero(); self.grid.len()];
        for ((rate, mode), a) in self.rates.iter().zip(&self.modes).zip(&self.coefficients) {
            if a.is_zero() {
                continue;
            }
            let w = (-(rate.clone() * t)).exp() * a;
            for (zj, vj) in z.iter_mut().zip(mode) {
                *zj += &(w.clone() * vj);
            }
        }
        z
    }

    pub fn snapshots(&self, times: &[R]) -> Vec<Vec<R>> {
        times.iter().map(|t| self.at(t)).collect()
    }

    /// Discrete `L^2` norm by the trapezoid rule.
    pub fn norm(&self, t: &R) -> R {
        let z = self.at(t);
        (z.iter().fold(R::zero(), |s, v| s + v.clone() * v) * self.spacing()).sqrt()
    }
}

/// Interior operator `-(p z_x)_x - q z` as a dense matrix.
fn operator_matrix<R: Real>(cfg: &PdeConfig<R>, order: StencilOrder) -> Matrix<R> {
    let n = cfg.nx;
    let h = cfg.spacing();
    let h2 = h.clone() * &h;
    let x = |j: usize| R::from_usize(j) * &h;
    let prob = &cfg.problem;
    let mut a = Matrix::zeros(n, n);
    match order {
        StencilOrder::Second => {
            let half = R::one() / R::from_i64(2);
            let p_mid: Vec<R> = (0..=n)
                .map(|j| prob.p.eval(&((R::from_usize(j) + &half) * &h)))
                .collect();
            for i in 0..n {
                a[(i, i)] = (p_mid[i].clone() + &p_mid[i + 1]) / &h2 - prob.q.eval(&x(i + 1));
                if i + 1 < n {
                    let off = -(p_mid[i + 1].clone() / &h2);
                    a[(i, i + 1)] = off.clone();
                    a[(i + 1, i)] = off;
                }
            }
        }
        StencilOrder::Fourth => {
            // p z_xx + p' z_x with five-point stencils; z_{-1} = -z_1 and
            // z_{nx+2} = -z_{nx} by odd reflection through the Dirichlet ends.
            let twelve = R::from_i64(12);
            let d = h.clone() / R::from_i64(4);
            let second = [-1i64, 16, -30, 16, -1];
            let first = [1i64, -8, 0, 8, -1];
            for i in 0..n {
                let j = i + 1;
                let xj = x(j);
                let pj = prob.p.eval(&xj);
                let dp = if prob.p.is_constant() {
                    R::zero()
                } else {
                    let pe = |k: i64| prob.p.eval(&(xj.clone() + R::from_i64(k) * &d));
                    (pe(-2) - pe(-1) * R::from_i64(8) + pe(1) * R::from_i64(8) - pe(2))
                        / (twelve.clone() * &d)
                };
                for (s, (&c2, &c1)) in second.iter().zip(&first).enumerate() {
                    let coef = pj.clone() * R::from_i64(c2) / (twelve.clone() * &h2)
                        + dp.clone() * R::from_i64(c1) / (twelve.clone() * &h);
                    let k = j as i64 + s as i64 - 2;
                    let (col, sign) = if k < 1 {
                        (-k, -1)
                    } else if k > n as i64 {
                        (2 * (n as i64 + 1) - k, -1)
                    } else {
                        (k, 1)
                    };
                    if col < 1 || col > n as i64 {
                        continue;
                    }
                    let v = -(coef * R::from_i64(sign));
                    a[(i, col as usize - 1)] += &v;
                }
                a[(i, i)] -= &prob.q.eval(&xj);
            }
        }
    }
    a
}

fn is_symmetric<R: Real>(a: &Matrix<R>) -> bool {
    let tol = R::precision_floor(8) * a.max_abs();
    (0..a.rows()).all(|i| (0..i).all(|j| (a[(i, j)].clone() - &a[(j, i)]).abs() <= tol))
}

/// Builds the discrete operator, falls back to the second-order conservative
/// stencil when the fourth-order one is not symmetric, and diagonalises it.
pub fn simulate<R: Real>(cfg: &PdeConfig<R>) -> Result<Field<R>, PdeError> {
    cfg.validate()?;
    let mut order = cfg.order;
    let mut a = operator_matrix(cfg, order);
    if !is_symmetric(&a) {
        log::warn!("fourth-order stencil is not symmetric for this p(x); using second order");
        order = StencilOrder::Second;
        a = operator_matrix(cfg, order);
    }
    if cfg.initial_modes.len() > cfg.nx {
        log::warn!(
            "initial condition has {} modes, grid resolves {}; truncating",
            cfg.initial_modes.len(),
            cfg.nx
        );
    }
    let n = cfg.nx;
    let eig = symmetric_eigen(&a, n)?;
    let h = cfg.spacing();
    let scale = R::one() / h.sqrt();
    let modes = (0..n)
        .map(|c| {
            let mut v = Vec::with_capacity(n + 2);
            v.push(R::zero());
            v.extend((0..n).map(|i| eig.vectors[(i, c)].clone() * &scale));
            v.push(R::zero());
            if v[1] < R::zero() {
                v.iter_mut().for_each(|x| *x = -x.clone());
            }
            v
        })
        .collect();
    let coefficients = (0..n)
        .map(|k| cfg.initial_modes.get(k).cloned().unwrap_or_else(R::zero))
        .collect();
    Ok(Field {
        grid: (0..n + 2).map(|j| R::from_usize(j) * &h).collect(),
        rates: eig.values,
        modes,
        coefficients,
        order,
        horizon: cfg.horizon.clone(),
    })
}

/// Composite Simpson weights on `intervals` equal steps, with the 3/8 rule
/// on the last three intervals when the count is odd.
pub fn simpson_weights<R: Real>(intervals: usize, h: &R) -> Vec<R> {
    let mut w = vec![R::zero(); intervals + 1];
    if intervals == 1 {
        w[0] = h.clone() / R::from_i64(2);
        w[1] = w[0].clone();
        return w;
    }
    let simpson = if intervals % 2 == 0 {
        intervals
    } else {
        intervals - 3
    };
    let third = h.clone() / R::from_i64(3);
    for i in (0..simpson).step_by(2) {
        w[i] += &third;
        w[i + 1] += &(third.clone() * R::from_i64(4));
        w[i + 2] += &third;
    }
    if simpson < intervals {
        let eighth = h.clone() * R::from_i64(3) / R::from_i64(8);
        for (k, c) in [1i64, 3, 3, 1].into_iter().enumerate() {
            w[simpson + k] += &(eighth.clone() * R::from_i64(c));
        }
    }
    w
}

/// Filter `c = sum_{n <= N1} c_n psi_n + eps sum_{tail} c_n psi_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFilter<R> {
    /// `c_n` for `n = 1..=N1+N2`.
    pub coefficients: Vec<R>,
    pub n1: usize,
    pub epsilon: R,
}

impl<R: Real> MeasurementFilter<R> {
    pub fn new(coefficients: Vec<R>, n1: usize, epsilon: R) -> Result<Self, PdeError> {
        if n1 == 0 || n1 > coefficients.len() {
            return Err(PdeError::InvalidConfig(format!(
                "N1 = {n1} with {} filter coefficients",
                coefficients.len()
            )));
        }
        if epsilon < R::zero() {
            return Err(PdeError::InvalidConfig(
                "epsilon must be non-negative".into(),
            ));
        }
        if let Some(index) = coefficients[..n1].iter().position(R::is_zero) {
            return Err(PdeError::ZeroFilterCoefficient { index });
        }
        Ok(MeasurementFilter {
            coefficients,
            n1,
            epsilon,
        })
    }

    /// `c_n` drawn uniformly from `[1, 2)` by a ChaCha8 generator.
    pub fn seeded(n1: usize, n2: usize, epsilon: R, seed: u64) -> Result<Self, PdeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..n1 + n2)
            .map(|_| R::from_f64(rng.gen_range(1.0..2.0)))
            .collect();
        Self::new(coefficients, n1, epsilon)
    }

    pub fn n2(&self) -> usize {
        self.coefficients.len() - self.n1
    }

    /// Weight of mode `n` (zero-based) in `c(x)`.
    pub fn weight(&self, n: usize) -> R {
        match self.coefficients.get(n) {
            Some(c) if n < self.n1 => c.clone(),
            Some(c) => c.clone() * &self.epsilon,
            None => R::zero(),
        }
    }

    /// `c(x_j)` on the field grid.
    pub fn sample(&self, field: &Field<R>) -> Vec<R> {
        let mut c = vec![R::zero(); field.grid.len()];
        for (n, mode) in field.modes.iter().enumerate().take(self.coefficients.len()) {
            let w = self.weight(n);
            for (cj, vj) in c.iter_mut().zip(mode) {
                *cj += &(w.clone() * vj);
            }
        }
        c
    }
}

/// `y(t) = int_0^1 c(x) z(x, t) dx` by composite Simpson on the grid.
pub fn measure<R: Real>(field: &Field<R>, filter: &MeasurementFilter<R>, times: &[R]) -> Vec<R> {
    let c = filter.sample(field);
    let weights = simpson_weights(field.grid.len() - 1, &field.spacing());
    // The quadrature is linear in z, so integrate each mode once.
    let projections: Vec<R> = field
        .modes
        .iter()
        .zip(&field.coefficients)
        .map(|(v, a)| {
            let q = v
                .iter()
                .zip(&c)
                .zip(&weights)
                .fold(R::zero(), |s, ((vj, cj), wj)| s + vj.clone() * cj * wj);
            q * a
        })
        .collect();
    times
        .iter()
        .map(|t| {
            field
                .rates
                .iter()
                .zip(&projections)
                .filter(|(_, b)| !b.is_zero())
                .fold(R::zero(), |s, (mu, b)| s + (-(mu.clone() * t)).exp() * b)
        })
        .collect()
}

/// `z_n(0) = y_n / c_n` for the first `n0` matched amplitudes.
pub fn recover_modes<R: Real>(
    amplitudes: &[R],
    filter: &MeasurementFilter<R>,
    n0: usize,
) -> Result<Vec<R>, PdeError> {
    if n0 > filter.n1 || n0 > amplitudes.len() {
        return Err(PdeError::InvalidConfig(format!(
            "cannot recover {n0} modes from {} amplitudes with N1 = {}",
            amplitudes.len(),
            filter.n1
        )));
    }
    (0..n0)
        .map(|n| {
            let c = &filter.coefficients[n];
            if c.is_zero() {
                Err(PdeError::ZeroFilterCoefficient { index: n })
            } else {
                Ok(amplitudes[n].clone() / c)
            }
        })
        .collect()
}

/// Least-squares `(p, q)` from `lambda_n = pi^2 n^2 p - q`, `n = 1..`.
pub fn fit_pq<R: Real>(rates: &[R]) -> Result<(R, R), PdeError> {
    if rates.len() < 2 {
        return Err(PdeError::InvalidConfig(
            "fit_pq needs at least two rates".into(),
        ));
    }
    let pi2 = R::pi() * R::pi();
    let design = Matrix::from_fn(rates.len(), 2, |i, j| {
        if j == 0 {
            pi2.clone() * R::from_usize((i + 1) * (i + 1))
        } else {
            -R::one()
        }
    });
    let sol = least_squares(&design, rates)?;
    Ok((sol[0].clone(), sol[1].clone()))
}

/// Every `stride`-th sample starting at 0, `2 N1` of them.
pub fn subsample<R: Real>(samples: &[R], stride: usize, n1: usize) -> Option<Vec<R>> {
    if stride == 0 || (2 * n1 - 1) * stride >= samples.len() {
        return None;
    }
    Some((0..2 * n1).map(|k| samples[k * stride].clone()).collect())
}

#[derive(Clone, Debug)]
pub struct PipelineConfig<R> {
    pub pde: PdeConfig<R>,
    pub n1: usize,
    pub n2: usize,
    pub epsilon: R,
    /// Equispaced samples on `[0, T]`.
    pub samples: usize,
    pub seed: u64,
    /// Subsampling strides; the step is `stride * T / (samples - 1)`.
    pub strides: Vec<usize>,
}

impl<R: Real> PipelineConfig<R> {
    /// The reference experiment: `N1 = 4`, `N2 = 2`, `eps = 1e-4`, 1025
    /// samples on `[0, 2]`, every stride that fits a `2 N1` window.
    pub fn reference(seed: u64) -> Self {
        let n1 = 4;
        let samples = 1025;
        PipelineConfig {
            pde: PdeConfig::reference(),
            n1,
            n2: 2,
            epsilon: R::parse_decimal("1e-4").expect("literal"),
            samples,
            seed,
            strides: (1..=max_stride(samples, n1)).collect(),
        }
    }

    pub fn sample_step(&self) -> R {
        self.pde.horizon.clone() / R::from_usize(self.samples - 1)
    }
}

/// Largest stride whose `2 N1` window fits in `samples` points.
pub fn max_stride(samples: usize, n1: usize) -> usize {
    (samples - 1) / (2 * n1 - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineFit<R> {
    /// Matched to the true rates, ascending.
    pub rates: Vec<R>,
    pub amplitudes: Vec<R>,
    pub relative_errors: Vec<R>,
    pub modes: Vec<R>,
    pub p_hat: R,
    pub q_hat: R,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelinePoint<R> {
    pub stride: usize,
    pub delta: R,
    pub outcome: Result<PipelineFit<R>, PdeError>,
}

#[derive(Clone, Debug)]
pub struct PipelineResult<R> {
    pub filter: MeasurementFilter<R>,
    /// Reference rates the fits are scored against.
    pub true_rates: Vec<R>,
    pub times: Vec<R>,
    pub measurements: Vec<R>,
    pub stencil: StencilOrder,
    pub points: Vec<PipelinePoint<R>>,
}

impl<R: Real> PipelineResult<R> {
    /// Successful point with the smallest relative error in mode `n`.
    pub fn best(&self, n: usize) -> Option<(&PipelinePoint<R>, &PipelineFit<R>)> {
        self.points
            .iter()
            .filter_map(|p| p.outcome.as_ref().ok().map(|f| (p, f)))
            .min_by(|a, b| {
                a.1.relative_errors[n]
                    .partial_cmp(&b.1.relative_errors[n])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }

    /// `(stride, relative error)` of mode `n` over the successful points.
    pub fn error_curve(&self, n: usize) -> Vec<(usize, R)> {
        self.points
            .iter()
            .filter_map(|p| {
                p.outcome
                    .as_ref()
                    .ok()
                    .map(|f| (p.stride, f.relative_errors[n].clone()))
            })
            .collect()
    }
}

/// Reference eigenvalues: closed form for constant coefficients, otherwise a
/// fine three-point discretization.
fn reference_rates<R: Real>(
    problem: &SturmLiouvilleProblem<R>,
    n1: usize,
) -> Result<Vec<R>, PdeError> {
    use crate::spectral::Coefficient;
    if let (Coefficient::Constant(p), Coefficient::Constant(q)) = (&problem.p, &problem.q) {
        return Ok(analytic_spectrum(p, q, n1, 1).eigenvalues);
    }
    Ok(fd_spectrum(problem, 2047, n1)?.eigenvalues)
}

fn fit_point<R: Real>(
    samples: &[R],
    delta: &R,
    cfg: &PipelineConfig<R>,
    filter: &MeasurementFilter<R>,
    truth: &[R],
) -> Result<PipelineFit<R>, PdeError> {
    let fit = esprit_fit(samples, &FitConfig::new(cfg.n1, delta.clone()))?;
    let perm = index_match(&fit.rates, truth)?;
    let rates: Vec<R> = perm.iter().map(|&e| fit.rates[e].clone()).collect();
    let amplitudes: Vec<R> = perm.iter().map(|&e| fit.amplitudes[e].clone()).collect();
    let relative_errors = rates
        .iter()
        .zip(truth)
        .map(|(r, t)| (r.clone() - t).abs() / t.abs())
        .collect();
    let modes = recover_modes(&amplitudes, filter, cfg.n1)?;
    let (p_hat, q_hat) = fit_pq(&rates)?;
    Ok(PipelineFit {
        rates,
        amplitudes,
        relative_errors,
        modes,
        p_hat,
        q_hat,
    })
}

/// Runs the full identification experiment, fitting every stride in parallel.
pub fn run_pipeline<R: Real>(cfg: &PipelineConfig<R>) -> Result<PipelineResult<R>, PdeError> {
    if cfg.n1 < 2 {
        return Err(PdeError::InvalidConfig("the pipeline needs N1 >= 2".into()));
    }
    if cfg.samples < 2 * cfg.n1 {
        return Err(PdeError::InvalidConfig(format!(
            "{} samples cannot hold a window of {}",
            cfg.samples,
            2 * cfg.n1
        )));
    }
    if cfg.n1 + cfg.n2 > cfg.pde.nx {
        return Err(PdeError::InvalidConfig(format!(
            "N1 + N2 = {} exceeds the {} resolved modes",
            cfg.n1 + cfg.n2,
            cfg.pde.nx
        )));
    }
    let field = simulate(&cfg.pde)?;
    let filter = MeasurementFilter::seeded(cfg.n1, cfg.n2, cfg.epsilon.clone(), cfg.seed)?;
    let step = cfg.sample_step();
    let times: Vec<R> = (0..cfg.samples).map(|k| R::from_usize(k) * &step).collect();
    let measurements = measure(&field, &filter, &times);
    let truth = reference_rates(&cfg.pde.problem, cfg.n1)?;
    let points = cfg
        .strides
        .par_iter()
        .map(|&stride| {
            let delta = R::from_usize(stride) * &step;
            let outcome = match subsample(&measurements, stride, cfg.n1) {
                Some(s) => fit_point(&s, &delta, cfg, &filter, &truth),
                None => Err(PdeError::InvalidConfig(format!(
                    "stride {stride} exceeds the record"
                ))),
            };
            PipelinePoint {
                stride,
                delta,
                outcome,
            }
        })
        .collect();
    Ok(PipelineResult {
        filter,
        true_rates: truth,
        times,
        measurements,
        stencil: field.order,
        points,
    })
}

/// Index of the minimum of `values` when it lies strictly inside the curve,
/// i.e. the discrete slope changes sign from negative to positive there.
pub fn interior_minimum(values: &[f64]) -> Option<usize> {
    let (idx, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))?;
    (idx > 0 && idx + 1 < values.len()).then_some(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_mode_config(nx: usize) -> PdeConfig<f64> {
        let mut cfg = PdeConfig::<f64>::reference();
        cfg.nx = nx;
        cfg.initial_modes = vec![1.0];
        cfg
    }

    #[test]
    fn single_mode_decays_at_lambda1() {
        let field = simulate(&single_mode_config(60)).unwrap();
        assert_eq!(field.order, StencilOrder::Fourth);
        let lambda1 = std::f64::consts::PI.powi(2) * 0.1 - 0.1;
        assert!((field.rates[0] - lambda1).abs() / lambda1 < 1e-6);
        let t = 1.5;
        let z = field.at(&t);
        for (x, zj) in field.grid.iter().zip(&z) {
            let exact = (-lambda1 * t).exp() * 2f64.sqrt() * (std::f64::consts::PI * x).sin();
            assert!((zj - exact).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_initial_condition() {
        let mut cfg = single_mode_config(20);
        cfg.initial_modes = vec![0.0; 5];
        let field = simulate(&cfg).unwrap();
        assert!(field.at(&1.0).iter().all(|z| *z == 0.0));
        let filter = MeasurementFilter::new(vec![1.0, 1.0], 2, 0.0).unwrap();
        assert!(measure(&field, &filter, &[0.0, 1.0])
            .iter()
            .all(|y| *y == 0.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn reference_first_mode() {
        let z = reference_initial_modes::<f64>(3);
        assert!((z[0] - 0.70711).abs() < 1e-5);
        assert!((z[1] + 1.0 / (2f64.sqrt() * 8.0)).abs() < 1e-15);
    }

    #[test]
    fn filter_on_first_mode() {
        let field = simulate(&single_mode_config(60)).unwrap();
        let filter = MeasurementFilter::new(vec![1.0], 1, 0.0).unwrap();
        let times = [0.0, 0.5, 2.0];
        let y = measure(&field, &filter, &times);
        let lambda1 = std::f64::consts::PI.powi(2) * 0.1 - 0.1;
        for (t, yt) in times.iter().zip(&y) {
            assert!((yt - (-lambda1 * t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn simpson_integrates_cubics() {
        for intervals in [1usize, 2, 3, 5, 6, 61] {
            let h = 1.0 / intervals as f64;
            let w = simpson_weights(intervals, &h);
            let f = |x: f64| {
                if intervals == 1 {
                    2.0 * x + 1.0
                } else {
                    x.powi(3) - x + 2.0
                }
            };
            let exact = if intervals == 1 {
                2.0
            } else {
                0.25 - 0.5 + 2.0
            };
            let got: f64 = w
                .iter()
                .enumerate()
                .map(|(j, wj)| wj * f(j as f64 * h))
                .sum();
            assert!((got - exact).abs() < 1e-13, "{intervals}: {got}");
        }
    }

    #[test]
    fn mode_recovery() {
        let filter = MeasurementFilter::new(vec![2.0, 4.0], 2, 0.0).unwrap();
        let z = recover_modes(&[1.0, -1.0], &filter, 2).unwrap();
        assert_eq!(z, vec![0.5, -0.25]);
        let ones = MeasurementFilter::new(vec![1.0, 1.0], 2, 0.0).unwrap();
        assert_eq!(
            recover_modes(&[3.0, 5.0], &ones, 2).unwrap(),
            vec![3.0, 5.0]
        );
        assert!(matches!(
            MeasurementFilter::new(vec![1.0, 0.0], 2, 0.0),
            Err(PdeError::ZeroFilterCoefficient { index: 1 })
        ));
    }

    #[test]
    fn pq_regression() {
        let pi2 = std::f64::consts::PI.powi(2);
        let exact: Vec<f64> = (1..=4).map(|n| pi2 * (n * n) as f64 * 0.1 - 0.1).collect();
        let (p, q) = fit_pq(&exact).unwrap();
        assert!((p - 0.1).abs() < 1e-13 && (q - 0.1).abs() < 1e-13);
        let lap: Vec<f64> = (1..=3).map(|n| pi2 * (n * n) as f64).collect();
        let (p, q) = fit_pq(&lap).unwrap();
        assert!((p - 1.0).abs() < 1e-13 && q.abs() < 1e-12);
        let biased: Vec<f64> = exact.iter().map(|l| l + 0.3).collect();
        let (p, q) = fit_pq(&biased).unwrap();
        assert!((p - 0.1).abs() < 1e-13 && (q - (0.1 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn variable_p_falls_back_to_second_order() {
        use crate::spectral::Coefficient;
        use std::sync::Arc;
        let problem = SturmLiouvilleProblem::new(
            Coefficient::Function(Arc::new(|x: &f64| x.exp())),
            Coefficient::Constant(0.0),
            (1.0, 1f64.exp()),
            (0.0, 0.0),
        )
        .unwrap();
        let cfg = PdeConfig {
            problem,
            nx: 30,
            order: StencilOrder::Fourth,
            horizon: 1.0,
            initial_modes: vec![1.0],
        };
        assert_eq!(simulate(&cfg).unwrap().order, StencilOrder::Second);
    }

    #[test]
    fn interior_minimum_detection() {
        assert_eq!(interior_minimum(&[3.0, 1.0, 2.0]), Some(1));
        assert_eq!(interior_minimum(&[3.0, 2.0, 1.0]), None);
        assert_eq!(interior_minimum(&[]), None);
    }
}
