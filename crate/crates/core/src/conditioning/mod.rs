//! First-order condition numbers of the exponential fit.
//!
//! `K_y(n)` and `K_lambda(n)` are the derivatives of the recovered amplitude
//! and rate with respect to the tail weight at zero. They are computed two
//! independent ways: from the Hermite basis evaluated at the first tail node,
//! and by solving the Jacobian system of the residual. Where the two agree
//! and the Jacobian is not hopelessly conditioned, the point is reliable.

mod bounds;

pub use bounds::{
    bound_diagnostics, j_integral, lagrange_bound_constant, theta_bounds, BoundDiagnostics,
    ThetaBounds,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::expmodel::{jacobian, ExponentialModel, SampleGrid};
use crate::interpolation::{InterpolationError, NodeSet};
use crate::numkernel::{least_squares, Lu, Matrix, NumError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("the closed form covers a single tail term, the model has {0}")]
    UnsupportedTail(usize),
    #[error("the model has no tail term")]
    NoTail,
    #[error("nodes collide numerically: {0}")]
    DuplicateNodes(#[from] InterpolationError),
    #[error("Jacobian is singular to working precision")]
    SingularJacobian,
    #[error("envelope fit needs at least {need} points, got {got}")]
    InsufficientData { got: usize, need: usize },
    #[error("invalid argument: {0}")]
    Domain(String),
    #[error(transparent)]
    Numerical(NumError),
}

impl From<NumError> for ConditionError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::SingularMatrix { .. } => ConditionError::SingularJacobian,
            other => ConditionError::Numerical(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    ClosedForm,
    LinearSolve,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::ClosedForm => "closed-form",
            Route::LinearSolve => "linear-solve",
        }
    }
}

/// Condition numbers for modes `1..=N1` at one sampling step.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport<R> {
    pub delta: R,
    pub n1: usize,
    pub n2: usize,
    pub digits: u32,
    pub route: Route,
    /// `k_y[n - 1]` is `K_y(n)`.
    pub k_y: Vec<R>,
    pub k_lambda: Vec<R>,
    /// `||J||_1 ||J^-1||_1`, only for the linear-solve route.
    pub jacobian_condition: Option<R>,
}

fn single_tail<R: Real>(model: &ExponentialModel<R>) -> Result<(), ConditionError> {
    match model.n2() {
        0 => Err(ConditionError::NoTail),
        1 => Ok(()),
        k => Err(ConditionError::UnsupportedTail(k)),
    }
}

/// `K_y(n) = y_{N1+1} H_n(phi_{N1+1})`,
/// `K_lambda(n) = -y_{N1+1} H~_n(phi_{N1+1}) / (Delta y_n phi_n)`.
pub fn condition_closed_form<R: Real>(
    model: &ExponentialModel<R>,
    delta: &R,
) -> Result<ConditionReport<R>, ConditionError> {
    single_tail(model)?;
    let n1 = model.n1();
    let phi = model.nodes_for(delta);
    let nodes = NodeSet::new(phi[..n1].to_vec())?;
    let zeta = &phi[n1];
    let y_tail = &model.tail()[0].amplitude;
    let mut k_y = Vec::with_capacity(n1);
    let mut k_lambda = Vec::with_capacity(n1);
    for n in 0..n1 {
        let (h, ht) = nodes.hermite_values(n, zeta)?;
        k_y.push(y_tail.clone() * h);
        let denom = delta.clone() * &model.main()[n].amplitude * &phi[n];
        k_lambda.push(-(y_tail.clone() * ht) / denom);
    }
    Ok(ConditionReport {
        delta: delta.clone(),
        n1,
        n2: 1,
        digits: R::DIGITS,
        route: Route::ClosedForm,
        k_y,
        k_lambda,
        jacobian_condition: None,
    })
}

/// Solves `J(P, 0) kappa = sum_m y_m (phi_m^k)_k` over all tail terms.
pub fn condition_linear_solve<R: Real>(
    model: &ExponentialModel<R>,
    delta: &R,
) -> Result<ConditionReport<R>, ConditionError> {
    if model.n2() == 0 {
        return Err(ConditionError::NoTail);
    }
    let n1 = model.n1();
    let grid = SampleGrid::minimal(model, delta.clone())
        .map_err(|e| ConditionError::Domain(e.to_string()))?;
    let j = jacobian(&model.true_parameters(), &grid);
    let tail_nodes = &model.nodes_for(delta)[n1..];
    let rhs: Vec<R> = (0..grid.count())
        .map(|k| {
            model
                .tail()
                .iter()
                .zip(tail_nodes)
                .fold(R::zero(), |s, (m, phi)| {
                    s + m.amplitude.clone() * phi.powi(k as i32)
                })
        })
        .collect();
    let lu = Lu::factor(&j)?;
    let kappa = lu.solve(&rhs)?;
    let cond = jacobian_condition(&j, &lu)?;
    Ok(ConditionReport {
        delta: delta.clone(),
        n1,
        n2: model.n2(),
        digits: R::DIGITS,
        route: Route::LinearSolve,
        k_y: (0..n1).map(|n| kappa[2 * n].clone()).collect(),
        k_lambda: (0..n1).map(|n| kappa[2 * n + 1].clone()).collect(),
        jacobian_condition: Some(cond),
    })
}

fn jacobian_condition<R: Real>(j: &Matrix<R>, lu: &Lu<R>) -> Result<R, ConditionError> {
    let n = lu.dim();
    let mut inv_norm = R::zero();
    for c in 0..n {
        let mut e = vec![R::zero(); n];
        e[c] = R::one();
        let col = lu.solve(&e)?;
        inv_norm = inv_norm.max(col.iter().fold(R::zero(), |s, x| s + x.abs()));
    }
    Ok(j.norm_one() * inv_norm)
}

/// Largest relative difference between two reports, over both quantities and
/// all modes. Entries that are both zero count as agreeing.
pub fn route_disagreement<R: Real>(a: &ConditionReport<R>, b: &ConditionReport<R>) -> R {
    a.k_y
        .iter()
        .zip(&b.k_y)
        .chain(a.k_lambda.iter().zip(&b.k_lambda))
        .map(|(x, y)| relative_difference(x, y))
        .fold(R::zero(), R::max)
}

pub fn relative_difference<R: Real>(x: &R, y: &R) -> R {
    let scale = x.abs().max(y.abs());
    if scale.is_zero() {
        R::zero()
    } else {
        (x.clone() - y).abs() / scale
    }
}

/// Disagreement above which a sweep point is unreliable.
pub const RELIABILITY_TOLERANCE: f64 = 1e-4;

/// One step of a condition-number sweep with both routes and the verdict.
#[derive(Clone, Debug)]
pub struct SweepPoint<R> {
    pub delta: R,
    pub closed: Result<ConditionReport<R>, ConditionError>,
    pub linear: Result<ConditionReport<R>, ConditionError>,
    pub disagreement: Option<R>,
    pub reliable: bool,
}

impl<R: Real> SweepPoint<R> {
    /// The report to publish: the closed form when available, since its
    /// factored evaluation does not suffer from the Jacobian's conditioning.
    pub fn best(&self) -> Option<&ConditionReport<R>> {
        self.closed.as_ref().ok().or(self.linear.as_ref().ok())
    }
}

/// Flags a point unreliable when the routes disagree by more than
/// [`RELIABILITY_TOLERANCE`] or the Jacobian condition exceeds `10^(D-6)`.
pub fn assess<R: Real>(model: &ExponentialModel<R>, delta: &R) -> SweepPoint<R> {
    let closed = if model.n2() == 1 {
        condition_closed_form(model, delta)
    } else {
        Err(ConditionError::UnsupportedTail(model.n2()))
    };
    let linear = condition_linear_solve(model, delta);
    let cond_limit = R::from_i64(10).powi(R::DIGITS as i32 - 6);
    let cond_ok = match &linear {
        Ok(r) => r
            .jacobian_condition
            .as_ref()
            .is_some_and(|c| *c <= cond_limit),
        Err(_) => false,
    };
    let disagreement = match (&closed, &linear) {
        (Ok(a), Ok(b)) => Some(route_disagreement(a, b)),
        _ => None,
    };
    let agree = match &disagreement {
        Some(d) => *d <= R::from_f64(RELIABILITY_TOLERANCE),
        None => model.n2() != 1 && linear.is_ok(),
    };
    SweepPoint {
        delta: delta.clone(),
        closed,
        linear,
        disagreement,
        reliable: cond_ok && agree,
    }
}

/// [`assess`] over a grid of steps, evaluated in parallel and returned in
/// input order.
pub fn condition_sweep<R: Real>(model: &ExponentialModel<R>, deltas: &[R]) -> Vec<SweepPoint<R>> {
    deltas.par_iter().map(|d| assess(model, d)).collect()
}

/// Decay envelope `|K| ~ zeta exp(-rho Delta) / Delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeFit<R> {
    pub rho: R,
    pub zeta: R,
}

/// Least-squares fit of `log|K| + log Delta = -rho Delta + log zeta`.
pub fn envelope_fit<R: Real>(deltas: &[R], values: &[R]) -> Result<EnvelopeFit<R>, ConditionError> {
    const MIN_POINTS: usize = 5;
    if deltas.len() != values.len() {
        return Err(ConditionError::Domain(format!(
            "{} steps but {} values",
            deltas.len(),
            values.len()
        )));
    }
    if deltas.len() < MIN_POINTS {
        return Err(ConditionError::InsufficientData {
            got: deltas.len(),
            need: MIN_POINTS,
        });
    }
    if values.iter().any(|v| v.is_zero()) || deltas.iter().any(|d| *d <= R::zero()) {
        return Err(ConditionError::Domain(
            "envelope fit needs nonzero values at positive steps".into(),
        ));
    }
    let a = Matrix::from_fn(deltas.len(), 2, |i, j| {
        if j == 0 {
            -deltas[i].clone()
        } else {
            R::one()
        }
    });
    let b: Vec<R> = deltas
        .iter()
        .zip(values)
        .map(|(d, v)| v.abs().ln() + d.ln())
        .collect();
    let x = least_squares(&a, &b)?;
    Ok(EnvelopeFit {
        rho: x[0].clone(),
        zeta: x[1].exp(),
    })
}

/// Which condition number a fit refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Amplitude,
    Rate,
}

/// Envelope fits per mode over a set of reports.
pub fn envelope_fit_reports<R: Real>(
    reports: &[&ConditionReport<R>],
    quantity: Quantity,
) -> Result<Vec<EnvelopeFit<R>>, ConditionError> {
    let n1 = reports.first().map_or(0, |r| r.n1);
    let deltas: Vec<R> = reports.iter().map(|r| r.delta.clone()).collect();
    (0..n1)
        .map(|n| {
            let values: Vec<R> = reports
                .iter()
                .map(|r| match quantity {
                    Quantity::Amplitude => r.k_y[n].clone(),
                    Quantity::Rate => r.k_lambda[n].clone(),
                })
                .collect();
            envelope_fit(&deltas, &values)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Mp32;

    fn model(n1: usize, y_tail: f64) -> ExponentialModel<f64> {
        let rates: Vec<f64> = (1..=n1 + 1).map(|n| (n * n) as f64).collect();
        let mut amps = vec![1.0; n1 + 1];
        amps[n1] = y_tail;
        ExponentialModel::from_lists(&rates, &amps, n1, 0.0).unwrap()
    }

    #[test]
    fn single_mode_closed_form() {
        let r = condition_closed_form(&model(1, 1.0), &1.0).unwrap();
        assert_eq!(r.k_y[0], 1.0);
        let (p1, p2) = ((-1.0f64).exp(), (-4.0f64).exp());
        assert!((r.k_lambda[0] + (p2 - p1) / p1).abs() < 1e-15);
        assert!((r.k_lambda[0] - 0.95021).abs() < 1e-5);
        let z = condition_closed_form(&model(3, 0.0), &1.0).unwrap();
        assert!(z.k_y.iter().chain(&z.k_lambda).all(|x| *x == 0.0));
    }

    #[test]
    fn routes_agree_small() {
        for n1 in 2..=3 {
            let m = model(n1, 1.0);
            for d in [0.2, 0.4, 0.6] {
                let a = condition_closed_form(&m, &d).unwrap();
                let b = condition_linear_solve(&m, &d).unwrap();
                assert!(route_disagreement(&a, &b) < 1e-5, "n1 {n1} delta {d}");
            }
        }
    }

    #[test]
    fn zero_second_tail_term() {
        let one = model(3, 1.0);
        let rates: Vec<f64> = (1..=5).map(|n| (n * n) as f64).collect();
        let two = ExponentialModel::from_lists(&rates, &[1.0, 1.0, 1.0, 1.0, 0.0], 3, 0.0).unwrap();
        let a = condition_linear_solve(&one, &0.5).unwrap();
        let b = condition_linear_solve(&two, &0.5).unwrap();
        assert_eq!(a.k_y, b.k_y);
        assert_eq!(a.k_lambda, b.k_lambda);
        assert!(matches!(
            condition_closed_form(&two, &0.5),
            Err(ConditionError::UnsupportedTail(2))
        ));
    }

    #[test]
    fn high_precision_agreement() {
        let rates: Vec<Mp32> = (1..=5).map(|n| Mp32::from_usize(n * n)).collect();
        let amps = vec![Mp32::one(); 5];
        let m = ExponentialModel::from_lists(&rates, &amps, 4, Mp32::zero()).unwrap();
        let d = Mp32::from_f64(0.5);
        let a = condition_closed_form(&m, &d).unwrap();
        let b = condition_linear_solve(&m, &d).unwrap();
        // The linear route loses roughly cond(J) * u.
        let dis = route_disagreement(&a, &b);
        let cond = b.jacobian_condition.clone().unwrap();
        assert!(dis < Mp32::from_f64(1e-8));
        assert!(dis < cond * Mp32::precision_floor(2));
        let point = assess(&m, &d);
        assert!(point.reliable);
    }

    #[test]
    fn envelope_of_exact_model() {
        let deltas: Vec<f64> = (1..=8).map(|i| 0.5 * i as f64).collect();
        let values: Vec<f64> = deltas.iter().map(|d| 3.0 * (-2.0 * d).exp() / d).collect();
        let fit = envelope_fit(&deltas, &values).unwrap();
        assert!((fit.rho - 2.0).abs() < 1e-6);
        assert!((fit.zeta - 3.0).abs() < 1e-6);
        assert!(matches!(
            envelope_fit(&deltas[..4], &values[..4]),
            Err(ConditionError::InsufficientData { got: 4, need: 5 })
        ));
    }
}
