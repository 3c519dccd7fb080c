//! Reference spectra of `A h = -(p h')' - q h` on `[0, 1]` with Dirichlet
//! ends: closed-form eigenpairs for constant coefficients, a conservative
//! three-point finite-difference eigensolver, and eigenvalue gap constants.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::numkernel::{tridiagonal_eigen, NumError, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("requested {requested} eigenpairs but a grid of {nx} points resolves at most {max}")]
    Resolution {
        requested: usize,
        nx: usize,
        max: usize,
    },
    #[error("coefficient {name} violates its bounds at x = {x}")]
    InvalidCoefficients { name: &'static str, x: f64 },
    #[error("at least two eigenvalues are needed, got {0}")]
    TooFewEigenvalues(usize),
    #[error("eigenvalue {n} = {value} lies outside [{lower}, {upper}]")]
    BoundViolation {
        n: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error(transparent)]
    Numerical(#[from] NumError),
}

/// A coefficient of the operator, either constant or a function of `x`.
#[derive(Clone)]
pub enum Coefficient<R> {
    Constant(R),
    Function(Arc<dyn Fn(&R) -> R + Send + Sync>),
}

impl<R: Real> Coefficient<R> {
    pub fn eval(&self, x: &R) -> R {
        match self {
            Coefficient::Constant(c) => c.clone(),
            Coefficient::Function(f) => f(x),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Coefficient::Constant(_))
    }
}

impl<R: fmt::Debug> fmt::Debug for Coefficient<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c:?})"),
            Coefficient::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Points used to validate coefficient bounds.
const BOUND_SAMPLES: usize = 1000;

#[derive(Clone, Debug)]
pub struct SturmLiouvilleProblem<R> {
    pub p: Coefficient<R>,
    pub q: Coefficient<R>,
    pub p_lower: R,
    pub p_upper: R,
    pub q_lower: R,
    pub q_upper: R,
}

impl<R: Real> SturmLiouvilleProblem<R> {
    /// Validates `0 < p_lower <= p <= p_upper` and `q_lower <= q <= q_upper`
    /// on a uniform grid of 1001 points.
    pub fn new(
        p: Coefficient<R>,
        q: Coefficient<R>,
        (p_lower, p_upper): (R, R),
        (q_lower, q_upper): (R, R),
    ) -> Result<Self, SpectralError> {
        if p_lower <= R::zero() || p_lower > p_upper {
            return Err(SpectralError::InvalidCoefficients { name: "p", x: 0.0 });
        }
        if q_lower > q_upper {
            return Err(SpectralError::InvalidCoefficients { name: "q", x: 0.0 });
        }
        for i in 0..=BOUND_SAMPLES {
            let x = R::from_usize(i) / R::from_usize(BOUND_SAMPLES);
            let pv = p.eval(&x);
            if pv < p_lower || pv > p_upper {
                return Err(SpectralError::InvalidCoefficients {
                    name: "p",
                    x: x.to_f64(),
                });
            }
            let qv = q.eval(&x);
            if qv < q_lower || qv > q_upper {
                return Err(SpectralError::InvalidCoefficients {
                    name: "q",
                    x: x.to_f64(),
                });
            }
        }
        Ok(SturmLiouvilleProblem {
            p,
            q,
            p_lower,
            p_upper,
            q_lower,
            q_upper,
        })
    }

    pub fn constant(p0: R, q0: R) -> Result<Self, SpectralError> {
        Self::new(
            Coefficient::Constant(p0.clone()),
            Coefficient::Constant(q0.clone()),
            (p0.clone(), p0),
            (q0.clone(), q0),
        )
    }

    pub fn is_constant(&self) -> bool {
        self.p.is_constant() && self.q.is_constant()
    }

    /// Rayleigh-quotient bounds `mu p_lower - q_upper <= lambda <= mu p_upper - q_lower`,
    /// where `mu` is the matching eigenvalue of `-d^2/dx^2` for the same
    /// discretization.
    pub fn eigenvalue_bounds(&self, laplacian: &R) -> (R, R) {
        (
            laplacian.clone() * &self.p_lower - &self.q_upper,
            laplacian.clone() * &self.p_upper - &self.q_lower,
        )
    }
}

/// Lowest part of a spectrum with eigenfunctions sampled on the interior grid.
#[derive(Clone, Debug)]
pub struct SpectralData<R> {
    pub eigenvalues: Vec<R>,
    /// `eigenfunctions[n][j]` is `psi_n(grid[j])`, unit norm under the
    /// trapezoid rule with zero boundary values.
    pub eigenfunctions: Vec<Vec<R>>,
    pub grid: Vec<R>,
    /// Eigenvalues of `-d^2/dx^2` under the same discretization, used for
    /// the Rayleigh bounds.
    pub laplacian: Vec<R>,
}

impl<R: Real> SpectralData<R> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Grid spacing `1 / (nx + 1)`.
    pub fn spacing(&self) -> R {
        R::one() / R::from_usize(self.grid.len() + 1)
    }

    /// Trapezoid inner product of two sampled functions that vanish at the ends.
    pub fn inner(&self, a: &[R], b: &[R]) -> R {
        a.iter()
            .zip(b)
            .fold(R::zero(), |s, (x, y)| s + x.clone() * y)
            * self.spacing()
    }
}

pub fn interior_grid<R: Real>(nx: usize) -> Vec<R> {
    let h = R::one() / R::from_usize(nx + 1);
    (1..=nx).map(|j| R::from_usize(j) * &h).collect()
}

/// `lambda_n = pi^2 n^2 p0 - q0`, `psi_n = sqrt(2) sin(n pi x)`.
pub fn analytic_spectrum<R: Real>(p0: &R, q0: &R, k: usize, nx: usize) -> SpectralData<R> {
    let pi = R::pi();
    let grid = interior_grid::<R>(nx);
    let sqrt2 = R::from_i64(2).sqrt();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut laplacian = Vec::with_capacity(k);
    let mut eigenfunctions = Vec::with_capacity(k);
    for n in 1..=k {
        let npi = R::from_usize(n) * &pi;
        let mu = npi.clone() * &npi;
        eigenvalues.push(mu.clone() * p0 - q0);
        laplacian.push(mu);
        eigenfunctions.push(
            grid.iter()
                .map(|x| sqrt2.clone() * (npi.clone() * x).sin())
                .collect(),
        );
    }
    SpectralData {
        eigenvalues,
        eigenfunctions,
        grid,
        laplacian,
    }
}

/// Eigenvalue of the three-point Dirichlet Laplacian, `(4/h^2) sin^2(n pi h / 2)`.
pub fn discrete_laplacian_eigenvalue<R: Real>(n: usize, nx: usize) -> R {
    let h = R::one() / R::from_usize(nx + 1);
    let s = (R::from_usize(n) * R::pi() * &h / R::from_i64(2)).sin();
    R::from_i64(4) * &s * &s / (h.clone() * &h)
}

/// The `k` smallest eigenpairs of the conservative three-point discretization
/// with `p` sampled at cell midpoints.
pub fn fd_spectrum<R: Real>(
    prob: &SturmLiouvilleProblem<R>,
    nx: usize,
    k: usize,
) -> Result<SpectralData<R>, SpectralError> {
    if k > nx / 2 {
        return Err(SpectralError::Resolution {
            requested: k,
            nx,
            max: nx / 2,
        });
    }
    let h = R::one() / R::from_usize(nx + 1);
    let h2 = h.clone() * &h;
    let grid = interior_grid::<R>(nx);
    let half = R::one() / R::from_i64(2);
    // p at x_{j + 1/2}, j = 0..=nx
    let p_mid: Vec<R> = (0..=nx)
        .map(|j| prob.p.eval(&((R::from_usize(j) + &half) * &h)))
        .collect();
    let diag: Vec<R> = (0..nx)
        .map(|i| (p_mid[i].clone() + &p_mid[i + 1]) / &h2 - prob.q.eval(&grid[i]))
        .collect();
    let off: Vec<R> = (1..nx).map(|i| -(p_mid[i].clone() / &h2)).collect();
    let eig = tridiagonal_eigen(&diag, &off, k)?;
    let scale = R::one() / h.sqrt();
    let eigenfunctions = (0..k)
        .map(|c| {
            let mut v: Vec<R> = (0..nx)
                .map(|i| eig.vectors[(i, c)].clone() * &scale)
                .collect();
            if v[0] < R::zero() {
                v.iter_mut().for_each(|x| *x = -x.clone());
            }
            v
        })
        .collect();
    let laplacian = (1..=k)
        .map(|n| discrete_laplacian_eigenvalue(n, nx))
        .collect();
    Ok(SpectralData {
        eigenvalues: eig.values,
        eigenfunctions,
        grid,
        laplacian,
    })
}

/// Checks every eigenvalue against its Rayleigh bounds.
pub fn check_eigenvalue_bounds<R: Real>(
    prob: &SturmLiouvilleProblem<R>,
    spec: &SpectralData<R>,
) -> Result<(), SpectralError> {
    let slack = R::precision_floor(6);
    for (n, (lambda, mu)) in spec.eigenvalues.iter().zip(&spec.laplacian).enumerate() {
        let (lo, hi) = prob.eigenvalue_bounds(mu);
        let tol = slack.clone() * (R::one() + lambda.abs());
        if lambda.clone() < lo.clone() - &tol || lambda.clone() > hi.clone() + &tol {
            return Err(SpectralError::BoundViolation {
                n: n + 1,
                value: lambda.to_f64(),
                lower: lo.to_f64(),
                upper: hi.to_f64(),
            });
        }
    }
    Ok(())
}

/// Constants with `lower (m^2 - n^2) <= lambda_m - lambda_n <= upper (m^2 - n^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GapConstants<R> {
    pub lower: R,
    pub upper: R,
}

impl<R: Real> GapConstants<R> {
    /// Whether the defining inequality holds for all pairs of `eigenvalues`
    /// (one-based index `n` for `eigenvalues[n - 1]`), up to a relative slack.
    pub fn holds_for(&self, eigenvalues: &[R]) -> bool {
        let slack = R::precision_floor(4);
        for n in 0..eigenvalues.len() {
            for m in n + 1..eigenvalues.len() {
                let sq = R::from_usize((m + 1) * (m + 1) - (n + 1) * (n + 1));
                let gap = eigenvalues[m].clone() - &eigenvalues[n];
                let lo = self.lower.clone() * &sq;
                let hi = self.upper.clone() * &sq;
                let tol = slack.clone() * hi.abs();
                if gap.clone() < lo - &tol || gap > hi + &tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Extremes of `(lambda_m - lambda_n) / (m^2 - n^2)` over all pairs.
pub fn estimate_gap_constants<R: Real>(
    eigenvalues: &[R],
) -> Result<GapConstants<R>, SpectralError> {
    if eigenvalues.len() < 2 {
        return Err(SpectralError::TooFewEigenvalues(eigenvalues.len()));
    }
    let mut lower: Option<R> = None;
    let mut upper: Option<R> = None;
    for n in 0..eigenvalues.len() {
        for m in n + 1..eigenvalues.len() {
            let sq = R::from_usize((m + 1) * (m + 1) - (n + 1) * (n + 1));
            let ratio = (eigenvalues[m].clone() - &eigenvalues[n]) / sq;
            lower = Some(match lower {
                Some(l) => l.min(ratio.clone()),
                None => ratio.clone(),
            });
            upper = Some(match upper {
                Some(u) => u.max(ratio),
                None => ratio,
            });
        }
    }
    Ok(GapConstants {
        lower: lower.expect("at least one pair"),
        upper: upper.expect("at least one pair"),
    })
}
