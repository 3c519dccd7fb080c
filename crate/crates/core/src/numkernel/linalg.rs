//! Dense kernels: pivoted LU, Householder least squares, one-sided Jacobi SVD,
//! Hessenberg/Francis eigenvalues and symmetric tridiagonal eigenpairs.
//!
//! Rank and singularity decisions all use the threshold
//! `10^(4 - DIGITS) * norm`, so they tighten automatically with precision.

use super::{Matrix, NumError, Real};

/// Complex number over a [`Real`] field, used only for eigenvalue output.
#[derive(Clone, Debug, PartialEq)]
pub struct Complex<R> {
    pub re: R,
    pub im: R,
}

impl<R: Real> Complex<R> {
    pub fn new(re: R, im: R) -> Self {
        Complex { re, im }
    }

    pub fn modulus(&self) -> R {
        self.re.hypot(&self.im)
    }
}

fn check_square<R: Real>(a: &Matrix<R>, what: &str) -> Result<usize, NumError> {
    if !a.is_square() {
        return Err(NumError::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct Lu<R> {
    lu: Matrix<R>,
    perm: Vec<usize>,
}

impl<R: Real> Lu<R> {
    /// Fails with `SingularMatrix` when a pivot falls below
    /// `10^(4 - DIGITS) * ||A||_inf`.
    pub fn factor(a: &Matrix<R>) -> Result<Self, NumError> {
        let n = check_square(a, "LU")?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = R::precision_floor(4) * a.norm_inf();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best.is_zero() || best < threshold {
                return Err(NumError::SingularMatrix {
                    column: k,
                    pivot: best.to_f64(),
                });
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let pivot = lu[(k, k)].clone();
            for i in k + 1..n {
                let l = lu[(i, k)].clone() / &pivot;
                if l.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let t = l.clone() * &lu[(k, j)];
                    lu[(i, j)] -= t;
                }
                lu[(i, k)] = l;
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &[R]) -> Result<Vec<R>, NumError> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumError::Dimension(format!(
                "right-hand side of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<R> = self.perm.iter().map(|&p| b[p].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[(i, j)].clone() * &x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[(i, j)].clone() * &x[j];
                x[i] -= t;
            }
            x[i] /= &self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_linear<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<Vec<R>, NumError> {
    Lu::factor(a)?.solve(b)
}

pub fn inverse<R: Real>(a: &Matrix<R>) -> Result<Matrix<R>, NumError> {
    let lu = Lu::factor(a)?;
    let n = lu.dim();
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![R::zero(); n];
        e[j] = R::one();
        let col = lu.solve(&e)?;
        for (i, v) in col.into_iter().enumerate() {
            inv[(i, j)] = v;
        }
    }
    Ok(inv)
}

/// `||A||_1 ||A^-1||_1` from an explicit inverse. Only used on the small
/// systems of this crate, where the cubic cost is irrelevant.
pub fn condition_number_one<R: Real>(a: &Matrix<R>) -> Result<R, NumError> {
    Ok(a.norm_one() * inverse(a)?.norm_one())
}

/// Minimises `||A x - b||_2` for a tall matrix by Householder QR.
pub fn least_squares<R: Real>(a: &Matrix<R>, b: &[R]) -> Result<Vec<R>, NumError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(NumError::Dimension(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }
    if b.len() != m {
        return Err(NumError::Dimension(format!(
            "right-hand side of length {} for {m} rows",
            b.len()
        )));
    }
    let scale = (0..n).map(|j| column_norm(a, j, 0)).fold(R::zero(), R::max);
    let threshold = R::precision_floor(4) * scale;
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    for j in 0..n {
        let norm = column_norm(&r, j, j);
        if norm.is_zero() || norm < threshold {
            return Err(NumError::RankDeficient { column: j });
        }
        let alpha = -(r[(j, j)].signum()) * norm;
        // v = x - alpha e1, stored in a scratch vector.
        let mut v: Vec<R> = (j..m).map(|i| r[(i, j)].clone()).collect();
        v[0] -= &alpha;
        let vtv = v.iter().fold(R::zero(), |s, x| s + x.clone() * x);
        if vtv.is_zero() {
            continue;
        }
        let beta = R::from_i64(2) / vtv;
        for c in j..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(R::zero(), |s, (k, vk)| s + vk.clone() * &r[(j + k, c)]);
            let f = dot * &beta;
            for (k, vk) in v.iter().enumerate() {
                let t = f.clone() * vk;
                r[(j + k, c)] -= t;
            }
        }
        let dot = v
            .iter()
            .enumerate()
            .fold(R::zero(), |s, (k, vk)| s + vk.clone() * &rhs[j + k]);
        let f = dot * &beta;
        for (k, vk) in v.iter().enumerate() {
            let t = f.clone() * vk;
            rhs[j + k] -= t;
        }
    }
    let mut x = vec![R::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i].clone();
        for k in i + 1..n {
            s -= r[(i, k)].clone() * &x[k];
        }
        x[i] = s / &r[(i, i)];
    }
    Ok(x)
}

fn column_norm<R: Real>(a: &Matrix<R>, j: usize, from: usize) -> R {
    let mut scale = R::zero();
    for i in from..a.rows() {
        scale = scale.max(a[(i, j)].abs());
    }
    if scale.is_zero() {
        return scale;
    }
    let s = (from..a.rows()).fold(R::zero(), |s, i| {
        let t = a[(i, j)].clone() / &scale;
        s + t.clone() * t
    });
    scale * s.sqrt()
}

/// Thin singular value decomposition `A = U diag(S) V^T`.
#[derive(Clone, Debug)]
pub struct Svd<R> {
    pub u: Matrix<R>,
    pub s: Vec<R>,
    pub v: Matrix<R>,
}

const JACOBI_SWEEPS: usize = 30;

/// One-sided Jacobi SVD of an `m x n` matrix with `m >= n`.
///
/// Singular values come out non-increasing. Columns of `U` belonging to zero
/// singular values are completed to an orthonormal set.
pub fn svd<R: Real>(a: &Matrix<R>) -> Result<Svd<R>, NumError> {
    let (m, n) = (a.rows(), a.cols());
    if m < n {
        return Err(NumError::Dimension(format!(
            "svd needs rows >= cols, got {m}x{n}"
        )));
    }
    // Work on columns: w[j] is column j.
    let mut w: Vec<Vec<R>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<R>> = (0..n)
        .map(|j| {
            let mut e = vec![R::zero(); n];
            e[j] = R::one();
            e
        })
        .collect();
    let tol = R::unit_roundoff() * R::from_usize(m.max(1));
    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.is_zero() || gamma.abs() <= tol.clone() * (alpha.clone() * &beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (R::from_i64(2) * &gamma);
                let t = zeta.signum() / (zeta.abs() + (R::one() + zeta.clone() * &zeta).sqrt());
                let c = R::one() / (R::one() + t.clone() * &t).sqrt();
                let s = c.clone() * &t;
                rotate(&mut w, p, q, &c, &s);
                rotate(&mut v, p, q, &c, &s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(NumError::NoConvergence {
            routine: "one-sided Jacobi SVD",
            limit: JACOBI_SWEEPS,
        });
    }

    let norms: Vec<R> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        norms[j]
            .partial_cmp(&norms[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let smax = order.first().map_or(R::zero(), |&i| norms[i].clone());
    let zero_tol = R::unit_roundoff() * R::from_usize(m.max(n)) * &smax;

    let mut u_cols: Vec<Vec<R>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_out = Matrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j].clone();
        for i in 0..n {
            v_out[(i, k)] = v[j][i].clone();
        }
        if sigma > zero_tol && !sigma.is_zero() {
            u_cols.push(w[j].iter().map(|x| x.clone() / &sigma).collect());
            s.push(sigma);
        } else {
            u_cols.push(Vec::new());
            s.push(R::zero());
        }
    }
    complete_orthonormal(&mut u_cols, m);
    let u = Matrix::from_fn(m, n, |i, k| u_cols[k][i].clone());
    Ok(Svd { u, s, v: v_out })
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter()
        .zip(b)
        .fold(R::zero(), |s, (x, y)| s + x.clone() * y)
}

fn rotate<R: Real>(cols: &mut [Vec<R>], p: usize, q: usize, c: &R, s: &R) {
    for i in 0..cols[p].len() {
        let x = cols[p][i].clone();
        let y = cols[q][i].clone();
        cols[p][i] = c.clone() * &x - s.clone() * &y;
        cols[q][i] = s.clone() * &x + c.clone() * &y;
    }
}

/// Fills empty entries of `cols` with unit vectors orthogonal to the rest,
/// drawn from the standard basis by modified Gram-Schmidt.
fn complete_orthonormal<R: Real>(cols: &mut [Vec<R>], m: usize) {
    let mut candidate = 0;
    for k in 0..cols.len() {
        if !cols[k].is_empty() {
            continue;
        }
        while candidate < m {
            let mut e = vec![R::zero(); m];
            e[candidate] = R::one();
            candidate += 1;
            for _ in 0..2 {
                for c in cols.iter().filter(|c| !c.is_empty()) {
                    let d = dot(c, &e);
                    for (ei, ci) in e.iter_mut().zip(c) {
                        *ei -= d.clone() * ci;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > R::from_f64(0.5) {
                cols[k] = e.into_iter().map(|x| x / &norm).collect();
                break;
            }
        }
    }
}

/// Eigenvalues of a small general real matrix: Householder reduction to
/// Hessenberg form followed by Francis double-shift QR.
pub fn eig_small<R: Real>(a: &Matrix<R>) -> Result<Vec<Complex<R>>, NumError> {
    let n = check_square(a, "eig_small")?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg(&mut h);
    hqr(h)
}

fn hessenberg<R: Real>(h: &mut Matrix<R>) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![R::zero(); n];
    for m in 1..high {
        let mut scale = R::zero();
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale.is_zero() {
            continue;
        }
        let mut hh = R::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)].clone() / &scale;
            hh += ort[i].clone() * &ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > R::zero() {
            g = -g;
        }
        hh -= ort[m].clone() * &g;
        ort[m] -= &g;
        for j in m..n {
            let mut f = R::zero();
            for i in (m..=high).rev() {
                f += ort[i].clone() * &h[(i, j)];
            }
            f /= &hh;
            for i in m..=high {
                let t = f.clone() * &ort[i];
                h[(i, j)] -= t;
            }
        }
        for i in 0..=high {
            let mut f = R::zero();
            for j in (m..=high).rev() {
                f += ort[j].clone() * &h[(i, j)];
            }
            f /= &hh;
            for j in m..=high {
                let t = f.clone() * &ort[j];
                h[(i, j)] -= t;
            }
        }
        ort[m] = scale.clone() * &ort[m];
        h[(m, m - 1)] = scale * g;
    }
}

fn hqr<R: Real>(mut h: Matrix<R>) -> Result<Vec<Complex<R>>, NumError> {
    let nn = h.rows();
    let limit = 100 * nn;
    let eps = R::unit_roundoff() * R::from_i64(2);
    let zero = R::zero();
    let two = R::from_i64(2);
    let mut d = vec![R::zero(); nn];
    let mut e = vec![R::zero(); nn];
    let mut exshift = R::zero();
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);

    let mut norm = R::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while n >= 0 {
        let nu = n as usize;
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s.is_zero() {
                s = norm.clone();
            }
            if h[(l, l - 1)].abs() < eps.clone() * &s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            h[(nu, nu)] += &exshift;
            d[nu] = h[(nu, nu)].clone();
            e[nu] = R::zero();
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h[(nu, nu - 1)].clone() * &h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)].clone() - &h[(nu, nu)]) / &two;
            q = p.clone() * &p + &w;
            z = q.abs().sqrt();
            h[(nu, nu)] += &exshift;
            h[(nu - 1, nu - 1)] += &exshift;
            x = h[(nu, nu)].clone();
            if q >= zero {
                z = if p >= zero {
                    p.clone() + &z
                } else {
                    p.clone() - &z
                };
                d[nu - 1] = x.clone() + &z;
                d[nu] = d[nu - 1].clone();
                if !z.is_zero() {
                    d[nu] = x.clone() - w.clone() / &z;
                }
                e[nu - 1] = R::zero();
                e[nu] = R::zero();
            } else {
                d[nu - 1] = x.clone() + &p;
                d[nu] = x.clone() + &p;
                e[nu - 1] = z.clone();
                e[nu] = -z.clone();
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)].clone();
            y = R::zero();
            w = R::zero();
            if l < nu {
                y = h[(nu - 1, nu - 1)].clone();
                w = h[(nu, nu - 1)].clone() * &h[(nu - 1, nu)];
            }
            if iter == 10 {
                exshift += &x;
                for i in 0..=nu {
                    h[(i, i)] -= &x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = R::from_f64(0.75) * &s;
                y = x.clone();
                w = R::from_f64(-0.4375) * &s * &s;
            }
            if iter == 30 {
                s = (y.clone() - &x) / &two;
                s = s.clone() * &s + &w;
                if s > zero {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x.clone() - w.clone() / ((y.clone() - &x) / &two + &s);
                    for i in 0..=nu {
                        h[(i, i)] -= &s;
                    }
                    exshift += &s;
                    x = R::from_f64(0.964);
                    y = x.clone();
                    w = x.clone();
                }
            }
            iter += 1;
            total += 1;
            if total > limit {
                return Err(NumError::NoConvergence {
                    routine: "Francis QR",
                    limit,
                });
            }

            let mut m = nu - 2;
            loop {
                z = h[(m, m)].clone();
                r = x.clone() - &z;
                s = y.clone() - &z;
                p = (r.clone() * &s - &w) / &h[(m + 1, m)] + &h[(m, m + 1)];
                q = h[(m + 1, m + 1)].clone() - &z - &r - &s;
                r = h[(m + 2, m + 1)].clone();
                s = p.abs() + q.abs() + r.abs();
                p /= &s;
                q /= &s;
                r /= &s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps.clone()
                    * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[(i, i - 2)] = R::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = R::zero();
                }
            }

            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)].clone();
                    q = h[(k + 1, k - 1)].clone();
                    r = if notlast {
                        h[(k + 2, k - 1)].clone()
                    } else {
                        R::zero()
                    };
                    x = p.abs() + q.abs() + r.abs();
                    if x.is_zero() {
                        continue;
                    }
                    p /= &x;
                    q /= &x;
                    r /= &x;
                }
                s = (p.clone() * &p + q.clone() * &q + r.clone() * &r).sqrt();
                if p < zero {
                    s = -s;
                }
                if s.is_zero() {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -(s.clone() * &x);
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)].clone();
                }
                p += &s;
                x = p.clone() / &s;
                y = q.clone() / &s;
                z = r.clone() / &s;
                q /= &p;
                r /= &p;
                for j in k..nn {
                    p = h[(k, j)].clone() + q.clone() * &h[(k + 1, j)];
                    if notlast {
                        p += r.clone() * &h[(k + 2, j)];
                        let t = p.clone() * &z;
                        h[(k + 2, j)] -= t;
                    }
                    let t = p.clone() * &x;
                    h[(k, j)] -= t;
                    let t = p.clone() * &y;
                    h[(k + 1, j)] -= t;
                }
                for i in 0..=nu.min(k + 3) {
                    p = x.clone() * &h[(i, k)] + y.clone() * &h[(i, k + 1)];
                    if notlast {
                        p += z.clone() * &h[(i, k + 2)];
                        let t = p.clone() * &r;
                        h[(i, k + 2)] -= t;
                    }
                    h[(i, k)] -= &p;
                    let t = p.clone() * &q;
                    h[(i, k + 1)] -= t;
                }
            }
        }
    }
    Ok(d.into_iter()
        .zip(e)
        .map(|(re, im)| Complex { re, im })
        .collect())
}

/// Lowest eigenpairs of a symmetric matrix, ascending.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<R> {
    pub values: Vec<R>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix<R>,
}

/// The `count` smallest eigenpairs of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off`, by Sturm bisection and inverse
/// iteration.
pub fn tridiagonal_eigen<R: Real>(
    diag: &[R],
    off: &[R],
    count: usize,
) -> Result<SymmetricEigen<R>, NumError> {
    let n = diag.len();
    if off.len() + 1 != n.max(1) || count > n {
        return Err(NumError::Dimension(format!(
            "tridiagonal of order {n} with {} off-diagonals, {count} pairs requested",
            off.len()
        )));
    }
    let mut lo = diag[0].clone();
    let mut hi = diag[0].clone();
    let mut tnorm = R::zero();
    for i in 0..n {
        let mut rad = R::zero();
        if i > 0 {
            rad += off[i - 1].abs();
        }
        if i + 1 < n {
            rad += off[i].abs();
        }
        lo = lo.min(diag[i].clone() - &rad);
        hi = hi.max(diag[i].clone() + &rad);
        tnorm = tnorm.max(diag[i].abs() + rad);
    }
    let u = R::unit_roundoff();
    let pivmin = u.clone() * &tnorm + R::precision_floor(-300).min(u.clone());
    let sturm = |x: &R| -> usize {
        // A vanishing pivot is replaced by -pivmin before its sign is read.
        let mut count = 0;
        let mut q = R::zero();
        for i in 0..n {
            q = if i == 0 {
                diag[0].clone() - x
            } else {
                diag[i].clone() - x - off[i - 1].clone() * &off[i - 1] / &q
            };
            if q.abs() < pivmin {
                q = -pivmin.clone();
            }
            if q < R::zero() {
                count += 1;
            }
        }
        count
    };

    let max_steps = 4 * (R::DIGITS as usize * 4) + 200;
    let mut values = Vec::with_capacity(count);
    for j in 0..count {
        let mut a = lo.clone() - &pivmin;
        let mut b = hi.clone() + &pivmin;
        let mut steps = 0;
        loop {
            let width = b.clone() - &a;
            let tol = u.clone() * R::from_i64(4) * (a.abs().max(b.abs())) + &pivmin;
            if width <= tol {
                break;
            }
            steps += 1;
            if steps > max_steps {
                return Err(NumError::NoConvergence {
                    routine: "Sturm bisection",
                    limit: max_steps,
                });
            }
            let mid = (a.clone() + &b) / R::from_i64(2);
            if sturm(&mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        values.push((a + b) / R::from_i64(2));
    }

    let mut vectors = Matrix::zeros(n, count);
    let mut found: Vec<Vec<R>> = Vec::with_capacity(count);
    for (k, lambda) in values.iter().enumerate() {
        let mut x: Vec<R> = (0..n)
            .map(|i| R::one() + R::from_f64(((i * 7919 + k * 104729) % 1000) as f64 / 2000.0))
            .collect();
        let factor = TridiagLu::factor(diag, off, lambda, &pivmin);
        for _ in 0..4 {
            factor.solve(&mut x);
            for prev in &found {
                let d = dot(prev, &x);
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= d.clone() * pi;
                }
            }
            let norm = dot(&x, &x).sqrt();
            if norm.is_zero() || !norm.is_finite() {
                return Err(NumError::NoConvergence {
                    routine: "inverse iteration",
                    limit: 4,
                });
            }
            for xi in x.iter_mut() {
                *xi /= &norm;
            }
        }
        for (i, xi) in x.iter().enumerate() {
            vectors[(i, k)] = xi.clone();
        }
        found.push(x);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Pivoted LU of `T - shift I` for tridiagonal `T`.
struct TridiagLu<R> {
    dl: Vec<R>,
    d: Vec<R>,
    du: Vec<R>,
    du2: Vec<R>,
    swapped: Vec<bool>,
}

impl<R: Real> TridiagLu<R> {
    fn factor(diag: &[R], off: &[R], shift: &R, pivmin: &R) -> Self {
        let n = diag.len();
        let mut d: Vec<R> = diag.iter().map(|x| x.clone() - shift).collect();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![R::zero(); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < *pivmin {
                    d[i] = pivmin.clone();
                }
                let fact = dl[i].clone() / &d[i];
                dl[i] = fact.clone();
                let t = fact * &du[i];
                d[i + 1] -= t;
            } else {
                let fact = d[i].clone() / &dl[i];
                d[i] = dl[i].clone();
                dl[i] = fact.clone();
                let temp = du[i].clone();
                du[i] = d[i + 1].clone();
                d[i + 1] = temp - fact.clone() * &d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1].clone();
                    du[i + 1] = -(fact * &du[i + 1]);
                }
                swapped[i] = true;
            }
        }
        if n > 0 && d[n - 1].abs() < *pivmin {
            d[n - 1] = pivmin.clone();
        }
        TridiagLu {
            dl,
            d,
            du,
            du2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [R]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i].clone();
                b[i] = b[i + 1].clone();
                b[i + 1] = temp - self.dl[i].clone() * &b[i];
            } else {
                let t = self.dl[i].clone() * &b[i];
                b[i + 1] -= t;
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i].clone();
            if i + 1 < n {
                s -= self.du[i].clone() * &b[i + 1];
            }
            if i + 2 < n {
                s -= self.du2[i].clone() * &b[i + 2];
            }
            b[i] = s / &self.d[i];
        }
    }
}

/// The `count` smallest eigenpairs of a dense symmetric matrix: Householder
/// tridiagonalisation, then [`tridiagonal_eigen`], then back-transformation.
pub fn symmetric_eigen<R: Real>(
    a: &Matrix<R>,
    count: usize,
) -> Result<SymmetricEigen<R>, NumError> {
    let n = check_square(a, "symmetric_eigen")?;
    let mut t = a.clone();
    let mut q = Matrix::<R>::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<R> = (k + 1..n).map(|i| t[(i, k)].clone()).collect();
        let norm = dot(&x, &x).sqrt();
        if norm.is_zero() {
            continue;
        }
        let alpha = -(x[0].signum()) * norm;
        let mut v = x;
        v[0] -= &alpha;
        let vtv = dot(&v, &v);
        if vtv.is_zero() {
            continue;
        }
        let beta = R::from_i64(2) / vtv;
        // p = beta A v, w = p - (beta/2)(v'p) v, A <- A - v w' - w v'
        let p: Vec<R> = (0..n)
            .map(|i| {
                (k + 1..n).fold(R::zero(), |s, j| s + t[(i, j)].clone() * &v[j - k - 1]) * &beta
            })
            .collect();
        let vp = (k + 1..n).fold(R::zero(), |s, j| s + v[j - k - 1].clone() * &p[j]);
        let kf = beta.clone() * vp / R::from_i64(2);
        let w: Vec<R> = (0..n)
            .map(|i| {
                if i > k {
                    p[i].clone() - kf.clone() * &v[i - k - 1]
                } else {
                    p[i].clone()
                }
            })
            .collect();
        for i in 0..n {
            let vi = if i > k {
                v[i - k - 1].clone()
            } else {
                R::zero()
            };
            for j in 0..n {
                let vj = if j > k {
                    v[j - k - 1].clone()
                } else {
                    R::zero()
                };
                let delta = vi.clone() * &w[j] + w[i].clone() * &vj;
                t[(i, j)] -= delta;
            }
        }
        // Q <- Q (I - beta v v')
        for i in 0..n {
            let qv = (k + 1..n).fold(R::zero(), |s, j| s + q[(i, j)].clone() * &v[j - k - 1]);
            let f = qv * &beta;
            for j in k + 1..n {
                let delta = f.clone() * &v[j - k - 1];
                q[(i, j)] -= delta;
            }
        }
    }
    let diag: Vec<R> = (0..n).map(|i| t[(i, i)].clone()).collect();
    let off: Vec<R> = (0..n.saturating_sub(1))
        .map(|i| t[(i + 1, i)].clone())
        .collect();
    let tri = tridiagonal_eigen(&diag, &off, count)?;
    let vectors = q.matmul(&tri.vectors)?;
    Ok(SymmetricEigen {
        values: tri.values,
        vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::Mp32;

    #[test]
    fn gepp_solves_small_system() {
        let a = Matrix::<f64>::from_f64_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let x = solve_linear(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15);
        assert!((x[1] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn gepp_rejects_singular() {
        let a = Matrix::<f64>::from_f64_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(
            solve_linear(&a, &[1.0, 2.0]),
            Err(NumError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn svd_of_rank_one() {
        let a = Matrix::<f64>::from_f64_rows(&[&[1.0, 1.0], &[0.0, 0.0]]).unwrap();
        let d = svd(&a).unwrap();
        assert!((d.s[0] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(d.s[1], 0.0);
        assert!((d.u[(0, 0)].abs() - 1.0).abs() < 1e-15);
        assert!((d.u[(1, 1)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn svd_reconstructs() {
        let a = Matrix::<f64>::from_fn(5, 3, |i, j| 1.0 / (i + j + 1) as f64);
        let d = svd(&a).unwrap();
        for k in 1..3 {
            assert!(d.s[k - 1] >= d.s[k]);
        }
        let us = Matrix::from_fn(5, 3, |i, k| d.u[(i, k)] * d.s[k]);
        let back = us.matmul(&d.v.transpose()).unwrap();
        assert!(back.max_abs_diff(&a).unwrap() < 1e-14);
        let utu = d.u.transpose().matmul(&d.u).unwrap();
        assert!(utu.max_abs_diff(&Matrix::identity(3)).unwrap() < 10.0 * 3.0 * f64::EPSILON);
    }

    #[test]
    fn least_squares_exact_fit() {
        // y = 1 + 2 t sampled at t = 0..4
        let a = Matrix::<f64>::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let b: Vec<f64> = (0..5).map(|i| 1.0 + 2.0 * i as f64).collect();
        let x = least_squares(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let a = Matrix::<f64>::from_fn(4, 2, |i, _| i as f64 + 1.0);
        assert!(matches!(
            least_squares(&a, &[1.0, 2.0, 3.0, 4.0]),
            Err(NumError::RankDeficient { column: 1 })
        ));
    }

    #[test]
    fn eig_of_companion_and_rotation() {
        // roots 1, 2, 3
        let a =
            Matrix::<f64>::from_f64_rows(&[&[0.0, 0.0, 6.0], &[1.0, 0.0, -11.0], &[0.0, 1.0, 6.0]])
                .unwrap();
        let mut ev: Vec<f64> = eig_small(&a).unwrap().iter().map(|c| c.re).collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        let rot = Matrix::<f64>::from_f64_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        let ev = eig_small(&rot).unwrap();
        assert!(ev.iter().all(|c| (c.im.abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn eig_high_precision() {
        let a = Matrix::<Mp32>::from_fn(6, 6, |i, j| {
            Mp32::one() / Mp32::from_usize(i + j + 1)
                + if i == j {
                    Mp32::from_usize(i)
                } else {
                    Mp32::zero()
                }
        });
        let ev = eig_small(&a).unwrap();
        let sym = symmetric_eigen(&a, 6).unwrap();
        let mut re: Vec<Mp32> = ev.into_iter().map(|c| c.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in re.iter().zip(&sym.values) {
            assert!((x.clone() - y).abs() < Mp32::precision_floor(3));
        }
    }

    #[test]
    fn tridiagonal_laplacian() {
        let n = 50;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let eig = tridiagonal_eigen(&diag, &off, 5).unwrap();
        for k in 0..5 {
            let theta = (k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64;
            let want = 2.0 - 2.0 * theta.cos();
            assert!((eig.values[k] - want).abs() < 1e-13);
            let sign = eig.vectors[(0, k)].signum();
            let scale = (2.0 / (n + 1) as f64).sqrt();
            for i in 0..n {
                let v = scale * ((i + 1) as f64 * theta).sin();
                assert!((sign * eig.vectors[(i, k)] - v).abs() < 1e-10);
            }
        }
    }
}
