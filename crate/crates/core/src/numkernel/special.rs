use super::{NumError, Real};

/// Dilogarithm `Li2(x)` on `[0, 1]`.
pub fn dilog<R: Real>(x: &R) -> Result<R, NumError> {
    if *x < R::zero() || *x > R::one() {
        return Err(NumError::Domain {
            value: x.to_f64(),
            domain: "[0, 1]",
        });
    }
    if *x <= R::from_f64(0.5) {
        return Ok(dilog_series(x));
    }
    if *x == R::one() {
        return Ok(pi_sq_over_6());
    }
    let c = R::one() - x;
    Ok(pi_sq_over_6::<R>() - x.ln() * c.ln() - dilog_series(&c))
}

/// `Li2(exp(-a))` for `a >= 0`. Avoids forming `1 - exp(-a)` by subtraction,
/// which matters when `a` is tiny.
pub fn dilog_exp_neg<R: Real>(a: &R) -> Result<R, NumError> {
    if *a < R::zero() {
        return Err(NumError::Domain {
            value: a.to_f64(),
            domain: "[0, inf)",
        });
    }
    if a.is_zero() {
        return Ok(pi_sq_over_6());
    }
    let x = (-a.clone()).exp();
    if *a >= R::from_i64(2).ln() {
        return Ok(dilog_series(&x));
    }
    let c = -(-a.clone()).exp_m1();
    Ok(pi_sq_over_6::<R>() + a.clone() * c.ln() - dilog_series(&c))
}

fn pi_sq_over_6<R: Real>() -> R {
    let pi = R::pi();
    pi.clone() * pi / R::from_i64(6)
}

/// Power series for `0 <= x <= 1/2`.
fn dilog_series<R: Real>(x: &R) -> R {
    let tol = R::unit_roundoff();
    let mut sum = R::zero();
    let mut pow = x.clone();
    let mut k = 1i64;
    while !pow.is_zero() {
        let term = pow.clone() / R::from_i64(k * k);
        sum += &term;
        if term <= tol.clone() * &sum {
            break;
        }
        pow *= x;
        k += 1;
    }
    sum
}
