//! Auxiliary functions behind the `[1, 1.5]` gap bound, with their domains.
//!
//! `f(theta, n, s)` must be non-negative on its domain; `g` and `h` are
//! successively weaker closed-form lower bounds on `min_theta f`. `l_n(x)` is
//! the ratio `r_D / r_C` rewritten in `x = K q`. `B1` and `B2` are the two
//! upper bounds on the ratio in the `s = 1` region.

use crate::rate_model::RateError;
use crate::scalar::{pow_one_minus, Scalar};
use crate::subsets::binomial;

fn out_of_range<T: Scalar>(what: &'static str, value: T) -> RateError {
    RateError::OutOfRange {
        what,
        value: value.to_f64().unwrap_or(f64::NAN),
    }
}

/// `(n-s)/(n(s+1)) + (n+1) theta^2 / (n s (s+1)) - (1 - (s-theta)/n)^(n+1)`
/// for `theta` in `[0, 1)` and `1 <= s <= n`.
///
/// For `s = 1` and `theta > 1/2` the two leading orders of `epsilon = 1 - theta`
/// cancel exactly; that branch sums the remaining binomial series instead.
pub fn f<T: Scalar>(theta: T, n: usize, s: usize) -> Result<T, RateError> {
    if !(theta >= T::zero() && theta < T::one()) {
        return Err(out_of_range("theta", theta));
    }
    if s < 1 || s > n {
        return Err(out_of_range("s", T::count(s)));
    }
    if s == 1 && theta > T::lit(0.5) {
        return Ok(f_s1_series(T::one() - theta, n));
    }
    let (nt, st) = (T::count(n), T::count(s));
    let one = T::one();
    Ok((nt - st) / (nt * (st + one)) + (nt + one) * theta * theta / (nt * st * (st + one))
        - pow_one_minus((st - theta) / nt, n + 1))
}

/// `f(1 - eps, n, 1) = -sum_{j=3}^{n+1} C(n+1, j) (-eps/n)^j`.
fn f_s1_series<T: Scalar>(eps: T, n: usize) -> T {
    let y = eps / T::count(n);
    let mut term = y * y * y;
    let mut sum = T::zero();
    for j in 3..=n + 1 {
        // C(n+1, j) y^j with alternating sign (-1)^(j+1)
        let c = T::lit(binomial(n + 1, j) as f64);
        let signed = if j % 2 == 1 { c * term } else { -(c * term) };
        sum = sum + signed;
        term = term * y;
    }
    sum
}

/// Minimum of the quadratic lower bound on `f(., n, s)`, for `2 <= s < n`.
///
/// With `a = (1 - s/n)^(n+1)` and `b = (1 - (s-1)/n)^(n+1)`:
/// `g = (n-s)/(n(s+1)) - a - n s (s+1) (b-a)^2 / (4 (n+1))`.
pub fn g<T: Scalar>(n: usize, s: usize) -> Result<T, RateError> {
    check_ns::<T>(n, s)?;
    let (nt, st) = (T::count(n), T::count(s));
    let one = T::one();
    let a = pow_one_minus(st / nt, n + 1);
    let b = pow_one_minus((st - one) / nt, n + 1);
    Ok((nt - st) / (nt * (st + one))
        - a
        - nt * st * (st + one) / (T::lit(4.0) * (nt + one)) * (b - a) * (b - a))
}

/// Relaxation of [`g`] through `(1 - x/n)^n <= e^-x`, for `2 <= s < n`.
pub fn h<T: Scalar>(n: usize, s: usize) -> Result<T, RateError> {
    check_ns::<T>(n, s)?;
    let (nt, st) = (T::count(n), T::count(s));
    let one = T::one();
    let e2 = T::lit(2.0).exp();
    let tail = one - pow_one_minus(one / (nt - st + one), n + 1);
    Ok(one / (st + one) - st / (nt * (st + one)) - (-st).exp()
        - e2 / T::lit(4.0) * st * (st + one) / (T::lit(2.0) * st).exp() * tail * tail)
}

fn check_ns<T: Scalar>(n: usize, s: usize) -> Result<(), RateError> {
    if s < 2 {
        return Err(out_of_range("s", T::count(s)));
    }
    if n <= s {
        return Err(out_of_range("n", T::count(n)));
    }
    Ok(())
}

/// `l_n(x) = (1+x)/x (1 - (1 - x/n)^n)` for `n >= 3` and `x` in `(0, n]`.
pub fn l<T: Scalar>(n: usize, x: T) -> Result<T, RateError> {
    if n < 3 {
        return Err(out_of_range("n", T::count(n)));
    }
    if !(x > T::zero() && x <= T::count(n)) {
        return Err(out_of_range("x", x));
    }
    Ok((T::one() + x) / x * (T::one() - pow_one_minus(x / T::count(n), n)))
}

/// Maximizer and maximum of `l_n` on `(0, n]` by golden-section search.
/// `l_n` is unimodal there.
pub fn max_l<T: Scalar>(n: usize) -> Result<(T, T), RateError> {
    if n < 3 {
        return Err(out_of_range("n", T::count(n)));
    }
    let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let (mut a, mut b) = (T::lit(1e-9), T::count(n));
    let eval = |x: T| l(n, x).expect("inside (0, n]");
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d);
        }
        if b - a <= T::epsilon() * T::lit(4.0) * b {
            break;
        }
    }
    let x = (a + b) / T::lit(2.0);
    Ok((x, eval(x)))
}

fn check_k_theta<T: Scalar>(users: usize, theta: T) -> Result<(), RateError> {
    if users < 2 {
        return Err(out_of_range("K", T::count(users)));
    }
    if !(theta >= T::zero() && theta < T::one()) {
        return Err(out_of_range("theta", theta));
    }
    Ok(())
}

/// `(2/K) (1 + (K-2)/(1+theta))`.
pub fn bound_b1<T: Scalar>(users: usize, theta: T) -> Result<T, RateError> {
    check_k_theta(users, theta)?;
    let k = T::count(users);
    let two = T::lit(2.0);
    Ok(two / k * (T::one() + (k - two) / (T::one() + theta)))
}

/// `(2/K) sum_{i=0}^{K-1} ((K-1+theta)/K)^i`.
pub fn bound_b2<T: Scalar>(users: usize, theta: T) -> Result<T, RateError> {
    check_k_theta(users, theta)?;
    let k = T::count(users);
    let r = (k - T::one() + theta) / k;
    let mut sum = T::zero();
    let mut term = T::one();
    for _ in 0..users {
        sum = sum + term;
        term = term * r;
    }
    Ok(T::lit(2.0) / k * sum)
}
