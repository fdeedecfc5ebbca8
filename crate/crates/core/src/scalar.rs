//! Floating-point abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used by the closed-form rate expressions: `f32` or `f64`.
///
/// The two tolerance constants are expressed in `f64` and scaled down to
/// what the concrete type can actually resolve.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Slack for equalities between two analytic formulas.
    const ANALYTIC_TOL: f64;
    /// Slack for inequality checks (bounds, orderings).
    const CHECK_TOL: f64;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar")
    }

    fn analytic_tol() -> Self {
        Self::lit(Self::ANALYTIC_TOL)
    }

    fn check_tol() -> Self {
        Self::lit(Self::CHECK_TOL)
    }
}

impl Scalar for f64 {
    const ANALYTIC_TOL: f64 = 1e-12;
    const CHECK_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const ANALYTIC_TOL: f64 = 1e-5;
    const CHECK_TOL: f64 = 1e-4;
}

/// `(1 - x)^n` evaluated without cancellation for small `x`.
///
/// Uses `exp(n * ln_1p(-x))` when `x < 0.5` and repeated multiplication
/// otherwise; `n` may be as large as a few million.
pub fn pow_one_minus<T: Scalar>(x: T, n: usize) -> T {
    if n == 0 {
        return T::one();
    }
    if x < T::lit(0.5) {
        (T::count(n) * (-x).ln_1p()).exp()
    } else {
        let base = T::one() - x;
        match i32::try_from(n) {
            Ok(p) => base.powi(p),
            Err(_) => base.powf(T::count(n)),
        }
    }
}
