//! Closed-form delivery rates of the uncoded, centralized and decentralized
//! schemes, together with the normalized helper functions used to compare
//! them.
//!
//! All rates are normalized by the file size, so none of them depend on the
//! number of bits per file. Every function is generic over [`Scalar`].

use serde::Serialize;
use thiserror::Error;

use crate::scalar::{pow_one_minus, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("ratio is undefined at M = N (both rates are zero)")]
    DegenerateRatio,
    #[error("ratio {ratio} outside [1, 1.5] at K={users} N={files} M={memory}")]
    BoundViolation {
        users: usize,
        files: usize,
        memory: f64,
        ratio: f64,
    },
}

/// `K` users, `N` files, per-user cache of `M` files, files of `F` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams<T> {
    users: usize,
    files: usize,
    memory: T,
    file_bits: usize,
}

impl<T: Scalar> SystemParams<T> {
    /// Parameters for the analytic model; the file size defaults to one bit.
    pub fn new(users: usize, files: usize, memory: T) -> Result<Self, RateError> {
        if users < 2 {
            return Err(RateError::InvalidParams(format!("K = {users}, need K >= 2")));
        }
        if files < 1 {
            return Err(RateError::InvalidParams("N must be positive".into()));
        }
        if !(memory > T::zero() && memory <= T::count(files)) {
            return Err(RateError::InvalidParams(format!(
                "M = {memory} outside (0, {files}]"
            )));
        }
        Ok(Self {
            users,
            files,
            memory,
            file_bits: 1,
        })
    }

    pub fn with_file_bits(mut self, file_bits: usize) -> Result<Self, RateError> {
        if file_bits == 0 {
            return Err(RateError::InvalidParams("F must be positive".into()));
        }
        self.file_bits = file_bits;
        Ok(self)
    }

    /// Memory at the corner `M = s N / K`, `s` in `1..=K`.
    pub fn at_corner(users: usize, files: usize, s: usize) -> Result<Self, RateError> {
        if s == 0 || s > users {
            return Err(RateError::OutOfRange {
                what: "s",
                value: s as f64,
            });
        }
        Self::new(users, files, T::count(s) * T::count(files) / T::count(users))
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn memory(&self) -> T {
        self.memory
    }

    pub fn file_bits(&self) -> usize {
        self.file_bits
    }

    /// Cached fraction of every file, `M / N`.
    pub fn fraction(&self) -> T {
        self.memory / T::count(self.files)
    }

    pub fn geometry(&self) -> MemoryGeometry<T> {
        MemoryGeometry::new(self.fraction(), self.users)
    }

    pub fn piecewise_case(&self) -> PiecewiseCase {
        PiecewiseCase::classify(self.geometry().s, self.users, self.files)
    }

    /// `M == N`: everything is cached.
    pub fn is_full_cache(&self) -> bool {
        self.memory >= T::count(self.files)
    }
}

/// Position of a memory value between two neighbouring corner points.
///
/// With `t = K q`, `s = ceil(t)` and `theta = s - t`, the cached fraction is
/// `q = (s - theta) / K`, i.e. `theta` is the weight on the left corner `s - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryGeometry<T> {
    pub q: T,
    pub s: usize,
    pub theta: T,
    pub t: T,
}

impl<T: Scalar> MemoryGeometry<T> {
    /// `q` in `[0, 1]`. `K q` within `1e-12` of an integer is snapped onto it
    /// so that corner points always get `theta = 0`.
    pub fn new(q: T, users: usize) -> Self {
        let raw = T::count(users) * q;
        let nearest = raw.round();
        let snap = T::lit(1e-12).max(T::epsilon() * raw.abs() * T::lit(8.0));
        // q > 0 must keep s >= 1
        let t = if (raw - nearest).abs() < snap && (nearest > T::zero() || raw <= T::zero()) {
            nearest
        } else {
            raw
        };
        let s = t.ceil();
        Self {
            q,
            s: s.to_usize().expect("non-negative ceiling"),
            theta: s - t,
            t,
        }
    }

    pub fn is_corner(&self) -> bool {
        self.theta == T::zero()
    }
}

/// Which of the three closed forms the centralized envelope takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PiecewiseCase {
    /// `K/N <= s <= K`: both neighbouring corners use coded delivery.
    A,
    /// `K/N - 1 <= s < K/N`: the left corner uses the uncoded branch.
    B,
    /// `s < K/N - 1`: both corners uncoded, rate `N - M`.
    C,
}

impl PiecewiseCase {
    /// Compares `s` with the real value `K/N` by cross-multiplying, so the
    /// boundaries are exact.
    pub fn classify(s: usize, users: usize, files: usize) -> Self {
        if s * files >= users {
            PiecewiseCase::A
        } else if (s + 1) * files >= users {
            PiecewiseCase::B
        } else {
            PiecewiseCase::C
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PiecewiseCase::A => "A",
            PiecewiseCase::B => "B",
            PiecewiseCase::C => "C",
        }
    }
}

/// Conventional uncoded delivery: `K (1 - M/N) min{1, N/K}`.
pub fn uncoded_rate<T: Scalar>(params: &SystemParams<T>) -> T {
    let k = T::count(params.users);
    let n = T::count(params.files);
    k * (T::one() - params.fraction()) * T::one().min(n / k)
}

fn corner_rate<T: Scalar>(s: usize, users: usize, files: usize) -> T {
    let k = T::count(users);
    let n = T::count(files);
    let s_ = T::count(s);
    (k - s_) * (T::one() / (T::one() + s_)).min(n / k)
}

/// Centralized rate at the corner `M = s N / K`: `(K - s) min{1/(1+s), N/K}`.
///
/// `s = 0` (empty caches) is accepted; the memory in `params` is ignored.
pub fn centralized_rate_corner<T: Scalar>(
    s: usize,
    params: &SystemParams<T>,
) -> Result<T, RateError> {
    if s > params.users {
        return Err(RateError::OutOfRange {
            what: "s",
            value: s as f64,
        });
    }
    Ok(corner_rate(s, params.users, params.files))
}

/// Lower convex envelope of the corner rates, evaluated by interpolating
/// between the corners `s - 1` and `s`.
///
/// Panics if the interpolation disagrees with [`centralized_rate_piecewise`]
/// by more than the scalar's check tolerance.
pub fn centralized_rate<T: Scalar>(params: &SystemParams<T>) -> T {
    let geo = params.geometry();
    let (k, n) = (params.users, params.files);
    let left = corner_rate::<T>(geo.s - 1, k, n);
    let right = corner_rate::<T>(geo.s, k, n);
    let rate = geo.theta * left + (T::one() - geo.theta) * right;
    let piecewise = centralized_rate_piecewise(params);
    assert!(
        (rate - piecewise).abs() <= T::check_tol() * (T::one() + piecewise.abs()),
        "corner interpolation {rate} disagrees with piecewise form {piecewise} at {params:?}"
    );
    rate
}

/// The same envelope written as the three-case piecewise function.
pub fn centralized_rate_piecewise<T: Scalar>(params: &SystemParams<T>) -> T {
    let geo = params.geometry();
    let k = T::count(params.users);
    let n = T::count(params.files);
    let s = T::count(geo.s);
    let theta = geo.theta;
    let one = T::one();
    match params.piecewise_case() {
        PiecewiseCase::A => theta * (k - s + one) / s + (one - theta) * (k - s) / (s + one),
        PiecewiseCase::B => theta * n * (k - s + one) / k + (one - theta) * (k - s) / (s + one),
        PiecewiseCase::C => n - params.memory,
    }
}

/// Decentralized rate: `K (1-M/N) min{ N/(K M) (1 - (1-M/N)^K), N/K }`.
pub fn decentralized_rate<T: Scalar>(params: &SystemParams<T>) -> T {
    let k = T::count(params.users);
    let n = T::count(params.files);
    let q = params.fraction();
    let coded = n / (k * params.memory) * (T::one() - pow_one_minus(q, params.users));
    k * (T::one() - q) * coded.min(n / k)
}

fn check_fraction<T: Scalar>(q: T) -> Result<(), RateError> {
    if q > T::zero() && q <= T::one() {
        Ok(())
    } else {
        Err(RateError::OutOfRange {
            what: "q",
            value: q.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `K (1 - q) / (1 + K q)`, continuous at `q = 0` where it equals `K`.
fn r_c_ext<T: Scalar>(q: T, users: usize) -> T {
    let k = T::count(users);
    k * (T::one() - q) / (T::one() + k * q)
}

/// Normalized coded-corner curve `r_C(q, K) = K (1 - q) / (1 + K q)`.
pub fn r_c<T: Scalar>(q: T, users: usize) -> Result<T, RateError> {
    check_fraction(q)?;
    Ok(r_c_ext(q, users))
}

/// Memory-sharing interpolation of [`r_c`] between the corners
/// `(s-1)/K` and `s/K` surrounding `q`.
pub fn r_tilde_c<T: Scalar>(q: T, users: usize) -> Result<T, RateError> {
    check_fraction(q)?;
    let geo = MemoryGeometry::new(q, users);
    let k = T::count(users);
    let left = r_c_ext(T::count(geo.s - 1) / k, users);
    let right = r_c_ext(T::count(geo.s) / k, users);
    Ok(geo.theta * left + (T::one() - geo.theta) * right)
}

/// Normalized decentralized curve `r_D(q, K) = (1-q)/q (1 - (1-q)^K)`.
pub fn r_d<T: Scalar>(q: T, users: usize) -> Result<T, RateError> {
    check_fraction(q)?;
    Ok((T::one() - q) / q * (T::one() - pow_one_minus(q, users)))
}

/// `R_D / R_C`, checked against `[1, 1.5]` with the scalar's check slack.
pub fn gap_ratio<T: Scalar>(params: &SystemParams<T>) -> Result<T, RateError> {
    if params.is_full_cache() {
        return Err(RateError::DegenerateRatio);
    }
    let ratio = decentralized_rate(params) / centralized_rate(params);
    let tol = T::check_tol();
    if ratio < T::one() - tol || ratio > T::lit(1.5) + tol || ratio.is_nan() {
        return Err(RateError::BoundViolation {
            users: params.users,
            files: params.files,
            memory: params.memory.to_f64().unwrap_or(f64::NAN),
            ratio: ratio.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(k: usize, n: usize, m: f64) -> SystemParams<f64> {
        SystemParams::new(k, n, m).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1, 2, 1.0f64).is_err());
        assert!(SystemParams::new(2, 0, 1.0f64).is_err());
        assert!(SystemParams::new(2, 2, 0.0f64).is_err());
        assert!(SystemParams::new(2, 2, 2.5f64).is_err());
        assert!(SystemParams::new(2, 2, 2.0f64).is_ok());
        assert!(p(2, 2, 1.0).with_file_bits(0).is_err());
        assert!(SystemParams::<f64>::at_corner(3, 3, 0).is_err());
        assert_eq!(SystemParams::<f64>::at_corner(3, 3, 1).unwrap().memory(), 1.0);
    }

    #[test]
    fn geometry_snaps_corners() {
        // 0.1 * 30 is 3.0000000000000004 in binary floating point
        let g = MemoryGeometry::new(0.1f64, 30);
        assert_eq!(g.s, 3);
        assert_eq!(g.theta, 0.0);
        let g = MemoryGeometry::new(0.25f64, 2);
        assert_eq!((g.s, g.theta), (1, 0.5));
        let g = MemoryGeometry::new(1.0f64, 7);
        assert_eq!((g.s, g.theta), (7, 0.0));
        let g = MemoryGeometry::new(0.37f64, 10);
        assert!(((g.s as f64 - g.theta) / 10.0 - 0.37).abs() < 1e-12);
    }

    #[test]
    fn uncoded_examples() {
        assert!(close(uncoded_rate(&p(3, 3, 1.0)), 2.0));
        assert!(close(uncoded_rate(&p(2, 1, 1.0)), 0.0));
        assert!(close(uncoded_rate(&p(4, 2, 1.0)), 1.0));
    }

    #[test]
    fn corner_examples() {
        assert!(close(centralized_rate_corner(1, &p(3, 3, 1.0)).unwrap(), 1.0));
        assert!(close(centralized_rate_corner(3, &p(3, 3, 1.0)).unwrap(), 0.0));
        assert!(close(centralized_rate_corner(1, &p(10, 2, 1.0)).unwrap(), 1.8));
        assert!(close(centralized_rate_corner(0, &p(10, 2, 1.0)).unwrap(), 2.0));
        assert!(matches!(
            centralized_rate_corner(4, &p(3, 3, 1.0)),
            Err(RateError::OutOfRange { .. })
        ));
    }

    #[test]
    fn centralized_examples() {
        assert!(close(centralized_rate(&p(2, 2, 1.0)), 0.5));
        assert!(close(centralized_rate(&p(10, 2, 0.4)), 1.6));
        assert_eq!(p(10, 2, 0.4).piecewise_case(), PiecewiseCase::C);
        assert!(close(centralized_rate(&p(3, 3, 3.0)), 0.0));
        // memory sharing: (K=2,N=2,M=0.5) = 0.5 R_C(0) + 0.5 R_C(1)
        assert!(close(centralized_rate(&p(2, 2, 0.5)), 1.25));
        assert!(close(centralized_rate(&p(3, 3, 1.5)), 2.0 / 3.0));
    }

    #[test]
    fn piecewise_boundaries_are_exact() {
        // K/N = 5: s = 5 is case A, s = 4 is case B, s = 3 case C.
        assert_eq!(PiecewiseCase::classify(5, 10, 2), PiecewiseCase::A);
        assert_eq!(PiecewiseCase::classify(4, 10, 2), PiecewiseCase::B);
        assert_eq!(PiecewiseCase::classify(3, 10, 2), PiecewiseCase::C);
        // K/N = 10/3: s = 3 sits in B, s = 2 sits in C (2 < 7/3).
        assert_eq!(PiecewiseCase::classify(4, 10, 3), PiecewiseCase::A);
        assert_eq!(PiecewiseCase::classify(3, 10, 3), PiecewiseCase::B);
        assert_eq!(PiecewiseCase::classify(2, 10, 3), PiecewiseCase::C);
    }

    #[test]
    fn decentralized_examples() {
        assert!(close(decentralized_rate(&p(3, 3, 1.0)), 38.0 / 27.0));
        assert!(close(decentralized_rate(&p(2, 2, 1.0)), 0.75));
        assert!(close(decentralized_rate(&p(5, 4, 4.0)), 0.0));
    }

    #[test]
    fn helper_examples() {
        assert!(close(r_c(1.0, 5).unwrap(), 0.0));
        assert!(close(r_c(0.5, 2).unwrap(), 0.5));
        assert!(close(r_c(1.0 / 3.0, 3).unwrap(), 1.0));
        assert!(r_c(0.0, 3).is_err());
        assert!(r_c(1.5, 3).is_err());

        assert!(close(r_tilde_c(0.5, 2).unwrap(), 0.5));
        assert!(close(r_tilde_c(0.25, 2).unwrap(), 1.25));
        assert!(close(r_tilde_c(0.4, 5).unwrap(), r_c(0.4, 5).unwrap()));

        assert!(close(r_d(1.0, 3).unwrap(), 0.0));
        assert!(close(r_d(0.5, 2).unwrap(), 0.75));
        assert!(close(r_d(1.0 / 3.0, 3).unwrap(), 38.0 / 27.0));
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gap_ratio(&p(2, 2, 1.0)).unwrap(), 1.5);
        assert!(close(gap_ratio(&p(10, 2, 0.4)).unwrap(), 1.0));
        assert!(close(gap_ratio(&p(3, 3, 1.0)).unwrap(), 38.0 / 27.0));
        assert_eq!(gap_ratio(&p(2, 2, 2.0)), Err(RateError::DegenerateRatio));
    }

    #[test]
    fn works_in_single_precision() {
        let params = SystemParams::new(3usize, 3usize, 1.0f32).unwrap();
        assert!((decentralized_rate(&params) - 38.0 / 27.0).abs() < 1e-5);
        assert!((centralized_rate(&params) - 1.0).abs() < 1e-5);
        assert!((gap_ratio(&SystemParams::new(2, 2, 1.0f32).unwrap()).unwrap() - 1.5).abs() < 1e-6);
    }
}
