//! Numerical certification that `1 <= R_D / R_C <= 1.5`.
//!
//! Every check here is a pure function of its grid. Sweeps run in parallel
//! over `K` and are reassembled in `(K, N, M)` order, so results never depend
//! on scheduling.

pub mod appendix;

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rate_model::{
    centralized_rate, decentralized_rate, gap_ratio, r_c, r_d, r_tilde_c, PiecewiseCase,
    RateError, SystemParams,
};
use crate::scalar::Scalar;

pub use appendix::{bound_b1, bound_b2, f, g, h, l, max_l};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport<T> {
    pub users: usize,
    pub files: usize,
    pub memory: T,
    pub r_c: T,
    pub r_d: T,
    pub ratio: T,
    pub case: PiecewiseCase,
    /// Case C, where the two rates coincide.
    pub tight_lower: bool,
    /// Ratio within the check tolerance of 1.5.
    pub tight_upper: bool,
}

pub fn gap_report<T: Scalar>(params: &SystemParams<T>) -> Result<GapReport<T>, RateError> {
    let ratio = gap_ratio(params)?;
    let case = params.piecewise_case();
    let tol = T::check_tol();
    let report = GapReport {
        users: params.users(),
        files: params.files(),
        memory: params.memory(),
        r_c: centralized_rate(params),
        r_d: decentralized_rate(params),
        ratio,
        case,
        tight_lower: case == PiecewiseCase::C,
        tight_upper: (ratio - T::lit(1.5)).abs() <= tol,
    };
    if report.tight_lower && (ratio - T::one()).abs() > tol {
        return Err(violation(&report));
    }
    Ok(report)
}

fn violation<T: Scalar>(r: &GapReport<T>) -> RateError {
    RateError::BoundViolation {
        users: r.users,
        files: r.files,
        memory: r.memory.to_f64().unwrap_or(f64::NAN),
        ratio: r.ratio.to_f64().unwrap_or(f64::NAN),
    }
}

/// `M = N j / memory_steps` for `j = 1 .. memory_steps - 1`, so `M = N` is
/// never included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepGrid {
    pub users: RangeInclusive<usize>,
    pub files: RangeInclusive<usize>,
    pub memory_steps: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            users: 2..=200,
            files: 1..=50,
            memory_steps: 100,
        }
    }
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.users.clone().count() * self.files.clone().count() * self.memory_steps.saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn memory<T: Scalar>(&self, files: usize, j: usize) -> T {
        T::count(files * j) / T::count(self.memory_steps)
    }

    fn row<T: Scalar>(&self, users: usize) -> Result<Vec<GapReport<T>>, RateError> {
        let mut out = Vec::with_capacity(self.files.clone().count() * self.memory_steps);
        for n in self.files.clone() {
            for j in 1..self.memory_steps {
                let params = SystemParams::new(users, n, self.memory(n, j))?;
                out.push(gap_report(&params)?);
            }
        }
        Ok(out)
    }
}

/// Every grid point, sorted by `(K, N, M)`. The first violation in that
/// order is returned as the error.
pub fn sweep_gap<T: Scalar>(grid: &SweepGrid) -> Result<Vec<GapReport<T>>, RateError> {
    let rows: Vec<_> = grid
        .users
        .clone()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| grid.row::<T>(k))
        .collect();
    let mut out = Vec::with_capacity(grid.len());
    for row in rows {
        out.extend(row?);
    }
    Ok(out)
}

pub type GridPoint = (usize, usize, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub min_ratio: f64,
    pub argmin: GridPoint,
    pub max_ratio: f64,
    pub argmax: GridPoint,
    /// Points flagged `tight_upper`, in grid order.
    pub tight_upper: Vec<GridPoint>,
    pub case_c_points: usize,
    /// Largest `|ratio - 1|` over case-C points.
    pub case_c_max_deviation: f64,
}

impl SweepSummary {
    fn empty() -> Self {
        Self {
            points: 0,
            min_ratio: f64::INFINITY,
            argmin: (0, 0, 0.0),
            max_ratio: f64::NEG_INFINITY,
            argmax: (0, 0, 0.0),
            tight_upper: Vec::new(),
            case_c_points: 0,
            case_c_max_deviation: 0.0,
        }
    }

    /// Ties keep the earlier point.
    fn absorb<T: Scalar>(&mut self, r: &GapReport<T>) {
        let ratio = r.ratio.to_f64().unwrap_or(f64::NAN);
        let at = (r.users, r.files, r.memory.to_f64().unwrap_or(f64::NAN));
        self.points += 1;
        if ratio < self.min_ratio {
            self.min_ratio = ratio;
            self.argmin = at;
        }
        if ratio > self.max_ratio {
            self.max_ratio = ratio;
            self.argmax = at;
        }
        if r.tight_upper {
            self.tight_upper.push(at);
        }
        if r.tight_lower {
            self.case_c_points += 1;
            self.case_c_max_deviation = self.case_c_max_deviation.max((ratio - 1.0).abs());
        }
    }

    /// `other` must come after `self` in grid order.
    fn merge(mut self, other: SweepSummary) -> Self {
        self.points += other.points;
        if other.min_ratio < self.min_ratio {
            self.min_ratio = other.min_ratio;
            self.argmin = other.argmin;
        }
        if other.max_ratio > self.max_ratio {
            self.max_ratio = other.max_ratio;
            self.argmax = other.argmax;
        }
        self.tight_upper.extend(other.tight_upper);
        self.case_c_points += other.case_c_points;
        self.case_c_max_deviation = self.case_c_max_deviation.max(other.case_c_max_deviation);
        self
    }

    pub fn of<T: Scalar>(reports: &[GapReport<T>]) -> Self {
        let mut s = Self::empty();
        for r in reports {
            s.absorb(r);
        }
        s
    }
}

/// Same as summarizing [`sweep_gap`], without holding every report.
pub fn sweep_summary<T: Scalar>(grid: &SweepGrid) -> Result<SweepSummary, RateError> {
    let parts: Vec<Result<SweepSummary, RateError>> = grid
        .users
        .clone()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|k| grid.row::<T>(k).map(|row| SweepSummary::of(&row)))
        .collect();
    parts
        .into_iter()
        .try_fold(SweepSummary::empty(), |acc, p| Ok(acc.merge(p?)))
}

/// Result of one grid check: how many points, the worst slack found, and
/// whether every point passed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub name: &'static str,
    pub points: usize,
    /// Largest violation amount; non-positive when the check holds strictly.
    pub worst: f64,
    pub worst_at: String,
    pub pass: bool,
}

impl GridCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            points: 0,
            worst: f64::NEG_INFINITY,
            worst_at: String::new(),
            pass: true,
        }
    }

    fn record(&mut self, excess: f64, tol: f64, at: impl FnOnce() -> String) {
        self.points += 1;
        if excess > self.worst {
            self.worst = excess;
            self.worst_at = at();
        }
        // NaN fails too
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(excess <= tol) {
            self.pass = false;
        }
    }
}

/// `r_C <= r~_C <= r_D` for `q = j / q_steps`, `j = 1 ..= q_steps`, and
/// `K = 1 ..= max_users`.
pub fn check_curve_ordering(q_steps: usize, max_users: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("r_C <= r~_C <= r_D");
    for k in 1..=max_users {
        for j in 1..=q_steps {
            let q = j as f64 / q_steps as f64;
            let (a, b, d) = (r_c(q, k)?, r_tilde_c(q, k)?, r_d(q, k)?);
            let scale = 1.0 + d.abs();
            c.record((a - b).max(b - d) / scale, 1e-12, || format!("K={k} q={q}"));
        }
    }
    Ok(c)
}

/// `r_D / r_C < 1.5` for `K = 3 ..= max_users` and `q = j / q_steps < 1`.
pub fn check_curve_ratio(q_steps: usize, max_users: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("r_D / r_C < 1.5 for K >= 3");
    for k in 3..=max_users {
        for j in 1..q_steps {
            let q = j as f64 / q_steps as f64;
            let ratio = r_d(q, k)? / r_c(q, k)?;
            // strict inequality: zero slack allowed
            c.record(ratio - 1.5, -f64::MIN_POSITIVE, || format!("K={k} q={q}"));
        }
    }
    Ok(c)
}

/// `f(theta, n, s) >= -1e-12` for `theta = i / theta_steps < 1` and
/// `1 <= s <= n <= max_n`.
pub fn check_f_nonnegative(theta_steps: usize, max_n: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("f >= 0");
    for n in 1..=max_n {
        for s in 1..=n {
            for i in 0..theta_steps {
                let theta = i as f64 / theta_steps as f64;
                let v = f(theta, n, s)?;
                c.record(-v, 1e-12, || format!("theta={theta} n={n} s={s}"));
            }
        }
    }
    Ok(c)
}

/// `min_theta f(theta, n, s) >= g(n, s) >= h(n, s)` for `2 <= s < n <= max_n`,
/// with the minimum over the `theta_steps` grid.
pub fn check_f_g_h_chain(theta_steps: usize, max_n: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("min f >= g >= h");
    for n in 3..=max_n {
        for s in 2..n {
            let mut fmin = f64::INFINITY;
            for i in 0..theta_steps {
                fmin = fmin.min(f(i as f64 / theta_steps as f64, n, s)?);
            }
            let (gv, hv) = (g::<f64>(n, s)?, h::<f64>(n, s)?);
            c.record((gv - fmin).max(hv - gv), 1e-12, || format!("n={n} s={s}"));
        }
    }
    Ok(c)
}

/// `r_D(q, K) / r_C(q, K) = l_K(K q)` at `samples` random `(K, x)` pairs,
/// relative error at most `1e-12`.
pub fn check_l_identity(samples: usize, max_users: usize, seed: u64) -> Result<GridCheck, RateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = GridCheck::new("r_D / r_C = l_K(Kq)");
    for _ in 0..samples {
        let k = rng.gen_range(3..=max_users);
        // keep q < 1 so that r_C > 0
        let q: f64 = rng.gen_range(1e-6..1.0 - 1e-9);
        let lhs = r_d(q, k)? / r_c(q, k)?;
        let rhs = l(k, k as f64 * q)?;
        c.record(((lhs - rhs) / rhs).abs(), 1e-12, || format!("K={k} q={q}"));
    }
    Ok(c)
}

/// `l_n(x) < 1.5` for `n = 3 ..= max_n` and `x = i * step` in `(0, n]`.
pub fn check_l_below_three_halves(step: f64, max_n: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("l_n < 1.5");
    for n in 3..=max_n {
        let count = (n as f64 / step).round() as usize;
        for i in 1..=count {
            let x = (i as f64 * step).min(n as f64);
            let v = l(n, x)?;
            c.record(v - 1.5, -f64::MIN_POSITIVE, || format!("n={n} x={x}"));
        }
    }
    Ok(c)
}

/// B1 non-decreasing in `K` and non-increasing in `theta`; B2 non-increasing
/// in `K` and non-decreasing in `theta`. `K = 2 ..= max_users`.
pub fn check_bound_monotonicity(theta_steps: usize, max_users: usize) -> Result<GridCheck, RateError> {
    let mut c = GridCheck::new("B1, B2 monotone");
    let tol = 1e-13;
    for k in 2..=max_users {
        for i in 0..theta_steps {
            let t0 = i as f64 / theta_steps as f64;
            let (b1, b2) = (bound_b1(k, t0)?, bound_b2(k, t0)?);
            if k < max_users {
                c.record(b1 - bound_b1(k + 1, t0)?, tol, || format!("B1 in K at K={k} theta={t0}"));
                c.record(bound_b2(k + 1, t0)? - b2, tol, || format!("B2 in K at K={k} theta={t0}"));
            }
            if i + 1 < theta_steps {
                let t1 = (i + 1) as f64 / theta_steps as f64;
                c.record(bound_b1(k, t1)? - b1, tol, || format!("B1 in theta at K={k} theta={t0}"));
                c.record(b2 - bound_b2(k, t1)?, tol, || format!("B2 in theta at K={k} theta={t0}"));
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitReport {
    pub files: usize,
    pub memory: f64,
    pub eps: f64,
    pub ratios: Vec<(usize, f64)>,
    pub final_within_eps: bool,
    /// For `M < 1`: the smallest `K` from which both rates sit on their
    /// `N - M` branch for every larger `K`.
    pub switch_users: Option<usize>,
    /// Largest `|R_D - R_C| / R_C` over the probed `K >= switch_users`.
    pub switch_max_deviation: Option<f64>,
    pub pass: bool,
}

/// Pinned slack for the `R_D = R_C` equality past the branch switch.
pub const SWITCH_TOL: f64 = 1e-12;
/// `K` values probed past the switch, in addition to those in `users`.
const SWITCH_PROBES: usize = 1000;

/// Smallest `K` after which both rates equal `N - M` for all larger `K`.
///
/// `R_D` switches once `(1-q)^K <= 1 - M`, which is monotone in `K`. `R_C`
/// is `N - M` in case C, `(ceil(K q) + 1) N < K`; that holds for every
/// `K > 2N / (1 - M)`, so scanning up to there finds the last exception.
pub fn branch_switch_users(files: usize, memory: f64) -> Option<usize> {
    if !(memory > 0.0 && memory < 1.0) || memory >= files as f64 {
        return None;
    }
    let q = memory / files as f64;
    let mut k_d = 2;
    while (1.0 - q).powi(k_d as i32) > 1.0 - memory {
        k_d += 1;
    }
    let limit = (2.0 * files as f64 / (1.0 - memory)).ceil() as usize + 1;
    let mut k_c = 2;
    for k in 2..=limit {
        let p = SystemParams::new(k, files, memory).ok()?;
        if p.piecewise_case() != PiecewiseCase::C {
            k_c = k + 1;
        }
    }
    Some(k_d.max(k_c))
}

pub fn limit_check(
    files: usize,
    memory: f64,
    users: &[usize],
    eps: f64,
) -> Result<LimitReport, RateError> {
    if !(memory > 0.0 && memory < files as f64) {
        return Err(RateError::InvalidParams(format!("need 0 < M < N, got M = {memory}")));
    }
    let ratios = users
        .iter()
        .map(|&k| Ok((k, gap_ratio(&SystemParams::new(k, files, memory)?)?)))
        .collect::<Result<Vec<_>, RateError>>()?;
    let final_within_eps = ratios.last().is_some_and(|(_, r)| (r - 1.0).abs() <= eps);
    let switch_users = branch_switch_users(files, memory);
    let switch_max_deviation = switch_users
        .map(|k0| {
            let mut probes = (k0..k0 + SWITCH_PROBES).chain(users.iter().copied().filter(|&k| k >= k0));
            probes.try_fold(0.0f64, |worst, k| {
                let p = SystemParams::new(k, files, memory)?;
                let (rc, rd) = (centralized_rate(&p), decentralized_rate(&p));
                Ok(worst.max(((rd - rc) / rc).abs()))
            })
        })
        .transpose()?;
    let pass = final_within_eps && switch_max_deviation.is_none_or(|d| d <= SWITCH_TOL);
    Ok(LimitReport {
        files,
        memory,
        eps,
        ratios,
        final_within_eps,
        switch_users,
        switch_max_deviation,
        pass,
    })
}

/// How an appendix value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Expect {
    Near { target: f64, tol: f64 },
    /// Open interval.
    Between { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixCheck {
    pub name: String,
    pub value: f64,
    pub expect: Expect,
    pub pass: bool,
}

impl AppendixCheck {
    fn new(name: impl Into<String>, value: f64, expect: Expect) -> Self {
        let pass = match expect {
            Expect::Near { target, tol } => (value - target).abs() <= tol,
            Expect::Between { lo, hi } => value > lo && value < hi,
        };
        Self {
            name: name.into(),
            value,
            expect,
            pass,
        }
    }
}

/// Published four-decimal values are matched within `5e-4`.
pub const FOUR_DECIMALS: f64 = 5e-4;

/// The appendix values with their published targets.
pub fn appendix_checks() -> Result<Vec<AppendixCheck>, RateError> {
    let near = |target, tol| Expect::Near { target, tol };
    let mut out = Vec::new();
    for (n, s, target) in [
        (4, 3, 0.0593),
        (3, 2, 0.0602),
        (4, 2, 0.0845),
        (5, 2, 0.0953),
        (6, 2, 0.1012),
        (7, 2, 0.1047),
    ] {
        out.push(AppendixCheck::new(format!("g({n},{s})"), g(n, s)?, near(target, FOUR_DECIMALS)));
    }
    for (n, s, target) in [(5, 3, 0.0045), (8, 2, 0.0004)] {
        out.push(AppendixCheck::new(format!("h({n},{s})"), h(n, s)?, near(target, FOUR_DECIMALS)));
    }
    let sqrt10 = 10f64.sqrt();
    let (x, v) = max_l::<f64>(3)?;
    out.push(AppendixCheck::new("max l_3", v, near((1001.0 + 20.0 * sqrt10) / 729.0, 1e-6)));
    out.push(AppendixCheck::new("argmax l_3", x, near((8.0 - sqrt10) / 3.0, 1e-4)));
    out.push(AppendixCheck::new(
        "B1(8,6/25)",
        bound_b1(8, 6.0 / 25.0)?,
        near(181.0 / 124.0, 1e-12),
    ));
    out.push(AppendixCheck::new("B2(4,6/25)", bound_b2(4, 6.0 / 25.0)?, near(1.4988, FOUR_DECIMALS)));
    out.push(AppendixCheck::new("B2(9,1/3)", bound_b2(9, 1.0 / 3.0)?, near(1.4993, FOUR_DECIMALS)));
    out.push(AppendixCheck::new(
        "f(0.999999,5,1)",
        f(0.999_999, 5, 1)?,
        Expect::Between { lo: 0.0, hi: 1e-5 },
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(k: usize, n: usize, m: f64) -> GapReport<f64> {
        gap_report(&SystemParams::new(k, n, m).unwrap()).unwrap()
    }

    #[test]
    fn tightness_flags() {
        let r = report(2, 2, 1.0);
        assert!(r.tight_upper && !r.tight_lower);
        assert!((r.ratio - 1.5).abs() < 1e-12);
        let r = report(10, 2, 0.4);
        assert!(r.tight_lower && !r.tight_upper);
        assert_eq!(r.case, PiecewiseCase::C);
        assert!((r.ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_matches_summary() {
        let grid = SweepGrid {
            users: 2..=12,
            files: 1..=6,
            memory_steps: 20,
        };
        let reports = sweep_gap::<f64>(&grid).unwrap();
        assert_eq!(reports.len(), grid.len());
        assert!(reports.windows(2).all(|w| {
            (w[0].users, w[0].files, w[0].memory) < (w[1].users, w[1].files, w[1].memory)
        }));
        let summary = sweep_summary::<f64>(&grid).unwrap();
        assert_eq!(summary, SweepSummary::of(&reports));
        assert_eq!(summary.argmax, (2, 2, 1.0));
        assert!((summary.max_ratio - 1.5).abs() < 1e-12);
        assert_eq!(
            summary.tight_upper,
            (2..=6).map(|n| (2, n, n as f64 / 2.0)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_precision_sweep() {
        let grid = SweepGrid {
            users: 2..=8,
            files: 1..=4,
            memory_steps: 10,
        };
        let summary = sweep_summary::<f32>(&grid).unwrap();
        assert!(summary.min_ratio >= 1.0 - 1e-4 && summary.max_ratio <= 1.5 + 1e-4);
    }

    #[test]
    fn switch_threshold_for_small_memory() {
        let k0 = branch_switch_users(4, 0.5).unwrap();
        let at = |k| {
            let p = SystemParams::<f64>::new(k, 4, 0.5).unwrap();
            (centralized_rate(&p), decentralized_rate(&p))
        };
        let (rc, rd) = at(k0);
        assert!((rc - 3.5).abs() < 1e-12 && (rd - 3.5).abs() < 1e-12);
        // the threshold is sufficient, not minimal; K = 11 still differs
        assert_eq!(k0, 13);
        let (rc, rd) = at(11);
        assert!(rd > rc + 0.1);
        assert_eq!(branch_switch_users(4, 2.0), None);
    }

    #[test]
    fn limit_examples() {
        let r = limit_check(4, 2.0, &[10, 100, 1000], 0.01).unwrap();
        assert!(r.pass);
        assert!((r.ratios[2].1 - 1.0).abs() < 0.01);
        assert!(r.switch_users.is_none());
        let r = limit_check(4, 0.5, &[10, 100, 1000], 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(limit_check(4, 4.0, &[10], 0.1).is_err());
    }

    #[test]
    fn appendix_table_passes() {
        for c in appendix_checks().unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn grid_checks_pass_at_coarse_density() {
        assert!(check_curve_ordering(20, 30).unwrap().pass);
        assert!(check_curve_ratio(20, 30).unwrap().pass);
        assert!(check_f_nonnegative(50, 12).unwrap().pass);
        assert!(check_f_g_h_chain(200, 12).unwrap().pass);
        assert!(check_l_identity(500, 100, 3).unwrap().pass);
        assert!(check_l_below_three_halves(0.01, 20).unwrap().pass);
        assert!(check_bound_monotonicity(50, 20).unwrap().pass);
    }
}
