//! The three subcommands. Each returns the rendered output plus a pass flag;
//! nothing here touches stdout or the process exit code.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use cclab::centralized::{choose_branch, place_memory_shared, Branch, CentralizedSystem};
use cclab::decentralized::{
    compute_v_segments, decode_decentralized, deliver_best_decentralized, place_decentralized,
    RlcConfig,
};
use cclab::gap::{
    appendix_checks, check_bound_monotonicity, check_curve_ordering, check_curve_ratio,
    check_f_g_h_chain, check_f_nonnegative, check_l_below_three_halves, check_l_identity,
    limit_check, AppendixCheck, Expect, GridCheck, LimitReport, SweepGrid, SweepSummary,
};
use cclab::subsets::binomial;
use cclab::{
    centralized_rate, decentralized_rate, gap_ratio, uncoded_rate, DemandVector, FileLibrary,
    Params, RateError, SchemeError,
};

use crate::args::{Format, Grid, RateArgs, Scheme, SimulateArgs, VerifyArgs};
use crate::values::{parse_counts, parse_reals, LimitSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::BoundViolation { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        match e {
            SchemeError::DecodeFailure { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Rendered output of a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    /// Printed to stderr.
    pub warnings: Vec<String>,
    /// `false` maps to exit status 1.
    pub ok: bool,
}

fn render<T: Serialize>(rows: &[T], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv | Format::Text => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Failed(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
        Format::Json => json(&rows),
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Failed(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

struct GridValues {
    users: Vec<usize>,
    files: Vec<usize>,
    memory: Vec<f64>,
}

impl GridValues {
    fn parse(g: &Grid) -> Result<Self, CliError> {
        let usage = |e: String| CliError::Usage(e);
        Ok(Self {
            users: parse_counts(&g.users).map_err(usage)?,
            files: parse_counts(&g.files).map_err(usage)?,
            memory: parse_reals(&g.memory).map_err(usage)?,
        })
    }

    fn points(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.users.iter().flat_map(move |&k| {
            self.files
                .iter()
                .flat_map(move |&n| self.memory.iter().map(move |&m| (k, n, m)))
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "M")]
    pub memory: f64,
    #[serde(rename = "R_U")]
    pub r_u: f64,
    #[serde(rename = "R_C")]
    pub r_c: f64,
    #[serde(rename = "R_D")]
    pub r_d: f64,
    pub ratio: f64,
    pub piecewise_case: &'static str,
}

pub fn rate_rows(args: &RateArgs) -> Result<Vec<RateRow>, CliError> {
    GridValues::parse(&args.grid)?
        .points()
        .map(|(k, n, m)| {
            let p = Params::new(k, n, m)?;
            let ratio = gap_ratio(&p).map_err(|e| match e {
                RateError::DegenerateRatio => CliError::Usage(format!(
                    "DegenerateRatio: K={k} N={n} M={m}: both rates are zero at M = N"
                )),
                e => e.into(),
            })?;
            Ok(RateRow {
                users: k,
                files: n,
                memory: m,
                r_u: uncoded_rate(&p),
                r_c: centralized_rate(&p),
                r_d: decentralized_rate(&p),
                ratio,
                piecewise_case: p.piecewise_case().label(),
            })
        })
        .collect()
}

pub fn cmd_rate(args: &RateArgs) -> Result<Outcome, CliError> {
    let rows = rate_rows(args)?;
    Ok(Outcome {
        body: render(&rows, args.output.format.unwrap_or(Format::Csv))?,
        warnings: Vec::new(),
        ok: true,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DemandPolicy {
    Exhaustive,
    Distinct,
    Custom(Vec<usize>),
}

/// At most this many demand vectors per configuration.
const MAX_EXHAUSTIVE: usize = 1 << 16;

impl DemandPolicy {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "distinct" => Ok(Self::Distinct),
            _ => {
                let list = s
                    .strip_prefix("custom=")
                    .ok_or_else(|| CliError::Usage(format!("unknown demand policy {s:?}")))?;
                let files = list
                    .split([',', '-'])
                    .map(|d| d.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Usage(format!("bad demand list {list:?}")))?;
                Ok(Self::Custom(files))
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Self::Exhaustive => "exhaustive",
            Self::Distinct => "distinct",
            Self::Custom(_) => "custom",
        }
    }

    fn vectors(&self, users: usize, files: usize) -> Result<Vec<DemandVector>, CliError> {
        match self {
            Self::Distinct => Ok(vec![DemandVector::distinct(users, files)]),
            Self::Exhaustive => {
                let total = files.checked_pow(users as u32).filter(|&t| t <= MAX_EXHAUSTIVE);
                if total.is_none() {
                    return Err(CliError::Usage(format!(
                        "N^K = {files}^{users} demand vectors is too many for exhaustive"
                    )));
                }
                Ok(DemandVector::all(users, files).collect())
            }
            Self::Custom(list) => {
                let d = DemandVector::from_one_based(list, files)?;
                if d.users() != users {
                    return Err(CliError::Usage(format!(
                        "{} demands given for K = {users}",
                        d.users()
                    )));
                }
                Ok(vec![d])
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimRow {
    pub scheme: &'static str,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "M")]
    pub memory: f64,
    #[serde(rename = "F")]
    pub file_bits: usize,
    pub seed: u64,
    /// Policy name with the demand vector, e.g. `distinct(1-2-3)`.
    pub demand_policy: String,
    pub measured_rate: f64,
    pub analytic_rate: f64,
    /// `(measured - analytic) / analytic`, or the plain difference when the
    /// analytic rate is zero.
    pub rel_error: f64,
    pub decode_ok: bool,
}

fn rel_error(measured: f64, analytic: f64) -> f64 {
    if analytic > 0.0 {
        (measured - analytic) / analytic
    } else {
        measured - analytic
    }
}

struct Measured {
    demands: DemandVector,
    rate: f64,
    decode_ok: bool,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// File size the corner scheme needs: a multiple of `C(K,t)` for coded
/// delivery, of `K / gcd(K,t)` for the uncoded prefix split.
fn corner_file_bits(users: usize, files: usize, t: usize, file_bits: usize) -> usize {
    let unit = match choose_branch(users, files, t) {
        Branch::Coded => binomial(users, t) as usize,
        Branch::Uncoded => users / gcd(users, t),
    };
    file_bits.div_ceil(unit) * unit
}

fn run_centralized(
    p: &Params,
    file_bits: usize,
    seed: u64,
    demands: &[DemandVector],
) -> Result<Vec<Measured>, CliError> {
    let library = FileLibrary::random(p.files(), file_bits, seed);
    let geo = p.geometry();
    let users = p.users();
    if geo.is_corner() {
        let system = CentralizedSystem::place(&library, users, geo.s)?;
        demands
            .iter()
            .map(|d| {
                let t = system.deliver(d)?;
                let decode_ok = (0..users).all(|k| {
                    system.decode(k, &t, d).is_ok_and(|w| &w == library.file(d.of(k)))
                });
                Ok(Measured {
                    demands: d.clone(),
                    rate: t.measured_rate(),
                    decode_ok,
                })
            })
            .collect()
    } else {
        let system = place_memory_shared(&library, p)?;
        demands
            .iter()
            .map(|d| {
                let t = system.deliver(d)?;
                let decode_ok = (0..users).all(|k| {
                    system.decode(k, &t, d).is_ok_and(|w| &w == library.file(d.of(k)))
                });
                Ok(Measured {
                    demands: d.clone(),
                    rate: t.measured_rate(),
                    decode_ok,
                })
            })
            .collect()
    }
}

fn run_decentralized(
    p: &Params,
    seed: u64,
    demands: &[DemandVector],
    config: RlcConfig,
) -> Result<Vec<Measured>, CliError> {
    let library = FileLibrary::random(p.files(), p.file_bits(), seed);
    let caches = place_decentralized(&library, p, seed)?;
    demands
        .iter()
        .map(|d| {
            let v = compute_v_segments(&caches, d)?;
            let best = deliver_best_decentralized(&library, &caches, &v, config)?;
            let decode_ok = (0..p.users()).all(|k| {
                decode_decentralized(k, &caches, &v, &best.transcript)
                    .is_ok_and(|w| &w == library.file(d.of(k)))
            });
            Ok(Measured {
                demands: d.clone(),
                rate: best.transcript.measured_rate(),
                decode_ok,
            })
        })
        .collect()
}

pub fn simulate_rows(args: &SimulateArgs) -> Result<(Vec<SimRow>, Vec<String>), CliError> {
    if args.file_bits == 0 {
        return Err(CliError::Usage("F must be positive".into()));
    }
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if args.block_bits == 0 {
        return Err(CliError::Usage("--block-bits must be positive".into()));
    }
    let policy = DemandPolicy::parse(&args.demands)?;
    let grid = GridValues::parse(&args.grid)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed.wrapping_add(i)).collect();
    let config = RlcConfig {
        block_bits: args.block_bits,
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (k, n, m) in grid.points() {
        let p = Params::new(k, n, m)?;
        let demands = policy.vectors(k, n)?;
        let (scheme, f, analytic) = match args.scheme {
            Scheme::Centralized => {
                let geo = p.geometry();
                let f = if geo.is_corner() {
                    corner_file_bits(k, n, geo.s, args.file_bits)
                } else if args.memory_sharing {
                    args.file_bits
                } else {
                    return Err(SchemeError::NonCornerMemory(geo.t).into());
                };
                if f != args.file_bits {
                    warnings.push(format!(
                        "warning: K={k} N={n} M={m}: F padded from {} to {f} bits for an even split",
                        args.file_bits
                    ));
                }
                ("centralized", f, centralized_rate(&p))
            }
            Scheme::Decentralized => ("decentralized", args.file_bits, decentralized_rate(&p)),
        };
        let p = p.with_file_bits(f)?;
        let per_seed: Vec<Vec<Measured>> = seeds
            .par_iter()
            .map(|&seed| match args.scheme {
                Scheme::Centralized => run_centralized(&p, f, seed, &demands),
                Scheme::Decentralized => run_decentralized(&p, seed, &demands, config),
            })
            .collect::<Result<_, _>>()?;
        for (&seed, runs) in seeds.iter().zip(per_seed) {
            for r in runs {
                rows.push(SimRow {
                    scheme,
                    users: k,
                    files: n,
                    memory: m,
                    file_bits: f,
                    seed,
                    demand_policy: format!("{}({})", policy.name(), r.demands),
                    measured_rate: r.rate,
                    analytic_rate: analytic,
                    rel_error: rel_error(r.rate, analytic),
                    decode_ok: r.decode_ok,
                });
            }
        }
    }
    Ok((rows, warnings))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let (rows, mut warnings) = simulate_rows(args)?;
    let mut ok = true;
    if let Some(bad) = rows.iter().find(|r| !r.decode_ok) {
        ok = false;
        warnings.push(format!(
            "error: decode failed at K={} N={} M={} seed={} demands {}",
            bad.users, bad.files, bad.memory, bad.seed, bad.demand_policy
        ));
    }
    if let Some(tol) = args.tolerance {
        for chunk in rows.chunk_by(|a, b| (a.users, a.files, a.memory) == (b.users, b.files, b.memory)) {
            let mean = chunk.iter().map(|r| r.rel_error).sum::<f64>() / chunk.len() as f64;
            if mean.abs() > tol {
                ok = false;
                warnings.push(format!(
                    "error: mean rel_error {mean:.6} exceeds {tol} at K={} N={} M={}",
                    chunk[0].users, chunk[0].files, chunk[0].memory
                ));
            }
        }
    }
    Ok(Outcome {
        body: render(&rows, args.output.format.unwrap_or(Format::Csv))?,
        warnings,
        ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub max_users: usize,
    pub max_files: usize,
    pub memory_steps: usize,
    pub summary: SweepSummary,
    /// Every ratio in `[1 - 1e-9, 1.5 + 1e-9]`.
    pub bounds_pass: bool,
    /// The maximum 1.5 occurs exactly at `K = 2, M = N/2, N >= 2`.
    pub tight_upper_pass: bool,
    /// Case-C points have ratio 1 within `1e-9`.
    pub tight_lower_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub sweep: Option<SweepResult>,
    pub grid_checks: Vec<GridCheck>,
    pub appendix: Vec<AppendixCheck>,
    pub limits: Vec<LimitReport>,
    pub pass: bool,
}

/// Slack on the `[1, 1.5]` bound and on case-C equality.
pub const BOUND_TOL: f64 = 1e-9;

pub fn run_sweep(max_users: usize, max_files: usize, memory_steps: usize) -> Result<SweepResult, CliError> {
    if max_users < 2 || max_files < 1 || memory_steps < 2 {
        return Err(CliError::Usage("sweep grid is empty".into()));
    }
    let grid = SweepGrid {
        users: 2..=max_users,
        files: 1..=max_files,
        memory_steps,
    };
    let summary = cclab::gap::sweep_summary::<f64>(&grid)?;
    let bounds_pass = summary.min_ratio >= 1.0 - BOUND_TOL && summary.max_ratio <= 1.5 + BOUND_TOL;
    let expected: Vec<(usize, usize, f64)> = if memory_steps.is_multiple_of(2) {
        (2..=max_files).map(|n| (2, n, n as f64 / 2.0)).collect()
    } else {
        Vec::new()
    };
    let tight_upper_pass = summary.tight_upper == expected
        && (expected.is_empty() || (summary.max_ratio - 1.5).abs() <= BOUND_TOL);
    let tight_lower_pass = summary.case_c_max_deviation <= BOUND_TOL;
    Ok(SweepResult {
        max_users,
        max_files,
        memory_steps,
        summary,
        bounds_pass,
        tight_upper_pass,
        tight_lower_pass,
    })
}

/// Cached-fraction grid: `q = j / 100`, `K <= 200`.
const Q_STEPS: usize = 100;
const CURVE_MAX_USERS: usize = 200;
const F_MAX_N: usize = 50;
const CHAIN_MAX_N: usize = 30;
const IDENTITY_SAMPLES: usize = 10_000;
const IDENTITY_SEED: u64 = 2024;
const L_STEP: f64 = 1e-3;
const L_MAX_N: usize = 100;
const BOUND_MAX_USERS: usize = 50;

pub fn run_grid_checks(theta_steps: usize) -> Result<Vec<GridCheck>, CliError> {
    Ok(vec![
        check_curve_ordering(Q_STEPS, CURVE_MAX_USERS)?,
        check_curve_ratio(Q_STEPS, CURVE_MAX_USERS)?,
        check_f_nonnegative(theta_steps, F_MAX_N)?,
        check_f_g_h_chain(theta_steps, CHAIN_MAX_N)?,
        check_l_identity(IDENTITY_SAMPLES, CURVE_MAX_USERS, IDENTITY_SEED)?,
        check_l_below_three_halves(L_STEP, L_MAX_N)?,
        check_bound_monotonicity(theta_steps, BOUND_MAX_USERS)?,
    ])
}

/// Limit configurations checked by default.
pub fn default_limits() -> Vec<LimitSpec> {
    [(4, 2.0), (10, 3.0), (2, 1.5), (4, 0.5)]
        .into_iter()
        .map(|(files, memory)| LimitSpec {
            files,
            memory,
            max_users: 100_000,
            eps: 1e-3,
        })
        .collect()
}

pub fn run_limit(spec: &LimitSpec) -> Result<LimitReport, CliError> {
    Ok(limit_check(spec.files, spec.memory, &spec.users(), spec.eps)?)
}

pub fn verify_report(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport {
        sweep: None,
        grid_checks: Vec::new(),
        appendix: Vec::new(),
        limits: Vec::new(),
        pass: true,
    };
    if let Some(spec) = &args.limit {
        report.limits.push(run_limit(spec)?);
    } else if args.appendix {
        report.appendix = appendix_checks()?;
    } else {
        report.sweep = Some(run_sweep(args.max_users, args.max_files, args.memory_steps)?);
        report.grid_checks = run_grid_checks(args.theta_steps)?;
        report.appendix = appendix_checks()?;
        report.limits = default_limits().iter().map(run_limit).collect::<Result<_, _>>()?;
    }
    report.pass = report
        .sweep
        .as_ref()
        .is_none_or(|s| s.bounds_pass && s.tight_upper_pass && s.tight_lower_pass)
        && report.grid_checks.iter().all(|c| c.pass)
        && report.appendix.iter().all(|c| c.pass)
        && report.limits.iter().all(|l| l.pass);
    Ok(report)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn fmt_value(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-3 {
        format!("{v:.6e}")
    } else {
        format!("{v:.9}")
    }
}

pub fn render_verify_text(r: &VerifyReport) -> String {
    let mut out = String::new();
    if let Some(s) = &r.sweep {
        let m = &s.summary;
        let _ = writeln!(
            out,
            "sweep K=2..{} N=1..{} M=N*j/{}: {} points",
            s.max_users, s.max_files, s.memory_steps, m.points
        );
        let _ = writeln!(
            out,
            "  ratio within [1, 1.5] (slack {BOUND_TOL:e}): {}",
            verdict(s.bounds_pass)
        );
        let _ = writeln!(
            out,
            "  ratio 1.5 only at K=2, M=N/2, N>=2 ({} points): {}",
            m.tight_upper.len(),
            verdict(s.tight_upper_pass)
        );
        let _ = writeln!(
            out,
            "  case C ratio = 1 ({} points, max deviation {:.3e}): {}",
            m.case_c_points,
            m.case_c_max_deviation,
            verdict(s.tight_lower_pass)
        );
    }
    for c in &r.grid_checks {
        let _ = writeln!(
            out,
            "check {}: {} points, worst excess {:.3e} at {}: {}",
            c.name,
            c.points,
            c.worst,
            c.worst_at,
            verdict(c.pass)
        );
    }
    for a in &r.appendix {
        let expect = match a.expect {
            Expect::Near { target, tol } => format!("target {target} +- {tol:e}"),
            Expect::Between { lo, hi } => format!("expected in ({lo}, {hi:e})"),
        };
        let _ = writeln!(
            out,
            "appendix {} = {}, {}: {}",
            a.name,
            fmt_value(a.value),
            expect,
            verdict(a.pass)
        );
    }
    for l in &r.limits {
        let (k, ratio) = l.ratios.last().copied().unwrap_or((0, f64::NAN));
        let _ = write!(
            out,
            "limit N={} M={:?}: ratio {:.9} at K={}, eps {}",
            l.files, l.memory, ratio, k, l.eps
        );
        if let (Some(k0), Some(dev)) = (l.switch_users, l.switch_max_deviation) {
            let _ = write!(out, "; R_D = R_C from K={k0} (max deviation {dev:.3e})");
        }
        let _ = writeln!(out, ": {}", verdict(l.pass));
    }
    if let Some(s) = &r.sweep {
        let m = &s.summary;
        let _ = writeln!(
            out,
            "max ratio {:.6} at K={} N={} M={:?}; min ratio {:.6}",
            m.max_ratio, m.argmax.0, m.argmax.1, m.argmax.2, m.min_ratio
        );
    }
    let _ = writeln!(out, "verify: {}", verdict(r.pass));
    out
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let report = verify_report(args)?;
    let body = match args.output.format.unwrap_or(Format::Text) {
        Format::Json => json(&report)?,
        Format::Text => render_verify_text(&report),
        Format::Csv => {
            return Err(CliError::Usage("verify writes text or json".into()));
        }
    };
    Ok(Outcome {
        body,
        warnings: Vec::new(),
        ok: report.pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_policies() {
        assert_eq!(DemandPolicy::parse("distinct").unwrap(), DemandPolicy::Distinct);
        assert_eq!(
            DemandPolicy::parse("custom=1,2,1").unwrap(),
            DemandPolicy::Custom(vec![1, 2, 1])
        );
        assert!(DemandPolicy::parse("random").is_err());
        assert_eq!(DemandPolicy::Exhaustive.vectors(3, 2).unwrap().len(), 8);
        assert!(DemandPolicy::Exhaustive.vectors(20, 10).is_err());
        assert!(DemandPolicy::Custom(vec![1, 2]).vectors(3, 2).is_err());
        assert!(DemandPolicy::Custom(vec![1, 3]).vectors(2, 2).is_err());
    }

    #[test]
    fn corner_padding() {
        assert_eq!(corner_file_bits(3, 3, 1, 300), 300);
        assert_eq!(corner_file_bits(4, 4, 2, 100), 102);
        // uncoded branch at K=10, N=2, t=1: needs 10 | F
        assert_eq!(corner_file_bits(10, 2, 1, 95), 100);
    }

    #[test]
    fn error_mapping() {
        assert_eq!(CliError::from(RateError::DegenerateRatio).exit_code(), 2);
        let v = RateError::BoundViolation {
            users: 2,
            files: 2,
            memory: 1.0,
            ratio: 2.0,
        };
        assert_eq!(CliError::from(v).exit_code(), 1);
        assert_eq!(CliError::from(SchemeError::NonCornerMemory(1.5)).exit_code(), 2);
    }
}
