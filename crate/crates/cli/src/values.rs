//! Parsing of single values and `a:b:step` ranges.

use std::str::FromStr;

/// Decimal places written in a numeric literal.
fn decimals(s: &str) -> i32 {
    s.split_once('.').map_or(0, |(_, frac)| frac.len() as i32)
}

/// `"1.5"` or `"0.25:2:0.25"` (inclusive). Range points are rounded to the
/// precision of the literals so that `0.1:0.3:0.1` yields `0.3`, not
/// `0.30000000000000004`.
pub fn parse_reals(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("not a number: {p:?}"))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (lo, hi, st) = (num(a)?, num(b)?, num(step)?);
            if st <= 0.0 || hi < lo {
                return Err(format!("empty range {s:?}"));
            }
            let scale = 10f64.powi(decimals(a).max(decimals(step)).min(12));
            let count = ((hi - lo) / st + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|i| ((lo + i as f64 * st) * scale).round() / scale)
                .collect())
        }
        _ => Err(format!("expected a value or a:b:step, got {s:?}")),
    }
}

/// Integer counterpart of [`parse_reals`].
pub fn parse_counts(s: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| {
        usize::from_str(p.trim()).map_err(|_| format!("not a non-negative integer: {p:?}"))
    };
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [a, b, step] => {
            let (lo, hi, st) = (num(a)?, num(b)?, num(step)?);
            if st == 0 || hi < lo {
                return Err(format!("empty range {s:?}"));
            }
            Ok((lo..=hi).step_by(st).collect())
        }
        _ => Err(format!("expected a value or a:b:step, got {s:?}")),
    }
}

/// `"N=4 M=2 Kmax=100000 eps=0.001"`; keys may come in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitSpec {
    pub files: usize,
    pub memory: f64,
    pub max_users: usize,
    pub eps: f64,
}

impl FromStr for LimitSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (mut files, mut memory, mut max_users, mut eps) = (None, None, None, None);
        for item in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {item:?}"))?;
            let bad = || format!("bad value in {item:?}");
            match key {
                "N" => files = Some(value.parse().map_err(|_| bad())?),
                "M" => memory = Some(value.parse().map_err(|_| bad())?),
                "Kmax" => max_users = Some(value.parse().map_err(|_| bad())?),
                "eps" => eps = Some(value.parse().map_err(|_| bad())?),
                _ => return Err(format!("unknown key {key:?}")),
            }
        }
        Ok(Self {
            files: files.ok_or("missing N")?,
            memory: memory.ok_or("missing M")?,
            max_users: max_users.ok_or("missing Kmax")?,
            eps: eps.unwrap_or(1e-3),
        })
    }
}

impl LimitSpec {
    /// `2, 10, 100, ...` below `Kmax`, then `Kmax` itself.
    pub fn users(&self) -> Vec<usize> {
        let mut out = vec![2];
        let mut k = 10;
        while k < self.max_users {
            out.push(k);
            k = k.saturating_mul(10);
        }
        if self.max_users > 2 {
            out.push(self.max_users);
        }
        out
    }
}
