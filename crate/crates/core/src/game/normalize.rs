//! Rescaling of real-valued potential tables to non-negative integers.
//!
//! Tables whose entries are rationals with a bounded common denominator are
//! scaled by that denominator, which keeps every potential difference
//! proportional and so leaves best and better responses untouched. Other
//! inputs fall back to scaling by the inverse of the smallest gap between
//! distinct values followed by flooring, which preserves the order of the
//! entries but not necessarily sums of differences.

use super::GameError;

const MAX_DENOMINATOR: u64 = 1_000_000;
const MAX_SCALE: u64 = 1_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub tables: Vec<Vec<Vec<i64>>>,
    /// Integer factor every entry was multiplied by.
    pub scale: u64,
    /// Amount subtracted after scaling so that the smallest entry is 0.
    pub shift: i64,
    /// False when the gap-based fallback was used.
    pub exact: bool,
}

pub fn normalize_tables(tables: &[Vec<Vec<f64>>]) -> Result<Normalized, GameError> {
    let values = || tables.iter().flatten().flatten().copied();
    if let Some(bad) = values().find(|x| !x.is_finite()) {
        return Err(GameError::NonFinite(bad));
    }

    let exact_scale = values().try_fold(1u64, |acc, x| {
        let den = denominator(x, MAX_DENOMINATOR)?;
        let l = lcm(acc, den);
        (l <= MAX_SCALE).then_some(l)
    });

    let (scale, scaled): (u64, Vec<Vec<Vec<i64>>>) = match exact_scale {
        Some(k) => (k, map_tables(tables, |x| (x * k as f64).round() as i64)),
        None => {
            let mut distinct: Vec<f64> = values().collect();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let gap = distinct
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min);
            let k = if gap.is_finite() {
                (1.0 / gap).ceil().max(1.0) as u64
            } else {
                1
            };
            (k, map_tables(tables, |x| (x * k as f64).floor() as i64))
        }
    };

    let shift = scaled
        .iter()
        .flatten()
        .flatten()
        .copied()
        .min()
        .unwrap_or(0);
    let tables = scaled
        .into_iter()
        .map(|t| {
            t.into_iter()
                .map(|r| r.into_iter().map(|x| x - shift).collect())
                .collect()
        })
        .collect();
    Ok(Normalized {
        tables,
        scale,
        shift,
        exact: exact_scale.is_some(),
    })
}

fn map_tables(tables: &[Vec<Vec<f64>>], f: impl Fn(f64) -> i64) -> Vec<Vec<Vec<i64>>> {
    tables
        .iter()
        .map(|t| {
            t.iter()
                .map(|r| r.iter().map(|&x| f(x)).collect())
                .collect()
        })
        .collect()
}

/// Smallest denominator of a continued-fraction convergent within
/// tolerance of `x`, if one exists below `max_den`.
fn denominator(x: f64, max_den: u64) -> Option<u64> {
    // below 1/max_den², so irrationals cannot sneak in through a good convergent
    let tol = 1e-13 * x.abs().max(1.0);
    let (mut h_prev, mut h) = (0.0_f64, 1.0_f64);
    let (mut k_prev, mut k) = (1.0_f64, 0.0_f64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        (h_prev, h) = (h, a * h + h_prev);
        (k_prev, k) = (k, a * k + k_prev);
        if k > max_den as f64 {
            return None;
        }
        if (x - h / k).abs() <= tol {
            return Some(k as u64);
        }
        let frac = rest - a;
        if frac == 0.0 {
            return None;
        }
        rest = 1.0 / frac;
    }
    None
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
