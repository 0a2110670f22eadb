//! Small summary statistics used by experiments and reports.

use statrs::distribution::{Binomial, DiscreteCDF};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean from the unbiased sample variance; `None`
/// with fewer than two samples.
pub fn std_error(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    Some((var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `wins + losses` fair coin flips (ties are dropped by the caller).
pub fn sign_test_p_value(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 || wins == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    dist.sf(wins - 1)
}
