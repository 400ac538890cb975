//! Binomial estimates and the replica fan-out used by every estimator.

use rayon::prelude::*;

use crate::seeding::{self, StreamRng};

/// A Monte Carlo proportion.
///
/// `std_err` is one binomial standard error of `value`; every "± kσ" check
/// in the crate is phrased in multiples of it. For rejection-sampled
/// estimates `trials` counts accepted proposals and `proposals` all of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub successes: u64,
    pub trials: u64,
    pub proposals: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        Self::conditional(successes, trials, trials)
    }

    pub fn conditional(successes: u64, trials: u64, proposals: u64) -> Self {
        let (value, std_err) = if trials == 0 {
            (f64::NAN, f64::NAN)
        } else {
            let p = successes as f64 / trials as f64;
            (p, (p * (1.0 - p) / trials as f64).sqrt())
        };
        Self {
            value,
            std_err,
            successes,
            trials,
            proposals,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.trials as f64 / self.proposals as f64
        }
    }

    /// Standard error evaluated at a reference proportion instead of the
    /// observed one; avoids a zero width when the estimate sits at 0 or 1.
    pub fn std_err_at(&self, p: f64) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            (p * (1.0 - p) / self.trials as f64).sqrt()
        }
    }

    /// Wilson score interval at `z` standard deviations.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        wilson_interval(self.successes, self.trials, z)
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Pearson correlation of two 0/1 series, `None` when either is constant.
pub fn indicator_correlation(a: &[bool], b: &[bool]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as u8 as f64, y as u8 as f64);
        sa += x;
        sb += y;
        sab += x * y;
    }
    let (pa, pb) = (sa / n, sb / n);
    let cov = sab / n - pa * pb;
    let var = pa * (1.0 - pa) * pb * (1.0 - pb);
    if var <= 0.0 {
        None
    } else {
        Some(cov / var.sqrt())
    }
}

/// Random stream of replica `index` within the computation named by `path`.
pub fn replica_rng(seed: u64, path: &[u64], index: u64) -> StreamRng {
    let mut key = Vec::with_capacity(path.len() + 2);
    key.push(seeding::tag::REPLICA);
    key.extend_from_slice(path);
    key.push(index);
    seeding::stream(seed, &key)
}

/// Seed of replica `index` for objects that derive their own sub-streams.
pub fn replica_seed(seed: u64, path: &[u64], index: u64) -> u64 {
    let mut key = Vec::with_capacity(path.len() + 2);
    key.push(seeding::tag::REPLICA);
    key.extend_from_slice(path);
    key.push(index);
    seeding::derive(seed, &key)
}

/// Runs `n` replicas in parallel and returns their results in replica order.
pub fn replicate<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Runs `n` replicas in parallel and counts those returning `true`.
pub fn count<F>(n: u64, f: F) -> u64
where
    F: Fn(u64) -> bool + Sync + Send,
{
    (0..n).into_par_iter().filter(|&i| f(i)).count() as u64
}

/// Formats `x` with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// Probabilities are printed with six significant digits.
pub fn fmt_prob(x: f64) -> String {
    fmt_sig(x, 6)
}

/// Times and rates are printed with nine significant digits.
pub fn fmt_time(x: f64) -> String {
    fmt_sig(x, 9)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.143342976, 6), "1.14334");
        assert_eq!(fmt_sig(0.5, 6), "0.5");
        assert_eq!(fmt_sig(123456789.0, 9), "123456789");
        assert_eq!(fmt_sig(1.0e-7, 6), "1e-7");
        assert_eq!(fmt_sig(-2.5e12, 3), "-2.5e12");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(9.9999999, 3), "10");
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.0);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 100, 1.0);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn correlation_of_identical_series_is_one() {
        let a = [true, false, true, true, false];
        assert!((indicator_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(indicator_correlation(&[true; 4], &a[..4]).is_none());
    }

    #[test]
    fn replica_fanout_is_ordered() {
        let v = replicate(100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
        assert_eq!(count(100, |i| i % 3 == 0), 34);
    }
}
