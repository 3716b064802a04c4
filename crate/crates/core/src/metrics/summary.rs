use super::MetricReport;
use crate::error::{Error, Result};

/// The eight harmonic-mean inputs: alerting worth mapped from `[-1, 1]` to `[0, 1]`.
pub const HARM_INPUTS: usize = 8;

fn harm_inputs(r: &MetricReport) -> [f64; HARM_INPUTS] {
    [
        r.ndcg,
        (r.aw_hc + 1.0) / 2.0,
        (r.aw_a + 1.0) / 2.0,
        r.perr_h,
        r.perr_a,
        r.cf1_h,
        r.cf1_a,
        r.cacc,
    ]
}

/// Harmonic mean of the eight metrics (the `harm` field itself is ignored).
/// Zero if any input is zero.
pub fn harm(r: &MetricReport) -> f64 {
    let v = harm_inputs(r);
    if v.iter().any(|&x| x <= 0.0) {
        return 0.0;
    }
    HARM_INPUTS as f64 / v.iter().map(|x| 1.0 / x).sum::<f64>()
}

fn wilson_lower(successes: u64, trials: u64, z: f64) -> f64 {
    if successes == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

/// Wilson score interval for a binomial proportion. The upper bound is
/// computed as the reflection of the lower bound for the complementary
/// count, so `(s, n)` and `(n - s, n)` mirror each other exactly.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Domain("Wilson interval needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::Domain(format!("{successes} successes out of {trials} trials")));
    }
    let lower = wilson_lower(successes, trials, z);
    let upper = 1.0 - wilson_lower(trials - successes, trials, z);
    Ok((lower, upper))
}

/// True when the two proportions' Wilson intervals do not overlap.
pub fn confident_difference(a: (u64, u64), b: (u64, u64), z: f64) -> Result<bool> {
    let (al, au) = wilson_interval(a.0, a.1, z)?;
    let (bl, bu) = wilson_interval(b.0, b.1, z)?;
    Ok(au < bl || bu < al)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_inputs() {
        let r = MetricReport::from_parts(0.4, -0.2, -0.2, 0.4, 0.4, 0.4, 0.4, 0.4);
        assert!((r.harm - 0.4).abs() < 1e-12);
    }

    #[test]
    fn wilson_closed_form() {
        let (lo, hi) = wilson_interval(10, 10, 1.96).unwrap();
        assert_eq!(hi, 1.0);
        // Independent evaluation of the lower bound at p = 1.
        let z2: f64 = 1.96 * 1.96;
        let want = (1.0 + z2 / 20.0 - 1.96 * (z2 / 400.0f64).sqrt()) / (1.0 + z2 / 10.0);
        assert!((lo - want).abs() < 1e-12);
        let (lo, hi) = wilson_interval(5, 10, 1.96).unwrap();
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-15);
        let (a, b) = wilson_interval(0, 7, 1.96).unwrap();
        let (c, d) = wilson_interval(7, 7, 1.96).unwrap();
        assert_eq!(a, 1.0 - d);
        assert_eq!(b, 1.0 - c);
        assert!(wilson_interval(0, 0, 1.96).is_err());
        assert!(wilson_interval(4, 3, 1.96).is_err());
    }

    #[test]
    fn confidence_flag() {
        assert!(confident_difference((900, 1000), (800, 1000), 1.96).unwrap());
        assert!(!confident_difference((51, 100), (50, 100), 1.96).unwrap());
    }
}
