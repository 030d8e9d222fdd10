use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Type-7 quantile of already-sorted, nonempty data.
pub(crate) fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Order-statistic quantile with linear interpolation between closest ranks.
pub fn empirical_quantile(samples: &[f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("quantile of empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("quantile level {q} outside [0, 1]")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&sorted, q))
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00, 3.754408661907416e+00];
const P_LOW: f64 = 0.02425;

/// Standard normal quantile: rational approximation followed by one Halley
/// correction step against `erfc`.
pub fn inverse_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability {p} outside (0, 1)")));
    }
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    Ok(x - u / (1.0 + x * u / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_examples() {
        let s = [5.0, 3.0, 1.0, 2.0, 4.0];
        assert_eq!(empirical_quantile(&s, 0.5).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&s, 1.0).unwrap(), 5.0);
        assert_eq!(empirical_quantile(&s, 0.0).unwrap(), 1.0);
        // ranks 1 and 2 of {10, 20}: h = 0.25 → 10 + 0.25·10
        assert_abs_diff_eq!(empirical_quantile(&[10.0, 20.0], 0.25).unwrap(), 12.5);
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&s, 1.5).is_err());
    }

    #[test]
    fn inverse_normal_examples() {
        assert_abs_diff_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inverse_normal_cdf(0.95).unwrap(), 1.6449, epsilon = 1e-4);
        assert_abs_diff_eq!(inverse_normal_cdf(0.975).unwrap(), 1.9600, epsilon = 1e-4);
        assert!(inverse_normal_cdf(0.0).is_err());
        assert!(inverse_normal_cdf(1.0).is_err());
        assert!(inverse_normal_cdf(f64::NAN).is_err());
    }

    /// Round trip through the CDF, and agreement with bisection on the CDF.
    #[test]
    fn inverse_normal_accuracy() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let x = inverse_normal_cdf(p).unwrap();
            let (mut lo, mut hi) = (-40.0f64, 40.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if normal_cdf(mid) < p {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((x - 0.5 * (lo + hi)).abs() <= 1e-8, "p={p}: {x} vs {}", 0.5 * (lo + hi));
        }
        for p in [1e-10, 1e-6, 1e-3, 1.0 - 1e-6] {
            let x = inverse_normal_cdf(p).unwrap();
            assert!((normal_cdf(x) - p).abs() <= 1e-8 * p.min(1.0 - p).max(1e-12) * 1e3);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quantile_monotone(data in proptest::collection::vec(-1.0f64..1.0, 1..60), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(empirical_quantile(&data, lo).unwrap() <= empirical_quantile(&data, hi).unwrap());
            }
        }
    }
}
