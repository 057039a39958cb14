//! Goodness-of-fit machinery shared by the experiment harness:
//! Kolmogorov-Smirnov (one- and two-sample) and chi-square tests, plus
//! small summary helpers. p-values use the asymptotic Kolmogorov
//! distribution with the Stephens small-sample correction.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Survival function of the Kolmogorov distribution,
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS test of `data` against a CDF. Returns `(statistic, p)`.
pub fn ks_test<F: Fn(f64) -> f64>(data: &[f64], cdf: F) -> (f64, f64) {
    assert!(!data.is_empty());
    let mut xs: Vec<f64> = data.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).expect("NaN in KS sample"));
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

/// Two-sample KS test. Returns `(statistic, p)` with the effective sample
/// size `n1 n2 / (n1 + n2)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert!(!a.is_empty() && !b.is_empty());
    let mut xs: Vec<f64> = a.to_vec();
    let mut ys: Vec<f64> = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    ys.sort_by(|p, q| p.partial_cmp(q).expect("NaN in KS sample"));
    let (n1, n2) = (xs.len(), ys.len());
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        let diff = (i as f64 / n1 as f64 - j as f64 / n2 as f64).abs();
        d = d.max(diff);
    }
    let ne = (n1 as f64 * n2 as f64) / (n1 as f64 + n2 as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

/// Chi-square test of observed counts against expected counts.
/// `ddof` extra degrees of freedom to subtract (beyond the usual one for
/// the total). Returns `(statistic, p)`.
pub fn chi_square_test(observed: &[f64], expected: &[f64], ddof: usize) -> (f64, f64) {
    assert_eq!(observed.len(), expected.len());
    assert!(observed.len() > 1 + ddof);
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            assert!(e > 0.0, "expected count must be positive");
            (o - e) * (o - e) / e
        })
        .sum();
    let df = (observed.len() - 1 - ddof) as f64;
    let dist = ChiSquared::new(df).expect("valid degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean.
pub fn stderr_of_mean(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// CDF of the exponential distribution with the given rate.
pub fn exponential_cdf(rate: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-rate * x).exp() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    // Reference values computed independently with scipy.stats
    // (kstest / ks_2samp / chisquare asymptotic modes).
    #[test]
    fn kolmogorov_sf_reference_points() {
        for (lambda, expected) in [
            (0.5, 0.9639452436648751),
            (1.0, 0.26999967167735456),
            (1.5, 0.022217962616525127),
            (2.0, 0.0006709252557796953),
        ] {
            assert!(
                (kolmogorov_sf(lambda) - expected).abs() < 1e-12,
                "lambda={lambda}"
            );
        }
    }

    #[test]
    fn ks_uniform_sample_is_calibrated() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..10_000).map(|_| rng.random_range(0.0..1.0)).collect();
        let (_, p) = ks_test(&data, |x| x.clamp(0.0, 1.0));
        assert!(p > 0.01, "p = {p}");
        // A shifted sample must be rejected decisively.
        let shifted: Vec<f64> = data.iter().map(|x| x * 0.9).collect();
        let (_, p_bad) = ks_test(&shifted, |x| x.clamp(0.0, 1.0));
        assert!(p_bad < 1e-6);
    }

    #[test]
    fn two_sample_ks_accepts_same_law_rejects_shift() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let a: Vec<f64> = (0..2_000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2_000).map(|_| rng.random::<f64>()).collect();
        let (_, p) = ks_two_sample(&a, &b);
        assert!(p > 0.01, "p = {p}");
        let c: Vec<f64> = b.iter().map(|x| x + 0.08).collect();
        let (_, p_bad) = ks_two_sample(&a, &c);
        assert!(p_bad < 1e-4);
    }

    #[test]
    fn chi_square_reference_point() {
        // scipy.stats.chisquare([28, 31, 40, 35]) -> stat 2.417910..., p 0.490309...
        let obs = [28.0, 31.0, 40.0, 35.0];
        let exp = [33.5; 4];
        let (stat, p) = chi_square_test(&obs, &exp, 0);
        assert!((stat - 2.417910447761194).abs() < 1e-12);
        assert!((p - 0.4903093069653883).abs() < 1e-10);
    }

    #[test]
    fn summary_helpers() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        assert_eq!(median(&xs), 2.5);
        assert!((stderr_of_mean(&xs) - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
    }
}
