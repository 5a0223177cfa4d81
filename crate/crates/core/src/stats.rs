//! Distribution tails, long-run variances and goodness-of-fit helpers.

use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::standard()
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Upper tail `1 − Φ(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_pdf(x: f64) -> f64 {
    std_normal().pdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Two-sided p-value `2(1 − Φ(|z|))`; NaN maps to NaN.
pub fn two_sided_p(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    (2.0 * normal_sf(z.abs())).min(1.0)
}

/// `P(χ²_df > x)`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(df).expect("positive degrees of freedom").sf(x).clamp(0.0, 1.0)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Bandwidth `⌊1.2 N^{1/3}⌋`.
pub fn default_bandwidth(n: usize) -> usize {
    (1.2 * (n as f64).cbrt()).floor() as usize
}

/// Bartlett-kernel long-run variance of `x` with `lags` autocovariances:
/// `γ₀ + 2 Σ_{j≤L} (1 − j/(L+1)) γ_j`, with `γ_j = (1/N) Σ (x_t − x̄)(x_{t−j} − x̄)`.
pub fn bartlett_lrv(x: &[f64], lags: usize) -> f64 {
    let n = x.len();
    let m = mean(x);
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let gamma = |j: usize| d[j..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    let mut v = gamma(0);
    for j in 1..=lags.min(n.saturating_sub(1)) {
        v += 2.0 * (1.0 - j as f64 / (lags as f64 + 1.0)) * gamma(j);
    }
    v
}

/// Kolmogorov distribution tail `P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test against `cdf`. Returns `(D, p)` using
/// Stephens' small-sample correction of the asymptotic tail.
pub fn ks_test(x: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut v: Vec<f64> = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, xi) in v.iter().enumerate() {
        let f = cdf(*xi);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_reference_points() {
        // Φ̄ from erfc tables.
        let refs = [
            (0.0, 0.5),
            (1.0, 0.158_655_253_931_457_05),
            (1.959_963_984_540_054, 0.025),
            (2.326_347_874_040_841, 0.01),
            (3.0, 0.001_349_898_031_630_094_6),
            (5.0, 2.866_515_718_791_939e-7),
        ];
        for (x, p) in refs {
            assert!((normal_sf(x) - p).abs() < 1e-10 * p.max(1e-3), "{x}");
        }
    }

    #[test]
    fn chi2_tail_matches_closed_forms() {
        // df = 1: 2Φ̄(√x); df = 2: e^{−x/2}.
        for x in [0.1, 0.5, 1.0, 3.841_458_820_694_124, 6.634_896_601_021_214, 20.0] {
            assert!((chi2_sf(x, 1.0) - 2.0 * normal_sf(x.sqrt())).abs() < 1e-10, "{x}");
            assert!((chi2_sf(x, 2.0) - (-x / 2.0).exp()).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn bartlett_white_noise_bandwidth_zero_is_variance() {
        let x = [1.0, -1.0, 2.0, 0.0, -2.0];
        assert!((bartlett_lrv(&x, 0) - 2.0).abs() < 1e-15);
        assert_eq!(default_bandwidth(1000), 12);
    }

    #[test]
    fn kolmogorov_known_value() {
        // P(K > 1.358) ≈ 0.05.
        assert!((kolmogorov_sf(1.358_098_8) - 0.05).abs() < 1e-6);
    }
}
