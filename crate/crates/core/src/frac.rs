//! Fractional-differencing weights `π_k(d) = (−1)^k binom(d, k)`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

/// Hard cap on the truncation length.
pub const MAX_LAGS: usize = 200;

/// Schedule constants for `K_T = ⌊c T^ζ⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSchedule {
    pub c: f64,
    pub zeta: f64,
    pub tail_tol: f64,
    pub cap: usize,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        Self { c: 10.0, zeta: 0.4, tail_tol: 1e-6, cap: MAX_LAGS }
    }
}

/// Weights `π_1..π_K` and their derivatives in `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracWeights {
    pub d: f64,
    pub pi: Vec<f64>,
    pub dpi_dd: Vec<f64>,
}

impl FracWeights {
    pub fn lags(&self) -> usize {
        self.pi.len()
    }

    /// `Σ_{k≤K} |π_k|`.
    pub fn abs_sum(&self) -> f64 {
        self.pi.iter().map(|p| p.abs()).sum()
    }

    /// Upper bound on the discarded tail `Σ_{k>K} |π_k|`.
    pub fn tail_bound(&self) -> f64 {
        tail_bound(self.d, self.lags())
    }
}

fn check_order(d: f64) -> Result<()> {
    if d > 0.0 && d < 0.5 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange { d })
    }
}

/// `π_k` by the recurrence `π_k = π_{k−1}(k−1−d)/k`, together with
/// `∂π_k/∂d = ∂π_{k−1}(k−1−d)/k − π_{k−1}/k`. Valid for any real `d`;
/// `d = 0` gives all zeros.
pub fn pi_recurrence(d: f64, lags: usize) -> (Vec<f64>, Vec<f64>) {
    let mut pi = Vec::with_capacity(lags);
    let mut dpi = Vec::with_capacity(lags);
    let (mut p, mut dp) = (1.0, 0.0);
    for k in 1..=lags {
        let kf = k as f64;
        let a = (kf - 1.0 - d) / kf;
        dp = dp * a - p / kf;
        p *= a;
        pi.push(p);
        dpi.push(dp);
    }
    (pi, dpi)
}

/// Fractional weights for `0 < d < 0.5`.
pub fn pi_weights(d: f64, lags: usize) -> Result<FracWeights> {
    check_order(d)?;
    if lags == 0 {
        return Err(Error::InvalidInput("lag count must be at least 1".into()));
    }
    let (pi, dpi_dd) = pi_recurrence(d, lags);
    Ok(FracWeights { d, pi, dpi_dd })
}

/// `∂π_k/∂d` for `k = 1..=lags`.
pub fn pi_weight_grads(d: f64, lags: usize) -> Result<Vec<f64>> {
    Ok(pi_weights(d, lags)?.dpi_dd)
}

/// `π_k` evaluated through gamma functions:
/// `(−1)^k binom(d,k) = Γ(k−d) / (Γ(−d) Γ(k+1))`.
/// Log-gamma is used past `k = 150`, where `Γ(k+1)` approaches overflow.
pub fn pi_gamma(d: f64, k: usize) -> f64 {
    let kf = k as f64;
    if k <= 150 {
        gamma(kf - d) / (gamma(-d) * gamma(kf + 1.0))
    } else {
        let g = gamma(-d);
        g.signum() * (ln_gamma(kf - d) - ln_gamma(kf + 1.0) - g.abs().ln()).exp()
    }
}

/// Discarded tail `Σ_{k>K} |π_k(d)|` for `0 < d < 1`.
///
/// All `π_k` share one sign and sum to −1, so the tail equals
/// `1 − Σ_{k≤K}|π_k| = Π_{k≤K} (1 − d/k) = Γ(K+1−d)/(Γ(1−d)Γ(K+1))`,
/// which behaves like `K^{−d}/Γ(1−d)`, the integral of the `k^{−(1+d)}`
/// envelope. `d = 0` has no fractional term and a zero tail.
pub fn tail_bound(d: f64, lags: usize) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    (1..=lags).fold(1.0, |acc, k| acc * (1.0 - d / k as f64))
}

/// Result of [`select_truncation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub lags: usize,
    /// Lags from the sample-size schedule alone.
    pub schedule_lags: usize,
    /// Tail bound at `dbar` for the chosen length.
    pub tail: f64,
    /// Whether the tail bound meets the tolerance.
    pub tail_ok: bool,
}

/// `K = max(⌊c T^ζ⌋, smallest K whose tail bound at d̄ is below tail_tol)`,
/// capped at `schedule.cap`.
pub fn select_truncation(t: usize, dbar: f64, schedule: &TruncationSchedule) -> Truncation {
    let base = ((schedule.c * (t as f64).powf(schedule.zeta)).floor() as usize).max(1);
    let cap = schedule.cap.max(1);
    let mut lags = base;
    if schedule.tail_tol.is_finite() && dbar > 0.0 {
        let mut tail = 1.0;
        let mut needed = cap;
        for k in 1..=cap {
            tail *= 1.0 - dbar / k as f64;
            if tail < schedule.tail_tol {
                needed = k;
                break;
            }
        }
        lags = lags.max(needed);
    }
    if schedule.tail_tol.is_finite() {
        lags = lags.min(cap);
    }
    let tail = tail_bound(dbar, lags);
    Truncation { lags, schedule_lags: base, tail, tail_ok: tail < schedule.tail_tol }
}
