//! Observable gate inputs built from returns, volume and implied volatility.
//!
//! Row `t` of a [`FeatureMatrix`] uses data up to and including date `t`; a
//! model gate at time `t` reads row `t − 1`. Rows without enough history are
//! stored as `NaN` and reported as unavailable.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical column order of the gate inputs.
pub const FEATURE_NAMES: [&str; 4] = ["abs_ret", "rv20", "iv", "vol_quantile"];

/// Dated daily log-returns with optional volume and implied volatility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub volume: Option<Vec<f64>>,
    pub implied_vol: Option<Vec<f64>>,
}

impl ReturnSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        returns: Vec<f64>,
        volume: Option<Vec<f64>>,
        implied_vol: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = returns.len();
        if dates.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} dates for {n} returns",
                dates.len()
            )));
        }
        if let Some(row) = dates.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonmonotoneDates { row: row + 1 });
        }
        if let Some(t) = returns.iter().position(|r| !r.is_finite() || r.abs() >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "return at index {t} ({}) is not a finite daily log-return",
                returns[t]
            )));
        }
        for (name, col) in [("volume", &volume), ("implied_vol", &implied_vol)] {
            if let Some(c) = col {
                if c.len() != n {
                    return Err(Error::InvalidInput(format!("{name} has {} rows, expected {n}", c.len())));
                }
                if let Some(t) = c.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::InvalidInput(format!("{name} at index {t} is negative or non-finite")));
                }
            }
        }
        Ok(Self { dates, returns, volume, implied_vol })
    }

    /// Undated series; dates are consecutive days from 2000-01-03.
    pub fn from_returns(returns: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
        let dates = (0..returns.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
        Self::new(dates, returns, None, None)
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn sample_variance(&self) -> f64 {
        sample_variance(&self.returns)
    }
}

/// Unbiased sample variance; zero for fewer than two points.
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / n as f64;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Window lengths and winsorization band of the feature pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub zscore_window: usize,
    pub quantile_window: usize,
    pub rv_window: usize,
    pub winsor_lo: f64,
    pub winsor_hi: f64,
    pub winsor_window: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            zscore_window: 252,
            quantile_window: 252,
            rv_window: 20,
            winsor_lo: 0.005,
            winsor_hi: 0.995,
            winsor_window: 252,
        }
    }
}

impl FeatureConfig {
    /// Minimum series length for full features.
    pub fn min_history(&self) -> usize {
        self.zscore_window + self.rv_window
    }
}

/// Standardized gate inputs, row-major, `NaN` where unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    rows: usize,
    /// Winsorized raw values.
    raw: Vec<f64>,
    /// Rolling z-scores.
    z: Vec<f64>,
}

impl FeatureMatrix {
    /// Wraps precomputed standardized columns (raw = z).
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_raw_and_z(names, columns.clone(), columns)
    }

    fn from_raw_and_z(names: Vec<String>, raw: Vec<Vec<f64>>, z: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != z.len() || raw.len() != z.len() {
            return Err(Error::InvalidInput("feature names and columns disagree".into()));
        }
        let rows = z.first().map_or(0, |c| c.len());
        if z.iter().chain(raw.iter()).any(|c| c.len() != rows) {
            return Err(Error::InvalidInput("feature columns have unequal lengths".into()));
        }
        let cols = z.len();
        let mut rz = vec![f64::NAN; rows * cols];
        let mut rr = vec![f64::NAN; rows * cols];
        for j in 0..cols {
            for t in 0..rows {
                rz[t * cols + j] = z[j][t];
                rr[t * cols + j] = raw[j][t];
            }
        }
        Ok(Self { names, rows, raw: rr, z: rz })
    }

    /// A matrix with no columns (gates see a zero vector).
    pub fn empty(rows: usize) -> Self {
        Self { names: Vec::new(), rows, raw: Vec::new(), z: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.names.len()
    }

    /// z-scores of row `t`, `NaN` where unavailable.
    pub fn row(&self, t: usize) -> &[f64] {
        let c = self.cols();
        &self.z[t * c..(t + 1) * c]
    }

    pub fn raw_row(&self, t: usize) -> &[f64] {
        let c = self.cols();
        &self.raw[t * c..(t + 1) * c]
    }

    pub fn z(&self, t: usize, j: usize) -> Option<f64> {
        let v = self.z[t * self.cols() + j];
        v.is_finite().then_some(v)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.z[t * self.cols() + j]).collect()
    }

    pub fn raw_column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|t| self.raw[t * self.cols() + j]).collect()
    }

    /// Columns that carry at least one value.
    fn present(&self) -> Vec<bool> {
        (0..self.cols())
            .map(|j| (0..self.rows).any(|t| self.z[t * self.cols() + j].is_finite()))
            .collect()
    }

    /// Indices of the columns that carry at least one value.
    pub fn present_columns(&self) -> Vec<usize> {
        self.present().iter().enumerate().filter(|(_, p)| **p).map(|(j, _)| j).collect()
    }

    /// Whether every present column is available at row `t`.
    pub fn available(&self, t: usize) -> bool {
        let present = self.present();
        self.row(t).iter().zip(&present).all(|(v, p)| !p || v.is_finite())
    }

    /// First row from which every present column stays available.
    pub fn first_available_row(&self) -> Option<usize> {
        let present = self.present();
        let ok = |t: usize| self.row(t).iter().zip(&present).all(|(v, p)| !p || v.is_finite());
        let mut first = None;
        for t in (0..self.rows).rev() {
            if ok(t) {
                first = Some(t);
            } else {
                break;
            }
        }
        first
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let c = self.cols();
        Self {
            names: self.names.clone(),
            rows: end - start,
            raw: self.raw[start * c..end * c].to_vec(),
            z: self.z[start * c..end * c].to_vec(),
        }
    }

    /// Keeps the listed columns in the given order.
    pub fn select(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&j) = columns.iter().find(|&&j| j >= self.cols()) {
            return Err(Error::InvalidInput(format!("feature index {j} out of range ({} columns)", self.cols())));
        }
        let names = columns.iter().map(|&j| self.names[j].clone()).collect();
        let raw = columns.iter().map(|&j| self.raw_column(j)).collect();
        let z = columns.iter().map(|&j| self.column(j)).collect();
        Self::from_raw_and_z(names, raw, z)
    }
}

/// `z_t = (x_t − mean)/std` over `x_{t−w+1..t}` (sample std).
///
/// Rows whose window is incomplete or contains `NaN` are `NaN`. A window
/// whose spread is negligible relative to its magnitude maps to 0.
pub fn rolling_zscore(x: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(2);
    let mut out = vec![f64::NAN; x.len()];
    if x.len() < w {
        return out;
    }
    for t in w - 1..x.len() {
        let win = &x[t + 1 - w..=t];
        if win.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let mean = win.iter().sum::<f64>() / w as f64;
        let var = win.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (w - 1) as f64;
        let sd = var.sqrt();
        let scale = win.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        out[t] = if sd <= 1e-12 * scale || sd == 0.0 { 0.0 } else { (x[t] - mean) / sd };
    }
    out
}

/// Clips `x_t` to the rolling `[lo_q, hi_q]` empirical quantile band.
///
/// The band at `t` uses the already-winsorized values `y_{t−w+1..t−1}` and
/// the current `x_t`, which makes the operation idempotent. Quantiles are
/// order statistics at `⌊lo_q (n−1)⌋` and `⌈hi_q (n−1)⌉`; the window grows
/// until it holds `w` values. `NaN` entries are passed through and skipped.
pub fn winsorize(x: &[f64], lo_q: f64, hi_q: f64, window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut y = vec![f64::NAN; x.len()];
    let mut buf = Vec::with_capacity(w);
    for t in 0..x.len() {
        if !x[t].is_finite() {
            continue;
        }
        buf.clear();
        buf.extend(y[t.saturating_sub(w - 1)..t].iter().copied().filter(|v| v.is_finite()));
        buf.push(x[t]);
        let n = buf.len();
        let lo_i = ((lo_q * (n - 1) as f64).floor() as usize).min(n - 1);
        let hi_i = ((hi_q * (n - 1) as f64).ceil() as usize).min(n - 1);
        let (_, &mut hi, _) = buf.select_nth_unstable_by(hi_i, f64::total_cmp);
        let (_, &mut lo, _) = buf.select_nth_unstable_by(lo_i, f64::total_cmp);
        y[t] = x[t].clamp(lo, hi);
    }
    y
}

/// `Σ_{i=t−w+1}^{t} r_i²`, `NaN` before the window fills.
pub fn rolling_sum_squares(r: &[f64], window: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; r.len()];
    for t in window.saturating_sub(1)..r.len() {
        out[t] = r[t + 1 - window..=t].iter().map(|v| v * v).sum();
    }
    out
}

/// Average-rank position of `x_t` in its trailing window, scaled to `[0, 1]`.
pub fn rolling_rank(x: &[f64], window: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; x.len()];
    if window < 2 {
        return out;
    }
    for t in window - 1..x.len() {
        let win = &x[t + 1 - window..=t];
        let below = win.iter().filter(|v| **v < x[t]).count();
        let ties = win.iter().filter(|v| **v == x[t]).count();
        let rank = below as f64 + 0.5 * (ties as f64 + 1.0);
        out[t] = (rank - 1.0) / (window - 1) as f64;
    }
    out
}

fn standardize(x: &[f64], cfg: &FeatureConfig) -> (Vec<f64>, Vec<f64>) {
    let w = winsorize(x, cfg.winsor_lo, cfg.winsor_hi, cfg.winsor_window);
    let z = rolling_zscore(&w, cfg.zscore_window);
    (w, z)
}

/// Builds `(abs_ret, rv20, iv, vol_quantile)`, each winsorized and z-scored.
///
/// Without an implied-vol column the `iv` input is the synthetic proxy
/// `z(½ z(|r|) + ½ z(√RV20))`. Without volume the `vol_quantile` column is
/// entirely unavailable.
pub fn build_feature_matrix(s: &ReturnSeries, cfg: &FeatureConfig) -> Result<FeatureMatrix> {
    let needed = cfg.min_history();
    if s.len() < needed {
        return Err(Error::InsufficientHistory { needed, got: s.len() });
    }
    let abs: Vec<f64> = s.returns.iter().map(|r| r.abs()).collect();
    let rv = rolling_sum_squares(&s.returns, cfg.rv_window);
    let iv_raw = match &s.implied_vol {
        Some(iv) => iv.clone(),
        None => {
            let za = rolling_zscore(&abs, cfg.zscore_window);
            let sqrt_rv: Vec<f64> = rv.iter().map(|v| v.sqrt()).collect();
            let zr = rolling_zscore(&sqrt_rv, cfg.zscore_window);
            za.iter().zip(&zr).map(|(a, b)| 0.5 * a + 0.5 * b).collect()
        }
    };
    let vq = match &s.volume {
        Some(v) => rolling_rank(v, cfg.quantile_window),
        None => vec![f64::NAN; s.len()],
    };
    let mut raw = Vec::new();
    let mut z = Vec::new();
    for col in [abs, rv, iv_raw, vq] {
        let (w, zc) = standardize(&col, cfg);
        raw.push(w);
        z.push(zc);
    }
    FeatureMatrix::from_raw_and_z(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), raw, z)
}

/// Runs raw generator output through the winsorize/z-score pipeline.
pub fn standardize_columns(
    names: Vec<String>,
    columns: &[Vec<f64>],
    cfg: &FeatureConfig,
) -> Result<FeatureMatrix> {
    let (raw, z): (Vec<_>, Vec<_>) = columns.iter().map(|c| standardize(c, cfg)).unzip();
    FeatureMatrix::from_raw_and_z(names, raw, z)
}
