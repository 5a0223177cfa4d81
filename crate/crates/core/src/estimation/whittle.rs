//! Local Whittle estimation of the long-memory order.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_WINDOW: usize = 256;
pub const D_MAX: f64 = 0.49;
/// Default share of the Fourier frequencies in the band.
pub const BAND_FRACTION: f64 = 0.1;
/// Spacing of rolling-window anchors.
pub const ANCHOR_STEP: usize = 21;

/// Single-window local Whittle estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhittleFit {
    pub d: f64,
    /// Number of frequencies `m` in the band.
    pub band: usize,
    pub objective: f64,
    /// Set when the periodogram vanishes on the band (constant input).
    pub degenerate: bool,
}

/// Periodogram `I(λ_j) = |Σ_t (x_t − x̄) e^{−iλ_j t}|² / (2πn)` at
/// `λ_j = 2πj/n`, `j = 1..=m`.
pub fn periodogram(x: &[f64], m: usize) -> Vec<(f64, f64)> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / (2.0 * std::f64::consts::PI * n as f64);
    (1..=m.min(n / 2))
        .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64, buf[j].norm_sqr() * scale))
        .collect()
}

/// `Q(d) = log(mean_j λ_j^{2d} I_j) − 2d mean_j log λ_j`.
pub fn whittle_objective(pg: &[(f64, f64)], d: f64) -> f64 {
    let m = pg.len() as f64;
    let mean_log = pg.iter().map(|(l, _)| l.ln()).sum::<f64>() / m;
    let g = pg.iter().map(|(l, i)| l.powf(2.0 * d) * i).sum::<f64>() / m;
    g.ln() - 2.0 * d * mean_log
}

fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Minimizes `Q` over `[0, 0.49]` on the lowest `⌊band_fraction · n/2⌋`
/// frequencies by golden-section search, falling back to a 491-point grid
/// when an endpoint or grid point beats the search result.
pub fn local_whittle(x: &[f64], band_fraction: f64) -> Result<WhittleFit> {
    let n = x.len();
    if n < MIN_WINDOW {
        return Err(Error::WindowTooShort { window: n, min: MIN_WINDOW });
    }
    if !(band_fraction > 0.0 && band_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("band fraction {band_fraction} outside (0, 1]")));
    }
    let m = ((band_fraction * n as f64 / 2.0).floor() as usize).max(2);
    let pg = periodogram(x, m);
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let peak = pg.iter().fold(0.0f64, |a, (_, i)| a.max(*i));
    if peak <= 1e-28 * (1.0 + scale * scale) * n as f64 {
        return Ok(WhittleFit { d: 0.0, band: pg.len(), objective: f64::NAN, degenerate: true });
    }
    let q = |d: f64| whittle_objective(&pg, d);
    let mut d = golden_section(q, 0.0, D_MAX, 1e-7);
    let mut best = q(d);
    let bracketed = q(0.0) >= best && q(D_MAX) >= best;
    if !bracketed {
        for i in 0..=490 {
            let cand = i as f64 * 0.001;
            let v = q(cand);
            if v < best {
                best = v;
                d = cand;
            }
        }
    }
    Ok(WhittleFit { d, band: pg.len(), objective: best, degenerate: false })
}

/// Windowed estimates `d̃` at anchor dates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhittleEstimate {
    /// Window-end indices.
    pub anchors: Vec<usize>,
    pub d_tilde: Vec<f64>,
    /// Frequencies per window.
    pub band: usize,
    pub window: usize,
    pub degenerate: usize,
}

impl WhittleEstimate {
    /// `d̃` held constant from each anchor until the next; `None` before the first.
    pub fn at(&self, t: usize) -> Option<f64> {
        match self.anchors.binary_search(&t) {
            Ok(i) => Some(self.d_tilde[i]),
            Err(0) => None,
            Err(i) => Some(self.d_tilde[i - 1]),
        }
    }

    pub fn mean(&self) -> f64 {
        self.d_tilde.iter().sum::<f64>() / self.d_tilde.len().max(1) as f64
    }
}

/// Local Whittle on squared demeaned returns over trailing windows ending
/// every `step` observations.
pub fn rolling_whittle(returns: &[f64], window: usize, band_fraction: f64, step: usize) -> Result<WhittleEstimate> {
    if window < MIN_WINDOW {
        return Err(Error::WindowTooShort { window, min: MIN_WINDOW });
    }
    if returns.len() < window {
        return Err(Error::InsufficientHistory { needed: window, got: returns.len() });
    }
    let step = step.max(1);
    let mut anchors = Vec::new();
    let mut d_tilde = Vec::new();
    let mut band = 0;
    let mut degenerate = 0;
    let mut t = window - 1;
    while t < returns.len() {
        let w = &returns[t + 1 - window..=t];
        let mean = w.iter().sum::<f64>() / window as f64;
        let x: Vec<f64> = w.iter().map(|r| (r - mean).powi(2)).collect();
        let fit = local_whittle(&x, band_fraction)?;
        band = fit.band;
        degenerate += fit.degenerate as usize;
        anchors.push(t);
        d_tilde.push(fit.d);
        t += step;
    }
    Ok(WhittleEstimate { anchors, d_tilde, band, window, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_window_rejected() {
        assert!(matches!(local_whittle(&[0.0; 100], 0.1), Err(Error::WindowTooShort { window: 100, min: 256 })));
    }

    #[test]
    fn constant_series_is_flagged() {
        let f = local_whittle(&[1.5; 512], 0.1).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.d, 0.0);
    }

    #[test]
    fn periodogram_of_cosine_peaks_at_its_frequency() {
        let n = 512;
        let x: Vec<f64> = (0..n).map(|t| (2.0 * std::f64::consts::PI * 5.0 * t as f64 / n as f64).cos()).collect();
        let pg = periodogram(&x, 20);
        let (j, _) = pg.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap();
        assert_eq!(j + 1, 5);
        // |Σ cos|² = (n/2)² at the matching frequency.
        assert!((pg[4].1 - (n as f64 / 2.0).powi(2) / (2.0 * std::f64::consts::PI * n as f64)).abs() < 1e-9);
    }

    #[test]
    fn anchors_every_step() {
        let r: Vec<f64> = (0..700).map(|t| ((t * 7919) % 101) as f64 / 100.0 - 0.5).collect();
        let w = rolling_whittle(&r, 300, 0.1, 21).unwrap();
        assert_eq!(w.anchors[0], 299);
        assert_eq!(w.anchors[1], 320);
        assert_eq!(w.at(310), Some(w.d_tilde[0]));
        assert_eq!(w.at(10), None);
        assert!(w.d_tilde.iter().all(|d| (0.0..0.5).contains(d)));
    }
}
