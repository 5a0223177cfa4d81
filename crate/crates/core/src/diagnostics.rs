//! Residual diagnostics and plot-ready summaries of gate trajectories.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::TestStat;
use crate::features::FeatureMatrix;
use crate::models::{GatePath, VariancePath};
use crate::stats::{chi2_sf, quantile};

pub const ACF_LAGS: usize = 40;
pub const LB_LAGS: [usize; 2] = [10, 20];
pub const LB_WINDOW: usize = 250;
const HIST_RANGE: f64 = 5.0;
const HIST_BINS: usize = 40;

/// Sample autocorrelations at lags `0..=max_lag`; `None` for a constant series.
pub fn acf(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let m = x.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = d.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return None;
    }
    Some(
        (0..=max_lag.min(n.saturating_sub(1)))
            .map(|k| d[k..].iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / c0)
            .collect(),
    )
}

/// `Q = N(N+2) Σ_{k≤L} ρ_k²/(N−k)` with a χ²(L) p-value.
pub fn ljung_box(x: &[f64], lags: usize) -> Result<TestStat> {
    let n = x.len();
    if n <= lags + 10 {
        return Err(Error::SampleTooShort { len: n, min: lags + 10 });
    }
    let Some(rho) = acf(x, lags) else {
        return Ok(TestStat { stat: 0.0, p_value: 1.0, degenerate: true });
    };
    let nf = n as f64;
    let q = nf * (nf + 2.0) * (1..=lags).map(|k| rho[k] * rho[k] / (nf - k as f64)).sum::<f64>();
    Ok(TestStat { stat: q, p_value: chi2_sf(q, lags as f64), degenerate: false })
}

/// Ljung–Box p-values on trailing windows, keyed by window-end index.
pub fn rolling_ljung_box(x: &[f64], lags: usize, window: usize) -> Result<Vec<(usize, f64)>> {
    if window <= lags + 10 {
        return Err(Error::SampleTooShort { len: window, min: lags + 10 });
    }
    (window..=x.len()).map(|end| Ok((end - 1, ljung_box(&x[end - window..end], lags)?.p_value))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Acf {
    pub values: Vec<f64>,
    /// `±1.96/√N`.
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

pub fn histogram(x: &[f64], lo: f64, hi: f64, bins: usize) -> Histogram {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0; bins];
    let (mut below, mut above) = (0, 0);
    for &v in x {
        if v < lo {
            below += 1;
        } else if v >= hi {
            above += 1;
        } else {
            counts[(((v - lo) / width) as usize).min(bins - 1)] += 1;
        }
    }
    Histogram { edges: (0..=bins).map(|i| lo + i as f64 * width).collect(), counts, below, above }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LjungBoxReport {
    pub lags: usize,
    pub z: TestStat,
    pub z2: TestStat,
    /// `(window end, p)` on z and z².
    pub rolling_z: Vec<(usize, f64)>,
    pub rolling_z2: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub acf_z: Option<Acf>,
    pub acf_z2: Option<Acf>,
    pub ljung_box: Vec<LjungBoxReport>,
    pub histogram: Histogram,
    /// Set when the residuals are constant and autocorrelations are undefined.
    pub degenerate: bool,
}

/// ACF to `max_lag`, Ljung–Box at lags 10 and 20 (with rolling windows of
/// `window` when given) and a histogram of the standardized residuals after
/// the burn-in.
pub fn residual_diagnostics(vp: &VariancePath, max_lag: usize, window: Option<usize>) -> Result<DiagnosticsReport> {
    let z: Vec<f64> = vp.std_resid[vp.burn_in.min(vp.std_resid.len())..].to_vec();
    let n = z.len();
    let need = max_lag.max(LB_LAGS[1]) + 10;
    if n <= need {
        return Err(Error::SampleTooShort { len: n, min: need });
    }
    let z2: Vec<f64> = z.iter().map(|v| v * v).collect();
    let band = 1.96 / (n as f64).sqrt();
    let acf_z = acf(&z, max_lag).map(|values| Acf { values, band });
    let acf_z2 = acf(&z2, max_lag).map(|values| Acf { values, band });
    let degenerate = acf_z.is_none();
    let mut ljung = Vec::new();
    for lags in LB_LAGS {
        let (rz, rz2) = match window {
            Some(w) if w <= n => (rolling_ljung_box(&z, lags, w)?, rolling_ljung_box(&z2, lags, w)?),
            _ => (Vec::new(), Vec::new()),
        };
        ljung.push(LjungBoxReport {
            lags,
            z: ljung_box(&z, lags)?,
            z2: ljung_box(&z2, lags)?,
            rolling_z: rz,
            rolling_z2: rz2,
        });
    }
    Ok(DiagnosticsReport {
        n,
        acf_z,
        acf_z2,
        ljung_box: ljung,
        histogram: histogram(&z, -HIST_RANGE, HIST_RANGE, HIST_BINS),
        degenerate,
    })
}

/// Series available for gate summaries and surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateVar {
    P,
    D,
    BetaClk,
    Dtau,
    Shock,
    Persistence,
    H,
}

impl FromStr for GateVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "p" => GateVar::P,
            "d" => GateVar::D,
            "beta_clk" | "beta" => GateVar::BetaClk,
            "dtau" => GateVar::Dtau,
            "shock" | "alpha" => GateVar::Shock,
            "persistence" | "psi" => GateVar::Persistence,
            "h" => GateVar::H,
            _ => return Err(Error::Config(format!("unknown gate variable '{s}'"))),
        })
    }
}

impl GateVar {
    pub fn name(self) -> &'static str {
        match self {
            GateVar::P => "p",
            GateVar::D => "d",
            GateVar::BetaClk => "beta_clk",
            GateVar::Dtau => "dtau",
            GateVar::Shock => "shock",
            GateVar::Persistence => "persistence",
            GateVar::H => "h",
        }
    }

    fn series<'a>(self, gp: &'a GatePath, vp: &'a VariancePath) -> &'a [f64] {
        match self {
            GateVar::P => &gp.p,
            GateVar::D => &gp.d,
            GateVar::BetaClk => &gp.beta_clk,
            GateVar::Dtau => &gp.dtau,
            GateVar::Shock => &gp.shock,
            GateVar::Persistence => &gp.persistence,
            GateVar::H => &vp.h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub name: String,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Quantiles at 5, 25, 50, 75 and 95%.
    pub quantiles: [f64; 5],
    /// Correlation of the gate at `t` with feature `j` at `t − 1`.
    pub feature_corr: Vec<(String, f64)>,
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = a.iter().zip(b).filter(|(x, y)| x.is_finite() && y.is_finite()).map(|(x, y)| (*x, *y)).collect();
    let n = pairs.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let (ma, mb) = (pairs.iter().map(|p| p.0).sum::<f64>() / n, pairs.iter().map(|p| p.1).sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab / (saa * sbb).sqrt()
}

/// Summaries of every active gate from index `start` on.
pub fn gate_summary(gp: &GatePath, vp: &VariancePath, features: &FeatureMatrix, start: usize) -> Vec<SeriesSummary> {
    [GateVar::P, GateVar::D, GateVar::BetaClk]
        .into_iter()
        .filter_map(|g| {
            let s = g.series(gp, vp);
            if s.len() <= start + 1 {
                return None;
            }
            let x = &s[start.max(1)..];
            let mut sorted = x.to_vec();
            sorted.sort_by(f64::total_cmp);
            let feature_corr = (0..features.cols())
                .map(|j| {
                    let col = features.column(j);
                    (features.names[j].clone(), corr(x, &col[start.max(1) - 1..s.len() - 1]))
                })
                .collect();
            Some(SeriesSummary {
                name: g.name().into(),
                mean: x.iter().sum::<f64>() / x.len() as f64,
                min: sorted[0],
                max: sorted[sorted.len() - 1],
                quantiles: [0.05, 0.25, 0.5, 0.75, 0.95].map(|q| quantile(&sorted, q)),
                feature_corr,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub ix: usize,
    pub iy: usize,
    pub x_mid: f64,
    pub y_mid: f64,
    pub count: usize,
    /// Mean of `z` in the cell; `None` when empty.
    pub z_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub x_var: String,
    pub y_var: String,
    pub z_var: String,
    pub bins: usize,
    pub cells: Vec<SurfaceCell>,
    pub empty_fraction: f64,
}

fn bin_of(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
}

/// Bins `(x, y)` into a `bins × bins` grid over their ranges and averages `z`
/// per cell, in long format.
pub fn gate_surface_grid(
    gp: &GatePath,
    vp: &VariancePath,
    x_var: GateVar,
    y_var: GateVar,
    z_var: GateVar,
    bins: usize,
) -> Result<Surface> {
    let (x, y, z) = (x_var.series(gp, vp), y_var.series(gp, vp), z_var.series(gp, vp));
    for (v, s) in [(x_var, x), (y_var, y), (z_var, z)] {
        if s.is_empty() {
            return Err(Error::InvalidInput(format!("gate '{}' is not active in this model", v.name())));
        }
    }
    if x.len() != y.len() || x.len() != z.len() {
        return Err(Error::InvalidInput("gate paths are not aligned".into()));
    }
    let bins = bins.max(1);
    let range = |s: &[f64]| s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let ((xl, xh), (yl, yh)) = (range(x), range(y));
    let mut sum = vec![0.0; bins * bins];
    let mut cnt = vec![0usize; bins * bins];
    for i in 0..x.len() {
        let k = bin_of(x[i], xl, xh, bins) * bins + bin_of(y[i], yl, yh, bins);
        sum[k] += z[i];
        cnt[k] += 1;
    }
    let mid = |lo: f64, hi: f64, i: usize| lo + (i as f64 + 0.5) * (hi - lo) / bins as f64;
    let cells: Vec<SurfaceCell> = (0..bins * bins)
        .map(|k| {
            let (ix, iy) = (k / bins, k % bins);
            SurfaceCell {
                ix,
                iy,
                x_mid: mid(xl, xh, ix),
                y_mid: mid(yl, yh, iy),
                count: cnt[k],
                z_mean: (cnt[k] > 0).then(|| sum[k] / cnt[k] as f64),
            }
        })
        .collect();
    let empty = cells.iter().filter(|c| c.count == 0).count();
    Ok(Surface {
        x_var: x_var.name().into(),
        y_var: y_var.name().into(),
        z_var: z_var.name().into(),
        bins,
        empty_fraction: empty as f64 / cells.len() as f64,
        cells,
    })
}
