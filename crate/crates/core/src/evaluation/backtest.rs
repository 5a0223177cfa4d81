use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compare::{dm_test, vuong_test};
use super::coverage::{christoffersen_test, kupiec_test, TestStat};
use super::losses::{qlike_terms, squared_error_terms};
use super::risk::{fz_terms, var_es_filtered, var_es_forecast, VarEs};
use crate::error::{Error, Result};
use crate::estimation::{fit_qmle, FitOptions};
use crate::features::{sample_variance, FeatureMatrix};
use crate::models::{filter_from, ModelSpec, Params};

pub const LEVELS: [f64; 2] = [0.01, 0.05];

/// How VaR/ES are formed from the variance forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarMethod {
    #[default]
    Gaussian,
    /// Empirical quantiles of the estimation window's standardized residuals.
    FilteredHistorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    pub window: usize,
    pub refit_every: usize,
    pub fit: FitOptions,
    pub var_method: VarMethod,
    /// HAC bandwidth for DM/Vuong; `None` uses `⌊1.2 N^{1/3}⌋`.
    pub hac_lags: Option<usize>,
}

impl Default for BacktestOptions {
    fn default() -> Self {
        Self { window: 1500, refit_every: 21, fit: FitOptions::default(), var_method: VarMethod::Gaussian, hac_lags: None }
    }
}

/// One-step-ahead forecast for period `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRecord {
    pub t: usize,
    pub date: NaiveDate,
    pub h_hat: f64,
    pub r_realized: f64,
    pub var_1: f64,
    pub var_5: f64,
    pub es_1: f64,
    pub es_5: f64,
    /// Gaussian log-likelihood contribution `−½(log ĥ + r²/ĥ)`.
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefitRecord {
    pub origin: usize,
    pub params: Option<Vec<f64>>,
    pub loglik: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub n: usize,
    pub qlike: f64,
    pub qlike_floored: usize,
    pub rmse: f64,
    pub fz_1: f64,
    pub fz_5: f64,
    pub exceed_rate_1: f64,
    pub exceed_rate_5: f64,
    pub kupiec_1: TestStat,
    pub kupiec_5: TestStat,
    pub christoffersen_1: TestStat,
    pub christoffersen_5: TestStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBacktest {
    pub name: String,
    pub records: Vec<ForecastRecord>,
    pub refits: Vec<RefitRecord>,
    pub metrics: Option<ModelMetrics>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub a: String,
    pub b: String,
    pub n: usize,
    /// DM on QLIKE differentials `a − b`; positive favors `b`.
    pub dm_qlike: Option<TestStat>,
    pub dm_rmse: Option<TestStat>,
    pub dm_fz_1: Option<TestStat>,
    pub dm_fz_5: Option<TestStat>,
    /// Vuong on log-likelihood differentials; positive favors `a`.
    pub vuong: Option<TestStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub window: usize,
    pub refit_every: usize,
    pub models: Vec<ModelBacktest>,
    pub pairwise: Vec<PairwiseComparison>,
}

/// Loss series of one model used for metrics and comparisons.
struct Losses {
    qlike: Vec<f64>,
    se: Vec<f64>,
    fz_1: Vec<f64>,
    fz_5: Vec<f64>,
    ll: Vec<f64>,
}

fn losses(recs: &[ForecastRecord]) -> Result<(Losses, usize)> {
    let h: Vec<f64> = recs.iter().map(|r| r.h_hat).collect();
    let r: Vec<f64> = recs.iter().map(|r| r.r_realized).collect();
    let (qlike, floored) = qlike_terms(&h, &r)?;
    let var1: Vec<f64> = recs.iter().map(|r| r.var_1).collect();
    let var5: Vec<f64> = recs.iter().map(|r| r.var_5).collect();
    let es1: Vec<f64> = recs.iter().map(|r| r.es_1).collect();
    let es5: Vec<f64> = recs.iter().map(|r| r.es_5).collect();
    Ok((
        Losses {
            qlike,
            se: squared_error_terms(&h, &r)?,
            fz_1: fz_terms(&var1, &es1, &r, LEVELS[0])?,
            fz_5: fz_terms(&var5, &es5, &r, LEVELS[1])?,
            ll: recs.iter().map(|r| r.loglik).collect(),
        },
        floored,
    ))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn metrics(recs: &[ForecastRecord]) -> Result<ModelMetrics> {
    let (l, floored) = losses(recs)?;
    let n = recs.len();
    let hits1: Vec<bool> = recs.iter().map(|r| -r.r_realized > r.var_1).collect();
    let hits5: Vec<bool> = recs.iter().map(|r| -r.r_realized > r.var_5).collect();
    let x1 = hits1.iter().filter(|h| **h).count();
    let x5 = hits5.iter().filter(|h| **h).count();
    let degenerate = TestStat { stat: 0.0, p_value: 1.0, degenerate: true };
    Ok(ModelMetrics {
        n,
        qlike: mean(&l.qlike),
        qlike_floored: floored,
        rmse: mean(&l.se).sqrt(),
        fz_1: mean(&l.fz_1),
        fz_5: mean(&l.fz_5),
        exceed_rate_1: x1 as f64 / n as f64,
        exceed_rate_5: x5 as f64 / n as f64,
        kupiec_1: kupiec_test(x1, n, LEVELS[0])?,
        kupiec_5: kupiec_test(x5, n, LEVELS[1])?,
        christoffersen_1: christoffersen_test(&hits1).unwrap_or(degenerate),
        christoffersen_5: christoffersen_test(&hits5).unwrap_or(degenerate),
    })
}

struct Block {
    refit: RefitRecord,
    params: Option<Params>,
    error: Option<String>,
}

fn forecast_block(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    dates: &[NaiveDate],
    features: &FeatureMatrix,
    (start, origin, end): (usize, usize, usize),
    method: VarMethod,
) -> Result<Vec<ForecastRecord>> {
    let est = &returns[start..origin];
    let h0 = sample_variance(est);
    let (path, _) = filter_from(spec, params, &returns[start..end], &features.slice(start, end), h0)?;
    let z: Vec<f64> = path.std_resid[path.burn_in.min(origin - start)..origin - start].to_vec();
    (origin..end)
        .map(|t| {
            let h = path.h[t - start];
            let r = returns[t];
            let risk = |level: f64| -> Result<VarEs> {
                match method {
                    VarMethod::Gaussian => var_es_forecast(h, level),
                    VarMethod::FilteredHistorical => var_es_filtered(h, &z, level),
                }
            };
            let (a, b) = (risk(LEVELS[0])?, risk(LEVELS[1])?);
            Ok(ForecastRecord {
                t,
                date: dates[t],
                h_hat: h,
                r_realized: r,
                var_1: a.var,
                var_5: b.var,
                es_1: a.es,
                es_5: b.es,
                loglik: -0.5 * (h.ln() + r * r / h),
            })
        })
        .collect()
}

fn run_model(
    name: &str,
    spec: &ModelSpec,
    returns: &[f64],
    dates: &[NaiveDate],
    features: &FeatureMatrix,
    opts: &BacktestOptions,
) -> ModelBacktest {
    let n = returns.len();
    let w = opts.window;
    let step = opts.refit_every.max(1);
    let origins: Vec<usize> = (w..n).step_by(step).collect();
    let blocks: Vec<Block> = origins
        .par_iter()
        .map(|&origin| {
            let start = origin - w;
            let fit = fit_qmle(spec, &returns[start..origin], &features.slice(start, origin), &opts.fit);
            match fit {
                Ok(f) => Block {
                    refit: RefitRecord {
                        origin,
                        params: Some(f.natural()),
                        loglik: Some(f.loglik),
                        converged: f.converged,
                        error: None,
                    },
                    params: Some(f.params),
                    error: None,
                },
                Err(e) => Block {
                    refit: RefitRecord { origin, params: None, loglik: None, converged: false, error: Some(e.to_string()) },
                    params: None,
                    error: Some(format!("refit at {origin}: {e}")),
                },
            }
        })
        .collect();

    // A failed refit keeps the previous window's parameters.
    let mut held: Option<Params> = None;
    let mut jobs = Vec::with_capacity(blocks.len());
    for b in &blocks {
        if b.params.is_some() {
            held = b.params.clone();
        }
        jobs.push(held.clone());
    }
    let forecasts: Vec<std::result::Result<Vec<ForecastRecord>, String>> = origins
        .par_iter()
        .zip(&jobs)
        .map(|(&origin, p)| {
            let Some(p) = p else { return Err(format!("no parameters available for block at {origin}")) };
            let range = (origin - w, origin, (origin + step).min(n));
            forecast_block(spec, p, returns, dates, features, range, opts.var_method)
                .map_err(|e| format!("forecast block at {origin}: {e}"))
        })
        .collect();

    let mut records = Vec::new();
    let mut errors: Vec<String> = blocks.iter().filter_map(|b| b.error.clone()).collect();
    for f in forecasts {
        match f {
            Ok(r) => records.extend(r),
            Err(e) => errors.push(e),
        }
    }
    let metrics = if records.is_empty() {
        None
    } else {
        match metrics(&records) {
            Ok(m) => Some(m),
            Err(e) => {
                errors.push(format!("metrics: {e}"));
                None
            }
        }
    };
    ModelBacktest {
        name: name.to_string(),
        records,
        refits: blocks.into_iter().map(|b| b.refit).collect(),
        metrics,
        errors,
    }
}

fn compare(a: &ModelBacktest, b: &ModelBacktest, lags: Option<usize>) -> PairwiseComparison {
    let ib: BTreeMap<usize, &ForecastRecord> = b.records.iter().map(|r| (r.t, r)).collect();
    let (ra, rb): (Vec<ForecastRecord>, Vec<ForecastRecord>) =
        a.records.iter().filter_map(|r| ib.get(&r.t).map(|s| (*r, **s))).unzip();
    let n = ra.len();
    let mut out = PairwiseComparison {
        a: a.name.clone(),
        b: b.name.clone(),
        n,
        dm_qlike: None,
        dm_rmse: None,
        dm_fz_1: None,
        dm_fz_5: None,
        vuong: None,
    };
    if n == 0 {
        return out;
    }
    let (Ok((la, _)), Ok((lb, _))) = (losses(&ra), losses(&rb)) else { return out };
    out.dm_qlike = dm_test(&la.qlike, &lb.qlike, lags).ok();
    out.dm_rmse = dm_test(&la.se, &lb.se, lags).ok();
    out.dm_fz_1 = dm_test(&la.fz_1, &lb.fz_1, lags).ok();
    out.dm_fz_5 = dm_test(&la.fz_5, &lb.fz_5, lags).ok();
    out.vuong = vuong_test(&la.ll, &lb.ll, lags).ok();
    out
}

/// Rolling-window refits every `refit_every` observations with
/// one-step-ahead forecasts in between. Model failures are recorded in the
/// report and never abort the run.
pub fn rolling_backtest(
    models: &[(String, ModelSpec)],
    returns: &[f64],
    dates: &[NaiveDate],
    features: &FeatureMatrix,
    opts: &BacktestOptions,
) -> Result<BacktestReport> {
    let n = returns.len();
    if dates.len() != n || features.rows() != n {
        return Err(Error::InvalidInput("returns, dates and features must be aligned".into()));
    }
    if n <= opts.window {
        return Err(Error::InsufficientHistory { needed: opts.window + 1, got: n });
    }
    let results: Vec<ModelBacktest> = models
        .par_iter()
        .map(|(name, spec)| run_model(name, spec, returns, dates, features, opts))
        .collect();
    let mut pairwise = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            pairwise.push(compare(&results[i], &results[j], opts.hac_lags));
        }
    }
    Ok(BacktestReport { window: opts.window, refit_every: opts.refit_every, models: results, pairwise })
}
