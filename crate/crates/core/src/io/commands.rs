//! Command dispatch: each command reads the config, computes, and writes its
//! artifacts plus a manifest into the output directory.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::Serialize;

use super::config::{KernelKind, ModelConfig, RunConfig, SimFeatures};
use super::data::{load_series, LoadOptions};
use super::report::{fmt_num, fmt_short, text_table, ArtifactWriter, Manifest};
use crate::diagnostics::{gate_summary, gate_surface_grid, residual_diagnostics, DiagnosticsReport, GateVar, SeriesSummary, Surface};
use crate::error::{Error, Result};
use crate::estimation::{fit_qmle, moment_start, reference_params, BfgsOptions, FitOptions, FitResult, HybridOptions};
use crate::evaluation::{
    fz_terms, qlike_terms, rolling_backtest, squared_error_terms, var_es_filtered, var_es_forecast, BacktestOptions,
    BacktestReport, ForecastRecord, VarEs, VarMethod,
};
use crate::features::{build_feature_matrix, FeatureMatrix, ReturnSeries};
use crate::kernel::{decompose, discrete_weights, embeddings, CanonicalTriple, Kernel, SampledKernel};
use crate::models::{filter_variance, forecast_next, simulate_path, Family, FeatureGenerator, ModelSpec, Params};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Forecast,
    Backtest,
    Simulate,
    Decompose,
    Diagnose,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Fit, Command::Forecast, Command::Backtest, Command::Simulate, Command::Decompose, Command::Diagnose];

    pub fn name(self) -> &'static str {
        match self {
            Command::Fit => "fit",
            Command::Forecast => "forecast",
            Command::Backtest => "backtest",
            Command::Simulate => "simulate",
            Command::Decompose => "decompose",
            Command::Diagnose => "diagnose",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command '{s}'")))
    }
}

/// Runs `cmd`, writing artifacts and `manifest.json` into `out`.
///
/// When part of the command fails the remaining artifacts are still written,
/// the manifest is flagged partial and the first error is returned.
pub fn run_command(cfg: &RunConfig, cmd: Command, out: &Path) -> Result<Manifest> {
    let mut w = ArtifactWriter::new(out, cmd.name(), &cfg.hash, cfg.seed)?;
    let mut errors: Vec<Error> = Vec::new();
    let res = match cmd {
        Command::Fit => cmd_fit(cfg, &mut w, &mut errors),
        Command::Forecast => cmd_forecast(cfg, &mut w, &mut errors),
        Command::Backtest => cmd_backtest(cfg, &mut w, &mut errors),
        Command::Simulate => cmd_simulate(cfg, &mut w),
        Command::Decompose => cmd_decompose(cfg, &mut w),
        Command::Diagnose => cmd_diagnose(cfg, &mut w),
    };
    if let Err(e) = res {
        errors.insert(0, e);
    }
    let models = match cmd {
        Command::Simulate | Command::Decompose => Vec::new(),
        _ => cfg.models.iter().map(|m| m.name.clone()).collect(),
    };
    let manifest = w.finish(models, errors.iter().map(|e| e.to_string()).collect())?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}

struct Prepared {
    series: ReturnSeries,
    returns: Vec<f64>,
    features: FeatureMatrix,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let path = cfg.data.path.as_ref().ok_or_else(|| Error::Config("data.path is required".into()))?;
    let series = load_series(&cfg.resolve(path), LoadOptions { returns_column: cfg.data.returns_column })?;
    let all = build_feature_matrix(&series, &cfg.features)?;
    let features = all.select(&all.present_columns())?;
    let returns = series.returns.iter().map(|r| r * cfg.data.return_scale).collect();
    Ok(Prepared { series, returns, features })
}

fn need_models(cfg: &RunConfig) -> Result<()> {
    if cfg.models.is_empty() {
        return Err(Error::Config("no models configured (set models = ... or pass --model)".into()));
    }
    Ok(())
}

fn model_spec(m: &ModelConfig, features: &FeatureMatrix) -> Result<ModelSpec> {
    let idx: Vec<usize> = match &m.features {
        None => (0..features.cols()).collect(),
        Some(names) => names
            .iter()
            .map(|n| {
                features.names.iter().position(|c| c.eq_ignore_ascii_case(n)).ok_or_else(|| {
                    Error::Config(format!("model {}: feature '{n}' is not available (have {:?})", m.name, features.names))
                })
            })
            .collect::<Result<_>>()?,
    };
    let f = m.family;
    let mut spec = ModelSpec::new(f, 0).with_lags(m.lags);
    spec.p_features = if f.has_regime() { idx.clone() } else { Vec::new() };
    spec.d_features = if f.has_fractional() { idx.clone() } else { Vec::new() };
    spec.clock_features = if f.has_clock() { idx } else { Vec::new() };
    spec.burn_in = m.burn_in;
    spec.validate(features.cols())?;
    Ok(spec)
}

fn fit_options(cfg: &RunConfig) -> FitOptions {
    FitOptions {
        starts: cfg.fit.starts,
        seed: cfg.seed,
        jitter: cfg.fit.jitter,
        clip: cfg.fit.clip,
        covariance: cfg.fit.covariance,
        bfgs: BfgsOptions { max_iter: cfg.fit.max_iter, ..BfgsOptions::default() },
        hybrid: cfg.whittle.enabled.then_some(HybridOptions {
            lambda: cfg.whittle.lambda,
            window: cfg.whittle.window,
            band_fraction: cfg.whittle.band_fraction,
            step: cfg.whittle.step,
        }),
        start: None,
    }
}

fn fit_model(cfg: &RunConfig, m: &ModelConfig, data: &Prepared) -> Result<(ModelSpec, FitResult)> {
    let spec = model_spec(m, &data.features)?;
    let mut opts = fit_options(cfg);
    if !m.start.is_empty() {
        opts.start = Some(m.start.apply(&moment_start(&spec, &data.returns)?));
    }
    let fit = fit_qmle(&spec, &data.returns, &data.features, &opts)?;
    Ok((spec, fit))
}

fn labeled(name: &str, e: Error) -> Error {
    match e {
        Error::Config(s) => Error::Config(format!("{name}: {s}")),
        Error::InvalidInput(s) => Error::InvalidInput(format!("{name}: {s}")),
        e => e,
    }
}

fn cmd_fit(cfg: &RunConfig, w: &mut ArtifactWriter, errors: &mut Vec<Error>) -> Result<()> {
    need_models(cfg)?;
    let data = prepare(cfg)?;
    let mut params = Vec::new();
    let mut summary = Vec::new();
    for m in &cfg.models {
        match fit_model(cfg, m, &data) {
            Ok((_, fit)) => {
                w.json(&format!("fit_{}.json", m.name), &fit)?;
                let est = fit.natural();
                for (i, name) in fit.param_names.iter().enumerate() {
                    let se = fit.std_errors.as_ref().map_or(f64::NAN, |s| s[i]);
                    params.push(vec![m.name.clone(), name.clone(), fmt_short(est[i]), fmt_short(se)]);
                }
                summary.push(vec![
                    m.name.clone(),
                    m.family.to_string(),
                    fmt_short(fit.loglik),
                    fit.converged.to_string(),
                    fit.iterations.to_string(),
                    fit.n_obs.to_string(),
                ]);
            }
            Err(e) => errors.push(labeled(&m.name, e)),
        }
    }
    let text = format!(
        "{}\n{}",
        text_table(&["model", "family", "loglik", "converged", "iterations", "n_obs"], &summary),
        text_table(&["model", "parameter", "estimate", "std_error"], &params)
    );
    w.text("fit_summary.txt", &text)
}

fn var_es(method: VarMethod, h: f64, resid: &[f64], level: f64) -> Result<VarEs> {
    match method {
        VarMethod::Gaussian => var_es_forecast(h, level),
        VarMethod::FilteredHistorical => var_es_filtered(h, resid, level),
    }
}

fn record(t: usize, date: NaiveDate, h: f64, r: f64, method: VarMethod, resid: &[f64]) -> Result<ForecastRecord> {
    let (a, b) = (var_es(method, h, resid, 0.01)?, var_es(method, h, resid, 0.05)?);
    Ok(ForecastRecord {
        t,
        date,
        h_hat: h,
        r_realized: r,
        var_1: a.var,
        var_5: b.var,
        es_1: a.es,
        es_5: b.es,
        loglik: -0.5 * (h.ln() + r * r / h),
    })
}

const RECORD_HEADER: [&str; 9] = ["t", "date", "h_hat", "r_realized", "var_1", "var_5", "es_1", "es_5", "loglik"];

fn record_row(r: &ForecastRecord) -> Vec<String> {
    let mut v = vec![r.t.to_string(), r.date.to_string()];
    for x in [r.h_hat, r.r_realized, r.var_1, r.var_5, r.es_1, r.es_5, r.loglik] {
        v.push(fmt_num(x));
    }
    v
}

/// In-sample one-step variances after the burn-in, then the out-of-sample
/// forecast for the next day (realized return and loglik `NaN`).
fn cmd_forecast(cfg: &RunConfig, w: &mut ArtifactWriter, errors: &mut Vec<Error>) -> Result<()> {
    need_models(cfg)?;
    let data = prepare(cfg)?;
    let method = cfg.backtest.var_method;
    let mut next = Vec::new();
    for m in &cfg.models {
        let res = (|| -> Result<Vec<ForecastRecord>> {
            let (spec, fit) = fit_model(cfg, m, &data)?;
            let params = fit.params.clone();
            let (vp, _) = filter_variance(&spec, &params, &data.returns, &data.features)?;
            let resid = &vp.std_resid[vp.burn_in..];
            let mut recs = Vec::new();
            for t in vp.burn_in..data.returns.len() {
                recs.push(record(t, data.series.dates[t], vp.h[t], data.returns[t], method, resid)?);
            }
            let n = data.returns.len();
            let h = forecast_next(&spec, &params, &data.returns, &data.features, &vp)?;
            let date = data.series.dates[n - 1] + Days::new(1);
            let mut last = record(n, date, h, f64::NAN, method, resid)?;
            last.loglik = f64::NAN;
            recs.push(last);
            Ok(recs)
        })();
        match res {
            Ok(recs) => {
                let rows: Vec<Vec<String>> = recs.iter().map(record_row).collect();
                w.csv(&format!("forecast_{}.csv", m.name), &RECORD_HEADER, &rows)?;
                let l = recs.last().expect("non-empty");
                next.push(vec![m.name.clone(), l.date.to_string(), fmt_short(l.h_hat), fmt_short(l.var_1), fmt_short(l.var_5)]);
            }
            Err(e) => errors.push(labeled(&m.name, e)),
        }
    }
    w.text("forecast_summary.txt", &text_table(&["model", "date", "h_hat", "var_1", "var_5"], &next))
}

fn cmd_backtest(cfg: &RunConfig, w: &mut ArtifactWriter, errors: &mut Vec<Error>) -> Result<()> {
    need_models(cfg)?;
    let data = prepare(cfg)?;
    let models: Vec<(String, ModelSpec)> = cfg
        .models
        .iter()
        .map(|m| Ok((m.name.clone(), model_spec(m, &data.features)?)))
        .collect::<Result<_>>()?;
    let opts = BacktestOptions {
        window: cfg.backtest.window,
        refit_every: cfg.backtest.refit_every,
        fit: fit_options(cfg),
        var_method: cfg.backtest.var_method,
        hac_lags: cfg.backtest.hac_lags,
    };
    let report = rolling_backtest(&models, &data.returns, &data.series.dates, &data.features, &opts)?;
    w.json("backtest.json", &report)?;
    for mb in &report.models {
        if mb.metrics.is_none() {
            errors.push(Error::InvalidInput(format!("{}: no forecasts ({})", mb.name, mb.errors.join("; "))));
        }
        let h: Vec<f64> = mb.records.iter().map(|r| r.h_hat).collect();
        let r: Vec<f64> = mb.records.iter().map(|r| r.r_realized).collect();
        let mut header = RECORD_HEADER.to_vec();
        header.extend(["qlike", "sq_err", "fz_1", "fz_5", "hit_1", "hit_5"]);
        let mut rows = Vec::new();
        if !h.is_empty() {
            let (q, _) = qlike_terms(&h, &r)?;
            let se = squared_error_terms(&h, &r)?;
            let col = |f: fn(&ForecastRecord) -> f64| mb.records.iter().map(f).collect::<Vec<f64>>();
            let f1 = fz_terms(&col(|x| x.var_1), &col(|x| x.es_1), &r, 0.01)?;
            let f5 = fz_terms(&col(|x| x.var_5), &col(|x| x.es_5), &r, 0.05)?;
            for (i, rec) in mb.records.iter().enumerate() {
                let mut row = record_row(rec);
                row.extend([fmt_num(q[i]), fmt_num(se[i]), fmt_num(f1[i]), fmt_num(f5[i])]);
                row.push(((-rec.r_realized > rec.var_1) as u8).to_string());
                row.push(((-rec.r_realized > rec.var_5) as u8).to_string());
                rows.push(row);
            }
        }
        w.csv(&format!("backtest_{}.csv", mb.name), &header, &rows)?;
    }
    w.text("backtest_summary.txt", &backtest_text(&report))
}

fn backtest_text(rep: &BacktestReport) -> String {
    let rows: Vec<Vec<String>> = rep
        .models
        .iter()
        .map(|m| match &m.metrics {
            Some(x) => vec![
                m.name.clone(),
                x.n.to_string(),
                fmt_short(x.qlike),
                fmt_short(x.rmse),
                fmt_short(x.fz_1),
                fmt_short(x.fz_5),
                fmt_short(x.exceed_rate_1),
                fmt_short(x.exceed_rate_5),
                fmt_short(x.kupiec_5.p_value),
                fmt_short(x.christoffersen_5.p_value),
            ],
            None => vec![m.name.clone(), "0".into()],
        })
        .collect();
    let mut s = format!("window {} refit_every {}\n\n", rep.window, rep.refit_every);
    s += &text_table(
        &["model", "n", "qlike", "rmse", "fz_1", "fz_5", "exceed_1", "exceed_5", "kupiec_5_p", "christ_5_p"],
        &rows,
    );
    if !rep.pairwise.is_empty() {
        let p = |t: &Option<crate::evaluation::TestStat>| t.map_or("NA".to_string(), |t| fmt_short(t.stat));
        let rows: Vec<Vec<String>> = rep
            .pairwise
            .iter()
            .map(|c| vec![c.a.clone(), c.b.clone(), c.n.to_string(), p(&c.dm_qlike), p(&c.dm_rmse), p(&c.dm_fz_5), p(&c.vuong)])
            .collect();
        s += "\n";
        s += &text_table(&["a", "b", "n", "dm_qlike", "dm_rmse", "dm_fz_5", "vuong"], &rows);
    }
    s
}

/// Simulation truth: the reference coefficients at daily variance 1e-4, with
/// a unit-variance-scale fractional configuration known to keep `h > 0`.
pub fn default_truth(spec: &ModelSpec) -> Result<Params> {
    let mut p = reference_params(spec, 1e-4)?;
    let f = spec.family;
    let fill = |n: usize, v: f64| vec![v; n];
    p.gamma_p = fill(spec.p_features.len(), 1.0);
    p.eta = fill(spec.clock_features.len(), 0.2);
    p.gamma_d = fill(spec.d_features.len(), 0.5);
    if f == Family::Gfigarch {
        p.alpha = 0.2;
        p.beta = 0.5;
    }
    let m = crate::models::unconditional_mean(spec, &Params { omega: 1.0, ..p.clone() }, crate::models::GateStats::Constant)?;
    p.omega = 1e-4 / m;
    Ok(p)
}

#[derive(Serialize)]
struct SimulationMeta<'a> {
    family: Family,
    length: usize,
    seed: u64,
    spec: &'a ModelSpec,
    params: &'a Params,
}

fn cmd_simulate(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    let s = &cfg.simulate;
    let spec = ModelSpec::new(s.family, s.columns).with_lags(s.lags);
    let params = s.params.apply(&default_truth(&spec)?);
    params.check_shape(&spec)?;
    let gen = match s.features {
        SimFeatures::Iid => FeatureGenerator::Iid { columns: s.columns },
        SimFeatures::Ar1 => FeatureGenerator::Ar1 { phi: s.phi, columns: s.columns },
    };
    let path = simulate_path(&spec, &params, s.length, cfg.seed, &gen)?;
    let meta = SimulationMeta { family: s.family, length: s.length, seed: cfg.seed, spec: &spec, params: &params };
    w.json("simulation.json", &meta)?;

    let volume = |t: usize| -> f64 {
        if s.columns == 0 {
            return f64::NAN;
        }
        let z = path.features.row(t)[0];
        (1e6 * (0.5 * if z.is_finite() { z } else { 0.0 }).exp()).round()
    };
    let mut header = vec!["date", "price", "return"];
    if s.columns > 0 {
        header.push("volume");
    }
    header.push("h");
    let mut rows = Vec::with_capacity(s.length + 1);
    let mut first = vec![(path.dates[0] - Days::new(1)).to_string(), fmt_num(100.0), String::new()];
    if s.columns > 0 {
        first.push(fmt_num(1e6));
    }
    first.push(String::new());
    rows.push(first);
    let mut log_price = 100f64.ln();
    for t in 0..s.length {
        log_price += path.returns[t];
        let mut row = vec![path.dates[t].to_string(), fmt_num(log_price.exp()), fmt_num(path.returns[t])];
        if s.columns > 0 {
            row.push(fmt_num(volume(t)));
        }
        row.push(fmt_num(path.variance[t]));
        rows.push(row);
    }
    let meta = [
        ("family", s.family.to_string()),
        ("spec", serde_json::to_string(&spec)?),
        ("params", serde_json::to_string(&params)?),
    ];
    w.csv_with_meta("simulated.csv", &meta, &header, &rows)
}

fn build_kernel(cfg: &RunConfig) -> Result<(Box<dyn Kernel>, Option<Vec<f64>>)> {
    let d = &cfg.decompose;
    Ok(match d.kernel {
        KernelKind::Garch => {
            let k = embeddings::garch(d.alpha, d.beta)?;
            let w = k.weights().to_vec();
            (Box::new(k), Some(w))
        }
        KernelKind::Figarch => {
            let k = embeddings::figarch(d.d, d.lags)?;
            let w = k.weights().to_vec();
            (Box::new(k), Some(w))
        }
        KernelKind::Exponential => {
            let (a, r) = (d.alpha, d.rate);
            (Box::new(SampledKernel::from_fn(move |u| a * (-r * u).exp(), d.step, 1e-12)?), None)
        }
        KernelKind::Hyperbolic => {
            let (a, e) = (d.alpha, d.d - 1.0);
            (Box::new(SampledKernel::truncated(move |u| a * (1.0 + u).powf(e), d.step, d.lags as f64)?), None)
        }
    })
}

#[derive(Serialize)]
struct DecomposeSummary<'a> {
    kernel: String,
    level: f64,
    tempo: f64,
    shape_mass: f64,
    shape_first_moment: f64,
    triple: &'a CanonicalTriple,
}

fn cmd_decompose(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    let (kernel, original) = build_kernel(cfg)?;
    let triple = decompose(kernel.as_ref())?;
    let (m0, m1) = triple.shape_moments();
    w.json(
        "decompose.json",
        &DecomposeSummary {
            kernel: format!("{:?}", cfg.decompose.kernel).to_ascii_lowercase(),
            level: triple.level,
            tempo: triple.tempo,
            shape_mass: m0,
            shape_first_moment: m1,
            triple: &triple,
        },
    )?;
    let lags = original.as_ref().map_or(cfg.decompose.lags, Vec::len).min(100_000);
    let psi = discrete_weights(&triple, lags)?;
    let rows: Vec<Vec<String>> = psi
        .weights()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let orig = original.as_ref().and_then(|o| o.get(i)).map_or(String::new(), |x| fmt_num(*x));
            vec![(i + 1).to_string(), fmt_num(*v), orig]
        })
        .collect();
    w.csv("decompose_weights.csv", &["lag", "psi", "original"], &rows)?;
    let g = &triple.shape;
    let rows: Vec<Vec<String>> =
        g.values.iter().enumerate().map(|(i, v)| vec![fmt_num(i as f64 * g.step), fmt_num(*v)]).collect();
    w.csv("decompose_shape.csv", &["v", "g"], &rows)
}

#[derive(Serialize)]
struct DiagnoseOutput<'a> {
    model: &'a str,
    residuals: &'a DiagnosticsReport,
    gate_summary: &'a [SeriesSummary],
    surface: SurfaceMeta<'a>,
}

#[derive(Serialize)]
struct SurfaceMeta<'a> {
    x: &'a str,
    y: &'a str,
    z: &'a str,
    bins: usize,
    empty_fraction: f64,
}

fn default_axes(f: Family) -> (GateVar, GateVar) {
    let x = if f.has_regime() {
        GateVar::P
    } else if f.has_fractional() {
        GateVar::D
    } else if f.has_clock() {
        GateVar::BetaClk
    } else {
        GateVar::Shock
    };
    let y = if f.has_clock() && x != GateVar::BetaClk { GateVar::BetaClk } else { GateVar::Persistence };
    (x, y)
}

fn cmd_diagnose(cfg: &RunConfig, w: &mut ArtifactWriter) -> Result<()> {
    need_models(cfg)?;
    let d = &cfg.diagnose;
    let m = match &d.model {
        Some(name) => cfg
            .models
            .iter()
            .find(|m| &m.name == name)
            .ok_or_else(|| Error::Config(format!("diagnose.model '{name}' is not selected")))?,
        None => &cfg.models[0],
    };
    let data = prepare(cfg)?;
    let (spec, fit) = fit_model(cfg, m, &data)?;
    let params = fit.params.clone();
    let (vp, gp) = filter_variance(&spec, &params, &data.returns, &data.features)?;
    let report = residual_diagnostics(&vp, d.acf_lags, Some(d.window))?;
    let summary = gate_summary(&gp, &vp, &data.features, vp.burn_in);
    let (dx, dy) = default_axes(m.family);
    let (x, y) = (d.x.unwrap_or(dx), d.y.unwrap_or(dy));
    let surface: Surface = gate_surface_grid(&gp, &vp, x, y, d.z, d.bins)?;
    w.json(
        "diagnostics.json",
        &DiagnoseOutput {
            model: &m.name,
            residuals: &report,
            gate_summary: &summary,
            surface: SurfaceMeta {
                x: x.name(),
                y: y.name(),
                z: d.z.name(),
                bins: surface.bins,
                empty_fraction: surface.empty_fraction,
            },
        },
    )?;
    let rows: Vec<Vec<String>> = surface
        .cells
        .iter()
        .map(|c| {
            vec![
                c.ix.to_string(),
                c.iy.to_string(),
                fmt_num(c.x_mid),
                fmt_num(c.y_mid),
                c.count.to_string(),
                c.z_mean.map_or(String::new(), fmt_num),
            ]
        })
        .collect();
    w.csv("surface.csv", &["ix", "iy", &format!("{}_mid", x.name()), &format!("{}_mid", y.name()), "count", &format!("{}_mean", d.z.name())], &rows)?;
    let mut rows = Vec::new();
    for lb in &report.ljung_box {
        for ((t, pz), (_, pz2)) in lb.rolling_z.iter().zip(&lb.rolling_z2) {
            rows.push(vec![lb.lags.to_string(), t.to_string(), fmt_num(*pz), fmt_num(*pz2)]);
        }
    }
    w.csv("ljung_box_rolling.csv", &["lags", "window_end", "p_z", "p_z2"], &rows)
}
