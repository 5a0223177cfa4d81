use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hybrid::Penalty;
use super::likelihood::{analytic_score, Objective};
use super::optimizer::{bfgs, BfgsOptions, Convergence, Minimum};
use super::sandwich::sandwich_from_score;
use super::transform::{from_params, to_params};
use super::whittle::{rolling_whittle, WhittleEstimate, ANCHOR_STEP, BAND_FRACTION};
use crate::error::{Error, Result};
use crate::features::{sample_variance, FeatureMatrix};
use crate::frac::{select_truncation, Truncation, TruncationSchedule};
use crate::models::{admissibility_check, unconditional_mean, AdmissibilityReport, Family, GateStats, ModelSpec, Params};

/// Usable periods required after the burn-in.
pub const MIN_USABLE: usize = 250;
/// Periods used to set the gradient clipping thresholds.
const CLIP_PERIODS: usize = 250;
const CLIP_QUANTILE: f64 = 0.99;

/// Settings of the Whittle penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridOptions {
    /// Penalty weight; `None` means `T/100`.
    pub lambda: Option<f64>,
    pub window: usize,
    pub band_fraction: f64,
    pub step: usize,
}

impl Default for HybridOptions {
    fn default() -> Self {
        Self { lambda: None, window: 512, band_fraction: BAND_FRACTION, step: ANCHOR_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Total starts; the first is the moment-based start.
    pub starts: usize,
    pub seed: u64,
    /// Standard deviation of the start jitter in unconstrained space.
    pub jitter: f64,
    pub clip: bool,
    pub covariance: bool,
    pub bfgs: BfgsOptions,
    /// Whittle penalty; ignored by families without a fractional gate.
    pub hybrid: Option<HybridOptions>,
    /// Replaces the moment-based start.
    pub start: Option<Params>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            seed: 0,
            jitter: 0.5,
            clip: true,
            covariance: true,
            bfgs: BfgsOptions::default(),
            hybrid: None,
            start: None,
        }
    }
}

/// Outcome of one start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub index: usize,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub convergence: Option<Convergence>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub param_names: Vec<String>,
    pub params: Params,
    pub params_unconstrained: Vec<f64>,
    /// Total `ℓ_T` over post-burn-in periods (unpenalized).
    pub loglik: f64,
    /// Whittle penalty at the optimum, zero when none was applied.
    pub penalty: f64,
    /// Sup-norm of the mean unconstrained gradient of the objective.
    pub score_norm: f64,
    pub cov_sandwich: Option<Vec<Vec<f64>>>,
    pub std_errors: Option<Vec<f64>>,
    pub cov_condition: Option<f64>,
    /// Set when the covariance could not be formed.
    pub cov_error: Option<String>,
    pub convergence: Convergence,
    pub converged: bool,
    pub iterations: usize,
    #[serde(rename = "K_used")]
    pub k_used: Option<usize>,
    pub truncation: Option<Truncation>,
    pub n_obs: usize,
    pub burn_in: usize,
    pub admissibility: AdmissibilityReport,
    pub starts: Vec<StartSummary>,
    pub whittle: Option<WhittleEstimate>,
}

impl FitResult {
    pub fn natural(&self) -> Vec<f64> {
        self.params.to_vec(&ModelSpec {
            family: self.family,
            lags: None,
            p_features: vec![0; self.params.gamma_p.len()],
            d_features: vec![0; self.params.gamma_d.len()],
            clock_features: vec![0; self.params.eta.len()],
            burn_in: None,
        })
    }
}

/// Moment-informed start: fixed persistence shares with `ω` matched to the
/// sample variance through the unconditional mean.
pub fn moment_start(spec: &ModelSpec, returns: &[f64]) -> Result<Params> {
    reference_params(spec, sample_variance(returns).max(1e-12))
}

/// The moment-start coefficients with `ω` chosen so that the unconditional
/// variance at neutral gates equals `variance`.
pub fn reference_params(spec: &ModelSpec, variance: f64) -> Result<Params> {
    let f = spec.family;
    let mut p = Params {
        omega: 1.0,
        gamma_p: vec![0.0; spec.p_features.len()],
        eta: vec![0.0; spec.clock_features.len()],
        gamma_d: vec![0.0; spec.d_features.len()],
        ..Params::default()
    };
    if f.has_fixed_beta() {
        p.alpha = if f.has_leverage() { 0.03 } else { 0.05 };
        p.gamma_lev = if f.has_leverage() { 0.06 } else { 0.0 };
        p.beta = 0.9;
    }
    if f.has_regime() {
        p.alpha = 0.05;
        p.beta_low = 0.85;
        p.beta_high = 0.9;
    }
    if f.has_clock() {
        // With a regime gate the clock loading shares the room below β_high.
        p.alpha = if f.has_regime() { 0.09 } else { 0.5 };
        p.kappa = if f.has_regime() { 0.05 } else { 0.1 };
    }
    if f.has_fractional() {
        p.dbar = 0.1;
    }
    let m1 = unconditional_mean(spec, &p, GateStats::Constant)?;
    p.omega = variance / m1;
    Ok(p)
}

/// Per-coordinate `q`-quantile of `|score|` over the first `CLIP_PERIODS` rows.
fn clip_thresholds(period_scores: &[f64], np: usize) -> Vec<f64> {
    let rows = (period_scores.len() / np.max(1)).min(CLIP_PERIODS);
    (0..np)
        .map(|j| {
            let mut v: Vec<f64> = (0..rows).map(|i| period_scores[i * np + j].abs()).collect();
            if v.is_empty() {
                return f64::INFINITY;
            }
            v.sort_by(f64::total_cmp);
            let k = ((CLIP_QUANTILE * (v.len() - 1) as f64).round() as usize).min(v.len() - 1);
            v[k]
        })
        .collect()
}

fn run_start(obj: &Objective<'_>, u0: &[f64], opts: &FitOptions) -> Result<Minimum> {
    let clip = if opts.clip {
        let ev = obj.evaluate(u0, true)?;
        Some(clip_thresholds(&ev.period_scores, u0.len()))
    } else {
        None
    };
    bfgs(
        |u| {
            let e = obj.evaluate(u, false)?;
            Ok((e.value, e.grad))
        },
        u0,
        clip.as_deref(),
        &opts.bfgs,
    )
}

/// Gaussian QMLE by multi-start BFGS in unconstrained coordinates.
///
/// Starts run in parallel; the best objective wins. A start that ends
/// without meeting a stopping rule is still eligible and reported through
/// `convergence`. Fails only when every start fails.
pub fn fit_qmle(spec: &ModelSpec, returns: &[f64], features: &FeatureMatrix, opts: &FitOptions) -> Result<FitResult> {
    spec.validate(features.cols())?;
    let n = returns.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if features.rows() != n {
        return Err(Error::InvalidInput(format!("{} feature rows for {n} returns", features.rows())));
    }
    let burn = spec.burn_in(features);
    if n < burn + MIN_USABLE {
        return Err(Error::InsufficientHistory { needed: burn + MIN_USABLE, got: n });
    }
    let (penalty, whittle) = match (&opts.hybrid, spec.family.has_fractional()) {
        (Some(h), true) => {
            let w = rolling_whittle(returns, h.window, h.band_fraction, h.step)?;
            let lambda = h.lambda.unwrap_or_else(|| Penalty::default_lambda(n));
            (Some(Penalty::new(&w, lambda)?), Some(w))
        }
        _ => (None, None),
    };
    let obj = Objective { spec, returns, features, penalty: penalty.as_ref() };

    let base = match &opts.start {
        Some(p) => {
            p.check_shape(spec)?;
            p.clone()
        }
        None => moment_start(spec, returns)?,
    };
    let mut u0 = from_params(spec, &base);
    // A fractional start can make the variance negative; shrink d̄ until it is usable.
    let l = spec.layout();
    for _ in 0..20 {
        if obj.value(&u0).is_ok_and(f64::is_finite) {
            break;
        }
        match l.dbar {
            Some(i) => u0[i] -= 1.0,
            None => break,
        }
    }

    let starts = opts.starts.max(1);
    let mut inits = vec![u0.clone()];
    for s in 1..starts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(s as u64);
        let mut u = u0.clone();
        for _ in 0..20 {
            u = u0.iter().map(|v| v + opts.jitter * rng.sample::<f64, _>(StandardNormal)).collect();
            if obj.value(&u).is_ok_and(f64::is_finite) {
                break;
            }
        }
        inits.push(u);
    }

    let outcomes: Vec<Result<Minimum>> = inits.par_iter().map(|u| run_start(&obj, u, opts)).collect();
    let summaries: Vec<StartSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(index, o)| match o {
            Ok(m) => StartSummary {
                index,
                objective: Some(m.value),
                iterations: m.iterations,
                convergence: Some(m.convergence),
                error: None,
            },
            Err(e) => StartSummary { index, objective: None, iterations: 0, convergence: None, error: Some(e.to_string()) },
        })
        .collect();
    let mut best: Option<Minimum> = None;
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(m) if m.value.is_finite() => {
                if best.as_ref().is_none_or(|b| m.value < b.value) {
                    best = Some(m);
                }
            }
            Ok(_) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some(best) = best else {
        return Err(first_err.unwrap_or(Error::NoConvergence { iterations: 0, best: f64::INFINITY }));
    };
    finish(spec, returns, features, penalty.as_ref(), whittle, best, summaries, opts)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &ModelSpec,
    returns: &[f64],
    features: &FeatureMatrix,
    penalty: Option<&Penalty>,
    whittle: Option<WhittleEstimate>,
    best: Minimum,
    starts: Vec<StartSummary>,
    opts: &FitOptions,
) -> Result<FitResult> {
    let params = to_params(spec, &best.x);
    let score = analytic_score(spec, &params, returns, features)?;
    let pen = penalty.map_or(0.0, |p| p.value(&score.gates));
    let (cov, se, cond, cov_error) = if opts.covariance {
        match sandwich_from_score(&score) {
            Ok(s) => (Some(s.cov), Some(s.std_errors), Some(s.condition), None),
            Err(e) => (None, None, None, Some(e.to_string())),
        }
    } else {
        (None, None, None, None)
    };
    let truncation = spec
        .family
        .has_fractional()
        .then(|| select_truncation(returns.len(), params.dbar, &TruncationSchedule::default()));
    let admissibility = admissibility_check(spec, &params, Some(&score.gates));
    Ok(FitResult {
        family: spec.family,
        param_names: spec.layout().names(spec),
        params_unconstrained: best.x.clone(),
        loglik: score.loglik,
        penalty: pen,
        score_norm: best.grad.iter().fold(0.0f64, |a, g| a.max(g.abs())),
        cov_sandwich: cov,
        std_errors: se,
        cov_condition: cond,
        cov_error,
        convergence: best.convergence,
        converged: best.convergence.converged(),
        iterations: best.iterations,
        k_used: spec.lags,
        truncation,
        n_obs: score.n_obs(),
        burn_in: score.burn_in,
        admissibility,
        starts,
        whittle,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{simulate_path, FeatureGenerator};

    #[test]
    fn moment_start_matches_variance() {
        let r: Vec<f64> = (0..600).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        for f in Family::ALL {
            let spec = ModelSpec::new(f, 2);
            let p = moment_start(&spec, &r).unwrap();
            let m = unconditional_mean(&spec, &p, GateStats::Constant).unwrap();
            assert!((m - sample_variance(&r)).abs() < 1e-12, "{f}");
            assert!(admissibility_check(&spec, &p, None).passed, "{f}");
        }
    }

    #[test]
    fn clip_quantile_per_coordinate() {
        let scores: Vec<f64> = (0..200).flat_map(|i| [i as f64, -(i as f64) * 2.0]).collect();
        let c = clip_thresholds(&scores, 2);
        assert_eq!(c, vec![197.0, 394.0]);
    }

    #[test]
    fn garch_fit_recovers_truth_and_is_a_fixed_point() {
        let spec = ModelSpec::new(Family::Garch, 0);
        let truth = Params::garch(0.05, 0.08, 0.9);
        let s = simulate_path(&spec, &truth, 8000, 5, &FeatureGenerator::Iid { columns: 0 }).unwrap();
        let f = FeatureMatrix::empty(8000);
        let fit = fit_qmle(&spec, &s.returns, &f, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{:?}", fit.convergence);
        assert!(fit.score_norm < 1e-5);
        let se = fit.std_errors.clone().unwrap();
        for (i, t) in truth.to_vec(&spec).iter().enumerate() {
            assert!((fit.natural()[i] - t).abs() < 4.0 * se[i], "{i}: {} vs {t}", fit.natural()[i]);
        }
        let again = fit_qmle(
            &spec,
            &s.returns,
            &f,
            &FitOptions { starts: 1, start: Some(fit.params.clone()), ..FitOptions::default() },
        )
        .unwrap();
        assert!(again.iterations <= 2, "{}", again.iterations);
        for (a, b) in again.natural().iter().zip(fit.natural()) {
            assert!((a - b).abs() < 1e-6 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn short_sample_rejected() {
        let spec = ModelSpec::new(Family::Garch, 0);
        let r = vec![0.01; 400];
        assert!(matches!(
            fit_qmle(&spec, &r, &FeatureMatrix::empty(400), &FitOptions::default()),
            Err(Error::InsufficientHistory { needed: 522, got: 400 })
        ));
    }
}
