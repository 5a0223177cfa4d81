use serde::{Deserialize, Serialize};

use super::filter::{Engine, GatePath};
use super::params::Params;
use super::spec::ModelSpec;
use crate::error::{Error, Result};

/// One named constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Empirical `E[log(α_t + Ψ_t)]` over a gate path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogContraction {
    pub mean: f64,
    pub std_error: f64,
    pub negative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub checks: Vec<Check>,
    pub log_contraction: Option<LogContraction>,
    pub passed: bool,
}

impl AdmissibilityReport {
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Verifies the parameter box of the family and, given a gate path, the
/// sign of `E[log(α_t + Ψ_t)]`. Never fails; violations are reported.
pub fn admissibility_check(spec: &ModelSpec, params: &Params, gates: Option<&GatePath>) -> AdmissibilityReport {
    let f = spec.family;
    let q = params;
    let mut checks = Vec::new();
    let mut add = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.into(), passed, detail });
    };
    add("omega > 0", q.omega > 0.0, format!("omega = {}", q.omega));
    if f.has_clock() {
        add("0 < alpha0 < 1", q.alpha > 0.0 && q.alpha < 1.0, format!("alpha0 = {}", q.alpha));
        add("kappa > 0", q.kappa > 0.0, format!("kappa = {}", q.kappa));
    } else {
        add("alpha >= 0", q.alpha >= 0.0, format!("alpha = {}", q.alpha));
    }
    if f.has_fixed_beta() {
        add("0 < beta < 1", q.beta > 0.0 && q.beta < 1.0, format!("beta = {}", q.beta));
        let lev = if f.has_leverage() { 0.5 * q.gamma_lev } else { 0.0 };
        let s = q.alpha + lev + q.beta;
        let name = if f.has_leverage() { "alpha + gamma/2 + beta < 1" } else { "alpha + beta < 1" };
        add(name, s < 1.0, format!("sum = {s}"));
    }
    if f.has_leverage() {
        add("gamma_lev >= 0", q.gamma_lev >= 0.0, format!("gamma_lev = {}", q.gamma_lev));
    }
    if f.has_regime() {
        add(
            "0 < beta_low < beta_high < 1",
            q.beta_low > 0.0 && q.beta_low < q.beta_high && q.beta_high < 1.0,
            format!("beta_low = {}, beta_high = {}", q.beta_low, q.beta_high),
        );
        let name = if f.has_clock() { "alpha0 + beta_high < 1" } else { "alpha + beta_high < 1" };
        add(name, q.alpha + q.beta_high < 1.0, format!("sum = {}", q.alpha + q.beta_high));
    }
    if f.has_fractional() {
        add("0 < dbar < 0.5", q.dbar > 0.0 && q.dbar < 0.5, format!("dbar = {}", q.dbar));
    }
    if let Err(e) = params.check_shape(spec) {
        add("gate dimensions", false, e.to_string());
    }

    let log_contraction = gates.filter(|g| !g.shock.is_empty()).map(|g| {
        let lev = if f.has_leverage() { 0.5 * q.gamma_lev } else { 0.0 };
        let x: Vec<f64> = g.shock.iter().zip(&g.persistence).map(|(a, p)| (a + p + lev).ln()).collect();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = if x.len() > 1 { x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        LogContraction { mean, std_error: (var / n).sqrt(), negative: mean < 0.0 }
    });
    if let Some(lc) = &log_contraction {
        checks.push(Check {
            name: "E[log(alpha_t + Psi_t)] < 0".into(),
            passed: lc.negative,
            detail: format!("mean = {:.6e} (se {:.2e})", lc.mean, lc.std_error),
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    AdmissibilityReport { checks, log_contraction, passed }
}

/// Source of `E[α_t + Ψ_t]` for [`unconditional_mean`].
#[derive(Debug, Clone, Copy)]
pub enum GateStats<'a> {
    /// Gates evaluated at `z = 0` (constant gates).
    Constant,
    /// Empirical means over a realized gate path.
    Path(&'a GatePath),
}

/// `E[h] = ω / (1 − E[α_t + Ψ_t] − γ/2)`; the fractional term is centered
/// and does not enter. The GJR term assumes symmetric innovations.
pub fn unconditional_mean(spec: &ModelSpec, params: &Params, stats: GateStats<'_>) -> Result<f64> {
    let load = match stats {
        GateStats::Constant => {
            let mut eng = Engine::new(spec, params)?;
            eng.load_inputs(None);
            let (_, _, _, _, a, psi) = eng.gates();
            a + psi
        }
        GateStats::Path(g) => {
            if g.shock.is_empty() {
                return Err(Error::EmptySample);
            }
            let n = g.shock.len() as f64;
            g.shock.iter().zip(&g.persistence).map(|(a, p)| a + p).sum::<f64>() / n
        }
    };
    let lev = if spec.family.has_leverage() { 0.5 * params.gamma_lev } else { 0.0 };
    let denominator = 1.0 - load - lev;
    if denominator <= 0.0 {
        return Err(Error::UnstableRegion { denominator });
    }
    Ok(params.omega / denominator)
}
