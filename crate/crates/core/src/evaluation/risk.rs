//! VaR and ES forecasts and the FZ0 joint score. Losses are `L = −r`; VaR
//! and ES are positive loss magnitudes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{normal_pdf, normal_quantile, quantile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarEs {
    pub var: f64,
    pub es: f64,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 0.5) {
        return Err(Error::InvalidInput(format!("tail level {level} outside (0, 0.5)")));
    }
    Ok(())
}

/// Gaussian plug-in: `VaR = −z_level √ĥ`, `ES = φ(z_level)/level · √ĥ`.
pub fn var_es_forecast(h: f64, level: f64) -> Result<VarEs> {
    check_level(level)?;
    let z = normal_quantile(level);
    let s = h.sqrt();
    Ok(VarEs { var: -z * s, es: normal_pdf(z) / level * s })
}

/// Filtered historical simulation: the empirical `level`-quantile `q` of
/// standardized residuals gives `VaR = −q √ĥ` and `ES = −mean(z | z ≤ q) √ĥ`.
pub fn var_es_filtered(h: f64, std_resid: &[f64], level: f64) -> Result<VarEs> {
    check_level(level)?;
    let mut z: Vec<f64> = std_resid.iter().copied().filter(|v| v.is_finite()).collect();
    if z.is_empty() {
        return Err(Error::EmptySample);
    }
    z.sort_by(f64::total_cmp);
    let q = quantile(&z, level);
    let tail: Vec<f64> = z.iter().copied().take_while(|v| *v <= q).collect();
    let es_z = if tail.is_empty() { q } else { tail.iter().sum::<f64>() / tail.len() as f64 };
    let s = h.sqrt();
    Ok(VarEs { var: -q * s, es: -es_z * s })
}

/// Per-period FZ0 score
/// `1{L>v}(L−v)/(level·e) + v/e + log e − 1` with `L = −r`.
pub fn fz_terms(var: &[f64], es: &[f64], r: &[f64], level: f64) -> Result<Vec<f64>> {
    check_level(level)?;
    if r.is_empty() {
        return Err(Error::EmptySample);
    }
    if var.len() != r.len() || es.len() != r.len() {
        return Err(Error::InvalidInput("VaR, ES and returns must be aligned".into()));
    }
    if let Some(i) = es.iter().position(|e| !(*e > 0.0)) {
        return Err(Error::NonpositiveEs { es: es[i], index: i });
    }
    Ok(var
        .iter()
        .zip(es)
        .zip(r)
        .map(|((v, e), r)| {
            let l = -r;
            let hit = if l > *v { (l - v) / (level * e) } else { 0.0 };
            hit + v / e + e.ln() - 1.0
        })
        .collect())
}

pub fn fz_loss(var: &[f64], es: &[f64], r: &[f64], level: f64) -> Result<f64> {
    let t = fz_terms(var, es, r, level)?;
    Ok(t.iter().sum::<f64>() / t.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_reference_values() {
        let a = var_es_forecast(1.0, 0.05).unwrap();
        assert!((a.var - 1.644_853_626_951_472_2).abs() < 1e-9);
        assert!((a.es - 2.062_712_807_072_959).abs() < 1e-9);
        let b = var_es_forecast(4.0, 0.01).unwrap();
        assert!((b.var - 2.0 * 2.326_347_874_040_841).abs() < 1e-9);
        let c = var_es_forecast(9.0, 0.05).unwrap();
        assert!((c.es / c.var - a.es / a.var).abs() < 1e-14);
        assert!(c.es > c.var);
    }

    #[test]
    fn doubling_es_changes_score_by_closed_form() {
        // Δ = Σ_hits (L−v)/(level e)(½ − 1) + v/e(½ − 1) + log 2 per period.
        let (v, e, level) = (1.5, 2.0, 0.05);
        let r = [-3.0, 0.5, -1.0, -2.0];
        let n = r.len() as f64;
        let a = fz_loss(&[v; 4], &[e; 4], &r, level).unwrap();
        let b = fz_loss(&[v; 4], &[2.0 * e; 4], &r, level).unwrap();
        let hits: f64 = r.iter().map(|r| (-r - v).max(0.0)).sum();
        let delta = -0.5 * hits / (level * e) / n - 0.5 * v / e + 2f64.ln();
        assert!((b - a - delta).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_es_rejected() {
        assert!(matches!(fz_loss(&[1.0], &[0.0], &[0.1], 0.05), Err(Error::NonpositiveEs { index: 0, .. })));
    }

    #[test]
    fn filtered_matches_gaussian_on_normal_quantiles() {
        let n = 20001;
        let z: Vec<f64> = (1..=n).map(|i| normal_quantile(i as f64 / (n as f64 + 1.0))).collect();
        let f = var_es_filtered(1.0, &z, 0.05).unwrap();
        let g = var_es_forecast(1.0, 0.05).unwrap();
        assert!((f.var - g.var).abs() < 1e-3);
        assert!((f.es - g.es).abs() < 5e-3);
    }
}
