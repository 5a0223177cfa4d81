use nalgebra::DVector;

use super::hybrid::Penalty;
use super::transform::to_natural;
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::models::{filter_variance, filter_with_gradient, GatePath, ModelSpec, Params, VariancePath};

/// Gaussian quasi log-likelihood `ℓ_T = −½ Σ_{t ≥ burn-in} (log h_t + r_t²/h_t)`.
#[derive(Debug, Clone)]
pub struct LogLik {
    pub total: f64,
    pub terms: Vec<f64>,
    pub path: VariancePath,
    pub gates: GatePath,
}

pub fn quasi_loglik(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
) -> Result<LogLik> {
    let (path, gates) = filter_variance(spec, params, returns, features)?;
    let terms = path.loglik_terms.clone();
    Ok(LogLik { total: terms.iter().sum(), terms, path, gates })
}

/// Score of `ℓ_T` in natural coordinates with its per-period pieces.
#[derive(Debug, Clone)]
pub struct Score {
    pub loglik: f64,
    /// `Σ_t ∂ℓ_t/∂θ`.
    pub total: Vec<f64>,
    /// `∂ℓ_t/∂θ`, row-major over post-burn-in periods.
    pub per_period: Vec<f64>,
    /// `∂h_t/∂θ / h_t`, row-major over post-burn-in periods.
    pub dlogh: Vec<f64>,
    pub n_params: usize,
    pub burn_in: usize,
    pub path: VariancePath,
    pub gates: GatePath,
}

impl Score {
    pub fn n_obs(&self) -> usize {
        self.per_period.len() / self.n_params.max(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.per_period[i * self.n_params..(i + 1) * self.n_params]
    }
}

/// `∂ℓ_t/∂θ = ½ (r_t² − h_t)/h_t² · ∂h_t/∂θ`, with `∂h_t` accumulated forward.
pub fn analytic_score(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
) -> Result<Score> {
    let out = filter_with_gradient(spec, params, returns, features)?;
    let np = out.n_params;
    let b = out.path.burn_in;
    let n = returns.len();
    let mut total = vec![0.0; np];
    let mut per_period = Vec::with_capacity((n - b) * np);
    let mut dlogh = Vec::with_capacity((n - b) * np);
    for t in b..n {
        let h = out.path.h[t];
        let w = 0.5 * (returns[t] * returns[t] - h) / (h * h);
        for (k, d) in out.dh_row(t).iter().enumerate() {
            let g = w * d;
            total[k] += g;
            per_period.push(g);
            dlogh.push(d / h);
        }
    }
    let loglik = out.path.loglik();
    Ok(Score { loglik, total, per_period, dlogh, n_params: np, burn_in: b, path: out.path, gates: out.gates })
}

/// Mean negative (optionally penalized) log-likelihood in unconstrained coordinates.
pub(crate) struct Objective<'a> {
    pub spec: &'a ModelSpec,
    pub returns: &'a [f64],
    pub features: &'a FeatureMatrix,
    pub penalty: Option<&'a Penalty>,
}

/// Objective value, unconstrained gradient and per-period unconstrained scores.
pub(crate) struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
    pub period_scores: Vec<f64>,
}

impl Objective<'_> {
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        let (th, _) = to_natural(self.spec, u);
        let p = Params::from_vec(self.spec, &th)?;
        let ll = quasi_loglik(self.spec, &p, self.returns, self.features)?;
        let pen = match self.penalty {
            Some(pen) => pen.value(&ll.gates),
            None => 0.0,
        };
        let v = -(ll.total - pen) / ll.terms.len() as f64;
        Ok(if v.is_finite() { v } else { f64::INFINITY })
    }

    pub fn evaluate(&self, u: &[f64], keep_periods: bool) -> Result<Evaluation> {
        let (th, jac) = to_natural(self.spec, u);
        let p = Params::from_vec(self.spec, &th)?;
        let sc = analytic_score(self.spec, &p, self.returns, self.features)?;
        let n = sc.n_obs() as f64;
        let mut g_nat = DVector::from_vec(sc.total.clone());
        let mut value = -sc.loglik;
        if let Some(pen) = self.penalty {
            value += pen.value(&sc.gates);
            let pg = pen.gradient(self.spec, &p, self.features);
            g_nat -= DVector::from_vec(pg);
        }
        let g_u = jac.transpose() * g_nat;
        let grad: Vec<f64> = g_u.iter().map(|g| -g / n).collect();
        let period_scores = if keep_periods {
            let np = sc.n_params;
            let mut out = Vec::with_capacity(sc.per_period.len());
            for i in 0..sc.n_obs() {
                let row = DVector::from_column_slice(sc.row(i));
                out.extend((jac.transpose() * row).iter().copied());
            }
            debug_assert_eq!(out.len(), sc.n_obs() * np);
            out
        } else {
            Vec::new()
        };
        Ok(Evaluation { value: value / n, grad, period_scores })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Family;

    #[test]
    fn perfect_fit_terms() {
        // h ≡ r² gives ℓ_t = −½(log r_t² + 1).
        let spec = ModelSpec::new(Family::Garch, 0).with_burn_in(1);
        let p = Params::garch(0.04, 0.0, 0.0);
        let r = vec![0.2, -0.2, 0.2, 0.2];
        let ll = quasi_loglik(&spec, &p, &r, &FeatureMatrix::empty(4)).unwrap();
        for l in &ll.terms {
            assert!((l + 0.5 * (0.04f64.ln() + 1.0)).abs() < 1e-14);
        }
        let sc = analytic_score(&spec, &p, &r, &FeatureMatrix::empty(4)).unwrap();
        assert!(sc.total[0].abs() < 1e-12);
    }
}
