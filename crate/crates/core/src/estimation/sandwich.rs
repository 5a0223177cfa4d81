//! Robust QMLE covariance `I⁻¹ J I⁻¹ / N`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::likelihood::{analytic_score, Score};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{ModelSpec, Params};

/// Information matrices with a condition number above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// Row-major `P × P` covariance of the natural parameters.
    pub cov: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub condition: f64,
}

/// Sandwich covariance of the natural parameters at `params`.
pub fn sandwich_covariance(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
) -> Result<Sandwich> {
    sandwich_from_score(&analytic_score(spec, params, returns, features)?)
}

/// `I = mean(∇h∇hᵀ / 2h²)` and `J = mean(g_t g_tᵀ)` from the per-period
/// scores; `I` is inverted through its SVD.
pub fn sandwich_from_score(score: &Score) -> Result<Sandwich> {
    let p = score.n_params;
    let n = score.n_obs();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if n <= p {
        return Err(Error::SampleTooShort { len: n, min: p });
    }
    let mut info = DMatrix::<f64>::zeros(p, p);
    let mut outer = DMatrix::<f64>::zeros(p, p);
    for t in 0..n {
        let g = score.row(t);
        let d = &score.dlogh[t * p..(t + 1) * p];
        for i in 0..p {
            for j in 0..=i {
                info[(i, j)] += 0.5 * d[i] * d[j];
                outer[(i, j)] += g[i] * g[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            info[(j, i)] = info[(i, j)];
            outer[(j, i)] = outer[(i, j)];
        }
    }
    info /= n as f64;
    outer /= n as f64;
    if info.iter().any(|v| !v.is_finite()) || outer.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: n, what: "information matrix" });
    }
    let svd = info.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateHessian { condition });
    }
    let inv = svd
        .pseudo_inverse(smax * f64::EPSILON * p as f64)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let v = &inv * outer * &inv / n as f64;
    let cov: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| 0.5 * (v[(i, j)] + v[(j, i)])).collect()).collect();
    let std_errors = (0..p).map(|i| cov[i][i].max(0.0).sqrt()).collect();
    Ok(Sandwich { cov, std_errors, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{simulate_path, Family, FeatureGenerator};

    #[test]
    fn garch_sandwich_is_positive_definite() {
        let spec = ModelSpec::new(Family::Garch, 0);
        let p = Params::garch(0.05, 0.08, 0.9);
        let s = simulate_path(&spec, &p, 3000, 11, &FeatureGenerator::Iid { columns: 0 }).unwrap();
        let sw = sandwich_covariance(&spec, &p, &s.returns, &FeatureMatrix::empty(3000)).unwrap();
        let m = DMatrix::from_fn(3, 3, |i, j| sw.cov[i][j]);
        assert!(m.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
        assert!(sw.std_errors.iter().all(|s| s.is_finite() && *s > 0.0));
    }

    #[test]
    fn collinear_information_is_degenerate() {
        // A regime gate fed by a constant column duplicates the intercept direction.
        let spec = ModelSpec::new(Family::Rsm, 1).with_burn_in(1);
        let p = Params { omega: 0.05, alpha: 0.05, beta_low: 0.9, beta_high: 0.9, gamma_p: vec![0.0], ..Params::default() };
        let r: Vec<f64> = (0..400).map(|t| if t % 3 == 0 { 1.2 } else { -0.7 }).collect();
        let f = FeatureMatrix::from_columns(vec!["c".into()], vec![vec![0.0; 400]]).unwrap();
        assert!(matches!(sandwich_covariance(&spec, &p, &r, &f), Err(Error::DegenerateHessian { .. })));
    }
}
