//! Whittle-penalized likelihood for families with a fractional gate.

use serde::{Deserialize, Serialize};

use super::likelihood::quasi_loglik;
use super::whittle::WhittleEstimate;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{GatePath, ModelSpec, Params};

/// `λ Σ_{t ∈ anchors} (d_t − d̃_t)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub anchors: Vec<usize>,
    pub targets: Vec<f64>,
    pub lambda: f64,
}

impl Penalty {
    /// Anchors of `whittle` (indices into the fitted sample) with weight `lambda`.
    pub fn new(whittle: &WhittleEstimate, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("penalty weight must be nonnegative, got {lambda}")));
        }
        let (anchors, targets) = whittle
            .anchors
            .iter()
            .zip(&whittle.d_tilde)
            .filter(|(t, _)| **t >= 1)
            .map(|(t, d)| (*t, *d))
            .unzip();
        Ok(Self { anchors, targets, lambda })
    }

    /// Default weight `λ = T/100`.
    pub fn default_lambda(len: usize) -> f64 {
        len as f64 / 100.0
    }

    pub fn value(&self, gates: &GatePath) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda
            * self
                .anchors
                .iter()
                .zip(&self.targets)
                .map(|(&t, dt)| (gates.d[t] - dt).powi(2))
                .sum::<f64>()
    }

    /// Gradient in natural coordinates via `∂d_t/∂d̄ = σ` and
    /// `∂d_t/∂γ_d = d̄ σ(1−σ) z_{t−1}`.
    pub fn gradient(&self, spec: &ModelSpec, params: &Params, features: &FeatureMatrix) -> Vec<f64> {
        let l = spec.layout();
        let mut g = vec![0.0; l.len];
        let Some(id) = l.dbar else { return g };
        for (&t, dt) in self.anchors.iter().zip(&self.targets) {
            let row = features.row(t - 1);
            let z: Vec<f64> = spec
                .d_features
                .iter()
                .map(|&j| if row[j].is_finite() { row[j] } else { 0.0 })
                .collect();
            let x: f64 = params.gamma_d.iter().zip(&z).map(|(a, b)| a * b).sum();
            let s = 1.0 / (1.0 + (-x).exp());
            let d = params.dbar * s;
            let c = 2.0 * self.lambda * (d - dt);
            g[id] += c * s;
            for (i, zj) in l.gamma_d.clone().zip(&z) {
                g[i] += c * params.dbar * s * (1.0 - s) * zj;
            }
        }
        g
    }
}

/// Penalized objective `Σ ℓ_t − λ Σ (d_t − d̃_t)²` and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridLogLik {
    pub total: f64,
    pub loglik: f64,
    pub penalty: f64,
}

pub fn hybrid_loglik(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
    whittle: &WhittleEstimate,
    lambda: f64,
) -> Result<HybridLogLik> {
    if !spec.family.has_fractional() {
        return Err(Error::SpecHasNoFractionalGate(spec.family.to_string()));
    }
    let pen = Penalty::new(whittle, lambda)?;
    if let Some(&t) = pen.anchors.iter().find(|&&t| t >= returns.len()) {
        return Err(Error::InvalidInput(format!("Whittle anchor {t} lies outside the sample")));
    }
    let ll = quasi_loglik(spec, params, returns, features)?;
    let penalty = pen.value(&ll.gates);
    Ok(HybridLogLik { total: ll.total - penalty, loglik: ll.total, penalty })
}
