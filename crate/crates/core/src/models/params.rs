use serde::{Deserialize, Serialize};

use super::spec::ModelSpec;
use crate::error::{Error, Result};

/// Constrained model parameters.
///
/// Fields a family does not use are left at zero (or empty). `alpha` holds
/// `α₀` for families with a clock gate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub omega: f64,
    pub alpha: f64,
    pub gamma_lev: f64,
    pub beta: f64,
    pub beta_low: f64,
    pub beta_high: f64,
    pub gamma_p: Vec<f64>,
    pub kappa: f64,
    pub eta: Vec<f64>,
    pub dbar: f64,
    pub gamma_d: Vec<f64>,
}

impl Params {
    pub fn garch(omega: f64, alpha: f64, beta: f64) -> Self {
        Self { omega, alpha, beta, ..Self::default() }
    }

    /// Flat natural-parameter vector in [`Layout`](super::Layout) order.
    pub fn to_vec(&self, spec: &ModelSpec) -> Vec<f64> {
        let l = spec.layout();
        let mut v = vec![0.0; l.len];
        v[l.omega] = self.omega;
        v[l.alpha] = self.alpha;
        for (i, x) in [
            (l.gamma_lev, self.gamma_lev),
            (l.beta, self.beta),
            (l.beta_low, self.beta_low),
            (l.beta_high, self.beta_high),
            (l.kappa, self.kappa),
            (l.dbar, self.dbar),
        ] {
            if let Some(i) = i {
                v[i] = x;
            }
        }
        for (r, src) in [(&l.gamma_p, &self.gamma_p), (&l.eta, &self.eta), (&l.gamma_d, &self.gamma_d)] {
            for (i, x) in r.clone().zip(src.iter().chain(std::iter::repeat(&0.0))) {
                v[i] = *x;
            }
        }
        v
    }

    pub fn from_vec(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        let l = spec.layout();
        if v.len() != l.len {
            return Err(Error::InvalidInput(format!(
                "{} expects {} parameters, got {}",
                spec.family,
                l.len,
                v.len()
            )));
        }
        let get = |i: Option<usize>| i.map_or(0.0, |i| v[i]);
        Ok(Self {
            omega: v[l.omega],
            alpha: v[l.alpha],
            gamma_lev: get(l.gamma_lev),
            beta: get(l.beta),
            beta_low: get(l.beta_low),
            beta_high: get(l.beta_high),
            gamma_p: v[l.gamma_p.clone()].to_vec(),
            kappa: get(l.kappa),
            eta: v[l.eta.clone()].to_vec(),
            dbar: get(l.dbar),
            gamma_d: v[l.gamma_d.clone()].to_vec(),
        })
    }

    /// Checks that the gate coefficient vectors match the spec's feature lists.
    pub fn check_shape(&self, spec: &ModelSpec) -> Result<()> {
        for (name, got, want) in [
            ("gamma_p", self.gamma_p.len(), spec.p_features.len()),
            ("eta", self.eta.len(), spec.clock_features.len()),
            ("gamma_d", self.gamma_d.len(), spec.d_features.len()),
        ] {
            if got != want {
                return Err(Error::InvalidInput(format!(
                    "{}: {name} has {got} coefficients, the spec feeds {want} features",
                    spec.family
                )));
            }
        }
        Ok(())
    }
}
