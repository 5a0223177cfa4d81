use serde::{Deserialize, Serialize};

use super::params::Params;
use super::spec::{Layout, ModelSpec};
use crate::error::{Error, Result};
use crate::features::{sample_variance, FeatureMatrix};

/// Realized gate trajectories; series for inactive gates are empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GatePath {
    /// Regime weight `p_t = σ(γ_pᵀz_{t−1})`.
    pub p: Vec<f64>,
    /// Fractional order `d_t = d̄ σ(γ_dᵀz_{t−1})`.
    pub d: Vec<f64>,
    /// Clock persistence `β_t^clk = exp(−κ Δτ_t)`.
    pub beta_clk: Vec<f64>,
    /// Business-time increment `Δτ_t = exp(ηᵀz_{t−1})`.
    pub dtau: Vec<f64>,
    /// Shock loading `α_t`.
    pub shock: Vec<f64>,
    /// Persistence `Ψ_t`.
    pub persistence: Vec<f64>,
}

/// Conditional variances with per-period likelihood terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePath {
    pub h: Vec<f64>,
    /// `ℓ_t = −½(log h_t + r_t²/h_t)` for `t ≥ burn_in`.
    pub loglik_terms: Vec<f64>,
    /// `r_t / √h_t` for every `t`.
    pub std_resid: Vec<f64>,
    pub burn_in: usize,
}

impl VariancePath {
    pub fn loglik(&self) -> f64 {
        self.loglik_terms.iter().sum()
    }
}

/// One evaluation of the recursion at time `t`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Step {
    pub h: f64,
    pub a: f64,
    pub psi: f64,
    pub p: f64,
    pub d: f64,
    pub b: f64,
    pub dtau: f64,
    pub r2: f64,
    pub neg: f64,
    /// `Σ_k ∂π_k(d_t) (r²_{t−k} − h_{t−k})`.
    pub frac_slope: f64,
}

/// Evaluates the unified recursion
/// `h_t = ω + α_t r²_{t−1} [+ γ r²_{t−1} 1{r_{t−1}<0}] + Ψ_t h_{t−1}
///        + Σ_{k≤K} π_k(d_t)(r²_{t−k} − h_{t−k})`.
pub(crate) struct Engine<'a> {
    pub spec: &'a ModelSpec,
    pub params: &'a Params,
    pub layout: Layout,
    pub lags: usize,
    pub pi: Vec<f64>,
    pub dpi: Vec<f64>,
    pub zp: Vec<f64>,
    pub zd: Vec<f64>,
    pub zc: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Engine<'a> {
    pub fn new(spec: &'a ModelSpec, params: &'a Params) -> Result<Self> {
        params.check_shape(spec)?;
        let lags = spec.lags_or_zero();
        Ok(Self {
            spec,
            params,
            layout: spec.layout(),
            lags,
            pi: vec![0.0; lags],
            dpi: vec![0.0; lags],
            zp: vec![0.0; spec.p_features.len()],
            zd: vec![0.0; spec.d_features.len()],
            zc: vec![0.0; spec.clock_features.len()],
        })
    }

    /// Loads `z_{t−1}`; unavailable entries (and `t = 0`) enter as 0.
    pub fn load_inputs(&mut self, row: Option<&[f64]>) {
        let pick = |dst: &mut Vec<f64>, idx: &[usize]| {
            for (d, &j) in dst.iter_mut().zip(idx) {
                let v = row.map_or(0.0, |r| r[j]);
                *d = if v.is_finite() { v } else { 0.0 };
            }
        };
        pick(&mut self.zp, &self.spec.p_features);
        pick(&mut self.zd, &self.spec.d_features);
        pick(&mut self.zc, &self.spec.clock_features);
    }

    /// Gate values from the loaded inputs: `(p, d, β^clk, Δτ, α_t, Ψ_t)`.
    pub fn gates(&self) -> (f64, f64, f64, f64, f64, f64) {
        let f = self.spec.family;
        let q = self.params;
        let p = if f.has_regime() { sigmoid(dot(&q.gamma_p, &self.zp)) } else { 0.0 };
        let d = if f.has_fractional() { q.dbar * sigmoid(dot(&q.gamma_d, &self.zd)) } else { 0.0 };
        let (b, dtau) = if f.has_clock() {
            let dtau = dot(&q.eta, &self.zc).exp();
            ((-q.kappa * dtau).exp(), dtau)
        } else {
            (0.0, 0.0)
        };
        let a = if f.has_clock() { q.alpha * (1.0 - b) } else { q.alpha };
        let blend = (1.0 - p) * q.beta_low + p * q.beta_high;
        let psi = match f {
            super::Family::Garch | super::Family::Gjr | super::Family::Gfigarch => q.beta,
            super::Family::Rsm | super::Family::RsmGf | super::Family::RsmGc => blend,
            super::Family::Gclock | super::Family::GfGc => b,
            super::Family::Tgvol => blend * b,
        };
        (p, d, b, dtau, a, psi)
    }

    /// `h_t` from `r_{0..t}`, `h_{0..t}`, `u_s = r_s² − h_s` (all indexed below `t`).
    pub fn step(&mut self, t: usize, r: &[f64], h: &[f64], u: &[f64], want_slope: bool) -> Step {
        let (p, d, b, dtau, a, psi) = self.gates();
        let q = self.params;
        let r_prev = r[t - 1];
        let r2 = r_prev * r_prev;
        let neg = if r_prev < 0.0 { 1.0 } else { 0.0 };
        let mut h_t = q.omega + a * r2 + psi * h[t - 1];
        if self.spec.family.has_leverage() {
            h_t += q.gamma_lev * r2 * neg;
        }
        let mut frac_slope = 0.0;
        let kmax = self.lags.min(t);
        if kmax > 0 && d != 0.0 {
            let (mut pk, mut dpk) = (1.0, 0.0);
            let mut acc = 0.0;
            for k in 1..=kmax {
                let kf = k as f64;
                let c = (kf - 1.0 - d) / kf;
                dpk = dpk * c - pk / kf;
                pk *= c;
                self.pi[k - 1] = pk;
                self.dpi[k - 1] = dpk;
                let uk = u[t - k];
                acc += pk * uk;
                if want_slope {
                    frac_slope += dpk * uk;
                }
            }
            h_t += acc;
        } else {
            self.pi[..kmax].iter_mut().for_each(|x| *x = 0.0);
            if want_slope && kmax > 0 {
                // d = 0: ∂π_k/∂d = −1/k.
                for k in 1..=kmax {
                    self.dpi[k - 1] = -1.0 / k as f64;
                    frac_slope += self.dpi[k - 1] * u[t - k];
                }
            }
        }
        Step { h: h_t, a, psi, p, d, b, dtau, r2, neg, frac_slope }
    }

    /// Adds the direct partial derivatives of `h_t` (excluding the
    /// recursive `Ψ_t ∂h_{t−1} − Σ π_k ∂h_{t−k}` part) into `g`.
    pub fn direct_partials(&self, s: &Step, h_prev: f64, g: &mut [f64]) {
        let f = self.spec.family;
        let q = self.params;
        let l = &self.layout;
        g[l.omega] += 1.0;
        if f.has_clock() {
            g[l.alpha] += (1.0 - s.b) * s.r2;
        } else {
            g[l.alpha] += s.r2;
        }
        if let Some(i) = l.gamma_lev {
            g[i] += s.r2 * s.neg;
        }
        if let Some(i) = l.beta {
            g[i] += h_prev;
        }
        if f.has_regime() {
            // ∂Ψ/∂B: 1 unless the clock also scales persistence.
            let c = if f == super::Family::Tgvol { s.b } else { 1.0 } * h_prev;
            g[l.beta_low.unwrap()] += c * (1.0 - s.p);
            g[l.beta_high.unwrap()] += c * s.p;
            let cg = c * (q.beta_high - q.beta_low) * s.p * (1.0 - s.p);
            for (i, z) in l.gamma_p.clone().zip(&self.zp) {
                g[i] += cg * z;
            }
        }
        if f.has_clock() {
            let dpsi_db = match f {
                super::Family::Gclock | super::Family::GfGc => 1.0,
                super::Family::Tgvol => (1.0 - s.p) * q.beta_low + s.p * q.beta_high,
                _ => 0.0,
            };
            let cb = -q.alpha * s.r2 + dpsi_db * h_prev;
            // ∂β/∂κ = −Δτ β, ∂β/∂η = −κ Δτ β z.
            let db = -s.dtau * s.b;
            g[l.kappa.unwrap()] += cb * db;
            for (i, z) in l.eta.clone().zip(&self.zc) {
                g[i] += cb * q.kappa * db * z;
            }
        }
        if f.has_fractional() {
            let sd = sigmoid(dot(&q.gamma_d, &self.zd));
            g[l.dbar.unwrap()] += s.frac_slope * sd;
            let cg = s.frac_slope * q.dbar * sd * (1.0 - sd);
            for (i, z) in l.gamma_d.clone().zip(&self.zd) {
                g[i] += cg * z;
            }
        }
    }
}

/// Output of [`filter_with_gradient`].
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub path: VariancePath,
    pub gates: GatePath,
    /// `∂h_t/∂θ` in natural coordinates, row-major `T × P`; empty without gradients.
    pub dh: Vec<f64>,
    pub n_params: usize,
}

impl FilterOutput {
    pub fn dh_row(&self, t: usize) -> &[f64] {
        &self.dh[t * self.n_params..(t + 1) * self.n_params]
    }
}

fn check_inputs(spec: &ModelSpec, params: &Params, returns: &[f64], features: &FeatureMatrix) -> Result<()> {
    if returns.is_empty() {
        return Err(Error::EmptySample);
    }
    if features.rows() != returns.len() {
        return Err(Error::InvalidInput(format!(
            "feature matrix has {} rows for {} returns",
            features.rows(),
            returns.len()
        )));
    }
    spec.validate(features.cols())?;
    params.check_shape(spec)
}

/// Runs the family's recursion with `h_0` set to the sample variance.
pub fn filter_variance(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
) -> Result<(VariancePath, GatePath)> {
    let out = run(spec, params, returns, features, false, None)?;
    Ok((out.path, out.gates))
}

/// As [`filter_variance`], also accumulating `∂h_t/∂θ` forward in time.
pub fn filter_with_gradient(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
) -> Result<FilterOutput> {
    run(spec, params, returns, features, true, None)
}

/// Filter with an explicit `h_0`.
pub fn filter_from(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
    h0: f64,
) -> Result<(VariancePath, GatePath)> {
    let out = run(spec, params, returns, features, false, Some(h0))?;
    Ok((out.path, out.gates))
}

fn push_gates(gates: &mut GatePath, spec: &ModelSpec, s: &Step) {
    let f = spec.family;
    if f.has_regime() {
        gates.p.push(s.p);
    }
    if f.has_fractional() {
        gates.d.push(s.d);
    }
    if f.has_clock() {
        gates.beta_clk.push(s.b);
        gates.dtau.push(s.dtau);
    }
    gates.shock.push(s.a);
    gates.persistence.push(s.psi);
}

fn run(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
    want_grad: bool,
    h0: Option<f64>,
) -> Result<FilterOutput> {
    check_inputs(spec, params, returns, features)?;
    let n = returns.len();
    let burn_in = spec.burn_in(features);
    if burn_in >= n {
        return Err(Error::InsufficientHistory { needed: burn_in + 1, got: n });
    }
    let fractional = spec.family.has_fractional();
    let mut eng = Engine::new(spec, params)?;
    let np = eng.layout.len;
    let mut h = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut gates = GatePath::default();
    let mut dh = if want_grad { vec![0.0; n * np] } else { Vec::new() };

    let h_init = h0.unwrap_or_else(|| sample_variance(returns));
    if !(h_init > 0.0 && h_init.is_finite()) {
        return Err(Error::NonpositiveVariance { t: 0, h: h_init, fractional });
    }
    h.push(h_init);
    u.push(returns[0] * returns[0] - h_init);
    eng.load_inputs(None);
    push_gates(&mut gates, spec, &eng.step_at_zero());

    let mut g = vec![0.0; np];
    for t in 1..n {
        eng.load_inputs(Some(features.row(t - 1)));
        let s = eng.step(t, returns, &h, &u, want_grad);
        if !s.h.is_finite() {
            return Err(Error::NonFinite { t, what: "conditional variance" });
        }
        if s.h <= 0.0 {
            return Err(Error::NonpositiveVariance { t, h: s.h, fractional });
        }
        if want_grad {
            let (past, cur) = dh.split_at_mut(t * np);
            let prev = &past[(t - 1) * np..];
            g.iter_mut().zip(prev).for_each(|(gi, pi)| *gi = s.psi * pi);
            for k in 1..=eng.lags.min(t) {
                let pk = eng.pi[k - 1];
                if pk != 0.0 {
                    let row = &past[(t - k) * np..(t - k + 1) * np];
                    g.iter_mut().zip(row).for_each(|(gi, ri)| *gi -= pk * ri);
                }
            }
            eng.direct_partials(&s, h[t - 1], &mut g);
            cur[..np].copy_from_slice(&g);
        }
        h.push(s.h);
        u.push(returns[t] * returns[t] - s.h);
        push_gates(&mut gates, spec, &s);
    }

    let loglik_terms = (burn_in..n).map(|t| -0.5 * (h[t].ln() + returns[t] * returns[t] / h[t])).collect();
    let std_resid = returns.iter().zip(&h).map(|(r, v)| r / v.sqrt()).collect();
    Ok(FilterOutput {
        path: VariancePath { h, loglik_terms, std_resid, burn_in },
        gates,
        dh,
        n_params: np,
    })
}

impl Engine<'_> {
    /// Gate values at `t = 0`, where no feature row precedes the sample.
    fn step_at_zero(&self) -> Step {
        let (p, d, b, dtau, a, psi) = self.gates();
        Step { h: 0.0, a, psi, p, d, b, dtau, r2: 0.0, neg: 0.0, frac_slope: 0.0 }
    }
}

/// One-step-ahead forecast `ĥ_{T|T−1}` after the last observation, using
/// the filtered path and the final feature row.
pub fn forecast_next(
    spec: &ModelSpec,
    params: &Params,
    returns: &[f64],
    features: &FeatureMatrix,
    path: &VariancePath,
) -> Result<f64> {
    let n = returns.len();
    if path.h.len() != n || n == 0 {
        return Err(Error::InvalidInput("variance path does not match the returns".into()));
    }
    let mut eng = Engine::new(spec, params)?;
    let u: Vec<f64> = returns.iter().zip(&path.h).map(|(r, h)| r * r - h).collect();
    eng.load_inputs(Some(features.row(n - 1)));
    let s = eng.step(n, returns, &path.h, &u, false);
    if !(s.h > 0.0) {
        return Err(Error::NonpositiveVariance { t: n, h: s.h, fractional: spec.family.has_fractional() });
    }
    Ok(s.h)
}
