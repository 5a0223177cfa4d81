//! Bijection between unconstrained reals and admissible parameters.
//!
//! - `ω = exp(ω̃)`, `κ = exp(κ̃)`, `d̄ = σ(d̃)/2`;
//! - fixed persistence: `β = σ(β̃)(1−m)`, `α = σ(α̃)(1−β−m)`, and for GJR
//!   `γ = 2σ(γ̃)(1−β−m−α)`;
//! - regime anchors: `β_low = σ(β̃_low)`,
//!   `β_high = β_low + (1−β_low−m)σ(δ̃)`, `α = σ(α̃)(1−β_high−m)`;
//! - clock without regime: `α₀ = σ(α̃)(1−m)`;
//! - gate coefficients are unconstrained.
//!
//! `m = 1e-4` keeps every persistence sum strictly below one.

use nalgebra::DMatrix;

use crate::models::{Layout, ModelSpec, Params};

pub const MARGIN: f64 = 1e-4;
/// Ratios are clamped into `[EPS, 1 − EPS]` before taking logits.
const EPS: f64 = 1e-12;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(EPS, 1.0 - EPS);
    (p / (1.0 - p)).ln()
}

/// Natural parameters and the Jacobian `∂θ_i/∂u_j`.
pub fn to_natural(spec: &ModelSpec, u: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let l: Layout = spec.layout();
    let f = spec.family;
    let n = l.len;
    let mut th = u.to_vec();
    let mut j = DMatrix::<f64>::identity(n, n);
    let m = MARGIN;

    th[l.omega] = u[l.omega].exp();
    j[(l.omega, l.omega)] = th[l.omega];

    if let Some(ib) = l.beta {
        let s = sigmoid(u[ib]);
        let beta = s * (1.0 - m);
        th[ib] = beta;
        let db = s * (1.0 - s) * (1.0 - m);
        j[(ib, ib)] = db;
        let ia = l.alpha;
        let sa = sigmoid(u[ia]);
        let alpha = sa * (1.0 - beta - m);
        th[ia] = alpha;
        j[(ia, ia)] = sa * (1.0 - sa) * (1.0 - beta - m);
        j[(ia, ib)] = -sa * db;
        if let Some(ig) = l.gamma_lev {
            let sg = sigmoid(u[ig]);
            let room = 1.0 - beta - m - alpha;
            th[ig] = 2.0 * sg * room;
            j[(ig, ig)] = 2.0 * sg * (1.0 - sg) * room;
            j[(ig, ib)] = -2.0 * sg * (db + j[(ia, ib)]);
            j[(ig, ia)] = -2.0 * sg * j[(ia, ia)];
        }
    }
    if let (Some(il), Some(ih)) = (l.beta_low, l.beta_high) {
        let sl = sigmoid(u[il]);
        let sh = sigmoid(u[ih]);
        let bl = sl;
        let dbl = sl * (1.0 - sl);
        let bh = bl + (1.0 - bl - m) * sh;
        th[il] = bl;
        th[ih] = bh;
        j[(il, il)] = dbl;
        j[(ih, il)] = dbl * (1.0 - sh);
        j[(ih, ih)] = (1.0 - bl - m) * sh * (1.0 - sh);
        let ia = l.alpha;
        let sa = sigmoid(u[ia]);
        th[ia] = sa * (1.0 - bh - m);
        j[(ia, ia)] = sa * (1.0 - sa) * (1.0 - bh - m);
        j[(ia, il)] = -sa * j[(ih, il)];
        j[(ia, ih)] = -sa * j[(ih, ih)];
    } else if f.has_clock() {
        let ia = l.alpha;
        let sa = sigmoid(u[ia]);
        th[ia] = sa * (1.0 - m);
        j[(ia, ia)] = sa * (1.0 - sa) * (1.0 - m);
    }
    if let Some(ik) = l.kappa {
        th[ik] = u[ik].exp();
        j[(ik, ik)] = th[ik];
    }
    if let Some(id) = l.dbar {
        let s = sigmoid(u[id]);
        th[id] = 0.5 * s;
        j[(id, id)] = 0.5 * s * (1.0 - s);
    }
    (th, j)
}

/// Natural parameters as [`Params`].
pub fn to_params(spec: &ModelSpec, u: &[f64]) -> Params {
    let (th, _) = to_natural(spec, u);
    Params::from_vec(spec, &th).expect("layout length")
}

/// Inverse map; values on or outside a boundary are pulled just inside.
pub fn from_natural(spec: &ModelSpec, th: &[f64]) -> Vec<f64> {
    let l = spec.layout();
    let f = spec.family;
    let m = MARGIN;
    let mut u = th.to_vec();
    u[l.omega] = th[l.omega].max(1e-300).ln();
    if let Some(ib) = l.beta {
        let beta = th[ib];
        u[ib] = logit(beta / (1.0 - m));
        let alpha = th[l.alpha];
        u[l.alpha] = logit(alpha / (1.0 - beta - m));
        if let Some(ig) = l.gamma_lev {
            u[ig] = logit(th[ig] / (2.0 * (1.0 - beta - m - alpha)));
        }
    }
    if let (Some(il), Some(ih)) = (l.beta_low, l.beta_high) {
        let (bl, bh) = (th[il], th[ih]);
        u[il] = logit(bl);
        u[ih] = logit((bh - bl) / (1.0 - bl - m));
        u[l.alpha] = logit(th[l.alpha] / (1.0 - bh - m));
    } else if f.has_clock() {
        u[l.alpha] = logit(th[l.alpha] / (1.0 - m));
    }
    if let Some(ik) = l.kappa {
        u[ik] = th[ik].max(1e-300).ln();
    }
    if let Some(id) = l.dbar {
        u[id] = logit(2.0 * th[id]);
    }
    u
}

/// [`from_natural`] on a [`Params`] value.
pub fn from_params(spec: &ModelSpec, p: &Params) -> Vec<f64> {
    from_natural(spec, &p.to_vec(spec))
}
