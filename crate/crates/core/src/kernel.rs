//! Level–tempo–shape decomposition of volatility memory kernels.
//!
//! A nonnegative kernel `f` with finite mass `M = ∫f` and finite first moment
//! factors uniquely as `f(u) = M · μ⁻¹ · g(u/μ)` where `μ = ∫u f / M` and the
//! shape `g` has unit mass and unit first moment. Kernels are handled on
//! uniform grids:
//!
//! - discrete lag weights `ψ_1..ψ_K` use the step embedding
//!   `f(u) = ψ_k` on `[k-1, k)`, so integrals are exact sums;
//! - sampled continuous kernels are piecewise-linear interpolants of their
//!   node values, integrated exactly (trapezoid rule for the mass).
//!
//! Because both representations are closed under the affine change of
//! variables `u = μ v`, decomposition and reconstruction are exact up to
//! floating-point rounding.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the two shape normalizations.
pub const NORMALIZATION_TOL: f64 = 1e-8;
/// Lag budget for the convergence test on infinite weight sequences.
pub const CAUCHY_LAGS: usize = 1_000_000;

/// Interpolation rule between grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Value `values[i]` holds on the cell `[i·step, (i+1)·step)`.
    Step,
    /// Values are node samples at `i·step`, linearly interpolated.
    Linear,
}

/// A nonnegative function on `[0, U]` stored on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub step: f64,
    pub values: Vec<f64>,
    pub profile: Profile,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<f64>, profile: Profile) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidInput(format!("grid step must be positive, got {step}")));
        }
        if profile == Profile::Linear && values.len() < 2 {
            return Err(Error::InvalidInput("linear profile needs at least two nodes".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "kernel value at index {i} is negative or non-finite ({})",
                values[i]
            )));
        }
        Ok(Self { step, values, profile })
    }

    /// Right end of the support.
    pub fn support_end(&self) -> f64 {
        match self.profile {
            Profile::Step => self.step * self.values.len() as f64,
            Profile::Linear => self.step * (self.values.len() - 1) as f64,
        }
    }

    pub fn mass(&self) -> f64 {
        let h = self.step;
        match self.profile {
            Profile::Step => h * self.values.iter().sum::<f64>(),
            Profile::Linear => {
                let v = &self.values;
                let inner: f64 = v[1..v.len() - 1].iter().sum();
                h * (inner + 0.5 * (v[0] + v[v.len() - 1]))
            }
        }
    }

    pub fn first_moment(&self) -> f64 {
        let h = self.step;
        match self.profile {
            Profile::Step => {
                h * h
                    * self
                        .values
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c * (j as f64 + 0.5))
                        .sum::<f64>()
            }
            Profile::Linear => {
                // ∫ v g(v) over [a, b] for linear g is h/6 · (ga(2a+b) + gb(a+2b)).
                let mut acc = 0.0;
                for (j, w) in self.values.windows(2).enumerate() {
                    let a = j as f64;
                    let b = a + 1.0;
                    acc += w[0] * (2.0 * a + b) + w[1] * (a + 2.0 * b);
                }
                acc * h * h / 6.0
            }
        }
    }

    /// Point evaluation (zero outside the support).
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.support_end() || !x.is_finite() {
            return 0.0;
        }
        let pos = x / self.step;
        match self.profile {
            Profile::Step => {
                let j = (pos.floor() as usize).min(self.values.len() - 1);
                self.values[j]
            }
            Profile::Linear => {
                let j = (pos.floor() as usize).min(self.values.len() - 2);
                let frac = pos - j as f64;
                self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
            }
        }
    }

    /// Cumulative integrals at the cell boundaries `i·step`, `i = 0..=cells`.
    fn cumulative(&self) -> Vec<f64> {
        let h = self.step;
        let mut out = Vec::with_capacity(self.values.len() + 1);
        out.push(0.0);
        let mut acc = 0.0;
        match self.profile {
            Profile::Step => {
                for c in &self.values {
                    acc += h * c;
                    out.push(acc);
                }
            }
            Profile::Linear => {
                for w in self.values.windows(2) {
                    acc += 0.5 * h * (w[0] + w[1]);
                    out.push(acc);
                }
            }
        }
        out
    }

    fn integral_to(&self, cum: &[f64], x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let end = self.support_end();
        if x >= end {
            return cum[cum.len() - 1];
        }
        let pos = x / self.step;
        let cells = cum.len() - 1;
        let j = (pos.floor() as usize).min(cells - 1);
        let a = j as f64 * self.step;
        let dx = x - a;
        cum[j]
            + match self.profile {
                Profile::Step => self.values[j] * dx,
                Profile::Linear => 0.5 * dx * (self.values[j] + self.eval(x)),
            }
    }

    /// Exact integral of the interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let cum = self.cumulative();
        self.integral_to(&cum, b) - self.integral_to(&cum, a)
    }

    /// Exact Fourier transform `∫ g(v) e^{-iωv} dv` of the interpolant.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        let h = self.step;
        let theta = omega * h;
        let (e_int, b_int) = cell_moments(theta);
        let rot = Complex64::from_polar(1.0, -theta);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        match self.profile {
            Profile::Step => {
                for c in &self.values {
                    acc += phase * (*c * e_int);
                    phase *= rot;
                }
            }
            Profile::Linear => {
                let a_int = e_int - b_int;
                for w in self.values.windows(2) {
                    acc += phase * (w[0] * a_int + w[1] * b_int);
                    phase *= rot;
                }
            }
        }
        acc * h
    }

    /// `|ĝ(ω)|²`, the continuous-time spectral power of the function.
    pub fn power(&self, omega: f64) -> f64 {
        self.fourier(omega).norm_sqr()
    }

    fn scaled(&self, step_factor: f64, value_factor: f64) -> Self {
        Self {
            step: self.step * step_factor,
            values: self.values.iter().map(|v| v * value_factor).collect(),
            profile: self.profile,
        }
    }
}

/// `(∫₀¹ e^{-iθx} dx, ∫₀¹ x e^{-iθx} dx)`, with series expansions near zero.
fn cell_moments(theta: f64) -> (Complex64, Complex64) {
    if theta.abs() < 0.25 {
        let z = Complex64::new(0.0, -theta);
        let mut e = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..14 {
            if n > 0 {
                fact *= n as f64;
                zn *= z;
            }
            e += zn / (fact * (n as f64 + 1.0));
            b += zn / (fact * (n as f64 + 2.0));
        }
        (e, b)
    } else {
        let i = Complex64::new(0.0, 1.0);
        let em = Complex64::from_polar(1.0, -theta);
        let e = (Complex64::new(1.0, 0.0) - em) / (i * theta);
        let b = i * em / theta + (em - 1.0) / (theta * theta);
        (e, b)
    }
}

/// Nonnegative lag weights `ψ_1..ψ_K` (lag unit: days).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteKernel {
    weights: Vec<f64>,
}

impl DiscreteKernel {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("kernel needs at least one lag".into()));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "lag weight psi_{} is negative or non-finite ({})",
                i + 1,
                weights[i]
            )));
        }
        Ok(Self { weights })
    }

    /// Materializes an infinite weight sequence `k ↦ ψ_k` (k ≥ 1).
    ///
    /// Summation stops once a doubling block contributes less than `tol`
    /// (relative) to both the mass and the first moment. If that has not
    /// happened by [`CAUCHY_LAGS`] lags the sequence is rejected with
    /// [`Error::DivergentMoment`]; this is how IGARCH-like inputs surface.
    pub fn from_sequence(psi: impl Fn(usize) -> f64, tol: f64) -> Result<Self> {
        let mut weights = Vec::new();
        let mut mass = 0.0;
        let mut moment = 0.0;
        let mut block_mass = 0.0;
        let mut block_moment = 0.0;
        let mut block_end = 64usize;
        for k in 1..=CAUCHY_LAGS {
            let w = psi(k);
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidInput(format!("psi_{k} = {w} is not admissible")));
            }
            weights.push(w);
            mass += w;
            moment += (k as f64 - 0.5) * w;
            block_mass += w;
            block_moment += (k as f64 - 0.5) * w;
            if k == block_end {
                let settled = block_mass <= tol * mass && block_moment <= tol * moment;
                if settled && mass > 0.0 {
                    // Drop trailing zeros beyond the last material lag.
                    while weights.len() > 1 && *weights.last().unwrap() == 0.0 {
                        weights.pop();
                    }
                    return Self::new(weights);
                }
                if mass == 0.0 && k >= 1024 {
                    return Err(Error::ZeroMass);
                }
                block_mass = 0.0;
                block_moment = 0.0;
                block_end *= 2;
            }
        }
        let what = if mass.is_finite() && block_mass <= tol * mass {
            "first moment"
        } else {
            "mass"
        };
        Err(Error::DivergentMoment { what, lags: CAUCHY_LAGS })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ (k − ½) ψ_k`, the first moment of the step embedding.
    pub fn first_moment(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, w)| (j as f64 + 0.5) * w)
            .sum()
    }

    /// Discrete-time transfer function `Σ ψ_k e^{-ikλ}`.
    pub fn transfer(&self, lambda: f64) -> Complex64 {
        let rot = Complex64::from_polar(1.0, -lambda);
        let mut phase = rot;
        let mut acc = Complex64::new(0.0, 0.0);
        for w in &self.weights {
            acc += phase * *w;
            phase *= rot;
        }
        acc
    }

    /// `S_f(λ) = |Σ ψ_k e^{-ikλ}|²`.
    pub fn spectrum(&self, lambda: f64) -> f64 {
        self.transfer(lambda).norm_sqr()
    }

    /// Step embedding `f(u) = ψ_k` on `[k-1, k)`.
    pub fn embedding(&self) -> GridFunction {
        GridFunction { step: 1.0, values: self.weights.clone(), profile: Profile::Step }
    }
}

/// Node samples of a continuous kernel on `[0, U]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledKernel {
    grid: GridFunction,
}

impl SampledKernel {
    pub fn new(step: f64, values: Vec<f64>) -> Result<Self> {
        Ok(Self { grid: GridFunction::new(step, values, Profile::Linear)? })
    }

    /// Samples `f` on `0, step, 2·step, …`, extending the support in doubling
    /// blocks until the last block holds less than `tail_tol` of the mass and
    /// of the first moment.
    pub fn from_fn(f: impl Fn(f64) -> f64, step: f64, tail_tol: f64) -> Result<Self> {
        let max_nodes = 1usize << 24;
        let mut values = vec![f(0.0)];
        let mut target = 1024usize;
        loop {
            while values.len() < target {
                values.push(f(values.len() as f64 * step));
            }
            let grid = GridFunction::new(step, values.clone(), Profile::Linear)?;
            let half = target / 2;
            let head = GridFunction {
                step,
                values: values[..=half].to_vec(),
                profile: Profile::Linear,
            };
            let (m, m1) = (grid.mass(), grid.first_moment());
            if m == 0.0 && target >= 1 << 14 {
                return Err(Error::ZeroMass);
            }
            let tail_mass = m - head.mass();
            let tail_moment = m1 - head.first_moment();
            if m > 0.0 && tail_mass <= tail_tol * m && tail_moment <= tail_tol * m1 {
                return Ok(Self { grid });
            }
            if target >= max_nodes {
                return Err(Error::DivergentMoment { what: "first moment", lags: target });
            }
            target *= 2;
        }
    }

    /// `f` restricted to `[0, support]`, sampled with the given step.
    pub fn truncated(f: impl Fn(f64) -> f64, step: f64, support: f64) -> Result<Self> {
        let n = (support / step).round() as usize + 1;
        Self::new(step, (0..n).map(|i| f(i as f64 * step)).collect())
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn values(&self) -> &[f64] {
        &self.grid.values
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.scaled(1.0, c) }
    }

    /// Tempo dilation `u ↦ f(u/s)/s`, exact on the rescaled grid.
    pub fn dilated(&self, s: f64) -> Self {
        Self { grid: self.grid.scaled(s, 1.0 / s) }
    }
}

/// Anything with a grid representation that can be decomposed.
pub trait Kernel {
    fn grid_function(&self) -> GridFunction;
}

impl Kernel for DiscreteKernel {
    fn grid_function(&self) -> GridFunction {
        self.embedding()
    }
}

impl Kernel for SampledKernel {
    fn grid_function(&self) -> GridFunction {
        self.grid.clone()
    }
}

impl Kernel for GridFunction {
    fn grid_function(&self) -> GridFunction {
        self.clone()
    }
}

/// The canonical triple `(M, μ, g)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTriple {
    /// Aggregate memory mass `M`.
    pub level: f64,
    /// Characteristic time scale `μ` in days.
    pub tempo: f64,
    /// Shape with unit mass and unit first moment.
    pub shape: GridFunction,
}

impl CanonicalTriple {
    /// Builds a triple after checking both shape normalizations.
    pub fn new(level: f64, tempo: f64, shape: GridFunction) -> Result<Self> {
        let t = Self { level, tempo, shape };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level.is_finite()) {
            return Err(Error::InvalidInput(format!("level must be positive, got {}", self.level)));
        }
        if !(self.tempo > 0.0 && self.tempo.is_finite()) {
            return Err(Error::InvalidInput(format!("tempo must be positive, got {}", self.tempo)));
        }
        let (m, m1) = self.shape_moments();
        if (m - 1.0).abs() > NORMALIZATION_TOL || (m1 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!(
                "shape is not normalized: mass {m}, first moment {m1}"
            )));
        }
        Ok(())
    }

    /// `(∫g, ∫v g)`.
    pub fn shape_moments(&self) -> (f64, f64) {
        (self.shape.mass(), self.shape.first_moment())
    }

    /// Closed-form triple of the continuous exponential kernel `α e^{-λu}`:
    /// `(α/λ, 1/λ, e^{-u})`, with `e^{-u}` sampled at `step`.
    pub fn exponential(alpha: f64, rate: f64, step: f64) -> Result<Self> {
        let g = exponential_shape(step)?;
        Self::new(alpha / rate, 1.0 / rate, g)
    }
}

/// Normalized `e^{-u}` shape on a linear grid (tail mass below 1e-12).
pub fn exponential_shape(step: f64) -> Result<GridFunction> {
    let sampled = SampledKernel::from_fn(|u| (-u).exp(), step, 1e-12)?;
    Ok(decompose(&sampled)?.shape)
}

/// Splits an admissible kernel into `(M, μ, g)` with `g(v) = (μ/M) f(μ v)`.
pub fn decompose<K: Kernel + ?Sized>(kernel: &K) -> Result<CanonicalTriple> {
    let f = kernel.grid_function();
    let mass = f.mass();
    if mass <= 0.0 {
        return Err(Error::ZeroMass);
    }
    let moment = f.first_moment();
    if !moment.is_finite() || !mass.is_finite() {
        return Err(Error::DivergentMoment { what: "first moment", lags: f.values.len() });
    }
    let tempo = moment / mass;
    let shape = f.scaled(1.0 / tempo, tempo / mass);
    Ok(CanonicalTriple { level: mass, tempo, shape })
}

/// Output grid for [`reconstruct_kernel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReconstructGrid {
    /// The shape's own grid mapped through `u = μ v` (exact).
    Native,
    /// Node samples at `i·step`, `i < len`, read off the interpolated kernel.
    Uniform { step: f64, len: usize },
}

/// `f(u) = M μ⁻¹ g(u/μ)`.
pub fn reconstruct_kernel(t: &CanonicalTriple, grid: ReconstructGrid) -> Result<GridFunction> {
    t.validate()?;
    let native = t.shape.scaled(t.tempo, t.level / t.tempo);
    match grid {
        ReconstructGrid::Native => Ok(native),
        ReconstructGrid::Uniform { step, len } => {
            let values: Vec<f64> = (0..len).map(|i| native.eval(i as f64 * step)).collect();
            let out = GridFunction::new(step, values, Profile::Linear)?;
            let err = ((out.mass() - t.level) / t.level)
                .abs()
                .max(((out.first_moment() - t.level * t.tempo) / (t.level * t.tempo)).abs());
            if err > NORMALIZATION_TOL {
                return Err(Error::GridTooCoarse { error: err, tolerance: NORMALIZATION_TOL });
            }
            Ok(out)
        }
    }
}

/// `ψ_k = M ∫_{(k-1)/μ}^{k/μ} g(v) dv` for `k = 1..=lags`.
pub fn discrete_weights(t: &CanonicalTriple, lags: usize) -> Result<DiscreteKernel> {
    if lags == 0 {
        return Err(Error::InvalidInput("lag count must be at least 1".into()));
    }
    t.validate()?;
    let g = &t.shape;
    let cum = g.cumulative();
    let mut prev = 0.0;
    let weights = (1..=lags)
        .map(|k| {
            let next = g.integral_to(&cum, k as f64 / t.tempo);
            let w = (t.level * (next - prev)).max(0.0);
            prev = next;
            w
        })
        .collect();
    DiscreteKernel::new(weights)
}

/// `sinc(λ/2)²`, the power response of the unit-cell step embedding.
fn hold_factor(lambda: f64) -> f64 {
    let x = 0.5 * lambda;
    if x.abs() < 1e-8 {
        1.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// Predicted `S_f(λ)` from the triple: `M² S_g(μλ)`, divided by the step
/// embedding's hold factor so that it is comparable with the discrete
/// transfer function of the lag weights.
pub fn predicted_spectrum(t: &CanonicalTriple, lambda: f64) -> f64 {
    t.level * t.level * t.shape.power(t.tempo * lambda) / hold_factor(lambda)
}

/// Max relative deviation of `|Σψ_k e^{-ikλ}|²` from `M² S_g(μλ)` over `freqs`.
pub fn spectral_scaling_check(f: &DiscreteKernel, t: &CanonicalTriple, freqs: &[f64]) -> f64 {
    freqs
        .iter()
        .map(|&lambda| {
            let direct = f.spectrum(lambda);
            let predicted = predicted_spectrum(t, lambda);
            ((direct - predicted) / direct).abs()
        })
        .fold(0.0, f64::max)
}

/// `n` equally spaced frequencies on `[lo, hi]`.
pub fn frequency_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// The default grid: 200 points on `[0.01, π]`.
pub fn standard_frequency_grid() -> Vec<f64> {
    frequency_grid(0.01, std::f64::consts::PI, 200)
}

/// OLS slope of `log S_f` on `log λ` over the lowest `fraction` of `freqs`.
pub fn low_frequency_slope(f: &DiscreteKernel, freqs: &[f64], fraction: f64) -> f64 {
    let mut sorted = freqs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = ((fraction * sorted.len() as f64).floor() as usize).max(2).min(sorted.len());
    let pts: Vec<(f64, f64)> =
        sorted[..n].iter().map(|&l| (l.ln(), f.spectrum(l).ln())).collect();
    ols_slope(&pts)
}

pub(crate) fn ols_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Kernel constructors for the classical recursions (ARCH(∞) lag weights).
pub mod embeddings {
    use super::*;
    use crate::frac::pi_recurrence;

    /// GARCH(1,1): `ψ_k = α β^{k-1}`; exact discrete mass is `α/(1-β)`.
    pub fn garch(alpha: f64, beta: f64) -> Result<DiscreteKernel> {
        DiscreteKernel::from_sequence(|k| alpha * beta.powi(k as i32 - 1), 1e-15)
    }

    /// Continuous exponential approximation of GARCH(1,1):
    /// `(α/λ, 1/λ, e^{-u})` with `λ = -log β`.
    pub fn garch_continuous(alpha: f64, beta: f64, step: f64) -> Result<CanonicalTriple> {
        CanonicalTriple::exponential(alpha, -beta.ln(), step)
    }

    /// IGARCH(1,1) variance-impulse weights `α (α+β)^{k-1}` with `α + β = 1`.
    ///
    /// The weights never decay, so construction fails with
    /// [`Error::DivergentMoment`].
    pub fn igarch(alpha: f64) -> Result<DiscreteKernel> {
        DiscreteKernel::from_sequence(|_| alpha, 1e-15)
    }

    /// Truncated FIGARCH ARCH weights `|π_k(d)|`, `k ≤ lags`.
    pub fn figarch(d: f64, lags: usize) -> Result<DiscreteKernel> {
        let (pi, _) = pi_recurrence(d, lags);
        DiscreteKernel::new(pi.iter().map(|p| p.abs()).collect())
    }

    /// Convex mix of a GARCH and a truncated FIGARCH kernel with equal mass.
    pub fn hygarch(alpha: f64, beta: f64, d: f64, delta: f64, lags: usize) -> Result<DiscreteKernel> {
        let g = garch(alpha, beta)?;
        let f = figarch(d, lags)?;
        let scale = g.mass() / f.mass();
        let n = g.len().max(f.len());
        let w = (0..n)
            .map(|i| {
                let a = g.weights().get(i).copied().unwrap_or(0.0);
                let b = f.weights().get(i).copied().unwrap_or(0.0) * scale;
                (1.0 - delta) * a + delta * b
            })
            .collect();
        DiscreteKernel::new(w)
    }

    /// Long-memory shape `ψ_k = θ_{k-1}(d)`, the MA(∞) coefficients of
    /// `(1-L)^{-d}` shifted by one lag and truncated at `lags`. Its spectrum
    /// is `|2 sin(λ/2)|^{-2d}` away from `λ ≲ 1/lags`.
    pub fn fractional_integration(d: f64, lags: usize) -> Result<DiscreteKernel> {
        let mut w = Vec::with_capacity(lags);
        let mut theta = 1.0;
        for j in 0..lags {
            w.push(theta);
            theta *= (j as f64 + d) / (j as f64 + 1.0);
        }
        DiscreteKernel::new(w)
    }

    /// GJR-GARCH effective constant level `(α + γ/2)/(-log β)`.
    pub fn gjr_effective_level(alpha: f64, gamma: f64, beta: f64) -> f64 {
        (alpha + 0.5 * gamma) / (-beta.ln())
    }

    /// Local RSM kernel at blended persistence `β_t`.
    pub fn rsm(alpha: f64, beta_t: f64) -> Result<DiscreteKernel> {
        garch(alpha, beta_t)
    }

    /// Local G-Clock kernel: `α₀(1-β_t) β_t^{k-1}` with `β_t = exp(-κΔτ)`.
    pub fn gclock(alpha0: f64, kappa: f64, dtau: f64) -> Result<DiscreteKernel> {
        let beta = (-kappa * dtau).exp();
        garch(alpha0 * (1.0 - beta), beta)
    }
}
