use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::admissibility::{unconditional_mean, GateStats};
use super::filter::{Engine, GatePath};
use super::params::Params;
use super::spec::ModelSpec;
use crate::error::{Error, Result};
use crate::features::{standardize_columns, FeatureConfig, FeatureMatrix};

/// Periods simulated and discarded before the returned sample.
const WARM_UP: usize = 500;

/// How gate inputs are produced for a simulated path.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureGenerator {
    /// Independent stationary AR(1) columns with unit innovations, passed
    /// through the winsorize/rolling z-score pipeline.
    Ar1 { phi: f64, columns: usize },
    /// i.i.d. standard normal columns used directly as z-scores.
    Iid { columns: usize },
    /// Fixed inputs; must cover the sample plus the warm-up.
    Given(FeatureMatrix),
}

impl Default for FeatureGenerator {
    fn default() -> Self {
        FeatureGenerator::Ar1 { phi: 0.9, columns: 4 }
    }
}

impl FeatureGenerator {
    pub fn columns(&self) -> usize {
        match self {
            FeatureGenerator::Ar1 { columns, .. } | FeatureGenerator::Iid { columns } => *columns,
            FeatureGenerator::Given(m) => m.cols(),
        }
    }

    fn generate(&self, rows: usize, rng: &mut ChaCha8Rng) -> Result<FeatureMatrix> {
        let names = |c: usize| (0..c).map(|j| format!("z{j}")).collect::<Vec<_>>();
        if self.columns() == 0 {
            return Ok(FeatureMatrix::empty(rows));
        }
        match self {
            FeatureGenerator::Ar1 { phi, columns } => {
                let cfg = FeatureConfig::default();
                let pre = cfg.zscore_window + cfg.winsor_window;
                let scale = 1.0 / (1.0 - phi * phi).sqrt();
                let cols: Vec<Vec<f64>> = (0..*columns)
                    .map(|_| {
                        let mut x = rng.sample::<f64, _>(StandardNormal) * scale;
                        (0..rows + pre)
                            .map(|_| {
                                x = phi * x + rng.sample::<f64, _>(StandardNormal);
                                x
                            })
                            .collect()
                    })
                    .collect();
                let m = standardize_columns(names(*columns), &cols, &cfg)?;
                Ok(m.slice(pre, pre + rows))
            }
            FeatureGenerator::Iid { columns } => {
                let cols = (0..*columns)
                    .map(|_| (0..rows).map(|_| rng.sample(StandardNormal)).collect())
                    .collect();
                FeatureMatrix::from_columns(names(*columns), cols)
            }
            FeatureGenerator::Given(m) => {
                if m.rows() < rows {
                    return Err(Error::InvalidInput(format!(
                        "given features have {} rows, simulation needs {rows}",
                        m.rows()
                    )));
                }
                Ok(m.slice(m.rows() - rows, m.rows()))
            }
        }
    }
}

/// A simulated sample with its latent variance and gate paths.
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub features: FeatureMatrix,
    pub variance: Vec<f64>,
    pub gates: GatePath,
}

/// Simulates `r_t = √h_t ε_t` with `ε_t` i.i.d. N(0,1) from a ChaCha stream
/// seeded by `seed`; features use an independent stream of the same seed.
/// A warm-up of 500 periods is discarded. Identical inputs give identical paths.
pub fn simulate_path(
    spec: &ModelSpec,
    params: &Params,
    len: usize,
    seed: u64,
    generator: &FeatureGenerator,
) -> Result<SimulatedPath> {
    if len == 0 {
        return Err(Error::EmptySample);
    }
    let total = len + WARM_UP;
    let mut feat_rng = ChaCha8Rng::seed_from_u64(seed);
    feat_rng.set_stream(1);
    let features = generator.generate(total, &mut feat_rng)?;
    spec.validate(features.cols())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let h0 = unconditional_mean(spec, params, GateStats::Constant)?;
    let fractional = spec.family.has_fractional();
    let mut eng = Engine::new(spec, params)?;
    let mut r = Vec::with_capacity(total);
    let mut h = Vec::with_capacity(total);
    let mut u = Vec::with_capacity(total);
    let mut gates = GatePath::default();
    h.push(h0);
    r.push(h0.sqrt() * rng.sample::<f64, _>(StandardNormal));
    u.push(r[0] * r[0] - h0);
    for t in 1..total {
        eng.load_inputs(Some(features.row(t - 1)));
        let s = eng.step(t, &r, &h, &u, false);
        if !s.h.is_finite() {
            return Err(Error::NonFinite { t, what: "simulated variance" });
        }
        if s.h <= 0.0 {
            return Err(Error::NonpositiveVariance { t, h: s.h, fractional });
        }
        let e: f64 = rng.sample(StandardNormal);
        h.push(s.h);
        r.push(s.h.sqrt() * e);
        u.push(r[t] * r[t] - s.h);
        if t >= WARM_UP {
            if spec.family.has_regime() {
                gates.p.push(s.p);
            }
            if fractional {
                gates.d.push(s.d);
            }
            if spec.family.has_clock() {
                gates.beta_clk.push(s.b);
                gates.dtau.push(s.dtau);
            }
            gates.shock.push(s.a);
            gates.persistence.push(s.psi);
        }
    }
    let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
    Ok(SimulatedPath {
        dates: (0..len as u64).map(|i| start + chrono::Days::new(i)).collect(),
        returns: r.split_off(WARM_UP),
        features: features.slice(WARM_UP, total),
        variance: h.split_off(WARM_UP),
        gates,
    })
}
