//! Line-oriented `key = value` run configuration with dotted sections.
//!
//! ```text
//! # comment
//! data.path = returns.csv
//! models = garch, rsm, fast:gclock
//! model.rsm.features = abs_ret, rv20
//! model.rsm.beta_low_start = 0.3
//! backtest.window = 1500
//! ```
//!
//! Every key is consumed by exactly one setting; anything left over is
//! rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::diagnostics::GateVar;
use crate::error::{Error, Result};
use crate::evaluation::VarMethod;
use crate::features::FeatureConfig;
use crate::frac::MAX_LAGS;
use crate::models::{Family, Params};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parameter names accepted as `<param>_start` or simulation truth keys.
pub const PARAM_KEYS: [&str; 12] =
    ["omega", "alpha", "alpha0", "gamma_lev", "beta", "beta_low", "beta_high", "gamma_p", "kappa", "eta", "dbar", "gamma_d"];

fn param_used(family: Family, key: &str) -> bool {
    match key {
        "omega" => true,
        "alpha" => !family.has_clock(),
        "alpha0" => family.has_clock(),
        "gamma_lev" => family.has_leverage(),
        "beta" => family.has_fixed_beta(),
        "beta_low" | "beta_high" | "gamma_p" => family.has_regime(),
        "kappa" | "eta" => family.has_clock(),
        "dbar" | "gamma_d" => family.has_fractional(),
        _ => false,
    }
}

/// Parameter values given in the config, keyed by [`PARAM_KEYS`] name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamOverrides(pub BTreeMap<String, Vec<f64>>);

impl ParamOverrides {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Overwrites the listed fields of `base`.
    pub fn apply(&self, base: &Params) -> Params {
        let mut p = base.clone();
        for (k, v) in &self.0 {
            let x = v[0];
            match k.as_str() {
                "omega" => p.omega = x,
                "alpha" | "alpha0" => p.alpha = x,
                "gamma_lev" => p.gamma_lev = x,
                "beta" => p.beta = x,
                "beta_low" => p.beta_low = x,
                "beta_high" => p.beta_high = x,
                "kappa" => p.kappa = x,
                "dbar" => p.dbar = x,
                "gamma_p" => p.gamma_p = v.clone(),
                "eta" => p.eta = v.clone(),
                "gamma_d" => p.gamma_d = v.clone(),
                _ => {}
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub family: Family,
    /// Feature names feeding every active gate; `None` uses all present columns.
    pub features: Option<Vec<String>>,
    pub lags: usize,
    pub burn_in: Option<usize>,
    pub start: ParamOverrides,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
    pub returns_column: bool,
    /// Multiplies every return before modelling (e.g. 100 for percent).
    pub return_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub starts: usize,
    pub jitter: f64,
    pub clip: bool,
    pub covariance: bool,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WhittleSettings {
    pub enabled: bool,
    pub window: usize,
    pub band_fraction: f64,
    pub step: usize,
    /// Penalty weight; `None` uses `T/100`.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestSettings {
    pub window: usize,
    pub refit_every: usize,
    pub var_method: VarMethod,
    pub hac_lags: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimFeatures {
    Iid,
    Ar1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSettings {
    pub family: Family,
    pub length: usize,
    pub features: SimFeatures,
    pub columns: usize,
    pub phi: f64,
    pub lags: usize,
    pub params: ParamOverrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Garch,
    Figarch,
    Exponential,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeSettings {
    pub kernel: KernelKind,
    pub alpha: f64,
    pub beta: f64,
    pub d: f64,
    pub rate: f64,
    pub lags: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSettings {
    pub model: Option<String>,
    pub acf_lags: usize,
    pub window: usize,
    pub bins: usize,
    pub x: Option<GateVar>,
    pub y: Option<GateVar>,
    pub z: GateVar,
}

/// A parsed and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Directory relative paths resolve against.
    pub base_dir: PathBuf,
    pub data: DataConfig,
    pub models: Vec<ModelConfig>,
    pub features: FeatureConfig,
    pub fit: FitSettings,
    pub whittle: WhittleSettings,
    pub backtest: BacktestSettings,
    pub simulate: SimulateSettings,
    pub decompose: DecomposeSettings,
    pub diagnose: DiagnoseSettings,
    pub seed: u64,
    pub out: PathBuf,
    /// SHA-256 of the canonical `key=value` listing.
    pub hash: String,
}

/// Raw entries with consumption tracking.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected key = value", i + 1)))?;
            let (k, v) = (k.trim().to_ascii_lowercase(), v.trim().to_string());
            if k.is_empty() || k.split('.').any(|s| s.is_empty() || !s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
            {
                return Err(cfg_err(format!("line {}: malformed key '{k}'", i + 1)));
            }
            if map.insert(k.clone(), (i + 1, v)).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key '{k}'", i + 1)));
            }
        }
        Ok(Self { map })
    }

    fn canonical(&self) -> String {
        self.map.iter().map(|(k, (_, v))| format!("{k}={v}\n")).collect()
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| cfg_err(format!("line {line}: invalid value '{v}' for {key}"))),
        }
    }

    fn num<T: FromStr + PartialOrd + Copy + std::fmt::Display>(&mut self, key: &str, default: T, lo: T, hi: T) -> Result<T> {
        let v = self.get(key)?.unwrap_or(default);
        if !(v >= lo && v <= hi) {
            return Err(cfg_err(format!("{key} = {v} outside [{lo}, {hi}]")));
        }
        Ok(v)
    }

    fn opt_num<T: FromStr + PartialOrd + Copy + std::fmt::Display>(&mut self, key: &str, lo: T, hi: T) -> Result<Option<T>> {
        match self.get::<T>(key)? {
            Some(v) if !(v >= lo && v <= hi) => Err(cfg_err(format!("{key} = {v} outside [{lo}, {hi}]"))),
            v => Ok(v),
        }
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(cfg_err(format!("line {line}: '{v}' is not a boolean for {key}"))),
            },
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<String>> {
        self.take(key).map(|(_, v)| v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
    }

    /// Reads `prefix<param><suffix>` keys for the family's parameters.
    fn params(&mut self, prefix: &str, suffix: &str, family: Family) -> Result<ParamOverrides> {
        let mut out = BTreeMap::new();
        for p in PARAM_KEYS {
            let key = format!("{prefix}{p}{suffix}");
            if let Some((line, v)) = self.take(&key) {
                if !param_used(family, p) {
                    return Err(cfg_err(format!("line {line}: {family} has no parameter '{p}'")));
                }
                let vals: Result<Vec<f64>> = v
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| cfg_err(format!("line {line}: invalid number '{}' for {key}", s.trim())))
                    })
                    .collect();
                let vals = vals?;
                let vector = matches!(p, "gamma_p" | "eta" | "gamma_d");
                if vals.is_empty() || (!vector && vals.len() != 1) {
                    return Err(cfg_err(format!("line {line}: {key} expects {}", if vector { "a list" } else { "one number" })));
                }
                out.insert(p.to_string(), vals);
            }
        }
        Ok(ParamOverrides(out))
    }

    fn finish(self) -> Result<()> {
        match self.map.iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(cfg_err(format!("line {line}: unknown key '{k}'"))),
        }
    }
}

fn parse_model_entry(entry: &str) -> Result<(String, Family)> {
    let (name, fam) = match entry.split_once(':') {
        Some((n, f)) => (n.trim().to_ascii_lowercase(), f.trim()),
        None => (entry.trim().to_ascii_lowercase(), entry.trim()),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(cfg_err(format!("invalid model name '{name}'")));
    }
    Ok((name, fam.parse()?))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut e = Entries::parse(text)?;
        let hash = hex_digest(e.canonical().as_bytes());

        let data = DataConfig {
            path: e.take("data.path").map(|(_, v)| PathBuf::from(v)),
            returns_column: e.flag("data.returns_column", false)?,
            return_scale: e.num("data.return_scale", 1.0, f64::MIN_POSITIVE, 1e6)?,
        };
        let k_cap: usize = e.num("truncation.cap", MAX_LAGS, 1, MAX_LAGS)?;

        let mut models = Vec::new();
        for entry in e.list("models").unwrap_or_default() {
            let (name, family) = parse_model_entry(&entry)?;
            if models.iter().any(|m: &ModelConfig| m.name == name) {
                return Err(cfg_err(format!("model '{name}' listed twice")));
            }
            let pre = format!("model.{name}.");
            models.push(ModelConfig {
                features: e.list(&format!("{pre}features")),
                lags: e.num(&format!("{pre}lags"), k_cap, 1, k_cap)?,
                burn_in: e.get(&format!("{pre}burn_in"))?,
                start: e.params(&pre, "_start", family)?,
                name,
                family,
            });
        }

        let d = FeatureConfig::default();
        let features = FeatureConfig {
            zscore_window: e.num("features.zscore_window", d.zscore_window, 20, 100_000)?,
            quantile_window: e.num("features.quantile_window", d.quantile_window, 2, 100_000)?,
            rv_window: e.num("features.rv_window", d.rv_window, 1, 100_000)?,
            winsor_lo: e.num("features.winsor_lo", d.winsor_lo, 0.0, 1.0)?,
            winsor_hi: e.num("features.winsor_hi", d.winsor_hi, 0.0, 1.0)?,
            winsor_window: e.num("features.winsor_window", d.winsor_window, 2, 100_000)?,
        };
        if features.winsor_lo >= features.winsor_hi {
            return Err(cfg_err("features.winsor_lo must be below features.winsor_hi"));
        }

        let fit = FitSettings {
            starts: e.num("fit.starts", 5, 1, 1000)?,
            jitter: e.num("fit.jitter", 0.5, 0.0, 10.0)?,
            clip: e.flag("fit.clip", true)?,
            covariance: e.flag("fit.covariance", true)?,
            max_iter: e.num("fit.max_iter", 500, 1, 1_000_000)?,
        };
        let whittle = WhittleSettings {
            enabled: e.flag("whittle.enabled", true)?,
            window: e.num("whittle.window", 512, crate::estimation::MIN_WINDOW, 1_000_000)?,
            band_fraction: e.num("whittle.band_fraction", crate::estimation::BAND_FRACTION, 1e-3, 1.0)?,
            step: e.num("whittle.step", crate::estimation::ANCHOR_STEP, 1, 100_000)?,
            lambda: e.opt_num("whittle.lambda", 0.0, f64::MAX)?,
        };
        let backtest = BacktestSettings {
            window: e.num("backtest.window", 1500, 2, 10_000_000)?,
            refit_every: e.num("backtest.refit_every", 21, 1, 10_000_000)?,
            var_method: match e.take("backtest.var_method") {
                None => VarMethod::Gaussian,
                Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                    "gaussian" => VarMethod::Gaussian,
                    "fhs" | "filtered_historical" => VarMethod::FilteredHistorical,
                    _ => return Err(cfg_err(format!("line {line}: unknown var_method '{v}'"))),
                },
            },
            hac_lags: e.opt_num("backtest.hac_lags", 0, 100_000)?,
        };

        let sim_family: Family = match e.take("simulate.family") {
            Some((_, v)) => v.parse()?,
            None => models.first().map_or(Family::Garch, |m| m.family),
        };
        let simulate = SimulateSettings {
            family: sim_family,
            length: e.num("simulate.length", 2000, 1, 100_000_000)?,
            features: match e.take("simulate.features") {
                None => SimFeatures::Ar1,
                Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                    "iid" => SimFeatures::Iid,
                    "ar1" => SimFeatures::Ar1,
                    _ => return Err(cfg_err(format!("line {line}: simulate.features must be iid or ar1"))),
                },
            },
            columns: e.num("simulate.columns", 1, 0, 64)?,
            phi: e.num("simulate.phi", 0.9, -0.999, 0.999)?,
            lags: e.num("simulate.lags", k_cap, 1, k_cap)?,
            params: e.params("simulate.", "", sim_family)?,
        };

        let decompose = DecomposeSettings {
            kernel: match e.take("decompose.kernel") {
                None => KernelKind::Garch,
                Some((line, v)) => match v.to_ascii_lowercase().as_str() {
                    "garch" => KernelKind::Garch,
                    "figarch" => KernelKind::Figarch,
                    "exponential" => KernelKind::Exponential,
                    "hyperbolic" => KernelKind::Hyperbolic,
                    _ => return Err(cfg_err(format!("line {line}: unknown kernel '{v}'"))),
                },
            },
            alpha: e.num("decompose.alpha", 0.08, 1e-12, 1e6)?,
            beta: e.num("decompose.beta", 0.9, 0.0, 1.0 - 1e-12)?,
            d: e.num("decompose.d", 0.3, 1e-6, 0.5 - 1e-6)?,
            rate: e.num("decompose.rate", 0.1, 1e-6, 1e6)?,
            lags: e.num("decompose.lags", k_cap, 1, 1_000_000)?,
            step: e.num("decompose.step", 0.01, 1e-6, 1e3)?,
        };

        let gate = |e: &mut Entries, key: &str| -> Result<Option<GateVar>> {
            e.take(key).map(|(_, v)| v.parse()).transpose()
        };
        let diagnose = DiagnoseSettings {
            model: e.take("diagnose.model").map(|(_, v)| v.to_ascii_lowercase()),
            acf_lags: e.num("diagnose.acf_lags", crate::diagnostics::ACF_LAGS, 1, 10_000)?,
            window: e.num("diagnose.window", crate::diagnostics::LB_WINDOW, 31, 1_000_000)?,
            bins: e.num("diagnose.bins", 20, 1, 1000)?,
            x: gate(&mut e, "diagnose.surface_x")?,
            y: gate(&mut e, "diagnose.surface_y")?,
            z: gate(&mut e, "diagnose.surface_z")?.unwrap_or(GateVar::H),
        };
        if let Some(m) = &diagnose.model {
            if !models.iter().any(|c| &c.name == m) {
                return Err(cfg_err(format!("diagnose.model '{m}' is not in models")));
            }
        }

        let seed = e.get("run.seed")?.unwrap_or(0);
        let out = e.take("run.out").map_or_else(|| PathBuf::from("out"), |(_, v)| PathBuf::from(v));
        e.finish()?;
        Ok(Self {
            base_dir: base_dir.to_path_buf(),
            data,
            models,
            features,
            fit,
            whittle,
            backtest,
            simulate,
            decompose,
            diagnose,
            seed,
            out,
            hash,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Restricts the model list to `names`; names not in the config are
    /// added as default models of the family they name.
    pub fn select_models(&mut self, names: &[String]) -> Result<()> {
        if names.is_empty() {
            return Ok(());
        }
        let mut out = Vec::new();
        for n in names {
            let (name, family) = match self.models.iter().find(|m| m.name == n.to_ascii_lowercase()) {
                Some(m) => {
                    out.push(m.clone());
                    continue;
                }
                None => parse_model_entry(n)?,
            };
            out.push(ModelConfig {
                name,
                family,
                features: None,
                lags: MAX_LAGS,
                burn_in: None,
                start: ParamOverrides::default(),
            });
        }
        self.models = out;
        Ok(())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        RunConfig::parse(s, Path::new("."))
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.backtest.window, 1500);
        assert_eq!(c.backtest.refit_every, 21);
        assert_eq!(c.fit.starts, 5);
        assert!(c.models.is_empty());
        assert_eq!(c.out, PathBuf::from("out"));
    }

    #[test]
    fn models_and_starts() {
        let c = parse("models = garch, fast:rsm\nmodel.fast.beta_low_start = 0.3\nmodel.fast.gamma_p_start = 1, -1\nmodel.fast.features = abs_ret").unwrap();
        assert_eq!(c.models[1].name, "fast");
        assert_eq!(c.models[1].family, Family::Rsm);
        assert_eq!(c.models[1].start.0["gamma_p"], vec![1.0, -1.0]);
        let p = c.models[1].start.apply(&Params::default());
        assert_eq!(p.beta_low, 0.3);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        for bad in [
            "bogus = 1",
            "models = garch\nmodel.garch.beta_low_start = 0.3",
            "model.rsm.lags = 10",
            "backtest.window = -3",
            "fit.clip = maybe",
            "run.seed = 1\nrun.seed = 2",
            "no equals sign",
            "models = nonsense",
            "truncation.cap = 500",
        ] {
            let e = parse(bad).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{bad}: {e}");
        }
    }

    #[test]
    fn hash_ignores_comments_and_order() {
        let a = parse("run.seed = 3\n# note\nbacktest.window=100").unwrap();
        let b = parse("backtest.window = 100\nrun.seed=3\n").unwrap();
        let c = parse("backtest.window = 101\nrun.seed=3\n").unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
    }
}
