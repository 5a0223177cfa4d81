use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Minimum burn-in: a full z-score window plus the RV window.
pub const DEFAULT_BURN_IN: usize = 272;

/// Model families sharing the unified gated recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Family {
    Garch,
    Gjr,
    Rsm,
    Gfigarch,
    Gclock,
    RsmGf,
    RsmGc,
    GfGc,
    Tgvol,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Garch,
        Family::Gjr,
        Family::Rsm,
        Family::Gfigarch,
        Family::Gclock,
        Family::RsmGf,
        Family::RsmGc,
        Family::GfGc,
        Family::Tgvol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Garch => "GARCH",
            Family::Gjr => "GJR",
            Family::Rsm => "RSM",
            Family::Gfigarch => "GFIGARCH",
            Family::Gclock => "GCLOCK",
            Family::RsmGf => "RSM_GF",
            Family::RsmGc => "RSM_GC",
            Family::GfGc => "GF_GC",
            Family::Tgvol => "TGVOL",
        }
    }

    /// Level gate: persistence blends `β_low` and `β_high`.
    pub fn has_regime(self) -> bool {
        matches!(self, Family::Rsm | Family::RsmGf | Family::RsmGc | Family::Tgvol)
    }

    /// Shape gate: fractional term with order `d_t`.
    pub fn has_fractional(self) -> bool {
        matches!(self, Family::Gfigarch | Family::RsmGf | Family::GfGc | Family::Tgvol)
    }

    /// Tempo gate: business-time persistence `β_t^clk`.
    pub fn has_clock(self) -> bool {
        matches!(self, Family::Gclock | Family::RsmGc | Family::GfGc | Family::Tgvol)
    }

    pub fn has_leverage(self) -> bool {
        self == Family::Gjr
    }

    /// Families with a single fixed `β`.
    pub fn has_fixed_beta(self) -> bool {
        matches!(self, Family::Garch | Family::Gjr | Family::Gfigarch)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace(['-', ' '], "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown model family '{s}'")))
    }
}

/// Which gates are active, the fractional truncation and gate inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    /// Fractional truncation `K`; present iff the family has a shape gate.
    pub lags: Option<usize>,
    /// Feature columns feeding the regime gate `p_t`.
    pub p_features: Vec<usize>,
    /// Feature columns feeding the fractional gate `d_t`.
    pub d_features: Vec<usize>,
    /// Feature columns feeding the clock `Δτ_t`.
    pub clock_features: Vec<usize>,
    /// Overrides the default burn-in rule.
    pub burn_in: Option<usize>,
}

impl ModelSpec {
    /// All gates read every one of `n_features` columns; `K = 200` when fractional.
    pub fn new(family: Family, n_features: usize) -> Self {
        let all: Vec<usize> = (0..n_features).collect();
        Self {
            family,
            lags: family.has_fractional().then_some(crate::frac::MAX_LAGS),
            p_features: if family.has_regime() { all.clone() } else { Vec::new() },
            d_features: if family.has_fractional() { all.clone() } else { Vec::new() },
            clock_features: if family.has_clock() { all } else { Vec::new() },
            burn_in: None,
        }
    }

    pub fn with_lags(mut self, lags: usize) -> Self {
        if self.family.has_fractional() {
            self.lags = Some(lags);
        }
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.lags.is_some() != self.family.has_fractional() {
            return Err(Error::InvalidInput(format!(
                "{}: truncation K must be set exactly when the family has a fractional gate",
                self.family
            )));
        }
        if self.lags == Some(0) {
            return Err(Error::InvalidInput("truncation K must be at least 1".into()));
        }
        for (gate, idx, active) in [
            ("regime", &self.p_features, self.family.has_regime()),
            ("fractional", &self.d_features, self.family.has_fractional()),
            ("clock", &self.clock_features, self.family.has_clock()),
        ] {
            if !active && !idx.is_empty() {
                return Err(Error::InvalidInput(format!("{}: no {gate} gate to feed", self.family)));
            }
            if let Some(j) = idx.iter().find(|&&j| j >= n_features) {
                return Err(Error::InvalidInput(format!(
                    "{gate} gate feature index {j} out of range ({n_features} columns)"
                )));
            }
        }
        Ok(())
    }

    pub fn lags_or_zero(&self) -> usize {
        self.lags.unwrap_or(0)
    }

    /// `max(K, first fully available feature row + 1, 272)` unless overridden.
    pub fn burn_in(&self, features: &FeatureMatrix) -> usize {
        if let Some(b) = self.burn_in {
            return b;
        }
        let avail = features.first_available_row().map_or(features.rows(), |r| r + 1);
        self.lags_or_zero().max(avail).max(DEFAULT_BURN_IN)
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self)
    }
}

/// Positions of each parameter in the flat natural and unconstrained vectors.
///
/// Order: ω, α (or α₀), γ_lev, β, β_low, β_high, γ_p…, κ, η…, d̄, γ_d…,
/// keeping only the entries the family uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub omega: usize,
    pub alpha: usize,
    pub gamma_lev: Option<usize>,
    pub beta: Option<usize>,
    pub beta_low: Option<usize>,
    pub beta_high: Option<usize>,
    pub gamma_p: Range<usize>,
    pub kappa: Option<usize>,
    pub eta: Range<usize>,
    pub dbar: Option<usize>,
    pub gamma_d: Range<usize>,
    pub len: usize,
}

impl Layout {
    fn new(spec: &ModelSpec) -> Self {
        let f = spec.family;
        let mut n = 0;
        let mut next = |take: bool| {
            take.then(|| {
                n += 1;
                n - 1
            })
        };
        let omega = next(true).unwrap();
        let alpha = next(true).unwrap();
        let gamma_lev = next(f.has_leverage());
        let beta = next(f.has_fixed_beta());
        let beta_low = next(f.has_regime());
        let beta_high = next(f.has_regime());
        let mut range = |len: usize| {
            let r = n..n + len;
            n += len;
            r
        };
        let gamma_p = range(spec.p_features.len());
        let kappa = if f.has_clock() {
            n += 1;
            Some(n - 1)
        } else {
            None
        };
        let mut range = |len: usize| {
            let r = n..n + len;
            n += len;
            r
        };
        let eta = range(spec.clock_features.len());
        let dbar = if f.has_fractional() {
            n += 1;
            Some(n - 1)
        } else {
            None
        };
        let gamma_d = n..n + spec.d_features.len();
        n += spec.d_features.len();
        Self { omega, alpha, gamma_lev, beta, beta_low, beta_high, gamma_p, kappa, eta, dbar, gamma_d, len: n }
    }

    /// Coordinate names, e.g. `gamma_p[2]`.
    pub fn names(&self, spec: &ModelSpec) -> Vec<String> {
        let mut out = vec![String::new(); self.len];
        out[self.omega] = "omega".into();
        out[self.alpha] = if spec.family.has_clock() { "alpha0".into() } else { "alpha".into() };
        let singles = [
            (self.gamma_lev, "gamma_lev"),
            (self.beta, "beta"),
            (self.beta_low, "beta_low"),
            (self.beta_high, "beta_high"),
            (self.kappa, "kappa"),
            (self.dbar, "dbar"),
        ];
        for (i, name) in singles {
            if let Some(i) = i {
                out[i] = name.into();
            }
        }
        for (r, name) in [(&self.gamma_p, "gamma_p"), (&self.eta, "eta"), (&self.gamma_d, "gamma_d")] {
            for (j, i) in r.clone().enumerate() {
                out[i] = format!("{name}[{j}]");
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_cover_every_coordinate_once() {
        for f in Family::ALL {
            let spec = ModelSpec::new(f, 3);
            let l = spec.layout();
            let names = l.names(&spec);
            assert!(names.iter().all(|n| !n.is_empty()), "{f}: {names:?}");
            let extra = 3 * (f.has_regime() as usize + f.has_fractional() as usize + f.has_clock() as usize);
            let base = match f {
                Family::Garch => 3,
                Family::Gjr => 4,
                Family::Rsm => 4,
                Family::Gfigarch => 4,
                Family::Gclock => 3,
                Family::RsmGf => 5,
                Family::RsmGc => 5,
                Family::GfGc => 4,
                Family::Tgvol => 6,
            };
            assert_eq!(l.len, base + extra, "{f}");
        }
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert_eq!("rsm-gf".parse::<Family>().unwrap(), Family::RsmGf);
        assert!("EGARCH".parse::<Family>().is_err());
    }
}
