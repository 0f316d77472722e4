//! Run configuration shared by the heat, asymptotics and verify modules.

use crate::error::{Error, Result};
use crate::numeric::DD_DIGITS;
use serde::{Deserialize, Serialize};

/// Geometric sequence of diffusion times `t0, t0·ratio, …`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Ladder {
    pub fn new(t0: f64, ratio: f64, count: usize) -> Result<Self> {
        let l = Ladder { t0, ratio, count };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("ladder t0 must be positive, got {}", self.t0)));
        }
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(Error::Config(format!("ladder ratio must lie in (0,1), got {}", self.ratio)));
        }
        if self.count == 0 {
            return Err(Error::Config("ladder count must be positive".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.t0 * self.ratio.powi(k as i32)).collect()
    }

    pub fn t_min(&self) -> f64 {
        self.t0 * self.ratio.powi(self.count as i32 - 1)
    }

    /// Same ratio and count, starting at `t0·factor`.
    pub fn scaled(&self, factor: f64) -> Ladder {
        Ladder {
            t0: self.t0 * factor,
            ..*self
        }
    }

    /// Parses `T0:RATIO:COUNT`.
    pub fn parse(s: &str) -> Result<Ladder> {
        let bad = || Error::Config(format!("ladder must be T0:RATIO:COUNT, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let t0 = parts[0].trim().parse().map_err(|_| bad())?;
        let ratio = parts[1].trim().parse().map_err(|_| bad())?;
        let count = parts[2].trim().parse().map_err(|_| bad())?;
        Ladder::new(t0, ratio, count)
    }
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            t0: 0.1,
            ratio: 0.85,
            count: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum CutoffPolicy {
    /// Smallest cutoff (grown in 15% steps) whose tail bound at `t_min` is below `eps_tail`.
    Auto { eps_tail: f64 },
    Fixed { lambda: f64 },
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy::Auto { eps_tail: 1e-28 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute tolerance for identities that hold exactly at every t.
    pub exact: f64,
    /// Absolute tolerance for fitted coefficients.
    pub fit: f64,
    /// Agreement required between fits that must coincide (deformation invariance, oracles).
    pub invariance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exact: 1e-20,
            fit: 1e-6,
            invariance: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Digits rendered in reports; computation always carries double-double precision.
    pub precision_digits: u32,
    pub ladder: Ladder,
    /// Rescale the fit ladder by the geometry's intrinsic time scale.
    pub adaptive_ladder: bool,
    /// Extra orders fitted beyond `n_max` and discarded.
    pub guard_orders: usize,
    /// Default `n_max = m + n_max_offset`.
    pub n_max_offset: usize,
    /// Fits whose equilibrated design matrix is worse conditioned than this are refused.
    pub max_condition: f64,
    /// Ladder used for odd-order fits (more points, the basis is twice as dense).
    pub odd_ladder: Ladder,
    pub cutoff: CutoffPolicy,
    pub tolerances: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision_digits: DD_DIGITS,
            ladder: Ladder::default(),
            adaptive_ladder: true,
            guard_orders: 10,
            n_max_offset: 2,
            max_condition: 1e20,
            odd_ladder: Ladder {
                t0: 0.1,
                ratio: 0.85,
                count: 24,
            },
            cutoff: CutoffPolicy::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.precision_digits == 0 || self.precision_digits > DD_DIGITS {
            return Err(Error::Config(format!(
                "precision_digits must be in 1..={DD_DIGITS} (double-double arithmetic), got {}",
                self.precision_digits
            )));
        }
        self.ladder.validate()?;
        self.odd_ladder.validate()?;
        match self.cutoff {
            CutoffPolicy::Auto { eps_tail } if !(eps_tail > 0.0) => {
                return Err(Error::Config("eps_tail must be positive".into()))
            }
            CutoffPolicy::Fixed { lambda } if !(lambda > 0.0) => {
                return Err(Error::Config("fixed cutoff must be positive".into()))
            }
            _ => {}
        }
        let t = &self.tolerances;
        if !(t.exact > 0.0 && t.fit > 0.0 && t.invariance > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.max_condition > 1.0) {
            return Err(Error::Config("max_condition must exceed 1".into()));
        }
        Ok(())
    }
}
