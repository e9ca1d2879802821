//! Maximal operators over a base family and the Rubio de Francia iteration.

mod maximal;
mod rubio;

pub use maximal::{maximal, maximal_brute_force, maximal_values};
pub use rubio::{rubio_de_francia, RubioOutput, RubioReport};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BaseFamily, BaseKind};

/// Which base sets enter the supremum at a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaximalMode {
    /// Dyadic members of the base containing the cell.
    Dyadic,
    /// Odd-sided cubes of the base whose center cell is the cell.
    Centered,
    /// Every member containing the cell.
    Uncentered,
}

impl MaximalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MaximalMode::Dyadic => "dyadic",
            MaximalMode::Centered => "centered",
            MaximalMode::Uncentered => "uncentered",
        }
    }
}

impl fmt::Display for MaximalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaximalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic" => Ok(MaximalMode::Dyadic),
            "centered" => Ok(MaximalMode::Centered),
            "uncentered" => Ok(MaximalMode::Uncentered),
            _ => Err(Error::Parse(format!("unknown maximal mode `{s}`"))),
        }
    }
}

/// Upper bound for the `L^p -> L^p` norm of a maximal operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum NormBound {
    /// `scale * (p')^factors`; with `scale = 1` this is Doob's inequality
    /// applied once per independent factor of the base.
    Dual { scale: f64, factors: u32 },
    /// Marcinkiewicz interpolation between `L^inf` (constant 1) and weak
    /// `(1,1)` with constant `weak`: `(2 (p' weak)^{1/p})^factors`.
    Marcinkiewicz { weak: f64, factors: u32 },
}

impl NormBound {
    pub fn evaluate(&self, p: f64) -> f64 {
        let dual = p / (p - 1.0);
        match *self {
            NormBound::Dual { scale, factors } => scale * dual.powi(factors as i32),
            NormBound::Marcinkiewicz { weak, factors } => (2.0 * (dual * weak).powf(1.0 / p)).powi(factors as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            NormBound::Dual { scale, factors } => scale >= 1.0 && scale.is_finite() && factors >= 1,
            NormBound::Marcinkiewicz { weak, factors } => weak >= 1.0 && weak.is_finite() && factors >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams(format!("invalid norm bound {self:?}")))
        }
    }
}

/// A maximal operator mode together with the norm bound used for it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalKind {
    pub mode: MaximalMode,
    pub norm_bound: NormBound,
}

impl MaximalKind {
    /// Dyadic maximal operator on a cube base, bounded by `p'`.
    pub fn dyadic() -> Self {
        Self { mode: MaximalMode::Dyadic, norm_bound: NormBound::Dual { scale: 1.0, factors: 1 } }
    }

    /// Default bound for `mode` on `base`: Doob per factor for dyadic mode,
    /// Marcinkiewicz with the Vitali weak constant `3^n` otherwise. Rectangle
    /// bases count as two one-dimensional factors.
    pub fn for_base(mode: MaximalMode, base: &BaseFamily) -> Self {
        let factors = if base.kind().is_rectangles() { 2 } else { 1 };
        let norm_bound = match mode {
            MaximalMode::Dyadic => NormBound::Dual { scale: 1.0, factors },
            _ => {
                let dims = if factors == 2 { 1 } else { base.domain().dims() as i32 };
                NormBound::Marcinkiewicz { weak: 3f64.powi(dims), factors }
            }
        };
        Self { mode, norm_bound }
    }

    /// Default mode for a base kind: dyadic for dyadic kinds, uncentered otherwise.
    pub fn default_for(base: &BaseFamily) -> Self {
        let mode = match base.kind() {
            BaseKind::DyadicCubes | BaseKind::DyadicRectangles => MaximalMode::Dyadic,
            _ => MaximalMode::Uncentered,
        };
        Self::for_base(mode, base)
    }

    pub fn bound(&self, p: f64) -> f64 {
        self.norm_bound.evaluate(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_blow_up_near_one() {
        for nb in [NormBound::Dual { scale: 1.0, factors: 2 }, NormBound::Marcinkiewicz { weak: 3.0, factors: 1 }] {
            assert!(nb.evaluate(1.0001) > 1e3);
            assert!(nb.evaluate(2.0).is_finite() && nb.evaluate(2.0) > 0.0);
        }
        assert_eq!(NormBound::Dual { scale: 1.0, factors: 1 }.evaluate(2.0), 2.0);
        assert_eq!(NormBound::Dual { scale: 1.0, factors: 2 }.evaluate(4.0), 16.0 / 9.0);
    }

    #[test]
    fn mode_parse() {
        for m in [MaximalMode::Dyadic, MaximalMode::Centered, MaximalMode::Uncentered] {
            assert_eq!(m.as_str().parse::<MaximalMode>().unwrap(), m);
        }
        assert!("x".parse::<MaximalMode>().is_err());
    }
}
