use serde::{Deserialize, Serialize};

use super::{muckenhoupt_constant, reverse_holder_constant, Weight};
use crate::error::{Error, Result};
use crate::lattice::{BaseFamily, Measure};

/// Geometry for which the closed-form reverse Hölder exponent is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "kebab-case")]
pub enum Setting {
    /// Cubes with Lebesgue measure in dimension `dimension`.
    EuclideanCubes { dimension: u32 },
    /// Rectangles with sides parallel to the axes in the plane.
    Rectangles,
    /// `Delta = 1 + 1/(tau t)`, `K = c`.
    Homogeneous { tau: f64, c: f64 },
    /// Cubes with a non-doubling measure; uses the Besicovitch constant.
    NonDoubling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelfImprovementParams {
    pub setting: Setting,
    /// Besicovitch covering constant `B(n)`, used only by `NonDoubling`.
    pub besicovitch: f64,
}

impl SelfImprovementParams {
    pub fn euclidean(dimension: u32) -> Self {
        Self { setting: Setting::EuclideanCubes { dimension }, besicovitch: 1.0 }
    }

    pub fn rectangles() -> Self {
        Self { setting: Setting::Rectangles, besicovitch: 1.0 }
    }

    pub fn homogeneous(tau: f64, c: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite() && c >= 1.0 && c.is_finite()) {
            return Err(Error::BadParams(format!("homogeneous setting needs tau > 0 and C >= 1, got {tau}, {c}")));
        }
        Ok(Self { setting: Setting::Homogeneous { tau, c }, besicovitch: 1.0 })
    }

    pub fn non_doubling(besicovitch: f64) -> Result<Self> {
        if !(besicovitch > 0.0 && besicovitch.is_finite()) {
            return Err(Error::BadParams(format!("Besicovitch constant must be positive, got {besicovitch}")));
        }
        Ok(Self { setting: Setting::NonDoubling, besicovitch })
    }

    /// Reverse Hölder exponent `Delta(p, t)`.
    pub fn delta(&self, p: f64, t: f64) -> f64 {
        match self.setting {
            Setting::EuclideanCubes { dimension } => 1.0 + 1.0 / (2f64.powi(dimension as i32 + 1) * t - 1.0),
            Setting::Rectangles => 1.0 + 1.0 / (2f64.powf(p + 2.0) * t),
            Setting::Homogeneous { tau, .. } => 1.0 + 1.0 / (tau * t),
            Setting::NonDoubling => 1.0 + 1.0 / (2f64.powf(p + 1.0) * self.besicovitch * t),
        }
    }

    /// Reverse Hölder constant bound `K(p, t)`.
    pub fn k(&self, _p: f64, _t: f64) -> f64 {
        match self.setting {
            Setting::Homogeneous { c, .. } => c,
            _ => 2.0,
        }
    }
}

/// `(Delta(p,t), K(p,t))` for the configured setting.
pub fn self_improvement(params: &SelfImprovementParams, p: f64, t: f64) -> (f64, f64) {
    (params.delta(p, t), params.k(p, t))
}

/// Outcome of testing `[w]_{RH_Delta(p,t)} <= K(p,t)` with `t = [w]_{A_p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A4Probe {
    pub p: f64,
    pub t: f64,
    pub delta: f64,
    pub k: f64,
    pub reverse_holder: f64,
    pub holds: bool,
}

/// Evaluates the self-improvement property on one weight. A failure is a
/// counterexample to the closed-form exponent on this discrete base and is
/// reported, not raised.
pub fn a4_probe(
    w: &Weight,
    p: f64,
    params: &SelfImprovementParams,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<A4Probe> {
    let t = muckenhoupt_constant(w, p, base, mu)?.value;
    let (delta, k) = self_improvement(params, p, t);
    let reverse_holder = reverse_holder_constant(w, delta, base, mu)?.value;
    Ok(A4Probe { p, t, delta, k, reverse_holder, holds: reverse_holder <= k * (1.0 + 1e-9) })
}
