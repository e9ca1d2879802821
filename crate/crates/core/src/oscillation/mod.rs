//! Oscillation functionals and the norms `||f||_{X_w^p}` over a base.

mod cz;
mod jn;
mod median;
mod tl;

pub use cz::{cz_selection, CzSelection};
pub use jn::{jn_exp_moment, jn_ln_eta, normalize_bmo, JnReport};
pub use median::{sharp_oscillation, weighted_median, SharpOscillation};
pub use tl::{tl_equivalence_probe, TlProbe, TlSequence};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BaseFamily, BaseSet, GridFunction, Measure, MeasureKind, NeumaierSum};
use crate::weights::Weight;

const PAR_THRESHOLD: usize = 256;

/// The functional `Lambda(f, B)` evaluated on the cells of `B`.
#[derive(Debug, Clone)]
pub enum OscillationSpec {
    /// `|f(x) - f_{mu_v, B}|`; `None` means `v = 1`.
    CenteredDiff { v: Option<Weight> },
    /// `|f(x) - f_Q| / w(x)` with `f_Q` the plain cell-count mean, in the
    /// space whose measure is `w dx`.
    DualHardy { w: Weight },
    /// `sum_{Q dyadic, Q in P} (|Q|^{-1/2-alpha/n} |s_Q| chi_Q(x))^q`.
    TlSeq { alpha: f64, q: f64 },
}

impl OscillationSpec {
    pub fn classical() -> Self {
        OscillationSpec::CenteredDiff { v: None }
    }

    pub fn centered(v: &Weight) -> Self {
        OscillationSpec::CenteredDiff { v: if v.is_unit() { None } else { Some(v.clone()) } }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OscillationSpec::CenteredDiff { .. } => "centered-diff",
            OscillationSpec::DualHardy { .. } => "dual-hardy",
            OscillationSpec::TlSeq { .. } => "tl-seq",
        }
    }
}

/// What the functional is applied to.
#[derive(Debug, Clone, Copy)]
pub enum OscInput<'a> {
    Function(&'a GridFunction),
    Sequence(&'a TlSequence),
}

impl<'a> From<&'a GridFunction> for OscInput<'a> {
    fn from(f: &'a GridFunction) -> Self {
        OscInput::Function(f)
    }
}

impl<'a> From<&'a TlSequence> for OscInput<'a> {
    fn from(s: &'a TlSequence) -> Self {
        OscInput::Sequence(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub p: f64,
    pub weight_id: String,
    pub extremal_set: BaseSet,
    /// `((1/w(B)) sum_B Lambda^p w dmu)^{1/p}` per base set, in base order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_set: Option<Vec<f64>>,
}

/// `Lambda(f, B)` for every member of a base, stored per set in the
/// canonical cell order of that set.
#[derive(Debug, Clone)]
pub struct OscillationTable {
    base: BaseFamily,
    mu: Measure,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

fn check_same_grid(base: &BaseFamily, mu: &Measure, n: usize) -> Result<()> {
    if mu.domain().sides() != base.domain().sides() || n != base.domain().cell_count() {
        return Err(Error::IncompatibleSpec("input, measure and base live on different grids".into()));
    }
    Ok(())
}

/// Clamps an average to the range of the averaged values so that rounding
/// cannot move the center of a constant block off its value.
fn clamp_to_range(center: f64, vals: &[f64], b: &BaseSet, mu: &Measure, all_cells: bool) -> f64 {
    let (lo, hi) = b
        .cells(mu.domain())
        .filter(|&c| all_cells || mu.mass(c) > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(vals[c]), hi.max(vals[c])));
    if lo <= hi {
        center.clamp(lo, hi)
    } else {
        center
    }
}

fn lambda_on_set(input: OscInput<'_>, spec: &OscillationSpec, b: &BaseSet, mu: &Measure) -> Result<Vec<f64>> {
    let dom = mu.domain();
    match (spec, input) {
        (OscillationSpec::CenteredDiff { v }, OscInput::Function(f)) => {
            let vals = f.values();
            let center = match v {
                None => crate::lattice::average_values(vals, b, mu)?,
                Some(v) => crate::lattice::weighted_average(vals, v.values(), b, mu)?.0,
            };
            let center = clamp_to_range(center, vals, b, mu, false);
            Ok(b.cells(dom).map(|c| if mu.mass(c) > 0.0 { (vals[c] - center).abs() } else { 0.0 }).collect())
        }
        (OscillationSpec::DualHardy { w }, OscInput::Function(f)) => {
            let vals = f.values();
            let mean = crate::lattice::csum(b.cells(dom).map(|c| vals[c])) / b.cell_count() as f64;
            let mean = clamp_to_range(mean, vals, b, mu, true);
            let wv = w.values();
            Ok(b.cells(dom).map(|c| if mu.mass(c) > 0.0 { (vals[c] - mean).abs() / wv[c] } else { 0.0 }).collect())
        }
        (OscillationSpec::TlSeq { alpha, q }, OscInput::Sequence(s)) => Ok(s.lambda_on(b, *alpha, *q, mu)),
        _ => Err(Error::IncompatibleSpec(format!("{} does not apply to this input", spec.name()))),
    }
}

impl OscillationTable {
    pub fn build<'a>(
        input: impl Into<OscInput<'a>>,
        spec: &OscillationSpec,
        base: &BaseFamily,
        mu: &Measure,
    ) -> Result<Self> {
        let input = input.into();
        let n = match input {
            OscInput::Function(f) => f.values().len(),
            OscInput::Sequence(s) => s.domain().cell_count(),
        };
        check_same_grid(base, mu, n)?;
        match spec {
            OscillationSpec::DualHardy { w } => {
                let uniform_density =
                    mu.kind() != MeasureKind::General && mu.masses().iter().zip(w.values()).all(|(m, w)| m == w);
                if !uniform_density {
                    return Err(Error::IncompatibleSpec("dual-Hardy oscillation needs the measure w dx".into()));
                }
            }
            OscillationSpec::TlSeq { q, .. } => {
                if !(*q > 0.0 && q.is_finite()) {
                    return Err(Error::ExponentOutOfRange { name: "q", value: *q });
                }
                if base.kind() != crate::lattice::BaseKind::DyadicCubes {
                    return Err(Error::IncompatibleSpec("sequence norms run over dyadic cubes".into()));
                }
            }
            OscillationSpec::CenteredDiff { v: Some(v) } if v.domain() != base.domain() => {
                return Err(Error::IncompatibleSpec("centering weight lives on a different grid".into()));
            }
            _ => {}
        }
        let per_set = |b: &BaseSet| lambda_on_set(input, spec, b, mu);
        let lambdas: Vec<Result<Vec<f64>>> = if base.len() >= PAR_THRESHOLD {
            base.sets().par_iter().map(per_set).collect()
        } else {
            base.sets().iter().map(per_set).collect()
        };
        let mut offsets = Vec::with_capacity(base.len() + 1);
        let mut values = Vec::new();
        offsets.push(0);
        for l in lambdas {
            values.extend(l?);
            offsets.push(values.len());
        }
        Ok(Self { base: base.clone(), mu: mu.clone(), offsets, values })
    }

    pub fn base(&self) -> &BaseFamily {
        &self.base
    }

    pub fn measure(&self) -> &Measure {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// `Lambda(f, B_i)` in the cell order of `B_i`.
    pub fn lambda(&self, i: usize) -> &[f64] {
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Largest value of the functional over all sets and cells.
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `(1/w(B_i)) sum_{B_i} Lambda^p w dmu`; `w = None` means `w = 1`.
    pub fn moment(&self, i: usize, p: f64, w: Option<&[f64]>) -> f64 {
        let b = &self.base.sets()[i];
        let dom = self.base.domain();
        let mut num = NeumaierSum::new();
        let mut den = NeumaierSum::new();
        for (c, &l) in b.cells(dom).zip(self.lambda(i)) {
            let m = self.mu.mass(c);
            if m > 0.0 {
                let wm = w.map_or(m, |w| w[c] * m);
                num.add(if p == 1.0 { l * wm } else { l.powf(p) * wm });
                den.add(wm);
            }
        }
        num.total() / den.total()
    }

    /// `ln` of `moment(i, p, w)` through log-sum-exp, so that large `p`
    /// neither overflows nor flushes small terms to zero.
    pub fn ln_moment(&self, i: usize, p: f64, w: Option<&[f64]>) -> f64 {
        let b = &self.base.sets()[i];
        let dom = self.base.domain();
        let mut terms = Vec::with_capacity(b.cell_count());
        let mut den = NeumaierSum::new();
        for (c, &l) in b.cells(dom).zip(self.lambda(i)) {
            let m = self.mu.mass(c);
            if m > 0.0 {
                let wm = w.map_or(m, |w| w[c] * m);
                terms.push(p * l.ln() + wm.ln());
                den.add(wm);
            }
        }
        crate::lattice::log_sum_exp(&terms) - den.total().ln()
    }

    /// `ln ||f||_{X_w^p}^p` and the first set attaining it.
    pub fn ln_sup_moment(&self, p: f64, w: Option<&[f64]>) -> (f64, usize) {
        let vals: Vec<f64> = if self.len() >= PAR_THRESHOLD {
            (0..self.len()).into_par_iter().map(|i| self.ln_moment(i, p, w)).collect()
        } else {
            (0..self.len()).map(|i| self.ln_moment(i, p, w)).collect()
        };
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, v) in vals.into_iter().enumerate() {
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// `||f||_{X_w^p}` evaluated in log space; `w = None` means `w = 1`.
    pub fn power_norm(&self, p: f64, w: Option<&[f64]>) -> f64 {
        (self.ln_sup_moment(p, w).0 / p).exp()
    }

    /// `||f||_{X_w^p}` with the extremal set and per-set values.
    pub fn norm(&self, w: &Weight, p: f64) -> Result<NormReport> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::ExponentOutOfRange { name: "p", value: p });
        }
        if w.domain().sides() != self.base.domain().sides() {
            return Err(Error::IncompatibleSpec("weight lives on a different grid".into()));
        }
        let wv = if w.is_unit() { None } else { Some(w.values()) };
        let per_set: Vec<f64> = (0..self.len()).map(|i| self.moment(i, p, wv).powf(1.0 / p)).collect();
        let mut best = 0;
        for (i, &v) in per_set.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::OverflowGuard("oscillation moment"));
            }
            if v > per_set[best] {
                best = i;
            }
        }
        Ok(NormReport {
            value: per_set[best],
            p,
            weight_id: w.id().to_string(),
            extremal_set: self.base.sets()[best],
            per_set: Some(per_set),
        })
    }
}

/// `||f||_{X_w^p}` for the functional `spec` over `base`.
pub fn oscillation_norm<'a>(
    input: impl Into<OscInput<'a>>,
    spec: &OscillationSpec,
    w: &Weight,
    p: f64,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<NormReport> {
    OscillationTable::build(input, spec, base, mu)?.norm(w, p)
}
