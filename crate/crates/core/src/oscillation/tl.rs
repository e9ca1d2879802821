use serde::{Deserialize, Serialize};

use super::{OscillationSpec, OscillationTable};
use crate::error::{Error, Result};
use crate::lattice::{BaseFamily, BaseSet, GridDomain, Measure};
use crate::weights::Weight;

/// Finitely supported coefficients `{s_Q}` indexed by dyadic cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlSequence {
    domain: GridDomain,
    coeffs: Vec<(BaseSet, f64)>,
}

impl TlSequence {
    /// Entries must be distinct dyadic cubes inside `domain`; zero
    /// coefficients are dropped.
    pub fn new(domain: &GridDomain, coeffs: Vec<(BaseSet, f64)>) -> Result<Self> {
        let mut coeffs: Vec<(BaseSet, f64)> = coeffs.into_iter().filter(|(_, s)| *s != 0.0).collect();
        for (q, s) in &coeffs {
            if q.dims() != domain.dims() || !q.is_within(domain) {
                return Err(Error::BadParams(format!("{q} is not a cell box of the grid")));
            }
            if !q.is_dyadic() || !q.is_cube() {
                return Err(Error::NotDyadic(*q));
            }
            if !s.is_finite() {
                return Err(Error::BadParams(format!("coefficient on {q} is not finite")));
            }
        }
        coeffs.sort_by_key(|(q, _)| q.canonical_key());
        if coeffs.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(Error::BadParams("repeated cube in sequence".into()));
        }
        Ok(Self { domain: *domain, coeffs })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn coeffs(&self) -> &[(BaseSet, f64)] {
        &self.coeffs
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `|Q|` with the whole grid normalized to measure one.
    pub fn volume(&self, q: &BaseSet) -> f64 {
        q.cell_count() as f64 / self.domain.cell_count() as f64
    }

    /// `|Q|^{1/2 + alpha/n}`.
    pub fn normalizer(&self, q: &BaseSet, alpha: f64) -> f64 {
        self.volume(q).powf(0.5 + alpha / self.domain.dims() as f64)
    }

    /// `sum_{Q in b} (|Q|^{-1/2-alpha/n} |s_Q| chi_Q)^q` on the cells of `b`
    /// in canonical order; zero on zero-mass cells.
    pub fn lambda_on(&self, b: &BaseSet, alpha: f64, q: f64, mu: &Measure) -> Vec<f64> {
        let width = b.len(1);
        let mut out = vec![0.0; b.cell_count()];
        for (cube, s) in self.coeffs.iter().filter(|(c, _)| c.is_subset_of(b)) {
            let term = (s.abs() / self.normalizer(cube, alpha)).powf(q);
            for i0 in cube.lo()[0]..cube.hi()[0] {
                for i1 in cube.lo()[1]..cube.hi()[1] {
                    let k = (i0 - b.lo()[0]) as usize * width + (i1 - b.lo()[1]) as usize;
                    out[k] += term;
                }
            }
        }
        for (v, c) in out.iter_mut().zip(b.cells(&self.domain)) {
            if mu.mass(c) <= 0.0 {
                *v = 0.0;
            }
        }
        out
    }
}

/// The two sequence norms and their ratio `weighted / unweighted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlProbe {
    /// `sup_P (avg_P Lambda)^{1/q}`.
    pub unweighted: f64,
    /// `sup_P ((1/w(P)) sum_P Lambda^{p/q} w)^{1/p}`.
    pub weighted: f64,
    pub ratio: f64,
    pub unweighted_set: BaseSet,
    pub weighted_set: BaseSet,
}

pub fn tl_equivalence_probe(
    s: &TlSequence,
    alpha: f64,
    q: f64,
    p: f64,
    w: &Weight,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<TlProbe> {
    if s.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::ExponentOutOfRange { name: "p", value: p });
    }
    let table = OscillationTable::build(s, &OscillationSpec::TlSeq { alpha, q }, base, mu)?;
    let plain = table.norm(&Weight::unit(s.domain()), 1.0)?;
    let weighted = table.norm(w, p / q)?;
    let unweighted = plain.value.powf(1.0 / q);
    let weighted_v = weighted.value.powf(1.0 / q);
    Ok(TlProbe {
        unweighted,
        weighted: weighted_v,
        ratio: weighted_v / unweighted,
        unweighted_set: plain.extremal_set,
        weighted_set: weighted.extremal_set,
    })
}
