use serde::{Deserialize, Serialize};

use super::{maximal_values, MaximalKind};
use crate::error::{Error, Result};
use crate::lattice::{lp_norm, BaseFamily, GridFunction, Measure, NeumaierSum};
use crate::weights::{Provenance, Weight};

/// Truncation data and post-hoc invariants of one Rubio de Francia run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubioReport {
    pub p: f64,
    /// Last power of `M` included in the partial sum.
    pub iterations: usize,
    /// The value `B` of the norm bound at `p`; terms are divided by `(2B)^k`.
    pub bound: f64,
    pub tol: f64,
    /// `min_x (u(x) - |g(x)|)` over positive-mass cells; never negative.
    pub dominance_margin: f64,
    /// `max_x M u(x) / u(x)` over positive-mass cells.
    pub maximal_ratio: f64,
    /// `||u||_p / ||g||_p`.
    pub norm_ratio: f64,
    pub dominates: bool,
    pub a1_ok: bool,
    pub norm_ok: bool,
}

impl RubioReport {
    pub fn all_ok(&self) -> bool {
        self.dominates && self.a1_ok && self.norm_ok
    }
}

#[derive(Debug, Clone)]
pub struct RubioOutput {
    pub weight: Weight,
    pub report: RubioReport,
}

/// `u = sum_{k=0}^K M^k |g| / (2B)^k` with `B = kind.bound(p)`.
///
/// The series stops once the sup of the next term drops below `tol` times
/// the smallest positive value of the partial sum; since each term is at
/// most half the previous one in sup norm this terminates, and the hard cap
/// `10 L log2(1/tol)` only guards against a broken bound. Zero-mass cells
/// carry no information and are set to 1 so the result is a valid weight.
pub fn rubio_de_francia(
    g: &GridFunction,
    p: f64,
    base: &BaseFamily,
    mu: &Measure,
    kind: &MaximalKind,
    tol: f64,
) -> Result<RubioOutput> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::ExponentOutOfRange { name: "p", value: p });
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::BadParams(format!("tolerance must lie in (0,1), got {tol}")));
    }
    kind.norm_bound.validate()?;
    let n = g.values().len();
    let positive: Vec<bool> = (0..n).map(|c| mu.mass(c) > 0.0).collect();
    let mut term: Vec<f64> =
        g.values().iter().zip(&positive).map(|(v, &pos)| if pos { v.abs() } else { 0.0 }).collect();
    if term.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroInput);
    }
    let bound = kind.bound(p);
    let scale = 2.0 * bound;
    let level = base.domain().max_level().max(1) as f64;
    let cap = (10.0 * level * (1.0 / tol).log2()).ceil() as usize;

    let mut sums: Vec<NeumaierSum> = term.iter().map(|&t| NeumaierSum::from_iter([t])).collect();
    let mut k = 0;
    loop {
        let mut next = maximal_values(&term, base, mu, kind.mode)?;
        for v in next.iter_mut() {
            *v /= scale;
        }
        let sup = next.iter().cloned().fold(0.0, f64::max);
        let min_pos = sums.iter().map(|s| s.total()).filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
        if sup < tol * min_pos {
            break;
        }
        k += 1;
        if k > cap {
            return Err(Error::NonConvergence(cap));
        }
        for (s, &t) in sums.iter_mut().zip(&next) {
            s.add(t);
        }
        term = next;
    }

    let u: Vec<f64> = sums.iter().zip(&positive).map(|(s, &pos)| if pos { s.total() } else { 1.0 }).collect();
    let abs_g: Vec<f64> = g.values().iter().map(|v| v.abs()).collect();
    let dominance_margin = (0..n).filter(|&c| positive[c]).map(|c| u[c] - abs_g[c]).fold(f64::INFINITY, f64::min);
    let mu_u = maximal_values(&u, base, mu, kind.mode)?;
    let maximal_ratio = (0..n).filter(|&c| positive[c]).map(|c| mu_u[c] / u[c]).fold(0.0, f64::max);
    let u_masked: Vec<f64> = u.iter().zip(&positive).map(|(v, &pos)| if pos { *v } else { 0.0 }).collect();
    let norm_ratio = lp_norm(&u_masked, p, mu) / lp_norm(&abs_g, p, mu);
    let report = RubioReport {
        p,
        iterations: k,
        bound,
        tol,
        dominance_margin,
        maximal_ratio,
        norm_ratio,
        dominates: dominance_margin >= 0.0,
        a1_ok: maximal_ratio <= scale * (1.0 + 10.0 * tol),
        norm_ok: norm_ratio <= 2.0 * (1.0 + 10.0 * tol),
    };
    let provenance = Provenance {
        kind: "rubio-a1".into(),
        seed: None,
        params: serde_json::json!({
            "source": g.digest(),
            "p": p,
            "mode": kind.mode,
            "norm_bound": kind.norm_bound,
            "iterations": k,
            "bound": bound,
        }),
    };
    let weight = Weight::with_provenance(g.domain(), u, provenance)?;
    Ok(RubioOutput { weight, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain};
    use crate::operators::MaximalKind;

    #[test]
    fn spike_series_sums_to_four_thirds() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let g = GridFunction::new(&d, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = rubio_de_francia(&g, 2.0, &base, &mu, &MaximalKind::dyadic(), 1e-13).unwrap();
        assert_eq!(out.report.bound, 2.0);
        assert!((out.weight.values()[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!(out.report.all_ok(), "{:?}", out.report);
    }

    #[test]
    fn zero_input() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let g = GridFunction::constant(&d, 0.0);
        assert!(matches!(rubio_de_francia(&g, 2.0, &base, &mu, &MaximalKind::dyadic(), 1e-9), Err(Error::ZeroInput)));
    }
}
