use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CacheKey, Weight};
use crate::error::{Error, Result};
use crate::lattice::{log_sum_exp, BaseFamily, BaseSet, Measure, NeumaierSum};
use crate::operators::{maximal_values, MaximalKind};
use crate::verify::{CertificateReport, TheoremId};

/// Powers beyond this magnitude (or below its reciprocal) switch the
/// computation to log space.
const POWER_LIMIT: f64 = 1e300;

/// Below this many base sets the per-set work runs sequentially.
const PAR_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstantKind {
    Ap,
    A1,
    Rh,
    Doubling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub kind: ConstantKind,
    /// `p` for A_p, `delta` for RH; absent for A1 and doubling.
    pub exponent: Option<f64>,
    pub value: f64,
    /// Base set attaining the maximum (a single cell for A1, the child set
    /// for doubling).
    pub argmax: BaseSet,
    pub base_id: String,
    /// Whether any base set needed the log-space path.
    pub log_space: bool,
}

enum Mean {
    Direct(f64),
    Log(f64),
}

impl Mean {
    fn ln(&self) -> f64 {
        match *self {
            Mean::Direct(v) => v.ln(),
            Mean::Log(l) => l,
        }
    }
}

/// `(1/mu(B)) sum_B w^e dmu`, directly when every power stays in range.
fn power_mean(values: &[f64], e: f64, b: &BaseSet, mu: &Measure) -> Result<Mean> {
    let dom = mu.domain();
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    let mut in_range = true;
    for c in b.cells(dom) {
        let m = mu.mass(c);
        if m > 0.0 {
            let t = if e == 1.0 { values[c] } else { values[c].powf(e) };
            if !(1.0 / POWER_LIMIT..=POWER_LIMIT).contains(&t) {
                in_range = false;
                break;
            }
            num.add(t * m);
            den.add(m);
        }
    }
    if in_range {
        let den = den.total();
        if den <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let avg = num.total() / den;
        if avg.is_finite() && avg > 0.0 {
            return Ok(Mean::Direct(avg));
        }
    }
    let mut terms = Vec::new();
    let mut masses = Vec::new();
    for c in b.cells(dom) {
        let m = mu.mass(c);
        if m > 0.0 {
            terms.push(e * values[c].ln() + m.ln());
            masses.push(m.ln());
        }
    }
    if terms.is_empty() {
        return Err(Error::ZeroMass);
    }
    Ok(Mean::Log(log_sum_exp(&terms) - log_sum_exp(&masses)))
}

/// Per-set values, then the first maximum in canonical order.
fn max_over_base(
    base: &BaseFamily,
    per_set: impl Fn(&BaseSet) -> Result<(f64, bool)> + Sync,
) -> Result<(f64, BaseSet, bool)> {
    let vals: Vec<Result<(f64, bool)>> = if base.len() >= PAR_THRESHOLD {
        base.sets().par_iter().map(&per_set).collect()
    } else {
        base.sets().iter().map(&per_set).collect()
    };
    let mut best: Option<(f64, BaseSet)> = None;
    let mut any_log = false;
    for (b, v) in base.sets().iter().zip(vals) {
        let (v, log) = v?;
        any_log |= log;
        if !v.is_finite() {
            return Err(Error::OverflowGuard("constant is not representable"));
        }
        if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
            best = Some((v, *b));
        }
    }
    let (v, b) = best.ok_or(Error::EmptyBase)?;
    Ok((v, b, any_log))
}

fn check_exponent(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 1.0 {
        Ok(())
    } else {
        Err(Error::ExponentOutOfRange { name, value })
    }
}

fn key(kind: ConstantKind, exponent: f64, base: &BaseFamily, mu: &Measure, extra: String) -> CacheKey {
    CacheKey { kind, exponent_bits: exponent.to_bits(), base_id: base.id().to_string(), measure: mu.digest(), extra }
}

/// A_p constant of `values^s`, evaluated through power means of `values`.
pub(crate) fn ap_of_power(
    values: &[f64],
    s: f64,
    p: f64,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<(f64, BaseSet, bool)> {
    check_exponent("p", p)?;
    let dual = -s / (p - 1.0);
    max_over_base(base, |b| {
        let a = power_mean(values, s, b, mu)?;
        let c = power_mean(values, dual, b, mu)?;
        if let (Mean::Direct(a), Mean::Direct(c)) = (&a, &c) {
            let v = a * c.powf(p - 1.0);
            if v.is_finite() && v > 0.0 {
                return Ok((v, false));
            }
        }
        Ok(((a.ln() + (p - 1.0) * c.ln()).exp(), true))
    })
}

/// `max_B avg(w) * avg(w^{-1/(p-1)})^{p-1}`.
pub fn muckenhoupt_constant(w: &Weight, p: f64, base: &BaseFamily, mu: &Measure) -> Result<ConstantReport> {
    check_exponent("p", p)?;
    w.cached(key(ConstantKind::Ap, p, base, mu, String::new()), || {
        let (value, argmax, log_space) = ap_of_power(w.values(), 1.0, p, base, mu)?;
        Ok(ConstantReport {
            kind: ConstantKind::Ap,
            exponent: Some(p),
            value,
            argmax,
            base_id: base.id().to_string(),
            log_space,
        })
    })
}

/// `max_B (avg w^delta)^{1/delta} / avg w`.
pub fn reverse_holder_constant(w: &Weight, delta: f64, base: &BaseFamily, mu: &Measure) -> Result<ConstantReport> {
    check_exponent("delta", delta)?;
    w.cached(key(ConstantKind::Rh, delta, base, mu, String::new()), || {
        let values = w.values();
        let (value, argmax, log_space) = max_over_base(base, |b| {
            let a = power_mean(values, delta, b, mu)?;
            let m = power_mean(values, 1.0, b, mu)?;
            if let (Mean::Direct(a), Mean::Direct(m)) = (&a, &m) {
                let v = a.powf(1.0 / delta) / m;
                if v.is_finite() && v > 0.0 {
                    return Ok((v, false));
                }
            }
            Ok(((a.ln() / delta - m.ln()).exp(), true))
        })?;
        Ok(ConstantReport {
            kind: ConstantKind::Rh,
            exponent: Some(delta),
            value,
            argmax,
            base_id: base.id().to_string(),
            log_space,
        })
    })
}

/// `max_x M w(x) / w(x)` over positive-mass cells.
pub fn a1_constant(w: &Weight, base: &BaseFamily, mu: &Measure, kind: &MaximalKind) -> Result<ConstantReport> {
    w.cached(key(ConstantKind::A1, 0.0, base, mu, kind.mode.as_str().to_string()), || {
        let mw = maximal_values(w.values(), base, mu, kind.mode)?;
        let dom = w.domain();
        let mut best: Option<(f64, usize)> = None;
        for (c, (&m, &v)) in mw.iter().zip(w.values()).enumerate() {
            if mu.mass(c) <= 0.0 {
                continue;
            }
            let r = m / v;
            if !r.is_finite() {
                return Err(Error::OverflowGuard("maximal function ratio"));
            }
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, c));
            }
        }
        let (value, cell) = best.ok_or(Error::ZeroMass)?;
        let (i0, i1) = dom.coords(cell);
        let argmax = BaseSet::new(dom.dims(), [i0 as u32, i1 as u32], [i0 as u32 + 1, i1 as u32 + 1]);
        Ok(ConstantReport {
            kind: ConstantKind::A1,
            exponent: None,
            value,
            argmax,
            base_id: base.id().to_string(),
            log_space: false,
        })
    })
}

/// `D_w`: the largest `w(P)/w(C)` over the dyadic sets `P` reachable from
/// the base by simultaneous bisection (down to single cells) and their
/// children `C` of positive mass. Equals 1 when no set can be split.
pub fn doubling_constant(w: &Weight, base: &BaseFamily, mu: &Measure) -> Result<ConstantReport> {
    if let Some(b) = base.sets().iter().find(|b| !b.is_dyadic()) {
        return Err(Error::NotDyadic(*b));
    }
    w.cached(key(ConstantKind::Doubling, 0.0, base, mu, String::new()), || {
        let mut masses: HashMap<BaseSet, f64> = HashMap::new();
        let mut mass = |b: &BaseSet| *masses.entry(*b).or_insert_with(|| w.mass(b, mu));
        let mut seen = std::collections::HashSet::new();
        let mut stack: Vec<BaseSet> = base.sets().to_vec();
        let mut parents = Vec::new();
        while let Some(p) = stack.pop() {
            if p.is_single_cell() || !seen.insert(p) {
                continue;
            }
            parents.push(p);
            stack.extend(p.children());
        }
        parents.sort_by_key(|b| b.canonical_key());
        let mut best = (1.0, base.sets()[0]);
        for p in &parents {
            let wp = mass(p);
            for c in p.children() {
                let wc = mass(&c);
                if wc > 0.0 {
                    let r = wp / wc;
                    if r > best.0 {
                        best = (r, c);
                    }
                }
            }
        }
        if !best.0.is_finite() {
            return Err(Error::OverflowGuard("doubling ratio"));
        }
        Ok(ConstantReport {
            kind: ConstantKind::Doubling,
            exponent: None,
            value: best.0,
            argmax: best.1,
            base_id: base.id().to_string(),
            log_space: false,
        })
    })
}

/// Checks `[u^delta]_{A_q} <= ([u]_{RH_delta} [u]_{A_p})^delta` with
/// `q = 1 + delta (p - 1)`.
pub fn power_bump_check(u: &Weight, p: f64, delta: f64, base: &BaseFamily, mu: &Measure) -> Result<CertificateReport> {
    check_exponent("p", p)?;
    check_exponent("delta", delta)?;
    let q = 1.0 + delta * (p - 1.0);
    let (lhs, argmax, _) = ap_of_power(u.values(), delta, q, base, mu)?;
    let rh = reverse_holder_constant(u, delta, base, mu)?.value;
    let ap = muckenhoupt_constant(u, p, base, mu)?.value;
    let rhs = (rh * ap).powf(delta);
    if !rhs.is_finite() {
        return Err(Error::OverflowGuard("power-bump right-hand side"));
    }
    let mut d = crate::digest::Digester::new("power-bump");
    d.str(u.id()).str(base.id()).f64(p).f64(delta);
    let mut report = CertificateReport::new(TheoremId::PowerBump, d.finish());
    report.check("[u^delta]_{A_q} <= ([u]_{RH_delta} [u]_{A_p})^delta", lhs, rhs);
    report.meta("q", q);
    report.meta("argmax_set", argmax);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain};

    fn two_cells() -> (GridDomain, Measure, BaseFamily, Weight) {
        let d = GridDomain::line(2).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let w = Weight::new(&d, vec![1.0, 2.0]).unwrap();
        (d, mu, base, w)
    }

    #[test]
    fn two_cell_fixtures() {
        let (d, mu, base, w) = two_cells();
        let ap = muckenhoupt_constant(&w, 2.0, &base, &mu).unwrap();
        assert!((ap.value - 1.125).abs() < 1e-12);
        assert_eq!(ap.argmax, d.full_set());
        let rh = reverse_holder_constant(&w, 2.0, &base, &mu).unwrap();
        assert!((rh.value - 2.5f64.sqrt() / 1.5).abs() < 1e-12);
        let a1 = a1_constant(&w, &base, &mu, &MaximalKind::dyadic()).unwrap();
        assert!((a1.value - 1.5).abs() < 1e-15);
        assert_eq!(a1.argmax, BaseSet::interval(0, 1));
        let singles = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        assert!(singles.len() == 3);
    }

    #[test]
    fn power_bump_equality_on_two_points() {
        let (_, mu, base, w) = two_cells();
        let r = power_bump_check(&w, 2.0, 2.0, &base, &mu).unwrap();
        assert!(r.pass);
        let c = &r.checks[0];
        assert!((c.lhs - 1.40625).abs() < 1e-12, "{}", c.lhs);
        assert!((c.rhs - 1.40625).abs() < 1e-12, "{}", c.rhs);
    }

    #[test]
    fn unit_weight_constants_are_one() {
        let d = GridDomain::square(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::AllCubes, 0).unwrap();
        let w = Weight::unit(&d);
        for p in [1.5, 2.0, 7.0] {
            assert_eq!(muckenhoupt_constant(&w, p, &base, &mu).unwrap().value, 1.0);
            assert_eq!(reverse_holder_constant(&w, p, &base, &mu).unwrap().value, 1.0);
        }
        assert_eq!(
            doubling_constant(&w, &build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap(), &mu).unwrap().value,
            4.0
        );
    }

    #[test]
    fn exponent_range() {
        let (_, mu, base, w) = two_cells();
        assert!(matches!(muckenhoupt_constant(&w, 1.0, &base, &mu), Err(Error::ExponentOutOfRange { .. })));
        assert!(matches!(reverse_holder_constant(&w, 0.5, &base, &mu), Err(Error::ExponentOutOfRange { .. })));
    }

    #[test]
    fn log_space_matches_direct_on_rescaled_weight() {
        // A_p and RH are scale invariant, so a weight pushed past the
        // overflow threshold must give the same constants.
        let d = GridDomain::line(8).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::AllCubes, 0).unwrap();
        let vals = vec![1.0, 3.0, 0.5, 2.0, 7.0, 1.0, 0.25, 4.0];
        let w = Weight::new(&d, vals.clone()).unwrap();
        let big = Weight::new(&d, vals.iter().map(|v| v * 1e200).collect()).unwrap();
        let a = muckenhoupt_constant(&w, 2.5, &base, &mu).unwrap();
        let b = muckenhoupt_constant(&big, 2.5, &base, &mu).unwrap();
        assert!(!a.log_space);
        assert!((a.value - b.value).abs() < 1e-12 * a.value);
        let a = reverse_holder_constant(&w, 2.0, &base, &mu).unwrap();
        let b = reverse_holder_constant(&big, 2.0, &base, &mu).unwrap();
        assert!(b.log_space);
        assert!((a.value - b.value).abs() < 1e-12 * a.value);
    }

    #[test]
    fn doubling_of_spike() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let w = Weight::new(&d, vec![1.0, 1.0, 1.0, 100.0]).unwrap();
        let r = doubling_constant(&w, &base, &mu).unwrap();
        // [2,4) has mass 101 and its child [2,3) has mass 1.
        assert_eq!(r.value, 101.0);
        assert_eq!(r.argmax, BaseSet::interval(2, 3));
        let a1 = a1_constant(&w, &base, &mu, &MaximalKind::dyadic()).unwrap();
        assert_eq!(a1.value, 50.5);
        assert_eq!(a1.argmax, BaseSet::interval(2, 3));
    }

    #[test]
    fn cache_returns_identical_reports() {
        let (_, mu, base, w) = two_cells();
        let a = muckenhoupt_constant(&w, 3.0, &base, &mu).unwrap();
        let b = muckenhoupt_constant(&w.clone(), 3.0, &base, &mu).unwrap();
        assert_eq!(a, b);
        assert_eq!(w.cached_constants().len(), 1);
    }
}
