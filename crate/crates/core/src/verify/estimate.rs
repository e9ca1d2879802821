use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instance::{CertInputs, InstanceGenerator};
use super::TheoremId;
use crate::digest::Digester;
use crate::error::{Error, Result};
use crate::operators::MaximalKind;
use crate::oscillation::{OscillationSpec, OscillationTable};
use crate::weights::{generate_weight, muckenhoupt_constant, SelfImprovementParams, Weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    /// `c_{p,q}(w)`: best constant in `||f||_{X_w^q} <= c ||f||_{X_w^p}`.
    CPq,
    /// `b_{w,v}`: best constant in `||f||_{X_v} <= b ||f||_{X_w}`.
    BWv,
    /// `Psi_p(t) = sup { b_{1,v} : [v]_{A_p} <= t }`.
    Psi,
}

/// Parameters of one estimate. Weight names refer to entries of each
/// corpus record; `None` means the unit weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateArgs {
    pub p: f64,
    pub q: f64,
    pub w: Option<String>,
    pub v: Option<String>,
    pub t: f64,
}

impl EstimateArgs {
    pub fn c_pq(p: f64, q: f64, w: Option<&str>) -> Self {
        Self { p, q, w: w.map(str::to_string), v: None, t: f64::NAN }
    }

    pub fn b_wv(w: Option<&str>, v: Option<&str>) -> Self {
        Self { p: 1.0, q: 1.0, w: w.map(str::to_string), v: v.map(str::to_string), t: f64::NAN }
    }

    pub fn psi(p: f64, t: f64) -> Self {
        Self { p, q: 1.0, w: None, v: None, t }
    }
}

/// Empirical maximum over a corpus; always a lower bound for the constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: EstimateKind,
    pub value: f64,
    pub corpus_digest: String,
    pub args: EstimateArgs,
    /// Ratios that entered the maximum.
    pub used: usize,
    /// Entries skipped for a zero denominator or, for `psi`, an `A_p`
    /// constant above `t`.
    pub skipped: usize,
    /// Index of the corpus entry attaining the maximum.
    pub argmax: usize,
}

pub fn corpus_digest(corpus: &[CertInputs]) -> String {
    let mut d = Digester::new("corpus");
    for c in corpus {
        d.str(&c.digest());
    }
    d.finish()
}

fn pick<'a>(c: &'a CertInputs, name: &Option<String>, unit: &'a Weight) -> Result<&'a Weight> {
    match name {
        None => Ok(unit),
        Some(n) => c.weight(n),
    }
}

fn wv(w: &Weight) -> Option<&[f64]> {
    if w.is_unit() {
        None
    } else {
        Some(w.values())
    }
}

/// Ratios contributed by one corpus entry; `None` marks a skipped ratio.
fn entry_ratios(kind: EstimateKind, c: &CertInputs, args: &EstimateArgs) -> Result<Vec<Option<f64>>> {
    let unit = Weight::unit(c.base.domain());
    let table = OscillationTable::build(c.function()?, &OscillationSpec::classical(), &c.base, &c.mu)?;
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    Ok(match kind {
        EstimateKind::CPq => {
            let w = pick(c, &args.w, &unit)?;
            if args.p == args.q {
                vec![ratio(1.0, table.power_norm(args.p, wv(w)))]
            } else {
                vec![ratio(table.power_norm(args.q, wv(w)), table.power_norm(args.p, wv(w)))]
            }
        }
        EstimateKind::BWv => {
            let (w, v) = (pick(c, &args.w, &unit)?, pick(c, &args.v, &unit)?);
            vec![ratio(table.power_norm(1.0, wv(v)), table.power_norm(1.0, wv(w)))]
        }
        EstimateKind::Psi => {
            let base = table.power_norm(1.0, None);
            let mut out = Vec::new();
            for v in c.weights.values() {
                let a = muckenhoupt_constant(v, args.p, &c.base, &c.mu)?.value;
                out.push(if a <= args.t { ratio(table.power_norm(1.0, wv(v)), base) } else { None });
            }
            out
        }
    })
}

/// Empirical lower bound for `kind` over `corpus`.
pub fn estimate_constant(kind: EstimateKind, corpus: &[CertInputs], args: &EstimateArgs) -> Result<ConstantEstimate> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let all: Vec<Vec<Option<f64>>> = corpus.par_iter().map(|c| entry_ratios(kind, c, args)).collect::<Result<_>>()?;
    let mut best: Option<(f64, usize)> = None;
    let (mut used, mut skipped) = (0, 0);
    for (i, rs) in all.iter().enumerate() {
        for r in rs {
            match r {
                Some(x) => {
                    used += 1;
                    if best.is_none_or(|(b, _)| *x > b) {
                        best = Some((*x, i));
                    }
                }
                None => skipped += 1,
            }
        }
    }
    let (value, argmax) = best.ok_or(Error::AllDegenerate)?;
    // c_{p,p} is exactly 1 whenever some entry is nondegenerate.
    let value = if kind == EstimateKind::CPq && args.p == args.q { 1.0 } else { value };
    Ok(ConstantEstimate {
        kind,
        value,
        corpus_digest: corpus_digest(corpus),
        args: args.clone(),
        used,
        skipped,
        argmax,
    })
}

/// One row of the consistency table: the empirical `c_{1,p}` against the
/// upper bound `2 K(p',t) c_{1,Delta(p',t)'}` with `t = 2 ||M||_{p'}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyRow {
    pub p: f64,
    pub c1p: f64,
    pub t: f64,
    pub delta: f64,
    pub k: f64,
    pub c1_delta_conj: f64,
    pub upper: f64,
    pub holds: bool,
    pub corpus_digest: String,
}

pub fn consistency_check(
    corpus: &[CertInputs],
    p: f64,
    setting: &SelfImprovementParams,
    kind: &MaximalKind,
) -> Result<ConsistencyRow> {
    let pc = p / (p - 1.0);
    let t = 2.0 * kind.bound(pc);
    let delta = setting.delta(pc, t);
    let k = setting.k(pc, t);
    let dc = delta / (delta - 1.0);
    let c1p = estimate_constant(EstimateKind::CPq, corpus, &EstimateArgs::c_pq(1.0, p, None))?;
    let c1d = estimate_constant(EstimateKind::CPq, corpus, &EstimateArgs::c_pq(1.0, dc, None))?;
    let upper = 2.0 * k * c1d.value;
    Ok(ConsistencyRow {
        p,
        c1p: c1p.value,
        t,
        delta,
        k,
        c1_delta_conj: c1d.value,
        upper,
        holds: c1p.value <= upper * (1.0 + super::CHECK_TOL),
        corpus_digest: c1p.corpus_digest,
    })
}

/// Seeded corpus of functions on 2-D dyadic grids (4x4 to 32x32) with one
/// log-bounded weight `w` per entry.
pub fn standard_corpus(seed: u64, count: u64) -> Result<Vec<CertInputs>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut g = InstanceGenerator::new(TheoremId::PowerBump, seed ^ 0x5eed_c0de, i);
            let (base, mu) = loop {
                let (b, m) = g.dyadic_grid()?;
                if b.domain().dims() == 2 && b.domain().side(0) <= 32 {
                    break (b, m);
                }
            };
            let f = g.function(base.domain());
            let bound = g.uniform(0.1, 2.0);
            let s = g.uniform(0.0, 1.0).to_bits();
            let w = generate_weight(&WeightSpec::RandomLogBounded { bound }, &base, &mu, s)?;
            let mut c = CertInputs::new(base, mu).with_function(f).with_weight("w", w);
            c.description = g.take_description();
            Ok(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain, GridFunction, Measure};

    fn entry(vals: Vec<f64>) -> CertInputs {
        let d = GridDomain::line(vals.len()).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let f = GridFunction::new(&d, vals).unwrap();
        CertInputs::new(base, mu).with_function(f)
    }

    #[test]
    fn constants_only_is_degenerate() {
        let corpus = vec![entry(vec![1.0; 4]), entry(vec![-2.0; 8])];
        let e = estimate_constant(EstimateKind::CPq, &corpus, &EstimateArgs::c_pq(1.0, 2.0, None));
        assert!(matches!(e, Err(Error::AllDegenerate)));
        assert!(matches!(
            estimate_constant(EstimateKind::CPq, &[], &EstimateArgs::c_pq(1.0, 2.0, None)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn equal_exponents_give_one() {
        let corpus = vec![entry(vec![0.0, 1.0, 3.0, -1.0])];
        let e = estimate_constant(EstimateKind::CPq, &corpus, &EstimateArgs::c_pq(2.0, 2.0, None)).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn step_function_c_1_2() {
        // Lambda on the root is 1/2 everywhere and vanishes on the halves.
        let corpus = vec![entry(vec![0.0, 0.0, 1.0, 1.0])];
        let e = estimate_constant(EstimateKind::CPq, &corpus, &EstimateArgs::c_pq(1.0, 2.0, None)).unwrap();
        assert!((e.value - 1.0).abs() < 1e-15);
        // Root: Lambda = (3/2, 1/2, 1/2, 3/2) beats both halves in each exponent.
        let corpus = vec![entry(vec![0.0, 1.0, 2.0, 3.0])];
        let e = estimate_constant(EstimateKind::CPq, &corpus, &EstimateArgs::c_pq(1.0, 2.0, None)).unwrap();
        assert!((e.value - 5f64.sqrt() / 2.0).abs() < 1e-14, "{}", e.value);
    }

    #[test]
    fn consistency_holds_on_standard_corpus() {
        let corpus = standard_corpus(3, 12).unwrap();
        for p in [2.0, 4.0] {
            let row =
                consistency_check(&corpus, p, &SelfImprovementParams::euclidean(2), &MaximalKind::dyadic()).unwrap();
            assert!(row.holds, "{row:?}");
        }
    }
}
