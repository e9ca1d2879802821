use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::TheoremId;
use crate::digest::Digester;
use crate::error::{Error, Result};
use crate::lattice::{build_base, BaseFamily, BaseKind, BaseSet, GridDomain, GridFunction, Measure};
use crate::operators::MaximalKind;
use crate::oscillation::TlSequence;
use crate::weights::{generate_weight, SelfImprovementParams, Weight, WeightSpec};

/// Everything a certificate needs: the base, the measure, the input
/// function or sequence, named weights and named exponents.
#[derive(Debug, Clone)]
pub struct CertInputs {
    pub base: BaseFamily,
    pub mu: Measure,
    pub f: Option<GridFunction>,
    pub seq: Option<TlSequence>,
    pub weights: BTreeMap<String, Weight>,
    pub params: BTreeMap<String, f64>,
    pub setting: Option<SelfImprovementParams>,
    pub maximal: Option<MaximalKind>,
    /// Free-form description copied into report metadata.
    pub description: serde_json::Map<String, Value>,
}

impl CertInputs {
    pub fn new(base: BaseFamily, mu: Measure) -> Self {
        Self {
            base,
            mu,
            f: None,
            seq: None,
            weights: BTreeMap::new(),
            params: BTreeMap::new(),
            setting: None,
            maximal: None,
            description: Default::default(),
        }
    }

    pub fn with_function(mut self, f: GridFunction) -> Self {
        self.f = Some(f);
        self
    }

    pub fn with_sequence(mut self, s: TlSequence) -> Self {
        self.seq = Some(s);
        self
    }

    pub fn with_weight(mut self, name: &str, w: Weight) -> Self {
        self.weights.insert(name.to_string(), w);
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_setting(mut self, s: SelfImprovementParams) -> Self {
        self.setting = Some(s);
        self
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params.get(name).copied().ok_or_else(|| Error::MissingInput(format!("exponent `{name}`")))
    }

    pub fn weight(&self, name: &str) -> Result<&Weight> {
        self.weights.get(name).ok_or_else(|| Error::MissingInput(format!("weight `{name}`")))
    }

    pub fn function(&self) -> Result<&GridFunction> {
        self.f.as_ref().ok_or_else(|| Error::MissingInput("function".into()))
    }

    pub fn sequence(&self) -> Result<&TlSequence> {
        self.seq.as_ref().ok_or_else(|| Error::MissingInput("sequence".into()))
    }

    pub fn digest(&self) -> String {
        let mut d = Digester::new("cert-inputs");
        d.str(self.base.id()).str(&self.mu.digest());
        if let Some(f) = &self.f {
            d.str(&f.digest());
        }
        if let Some(s) = &self.seq {
            for (q, v) in s.coeffs() {
                d.str(&q.to_string()).f64(*v);
            }
        }
        for (k, w) in &self.weights {
            d.str(k).str(w.id());
        }
        for (k, v) in &self.params {
            d.str(k).f64(*v);
        }
        if let Some(s) = &self.setting {
            d.str(&serde_json::to_string(s).unwrap_or_default());
        }
        if let Some(m) = &self.maximal {
            d.str(&serde_json::to_string(m).unwrap_or_default());
        }
        d.finish()
    }
}

/// Seeded generator for the random suites. Each `(theorem, trial)` pair
/// draws from its own ChaCha stream so trials are independent of order.
pub struct InstanceGenerator {
    rng: ChaCha8Rng,
    seed: u64,
    desc: serde_json::Map<String, Value>,
}

const LOG_SIDES_1D: [u32; 5] = [2, 3, 4, 5, 6];
const LOG_SIDES_2D: [u32; 6] = [1, 2, 3, 4, 5, 6];

impl InstanceGenerator {
    pub fn new(theorem: TheoremId, seed: u64, trial: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tag = TheoremId::all().iter().position(|t| *t == theorem).unwrap_or(9) as u64;
        rng.set_stream((tag << 40) | trial);
        let mut desc = serde_json::Map::new();
        desc.insert("seed".into(), json!(seed));
        desc.insert("trial".into(), json!(trial));
        Self { rng, seed, desc }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn note(&mut self, key: &str, v: Value) {
        self.desc.insert(key.to_string(), v);
    }

    pub fn take_description(&mut self) -> serde_json::Map<String, Value> {
        std::mem::take(&mut self.desc)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Cube grid: 1-D up to 64 cells or 2-D up to 64x64, with a dyadic
    /// cube base, or an all-cubes base on small grids.
    pub fn cube_grid(&mut self, general_measure: bool) -> Result<(BaseFamily, Measure)> {
        let two_d = self.rng.gen_bool(0.5);
        let domain = if two_d {
            GridDomain::square(1 << LOG_SIDES_2D[self.rng.gen_range(0..LOG_SIDES_2D.len())])?
        } else {
            GridDomain::line(1 << LOG_SIDES_1D[self.rng.gen_range(0..LOG_SIDES_1D.len())])?
        };
        let small = domain.cell_count() <= 256 && (!two_d || domain.side(0) <= 16);
        let kind = if small && self.rng.gen_bool(0.35) { BaseKind::AllCubes } else { BaseKind::DyadicCubes };
        let mu = self.measure(&domain, general_measure)?;
        self.note("sides", json!(domain.sides()));
        self.note("base", json!(kind.as_str()));
        Ok((build_base(&domain, &mu, kind, 0)?, mu))
    }

    /// Dyadic cube grid only, 1-D or 2-D.
    pub fn dyadic_grid(&mut self) -> Result<(BaseFamily, Measure)> {
        let domain = if self.rng.gen_bool(0.5) {
            GridDomain::square(1 << LOG_SIDES_2D[self.rng.gen_range(1..LOG_SIDES_2D.len())])?
        } else {
            GridDomain::line(1 << LOG_SIDES_1D[self.rng.gen_range(0..LOG_SIDES_1D.len())])?
        };
        let mu = Measure::uniform(&domain);
        self.note("sides", json!(domain.sides()));
        self.note("base", json!(BaseKind::DyadicCubes.as_str()));
        Ok((build_base(&domain, &mu, BaseKind::DyadicCubes, 0)?, mu))
    }

    /// Dyadic cube grid with at most `max_cells` cells.
    pub fn small_grid(&mut self, max_cells: usize) -> Result<(BaseFamily, Measure)> {
        let domain = loop {
            let d = if self.rng.gen_bool(0.5) {
                GridDomain::square(1 << self.rng.gen_range(1..=3))?
            } else {
                GridDomain::line(1 << self.rng.gen_range(2..=6))?
            };
            if d.cell_count() <= max_cells {
                break d;
            }
        };
        let mu = Measure::uniform(&domain);
        self.note("sides", json!(domain.sides()));
        Ok((build_base(&domain, &mu, BaseKind::DyadicCubes, 0)?, mu))
    }

    /// Product grid with dyadic rectangles, or all rectangles on small grids.
    pub fn rectangle_grid(&mut self, max_log: u32) -> Result<(BaseFamily, Measure)> {
        let l = self.rng.gen_range(2..=max_log);
        let domain = GridDomain::square(1 << l)?.with_split()?;
        let kind = if l <= 3 && self.rng.gen_bool(0.3) { BaseKind::AllRectangles } else { BaseKind::DyadicRectangles };
        let mu = Measure::uniform(&domain);
        self.note("sides", json!(domain.sides()));
        self.note("base", json!(kind.as_str()));
        Ok((build_base(&domain, &mu, kind, 0)?, mu))
    }

    fn measure(&mut self, domain: &GridDomain, general: bool) -> Result<Measure> {
        if general && self.rng.gen_bool(0.25) {
            self.note("measure", json!("general"));
            let masses = (0..domain.cell_count()).map(|_| self.rng.gen_range(-1.0f64..1.0).exp()).collect();
            Measure::general(domain, masses)
        } else {
            self.note("measure", json!("uniform"));
            Ok(Measure::uniform(domain))
        }
    }

    /// One of several function families, scaled to `max |f| = 1`. About one
    /// draw in forty is constant.
    pub fn function(&mut self, domain: &GridDomain) -> GridFunction {
        let n = domain.cell_count();
        let family = if self.rng.gen_bool(0.025) { 4 } else { self.rng.gen_range(0..4) };
        let rng = &mut self.rng;
        let vals: Vec<f64> = match family {
            0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            1 => {
                let c0 = rng.gen_range(0.0..domain.side(0) as f64);
                let c1 = rng.gen_range(0.0..domain.side(1) as f64);
                (0..n)
                    .map(|k| {
                        let (i0, i1) = domain.coords(k);
                        let d0 = i0 as f64 + 0.5 - c0;
                        let d1 = if domain.dims() == 2 { i1 as f64 + 0.5 - c1 } else { 0.0 };
                        (d0 * d0 + d1 * d1).sqrt().max(0.05).ln()
                    })
                    .collect()
            }
            2 => {
                let cut = rng.gen_range(1..domain.side(0).max(2));
                let jump = rng.gen_range(0.5..3.0);
                (0..n)
                    .map(|k| if domain.coords(k).0 < cut { 0.0 } else { jump } + 0.1 * rng.gen_range(-1.0..1.0))
                    .collect()
            }
            3 => {
                let fr = rng.gen_range(0.5..4.0);
                let ph = rng.gen_range(0.0..6.3);
                (0..n)
                    .map(|k| {
                        let (i0, i1) = domain.coords(k);
                        let x = (i0 + i1) as f64 / domain.side(0) as f64;
                        (fr * x * 6.3 + ph).sin() + 0.2 * rng.gen_range(-1.0..1.0)
                    })
                    .collect()
            }
            _ => vec![rng.gen_range(-2.0..2.0); n],
        };
        let names = ["noise", "log-singularity", "step", "wave", "constant"];
        self.note("function", json!(names[family]));
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let vals = if family != 4 && top > 0.0 { vals.iter().map(|v| v / top).collect() } else { vals };
        GridFunction::new(domain, vals).expect("finite values")
    }

    /// A random positive weight from a mixed family; `unit` with small
    /// probability.
    pub fn weight(&mut self, name: &str, base: &BaseFamily, mu: &Measure) -> Result<Weight> {
        let dims = base.domain().dims() as f64;
        let spec = match self.rng.gen_range(0..20) {
            0 => None,
            1..=9 => Some(WeightSpec::RandomLogBounded { bound: self.rng.gen_range(0.2..2.5) }),
            10..=15 => Some(WeightSpec::Power { a: self.rng.gen_range(-0.8 * dims..1.5) }),
            _ => Some(WeightSpec::Checkerboard { contrast: self.rng.gen_range(1.0..20.0) }),
        };
        let w = match spec {
            None => {
                self.note(name, json!("unit"));
                Weight::unit(base.domain())
            }
            Some(spec) => {
                let s = self.rng.gen::<u64>() ^ self.seed;
                self.note(name, serde_json::to_value(spec)?);
                generate_weight(&spec, base, mu, s)?
            }
        };
        Ok(w)
    }

    /// Sparse sequence on dyadic cubes with `1..=k` nonzero entries whose
    /// normalized sizes are log-uniform.
    pub fn sequence(&mut self, domain: &GridDomain, alpha: f64, k: usize) -> Result<TlSequence> {
        let dims = domain.dims();
        let levels = domain.max_level();
        let count = self.rng.gen_range(1..=k);
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            let l = self.rng.gen_range(0..=levels);
            let len = 1u32 << l;
            let per_axis = (domain.side(0) as u32) / len;
            let a = self.rng.gen_range(0..per_axis) * len;
            let q = if dims == 1 {
                BaseSet::interval(a, a + len)
            } else {
                let b = self.rng.gen_range(0..per_axis) * len;
                BaseSet::rect([a, b], [a + len, b + len])
            };
            let vol = q.cell_count() as f64 / domain.cell_count() as f64;
            let size = self.rng.gen_range(-1.5f64..1.5).exp() * vol.powf(0.5 + alpha / dims as f64);
            let sign = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if !coeffs.iter().any(|(c, _): &(BaseSet, f64)| *c == q) {
                coeffs.push((q, sign * size));
            }
        }
        self.note("coefficients", json!(coeffs.len()));
        TlSequence::new(domain, coeffs)
    }
}
