//! Weights and their Muckenhoupt, reverse Hölder, A1 and doubling constants.

mod constants;
mod generate;
mod self_improvement;

pub use constants::{
    a1_constant, doubling_constant, muckenhoupt_constant, power_bump_check, reverse_holder_constant, ConstantKind,
    ConstantReport,
};
pub use generate::{generate_weight, RubioSource, WeightSpec};
pub use self_improvement::{a4_probe, self_improvement, A4Probe, SelfImprovementParams, Setting};

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::digest::Digester;
use crate::error::{Error, Result};
use crate::lattice::{csum, BaseSet, GridDomain, GridFunction, Measure, MeasureKind};

/// How a weight was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl Provenance {
    pub fn explicit() -> Self {
        Self { kind: "explicit".into(), seed: None, params: serde_json::Value::Null }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct CacheKey {
    pub kind: ConstantKind,
    pub exponent_bits: u64,
    pub base_id: String,
    pub measure: String,
    pub extra: String,
}

/// A positive function on the cells of a grid.
///
/// Computed constants are memoized per (kind, exponent, base, measure);
/// clones share the cache since the values are immutable.
#[derive(Debug, Clone)]
pub struct Weight {
    domain: GridDomain,
    values: Vec<f64>,
    id: String,
    provenance: Provenance,
    cache: Arc<RwLock<BTreeMap<CacheKey, ConstantReport>>>,
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.values == other.values
    }
}

impl Weight {
    pub fn new(domain: &GridDomain, values: Vec<f64>) -> Result<Self> {
        Self::with_provenance(domain, values, Provenance::explicit())
    }

    pub fn with_provenance(domain: &GridDomain, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::InvalidDomain(format!(
                "{} weight values for {} cells",
                values.len(),
                domain.cell_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::BadParams(format!("weight value {v} is not a finite positive number")));
        }
        let mut d = Digester::new("weight");
        d.str(&domain.digest()).f64s(&values);
        Ok(Self { domain: *domain, values, id: d.finish(), provenance, cache: Default::default() })
    }

    pub fn unit(domain: &GridDomain) -> Self {
        let mut w = Self::new(domain, vec![1.0; domain.cell_count()]).expect("unit weight");
        w.provenance.kind = "unit".into();
        w
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Content digest of the values (provenance does not enter).
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_unit(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    pub fn as_function(&self) -> GridFunction {
        GridFunction::new(&self.domain, self.values.clone()).expect("weights are finite")
    }

    /// `w^s` as a new weight (empty cache).
    pub fn powf(&self, s: f64) -> Result<Weight> {
        let values: Vec<f64> = self.values.iter().map(|v| v.powf(s)).collect();
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::OverflowGuard("weight power"));
        }
        Weight::with_provenance(
            &self.domain,
            values,
            Provenance { kind: "power-of".into(), seed: None, params: serde_json::json!({"of": self.id, "s": s}) },
        )
    }

    /// The measure `w dmu`.
    pub fn measure(&self, mu: &Measure) -> Result<Measure> {
        let masses: Vec<f64> = self.values.iter().zip(mu.masses()).map(|(w, m)| w * m).collect();
        match mu.kind() {
            MeasureKind::Uniform => Measure::with_density(&self.domain, &masses),
            _ => Measure::general(&self.domain, masses),
        }
    }

    /// `w(B) = sum_{x in B} w(x) mu(x)`.
    pub fn mass(&self, b: &BaseSet, mu: &Measure) -> f64 {
        csum(b.cells(&self.domain).map(|c| self.values[c] * mu.mass(c)))
    }

    /// Reports computed so far, in key order.
    pub fn cached_constants(&self) -> Vec<ConstantReport> {
        self.cache.read().expect("cache lock").values().cloned().collect()
    }

    pub(crate) fn cached(
        &self,
        key: CacheKey,
        compute: impl FnOnce() -> Result<ConstantReport>,
    ) -> Result<ConstantReport> {
        if let Some(r) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(r.clone());
        }
        let r = compute()?;
        self.cache.write().expect("cache lock").entry(key).or_insert_with(|| r.clone());
        Ok(r)
    }

    /// JSON sidecar describing the weight and every cached constant.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "domain": self.domain,
            "provenance": self.provenance,
            "constants": self.cached_constants(),
        })
    }
}
