use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Provenance, Weight};
use crate::error::{Error, Result};
use crate::lattice::{BaseFamily, GridFunction, Measure};
use crate::operators::{rubio_de_francia, MaximalKind, MaximalMode};

/// Source function fed to the Rubio de Francia iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum RubioSource {
    /// Indicator of one cell.
    Spike { cell: usize },
    /// `exp(U[-bound, bound])` per cell, drawn from the seed.
    RandomLog { bound: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    /// `|x - center|^a` measured between cell centers and the grid center.
    Power { a: f64 },
    /// `exp(U[-bound, bound])` independently per cell.
    RandomLogBounded { bound: f64 },
    /// Alternating `1` and `contrast` in a checkerboard pattern.
    Checkerboard { contrast: f64 },
    /// Output of the Rubio de Francia iteration, hence an A1 weight.
    RubioA1 {
        p: f64,
        #[serde(flatten)]
        source: RubioSource,
        mode: MaximalMode,
        tol: f64,
    },
}

impl WeightSpec {
    pub fn name(&self) -> &'static str {
        match self {
            WeightSpec::Power { .. } => "power",
            WeightSpec::RandomLogBounded { .. } => "random-log-bounded",
            WeightSpec::Checkerboard { .. } => "checkerboard",
            WeightSpec::RubioA1 { .. } => "rubio-a1",
        }
    }
}

fn random_log(n: usize, bound: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| if bound > 0.0 { rng.gen_range(-bound..=bound).exp() } else { 1.0 }).collect()
}

/// Deterministic weight for `(spec, base, seed)`.
pub fn generate_weight(spec: &WeightSpec, base: &BaseFamily, mu: &Measure, seed: u64) -> Result<Weight> {
    let dom = base.domain();
    let n = dom.cell_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bad = |msg: String| Err(Error::BadParams(msg));
    let values = match *spec {
        WeightSpec::Power { a } => {
            if !(a.is_finite() && a > -(dom.dims() as f64)) {
                return bad(format!("power exponent must exceed -{}, got {a}", dom.dims()));
            }
            let c: Vec<f64> = (0..dom.dims()).map(|ax| dom.side(ax) as f64 / 2.0).collect();
            GridFunction::from_fn(dom, |i0, i1| {
                let x0 = i0 as f64 + 0.5 - c[0];
                let r2 = if dom.dims() == 2 {
                    let x1 = i1 as f64 + 0.5 - c[1];
                    x0 * x0 + x1 * x1
                } else {
                    x0 * x0
                };
                if a == 0.0 {
                    1.0
                } else {
                    r2.powf(a / 2.0)
                }
            })
            .into_values()
        }
        WeightSpec::RandomLogBounded { bound } => {
            if !(bound.is_finite() && (0.0..690.0).contains(&bound)) {
                return bad(format!("log bound must lie in [0, 690), got {bound}"));
            }
            random_log(n, bound, &mut rng)
        }
        WeightSpec::Checkerboard { contrast } => {
            if !(contrast.is_finite() && contrast > 0.0) {
                return bad(format!("checkerboard contrast must be positive, got {contrast}"));
            }
            GridFunction::from_fn(dom, |i0, i1| if (i0 + i1) % 2 == 0 { 1.0 } else { contrast }).into_values()
        }
        WeightSpec::RubioA1 { p, source, mode, tol } => {
            let g = match source {
                RubioSource::Spike { cell } => {
                    if cell >= n {
                        return bad(format!("spike cell {cell} outside {n} cells"));
                    }
                    let mut v = vec![0.0; n];
                    v[cell] = 1.0;
                    v
                }
                RubioSource::RandomLog { bound } => {
                    if !(bound.is_finite() && (0.0..690.0).contains(&bound)) {
                        return bad(format!("log bound must lie in [0, 690), got {bound}"));
                    }
                    random_log(n, bound, &mut rng)
                }
            };
            let g = GridFunction::new(dom, g)?;
            let kind = MaximalKind::for_base(mode, base);
            let out = rubio_de_francia(&g, p, base, mu, &kind, tol)?;
            let mut params = out.weight.provenance().params.clone();
            params["spec"] = serde_json::to_value(spec)?;
            params["report"] = serde_json::to_value(&out.report)?;
            return Weight::with_provenance(
                dom,
                out.weight.values().to_vec(),
                Provenance { kind: spec.name().into(), seed: Some(seed), params },
            );
        }
    };
    let params = serde_json::to_value(spec)?;
    Weight::with_provenance(dom, values, Provenance { kind: spec.name().into(), seed: Some(seed), params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain};
    use crate::operators::MaximalKind;
    use crate::weights::a1_constant;

    fn base(side: usize) -> (BaseFamily, Measure) {
        let d = GridDomain::line(side).unwrap();
        let mu = Measure::uniform(&d);
        (build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap(), mu)
    }

    #[test]
    fn power_zero_is_unit() {
        let (b, mu) = base(8);
        let w = generate_weight(&WeightSpec::Power { a: 0.0 }, &b, &mu, 0).unwrap();
        assert!(w.is_unit());
        assert!(generate_weight(&WeightSpec::Power { a: -1.0 }, &b, &mu, 0).is_err());
    }

    #[test]
    fn random_log_is_bounded_and_seeded() {
        let (b, mu) = base(64);
        let spec = WeightSpec::RandomLogBounded { bound: 2.0 };
        let w = generate_weight(&spec, &b, &mu, 9).unwrap();
        assert!(w.values().iter().all(|&v| v >= (-2f64).exp() && v <= 2f64.exp()));
        assert_eq!(w.values(), generate_weight(&spec, &b, &mu, 9).unwrap().values());
        assert_ne!(w.values(), generate_weight(&spec, &b, &mu, 10).unwrap().values());
    }

    #[test]
    fn rubio_spike_is_a1() {
        let (b, mu) = base(16);
        let spec = WeightSpec::RubioA1 {
            p: 2.0,
            source: RubioSource::Spike { cell: 3 },
            mode: MaximalMode::Dyadic,
            tol: 1e-10,
        };
        let w = generate_weight(&spec, &b, &mu, 0).unwrap();
        let a1 = a1_constant(&w, &b, &mu, &MaximalKind::dyadic()).unwrap();
        assert!(a1.value <= 4.0 * (1.0 + 1e-9), "{}", a1.value);
        assert_eq!(w.provenance().kind, "rubio-a1");
    }

    #[test]
    fn spec_json_roundtrip() {
        let spec = WeightSpec::RubioA1 {
            p: 3.0,
            source: RubioSource::RandomLog { bound: 1.0 },
            mode: MaximalMode::Uncentered,
            tol: 1e-8,
        };
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<WeightSpec>(&s).unwrap(), spec);
    }
}
