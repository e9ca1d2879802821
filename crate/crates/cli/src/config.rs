//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use oscillab::digest::Digester;
use oscillab::lattice::{build_base, csv::parse_grid, BaseFamily, BaseKind, GridDomain, Measure};
use oscillab::operators::{MaximalKind, MaximalMode, NormBound};
use oscillab::verify::{CertInputs, TheoremId};
use oscillab::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Side lengths used when no input file fixes the grid.
    pub sides: Vec<usize>,
    pub base: BaseKind,
    pub min_scale: u32,
    /// `None` for the uniform measure, else a grid CSV of cell masses.
    pub measure: Option<PathBuf>,
    pub maximal: Option<MaximalMode>,
    pub norm_bound: Option<NormBound>,
    pub seed: u64,
    pub trials: u64,
    pub rubio_tol: f64,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sides: vec![16],
            base: BaseKind::DyadicCubes,
            min_scale: 0,
            measure: None,
            maximal: None,
            norm_bound: None,
            seed: 1,
            trials: 10,
            rubio_tol: 1e-10,
            output: PathBuf::from("oscillab-out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| Error::Parse(format!("`{key}`: {e}")))
}

/// `dual:SCALE:FACTORS` or `marcinkiewicz:WEAK:FACTORS`.
fn parse_norm_bound(v: &str) -> Result<NormBound> {
    let parts: Vec<&str> = v.split(':').collect();
    let nb = match parts.as_slice() {
        ["dual", s, f] => NormBound::Dual { scale: parse_num("norm_bound", s)?, factors: parse_num("norm_bound", f)? },
        ["marcinkiewicz", w, f] => {
            NormBound::Marcinkiewicz { weak: parse_num("norm_bound", w)?, factors: parse_num("norm_bound", f)? }
        }
        _ => return Err(Error::Parse(format!("norm_bound `{v}`: expected dual:S:F or marcinkiewicz:W:F"))),
    };
    nb.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(nb)
}

fn render_norm_bound(nb: &NormBound) -> String {
    match *nb {
        NormBound::Dual { scale, factors } => format!("dual:{scale}:{factors}"),
        NormBound::Marcinkiewicz { weak, factors } => format!("marcinkiewicz:{weak}:{factors}"),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), n).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key `{k}`", n + 1)));
            }
            c.set(k, v)?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, k: &str, v: &str) -> Result<()> {
        match k {
            "sides" => {
                self.sides = v.split(['x', ',']).map(|s| parse_num(k, s.trim())).collect::<Result<_>>()?;
                if self.sides.is_empty() || self.sides.len() > 2 {
                    return Err(Error::Parse(format!("`sides` needs one or two lengths, got `{v}`")));
                }
            }
            "base" => self.base = v.parse()?,
            "min_scale" => self.min_scale = parse_num(k, v)?,
            "measure" => self.measure = if v == "uniform" { None } else { Some(PathBuf::from(v)) },
            "maximal" => self.maximal = if v == "default" { None } else { Some(v.parse()?) },
            "norm_bound" => self.norm_bound = if v == "default" { None } else { Some(parse_norm_bound(v)?) },
            "seed" => self.seed = parse_num(k, v)?,
            "trials" => self.trials = parse_num(k, v)?,
            "rubio_tol" => {
                self.rubio_tol = parse_num(k, v)?;
                if !(self.rubio_tol > 0.0 && self.rubio_tol < 1.0) {
                    return Err(Error::Parse(format!("`rubio_tol` must lie in (0,1), got {v}")));
                }
            }
            "output" => self.output = PathBuf::from(v),
            _ => return Err(Error::Parse(format!("unknown config key `{k}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same config.
    pub fn render(&self) -> String {
        let sides: Vec<String> = self.sides.iter().map(|s| s.to_string()).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("sides", sides.join("x"));
        kv("base", self.base.to_string());
        kv("min_scale", self.min_scale.to_string());
        kv("measure", self.measure.as_ref().map_or("uniform".into(), |p| p.display().to_string()));
        kv("maximal", self.maximal.map_or("default".into(), |m| m.to_string()));
        kv("norm_bound", self.norm_bound.as_ref().map_or("default".into(), render_norm_bound));
        kv("seed", self.seed.to_string());
        kv("trials", self.trials.to_string());
        kv("rubio_tol", format!("{:e}", self.rubio_tol));
        kv("output", self.output.display().to_string());
        out
    }

    /// Digest of the canonical form and the toolkit version.
    pub fn digest(&self) -> String {
        Digester::new("run-config").str(oscillab::VERSION).str(&self.render()).finish()
    }

    /// Grid implied by `sides`, split into factors for rectangle bases.
    pub fn domain(&self) -> Result<GridDomain> {
        self.adapt(GridDomain::new(&self.sides)?)
    }

    /// Applies the rectangle split when the base kind needs it.
    pub fn adapt(&self, d: GridDomain) -> Result<GridDomain> {
        if self.base.is_rectangles() && d.split().is_none() {
            d.with_split()
        } else {
            Ok(d)
        }
    }

    pub fn measure_on(&self, d: &GridDomain) -> Result<Measure> {
        match &self.measure {
            None => Ok(Measure::uniform(d)),
            Some(p) => {
                let (md, masses) = parse_grid(&std::fs::read_to_string(p)?)?;
                if md.sides() != d.sides() {
                    return Err(Error::IncompatibleSpec(format!(
                        "measure grid {:?} differs from input grid {:?}",
                        md.sides(),
                        d.sides()
                    )));
                }
                Measure::general(d, masses)
            }
        }
    }

    pub fn base_on(&self, d: &GridDomain) -> Result<(BaseFamily, Measure)> {
        let mu = self.measure_on(d)?;
        Ok((build_base(d, &mu, self.base, self.min_scale)?, mu))
    }

    /// Sufficiency certificates take the Rubio de Francia tolerance and, when
    /// configured, the maximal operator from the config.
    pub fn apply_overrides(&self, theorem: TheoremId, inp: &mut CertInputs) {
        if theorem != TheoremId::Sufficiency {
            return;
        }
        if self.rubio_tol != RunConfig::default().rubio_tol {
            inp.params.insert("rubio_tol".into(), self.rubio_tol);
        }
        if self.maximal.is_some() || self.norm_bound.is_some() {
            inp.maximal = Some(self.maximal_kind(&inp.base));
        }
    }

    pub fn maximal_kind(&self, base: &BaseFamily) -> MaximalKind {
        let mut k = match self.maximal {
            Some(m) => MaximalKind::for_base(m, base),
            None => MaximalKind::default_for(base),
        };
        if let Some(nb) = self.norm_bound {
            k.norm_bound = nb;
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_roundtrip() {
        let c = RunConfig::parse("sides = 8x8\nbase = all-cubes\nnorm_bound = dual:1:2\nseed = 4\n# note\n").unwrap();
        assert_eq!(c.sides, vec![8, 8]);
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
        assert_eq!(RunConfig::parse(&c.render()).unwrap().digest(), c.digest());
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(RunConfig::parse("seed 4").is_err());
        assert!(RunConfig::parse("seed = 4\nseed = 5").is_err());
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("norm_bound = dual:0.5:1").is_err());
    }

    #[test]
    fn digest_tracks_values() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.digest(), b.digest());
    }
}
