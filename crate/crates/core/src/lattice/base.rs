use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{BaseSet, GridDomain, Measure};
use crate::digest::Digester;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    DyadicCubes,
    AllCubes,
    DyadicRectangles,
    AllRectangles,
}

impl BaseKind {
    pub fn is_dyadic(self) -> bool {
        matches!(self, BaseKind::DyadicCubes | BaseKind::DyadicRectangles)
    }

    pub fn is_rectangles(self) -> bool {
        matches!(self, BaseKind::DyadicRectangles | BaseKind::AllRectangles)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::DyadicCubes => "dyadic-cubes",
            BaseKind::AllCubes => "all-cubes",
            BaseKind::DyadicRectangles => "dyadic-rectangles",
            BaseKind::AllRectangles => "all-rectangles",
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dyadic-cubes" => Ok(BaseKind::DyadicCubes),
            "all-cubes" => Ok(BaseKind::AllCubes),
            "dyadic-rectangles" => Ok(BaseKind::DyadicRectangles),
            "all-rectangles" => Ok(BaseKind::AllRectangles),
            other => Err(Error::Parse(format!("unknown base kind `{other}`"))),
        }
    }
}

/// The finite family of boxes over which every supremum runs, with the
/// mass of each member under the measure it was built against.
#[derive(Debug, Clone)]
pub struct BaseFamily {
    kind: BaseKind,
    min_scale: u32,
    domain: GridDomain,
    sets: Vec<BaseSet>,
    masses: Vec<f64>,
    index: HashMap<BaseSet, usize>,
    id: String,
}

/// JSON form of a base family (the member list is implied by the fields).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseDescriptor {
    pub kind: BaseKind,
    pub min_scale: u32,
    pub domain: GridDomain,
    pub count: usize,
    pub id: String,
}

fn intervals(side: usize, min_len: usize, dyadic: bool) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let mut len = side;
    while len >= min_len.max(1) {
        if dyadic {
            out.extend((0..side).step_by(len).map(|lo| (lo as u32, (lo + len) as u32)));
            len /= 2;
        } else {
            out.extend((0..=side - len).map(|lo| (lo as u32, (lo + len) as u32)));
            len -= 1;
        }
        if len == 0 {
            break;
        }
    }
    out
}

/// Enumerate every set of `kind` with all sides at least `2^min_scale`
/// cells, in canonical order, rejecting any member of zero mass.
pub fn build_base(domain: &GridDomain, measure: &Measure, kind: BaseKind, min_scale: u32) -> Result<BaseFamily> {
    if measure.domain().sides() != domain.sides() {
        return Err(Error::InvalidMeasure("measure is attached to a different domain".into()));
    }
    if min_scale > domain.min_level() {
        return Err(Error::BadParams(format!("min_scale {min_scale} exceeds the domain level {}", domain.min_level())));
    }
    let min_len = 1usize << min_scale;
    let dims = domain.dims();
    let mut sets = Vec::new();
    match kind {
        BaseKind::DyadicCubes | BaseKind::AllCubes => {
            if !domain.is_square() {
                return Err(Error::InvalidDomain("cube bases need equal sides".into()));
            }
            let dyadic = kind == BaseKind::DyadicCubes;
            let ivs = intervals(domain.side(0), min_len, dyadic);
            if dims == 1 {
                sets.extend(ivs.iter().map(|&(lo, hi)| BaseSet::interval(lo, hi)));
            } else {
                for &(l0, h0) in &ivs {
                    for &(l1, h1) in ivs.iter().filter(|(l, h)| h - l == h0 - l0) {
                        sets.push(BaseSet::rect([l0, l1], [h0, h1]));
                    }
                }
            }
        }
        BaseKind::DyadicRectangles | BaseKind::AllRectangles => {
            if domain.split().is_none() {
                return Err(Error::InvalidDomain("rectangle bases need a 2-D domain with a 1+1 split".into()));
            }
            let dyadic = kind == BaseKind::DyadicRectangles;
            let iv0 = intervals(domain.side(0), min_len, dyadic);
            let iv1 = intervals(domain.side(1), min_len, dyadic);
            for &(l0, h0) in &iv0 {
                for &(l1, h1) in &iv1 {
                    sets.push(BaseSet::rect([l0, l1], [h0, h1]));
                }
            }
        }
    }
    if sets.is_empty() {
        return Err(Error::EmptyBase);
    }
    sets.sort_by_key(|b| b.canonical_key());
    let mut masses = Vec::with_capacity(sets.len());
    for b in &sets {
        let m = measure.set_mass(b);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::ZeroMassBaseSet(*b));
        }
        masses.push(m);
    }
    let index = sets.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    let mut d = Digester::new("base");
    d.str(kind.as_str()).u64(min_scale as u64).str(&domain.digest()).str(&measure.digest());
    Ok(BaseFamily { kind, min_scale, domain: *domain, sets, masses, index, id: d.finish() })
}

impl BaseFamily {
    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    pub fn min_scale(&self) -> u32 {
        self.min_scale
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn sets(&self) -> &[BaseSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `mu(B)` for the `i`-th member.
    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn position(&self, b: &BaseSet) -> Option<usize> {
        self.index.get(b).copied()
    }

    pub fn contains(&self, b: &BaseSet) -> bool {
        self.index.contains_key(b)
    }

    /// Identifier covering kind, scale, domain and measure.
    pub fn id(&self) -> &str {
        &self.id
    }

    /// Runs of consecutive members sharing one shape. For dyadic kinds each
    /// run tiles the domain.
    pub fn shape_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=self.sets.len() {
            let same = i < self.sets.len()
                && self.sets[i].len(0) == self.sets[start].len(0)
                && self.sets[i].len(1) == self.sets[start].len(1);
            if !same {
                runs.push(start..i);
                start = i;
            }
        }
        runs
    }

    pub fn descriptor(&self) -> BaseDescriptor {
        BaseDescriptor {
            kind: self.kind,
            min_scale: self.min_scale,
            domain: self.domain,
            count: self.sets.len(),
            id: self.id.clone(),
        }
    }
}
