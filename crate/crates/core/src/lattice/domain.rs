use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::digest::Digester;
use crate::error::{Error, Result};

/// A dyadic grid of cells in one or two dimensions.
///
/// One-dimensional domains are stored as `side0 x 1` grids so that every
/// box has two axis ranges; the second range of a 1-D box is always `[0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DomainDescriptor", into = "DomainDescriptor")]
pub struct GridDomain {
    dims: usize,
    levels: [u32; 2],
    split: bool,
}

/// JSON form of a [`GridDomain`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainDescriptor {
    pub dims: usize,
    pub sides: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<[usize; 2]>,
}

impl TryFrom<DomainDescriptor> for GridDomain {
    type Error = Error;

    fn try_from(d: DomainDescriptor) -> Result<Self> {
        if d.sides.len() != d.dims {
            return Err(Error::InvalidDomain(format!("{} sides given for {} dims", d.sides.len(), d.dims)));
        }
        let dom = GridDomain::new(&d.sides)?;
        match d.split {
            None => Ok(dom),
            Some([1, 1]) => dom.with_split(),
            Some(s) => Err(Error::InvalidDomain(format!("unsupported split {}+{}", s[0], s[1]))),
        }
    }
}

impl From<GridDomain> for DomainDescriptor {
    fn from(d: GridDomain) -> Self {
        DomainDescriptor { dims: d.dims, sides: d.sides(), split: d.split.then_some([1, 1]) }
    }
}

impl GridDomain {
    pub fn new(sides: &[usize]) -> Result<Self> {
        if sides.is_empty() || sides.len() > 2 {
            return Err(Error::InvalidDomain(format!("{} dims not supported", sides.len())));
        }
        let mut levels = [0u32; 2];
        for (axis, &s) in sides.iter().enumerate() {
            if s == 0 || !s.is_power_of_two() {
                return Err(Error::InvalidDomain(format!("side {s} is not a power of two")));
            }
            levels[axis] = s.trailing_zeros();
            if levels[axis] > 15 {
                return Err(Error::InvalidDomain(format!("side {s} too large")));
            }
        }
        Ok(Self { dims: sides.len(), levels, split: false })
    }

    pub fn line(side: usize) -> Result<Self> {
        Self::new(&[side])
    }

    pub fn square(side: usize) -> Result<Self> {
        Self::new(&[side, side])
    }

    /// Mark the 2-D domain as a product `R x R` for rectangle bases.
    pub fn with_split(mut self) -> Result<Self> {
        if self.dims != 2 {
            return Err(Error::InvalidDomain("a 1+1 split needs a 2-D domain".into()));
        }
        self.split = true;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split.then_some((1, 1))
    }

    pub fn level(&self, axis: usize) -> u32 {
        self.levels[axis]
    }

    /// Largest level over the axes (`L` in `2^L` cells per side).
    pub fn max_level(&self) -> u32 {
        self.levels[..self.dims].iter().copied().max().unwrap_or(0)
    }

    pub fn min_level(&self) -> u32 {
        self.levels[..self.dims].iter().copied().min().unwrap_or(0)
    }

    /// Cells along `axis`; axis 1 of a 1-D domain has one cell.
    #[inline]
    pub fn side(&self, axis: usize) -> usize {
        1usize << self.levels[axis]
    }

    pub fn sides(&self) -> Vec<usize> {
        (0..self.dims).map(|a| self.side(a)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.dims == 1 || self.levels[0] == self.levels[1]
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.side(0) * self.side(1)
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize) -> usize {
        i0 * self.side(1) + i1
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.side(1), idx % self.side(1))
    }

    pub fn full_set(&self) -> BaseSet {
        BaseSet::new(self.dims, [0, 0], [self.side(0) as u32, self.side(1) as u32])
    }

    pub fn digest(&self) -> String {
        let mut d = Digester::new("domain");
        d.u64(self.dims as u64).u64(self.levels[0] as u64).u64(self.levels[1] as u64);
        d.u64(self.split as u64);
        d.finish()
    }
}

/// Half-open axis-aligned box of whole cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BaseSet {
    dims: u8,
    lo: [u32; 2],
    hi: [u32; 2],
}

impl BaseSet {
    pub fn new(dims: usize, lo: [u32; 2], hi: [u32; 2]) -> Self {
        debug_assert!(lo[0] < hi[0] && lo[1] < hi[1]);
        Self { dims: dims as u8, lo, hi }
    }

    pub fn interval(lo: u32, hi: u32) -> Self {
        Self::new(1, [lo, 0], [hi, 1])
    }

    pub fn rect(lo: [u32; 2], hi: [u32; 2]) -> Self {
        Self::new(2, lo, hi)
    }

    pub fn dims(&self) -> usize {
        self.dims as usize
    }

    pub fn lo(&self) -> [u32; 2] {
        self.lo
    }

    pub fn hi(&self) -> [u32; 2] {
        self.hi
    }

    #[inline]
    pub fn len(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis]) as usize
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.len(0) * self.len(1)
    }

    pub fn is_single_cell(&self) -> bool {
        self.cell_count() == 1
    }

    /// Cell indices in canonical (row-major) order.
    #[inline]
    pub fn cells(&self, domain: &GridDomain) -> impl Iterator<Item = usize> + '_ {
        let stride = domain.side(1);
        let (lo1, hi1) = (self.lo[1] as usize, self.hi[1] as usize);
        (self.lo[0] as usize..self.hi[0] as usize).flat_map(move |i0| (lo1..hi1).map(move |i1| i0 * stride + i1))
    }

    #[inline]
    pub fn contains_point(&self, i0: usize, i1: usize) -> bool {
        (self.lo[0] as usize..self.hi[0] as usize).contains(&i0)
            && (self.lo[1] as usize..self.hi[1] as usize).contains(&i1)
    }

    pub fn is_within(&self, domain: &GridDomain) -> bool {
        self.hi[0] as usize <= domain.side(0) && self.hi[1] as usize <= domain.side(1)
    }

    pub fn is_subset_of(&self, other: &BaseSet) -> bool {
        (0..2).all(|a| other.lo[a] <= self.lo[a] && self.hi[a] <= other.hi[a])
    }

    pub fn is_disjoint(&self, other: &BaseSet) -> bool {
        (0..2).any(|a| self.hi[a] <= other.lo[a] || other.hi[a] <= self.lo[a])
    }

    pub fn is_cube(&self) -> bool {
        self.dims == 1 || self.len(0) == self.len(1)
    }

    /// Side lengths are powers of two and corners are aligned to them.
    pub fn is_dyadic(&self) -> bool {
        (0..2).all(|a| {
            let l = self.len(a) as u32;
            l.is_power_of_two() && self.lo[a].is_multiple_of(l)
        })
    }

    /// Number of axes that a bisection step splits (axes longer than one cell).
    pub fn bisectable_axes(&self) -> usize {
        (0..2).filter(|&a| self.len(a) > 1).count()
    }

    /// Children under simultaneous bisection of every axis longer than one
    /// cell, in canonical order. Empty for a single cell.
    pub fn children(&self) -> Vec<BaseSet> {
        let halves = |a: usize| -> Vec<(u32, u32)> {
            let (lo, hi) = (self.lo[a], self.hi[a]);
            if hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                vec![(lo, mid), (mid, hi)]
            } else {
                vec![(lo, hi)]
            }
        };
        if self.is_single_cell() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(4);
        for (l0, h0) in halves(0) {
            for (l1, h1) in halves(1) {
                out.push(BaseSet { dims: self.dims, lo: [l0, l1], hi: [h0, h1] });
            }
        }
        out
    }

    /// Center cell of a box whose sides are all odd.
    pub fn center(&self) -> Option<(usize, usize)> {
        if (0..2).all(|a| self.len(a) % 2 == 1) {
            Some((self.lo[0] as usize + self.len(0) / 2, self.lo[1] as usize + self.len(1) / 2))
        } else {
            None
        }
    }

    /// Ordering key: larger sets first, then wider shapes, then corner.
    pub(crate) fn canonical_key(&self) -> (std::cmp::Reverse<usize>, std::cmp::Reverse<[usize; 2]>, [u32; 2]) {
        (std::cmp::Reverse(self.cell_count()), std::cmp::Reverse([self.len(0), self.len(1)]), self.lo)
    }
}

impl fmt::Display for BaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.lo[0], self.hi[0])?;
        if self.dims == 2 {
            write!(f, "x[{},{})", self.lo[1], self.hi[1])?;
        }
        Ok(())
    }
}

impl Serialize for BaseSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dims as usize;
        let mut st = s.serialize_struct("BaseSet", 2)?;
        st.serialize_field("lo", &self.lo[..d])?;
        st.serialize_field("hi", &self.hi[..d])?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for BaseSet {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lo: Vec<u32>,
            hi: Vec<u32>,
        }
        let raw = Raw::deserialize(de)?;
        if raw.lo.len() != raw.hi.len() || raw.lo.is_empty() || raw.lo.len() > 2 {
            return Err(serde::de::Error::custom("lo/hi must have 1 or 2 entries"));
        }
        let dims = raw.lo.len();
        let mut lo = [0, 0];
        let mut hi = [1, 1];
        for a in 0..dims {
            if raw.lo[a] >= raw.hi[a] {
                return Err(serde::de::Error::custom("empty box"));
            }
            lo[a] = raw.lo[a];
            hi[a] = raw.hi[a];
        }
        Ok(BaseSet::new(dims, lo, hi))
    }
}

/// Per-cell masses of a measure on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureKind {
    Uniform,
    DensityOverUniform,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    domain: GridDomain,
    masses: Vec<f64>,
    kind: MeasureKind,
}

impl Measure {
    pub fn uniform(domain: &GridDomain) -> Self {
        Self { domain: *domain, masses: vec![1.0; domain.cell_count()], kind: MeasureKind::Uniform }
    }

    /// `density(x) dx` where `dx` is one unit of mass per cell.
    pub fn with_density(domain: &GridDomain, density: &[f64]) -> Result<Self> {
        Self::build(domain, density.to_vec(), MeasureKind::DensityOverUniform)
    }

    pub fn general(domain: &GridDomain, masses: Vec<f64>) -> Result<Self> {
        Self::build(domain, masses, MeasureKind::General)
    }

    fn build(domain: &GridDomain, masses: Vec<f64>, kind: MeasureKind) -> Result<Self> {
        if masses.len() != domain.cell_count() {
            return Err(Error::InvalidMeasure(format!("{} masses for {} cells", masses.len(), domain.cell_count())));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidMeasure(format!("mass {m} is not a finite nonnegative number")));
        }
        if !masses.iter().any(|&m| m > 0.0) {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        Ok(Self { domain: *domain, masses, kind })
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    #[inline]
    pub fn mass(&self, cell: usize) -> f64 {
        self.masses[cell]
    }

    pub fn set_mass(&self, b: &BaseSet) -> f64 {
        super::csum(b.cells(&self.domain).map(|c| self.masses[c]))
    }

    pub fn total(&self) -> f64 {
        super::csum(self.masses.iter().copied())
    }

    pub fn digest(&self) -> String {
        let mut d = Digester::new("measure");
        d.str(&self.domain.digest()).f64s(&self.masses);
        d.finish()
    }
}

/// A real function on the cells of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: GridDomain,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.cell_count() {
            return Err(Error::InvalidDomain(format!("{} values for {} cells", values.len(), domain.cell_count())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("grid function values must be finite".into()));
        }
        Ok(Self { domain: *domain, values })
    }

    pub fn constant(domain: &GridDomain, c: f64) -> Self {
        Self { domain: *domain, values: vec![c; domain.cell_count()] }
    }

    pub fn from_fn(domain: &GridDomain, f: impl Fn(usize, usize) -> f64) -> Self {
        let values = (0..domain.cell_count())
            .map(|i| {
                let (a, b) = domain.coords(i);
                f(a, b)
            })
            .collect();
        Self { domain: *domain, values }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { domain: self.domain, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn digest(&self) -> String {
        let mut d = Digester::new("function");
        d.str(&self.domain.digest()).f64s(&self.values);
        d.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_dyadic_sides() {
        assert!(GridDomain::new(&[3]).is_err());
        assert!(GridDomain::new(&[4, 6]).is_err());
        assert!(GridDomain::new(&[]).is_err());
        assert!(GridDomain::line(4).unwrap().with_split().is_err());
        assert_eq!(GridDomain::square(8).unwrap().cell_count(), 64);
        assert_eq!(GridDomain::line(1).unwrap().cell_count(), 1);
    }

    #[test]
    fn cells_are_row_major() {
        let d = GridDomain::new(&[4, 4]).unwrap();
        let b = BaseSet::rect([1, 2], [3, 4]);
        let cells: Vec<_> = b.cells(&d).collect();
        assert_eq!(cells, vec![6, 7, 10, 11]);
    }

    #[test]
    fn children_bisect_every_long_axis() {
        let r = BaseSet::rect([0, 0], [4, 1]);
        assert_eq!(r.children(), vec![BaseSet::rect([0, 0], [2, 1]), BaseSet::rect([2, 0], [4, 1])]);
        assert_eq!(BaseSet::rect([0, 0], [4, 4]).children().len(), 4);
        assert!(BaseSet::interval(3, 4).children().is_empty());
    }

    #[test]
    fn measure_rejects_negative_and_zero_total() {
        let d = GridDomain::line(2).unwrap();
        assert!(Measure::general(&d, vec![-1.0, 2.0]).is_err());
        assert!(Measure::general(&d, vec![0.0, 0.0]).is_err());
        assert!(Measure::general(&d, vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn descriptor_roundtrip() {
        let d = GridDomain::square(4).unwrap().with_split().unwrap();
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(json, r#"{"dims":2,"sides":[4,4],"split":[1,1]}"#);
        let back: GridDomain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, d);
    }
}
