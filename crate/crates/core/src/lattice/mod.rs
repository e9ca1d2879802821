//! Finite grids, cell-mass measures and base families of boxes.
//!
//! Integrals are weighted sums over cells and suprema are maxima over a
//! finite family, so every quantity downstream is an exact finite
//! computation up to floating-point rounding.

mod base;
pub mod csv;
mod domain;
mod sum;

pub use base::{build_base, BaseDescriptor, BaseFamily, BaseKind};
pub use domain::{BaseSet, DomainDescriptor, GridDomain, GridFunction, Measure, MeasureKind};
pub use sum::{csum, log_sum_exp, NeumaierSum};

use crate::error::{Error, Result};

/// `(1/mu(B)) sum_{x in B} f(x) mu(x)` with compensated summation in
/// canonical cell order.
pub fn average(f: &GridFunction, b: &BaseSet, mu: &Measure) -> Result<f64> {
    average_values(f.values(), b, mu)
}

pub fn average_values(values: &[f64], b: &BaseSet, mu: &Measure) -> Result<f64> {
    let dom = mu.domain();
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    for c in b.cells(dom) {
        let m = mu.mass(c);
        if m > 0.0 {
            num.add(values[c] * m);
            den.add(m);
        }
    }
    let den = den.total();
    if den <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok(num.total() / den)
}

/// Average with respect to `density * mu`; returns `(average, mass)`.
pub fn weighted_average(values: &[f64], density: &[f64], b: &BaseSet, mu: &Measure) -> Result<(f64, f64)> {
    let dom = mu.domain();
    let mut num = NeumaierSum::new();
    let mut den = NeumaierSum::new();
    for c in b.cells(dom) {
        let m = mu.mass(c);
        if m > 0.0 {
            let wm = density[c] * m;
            num.add(values[c] * wm);
            den.add(wm);
        }
    }
    let den = den.total();
    if den <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok((num.total() / den, den))
}

/// `||g||_{L^p(mu)}` over the whole domain.
pub fn lp_norm(values: &[f64], p: f64, mu: &Measure) -> f64 {
    let s = csum(values.iter().zip(mu.masses()).filter(|(_, &m)| m > 0.0).map(|(v, m)| v.abs().powf(p) * m));
    s.powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_fixtures() {
        let d = GridDomain::line(2).unwrap();
        let f = GridFunction::new(&d, vec![0.0, 1.0]).unwrap();
        let whole = d.full_set();
        assert_eq!(average(&f, &whole, &Measure::uniform(&d)).unwrap(), 0.5);
        let mu = Measure::general(&d, vec![1.0, 3.0]).unwrap();
        assert_eq!(average(&f, &whole, &mu).unwrap(), 0.75);
        let c = GridFunction::constant(&d, 2.5);
        assert_eq!(average(&c, &whole, &mu).unwrap(), 2.5);
    }

    #[test]
    fn zero_mass_cells_are_excluded() {
        let d = GridDomain::line(2).unwrap();
        let mu = Measure::general(&d, vec![0.0, 2.0]).unwrap();
        let f = GridFunction::new(&d, vec![100.0, 1.0]).unwrap();
        assert_eq!(average(&f, &d.full_set(), &mu).unwrap(), 1.0);
        assert!(matches!(average(&f, &BaseSet::interval(0, 1), &mu), Err(Error::ZeroMass)));
    }
}
