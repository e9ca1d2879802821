use rayon::prelude::*;

use super::{MaximalKind, MaximalMode};
use crate::error::{Error, Result};
use crate::lattice::{average_values, BaseFamily, BaseSet, GridFunction, Measure};

const PAR_THRESHOLD: usize = 256;

fn eligible(base: &BaseFamily, mode: MaximalMode) -> Result<Vec<&BaseSet>> {
    match mode {
        MaximalMode::Dyadic => Ok(base.sets().iter().filter(|b| b.is_dyadic()).collect()),
        MaximalMode::Uncentered => Ok(base.sets().iter().collect()),
        MaximalMode::Centered => {
            if base.kind().is_rectangles() {
                return Err(Error::IncompatibleBase("centered maximal operator needs a cube base".into()));
            }
            Ok(base.sets().iter().filter(|b| b.center().is_some()).collect())
        }
    }
}

/// Sup of averages of `|values|` over the eligible sets containing each cell.
///
/// Every set average is computed once (compensated, canonical cell order)
/// and scattered to its cells, so the cost is the total size of the eligible
/// sets: `O(N L)` for dyadic families, where each level tiles the grid.
/// Centered mode scatters only to the center cell.
pub fn maximal_values(values: &[f64], base: &BaseFamily, mu: &Measure, mode: MaximalMode) -> Result<Vec<f64>> {
    let dom = base.domain();
    if values.len() != dom.cell_count() {
        return Err(Error::InvalidDomain("function and base live on different grids".into()));
    }
    let sets = eligible(base, mode)?;
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let avg = |b: &&BaseSet| average_values(&abs, b, mu);
    let avgs: Vec<Result<f64>> =
        if sets.len() >= PAR_THRESHOLD { sets.par_iter().map(avg).collect() } else { sets.iter().map(avg).collect() };
    let mut out = vec![0.0f64; values.len()];
    for (b, a) in sets.iter().zip(avgs) {
        let a = a?;
        if mode == MaximalMode::Centered {
            let (i0, i1) = b.center().expect("centered sets have a center");
            let c = dom.index(i0, i1);
            out[c] = out[c].max(a);
        } else {
            for c in b.cells(dom) {
                if a > out[c] {
                    out[c] = a;
                }
            }
        }
    }
    for (c, o) in out.iter_mut().enumerate() {
        if mu.mass(c) <= 0.0 {
            *o = 0.0;
        }
    }
    Ok(out)
}

pub fn maximal(f: &GridFunction, base: &BaseFamily, mu: &Measure, kind: &MaximalKind) -> Result<GridFunction> {
    let v = maximal_values(f.values(), base, mu, kind.mode)?;
    GridFunction::new(f.domain(), v)
}

/// Reference implementation: for each cell, scan the whole base.
pub fn maximal_brute_force(values: &[f64], base: &BaseFamily, mu: &Measure, mode: MaximalMode) -> Result<Vec<f64>> {
    let dom = base.domain();
    let sets = eligible(base, mode)?;
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let mut out = vec![0.0; values.len()];
    for (c, o) in out.iter_mut().enumerate() {
        if mu.mass(c) <= 0.0 {
            continue;
        }
        let (i0, i1) = dom.coords(c);
        for b in &sets {
            let hit = match mode {
                MaximalMode::Centered => b.center() == Some((i0, i1)),
                _ => b.contains_point(i0, i1),
            };
            if hit {
                *o = f64::max(*o, average_values(&abs, b, mu)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain};

    #[test]
    fn spike_on_four_cells() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
        let m = maximal_values(&[1.0, 0.0, 0.0, 0.0], &base, &mu, MaximalMode::Dyadic).unwrap();
        assert_eq!(m, vec![1.0, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn centered_on_rectangles_is_rejected() {
        let d = GridDomain::square(4).unwrap().with_split().unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicRectangles, 0).unwrap();
        assert!(matches!(
            maximal_values(&[1.0; 16], &base, &mu, MaximalMode::Centered),
            Err(Error::IncompatibleBase(_))
        ));
    }

    #[test]
    fn centered_uses_odd_cubes_only() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::AllCubes, 0).unwrap();
        let m = maximal_values(&[3.0, 0.0, 0.0, 0.0], &base, &mu, MaximalMode::Centered).unwrap();
        // cell 1 sees [0,3) with average 1; cell 2 sees [1,4) with average 0.
        assert_eq!(m, vec![3.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_mass_cells_get_zero() {
        let d = GridDomain::line(4).unwrap();
        let mu = Measure::general(&d, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        let base = build_base(&d, &mu, BaseKind::DyadicCubes, 1).unwrap();
        let m = maximal_values(&[1.0, 5.0, 0.0, 0.0], &base, &mu, MaximalMode::Dyadic).unwrap();
        assert_eq!(m, vec![1.0, 0.0, 1.0 / 3.0, 1.0 / 3.0]);
    }
}
