use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{weighted_average, BaseFamily, BaseSet, GridFunction, Measure};
use crate::weights::Weight;

/// Result of the stopping-time selection inside one dyadic set `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzSelection {
    pub root: BaseSet,
    pub lambda: f64,
    /// `f_{mu_w, R}`.
    pub center: f64,
    /// `avg_{mu_w}(|f - f_{mu_w,R}|, R)`.
    pub root_average: f64,
    /// Selected sets in canonical order, with their averages.
    pub sets: Vec<BaseSet>,
    pub averages: Vec<f64>,
    /// Axes split per bisection step at the root.
    pub bisections_per_step: usize,
    /// Largest `w(P)/w(C)` over parent/child pairs inside `R`.
    pub local_doubling: f64,
    /// Largest selected average (0 when nothing is selected).
    pub realized_max: f64,
    /// `local_doubling * lambda`: every selected average is at most this
    /// when `root_average <= lambda`, since the parent was not selected.
    pub parent_bound: f64,
    /// `local_doubling^d * lambda`, the window stated for doubling weights.
    pub window_bound: f64,
    /// Largest `|f - center|` over positive-mass cells outside the selection.
    pub uncovered_max: f64,
    /// `sum_j w(R_j)`.
    pub selected_mass: f64,
    /// `w(R) * root_average / lambda`.
    pub chebyshev_bound: f64,
}

/// Maximal dyadic descendants `R_j` of `R` (never `R` itself) whose
/// `mu_w`-average of `|f - f_{mu_w,R}|` exceeds `lambda`. Children come from
/// simultaneous bisection of every splittable axis; the walk ends at single
/// cells.
pub fn cz_selection(
    f: &GridFunction,
    r: &BaseSet,
    w: &Weight,
    lambda: f64,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<CzSelection> {
    if !r.is_dyadic() || !base.kind().is_dyadic() {
        return Err(Error::NotDyadic(*r));
    }
    if !r.is_within(base.domain()) {
        return Err(Error::BadParams(format!("{r} is outside the grid")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadParams(format!("threshold must be positive, got {lambda}")));
    }
    let dom = base.domain();
    let vals = f.values();
    let wv = w.values();
    let (center, root_mass) = weighted_average(vals, wv, r, mu)?;
    let dev: Vec<f64> = vals.iter().map(|v| (v - center).abs()).collect();
    let root_average = weighted_average(&dev, wv, r, mu)?.0;

    let mut sets = Vec::new();
    let mut averages = Vec::new();
    let mut local_doubling: f64 = 1.0;
    let mut stack: Vec<BaseSet> = r.children().into_iter().rev().collect();
    let parent_mass = |b: &BaseSet| w.mass(b, mu);
    // Doubling ratios over the full subtree, independent of the selection.
    let mut walk = vec![*r];
    while let Some(p) = walk.pop() {
        let wp = parent_mass(&p);
        for c in p.children() {
            let wc = parent_mass(&c);
            if wc > 0.0 {
                local_doubling = local_doubling.max(wp / wc);
            }
            walk.push(c);
        }
    }
    while let Some(b) = stack.pop() {
        if mu.set_mass(&b) <= 0.0 {
            continue;
        }
        let a = weighted_average(&dev, wv, &b, mu)?.0;
        if a > lambda {
            sets.push(b);
            averages.push(a);
        } else {
            stack.extend(b.children().into_iter().rev());
        }
    }
    let mut order: Vec<usize> = (0..sets.len()).collect();
    order.sort_by_key(|&i| sets[i].canonical_key());
    let sets: Vec<BaseSet> = order.iter().map(|&i| sets[i]).collect();
    let averages: Vec<f64> = order.iter().map(|&i| averages[i]).collect();

    let covered = |c: usize| {
        let (i0, i1) = dom.coords(c);
        sets.iter().any(|s| s.contains_point(i0, i1))
    };
    let uncovered_max = r.cells(dom).filter(|&c| mu.mass(c) > 0.0 && !covered(c)).map(|c| dev[c]).fold(0.0, f64::max);
    let selected_mass = crate::lattice::csum(sets.iter().map(|s| w.mass(s, mu)));
    let d = r.bisectable_axes().max(1);
    Ok(CzSelection {
        root: *r,
        lambda,
        center,
        root_average,
        realized_max: averages.iter().cloned().fold(0.0, f64::max),
        sets,
        averages,
        bisections_per_step: d,
        local_doubling,
        parent_bound: local_doubling * lambda,
        window_bound: local_doubling.powi(d as i32) * lambda,
        uncovered_max,
        selected_mass,
        chebyshev_bound: root_mass * root_average / lambda,
    })
}

impl CzSelection {
    pub fn is_disjoint(&self) -> bool {
        self.sets.iter().enumerate().all(|(i, a)| self.sets[i + 1..].iter().all(|b| a.is_disjoint(b)))
    }
}
