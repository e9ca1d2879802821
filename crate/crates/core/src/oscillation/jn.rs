use serde::{Deserialize, Serialize};

use super::{OscillationSpec, OscillationTable};
use crate::error::{Error, Result};
use crate::lattice::{log_sum_exp, BaseFamily, BaseSet, GridFunction, Measure, NeumaierSum};
use crate::weights::{doubling_constant, Weight};

const SURVIVAL_POINTS: usize = 17;

/// Truncated exponential moment of the weighted-centered oscillation and
/// its distribution curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JnReport {
    /// `ln(eta)`; kept separately because `eta` may exceed `f64::MAX`.
    pub ln_eta: f64,
    pub n_trunc: f64,
    /// `max_R avg_{mu_w}(exp(min(Lambda, N)/eta), R)`.
    pub t_n: f64,
    pub extremal_set: BaseSet,
    pub lambda_grid: Vec<f64>,
    /// `max_B w({Lambda >= lambda} in B) / w(B)` per grid point.
    pub survival_sup: Vec<f64>,
    /// `w({Lambda >= lambda} in B)` on the set that attains `survival_sup` at
    /// the first positive grid point.
    pub survival_extremal: Vec<f64>,
    pub extremal_mass: f64,
    /// Fit of `survival_sup(lambda) ~ c1 * exp(-c2 * lambda)`; `None` when
    /// fewer than two points have positive survival.
    pub c1_hat: Option<f64>,
    pub c2_hat: Option<f64>,
    /// Parent/child doubling constant of `w`, when the base is dyadic.
    pub doubling: Option<f64>,
}

impl JnReport {
    pub fn eta(&self) -> f64 {
        self.ln_eta.exp()
    }

    /// `(lambda, mass)` rows of the extremal survival curve.
    pub fn survival_csv(&self) -> String {
        let mut out = String::from("lambda,mass\n");
        for (l, m) in self.lambda_grid.iter().zip(&self.survival_extremal) {
            out.push_str(&crate::lattice::csv::format_f64(*l));
            out.push(',');
            out.push_str(&crate::lattice::csv::format_f64(*m));
            out.push('\n');
        }
        out
    }
}

/// `f / ||f||_{X_w}` for the oscillation `|f - f_{mu_w,B}|` with the measure
/// `w dmu`, together with the norm.
pub fn normalize_bmo(f: &GridFunction, w: &Weight, base: &BaseFamily, mu: &Measure) -> Result<(GridFunction, f64)> {
    let norm = OscillationTable::build(f, &OscillationSpec::centered(w), base, mu)?.norm(w, 1.0)?.value;
    if norm <= 0.0 {
        return Err(Error::DegenerateInput("function is constant on every base set".into()));
    }
    Ok((f.map(|x| x / norm), norm))
}

/// `ln(2) + D^2`, the logarithm of `2 e^{D^2}`.
pub fn jn_ln_eta(doubling: f64) -> f64 {
    std::f64::consts::LN_2 + doubling * doubling
}

/// Truncated exponential moments `T_N(eta)` over `base` with the centered
/// oscillation `|f - f_{mu_w,R}|`. `ln_eta` is the logarithm of `eta`.
pub fn jn_exp_moment(
    f: &GridFunction,
    w: &Weight,
    ln_eta: f64,
    n_trunc: f64,
    base: &BaseFamily,
    mu: &Measure,
) -> Result<JnReport> {
    if ln_eta.is_nan() || ln_eta == f64::NEG_INFINITY {
        return Err(Error::BadParams(format!("ln(eta) must be finite, got {ln_eta}")));
    }
    if !(n_trunc > 0.0) {
        return Err(Error::BadParams(format!("truncation level must be positive, got {n_trunc}")));
    }
    let table = OscillationTable::build(f, &OscillationSpec::centered(w), base, mu)?;
    if table.sup() <= 0.0 {
        return Err(Error::DegenerateInput("function is constant on every base set".into()));
    }
    let dom = base.domain();
    let wv = w.values();
    let inv_eta = (-ln_eta).exp();

    let mut best = (f64::NEG_INFINITY, 0usize);
    let mut terms = Vec::new();
    for (i, b) in base.sets().iter().enumerate() {
        terms.clear();
        let mut mass = NeumaierSum::new();
        for (c, &l) in b.cells(dom).zip(table.lambda(i)) {
            let m = mu.mass(c) * wv[c];
            if m > 0.0 {
                terms.push(l.min(n_trunc) * inv_eta + m.ln());
                mass.add(m);
            }
        }
        let ln_avg = log_sum_exp(&terms) - mass.total().ln();
        if ln_avg > best.0 {
            best = (ln_avg, i);
        }
    }

    let top = table.sup();
    let lambda_grid: Vec<f64> = (0..SURVIVAL_POINTS).map(|k| top * k as f64 / (SURVIVAL_POINTS - 1) as f64).collect();
    let mut survival_sup = vec![0.0; SURVIVAL_POINTS];
    let mut arg = None;
    for (i, b) in base.sets().iter().enumerate() {
        let mut total = NeumaierSum::new();
        let mut above = vec![NeumaierSum::new(); SURVIVAL_POINTS];
        for (c, &l) in b.cells(dom).zip(table.lambda(i)) {
            let m = mu.mass(c) * wv[c];
            if m > 0.0 {
                total.add(m);
                for (k, &lam) in lambda_grid.iter().enumerate() {
                    if l >= lam {
                        above[k].add(m);
                    }
                }
            }
        }
        let total = total.total();
        for k in 0..SURVIVAL_POINTS {
            let r = above[k].total() / total;
            if r > survival_sup[k] {
                survival_sup[k] = r;
                if k == 1 {
                    arg = Some(i);
                }
            }
        }
    }
    let arg = arg.unwrap_or(best.1);
    let arg_set = base.sets()[arg];
    let survival_extremal: Vec<f64> = lambda_grid
        .iter()
        .map(|&lam| {
            crate::lattice::csum(
                arg_set.cells(dom).zip(table.lambda(arg)).filter(|(_, &l)| l >= lam).map(|(c, _)| mu.mass(c) * wv[c]),
            )
        })
        .collect();
    let (c1_hat, c2_hat) = fit_decay(&lambda_grid, &survival_sup);
    let doubling = if base.kind().is_dyadic() { Some(doubling_constant(w, base, mu)?.value) } else { None };
    Ok(JnReport {
        ln_eta,
        n_trunc,
        t_n: best.0.exp(),
        extremal_set: base.sets()[best.1],
        lambda_grid,
        survival_sup,
        survival_extremal,
        extremal_mass: w.mass(&arg_set, mu),
        c1_hat,
        c2_hat,
        doubling,
    })
}

/// Least-squares line through `(lambda, ln s)` over positive `s`.
fn fit_decay(lambda: &[f64], s: &[f64]) -> (Option<f64>, Option<f64>) {
    let pts: Vec<(f64, f64)> = lambda.iter().zip(s).filter(|(_, &v)| v > 0.0).map(|(&l, &v)| (l, v.ln())).collect();
    if pts.len() < 2 {
        return (None, None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return (None, None);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (Some((my - slope * mx).exp()), Some(-slope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_base, BaseKind, GridDomain};

    fn fixture() -> (GridDomain, Measure, BaseFamily) {
        let d = GridDomain::square(8).unwrap().with_split().unwrap();
        let mu = Measure::uniform(&d);
        let base = build_base(&d, &mu, BaseKind::DyadicRectangles, 0).unwrap();
        (d, mu, base)
    }

    #[test]
    fn constant_is_degenerate() {
        let (d, mu, base) = fixture();
        let f = GridFunction::constant(&d, 1.0);
        let w = Weight::unit(&d);
        assert!(matches!(normalize_bmo(&f, &w, &base, &mu), Err(Error::DegenerateInput(_))));
        assert!(matches!(jn_exp_moment(&f, &w, 0.0, 1.0, &base, &mu), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn moment_bound_and_truncation() {
        let (d, mu, base) = fixture();
        let f = GridFunction::from_fn(&d, |i, j| ((i * 7 + j * 3) % 5) as f64 - (i as f64).sqrt());
        let w = Weight::new(&d, (0..64).map(|k| 1.0 + (k % 3) as f64).collect()).unwrap();
        let (g, _) = normalize_bmo(&f, &w, &base, &mu).unwrap();
        let dw = doubling_constant(&w, &base, &mu).unwrap().value;
        let ln_eta = jn_ln_eta(dw);
        let r64 = jn_exp_moment(&g, &w, ln_eta, 64.0, &base, &mu).unwrap();
        let r128 = jn_exp_moment(&g, &w, ln_eta, 128.0, &base, &mu).unwrap();
        assert!(r64.t_n <= 2.0 * std::f64::consts::E);
        assert!((r64.t_n - r128.t_n).abs() <= 1e-9);
        assert_eq!(r64.doubling, Some(dw));
        assert_eq!(r64.survival_sup[0], 1.0);
        assert!(r64.survival_sup.windows(2).all(|p| p[1] <= p[0]));
        assert!(r64.survival_extremal.windows(2).all(|p| p[1] <= p[0]));
        assert!((r64.survival_extremal[0] - r64.extremal_mass).abs() <= 1e-12 * r64.extremal_mass);
    }

    #[test]
    fn moment_is_monotone_in_truncation() {
        let (d, mu, base) = fixture();
        let f = GridFunction::from_fn(&d, |i, j| (i * j) as f64);
        let w = Weight::unit(&d);
        let t: Vec<f64> =
            [0.5, 1.0, 4.0, 100.0].iter().map(|&n| jn_exp_moment(&f, &w, 1.0, n, &base, &mu).unwrap().t_n).collect();
        assert!(t.windows(2).all(|p| p[0] <= p[1]));
    }
}
