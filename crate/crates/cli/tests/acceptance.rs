//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::f64::consts::E;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use oscillab::lattice::{build_base, BaseFamily, BaseKind, BaseSet, GridDomain, GridFunction, Measure};
use oscillab::operators::{rubio_de_francia, MaximalKind};
use oscillab::oscillation::{
    jn_exp_moment, jn_ln_eta, normalize_bmo, tl_equivalence_probe, OscillationSpec, OscillationTable, TlSequence,
};
use oscillab::verify::{consistency_check, run_suite, standard_corpus, InstanceGenerator, TheoremId};
use oscillab::weights::{
    doubling_constant, muckenhoupt_constant, power_bump_check, reverse_holder_constant, SelfImprovementParams, Weight,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn line_base(vals: &[f64]) -> (BaseFamily, Measure, GridDomain) {
    let d = GridDomain::line(vals.len()).unwrap();
    let mu = Measure::uniform(&d);
    (build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap(), mu, d)
}

fn exact_fixtures() -> Outcome {
    let mut worst = 0.0f64;
    for d in [GridDomain::line(16).unwrap(), GridDomain::square(8).unwrap()] {
        let mu = Measure::uniform(&d);
        for kind in [BaseKind::DyadicCubes, BaseKind::AllCubes] {
            let base = build_base(&d, &mu, kind, 0).unwrap();
            let one = Weight::unit(&d);
            for x in [1.1, 2.0, 3.5, 8.0] {
                let a = muckenhoupt_constant(&one, x, &base, &mu).map_err(|e| e.to_string())?.value;
                let r = reverse_holder_constant(&one, x, &base, &mu).map_err(|e| e.to_string())?.value;
                worst = worst.max((a - 1.0).abs()).max((r - 1.0).abs());
            }
        }
    }
    if worst > 1e-12 {
        return Err(format!("unit weight constants off by {worst:e}"));
    }
    let (base, mu, d) = line_base(&[1.0, 2.0]);
    let w = Weight::new(&d, vec![1.0, 2.0]).unwrap();
    let a2 = muckenhoupt_constant(&w, 2.0, &base, &mu).unwrap().value;
    let rh2 = reverse_holder_constant(&w, 2.0, &base, &mu).unwrap().value;
    if !close(a2, 1.125, 1e-9) || !close(rh2, 2.5f64.sqrt() / 1.5, 1e-9) {
        return Err(format!("two-cell A_2 = {a2}, RH_2 = {rh2}"));
    }
    let pb = power_bump_check(&w, 2.0, 2.0, &base, &mu).unwrap();
    let c = &pb.checks[0];
    if !(pb.pass && (c.lhs - 1.40625).abs() <= 1e-12 && (c.rhs - 1.40625).abs() <= 1e-12) {
        return Err(format!("power bump lhs = {}, rhs = {}", c.lhs, c.rhs));
    }
    Ok(format!("unit constants within {worst:e}; A_2 = {a2}, RH_2 = {rh2}, power bump {} = {}", c.lhs, c.rhs))
}

fn power_bump_suite() -> Outcome {
    let reports = run_suite(TheoremId::PowerBump, 10_000, 41).map_err(|e| e.to_string())?;
    let fails = reports.iter().filter(|r| !r.pass).count();
    let worst = reports.iter().map(|r| r.worst_negative_slack()).fold(0.0, f64::max);
    let min_ratio = reports.iter().map(|r| r.checks[0].rhs / r.checks[0].lhs).fold(f64::INFINITY, f64::min);
    if fails > 0 {
        return Err(format!("{fails} of 10000 trials violate the bound"));
    }
    Ok(format!("10000 trials, 0 violations, worst negative slack {worst:e}, min rhs/lhs {min_ratio:.6}"))
}

fn rubio_invariants() -> Outcome {
    let tol = 1e-10;
    let mut violations = 0;
    let mut max_iter = 0;
    for trial in 0..1000u64 {
        let mut g = InstanceGenerator::new(TheoremId::Sufficiency, 77, trial);
        let (base, mu) = if trial % 2 == 0 { g.dyadic_grid() } else { g.cube_grid(true) }.map_err(|e| e.to_string())?;
        let f = g.function(base.domain());
        if f.values().iter().all(|&v| v == 0.0) {
            continue;
        }
        let p = g.uniform(1.1, 4.0);
        let kind = MaximalKind::default_for(&base);
        let out = rubio_de_francia(&f, p, &base, &mu, &kind, tol).map_err(|e| e.to_string())?;
        let r = &out.report;
        max_iter = max_iter.max(r.iterations);
        let ok = r.dominance_margin >= 0.0
            && r.maximal_ratio <= 2.0 * r.bound * (1.0 + 10.0 * tol)
            && r.norm_ratio <= 2.0 * (1.0 + 10.0 * tol);
        violations += usize::from(!ok);
    }
    let (base, mu, d) = line_base(&[0.0; 4]);
    let spike = GridFunction::new(&d, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let u = rubio_de_francia(&spike, 2.0, &base, &mu, &MaximalKind::dyadic(), 1e-13).unwrap().weight;
    let u1 = u.values()[0];
    if violations > 0 || (u1 - 4.0 / 3.0).abs() > 1e-9 {
        return Err(format!("{violations} violations; u(cell 1) = {u1}"));
    }
    Ok(format!("1000 trials, 0 violations, max {max_iter} iterations; u(cell 1) = {u1}"))
}

fn certificate_suites() -> Outcome {
    let mut parts = Vec::new();
    let mut bad = Vec::new();
    for t in TheoremId::all() {
        let reports = run_suite(t, 500, 2024).map_err(|e| format!("{t}: {e}"))?;
        let fails = reports.iter().filter(|r| !r.pass).count();
        let checks: usize = reports.iter().map(|r| r.checks.len()).sum();
        parts.push(format!("{t} {fails}/{checks}"));
        if fails > 0 {
            bad.push(t.to_string());
        }
    }
    let summary = format!("500 trials each, failed/checks: {}", parts.join(", "));
    if bad.is_empty() {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn john_nirenberg() -> Outcome {
    let d = GridDomain::square(32).unwrap().with_split().unwrap();
    let mu = Measure::uniform(&d);
    let base = build_base(&d, &mu, BaseKind::DyadicRectangles, 0).unwrap();
    let (mut t_max, mut drift_max, mut done) = (0.0f64, 0.0f64, 0);
    let mut trial = 0u64;
    while done < 100 {
        let mut g = InstanceGenerator::new(TheoremId::LittleBmo, 5, trial);
        trial += 1;
        let f = g.function(&d);
        let w = g.weight("w", &base, &mu).map_err(|e| e.to_string())?;
        let Ok((f, _)) = normalize_bmo(&f, &w, &base, &mu) else { continue };
        let dw = doubling_constant(&w, &base, &mu).map_err(|e| e.to_string())?.value;
        let ln_eta = jn_ln_eta(dw);
        let top = OscillationTable::build(&f, &OscillationSpec::centered(&w), &base, &mu).unwrap().sup();
        let n = (2.0 * top + 1.0).max(64.0);
        let a = jn_exp_moment(&f, &w, ln_eta, n, &base, &mu).map_err(|e| e.to_string())?;
        let b = jn_exp_moment(&f, &w, ln_eta, 2.0 * n, &base, &mu).map_err(|e| e.to_string())?;
        t_max = t_max.max(a.t_n);
        drift_max = drift_max.max((a.t_n - b.t_n).abs());
        done += 1;
    }
    if t_max > 2.0 * E || drift_max > 1e-9 {
        return Err(format!("max T_N = {t_max}, max |T_N - T_2N| = {drift_max:e}"));
    }
    Ok(format!(
        "100 functions on 32x32, max T_N = {t_max:.12} <= 2e = {:.5}, max |T_N - T_2N| = {drift_max:e}",
        2.0 * E
    ))
}

fn holder_and_interpolation() -> Outcome {
    let mut violations = 0;
    let rel = 1e-10;
    for trial in 0..1000u64 {
        let mut g = InstanceGenerator::new(TheoremId::Interpolation, 606, trial);
        let (base, mu) = g.cube_grid(true).map_err(|e| e.to_string())?;
        let f = g.function(base.domain());
        let w = g.weight("w", &base, &mu).map_err(|e| e.to_string())?;
        let table = OscillationTable::build(&f, &OscillationSpec::classical(), &base, &mu).unwrap();
        let wv = if w.is_unit() { None } else { Some(w.values()) };
        let p = g.uniform(0.1, 6.0);
        let r = p + g.uniform(0.0, 6.0);
        let (np, nr) = (table.power_norm(p, wv), table.power_norm(r, wv));
        if np > nr * (1.0 + rel) {
            violations += 1;
        }
        let s = g.uniform(0.3, 6.0);
        let e = 0.5 * s * g.uniform(0.01, 0.99);
        let (n0, n1, n2) = (table.power_norm(s - 2.0 * e, wv), table.power_norm(s - e, wv), table.power_norm(s, wv));
        if n0 > 0.0 {
            let lhs = (s - e) * n1.ln();
            let rhs = 0.5 * (s - 2.0 * e) * n0.ln() + 0.5 * s * n2.ln();
            // Compare exp(lhs) <= exp(rhs) at relative tolerance.
            if lhs > rhs + (1.0 + rel).ln() {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return Err(format!("{violations} violations in 1000 samples"));
    }
    Ok("1000 samples, 0 violations of monotonicity or interpolation".into())
}

fn consistency() -> Outcome {
    let corpus = standard_corpus(1, 48).map_err(|e| e.to_string())?;
    let setting = SelfImprovementParams::euclidean(2);
    let kind = MaximalKind::dyadic();
    let mut rows = Vec::new();
    let mut ok = true;
    for p in [2.0, 4.0, 8.0, 16.0] {
        let r = consistency_check(&corpus, p, &setting, &kind).map_err(|e| e.to_string())?;
        ok &= r.holds;
        rows.push(format!("p={p}: {:.4} <= {:.4}", r.c1p, r.upper));
    }
    let s = format!("48-entry corpus, {}", rows.join("; "));
    if ok {
        Ok(s)
    } else {
        Err(s)
    }
}

fn tl_dyadic() -> Outcome {
    let d = GridDomain::square(8).unwrap();
    let mu = Measure::uniform(&d);
    let base = build_base(&d, &mu, BaseKind::DyadicCubes, 0).unwrap();
    let q0 = BaseSet::rect([4, 0], [6, 2]);
    let alpha = 0.5;
    let s = TlSequence::new(&d, vec![(q0, 1.0)]).unwrap();
    let s = TlSequence::new(&d, vec![(q0, s.normalizer(&q0, alpha))]).unwrap();
    let single = tl_equivalence_probe(&s, alpha, 2.0, 3.0, &Weight::unit(&d), &base, &mu).map_err(|e| e.to_string())?;
    if single.unweighted != 1.0 || single.weighted != 1.0 {
        return Err(format!("single coefficient norms {} and {}", single.unweighted, single.weighted));
    }
    let mut violations = 0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for trial in 0..200u64 {
        let mut g = InstanceGenerator::new(TheoremId::TlDyadic, 808, trial);
        let (base, mu) = g.dyadic_grid().map_err(|e| e.to_string())?;
        let alpha = g.uniform(-1.0, 1.0);
        let s = g.sequence(base.domain(), alpha, 12).map_err(|e| e.to_string())?;
        let q = g.uniform(0.5, 3.0);
        let p = q * g.uniform(1.0, 3.0);
        let unit = Weight::unit(base.domain());
        let r = tl_equivalence_probe(&s, alpha, q, p, &unit, &base, &mu).map_err(|e| e.to_string())?;
        if r.weighted < r.unweighted * (1.0 - 1e-9) {
            violations += 1;
        }
        let w = g.weight("w", &base, &mu).map_err(|e| e.to_string())?;
        let rw = tl_equivalence_probe(&s, alpha, q, p, &w, &base, &mu).map_err(|e| e.to_string())?;
        lo = lo.min(rw.ratio);
        hi = hi.max(rw.ratio);
    }
    if violations > 0 || !(lo.is_finite() && hi.is_finite() && lo > 0.0) {
        return Err(format!("{violations} violations, band [{lo}, {hi}]"));
    }
    Ok(format!("single coefficient = 1 exactly; 200 sequences, 0 violations; weighted ratio band [{lo:.6}, {hi:.6}]"))
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in std::fs::read_dir(&p).unwrap() {
            let e = e.unwrap().path();
            if e.is_dir() {
                stack.push(e);
            } else {
                out.push((e.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&e).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("run.cfg"), "seed = 9\ntrials = 20\n").unwrap();
    for out in ["first", "second"] {
        let st = Command::new(env!("CARGO_BIN_EXE_oscillab"))
            .current_dir(dir.path())
            .args(["--config", "run.cfg", "verify", "--suite", "all", "--out", out])
            .output()
            .map_err(|e| e.to_string())?;
        if !st.status.success() {
            return Err(format!("verify exited with {:?}", st.status.code()));
        }
    }
    let a = read_tree(&dir.path().join("first"));
    let b = read_tree(&dir.path().join("second"));
    if a.len() != 9 * 20 + 1 || a != b {
        return Err(format!("{} vs {} files, identical = {}", a.len(), b.len(), a == b));
    }
    Ok(format!("{} files byte-identical across two runs", a.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("exact fixtures", exact_fixtures),
        ("power-bump property suite", power_bump_suite),
        ("Rubio de Francia invariants", rubio_invariants),
        ("certificate suites", certificate_suites),
        ("John-Nirenberg moment bound", john_nirenberg),
        ("Hölder monotonicity and interpolation", holder_and_interpolation),
        ("empirical constant consistency", consistency),
        ("TL dyadic sequence norms", tl_dyadic),
        ("determinism of verify reports", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {}: {name}: {msg} [{secs:.1}s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {msg} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
