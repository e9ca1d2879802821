use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use oscillab::lattice::csv::{format_f64, parse_grid, write_grid};
use oscillab::lattice::{build_base, BaseFamily, BaseKind, GridDomain, GridFunction, Measure};
use oscillab::operators::MaximalMode;
use oscillab::oscillation::{
    jn_exp_moment, jn_ln_eta, normalize_bmo, oscillation_norm, tl_equivalence_probe, OscillationSpec,
};
use oscillab::verify::{
    consistency_check, corpus_digest, estimate_constant, run_suite_with, standard_corpus, CertInputs, CheckStatus,
    EstimateArgs, EstimateKind, InstanceGenerator, TheoremId,
};
use oscillab::weights::{
    a1_constant, doubling_constant, generate_weight, muckenhoupt_constant, reverse_holder_constant,
    SelfImprovementParams, Weight, WeightSpec,
};
use oscillab::{Error, VERSION};
use serde_json::{json, Value};

use crate::config::RunConfig;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Io(_) | Error::Json(_) | Error::MissingInput(_) => 2,
            Error::EmptyCorpus | Error::AllDegenerate => 4,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type CmdResult = Result<u8, Failure>;

/// Writes to standard output; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(v: &Value) {
    emit(&(serde_json::to_string_pretty(v).expect("json values serialize") + "\n"));
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::from)?;
    }
    fs::write(path, body).map_err(|e| Failure::from(Error::from(e)))
}

fn read_grid(path: &Path, config: &RunConfig) -> Result<(GridDomain, Vec<f64>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let (d, v) = parse_grid(&text)?;
    Ok((config.adapt(d)?, v))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ConstantKindArg {
    Ap,
    A1,
    Rh,
    Doubling,
}

#[derive(Args)]
pub struct ConstantArgs {
    /// Weight in the grid CSV format.
    #[arg(long)]
    weight: PathBuf,
    #[arg(long, value_enum)]
    kind: ConstantKindArg,
    /// Muckenhoupt exponent, required for `ap`.
    #[arg(long)]
    p: Option<f64>,
    /// Reverse Hölder exponent, required for `rh`.
    #[arg(long)]
    delta: Option<f64>,
}

pub fn constant(config: &RunConfig, a: ConstantArgs) -> CmdResult {
    let (d, vals) = read_grid(&a.weight, config)?;
    let (base, mu) = config.base_on(&d)?;
    let w = Weight::new(&d, vals)?;
    let need =
        |x: Option<f64>, name: &str| x.ok_or_else(|| Failure::usage(format!("--{name} is required for this kind")));
    let report = match a.kind {
        ConstantKindArg::Ap => muckenhoupt_constant(&w, need(a.p, "p")?, &base, &mu)?,
        ConstantKindArg::Rh => reverse_holder_constant(&w, need(a.delta, "delta")?, &base, &mu)?,
        ConstantKindArg::A1 => a1_constant(&w, &base, &mu, &config.maximal_kind(&base))?,
        ConstantKindArg::Doubling => doubling_constant(&w, &base, &mu)?,
    };
    print_json(&json!({
        "constant": report.value,
        "kind": report.kind,
        "exponent": report.exponent,
        "argmax_set": report.argmax,
        "log_space": report.log_space,
        "base": base.descriptor(),
        "digest": w.id(),
        "config_digest": config.digest(),
        "version": VERSION,
    }));
    Ok(0)
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SpecArg {
    /// `|f - f_B|`.
    Classical,
    /// `|f - f_{v,B}|` with `--center` as `v`.
    Centered,
    /// `|f - f_Q| / w` in the measure `w dx`; needs `--weight`.
    DualHardy,
}

#[derive(Args)]
pub struct NormArgs {
    #[arg(long)]
    function: PathBuf,
    /// Weight `w` in `||f||_{X_w^p}`; unit when omitted.
    #[arg(long)]
    weight: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "classical")]
    spec: SpecArg,
    /// Centering weight for `--spec centered`.
    #[arg(long)]
    center: Option<PathBuf>,
    /// Include the per-set values.
    #[arg(long)]
    per_set: bool,
}

pub fn norm(config: &RunConfig, a: NormArgs) -> CmdResult {
    let (d, vals) = read_grid(&a.function, config)?;
    let f = GridFunction::new(&d, vals)?;
    let load = |p: &Path| -> Result<Weight, Failure> {
        let (wd, wv) = read_grid(p, config)?;
        if wd.sides() != d.sides() {
            return Err(Failure::from(Error::IncompatibleSpec(format!("{} is on a different grid", p.display()))));
        }
        Ok(Weight::new(&d, wv)?)
    };
    let w = match &a.weight {
        Some(p) => load(p)?,
        None => Weight::unit(&d),
    };
    let (spec, base, mu, w_norm) = match a.spec {
        SpecArg::Classical => {
            let (b, mu) = config.base_on(&d)?;
            (OscillationSpec::classical(), b, mu, w)
        }
        SpecArg::Centered => {
            let v = match &a.center {
                Some(p) => load(p)?,
                None => return Err(Failure::usage("--center is required for the centered spec")),
            };
            let (b, mu) = config.base_on(&d)?;
            (OscillationSpec::centered(&v), b, mu, w)
        }
        SpecArg::DualHardy => {
            let mu = w.measure(&Measure::uniform(&d))?;
            let b = build_base(&d, &mu, config.base, config.min_scale)?;
            let v = match &a.center {
                Some(p) => load(p)?,
                None => Weight::unit(&d),
            };
            (OscillationSpec::DualHardy { w }, b, mu, v)
        }
    };
    let mut r = oscillation_norm(&f, &spec, &w_norm, a.p, &base, &mu)?;
    if !a.per_set {
        r.per_set = None;
    }
    print_json(&json!({
        "norm": r,
        "spec": spec.name(),
        "base": base.descriptor(),
        "function_digest": f.digest(),
        "config_digest": config.digest(),
        "version": VERSION,
    }));
    Ok(0)
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Suite id (SMALLNEC, NEC, PSI, SUFF, INTERP, TWOWEIGHT_BMO, DUAL_HARDY,
    /// LITTLE_BMO, TL_DYADIC, POWER_BUMP) or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn verify(config: &RunConfig, a: VerifyArgs) -> CmdResult {
    let suites: Vec<TheoremId> = if a.suite.eq_ignore_ascii_case("all") {
        TheoremId::all().to_vec()
    } else {
        vec![a.suite.parse().map_err(Failure::from)?]
    };
    let trials = a.trials.unwrap_or(config.trials);
    let seed = a.seed.unwrap_or(config.seed);
    let out = a.out.clone().unwrap_or_else(|| config.output.clone());
    let digest = config.digest();
    let mut summary = String::from("theorem,trials,failures,skipped_checks,max_negative_slack,seed,config_digest\n");
    let mut failed = false;
    for t in suites {
        let reports = run_suite_with(t, trials, seed, |inp| config.apply_overrides(t, inp))?;
        let dir = out.join("reports").join(t.as_str());
        let (mut failures, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
        for (i, r) in reports.iter().enumerate() {
            failures += usize::from(!r.pass);
            skipped += r.checks.iter().filter(|c| c.status == CheckStatus::Skipped).count();
            worst = worst.max(r.worst_negative_slack());
            let mut v = serde_json::to_value(r).map_err(Error::from)?;
            v["version"] = json!(VERSION);
            v["config_digest"] = json!(digest);
            let body = serde_json::to_string_pretty(&v).map_err(Error::from)? + "\n";
            write_file(&dir.join(format!("trial-{i:06}.json")), &body)?;
        }
        failed |= failures > 0;
        let _ = writeln!(summary, "{t},{trials},{failures},{skipped},{},{seed},{digest}", format_f64(worst));
    }
    write_file(&out.join("summary.csv"), &summary)?;
    emit(&summary);
    Ok(if failed { 1 } else { 0 })
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Empirical `c_{1,p}` per grid value of `p`, with its upper-bound column.
    C1p,
    /// Empirical `Psi_p(t)` per grid value of `t`.
    Psi,
    /// Truncated exponential moments per grid value of the truncation `N`.
    JnDecay,
    /// Sequence-norm ratio band per grid value of `p`.
    TlRatio,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusArg {
    /// Seeded functions with log-bounded weights.
    Standard,
    /// The standard grids and weights with every function replaced by a constant.
    Constant,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    quantity: Quantity,
    /// Comma-separated parameter values.
    #[arg(long)]
    grid: String,
    #[arg(long, value_enum, default_value = "standard")]
    corpus: CorpusArg,
    /// Corpus size.
    #[arg(long, default_value_t = 24)]
    count: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed exponent for `psi`.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Fixed `q` for `tl-ratio`.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Smoothness `alpha` for `tl-ratio`.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid_values(s: &str) -> Result<Vec<f64>, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Failure::usage(format!("grid value `{t}`: {e}"))))
        .collect::<Result<_, _>>()?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Failure::usage("grid must be a nonempty list of finite numbers"));
    }
    Ok(v)
}

fn flatten(corpus: &mut [CertInputs]) {
    for c in corpus {
        if let Some(f) = &c.f {
            c.f = Some(GridFunction::constant(f.domain(), 1.0));
        }
    }
}

/// Normalized functions on 2-D dyadic rectangle grids (8x8 to 32x32) with a
/// random weight each; constant draws are dropped.
fn jn_corpus(seed: u64, count: u64, constant: bool) -> Result<Vec<CertInputs>, Failure> {
    let mut out = Vec::new();
    for i in 0..count {
        let mut g = InstanceGenerator::new(TheoremId::LittleBmo, seed, i);
        let (base, mu) = loop {
            let (b, m) = g.rectangle_grid(5)?;
            if b.kind() == BaseKind::DyadicRectangles && b.domain().side(0) >= 8 {
                break (b, m);
            }
        };
        let f = if constant { GridFunction::constant(base.domain(), 1.0) } else { g.function(base.domain()) };
        let w = g.weight("w", &base, &mu)?;
        out.push(CertInputs::new(base, mu).with_function(f).with_weight("w", w));
    }
    Ok(out)
}

pub fn sweep(config: &RunConfig, a: SweepArgs) -> CmdResult {
    let grid = parse_grid_values(&a.grid)?;
    let seed = a.seed.unwrap_or(config.seed);
    let constant = a.corpus == CorpusArg::Constant;
    let mut csv = String::new();
    let mut degenerate_rows = 0;
    let cell = |x: f64| format_f64(x);
    match a.quantity {
        Quantity::C1p | Quantity::Psi => {
            let mut corpus = standard_corpus(seed, a.count)?;
            if constant {
                flatten(&mut corpus);
            }
            let digest = corpus_digest(&corpus);
            let setting = SelfImprovementParams::euclidean(2);
            if a.quantity == Quantity::C1p {
                csv.push_str("p,c1p,upper,t,delta,k,c1_delta_conj,holds,corpus_digest\n");
                for &p in &grid {
                    if !(p > 1.0) {
                        return Err(Failure::usage(format!("c1p needs p > 1, got {p}")));
                    }
                    let base = &corpus[0].base;
                    match consistency_check(&corpus, p, &setting, &config.maximal_kind(base)) {
                        Ok(r) => {
                            let _ = writeln!(
                                csv,
                                "{},{},{},{},{},{},{},{},{digest}",
                                cell(p),
                                cell(r.c1p),
                                cell(r.upper),
                                cell(r.t),
                                cell(r.delta),
                                cell(r.k),
                                cell(r.c1_delta_conj),
                                r.holds
                            );
                        }
                        Err(Error::AllDegenerate) => {
                            degenerate_rows += 1;
                            let _ = writeln!(csv, "{},NaN,NaN,NaN,NaN,NaN,NaN,false,{digest}", cell(p));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
            } else {
                csv.push_str("p,t,psi,used,skipped,delta,k,upper,corpus_digest\n");
                let p = a.p;
                for &t in &grid {
                    let delta = setting.delta(p, t);
                    let k = setting.k(p, t);
                    let dc = delta / (delta - 1.0);
                    let est = estimate_constant(EstimateKind::Psi, &corpus, &EstimateArgs::psi(p, t));
                    let c = estimate_constant(EstimateKind::CPq, &corpus, &EstimateArgs::c_pq(1.0, dc, None));
                    match (est, c) {
                        (Ok(e), Ok(c)) => {
                            let _ = writeln!(
                                csv,
                                "{},{},{},{},{},{},{},{},{digest}",
                                cell(p),
                                cell(t),
                                cell(e.value),
                                e.used,
                                e.skipped,
                                cell(delta),
                                cell(k),
                                cell(k * c.value)
                            );
                        }
                        (Err(Error::AllDegenerate), _) | (_, Err(Error::AllDegenerate)) => {
                            degenerate_rows += 1;
                            let _ = writeln!(
                                csv,
                                "{},{},NaN,0,0,{},{},NaN,{digest}",
                                cell(p),
                                cell(t),
                                cell(delta),
                                cell(k)
                            );
                        }
                        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
                    }
                }
            }
        }
        Quantity::JnDecay => {
            let corpus = jn_corpus(seed, a.count, constant)?;
            let digest = corpus_digest(&corpus);
            csv.push_str("n_trunc,entries,t_n_max,bound,holds,c2_hat_min,corpus_digest\n");
            let bound = 2.0 * std::f64::consts::E;
            for &n in &grid {
                if !(n > 0.0) {
                    return Err(Failure::usage(format!("truncation must be positive, got {n}")));
                }
                let (mut entries, mut t_max, mut c2_min) = (0usize, 0.0f64, f64::INFINITY);
                for c in &corpus {
                    let (f, w) = (c.function()?, c.weight("w")?);
                    let g = match normalize_bmo(f, w, &c.base, &c.mu) {
                        Ok((g, _)) => g,
                        Err(Error::DegenerateInput(_)) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    let d = doubling_constant(w, &c.base, &c.mu)?.value;
                    let r = jn_exp_moment(&g, w, jn_ln_eta(d), n, &c.base, &c.mu)?;
                    entries += 1;
                    t_max = t_max.max(r.t_n);
                    if let Some(c2) = r.c2_hat {
                        c2_min = c2_min.min(c2);
                    }
                }
                if entries == 0 {
                    degenerate_rows += 1;
                    let _ = writeln!(csv, "{},0,NaN,{},false,NaN,{digest}", cell(n), cell(bound));
                } else {
                    let c2 = if c2_min.is_finite() { cell(c2_min) } else { "NaN".into() };
                    let _ = writeln!(
                        csv,
                        "{},{entries},{},{},{},{c2},{digest}",
                        cell(n),
                        cell(t_max),
                        cell(bound),
                        t_max <= bound
                    );
                }
            }
        }
        Quantity::TlRatio => {
            let mut entries = Vec::new();
            for i in 0..a.count {
                let mut g = InstanceGenerator::new(TheoremId::TlDyadic, seed, i);
                let (base, mu) = g.dyadic_grid()?;
                let s = g.sequence(base.domain(), a.alpha, 12)?;
                let w = g.weight("w", &base, &mu)?;
                entries.push(CertInputs::new(base, mu).with_sequence(s).with_weight("w", w));
            }
            let digest = corpus_digest(&entries);
            csv.push_str("p,q,alpha,ratio_min,ratio_max,entries,corpus_digest\n");
            for &p in &grid {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for c in &entries {
                    let r = tl_equivalence_probe(c.sequence()?, a.alpha, a.q, p, c.weight("w")?, &c.base, &c.mu)?;
                    lo = lo.min(r.ratio);
                    hi = hi.max(r.ratio);
                }
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{digest}",
                    cell(p),
                    cell(a.q),
                    cell(a.alpha),
                    cell(lo),
                    cell(hi),
                    entries.len()
                );
            }
        }
    }
    if degenerate_rows == grid.len() {
        return Err(Failure::from(Error::AllDegenerate));
    }
    match &a.out {
        Some(p) => write_file(p, &csv)?,
        None => emit(&csv),
    }
    Ok(0)
}

#[derive(Args)]
pub struct GenArgs {
    #[command(subcommand)]
    what: GenKind,
}

#[derive(Subcommand)]
enum GenKind {
    /// One weight as grid CSV plus a JSON sidecar next to it.
    Weight {
        /// JSON weight spec, e.g. `{"kind":"random-log-bounded","bound":2}`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Functions and weights on the configured grid plus a manifest.
    Corpus {
        #[arg(long, default_value_t = 8)]
        count: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Computes the constants listed in the sidecar, then writes CSV and JSON.
fn write_weight(path: &Path, w: &Weight, base: &BaseFamily, mu: &Measure, config: &RunConfig) -> Result<(), Failure> {
    muckenhoupt_constant(w, 2.0, base, mu)?;
    reverse_holder_constant(w, 2.0, base, mu)?;
    a1_constant(w, base, mu, &config.maximal_kind(base))?;
    if base.kind().is_dyadic() {
        doubling_constant(w, base, mu)?;
    }
    write_file(path, &write_grid(w.domain(), w.values()))?;
    let mut side = w.sidecar();
    side["base"] = serde_json::to_value(base.descriptor()).map_err(Error::from)?;
    side["version"] = json!(VERSION);
    side["config_digest"] = json!(config.digest());
    let body = serde_json::to_string_pretty(&side).map_err(Error::from)? + "\n";
    write_file(&path.with_extension("json"), &body)
}

pub fn gen(config: &RunConfig, a: GenArgs) -> CmdResult {
    let d = config.domain()?;
    let (base, mu) = config.base_on(&d)?;
    match a.what {
        GenKind::Weight { spec, seed, out } => {
            let spec: WeightSpec =
                serde_json::from_str(&spec).map_err(|e| Failure::usage(format!("weight spec: {e}")))?;
            let w = generate_weight(&spec, &base, &mu, seed.unwrap_or(config.seed))?;
            write_weight(&out, &w, &base, &mu, config)?;
            print_json(&w.sidecar());
        }
        GenKind::Corpus { count, seed, out } => {
            let seed = seed.unwrap_or(config.seed);
            let mut manifest = Vec::new();
            for i in 0..count {
                let mut g = InstanceGenerator::new(TheoremId::PowerBump, seed, i);
                let f = g.function(&d);
                let w = g.weight("w", &base, &mu)?;
                let (fname, wname) = (format!("f-{i:04}.csv"), format!("w-{i:04}.csv"));
                write_file(&out.join(&fname), &write_grid(&d, f.values()))?;
                write_weight(&out.join(&wname), &w, &base, &mu, config)?;
                manifest.push(json!({
                    "function": fname,
                    "weight": wname,
                    "seed": seed,
                    "trial": i,
                    "description": g.take_description(),
                }));
            }
            let body = json!({
                "version": VERSION,
                "config_digest": config.digest(),
                "base": base.descriptor(),
                "entries": manifest,
            });
            write_file(
                &out.join("manifest.json"),
                &(serde_json::to_string_pretty(&body).map_err(Error::from)? + "\n"),
            )?;
            emit(&format!("{}\n", out.join("manifest.json").display()));
        }
    }
    Ok(0)
}

pub fn info(config: &RunConfig) -> CmdResult {
    let suites: Vec<&str> = TheoremId::all().iter().map(|t| t.as_str()).collect();
    print_json(&json!({
        "version": VERSION,
        "suites": suites,
        "extra_suites": [TheoremId::PowerBump.as_str()],
        "base_kinds": [BaseKind::DyadicCubes, BaseKind::AllCubes, BaseKind::DyadicRectangles, BaseKind::AllRectangles],
        "maximal_modes": [MaximalMode::Dyadic, MaximalMode::Centered, MaximalMode::Uncentered],
        "threads": rayon::current_num_threads(),
        "config": config,
        "config_digest": config.digest(),
    }));
    Ok(0)
}
