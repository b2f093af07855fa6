//! Experiment runner: JSON config in, per-suite JSON reports and a CSV summary out.
//!
//! The config format is documented in `configs/README.md`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{
    a1_constant, ainfty_y_with, ap_constant, default_tau, rh_check, rh_exponent_from,
    RhVariant,
};
use crate::error::{Error, Result};
use crate::functionals::{estimate_beta, FamilySampler, FunctionalY};
use crate::generators::{
    cascade_weight, clipped_log, dyadic_martingale, half_indicator, holey_weight, power_weight,
    witness_b,
};
use crate::grid::{Cube, Family, GridFunction, GridSpec};
use crate::verify::{
    verify_bloom, verify_characterization, verify_genasym, verify_john_nirenberg, Beta, BloomPart,
    BmoProfiles, JnVariant, SuiteReport, WeightContext,
};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default)]
    pub corpora: Vec<Corpus>,
    #[serde(default)]
    pub suites: Vec<SuiteSpec>,
}

fn default_seed() -> u64 {
    1
}

fn default_family() -> Family {
    Family::Full
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Corpus {
    pub name: String,
    pub dim: usize,
    pub depths: Vec<u32>,
    pub weights: Vec<WeightSpec>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSpec {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    Power {
        alpha: f64,
        /// defaults to the center of the domain
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Cascade {
        t: f64,
        /// defaults to the config seed
        #[serde(default)]
        seed: Option<u64>,
        /// number of cascade levels, defaults to the grid depth
        #[serde(default)]
        levels: Option<u32>,
    },
    Holey {
        base: Box<WeightSpec>,
        holes: Vec<DyadicHole>,
    },
    /// A grid file; used only on the corpus grid that matches its header.
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

/// The dyadic cube at `level` with per-axis `index`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicHole {
    pub level: u32,
    pub index: Vec<i64>,
}

impl WeightSpec {
    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant { value } => format!("constant({value})"),
            WeightSpec::Power { alpha, center } => match center {
                Some(c) => format!("power({alpha},{c:?})"),
                None => format!("power({alpha})"),
            },
            WeightSpec::Cascade { t, seed, levels } => {
                let mut s = format!("cascade({t}");
                if let Some(seed) = seed {
                    let _ = write!(s, ",seed={seed}");
                }
                if let Some(l) = levels {
                    let _ = write!(s, ",levels={l}");
                }
                s.push(')');
                s
            }
            WeightSpec::Holey { base, holes } => format!("{}+{}holes", base.label(), holes.len()),
            WeightSpec::File { path } => format!("file({})", path.display()),
        }
    }

    /// `Ok(None)` for a grid file whose header does not match `spec`.
    pub fn build(&self, spec: GridSpec, seed: u64, base_dir: &Path) -> Result<Option<GridFunction>> {
        Ok(Some(match self {
            WeightSpec::Constant { value } => {
                if !(*value > 0.0) || !value.is_finite() {
                    return Err(Error::Config(format!("constant weight must be positive, got {value}")));
                }
                GridFunction::constant(spec, *value)
            }
            WeightSpec::Power { alpha, center } => {
                let c = center.clone().unwrap_or_else(|| vec![0.5; spec.dim()]);
                if c.len() != spec.dim() {
                    return Err(Error::Config(format!("power center {c:?} has the wrong dimension")));
                }
                power_weight(*alpha, &c, spec)?
            }
            WeightSpec::Cascade { t, seed: s, levels } => {
                cascade_weight(*t, levels.unwrap_or(spec.depth()).min(spec.depth()), s.unwrap_or(seed), spec)?
            }
            WeightSpec::Holey { base, holes } => {
                let Some(b) = base.build(spec, seed, base_dir)? else { return Ok(None) };
                let cubes = holes.iter().map(|h| h.cube(spec)).collect::<Result<Vec<_>>>()?;
                holey_weight(&b, &cubes)?
            }
            WeightSpec::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let w = GridFunction::load(&full)?;
                if *w.spec() != spec {
                    return Ok(None);
                }
                w
            }
        }))
    }
}

impl DyadicHole {
    fn cube(&self, spec: GridSpec) -> Result<Cube> {
        if self.level > spec.depth() || self.index.len() != spec.dim() {
            return Err(Error::Config(format!("hole {self:?} does not fit a depth-{} grid", spec.depth())));
        }
        let side = (spec.side() >> self.level) as i64;
        let count = 1i64 << self.level;
        if self.index.iter().any(|&i| i < 0 || i >= count) {
            return Err(Error::Config(format!("hole index {:?} out of range", self.index)));
        }
        let mut origin = [0i64; 2];
        for (o, &i) in origin.iter_mut().zip(&self.index) {
            *o = i * side;
        }
        Ok(Cube::new(spec.dim(), origin, side))
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "suite", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SuiteSpec {
    Characterization {
        #[serde(default = "default_functionals")]
        functionals: Vec<String>,
    },
    Genasym {
        #[serde(default = "default_functionals")]
        functionals: Vec<String>,
        #[serde(default = "default_ps")]
        p: Vec<f64>,
        #[serde(default = "default_functions")]
        functions: Vec<String>,
        /// `q` for functionals other than `rscale`; defaults to `r'` of the reverse Hölder exponent
        #[serde(default)]
        q: Option<f64>,
        #[serde(default = "default_beta_trials")]
        beta_trials: usize,
    },
    JohnNirenberg {
        #[serde(default = "default_variant")]
        variant: JnVariant,
        #[serde(default = "default_ps")]
        p: Vec<f64>,
        #[serde(default = "default_functions")]
        functions: Vec<String>,
    },
    Bloom {
        part: u8,
        exponents: Vec<f64>,
        #[serde(default = "default_functions")]
        functions: Vec<String>,
    },
    Rhi {
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default = "two")]
        c: f64,
        #[serde(default = "default_rh_variant")]
        variant: String,
    },
    Constants {
        #[serde(default = "default_kinds")]
        kinds: Vec<String>,
    },
}

fn default_functionals() -> Vec<String> {
    ["mass", "doubled", "cp:2", "rscale"].map(String::from).to_vec()
}
fn default_ps() -> Vec<f64> {
    (1..=8).map(f64::from).collect()
}
fn default_functions() -> Vec<String> {
    vec!["log".into()]
}
fn default_beta_trials() -> usize {
    200
}
fn default_variant() -> JnVariant {
    JnVariant::Strong
}
fn two() -> f64 {
    2.0
}
fn default_rh_variant() -> String {
    "strong".into()
}
fn default_kinds() -> Vec<String> {
    ["ainfty", "weak", "a1", "ap:2", "cp:2"].map(String::from).to_vec()
}

impl SuiteSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteSpec::Characterization { .. } => "characterization",
            SuiteSpec::Genasym { .. } => "genasym",
            SuiteSpec::JohnNirenberg { .. } => "john-nirenberg",
            SuiteSpec::Bloom { .. } => "bloom",
            SuiteSpec::Rhi { .. } => "rhi",
            SuiteSpec::Constants { .. } => "constants",
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        for c in &self.corpora {
            if c.depths.is_empty() {
                return Err(Error::Config(format!("corpus {}: no depths", c.name)));
            }
            for &j in &c.depths {
                GridSpec::new(c.dim, j).map_err(|e| Error::Config(format!("corpus {}: {e}", c.name)))?;
            }
        }
        for s in &self.suites {
            match s {
                SuiteSpec::Characterization { functionals } | SuiteSpec::Genasym { functionals, .. } => {
                    for f in functionals {
                        parse_functional(f)?;
                    }
                }
                SuiteSpec::Bloom { part, exponents, .. } => {
                    if *part != 1 && *part != 2 {
                        return Err(Error::Config(format!("bloom part must be 1 or 2, got {part}")));
                    }
                    if exponents.iter().any(|&e| !(e > 1.0)) {
                        return Err(Error::Config("bloom exponents must exceed 1".into()));
                    }
                }
                SuiteSpec::Rhi { variant, .. } => {
                    parse_rh_variant(variant)?;
                }
                _ => {}
            }
            if let SuiteSpec::Genasym { p, .. } | SuiteSpec::JohnNirenberg { p, .. } = s {
                if p.iter().any(|&x| !(x >= 1.0)) {
                    return Err(Error::Config("p values must be ≥ 1".into()));
                }
            }
        }
        Ok(())
    }
}

fn parse_rh_variant(s: &str) -> Result<RhVariant> {
    match s {
        "strong" => Ok(RhVariant::Strong),
        "weak" => Ok(RhVariant::Weak),
        other => Err(Error::Config(format!("unknown reverse Hölder variant {other:?}"))),
    }
}

/// A functional named in a config: `lebesgue`, `mass`, `doubled`, `cp:P`, `rscale` or `rscale:R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FunctionalSpec {
    Lebesgue,
    Mass,
    Doubled,
    Cp(f64),
    /// `None` takes `r` from the reverse Hölder exponent of the weight
    RScale(Option<f64>),
}

pub fn parse_functional(s: &str) -> Result<FunctionalSpec> {
    let (head, arg) = match s.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (s, None),
    };
    let num = |a: &str| a.parse::<f64>().map_err(|_| Error::Config(format!("bad number in functional {s:?}")));
    Ok(match (head, arg) {
        ("lebesgue", None) => FunctionalSpec::Lebesgue,
        ("mass", None) => FunctionalSpec::Mass,
        ("doubled", None) => FunctionalSpec::Doubled,
        ("cp", Some(a)) => FunctionalSpec::Cp(num(a)?),
        ("rscale", None) => FunctionalSpec::RScale(None),
        ("rscale", Some(a)) => FunctionalSpec::RScale(Some(num(a)?)),
        _ => return Err(Error::Config(format!("unknown functional {s:?}"))),
    })
}

impl FunctionalSpec {
    pub fn build(&self, ctx: &WeightContext) -> Result<FunctionalY> {
        let w = ctx.w.clone();
        match *self {
            FunctionalSpec::Lebesgue => Ok(FunctionalY::Lebesgue),
            FunctionalSpec::Mass => Ok(FunctionalY::mass(w)),
            FunctionalSpec::Doubled => Ok(FunctionalY::doubled_mass(w)),
            FunctionalSpec::Cp(p) => FunctionalY::cp(w, p),
            FunctionalSpec::RScale(r) => {
                let r = r.unwrap_or_else(|| rh_exponent_from(ctx.ainfty_value(), default_tau(&ctx.spec())));
                FunctionalY::rscale(w, r)
            }
        }
    }
}

/// A test function named in a config: `log`, `log:C`, `half`, `martingale:SEED`, `witness` or `weight`.
pub fn test_function(name: &str, w: &GridFunction) -> Result<GridFunction> {
    let spec = *w.spec();
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let bad = || Error::Config(format!("unknown test function {name:?}"));
    match (head, arg) {
        ("log", None) => Ok(clipped_log(&vec![0.5; spec.dim()], spec)),
        ("log", Some(c)) => {
            let c: f64 = c.parse().map_err(|_| bad())?;
            Ok(clipped_log(&vec![c; spec.dim()], spec))
        }
        ("half", None) => half_indicator(&spec.unit_cube(), spec),
        ("martingale", Some(s)) => Ok(dyadic_martingale(spec, s.parse().map_err(|_| bad())?, 1.0)),
        ("witness", None) => witness_b(w, &spec.unit_cube()),
        ("weight", None) => Ok(w.clone()),
        _ => Err(bad()),
    }
}

/// Reports for one weight on one grid, plus the key used to compare across depths.
#[derive(Clone, Debug, Serialize)]
pub struct Entry {
    pub corpus: String,
    pub dim: usize,
    #[serde(rename = "J")]
    pub depth: u32,
    pub suite_index: usize,
    pub report: SuiteReport,
    #[serde(skip)]
    key: String,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub suites: usize,
    pub reports: usize,
    pub hard_failures: Vec<String>,
    pub wall_clock_seconds: f64,
    pub depths: Vec<u32>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.hard_failures.is_empty() {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub family: Option<Family>,
}

/// Runs every suite on every corpus weight and grid.
pub fn run_config(cfg: &Config, base_dir: &Path, opts: &RunOptions) -> Result<Vec<Entry>> {
    let seed = opts.seed.unwrap_or(cfg.seed);
    let family = opts.family.unwrap_or(cfg.family);
    let mut jobs_list = Vec::new();
    for corpus in &cfg.corpora {
        for &depth in &corpus.depths {
            let spec = GridSpec::new(corpus.dim, depth)?;
            for ws in &corpus.weights {
                jobs_list.push((corpus, spec, ws));
            }
        }
    }
    if cfg.suites.is_empty() {
        return Ok(Vec::new());
    }
    let work = || -> Result<Vec<Vec<Entry>>> {
        jobs_list
            .par_iter()
            .map(|(corpus, spec, ws)| {
                let Some(w) = ws.build(*spec, seed, base_dir)? else { return Ok(Vec::new()) };
                let ctx = WeightContext::new(&ws.label(), w, family)?;
                let mut out = Vec::new();
                for (si, suite) in cfg.suites.iter().enumerate() {
                    for (key, report) in run_suite(&ctx, suite, seed)? {
                        out.push(Entry {
                            corpus: corpus.name.clone(),
                            dim: spec.dim(),
                            depth: spec.depth(),
                            suite_index: si,
                            report,
                            key: format!("{}|{}|{si}|{key}", corpus.name, ws.label()),
                        });
                    }
                }
                Ok(out)
            })
            .collect()
    };
    let nested = match opts.jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    for (corpus, _, ws) in &jobs_list {
        if let WeightSpec::File { path } = ws {
            let used = nested.iter().flatten().any(|e| e.corpus == corpus.name && e.key.contains(&ws.label()));
            if !used && !cfg.suites.is_empty() {
                return Err(Error::Config(format!(
                    "grid file {} matches no grid of corpus {}",
                    path.display(),
                    corpus.name
                )));
            }
        }
    }
    let mut entries: Vec<Entry> = nested.into_iter().flatten().collect();
    add_refinement_checks(&mut entries);
    Ok(entries)
}

/// Runs one suite; each report comes with a depth-independent key.
pub fn run_suite(ctx: &WeightContext, suite: &SuiteSpec, seed: u64) -> Result<Vec<(String, SuiteReport)>> {
    let spec = ctx.spec();
    let mut out = Vec::new();
    match suite {
        SuiteSpec::Characterization { functionals } => {
            let profiles = BmoProfiles::new(ctx, &crate::generators::bmo_test_set(spec));
            for name in functionals {
                let y = parse_functional(name)?.build(ctx)?;
                out.push((name.clone(), verify_characterization(ctx, &y, &profiles)?));
            }
        }
        SuiteSpec::Genasym { functionals, p, functions, q, beta_trials } => {
            let tau = default_tau(&spec);
            let r_default = rh_exponent_from(ctx.ainfty_value(), tau);
            for fname in functions {
                let f = test_function(fname, &ctx.w)?;
                for name in functionals {
                    let fs = parse_functional(name)?;
                    let y = fs.build(ctx)?;
                    let (qq, beta) = match (&y, fs) {
                        (FunctionalY::RScale { r, .. }, _) => (r / (r - 1.0), Beta::Analytic(1.0)),
                        _ => {
                            let qq = q.unwrap_or(r_default / (r_default - 1.0));
                            let mut sampler = FamilySampler::new(spec, seed, vec![f.clone()]);
                            let b = estimate_beta(&y, &spec, qq, &mut sampler, *beta_trials);
                            (qq, Beta::Estimated(b))
                        }
                    };
                    let rep = verify_genasym(ctx, fname, &f, &y, qq, p, beta)?;
                    out.push((format!("{fname}|{name}"), rep));
                }
            }
        }
        SuiteSpec::JohnNirenberg { variant, p, functions } => {
            for fname in functions {
                let f = test_function(fname, &ctx.w)?;
                out.push((fname.clone(), verify_john_nirenberg(ctx, fname, &f, p, *variant)?));
            }
        }
        SuiteSpec::Bloom { part, exponents, functions } => {
            let part = if *part == 1 { BloomPart::One(exponents.clone()) } else { BloomPart::Two(exponents.clone()) };
            for fname in functions {
                let b = test_function(fname, &ctx.w)?;
                out.push((fname.clone(), verify_bloom(ctx, fname, &b, &part)?));
            }
        }
        SuiteSpec::Rhi { tau, c, variant } => {
            let v = parse_rh_variant(variant)?;
            let tau = tau.unwrap_or_else(|| default_tau(&spec));
            let a = match v {
                RhVariant::Strong => ctx.ainfty_value(),
                RhVariant::Weak => ctx.constant(&FunctionalY::doubled_mass(ctx.w.clone()), "weak")?.0,
            };
            let r = rh_exponent_from(a, tau);
            let check = rh_check(&ctx.w, r, *c, Family::Dyadic, v)?;
            let mut rep = SuiteReport {
                suite: format!("rhi-{variant}"),
                weight: ctx.name.clone(),
                functional: format!("tau={tau} c={c}"),
                ..Default::default()
            };
            rep.metrics.push(crate::verify::Metric { name: "A".into(), value: a });
            rep.metrics.push(crate::verify::Metric { name: "r".into(), value: r });
            rep.metrics.push(crate::verify::Metric { name: "cubes".into(), value: check.cubes as f64 });
            rep.checks.push(crate::verify::Check {
                name: "(⨍w^r)^{1/r}/(c⨍w)".into(),
                value: check.worst_ratio,
                bound: 1.0,
                hard: true,
            });
            rep.notes.push(format!("worst cube {}", check.worst));
            out.push((variant.clone(), rep));
        }
        SuiteSpec::Constants { kinds } => {
            let mut rep = SuiteReport {
                suite: "constants".into(),
                weight: ctx.name.clone(),
                ..Default::default()
            };
            for kind in kinds {
                let (head, arg) = match kind.split_once(':') {
                    Some((h, a)) => (h, Some(a)),
                    None => (kind.as_str(), None),
                };
                let num = |a: Option<&str>| -> Result<f64> {
                    a.and_then(|x| x.parse().ok())
                        .ok_or_else(|| Error::Config(format!("constant {kind:?} needs a numeric argument")))
                };
                let report = match head {
                    "ainfty" => ctx.ainfty.clone(),
                    "weak" => ainfty_y_with(&ctx.table, &FunctionalY::doubled_mass(ctx.w.clone()), "weak")?,
                    "a1" => a1_constant(&ctx.w)?,
                    "ap" => ap_constant(&ctx.w, num(arg)?)?.0,
                    "cp" => ainfty_y_with(&ctx.table, &FunctionalY::cp(ctx.w.clone(), num(arg)?)?, "cp")?,
                    _ => return Err(Error::Config(format!("unknown constant {kind:?}"))),
                };
                rep.metrics.push(crate::verify::Metric { name: format!("{kind}[dyadic]"), value: report.dyadic });
                if let Some(f) = report.full {
                    rep.metrics.push(crate::verify::Metric { name: format!("{kind}[full]"), value: f });
                }
            }
            out.push(("constants".into(), rep));
        }
    }
    Ok(out)
}

/// Records, for each generalized John–Nirenberg report, whether its empirical constant
/// stayed put or decreased relative to the next coarser grid of the same corpus.
fn add_refinement_checks(entries: &mut [Entry]) {
    let mut by_key: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, e) in entries.iter().enumerate() {
        if e.report.suite == "genasym" {
            by_key.entry(e.key.clone()).or_default().push(i);
        }
    }
    for idx in by_key.values() {
        let mut idx = idx.clone();
        idx.sort_by_key(|&i| entries[i].depth);
        for pair in idx.windows(2) {
            let (coarse, fine) = (pair[0], pair[1]);
            let (Some(a), Some(b)) = (entries[coarse].report.metric("c"), entries[fine].report.metric("c")) else {
                continue;
            };
            let name = format!("c(J={}) ≤ c(J={})", entries[fine].depth, entries[coarse].depth);
            entries[fine].report.checks.push(crate::verify::Check { name, value: b, bound: a, hard: false });
        }
    }
}

pub fn summarize(cfg: &Config, entries: &[Entry], started: Instant) -> RunSummary {
    let mut depths: Vec<u32> = cfg.corpora.iter().flat_map(|c| c.depths.iter().copied()).collect();
    depths.sort_unstable();
    depths.dedup();
    let hard_failures = entries
        .iter()
        .flat_map(|e| {
            e.report.hard_failures().into_iter().map(move |c| {
                format!(
                    "{} d={} J={} {} {} [{}]: {} = {:e} > {:e}",
                    e.corpus, e.dim, e.depth, e.report.suite, e.report.weight, e.report.functional, c.name, c.value, c.bound
                )
            })
        })
        .collect();
    RunSummary {
        suites: cfg.suites.len(),
        reports: entries.len(),
        hard_failures,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        depths,
    }
}

/// CSV summary, one row per (weight, suite, constant). Numbers carry 17 significant digits.
pub fn summary_csv(entries: &[Entry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["corpus", "d", "J", "weight", "suite", "functional", "constant", "value"])?;
    for e in entries {
        let r = &e.report;
        let rows = r
            .metrics
            .iter()
            .map(|m| (m.name.clone(), m.value))
            .chain(r.checks.iter().map(|c| (format!("check:{}", c.name), c.value)));
        for (name, value) in rows {
            w.write_record([
                e.corpus.as_str(),
                &e.dim.to_string(),
                &e.depth.to_string(),
                &r.weight,
                &r.suite,
                &r.functional,
                &name,
                &format!("{value:.16e}"),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct SuiteFile<'a> {
    suite: &'a str,
    spec: &'a SuiteSpec,
    entries: Vec<&'a Entry>,
}

/// Writes `NN-<suite>.json` per suite, `summary.csv` and `run.json` into `out`.
pub fn write_outputs(cfg: &Config, entries: &[Entry], summary: &RunSummary, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    for (i, s) in cfg.suites.iter().enumerate() {
        let file = SuiteFile {
            suite: s.name(),
            spec: s,
            entries: entries.iter().filter(|e| e.suite_index == i).collect(),
        };
        let path = out.join(format!("{i:02}-{}.json", s.name()));
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    }
    std::fs::write(out.join("summary.csv"), summary_csv(entries)?)?;
    std::fs::write(out.join("run.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

/// Loads, runs and writes; returns the summary. Config and IO problems are errors.
pub fn run_experiments(config: &Path, out: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    let cfg = Config::load(config)?;
    let base = config.parent().unwrap_or(Path::new("."));
    let entries = run_config(&cfg, base, opts)?;
    let summary = summarize(&cfg, &entries, started);
    write_outputs(&cfg, &entries, &summary, out)?;
    Ok(summary)
}
