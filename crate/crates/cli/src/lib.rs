//! Experiment runner behind the `occupancy` binary.
//!
//! Every subcommand turns a config into one or more named artifacts (a CSV
//! table and a JSON document each) plus verdict lines. Work items run on a
//! rayon pool, results are collected in input order, so output does not
//! depend on the number of threads.

pub mod config;
pub mod format;

use clap::{Parser, Subcommand, ValueEnum};
use config::ExperimentConfig;
use format::{num, opt_num, Table};
use occupancy_core::battery;
use occupancy_core::bounds::bound_suite_with;
use occupancy_core::estimate::{bias_exact, concentration_interval, Estimator, IntervalKind};
use occupancy_core::exact::{exact_ek_certified, exact_em_certified};
use occupancy_core::metric::{bkgen_upper, exact_em_delta, m_delta_empirical, MetricModel, MetricSpec};
use occupancy_core::poisson::poisson_suite;
use occupancy_core::report::SANDWICH_SLACK;
use occupancy_core::simulate::{coverage_experiment, monte_carlo, SeedSpec};
use occupancy_core::{BoundReport, Distribution, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Io(String),
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Compute(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Compute(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<occupancy_core::Error> for CliError {
    fn from(e: occupancy_core::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "occupancy", version, about = "Occupancy counts and masses: exact values, bounds, simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; reports go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact E M_{n,r} and E K_{n,r}.
    Exact,
    /// Every bound next to the exact value, with sandwich verdicts.
    Bounds,
    /// Monte Carlo means and interval coverage.
    Simulate,
    /// Estimator biases and concentration intervals.
    Estimate,
    /// Poissonized exact values and bounds.
    Poisson,
    /// δ-neighbourhood values and the covering bound.
    Metric,
    /// The full test battery with built-in settings.
    Suite,
}

/// A named report in both output formats.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: &'static str,
    pub table: Table,
    pub json: serde_json::Value,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// One line per verdict group.
    pub summary: Vec<String>,
    pub failed: bool,
}

impl Outcome {
    fn add(&mut self, other: Outcome) {
        self.artifacts.extend(other.artifacts);
        self.summary.extend(other.summary);
        self.failed |= other.failed;
    }
}

fn to_json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> Result<U, CliError> + Sync + Send) -> Result<Vec<U>, CliError> {
    items.par_iter().map(f).collect()
}

fn need_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config is required for this subcommand".into()))?;
    ExperimentConfig::load(path)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Suite => {
            let cfg = match &cli.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => suite_config(),
            };
            run_all(&cfg, cli.seed.unwrap_or(cfg.seed))
        }
        cmd => {
            let cfg = need_config(cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            match cmd {
                Command::Exact => run_exact(&cfg),
                Command::Bounds => run_bounds(&cfg),
                Command::Simulate => run_simulate(&cfg, seed),
                Command::Estimate => run_estimate(&cfg),
                Command::Poisson => run_poisson(&cfg),
                Command::Metric => run_metric(&cfg, seed),
                Command::Suite => unreachable!(),
            }
        }
    })
}

/// Settings of the `suite` subcommand.
pub fn suite_config() -> ExperimentConfig {
    ExperimentConfig {
        distributions: battery::distributions().iter().map(|d| d.spec()).collect(),
        n: battery::BATTERY_N.to_vec(),
        r: battery::BATTERY_R.to_vec(),
        bounds: Default::default(),
        estimators: vec![Estimator::Turing],
        intervals: None,
        monte_carlo: Some(config::McConfig { replicates: 1000 }),
        coverage: Some(config::CoverageConfig { kind: IntervalKind::Cbmm3, t: vec![3.0], replicates: 2000 }),
        poisson: Some(config::PoissonConfig { lambda: vec![2.0, 10.0, 100.0, 1000.0], r: vec![0, 1, 2] }),
        metric: Some(config::MetricConfig {
            models: battery::metric_specs(),
            n: battery::METRIC_N.to_vec(),
            delta: battery::METRIC_DELTAS.to_vec(),
            r: vec![0],
            lambda: None,
            candidates: vec![],
            replicates: 0,
            probes: 1000,
        }),
        seed: 0,
    }
}

/// Everything the config asks for.
pub fn run_all(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let mut out = run_bounds(cfg)?;
    if cfg.monte_carlo.is_some() || cfg.coverage.is_some() {
        out.add(run_simulate(cfg, seed)?);
    }
    if !cfg.estimators.is_empty() || cfg.intervals.is_some() {
        out.add(run_estimate(cfg)?);
    }
    if cfg.poisson.is_some() {
        out.add(run_poisson(cfg)?);
    }
    if cfg.metric.is_some() {
        out.add(run_metric(cfg, seed)?);
    }
    Ok(out)
}

fn points(cfg: &ExperimentConfig) -> Result<Vec<(Distribution, u64, u64)>, CliError> {
    let ds = cfg.distributions()?;
    Ok(ds.iter().flat_map(|d| cfg.nr_pairs().into_iter().map(move |(n, r)| (d.clone(), n, r))).collect())
}

#[derive(Debug, Serialize)]
struct ExactRow {
    dist: String,
    family_params: String,
    n: u64,
    r: u64,
    exact_em: f64,
    em_certificate: f64,
    #[serde(with = "occupancy_core::report::ext_real")]
    exact_ek: f64,
    #[serde(with = "occupancy_core::report::ext_real")]
    ek_certificate: f64,
}

pub fn run_exact(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let rows = par_map(&points(cfg)?, |(d, n, r)| {
        let em = exact_em_certified(d, *n, *r)?;
        let ek = exact_ek_certified(d, *n, *r)?;
        Ok(ExactRow {
            dist: d.label(),
            family_params: d.family_params(),
            n: *n,
            r: *r,
            exact_em: em.value,
            em_certificate: em.certificate,
            exact_ek: ek.value,
            ek_certificate: ek.certificate,
        })
    })?;
    let mut t = Table::new(&["dist", "family_params", "n", "r", "exact_EM", "EM_certificate", "exact_EK", "EK_certificate"]);
    for x in &rows {
        t.push(vec![
            x.dist.clone(),
            x.family_params.clone(),
            x.n.to_string(),
            x.r.to_string(),
            num(x.exact_em),
            num(x.em_certificate),
            num(x.exact_ek),
            num(x.ek_certificate),
        ]);
    }
    Ok(Outcome {
        artifacts: vec![Artifact { name: "exact", table: t, json: to_json(&rows) }],
        summary: vec![format!("exact: {} points", rows.len())],
        failed: false,
    })
}

pub const BOUNDS_COLUMNS: [&str; 10] =
    ["dist", "family_params", "n", "r", "exact", "bound_source", "bound_value", "optimizer_eps", "applicable", "verdict"];

pub fn bounds_table(reports: &[BoundReport]) -> Table {
    let mut t = Table::new(&BOUNDS_COLUMNS);
    for rep in reports {
        for b in &rep.bounds {
            t.push(vec![
                rep.dist.clone(),
                rep.family_params.clone(),
                rep.n.to_string(),
                rep.r.to_string(),
                num(rep.exact),
                b.source.clone(),
                num(b.value),
                opt_num(b.optimizer_eps),
                b.applicable.to_string(),
                b.verdict.as_str().to_string(),
            ]);
        }
    }
    t
}

pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let reports = par_map(&points(cfg)?, |(d, n, r)| Ok(bound_suite_with(d, *n, *r, &cfg.bounds)?))?;
    let fails: Vec<String> = reports
        .iter()
        .flat_map(|rep| {
            rep.bounds
                .iter()
                .filter(|b| b.verdict == Verdict::Fail)
                .map(move |b| format!("  FAIL {} n={} r={} {}: {} vs exact {}", rep.dist, rep.n, rep.r, b.source, num(b.value), num(rep.exact)))
        })
        .collect();
    let checked: usize = reports.iter().map(|r| r.bounds.iter().filter(|b| b.verdict == Verdict::Pass).count()).sum();
    let mut summary = vec![format!(
        "bounds: {} points, {} checked bounds, {} violations: {}",
        reports.len(),
        checked,
        fails.len(),
        if fails.is_empty() { "pass" } else { "fail" }
    )];
    summary.extend(fails.iter().cloned());
    Ok(Outcome {
        artifacts: vec![Artifact { name: "bounds", table: bounds_table(&reports), json: to_json(&reports) }],
        summary,
        failed: !fails.is_empty(),
    })
}

pub const MC_COLUMNS: [&str; 10] = ["dist", "n", "r", "N", "mean_K", "se_K", "mean_M", "se_M", "exact_EM", "z_score"];

pub fn run_simulate(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let seed = SeedSpec::new(seed);
    let ds = cfg.distributions()?;
    let mut out = Outcome::default();
    if let Some(mc) = &cfg.monte_carlo {
        let tasks: Vec<(Distribution, u64)> = ds.iter().flat_map(|d| cfg.n.iter().map(move |&n| (d.clone(), n))).collect();
        let results = par_map(&tasks, |(d, n)| {
            let rs: Vec<u64> = cfg.r.iter().copied().filter(|&r| r <= *n).collect();
            Ok(monte_carlo(d, *n, &rs, mc.replicates, seed)?)
        })?;
        let mut t = Table::new(&MC_COLUMNS);
        let mut worst: f64 = 0.0;
        for row in results.iter().flat_map(|r| &r.rows) {
            if row.z_score.is_finite() {
                worst = worst.max(row.z_score.abs());
            }
            t.push(vec![
                row.dist.clone(),
                row.n.to_string(),
                row.r.to_string(),
                row.replicates.to_string(),
                num(row.mean_k),
                num(row.se_k),
                num(row.mean_m),
                num(row.se_m),
                num(row.exact_em),
                num(row.z_score),
            ]);
        }
        out.summary.push(format!("monte_carlo: {} rows, largest |z| = {}", t.rows.len(), num(worst)));
        out.artifacts.push(Artifact { name: "monte_carlo", table: t, json: to_json(&results) });
    }
    if let Some(cov) = &cfg.coverage {
        let tasks: Vec<(Distribution, u64, f64)> = ds
            .iter()
            .flat_map(|d| cfg.n.iter().flat_map(move |&n| cov.t.iter().map(move |&t| (d.clone(), n, t))))
            .collect();
        let results = par_map(&tasks, |(d, n, t)| {
            let iv = concentration_interval(cov.kind, d, *n, 0, *t)?;
            if !iv.applicable {
                return Ok(None);
            }
            Ok(Some(coverage_experiment(d, *n, *t, cov.replicates, seed, cov.kind)?))
        })?;
        let results: Vec<_> = results.into_iter().flatten().collect();
        let mut t = Table::new(&[
            "dist",
            "n",
            "interval",
            "t",
            "lower",
            "upper",
            "confidence_floor",
            "N",
            "coverage",
            "coverage_lower_side",
            "coverage_upper_side",
            "meets_floor",
        ]);
        let mut short = 0;
        for c in &results {
            let floor = c.interval.confidence_floor;
            let slack = 3.0 * (floor * (1.0 - floor) / c.replicates as f64).sqrt();
            let ok = c.coverage >= floor - slack;
            short += usize::from(!ok);
            t.push(vec![
                c.dist.clone(),
                c.n.to_string(),
                c.interval.source.clone(),
                num(c.interval.t),
                num(c.interval.lower),
                num(c.interval.upper),
                num(floor),
                c.replicates.to_string(),
                num(c.coverage),
                num(c.coverage_lower_side),
                num(c.coverage_upper_side),
                ok.to_string(),
            ]);
        }
        out.summary.push(format!("coverage: {} rows, {} below floor minus 3 sigma", results.len(), short));
        out.artifacts.push(Artifact { name: "coverage", table: t, json: to_json(&results) });
    }
    if out.artifacts.is_empty() {
        return Err(CliError::Usage("simulate needs a monte_carlo or coverage section".into()));
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct BiasRow {
    dist: String,
    n: u64,
    r: u64,
    estimator: Estimator,
    bias: f64,
}

pub fn run_estimate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let pts = points(cfg)?;
    let mut out = Outcome::default();
    let estimators = if cfg.estimators.is_empty() { vec![Estimator::Turing] } else { cfg.estimators.clone() };
    let tasks: Vec<(Distribution, u64, u64, Estimator)> = pts
        .iter()
        .flat_map(|(d, n, r)| estimators.iter().map(move |&e| (d.clone(), *n, *r, e)))
        .filter(|(_, n, r, e)| match e {
            Estimator::Turing => *n >= 2,
            // the modified estimator targets M_{n,0}
            Estimator::Modified(s) => *r == 0 && *s >= 1 && s <= n,
        })
        .collect();
    let rows = par_map(&tasks, |(d, n, r, e)| {
        Ok(BiasRow { dist: d.label(), n: *n, r: *r, estimator: *e, bias: bias_exact(d, *n, *r, *e)? })
    })?;
    let mut t = Table::new(&["dist", "n", "r", "estimator", "bias"]);
    for b in &rows {
        let name = match b.estimator {
            Estimator::Turing => "turing".to_string(),
            Estimator::Modified(s) => format!("modified(s={s})"),
        };
        t.push(vec![b.dist.clone(), b.n.to_string(), b.r.to_string(), name, num(b.bias)]);
    }
    out.summary.push(format!("estimate: {} bias rows", rows.len()));
    out.artifacts.push(Artifact { name: "bias", table: t, json: to_json(&rows) });
    if let Some(iv) = &cfg.intervals {
        let tasks: Vec<(Distribution, u64, u64, IntervalKind, f64)> = pts
            .iter()
            .flat_map(|(d, n, r)| iv.kinds.iter().flat_map(move |&k| iv.t.iter().map(move |&t| (d.clone(), *n, *r, k, t))))
            .filter(|(_, _, r, k, _)| *k == IntervalKind::Bbo15 || *r == 0)
            .collect();
        let ivs = par_map(&tasks, |(d, n, r, k, t)| Ok((d.label(), *n, *r, concentration_interval(*k, d, *n, *r, *t)?)))?;
        let mut t = Table::new(&["dist", "n", "r", "interval", "target", "t", "lower", "upper", "confidence_floor", "applicable"]);
        for (dist, n, r, i) in &ivs {
            t.push(vec![
                dist.clone(),
                n.to_string(),
                r.to_string(),
                i.source.clone(),
                i.target.clone(),
                num(i.t),
                num(i.lower),
                num(i.upper),
                num(i.confidence_floor),
                i.applicable.to_string(),
            ]);
        }
        let json: Vec<_> = ivs.iter().map(|(d, n, r, i)| serde_json::json!({"dist": d, "n": n, "r": r, "interval": i})).collect();
        out.summary.push(format!("intervals: {} rows", ivs.len()));
        out.artifacts.push(Artifact { name: "intervals", table: t, json: serde_json::Value::Array(json) });
    }
    Ok(out)
}

pub fn run_poisson(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = cfg.poisson.as_ref().ok_or_else(|| CliError::Usage("poisson needs a poisson section".into()))?;
    let tasks: Vec<(Distribution, f64, u64)> = cfg
        .distributions()?
        .into_iter()
        .flat_map(|d| p.lambda.iter().flat_map(move |&l| p.r.iter().map({
            let d = d.clone();
            move |&r| (d.clone(), l, r)
        })))
        .collect();
    let reports = par_map(&tasks, |(d, l, r)| Ok((d.family_params(), poisson_suite(d, *l, *r)?)))?;
    let mut t = Table::new(&["dist", "family_params", "lambda", "r", "exact", "bound_source", "bound_value", "optimizer_eps", "applicable", "verdict"]);
    let mut fails = 0;
    for (fp, rep) in &reports {
        for b in &rep.bounds {
            fails += usize::from(b.verdict == Verdict::Fail);
            t.push(vec![
                rep.dist.clone(),
                fp.clone(),
                num(rep.lambda),
                rep.r.to_string(),
                num(rep.exact),
                b.source.clone(),
                num(b.value),
                opt_num(b.optimizer_eps),
                b.applicable.to_string(),
                b.verdict.as_str().to_string(),
            ]);
        }
    }
    let reports: Vec<_> = reports.into_iter().map(|p| p.1).collect();
    Ok(Outcome {
        artifacts: vec![Artifact { name: "poisson", table: t, json: to_json(&reports) }],
        summary: vec![format!(
            "poisson: {} points, {} violations: {}",
            reports.len(),
            fails,
            if fails == 0 { "pass" } else { "fail" }
        )],
        failed: fails > 0,
    })
}

#[derive(Debug, Serialize)]
struct MetricRow {
    model: String,
    n: u64,
    delta: f64,
    r: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    exact: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    bkgen: Option<occupancy_core::BoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_se: Option<f64>,
    verdict: Verdict,
}

pub fn run_metric(cfg: &ExperimentConfig, seed: u64) -> Result<Outcome, CliError> {
    let m = cfg.metric.as_ref().ok_or_else(|| CliError::Usage("metric needs a metric section".into()))?;
    let seed = SeedSpec::new(seed);
    let mut tasks: Vec<(MetricSpec, u64, f64, u64)> = Vec::new();
    for s in &m.models {
        for &n in &m.n {
            for &delta in &m.delta {
                for &r in m.r.iter().filter(|&&r| m.lambda.is_some() || r <= n) {
                    tasks.push((s.clone(), n, delta, r));
                }
            }
        }
    }
    let rows = par_map(&tasks, |(spec, n, delta, r)| {
        let model = MetricModel::from_spec(spec)?;
        let exact = exact_em_delta(&model, *n, *delta, *r, m.lambda)?;
        let bkgen = if *r == 0 && m.lambda.is_none() {
            let mut b = bkgen_upper(&model, *n, *delta, &m.candidates)?;
            b.judge(exact);
            Some(b)
        } else {
            None
        };
        let (mc_mean, mc_se) = if m.replicates >= 2 && m.lambda.is_none() {
            let vals: Vec<f64> = (0..m.replicates)
                .map(|i| {
                    let sample = model.sample(*n as usize, &mut seed.rng(i))?;
                    m_delta_empirical(&model, &sample, *delta, *r, m.probes, SeedSpec::new(seed.master_seed ^ 0x5eed), i)
                })
                .collect::<Result<_, _>>()?;
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (Some(mean), Some((var / k).sqrt()))
        } else {
            (None, None)
        };
        let verdict = match &bkgen {
            Some(b) if b.value < exact - SANDWICH_SLACK => Verdict::Fail,
            Some(_) => Verdict::Pass,
            None => Verdict::Unchecked,
        };
        Ok(MetricRow { model: model.label(), n: *n, delta: *delta, r: *r, lambda: m.lambda, exact, bkgen, mc_mean, mc_se, verdict })
    })?;
    let mut t = Table::new(&["model", "n", "delta", "r", "lambda", "exact", "bkgen", "mc_mean", "mc_se", "verdict"]);
    for x in &rows {
        t.push(vec![
            x.model.clone(),
            x.n.to_string(),
            num(x.delta),
            x.r.to_string(),
            opt_num(x.lambda),
            num(x.exact),
            opt_num(x.bkgen.as_ref().map(|b| b.value)),
            opt_num(x.mc_mean),
            opt_num(x.mc_se),
            x.verdict.as_str().to_string(),
        ]);
    }
    let fails = rows.iter().filter(|x| x.verdict == Verdict::Fail).count();
    Ok(Outcome {
        artifacts: vec![Artifact { name: "metric", table: t, json: to_json(&rows) }],
        summary: vec![format!("metric: {} points, {} violations: {}", rows.len(), fails, if fails == 0 { "pass" } else { "fail" })],
        failed: fails > 0,
    })
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn render(a: &Artifact, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => a.table.to_csv(),
        Format::Json => {
            let mut v = serde_json::to_vec_pretty(&a.json).expect("json values serialize");
            v.push(b'\n');
            v
        }
    }
}

/// Write the artifacts and the summary to `out`, or to stdout.
pub fn emit(outcome: &Outcome, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut summary = outcome.summary.join("\n");
    summary.push('\n');
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
            for a in &outcome.artifacts {
                let path = dir.join(format!("{}.{ext}", a.name));
                std::fs::write(&path, render(a, format)).map_err(|e| io(&path, e))?;
            }
            let path = dir.join("summary.txt");
            std::fs::write(&path, &summary).map_err(|e| io(&path, e))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for (i, a) in outcome.artifacts.iter().enumerate() {
                if outcome.artifacts.len() > 1 {
                    if i > 0 {
                        writeln!(stdout).map_err(|e| io(Path::new("stdout"), e))?;
                    }
                    writeln!(stdout, "# {}", a.name).map_err(|e| io(Path::new("stdout"), e))?;
                }
                stdout.write_all(&render(a, format)).map_err(|e| io(Path::new("stdout"), e))?;
            }
        }
    }
    eprint!("{summary}");
    Ok(())
}

/// Run and emit; returns the process exit status.
pub fn main_with(cli: &Cli) -> i32 {
    let result = run(cli).and_then(|o| emit(&o, cli.out.as_deref(), cli.format).map(|_| o));
    match result {
        Ok(o) if o.failed => 1,
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn bounds_row_count() {
        let c = cfg(r#"{"distributions":[{"family":"uniform","m":10},{"family":"zipf","alpha":0.5}],"n":[10,100],"r":[0,1,2]}"#);
        let o = run_bounds(&c).unwrap();
        let per_point = bound_suite_with(&Distribution::uniform(10).unwrap(), 10, 0, &Default::default()).unwrap().bounds.len();
        assert_eq!(o.artifacts[0].table.rows.len(), 2 * 2 * 3 * per_point);
        assert!(!o.failed);
    }

    #[test]
    fn json_round_trip() {
        let c = cfg(r#"{"distributions":[{"family":"geometric","q":0.5}],"n":[10],"r":[0,2]}"#);
        let o = run_bounds(&c).unwrap();
        let text = String::from_utf8(render(&o.artifacts[0], Format::Json)).unwrap();
        let back: Vec<BoundReport> = serde_json::from_str(&text).unwrap();
        let direct: Vec<BoundReport> =
            c.nr_pairs().iter().map(|&(n, r)| bound_suite_with(&Distribution::geometric(0.5).unwrap(), n, r, &c.bounds).unwrap()).collect();
        assert_eq!(back, direct);
    }

    #[test]
    fn metric_rows() {
        let c = cfg(r#"{"metric":{"models":[{"space":"segment","a":0,"b":1,"law":"uniform"}],"n":[1,100],"delta":[0.5,0.1],
            "candidates":[{"x":0.5,"t":1.0,"rho":0.05}]}}"#);
        let o = run_metric(&c, 0).unwrap();
        let t = &o.artifacts[0].table;
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[0][5], "0.25");
        assert!(!o.failed);
    }
}
