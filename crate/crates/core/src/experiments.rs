//! Experiment registry, configuration and the runner that writes artifacts.
//!
//! A run is a pure function of its resolved configuration: every replica
//! draws from the stream keyed by `(seed, experiment, n, replica)` and records
//! are collected in replica order, so the worker count never changes output.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::besq::{besq_transition, euler_maruyama_endpoint};
use crate::crt::{
    expected_atoms_above, sample_poisson_components, sample_spine_atoms, sample_williams_skeleton,
    snake_hits_zero, snake_integral, snake_integral_target, CrtError,
};
use crate::gaussian_field::{
    admissible_lambdas, bdnp_bound, build_sigma_matrices, check_isomorphism, gff_max_expectation,
    mgf_determinant, random_configuration, FieldError, MIN_GFF_REPLICAS,
};
use crate::rand_tree::{
    enumerate_rooted_trees, sample_conditioned_gw, DiscreteTree, LawKind, OffspringLaw, TreeError,
    TreeMetricIndex,
};
use crate::rng::{replicate, Streams};
use crate::stats::{ks_distance, summarize, survival_tail_fit, Estimate, StatsError, SummaryStats};
use crate::walk::{
    expected_cover_exact_small, mgf_local_times_exact, run_cover, WalkError, WalkMode,
    MAX_EXACT_COVER_N,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Crt(#[from] CrtError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl ExperimentError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) | Self::UnknownExperiment(_) => "config",
            Self::Tree(TreeError::UnsupportedSize { .. }) => "unsupported-size",
            Self::Walk(WalkError::BudgetExceeded { .. }) | Self::Tree(TreeError::BudgetExceeded { .. }) => {
                "budget"
            }
            Self::Tree(_) | Self::Walk(_) | Self::Field(_) | Self::Crt(_) | Self::Stats(_) => "runtime",
            Self::Io { .. } => "io",
        }
    }

    pub fn report(&self) -> Value {
        json!({ "error": self.kind(), "message": self.to_string() })
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn io_err(path: &Path, e: impl fmt::Display) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CoverScaling,
    AldousProbe,
    CoverReturnMoments,
    RayknightMgf,
    Isomorphism,
    BesqValidate,
    WilliamsStats,
    ComponentPoisson,
    SnakeIntegral,
    CoveringBound,
    ConcentrationTail,
    SmallOracleCrosscheck,
}

const REGISTRY: [Experiment; 12] = [
    Experiment::CoverScaling,
    Experiment::AldousProbe,
    Experiment::CoverReturnMoments,
    Experiment::RayknightMgf,
    Experiment::Isomorphism,
    Experiment::BesqValidate,
    Experiment::WilliamsStats,
    Experiment::ComponentPoisson,
    Experiment::SnakeIntegral,
    Experiment::CoveringBound,
    Experiment::ConcentrationTail,
    Experiment::SmallOracleCrosscheck,
];

pub fn registry() -> &'static [Experiment] {
    &REGISTRY
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::CoverScaling => "cover-scaling",
            Self::AldousProbe => "aldous-probe",
            Self::CoverReturnMoments => "cover-return-moments",
            Self::RayknightMgf => "rayknight-mgf",
            Self::Isomorphism => "isomorphism",
            Self::BesqValidate => "besq-validate",
            Self::WilliamsStats => "williams-stats",
            Self::ComponentPoisson => "component-poisson",
            Self::SnakeIntegral => "snake-integral",
            Self::CoveringBound => "covering-bound",
            Self::ConcentrationTail => "concentration-tail",
            Self::SmallOracleCrosscheck => "small-oracle-crosscheck",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::CoverScaling => "laws of sigma n^-3/2 tau_cov across sizes, with KS between neighbours",
            Self::AldousProbe => "mean of the rescaled cover-and-return time against 6 sqrt(2 pi)",
            Self::CoverReturnMoments => "moments p = 1, 2, 4 of the rescaled cover time across sizes",
            Self::RayknightMgf => "determinant formula against the Feynman-Kac oracle on all small trees",
            Self::Isomorphism => "moments of both sides of the local time / field identity",
            Self::BesqValidate => "exact BESQ transitions against closed forms and Euler-Maruyama",
            Self::WilliamsStats => "spine atom counts, squared heights and generation heights",
            Self::ComponentPoisson => "small-component band counts and domination",
            Self::SnakeIntegral => "zero-hit probability of the tip field and its integral",
            Self::CoveringBound => "chaining functional and GFF maximum against cover times",
            Self::ConcentrationTail => "survival tail of tau_cov / mean on a fixed tree",
            Self::SmallOracleCrosscheck => "Monte Carlo cover times against the exact subset oracle",
        }
    }

    fn is_cover(self) -> bool {
        matches!(self, Self::CoverScaling | Self::AldousProbe | Self::CoverReturnMoments)
    }

    fn uses_sizes(self) -> bool {
        !matches!(
            self,
            Self::BesqValidate | Self::WilliamsStats | Self::ComponentPoisson | Self::SnakeIntegral
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self> {
        REGISTRY
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::UnknownExperiment(s.to_string()))
    }
}

/// Config file as written by the user; absent fields take the experiment's
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<Experiment>,
    pub law: Option<LawKind>,
    pub sizes: Option<Vec<usize>>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub mode: Option<WalkMode>,
    pub grid: Option<usize>,
    pub v_grid: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub quenched: Option<bool>,
    pub walks: Option<usize>,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub law: LawKind,
    /// Tree sizes.
    pub sizes: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    pub mode: WalkMode,
    /// Excursion grid size, or Euler steps per unit time for `besq-validate`.
    pub grid: usize,
    pub v_grid: Vec<f64>,
    pub out: Option<PathBuf>,
    /// One fixed tree per size instead of a fresh tree per replica.
    pub quenched: bool,
    /// Walks per tree where an experiment needs an inner average.
    pub walks: usize,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

pub fn default_v_grid() -> Vec<f64> {
    (0..8).map(|i| 0.125 * f64::from(1u32 << i)).collect()
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        use Experiment::*;
        let (sizes, replicas): (Vec<usize>, usize) = match experiment {
            CoverScaling | CoverReturnMoments => (vec![500, 1000, 2000, 4000], 1000),
            AldousProbe => (vec![4000], 1000),
            RayknightMgf => ((2..=8).collect(), 5),
            Isomorphism => (vec![8, 16, 24, 32], 10_000),
            BesqValidate => (Vec::new(), 10_000),
            WilliamsStats | ComponentPoisson => (Vec::new(), 10_000),
            SnakeIntegral => (Vec::new(), 2000),
            CoveringBound => (vec![100, 200, 400, 800], 10),
            ConcentrationTail => (vec![2000], 10_000),
            SmallOracleCrosscheck => ((3..=8).collect(), 10_000),
        };
        let grid = match experiment {
            BesqValidate => 10_000,
            _ => 1 << 12,
        };
        Self {
            experiment,
            law: LawKind::Poisson1,
            sizes,
            replicas,
            seed: DEFAULT_SEED,
            mode: WalkMode::DISCRETE,
            grid,
            v_grid: default_v_grid(),
            out: None,
            quenched: experiment == ConcentrationTail,
            walks: 20,
        }
    }

    /// Overlays `file` on the defaults of `experiment` (or of the file's own
    /// experiment when none is given) and validates the result.
    pub fn resolve(file: ConfigFile, experiment: Option<Experiment>) -> Result<Self> {
        let experiment = match (experiment, file.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(ExperimentError::Config(format!(
                    "config names experiment {b} but {a} was requested"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(ExperimentError::Config("no experiment given".into())),
        };
        let d = Self::defaults(experiment);
        let c = Self {
            experiment,
            law: file.law.unwrap_or(d.law),
            sizes: file.sizes.unwrap_or(d.sizes),
            replicas: file.replicas.unwrap_or(d.replicas),
            seed: file.seed.unwrap_or(d.seed),
            mode: file.mode.unwrap_or(d.mode),
            grid: file.grid.unwrap_or(d.grid),
            v_grid: file.v_grid.unwrap_or(d.v_grid),
            out: file.out.or(d.out),
            quenched: file.quenched.unwrap_or(d.quenched),
            walks: file.walks.unwrap_or(d.walks),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_json(text: &str, experiment: Option<Experiment>) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        Self::resolve(file, experiment)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if self.experiment.uses_sizes() && self.sizes.is_empty() {
            return bad(format!("{} needs a nonempty sizes list", self.experiment));
        }
        if self.sizes.contains(&0) {
            return bad("sizes must be positive".into());
        }
        OffspringLaw::new(self.law.clone())?;
        match self.experiment {
            Experiment::RayknightMgf if self.sizes.iter().any(|&n| n > 10) => {
                bad("rayknight-mgf enumerates all trees; sizes must be at most 10".into())
            }
            Experiment::SmallOracleCrosscheck if self.sizes.iter().any(|&n| n > MAX_EXACT_COVER_N) => {
                bad(format!("small-oracle-crosscheck sizes must be at most {MAX_EXACT_COVER_N}"))
            }
            Experiment::CoveringBound if self.sizes.iter().any(|&n| n < 4) => {
                bad("covering-bound sizes must be at least 4".into())
            }
            Experiment::SnakeIntegral
                if self.v_grid.is_empty()
                    || self.v_grid[0] <= 0.0
                    || self.v_grid.windows(2).any(|w| w[1] <= w[0]) =>
            {
                bad("v_grid must be positive and strictly increasing".into())
            }
            Experiment::SnakeIntegral if self.grid < 2 => bad("grid must be at least 2".into()),
            Experiment::BesqValidate if self.grid == 0 => bad("grid must be positive".into()),
            Experiment::CoveringBound if self.walks == 0 => bad("walks must be positive".into()),
            _ => Ok(()),
        }
    }
}

/// One replica's raw outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub experiment: Experiment,
    pub n: usize,
    pub replica: u64,
    /// Seed of the replica's generator.
    pub stream: u64,
    pub outputs: BTreeMap<String, f64>,
}

impl ReplicaRecord {
    fn new(experiment: Experiment, n: usize, replica: u64, stream: u64) -> Self {
        Self {
            experiment,
            n,
            replica,
            stream,
            outputs: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.outputs.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.outputs.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub statistic: String,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub groups: Vec<GroupSummary>,
    pub diagnostics: BTreeMap<String, Value>,
}

impl RunSummary {
    pub fn group(&self, n: usize, statistic: &str) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.n == n && g.statistic == statistic)
    }

    pub fn diagnostic(&self, key: &str) -> Option<&Value> {
        self.diagnostics.get(key)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<ReplicaRecord>,
    pub summary: RunSummary,
}

/// Scaling constants for a law: `a_n = sqrt(n) / (2 sigma)`, `b_n^V = n`,
/// `b_n^C = 2n`, and the walk time scale `a_n b_n^C = n^{3/2} / sigma`.
pub fn derived_parameters(config: &ExperimentConfig) -> Result<Value> {
    let law = OffspringLaw::new(config.law.clone())?;
    let sigma = law.sigma();
    let per_n: Vec<Value> = config
        .sizes
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let a = nf.sqrt() / (2.0 * sigma);
            json!({
                "n": n,
                "a_n": a,
                "b_n_variable": nf,
                "b_n_constant": 2.0 * nf,
                "time_scale": a * 2.0 * nf,
            })
        })
        .collect();
    Ok(json!({
        "sigma": sigma,
        "variance": law.variance(),
        "sizes": per_n,
    }))
}

/// Runs the experiment on the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.experiment {
        e if e.is_cover() => cover_family(config),
        Experiment::RayknightMgf => rayknight_mgf(config),
        Experiment::Isomorphism => isomorphism(config),
        Experiment::BesqValidate => besq_validate(config),
        Experiment::WilliamsStats => williams_stats(config),
        Experiment::ComponentPoisson => component_poisson(config),
        Experiment::SnakeIntegral => snake(config),
        Experiment::CoveringBound => covering_bound(config),
        Experiment::ConcentrationTail => concentration_tail(config),
        Experiment::SmallOracleCrosscheck => small_oracle(config),
        _ => unreachable!("cover experiments handled above"),
    }
}

/// Runs the experiment on a dedicated pool of `workers` threads.
pub fn execute_with_workers(config: &ExperimentConfig, workers: usize) -> Result<RunOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| execute(config))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub workers: usize,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub derived: Value,
    pub files: Vec<&'static str>,
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const DISTRIBUTION_FILE: &str = "distribution.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Executes `config` and writes all artifacts into `dir`.
pub fn run(config: &ExperimentConfig, dir: &Path, workers: usize) -> Result<RunOutput> {
    let started = unix_ms();
    let output = execute_with_workers(config, workers)?;
    let finished = unix_ms();
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    };
    write(RECORDS_FILE, records_jsonl(&output.records)?)?;
    write(SUMMARY_FILE, to_json_pretty(&output.summary)?)?;
    write(DISTRIBUTION_FILE, distribution_csv(&output.summary))?;
    let manifest = RunManifest {
        tool: "crtcover",
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        master_seed: config.seed,
        workers,
        started_unix_ms: started,
        finished_unix_ms: finished,
        derived: derived_parameters(config)?,
        files: vec![RECORDS_FILE, SUMMARY_FILE, DISTRIBUTION_FILE, MANIFEST_FILE],
    };
    write(MANIFEST_FILE, to_json_pretty(&manifest)?)?;
    Ok(output)
}

/// Floats with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>) {
    let pad = |out: &mut String, level: usize| {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', 2 * level));
    };
    match v {
        Value::Number(num) => match (num.as_u64(), num.as_i64(), num.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (_, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&format_float(f)),
            _ => out.push_str(&num.to_string()),
        },
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(l) = indent {
                    pad(out, l + 1);
                }
                write_value(out, item, indent.map(|l| l + 1));
            }
            if let (Some(l), false) = (indent, items.is_empty()) {
                pad(out, l);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(l) = indent {
                    pad(out, l + 1);
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, item, indent.map(|l| l + 1));
            }
            if let (Some(l), false) = (indent, map.is_empty()) {
                pad(out, l);
            }
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| ExperimentError::Config(e.to_string()))
}

pub fn to_json_compact<T: Serialize>(v: &T) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, &to_value(v)?, None);
    Ok(out)
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, &to_value(v)?, Some(0));
    out.push('\n');
    Ok(out)
}

pub fn records_jsonl(records: &[ReplicaRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&to_json_compact(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "experiment,n,statistic,count,mean,stderr,q05,q50,q95";

pub fn distribution_csv(summary: &RunSummary) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for g in &summary.groups {
        let q = |l: f64| format_float(g.stats.q(l).unwrap_or(f64::NAN));
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            summary.experiment,
            g.n,
            g.statistic,
            g.stats.count,
            format_float(g.stats.mean),
            format_float(g.stats.stderr),
            q(0.05),
            q(0.5),
            q(0.95)
        ));
    }
    out
}

fn collect<T>(rows: Vec<Result<T>>) -> Result<Vec<T>> {
    rows.into_iter().collect()
}

fn group(n: usize, statistic: &str, values: &[f64]) -> Result<GroupSummary> {
    Ok(GroupSummary {
        n,
        statistic: statistic.to_string(),
        stats: summarize(values)?,
    })
}

fn column(records: &[ReplicaRecord], key: &str) -> Vec<f64> {
    records.iter().filter_map(|r| r.get(key)).collect()
}

fn estimate_json(e: &Estimate) -> Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "count": e.count })
}

fn law_of(config: &ExperimentConfig) -> Result<OffspringLaw> {
    Ok(OffspringLaw::new(config.law.clone())?)
}

/// `6 sqrt(2 pi)`, the conjectured mean cover-and-return time of the CRT.
pub fn aldous_constant() -> f64 {
    6.0 * (2.0 * std::f64::consts::PI).sqrt()
}

pub const MOMENT_ORDERS: [i32; 3] = [1, 2, 4];
pub const MOMENT_RATIO_BAND: (f64, f64) = (0.8, 1.25);

fn cover_family(c: &ExperimentConfig) -> Result<RunOutput> {
    let law = law_of(c)?;
    let sigma = law.sigma();
    let streams = Streams::new(c.seed, c.experiment.name());
    let mut records = Vec::new();
    let mut groups = Vec::new();
    let mut scaled_by_n: Vec<Vec<f64>> = Vec::new();
    let mut aldous = Vec::new();
    for &n in &c.sizes {
        let fixed = if c.quenched {
            Some(sample_conditioned_gw(&law, n, &mut streams.child("tree").rng(n as u64, 0))?)
        } else {
            None
        };
        let scale = sigma / (n as f64).powf(1.5);
        let rows = replicate(&streams, n as u64, c.replicas, |rng, r| -> Result<ReplicaRecord> {
            let owned;
            let tree = match &fixed {
                Some(t) => t,
                None => {
                    owned = sample_conditioned_gw(&law, n, rng)?;
                    &owned
                }
            };
            let rec = run_cover(tree, c.mode, tree.root(), false, rng)?;
            Ok(ReplicaRecord::new(c.experiment, n, r, streams.id(n as u64, r))
                .with("tau_cov", rec.tau_cov)
                .with("tau_cov_plus", rec.tau_cov_plus)
                .with("jumps_cov", rec.jumps_cov as f64)
                .with("jumps_cov_plus", rec.jumps_cov_plus as f64)
                .with("scaled_cov", scale * rec.tau_cov)
                .with("scaled_cov_plus", scale * rec.tau_cov_plus))
        });
        let rows = collect(rows)?;
        let scaled = column(&rows, "scaled_cov");
        let plus = column(&rows, "scaled_cov_plus");
        groups.push(group(n, "scaled_cov", &scaled)?);
        groups.push(group(n, "scaled_cov_plus", &plus)?);
        let e = Estimate::of(&plus);
        aldous.push(json!({
            "n": n,
            "mean": e.mean,
            "stderr": e.stderr,
            "ci_low": e.mean - 1.96 * e.stderr,
            "ci_high": e.mean + 1.96 * e.stderr,
            "ratio": e.mean / aldous_constant(),
        }));
        scaled_by_n.push(scaled);
        records.extend(rows);
    }
    let ks: Vec<f64> = scaled_by_n
        .windows(2)
        .map(|w| ks_distance(&w[0], &w[1]))
        .collect::<std::result::Result<_, _>>()?;
    let mut moments = BTreeMap::new();
    let mut ratios = BTreeMap::new();
    let mut within = true;
    for p in MOMENT_ORDERS {
        let m: Vec<f64> = scaled_by_n
            .iter()
            .map(|xs| xs.iter().map(|x| x.powi(p)).sum::<f64>() / xs.len() as f64)
            .collect();
        let r: Vec<f64> = m.windows(2).map(|w| w[1] / w[0]).collect();
        within &= r.iter().all(|x| (MOMENT_RATIO_BAND.0..=MOMENT_RATIO_BAND.1).contains(x));
        moments.insert(format!("p{p}"), m);
        ratios.insert(format!("p{p}"), r);
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("sizes".into(), json!(c.sizes));
    diagnostics.insert("ks_consecutive".into(), json!(ks));
    diagnostics.insert(
        "ks_nonincreasing".into(),
        json!(ks.windows(2).all(|w| w[1] <= w[0])),
    );
    diagnostics.insert("moments".into(), json!(moments));
    diagnostics.insert("moment_ratios".into(), json!(ratios));
    diagnostics.insert("moment_ratios_within_band".into(), json!(within));
    diagnostics.insert("aldous_constant".into(), json!(aldous_constant()));
    diagnostics.insert("cover_and_return".into(), json!(aldous));
    diagnostics.insert("quenched".into(), json!(c.quenched));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

/// Lambda vectors tried per configuration.
pub const LAMBDAS_PER_CONFIGURATION: usize = 5;

fn rayknight_mgf(c: &ExperimentConfig) -> Result<RunOutput> {
    let streams = Streams::new(c.seed, c.experiment.name());
    let mut records = Vec::new();
    let mut groups = Vec::new();
    let mut worst = 0.0f64;
    let mut trees = 0usize;
    for &n in &c.sizes {
        if n < 2 {
            continue;
        }
        let shapes = enumerate_rooted_trees(n);
        trees += shapes.len();
        let mut diffs = Vec::new();
        for (t, tree) in shapes.iter().enumerate() {
            let index = TreeMetricIndex::new(tree);
            for k in 0..c.replicas {
                let r = (t * c.replicas + k) as u64;
                let mut rng = streams.rng(n as u64, r);
                let (x, y, marks) = random_configuration(tree, &mut rng, 4);
                let m = build_sigma_matrices(&index, x, y, &marks)?;
                let mut diff = 0.0f64;
                for _ in 0..LAMBDAS_PER_CONFIGURATION {
                    let lambdas = admissible_lambdas(&m, &mut rng);
                    let det = mgf_determinant(&m, &lambdas)?;
                    let fk = mgf_local_times_exact(
                        tree,
                        WalkMode::CONSTANT_SPEED.measure,
                        x,
                        y,
                        &marks,
                        &lambdas,
                    )?;
                    diff = diff.max((det - fk).abs());
                }
                worst = worst.max(diff);
                diffs.push(diff);
                records.push(
                    ReplicaRecord::new(c.experiment, n, r, streams.id(n as u64, r))
                        .with("tree", t as f64)
                        .with("x", x as f64)
                        .with("y", y as f64)
                        .with("marks", marks.len() as f64)
                        .with("max_abs_diff", diff),
                );
            }
        }
        groups.push(group(n, "max_abs_diff", &diffs)?);
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("max_abs_diff".into(), json!(worst));
    diagnostics.insert("trees".into(), json!(trees));
    diagnostics.insert("lambdas_per_configuration".into(), json!(LAMBDAS_PER_CONFIGURATION));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

fn isomorphism(c: &ExperimentConfig) -> Result<RunOutput> {
    let law = law_of(c)?;
    let streams = Streams::new(c.seed, c.experiment.name());
    let mut records = Vec::new();
    let mut worst = 0.0f64;
    let mut zs = Vec::new();
    let mut configs = Vec::new();
    for (idx, &n) in c.sizes.iter().enumerate() {
        let setup = streams.child("config");
        let mut rng = setup.rng(n as u64, idx as u64);
        let tree = sample_conditioned_gw(&law, n, &mut rng)?;
        let (x, y, marks) = random_configuration(&tree, &mut rng, 3);
        if marks.is_empty() {
            continue;
        }
        let family = streams.child(&format!("c{idx}"));
        let report = check_isomorphism(&tree, x, y, &marks, c.replicas, &family)?;
        worst = worst.max(report.max_abs_z());
        for (k, m) in report.marks.iter().enumerate() {
            zs.push(m.z_first);
            zs.push(m.z_second);
            records.push(
                ReplicaRecord::new(c.experiment, n, (idx * 16 + k) as u64, family.id(n as u64, 0))
                    .with("configuration", idx as f64)
                    .with("x", x as f64)
                    .with("y", y as f64)
                    .with("mark", m.mark as f64)
                    .with("lhs_mean", m.lhs_mean.mean)
                    .with("rhs_mean", m.rhs_mean.mean)
                    .with("lhs_second", m.lhs_second.mean)
                    .with("rhs_second", m.rhs_second.mean)
                    .with("z_first", m.z_first)
                    .with("z_second", m.z_second),
            );
        }
        configs.push(json!({ "n": n, "x": x, "y": y, "marks": marks, "max_abs_z": report.max_abs_z() }));
    }
    let mut groups = Vec::new();
    if !zs.is_empty() {
        groups.push(group(0, "z", &zs)?);
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("max_abs_z".into(), json!(worst));
    diagnostics.insert("configurations".into(), json!(configs));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

/// Start and horizon of the BESQ validation.
pub const BESQ_START: f64 = 1.0;
pub const BESQ_HORIZON: f64 = 1.0;
pub const BESQ_DIMS: [f64; 2] = [0.0, 2.0];

fn besq_validate(c: &ExperimentConfig) -> Result<RunOutput> {
    let streams = Streams::new(c.seed, c.experiment.name());
    let step = 1.0 / c.grid as f64;
    let (x, t) = (BESQ_START, BESQ_HORIZON);
    let records = replicate(&streams, 0, c.replicas, |rng, r| {
        let mut rec = ReplicaRecord::new(c.experiment, 0, r, streams.id(0, r));
        for d in BESQ_DIMS {
            rec = rec
                .with(&format!("exact_dim{d}"), besq_transition(x, t, d, rng))
                .with(&format!("euler_dim{d}"), euler_maruyama_endpoint(x, step, t, d, rng));
        }
        rec
    });
    let mut groups = Vec::new();
    let mut diagnostics = BTreeMap::new();
    for d in BESQ_DIMS {
        let exact = column(&records, &format!("exact_dim{d}"));
        let euler = column(&records, &format!("euler_dim{d}"));
        let mean_target = x + d * t;
        let var_target = 4.0 * t * x + 2.0 * d * t * t;
        let mean = Estimate::of(&exact);
        let sq: Vec<f64> = exact.iter().map(|v| (v - mean_target).powi(2)).collect();
        let var = Estimate::of(&sq);
        let mut entry = json!({
            "mean": estimate_json(&mean),
            "mean_target": mean_target,
            "z_mean": mean.z_against(mean_target),
            "variance": estimate_json(&var),
            "variance_target": var_target,
            "z_variance": var.z_against(var_target),
            "ks_exact_vs_euler": ks_distance(&exact, &euler)?,
        });
        if d == 0.0 {
            let zero: Vec<f64> = exact.iter().map(|&v| f64::from(u8::from(v == 0.0))).collect();
            let p = Estimate::of(&zero);
            let target = (-x / (2.0 * t)).exp();
            entry["absorption"] = estimate_json(&p);
            entry["absorption_target"] = json!(target);
            entry["z_absorption"] = json!(p.z_against(target));
        }
        diagnostics.insert(format!("dim{d}"), entry);
        groups.push(group(0, &format!("exact_dim{d}"), &exact)?);
        groups.push(group(0, &format!("euler_dim{d}"), &euler)?);
    }
    diagnostics.insert("euler_step".into(), json!(step));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

pub const WILLIAMS_H: f64 = 1.0;
pub const WILLIAMS_COUNT_LEVEL: f64 = 0.1;
/// Truncation for the squared-height moment, relative to `h`.
pub const WILLIAMS_TRUNCATION: f64 = 1e-3;
pub const WILLIAMS_SKELETON_EPS: f64 = 0.05;
pub const WILLIAMS_GENERATIONS: usize = 4;

/// `E[sum H^2]` over spine atoms of height above `delta`.
pub fn truncated_square_target(h: f64, delta: f64) -> f64 {
    h * h / 4.0 - (delta * h / 2.0 - delta * delta / 4.0)
}

fn williams_stats(c: &ExperimentConfig) -> Result<RunOutput> {
    let streams = Streams::new(c.seed, c.experiment.name());
    let h = WILLIAMS_H;
    let delta = WILLIAMS_TRUNCATION * h;
    let rows = replicate(&streams, 0, c.replicas, |rng, r| -> Result<ReplicaRecord> {
        let count = sample_spine_atoms(h, WILLIAMS_COUNT_LEVEL, rng).len() as f64;
        let squares: f64 = sample_spine_atoms(h, delta, rng).iter().map(|a| a.height * a.height).sum();
        let skel = sample_williams_skeleton(h, WILLIAMS_SKELETON_EPS, rng)?;
        let heights = skel.max_height_by_generation();
        let mut rec = ReplicaRecord::new(c.experiment, 0, r, streams.id(0, r))
            .with("count_above", count)
            .with("sum_squares", squares)
            .with("skeleton_spines", skel.spines.len() as f64);
        for g in 1..=WILLIAMS_GENERATIONS {
            rec = rec.with(&format!("max_height_gen{g}"), heights.get(g).copied().unwrap_or(0.0));
        }
        Ok(rec)
    });
    let records = collect(rows)?;
    let count = column(&records, "count_above");
    let squares = column(&records, "sum_squares");
    let count_target = expected_atoms_above(h, WILLIAMS_COUNT_LEVEL);
    let square_target = truncated_square_target(h, delta);
    let (ce, se) = (Estimate::of(&count), Estimate::of(&squares));
    let mut groups = vec![group(0, "count_above", &count)?, group(0, "sum_squares", &squares)?];
    let mut medians = Vec::new();
    for g in 1..=WILLIAMS_GENERATIONS {
        let key = format!("max_height_gen{g}");
        let gs = group(0, &key, &column(&records, &key))?;
        medians.push(gs.stats.q(0.5).unwrap_or(0.0));
        groups.push(gs);
    }
    let decreasing = medians.windows(2).all(|w| w[1] < w[0] || w[0] == 0.0);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("count_above".into(), estimate_json(&ce));
    diagnostics.insert("count_target".into(), json!(count_target));
    diagnostics.insert("z_count".into(), json!(ce.z_against(count_target)));
    diagnostics.insert("sum_squares".into(), estimate_json(&se));
    diagnostics.insert("sum_squares_target".into(), json!(square_target));
    diagnostics.insert("z_sum_squares".into(), json!(se.z_against(square_target)));
    diagnostics.insert("generation_medians".into(), json!(medians));
    diagnostics.insert("generation_medians_decreasing".into(), json!(decreasing));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

pub const COMPONENT_EPS: f64 = 0.1;
pub const COMPONENT_MIN_HEIGHT: f64 = 0.02;

fn component_poisson(c: &ExperimentConfig) -> Result<RunOutput> {
    let streams = Streams::new(c.seed, c.experiment.name());
    let (eps, a) = (COMPONENT_EPS, COMPONENT_MIN_HEIGHT);
    let rows = replicate(&streams, 0, c.replicas, |rng, r| -> Result<ReplicaRecord> {
        let skel = sample_williams_skeleton(WILLIAMS_H, eps, rng)?;
        let comp = sample_poisson_components(&skel, a, rng)?;
        let band = comp.atoms.iter().filter(|x| x.h_x >= eps).count() as f64;
        let expected = 0.5 * skel.length_below_eps() * (1.0 / a - 1.0 / eps);
        Ok(ReplicaRecord::new(c.experiment, 0, r, streams.id(0, r))
            .with("band", band)
            .with("band_expected", expected)
            .with("kept", comp.atoms.len() as f64)
            .with("dominating", comp.dominating.len() as f64))
    });
    let records = collect(rows)?;
    let diff: Vec<f64> = records
        .iter()
        .map(|r| r.outputs["band"] - r.outputs["band_expected"])
        .collect();
    let gap: Vec<f64> = records
        .iter()
        .map(|r| r.outputs["kept"] - r.outputs["dominating"])
        .collect();
    let (de, ge) = (Estimate::of(&diff), Estimate::of(&gap));
    let always = gap.iter().all(|&g| g <= 0.0);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("band_minus_expected".into(), estimate_json(&de));
    diagnostics.insert("z_band".into(), json!(de.z_against(0.0)));
    diagnostics.insert("kept_minus_dominating".into(), estimate_json(&ge));
    diagnostics.insert("z_domination".into(), json!(ge.z_against(0.0)));
    diagnostics.insert("always_dominated".into(), json!(always));
    diagnostics.insert("eps".into(), json!(eps));
    diagnostics.insert("min_height".into(), json!(a));
    let groups = vec![
        group(0, "band", &column(&records, "band"))?,
        group(0, "kept", &column(&records, "kept"))?,
        group(0, "dominating", &column(&records, "dominating"))?,
    ];
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

fn snake(c: &ExperimentConfig) -> Result<RunOutput> {
    let streams = Streams::new(c.seed, c.experiment.name());
    let m = c.grid;
    let mut records = Vec::new();
    let mut groups = Vec::new();
    let (mut fs, mut ses) = (Vec::new(), Vec::new());
    for (i, &v) in c.v_grid.iter().enumerate() {
        let family = streams.child(&format!("v{i}"));
        let rows = replicate(&family, m as u64, c.replicas, |rng, r| -> Result<ReplicaRecord> {
            let hit = snake_hits_zero(v, m, rng)?;
            Ok(ReplicaRecord::new(c.experiment, m, r, family.id(m as u64, r))
                .with("v", v)
                .with("hit", f64::from(u8::from(hit))))
        });
        let rows = collect(rows)?;
        let hits = column(&rows, "hit");
        let e = Estimate::of(&hits);
        fs.push(e.mean);
        ses.push(e.stderr);
        groups.push(group(m, &format!("hit[v={}]", format_float(v)), &hits)?);
        records.extend(rows);
    }
    let isotonic = (1..fs.len()).all(|i| fs[i] <= fs[i - 1] + 4.0 * ses[i].hypot(ses[i - 1]));
    let integral = snake_integral(&c.v_grid, &fs)?;
    let target = snake_integral_target();
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("v_grid".into(), json!(c.v_grid));
    diagnostics.insert("f".into(), json!(fs));
    diagnostics.insert("f_stderr".into(), json!(ses));
    diagnostics.insert("isotonic".into(), json!(isotonic));
    diagnostics.insert("integral".into(), json!(integral));
    diagnostics.insert("target".into(), json!(target));
    diagnostics.insert("relative_error".into(), json!((integral.total - target) / target));
    diagnostics.insert("grid".into(), json!(m));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

fn mean_cover_time(tree: &DiscreteTree, mode: WalkMode, walks: usize, rng: &mut crate::rng::SimRng) -> Result<f64> {
    let mut total = 0.0;
    for _ in 0..walks {
        total += run_cover(tree, mode, tree.root(), false, rng)?.tau_cov;
    }
    Ok(total / walks as f64)
}

fn covering_bound(c: &ExperimentConfig) -> Result<RunOutput> {
    let law = law_of(c)?;
    let streams = Streams::new(c.seed, c.experiment.name());
    let mut records = Vec::new();
    let mut groups = Vec::new();
    for &n in &c.sizes {
        let rows = replicate(&streams, n as u64, c.replicas, |rng, r| -> Result<ReplicaRecord> {
            let tree = sample_conditioned_gw(&law, n, rng)?;
            let bound = bdnp_bound(&tree)?;
            let gff = streams.child(&format!("gff{r}"));
            let eta = gff_max_expectation(&tree, tree.root(), MIN_GFF_REPLICAS, &gff)?;
            let tcov = mean_cover_time(&tree, c.mode, c.walks, rng)?;
            let edges = (n - 1) as f64;
            Ok(ReplicaRecord::new(c.experiment, n, r, streams.id(n as u64, r))
                .with("diameter", bound.diameter as f64)
                .with("functional", bound.functional)
                .with("bound", bound.bound)
                .with("gff_max", eta.mean)
                .with("gff_max_stderr", eta.stderr)
                .with("t_cov", tcov)
                .with("ratio_bound", tcov / bound.bound)
                .with("ratio_gff", tcov / (edges * eta.mean * eta.mean)))
        });
        let rows = collect(rows)?;
        groups.push(group(n, "ratio_bound", &column(&rows, "ratio_bound"))?);
        groups.push(group(n, "ratio_gff", &column(&rows, "ratio_gff"))?);
        records.extend(rows);
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("walks_per_tree".into(), json!(c.walks));
    diagnostics.insert("gff_replicas".into(), json!(MIN_GFF_REPLICAS));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

/// Lambda grid for the survival tail of `tau_cov / mean`.
pub fn tail_lambda_grid() -> Vec<f64> {
    (4..=40).map(|i| f64::from(i) * 0.25).collect()
}

fn concentration_tail(c: &ExperimentConfig) -> Result<RunOutput> {
    let law = law_of(c)?;
    let streams = Streams::new(c.seed, c.experiment.name());
    let n = c.sizes[0];
    let tree = sample_conditioned_gw(&law, n, &mut streams.child("tree").rng(n as u64, 0))?;
    let rows = replicate(&streams, n as u64, c.replicas, |rng, r| -> Result<ReplicaRecord> {
        let rec = run_cover(&tree, c.mode, tree.root(), false, rng)?;
        Ok(ReplicaRecord::new(c.experiment, n, r, streams.id(n as u64, r)).with("tau_cov", rec.tau_cov))
    });
    let mut records = collect(rows)?;
    let taus = column(&records, "tau_cov");
    let mean = taus.iter().sum::<f64>() / taus.len() as f64;
    for r in &mut records {
        let t = r.outputs["tau_cov"];
        r.outputs.insert("normalized".into(), t / mean);
    }
    let normalized = column(&records, "normalized");
    let fit = survival_tail_fit(&normalized, &tail_lambda_grid())?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("n".into(), json!(n));
    diagnostics.insert("mean_tau_cov".into(), json!(mean));
    diagnostics.insert("slope".into(), json!(fit.slope));
    diagnostics.insert("intercept".into(), json!(fit.intercept));
    diagnostics.insert("lambdas".into(), json!(fit.lambdas));
    diagnostics.insert("log_survival".into(), json!(fit.log_survival));
    diagnostics.insert("negative_slope".into(), json!(fit.slope < 0.0));
    diagnostics.insert(
        "dominated_by_line".into(),
        json!(fit.dominated_by_line(normalized.len(), 4.0)),
    );
    let groups = vec![group(n, "normalized", &normalized)?];
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

/// Random trees per size above the exhaustive range.
pub const RANDOM_ORACLE_TREES: usize = 5;
pub const EXHAUSTIVE_MAX_N: usize = 8;

fn small_oracle(c: &ExperimentConfig) -> Result<RunOutput> {
    let law = law_of(c)?;
    let streams = Streams::new(c.seed, c.experiment.name());
    let mut records = Vec::new();
    let mut groups = Vec::new();
    let mut worst = 0.0f64;
    for &n in &c.sizes {
        let trees = if n <= EXHAUSTIVE_MAX_N {
            enumerate_rooted_trees(n)
        } else {
            let family = streams.child("tree");
            (0..RANDOM_ORACLE_TREES)
                .map(|t| sample_conditioned_gw(&law, n, &mut family.rng(n as u64, t as u64)))
                .collect::<std::result::Result<_, _>>()?
        };
        let mut zs = Vec::new();
        for (t, tree) in trees.iter().enumerate() {
            let exact = expected_cover_exact_small(tree, c.mode, tree.root())?;
            let family = streams.child(&format!("t{t}"));
            let taus = replicate(&family, n as u64, c.replicas, |rng, _| {
                run_cover(tree, c.mode, tree.root(), false, rng).map(|r| r.tau_cov)
            });
            let taus: Vec<f64> = taus.into_iter().collect::<std::result::Result<_, _>>()?;
            let e = Estimate::of(&taus);
            let z = e.z_against(exact);
            worst = worst.max(z.abs());
            zs.push(z);
            records.push(
                ReplicaRecord::new(c.experiment, n, t as u64, family.id(n as u64, 0))
                    .with("exact", exact)
                    .with("mc_mean", e.mean)
                    .with("mc_stderr", e.stderr)
                    .with("z", z),
            );
        }
        groups.push(group(n, "z", &zs)?);
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("max_abs_z".into(), json!(worst));
    Ok(RunOutput {
        records,
        summary: RunSummary {
            experiment: c.experiment,
            groups,
            diagnostics,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_roundtrip() {
        assert_eq!(registry().len(), 12);
        for &e in registry() {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            let quoted = serde_json::to_string(&e).unwrap();
            assert_eq!(quoted, format!("\"{}\"", e.name()));
        }
        assert!("cover-everything".parse::<Experiment>().is_err());
    }

    #[test]
    fn config_parsing() {
        let c = ExperimentConfig::from_json(r#"{"experiment":"cover-scaling","sizes":[10,20],"replicas":3}"#, None)
            .unwrap();
        assert_eq!(c.sizes, vec![10, 20]);
        assert_eq!(c.replicas, 3);
        assert_eq!(c.law, LawKind::Poisson1);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope"}"#, None).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"cover-scaling","bogus":1}"#, None).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"cover-scaling","replicas":0}"#, None).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"cover-scaling","sizes":[]}"#, None).is_err());
        assert!(ExperimentConfig::from_json(r#"{"replicas":5}"#, None).is_err());
        let c = ExperimentConfig::from_json(r#"{"replicas":5}"#, Some(Experiment::WilliamsStats)).unwrap();
        assert_eq!(c.experiment, Experiment::WilliamsStats);
        assert!(
            ExperimentConfig::from_json(r#"{"experiment":"isomorphism"}"#, Some(Experiment::WilliamsStats))
                .is_err()
        );
        let c = ExperimentConfig::from_json(
            r#"{"experiment":"cover-scaling","law":{"geometric":0.5},"mode":{"kind":"constant-speed","measure":"conductance"}}"#,
            None,
        )
        .unwrap();
        assert_eq!(c.mode, WalkMode::CONSTANT_SPEED);
        assert!(ExperimentConfig::from_json(r#"{"experiment":"cover-scaling","law":{"geometric":0.3}}"#, None).is_err());
    }

    #[test]
    fn lattice_law_rejects_size() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment":"cover-scaling","law":"binary-half","sizes":[10],"replicas":2}"#,
            None,
        )
        .unwrap();
        let err = execute(&c).unwrap_err();
        assert_eq!(err.kind(), "unsupported-size");
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
        let line = to_json_compact(&json!({"a": 1, "b": [0.5, -3], "c": "x"})).unwrap();
        assert_eq!(line, r#"{"a":1,"b":[5.0000000000000000e-1,-3],"c":"x"}"#);
        let parsed: Value = serde_json::from_str(&to_json_pretty(&json!({"k": [1.5, {"z": []}]})).unwrap()).unwrap();
        assert_eq!(parsed, json!({"k": [1.5, {"z": []}]}));
    }

    #[test]
    fn derived_time_scale() {
        let c = ExperimentConfig::defaults(Experiment::CoverScaling);
        let d = derived_parameters(&c).unwrap();
        for s in d["sizes"].as_array().unwrap() {
            let n = s["n"].as_f64().unwrap();
            assert!((s["time_scale"].as_f64().unwrap() - n.powf(1.5)).abs() < 1e-9 * n.powf(1.5));
        }
    }

    #[test]
    fn scaled_value_definition() {
        let mut c = ExperimentConfig::defaults(Experiment::CoverScaling);
        c.sizes = vec![30];
        c.replicas = 20;
        c.law = LawKind::Geometric(0.5);
        let out = execute(&c).unwrap();
        let sigma = OffspringLaw::geometric_half().sigma();
        for r in &out.records {
            let expect = sigma * 30f64.powf(-1.5) * r.outputs["tau_cov"];
            assert!((r.outputs["scaled_cov"] - expect).abs() < 1e-12 * expect);
        }
        let ids: std::collections::HashSet<u64> = out.records.iter().map(|r| r.stream).collect();
        assert_eq!(ids.len(), out.records.len());
    }
}
