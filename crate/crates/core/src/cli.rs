//! Batch front-end: one subcommand per experiment family.
//!
//! Every run is described by a [`RunConfig`]. Flags are turned into the flat
//! `params` map, a `--config` file overrides them key by key, and the merged
//! map is validated against the subcommand's parameter struct (unknown keys
//! are errors). The resolved config, with every default filled in, is written
//! into the output header so that re-ingesting it reproduces the run.
//!
//! Exit status: 0 when every check of the run passed, 2 when a check failed,
//! 1 on a validation or evaluation error (a JSON error record goes to stderr).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{invalid, Error, Result};
use crate::modelspace::{Model, SpaceForm};
use crate::numerics::{Exponent, Extended};
use crate::orbits::{
    expansion_direction, matrix_curve_length, orbit_hausdorff_matrix, orbit_hausdorff_product_spheres, packing_count,
    GroupAction, MatrixPoint,
};
use crate::pde::{multi_start_solve, refinement_check, AlphaProfile, PdeProblem, PdeSpec};
use crate::randers::BetaProfile;
use crate::rearrange::{euclidean_rearrangement, norm_preservation_check, polya_szego_check, RadialProfile};
use crate::sobolev::{classify_pair, embedding_sweep, funk_beta_verdict, funk_parameter};

pub const SCHEMA: u32 = 1;
pub const THREADS_ENV: &str = "RANDERS_LAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SubcommandName {
    Packing,
    Expansion,
    Hausdorff,
    Rearrange,
    Funk,
    Embedding,
    Pde,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: SubcommandName,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    /// Overrides of the subcommand's check tolerances.
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn new(subcommand: SubcommandName) -> Self {
        RunConfig { subcommand, params: BTreeMap::new(), output: OutputSpec::default(), seed: 0, tol: BTreeMap::new() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Every default filled in, unknown keys rejected.
    pub fn resolve(&self) -> Result<RunConfig> {
        for (k, v) in &self.params {
            if v.is_object() || v.is_array() {
                return invalid(format!("parameter {k:?} must be a scalar"));
            }
        }
        let params = match self.subcommand {
            SubcommandName::Packing | SubcommandName::Expansion => resolve_params::<PackingParams>(&self.params)?,
            SubcommandName::Hausdorff => resolve_params::<HausdorffParams>(&self.params)?,
            SubcommandName::Rearrange => resolve_params::<RearrangeParams>(&self.params)?,
            SubcommandName::Funk => resolve_params::<FunkParams>(&self.params)?,
            SubcommandName::Embedding => resolve_params::<EmbeddingParams>(&self.params)?,
            SubcommandName::Pde => resolve_params::<PdeParams>(&self.params)?,
        };
        let defaults = default_tolerances(self.subcommand);
        let mut tol: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in &self.tol {
            if !tol.contains_key(k) {
                let known: Vec<&str> = defaults.iter().map(|d| d.0).collect();
                return invalid(format!("unknown tolerance {k:?} for {:?} (known: {known:?})", self.subcommand));
            }
            if !(*v > 0.0) || !v.is_finite() {
                return invalid(format!("tolerance {k:?} must be positive and finite"));
            }
            tol.insert(k.clone(), *v);
        }
        Ok(RunConfig { subcommand: self.subcommand, params, output: self.output.clone(), seed: self.seed, tol })
    }

    fn params_as<P: for<'de> Deserialize<'de>>(&self) -> Result<P> {
        let map: serde_json::Map<String, Value> = self.params.clone().into_iter().collect();
        serde_json::from_value(Value::Object(map)).map_err(|e| Error::InvalidArgument(format!("params: {e}")))
    }
}

fn resolve_params<P: Serialize + for<'de> Deserialize<'de>>(params: &BTreeMap<String, Value>) -> Result<BTreeMap<String, Value>> {
    let map: serde_json::Map<String, Value> = params.clone().into_iter().collect();
    let typed: P = serde_json::from_value(Value::Object(map)).map_err(|e| Error::InvalidArgument(format!("params: {e}")))?;
    match serde_json::to_value(typed)? {
        Value::Object(m) => Ok(m.into_iter().collect()),
        _ => unreachable!("parameter structs serialize to objects"),
    }
}

fn default_tolerances(sub: SubcommandName) -> &'static [(&'static str, f64)] {
    match sub {
        SubcommandName::Hausdorff => &[("length", 1e-6)],
        SubcommandName::Rearrange => &[("idempotence", 1e-9), ("norm", 1e-3)],
        SubcommandName::Pde => &[("refined_gradient", 1e-6)],
        _ => &[],
    }
}

// ---------------------------------------------------------------------------
// parameter structs: clap flags and config keys share one definition

/// Radii as `a:b:log[:n]`, `a:b:lin[:n]` (default `n = 10`) or a comma list.
pub fn parse_radii(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return invalid("radii list is empty");
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("cannot parse number {s:?}")));
    let parts: Vec<&str> = spec.split(':').collect();
    let out = if parts.len() == 1 {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?
    } else {
        if parts.len() < 3 || parts.len() > 4 {
            return invalid(format!("radii spec {spec:?} is not a:b:log[:n] or a:b:lin[:n]"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let n = match parts.get(3) {
            Some(s) => s.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad count {s:?}")))?,
            None => 10,
        };
        if n == 0 || !(a <= b) {
            return invalid(format!("radii spec {spec:?} needs a <= b and n >= 1"));
        }
        let at = |k: usize| if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
        match parts[2].trim() {
            "log" => {
                if !(a > 0.0) {
                    return invalid("logarithmic radii need a > 0");
                }
                (0..n).map(|k| if k + 1 == n { b } else { a * (b / a).powf(at(k)) }).collect()
            }
            "lin" => (0..n).map(|k| if k + 1 == n { b } else { a + (b - a) * at(k) }).collect(),
            other => return invalid(format!("unknown radii scale {other:?}")),
        }
    };
    if out.is_empty() {
        return invalid("radii list is empty");
    }
    if out.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return invalid("radii must be finite and non-negative");
    }
    Ok(out)
}

fn parse_blocks(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().map_err(|_| Error::InvalidArgument(format!("bad block {s:?}"))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclid,
    Hyperbolic,
}

fn space_of(kind: SpaceKind, dim: usize, curvature: f64) -> Result<SpaceForm> {
    match kind {
        SpaceKind::Euclid => SpaceForm::euclidean(dim),
        SpaceKind::Hyperbolic => SpaceForm::hyperbolic(dim, curvature),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Full,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct PackingParams {
    #[arg(long, value_enum, default_value_t = SpaceKind::Euclid)]
    pub space: SpaceKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Sectional curvature of the hyperbolic space.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub curvature: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Geodesic distances of the orbit points from the fixed point.
    #[arg(long, default_value = "10:1000:log")]
    pub radii: String,
    #[arg(long, value_enum, default_value_t = ActionKind::Full)]
    pub action: ActionKind,
    /// Block dimensions of a product action, e.g. `2,3`.
    #[arg(long, default_value = "")]
    pub blocks: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffKind {
    Matrix,
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct HausdorffParams {
    #[arg(long, value_enum, default_value_t = HausdorffKind::Matrix)]
    pub kind: HausdorffKind,
    /// Eigenvalue grid `X = diag(l, 1/l)` for the matrix example.
    #[arg(long, default_value = "1:1e6:log:25")]
    pub lambdas: String,
    #[arg(long, default_value = "2,2")]
    pub blocks: String,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Bump,
    Tent,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct RearrangeParams {
    #[arg(long, value_enum, default_value_t = SpaceKind::Euclid)]
    pub space: SpaceKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub curvature: f64,
    #[arg(long, value_enum, default_value_t = ProfileKind::Random)]
    pub profile: ProfileKind,
    #[arg(long, default_value_t = 2.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 400)]
    pub cells: usize,
    /// Exponent of the Pólya–Szegő check.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct FunkParams {
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = Exponent::Finite(4.0))]
    pub q: Exponent,
    /// Test-function exponent; by default chosen from the regime of `(p, q)`.
    #[arg(long)]
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingParams {
    #[arg(long, value_enum, default_value_t = SpaceKind::Euclid)]
    pub space: SpaceKind,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub curvature: f64,
    #[arg(long, default_value_t = 1.5)]
    pub p: f64,
    #[arg(long, default_value_t = Exponent::Finite(4.0))]
    pub q: Exponent,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Distances of the ball centres from the origin.
    #[arg(long, default_value = "0:4:lin:3")]
    pub radii: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    Gaussian,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BetaKind {
    Zero,
    Constant,
    Gaussian,
    Saturating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Parser)]
#[serde(deny_unknown_fields, default)]
pub struct PdeParams {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.0)]
    pub p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = AlphaKind::Gaussian)]
    pub alpha: AlphaKind,
    #[arg(long, default_value_t = 1.0)]
    pub alpha_amplitude: f64,
    /// Width of the Gaussian weight or rate of the exponential one.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_scale: f64,
    #[arg(long, value_enum, default_value_t = BetaKind::Zero)]
    pub beta: BetaKind,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub beta_amplitude: f64,
    /// Width (Gaussian) or scale (saturating) of the 1-form profile.
    #[arg(long, default_value_t = 1.0)]
    pub beta_scale: f64,
    /// Declared bound on `|beta|_g`; `0` means the profile's own supremum.
    #[arg(long, default_value_t = 0.0)]
    pub beta_sup: f64,
    #[arg(long, default_value_t = 1024)]
    pub cells: usize,
    /// Outer radius; `0` means `12 / kappa`.
    #[arg(long, default_value_t = 0.0)]
    pub r_max: f64,
    #[arg(long, default_value = "8")]
    pub lambdas: String,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Re-solve every critical point on the doubled grid.
    #[arg(long, default_value_t = false)]
    pub refine: bool,
}

macro_rules! parser_default {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                <$t as Parser>::parse_from(["randers-lab"])
            }
        }
    )*};
}
parser_default!(PackingParams, HausdorffParams, RearrangeParams, FunkParams, EmbeddingParams, PdeParams);

impl PdeParams {
    pub fn problem(&self) -> Result<PdeProblem> {
        let alpha = match self.alpha {
            AlphaKind::Gaussian => AlphaProfile::Gaussian { amplitude: self.alpha_amplitude, width: self.alpha_scale },
            AlphaKind::Exponential => AlphaProfile::Exponential { amplitude: self.alpha_amplitude, rate: self.alpha_scale },
        };
        let (a, s) = (self.beta_amplitude, self.beta_scale);
        let beta_profile = match self.beta {
            BetaKind::Zero => BetaProfile::Zero,
            BetaKind::Constant => BetaProfile::Constant { value: a },
            BetaKind::Gaussian => BetaProfile::Gaussian { amplitude: a, width: s },
            BetaKind::Saturating => BetaProfile::Saturating { amplitude: a, scale: s },
        };
        let beta_sup = if self.beta_sup > 0.0 { self.beta_sup } else { beta_profile.sup_abs() };
        let spec = PdeSpec {
            dim: self.dim,
            p: self.p,
            kappa: self.kappa,
            lambda: 0.0,
            alpha,
            beta_profile,
            beta_sup,
            nonlinearity: None,
            cells: self.cells,
            r_max: (self.r_max > 0.0).then_some(self.r_max),
        };
        PdeProblem::try_from(spec)
    }
}

// ---------------------------------------------------------------------------
// command line

#[derive(Debug, Parser)]
#[command(name = "randers-lab", version, about = "Batch experiments on model spaces and Randers metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run config; its keys override the flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Packing counts m(y, rho) along a ray, with verified disjoint centres.
    Packing(PackingParams),
    /// Packing counts with the normalisation of the planar asymptotics.
    Expansion(PackingParams),
    /// Hausdorff measures of orbits against the linear lower bound.
    Hausdorff(HausdorffParams),
    /// Euclidean rearrangement of a radial profile with norm and Pólya–Szegő checks.
    Rearrange(RearrangeParams),
    /// Funk-model test function verdict.
    Funk(FunkParams),
    /// Embedding constants S(y, rho) on centred balls.
    Embedding(EmbeddingParams),
    /// Multi-start critical points of the radial quasilinear problem.
    Pde(PdeParams),
    /// Run a config file as is.
    Run,
}

fn flag_map<P: Serialize>(p: &P) -> Result<BTreeMap<String, Value>> {
    match serde_json::to_value(p)? {
        Value::Object(m) => Ok(m.into_iter().collect()),
        _ => unreachable!("parameter structs serialize to objects"),
    }
}

impl Cli {
    /// Merges flags and the config file (config wins) into one config.
    pub fn into_config(self) -> Result<RunConfig> {
        let from_flags = match &self.command {
            Command::Packing(p) => Some((SubcommandName::Packing, flag_map(p)?)),
            Command::Expansion(p) => Some((SubcommandName::Expansion, flag_map(p)?)),
            Command::Hausdorff(p) => Some((SubcommandName::Hausdorff, flag_map(p)?)),
            Command::Rearrange(p) => Some((SubcommandName::Rearrange, flag_map(p)?)),
            Command::Funk(p) => Some((SubcommandName::Funk, flag_map(p)?)),
            Command::Embedding(p) => Some((SubcommandName::Embedding, flag_map(p)?)),
            Command::Pde(p) => Some((SubcommandName::Pde, flag_map(p)?)),
            Command::Run => None,
        };
        let file = match &self.common.config {
            Some(path) => Some(RunConfig::from_json(&std::fs::read_to_string(path)?)?),
            None => None,
        };
        let mut cfg = match (from_flags, file) {
            (None, None) => return invalid("`run` needs --config"),
            (None, Some(f)) => f,
            (Some((sub, params)), None) => RunConfig { params, ..RunConfig::new(sub) },
            (Some((sub, mut params)), Some(f)) => {
                if f.subcommand != sub {
                    return invalid(format!("config is for {:?}, not {sub:?}", f.subcommand));
                }
                params.extend(f.params.clone());
                RunConfig { params, ..f }
            }
        };
        // explicit output flags apply unless the file set them
        if self.common.config.is_none() || cfg.output.path.is_none() {
            if let Some(p) = self.common.output {
                cfg.output.path = Some(p);
            }
        }
        if self.common.config.is_none() {
            if let Some(f) = self.common.format {
                cfg.output.format = f;
            }
            if let Some(s) = self.common.seed {
                cfg.seed = s;
            }
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// tables

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => Value::from(*v),
            Cell::F(v) => Value::from(fmt_f64(*v)),
            Cell::I(v) => Value::from(*v),
            Cell::S(s) => Value::from(s.clone()),
            Cell::B(b) => Value::from(*b),
        }
    }
}

impl From<Extended> for Cell {
    fn from(e: Extended) -> Self {
        match e {
            Extended::Finite(v) => Cell::F(v),
            Extended::Divergent => Cell::S("DIVERGENT".into()),
        }
    }
}

impl From<Exponent> for Cell {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Finite(v) => Cell::F(v),
            Exponent::Infinite => Cell::S("inf".into()),
        }
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

/// Result of one run before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config: RunConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub checks: Vec<(String, bool)>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    pub fn render(&self) -> Result<String> {
        let cfg = serde_json::to_string(&self.config)?;
        let mut s = String::new();
        match self.config.output.format {
            Format::Csv => {
                let _ = writeln!(s, "# schema={SCHEMA}");
                let _ = writeln!(s, "# config={cfg}");
                for (name, ok) in &self.checks {
                    let _ = writeln!(s, "# check {name}={}", if *ok { "PASS" } else { "FAIL" });
                }
                let _ = writeln!(s, "{}", self.columns.join(","));
                for r in &self.rows {
                    let _ = writeln!(s, "{}", r.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                }
            }
            Format::Json => {
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
                let checks: serde_json::Map<String, Value> =
                    self.checks.iter().map(|(k, v)| (k.clone(), Value::Bool(*v))).collect();
                let doc = serde_json::json!({
                    "schema": SCHEMA,
                    "config": self.config,
                    "checks": checks,
                    "columns": self.columns,
                    "rows": rows,
                });
                s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
            }
        }
        Ok(s)
    }
}

// ---------------------------------------------------------------------------
// runs

pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let config = config.resolve()?;
    let tol = |k: &str| config.tol[k];
    let (columns, rows, checks) = match config.subcommand {
        SubcommandName::Packing => run_packing(&config.params_as()?, false)?,
        SubcommandName::Expansion => run_packing(&config.params_as()?, true)?,
        SubcommandName::Hausdorff => run_hausdorff(&config.params_as()?, config.seed, tol("length"))?,
        SubcommandName::Rearrange => {
            run_rearrange(&config.params_as()?, config.seed, tol("norm"), tol("idempotence"))?
        }
        SubcommandName::Funk => run_funk(&config.params_as()?)?,
        SubcommandName::Embedding => run_embedding(&config.params_as()?)?,
        SubcommandName::Pde => run_pde(&config.params_as()?, tol("refined_gradient"))?,
    };
    Ok(RunOutput { config, columns, rows, checks })
}

type Table = (Vec<&'static str>, Vec<Vec<Cell>>, Vec<(String, bool)>);

fn action_of(p: &PackingParams) -> Result<GroupAction> {
    match p.action {
        ActionKind::Full => Ok(GroupAction::FullRotation),
        ActionKind::Product => GroupAction::product(&parse_blocks(&p.blocks)?),
    }
}

fn run_packing(p: &PackingParams, normalised: bool) -> Result<Table> {
    let space = space_of(p.space, p.dim, p.curvature)?;
    let action = action_of(p)?;
    let radii = parse_radii(&p.radii)?;
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return invalid("radii must be non-decreasing");
    }
    let dir = expansion_direction(&action, space.dim())?;
    let reports: Vec<_> = radii
        .par_iter()
        .map(|&t| {
            let y = space.point_on_ray(&dir, t)?;
            let rep = packing_count(&action, &space, &y, p.rho)?;
            Ok((t, y, rep))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (t, y, rep) in &reports {
        let mut row = vec![Cell::F(*t), Cell::F(p.rho), Cell::I(rep.count as i64), Cell::S(rep.method.to_string())];
        if normalised {
            let s = crate::modelspace::norm(y);
            // count rho / (pi |y|) in the plane, scaled by 1 + c|y|^2 in the ball chart
            let v = if space.dim() != 2 || s == 0.0 {
                f64::NAN
            } else {
                let c = match space.model() {
                    Model::Euclidean => 1.0,
                    Model::PoincareBall => 1.0 + space.curvature() * s * s,
                };
                rep.count as f64 * p.rho * c / (std::f64::consts::PI * s)
            };
            row.insert(1, Cell::F(s));
            row.push(Cell::F(v));
        }
        rows.push(row);
    }
    let checks = if normalised {
        let counts: Vec<usize> = reports.iter().map(|r| r.2.count).collect();
        vec![("count_grows".into(), counts.len() < 2 || counts.last() > counts.first())]
    } else {
        vec![("disjoint".into(), true)]
    };
    let columns = if normalised {
        vec!["distance", "chart_radius", "rho", "count", "method", "normalised"]
    } else {
        vec!["distance", "rho", "count", "method"]
    };
    Ok((columns, rows, checks))
}

fn run_hausdorff(p: &HausdorffParams, seed: u64, tol: f64) -> Result<Table> {
    match p.kind {
        HausdorffKind::Matrix => {
            let lambdas = parse_radii(&p.lambdas)?;
            let rows: Vec<Vec<Cell>> = lambdas
                .par_iter()
                .map(|&l| {
                    let y = MatrixPoint::diag(l)?;
                    let rep = orbit_hausdorff_matrix(&y)?;
                    let numeric = matrix_curve_length(&y)?;
                    Ok(vec![
                        Cell::F(l),
                        Cell::F(rep.length),
                        Cell::F(numeric),
                        Cell::F(rep.d_p),
                        Cell::B(rep.kappa_check),
                    ])
                })
                .collect::<Result<_>>()?;
            let close = rows.iter().all(|r| match (&r[1], &r[2]) {
                (Cell::F(a), Cell::F(b)) => (a - b).abs() <= tol * a.abs().max(1.0),
                _ => false,
            });
            let lower = rows.iter().all(|r| r[4] == Cell::B(true));
            Ok((
                vec!["lambda", "length", "numeric_length", "d_p", "above_pi_d_p"],
                rows,
                vec![("length_matches".into(), close), ("linear_lower_bound".into(), lower)],
            ))
        }
        HausdorffKind::Product => {
            let blocks = parse_blocks(&p.blocks)?;
            if p.samples == 0 {
                return invalid("samples must be positive");
            }
            let dim: usize = blocks.iter().sum();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::with_capacity(p.samples);
            let mut all = true;
            for k in 0..p.samples {
                // |y| log-uniform in [1, 100]: the bound is linear, the measure of order |y|^{d_i - 1}
                let mut y: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                let n = crate::modelspace::norm(&y);
                let target = 10f64.powf(rng.gen_range(0.0..2.0));
                y.iter_mut().for_each(|v| *v *= target / n);
                let rep = orbit_hausdorff_product_spheres(&blocks, &y)?;
                let ok = rep.measure >= rep.lower_bound;
                all &= ok;
                rows.push(vec![
                    Cell::I(k as i64),
                    Cell::F(target),
                    Cell::F(rep.measure),
                    Cell::F(rep.lower_bound),
                    Cell::F(rep.m_g),
                    Cell::B(ok),
                ]);
            }
            Ok((vec!["sample", "norm_y", "measure", "lower_bound", "m_g", "holds"], rows, vec![("linear_lower_bound".into(), all)]))
        }
    }
}

/// Profile used by `rearrange`: a smooth bump, a tent, or a seeded sum of
/// three Gaussian bumps (generally not monotone).
pub fn generated_profile(space: &SpaceForm, kind: ProfileKind, r_max: f64, cells: usize, seed: u64) -> Result<RadialProfile> {
    match kind {
        ProfileKind::Bump => RadialProfile::sample(space.clone(), r_max, cells, |r| (1.0 - (r / r_max).powi(2)).powi(2)),
        ProfileKind::Tent => RadialProfile::sample(space.clone(), r_max, cells, |r| 1.0 - r / r_max),
        ProfileKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bumps: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.gen_range(0.0..r_max), rng.gen_range(0.2..1.5), rng.gen_range(0.1..0.5) * r_max))
                .collect();
            RadialProfile::sample(space.clone(), r_max, cells, |r| {
                let cutoff = (1.0 - (r / r_max).powi(2)).max(0.0);
                cutoff * bumps.iter().map(|&(c, a, w)| a * (-((r - c) / w).powi(2)).exp()).sum::<f64>()
            })
        }
    }
}

fn run_rearrange(p: &RearrangeParams, seed: u64, tol_norm: f64, tol_idem: f64) -> Result<Table> {
    let space = space_of(p.space, p.dim, p.curvature)?;
    let u = generated_profile(&space, p.profile, p.r_max, p.cells, seed)?;
    let star = euclidean_rearrangement(&u)?;
    let mut checks = Vec::new();
    for q in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinite] {
        let err = norm_preservation_check(&u, &star, q);
        checks.push((format!("norm_l{q}"), err < tol_norm));
    }
    let ps = polya_szego_check(&u, &star, p.p)?;
    checks.push(("polya_szego".into(), ps.holds));
    let again = euclidean_rearrangement(&star)?;
    let idem = star.grid().iter().zip(star.values()).map(|(&r, &v)| (again.value_at(r) - v).abs()).fold(0.0, f64::max);
    checks.push(("idempotent".into(), idem < tol_idem));
    let rows = star.grid().iter().zip(star.values()).map(|(&r, &v)| vec![Cell::F(r), Cell::F(v)]).collect();
    Ok((vec!["r", "u_star"], rows, checks))
}

fn run_funk(p: &FunkParams) -> Result<Table> {
    let pair = classify_pair(p.p, p.q, p.dim).ok();
    let t = match (p.t, &pair) {
        (Some(t), _) => t,
        (None, Some(pair)) => funk_parameter(pair),
        (None, None) => return invalid(format!("({}, {}) is not admissible for d = {}; pass --t", p.p, p.q, p.dim)),
    };
    let mut v = funk_beta_verdict(p.dim, p.p, p.q, t)?;
    v.regime = pair.map(|a| a.regime);
    let regime = v.regime.map(|r| r.to_string()).unwrap_or_else(|| "none".into());
    let row = vec![
        Cell::I(v.d as i64),
        Cell::F(v.p),
        v.q.into(),
        Cell::S(regime),
        Cell::F(v.t),
        v.w_norm_bound.into(),
        v.lq_norm.into(),
        Cell::B(v.embedding_fails),
    ];
    Ok((
        vec!["d", "p", "q", "regime", "t", "w_bound", "lq", "fails"],
        vec![row],
        vec![("embedding_fails".into(), v.embedding_fails)],
    ))
}

fn run_embedding(p: &EmbeddingParams) -> Result<Table> {
    let space = space_of(p.space, p.dim, p.curvature)?;
    let pair = classify_pair(p.p, p.q, p.dim).map_err(|r| Error::InvalidArgument(r.to_string()))?;
    let radii = parse_radii(&p.radii)?;
    let mut dir = vec![0.0; p.dim];
    dir[0] = 1.0;
    let centers = radii.iter().map(|&t| space.point_on_ray(&dir, t)).collect::<Result<Vec<_>>>()?;
    let est = embedding_sweep(&space, &centers, p.rho, &pair)?;
    let rows: Vec<Vec<Cell>> = radii
        .iter()
        .zip(&est)
        .map(|(&t, e)| {
            vec![Cell::F(t), Cell::F(e.rho), Cell::F(e.p), e.q.into(), Cell::F(e.estimate), Cell::I(e.best_seed as i64)]
        })
        .collect();
    let ok = est.iter().all(|e| e.estimate.is_finite() && e.estimate > 0.0);
    Ok((vec!["distance", "rho", "p", "q", "estimate", "best_seed"], rows, vec![("finite_positive".into(), ok)]))
}

fn run_pde(p: &PdeParams, tol: f64) -> Result<Table> {
    let problem = p.problem()?;
    let lambdas = parse_radii(&p.lambdas)?;
    let reports = multi_start_solve(&problem, &lambdas, p.starts)?;
    let mut rows = Vec::new();
    let mut refined_ok = true;
    for rep in &reports {
        let at = problem.with_lambda(rep.lambda)?;
        for (i, u) in rep.profiles.iter().enumerate() {
            let mut row = vec![
                Cell::F(rep.lambda),
                Cell::I(i as i64),
                Cell::F(rep.energies[i]),
                Cell::F(rep.gradient_norms[i]),
                Cell::F(u.max_value()),
            ];
            if p.refine {
                let c = refinement_check(&at, u)?;
                refined_ok &= c.resolved_gradient < tol;
                row.push(Cell::F(c.resolved_gradient));
            } else {
                row.push(Cell::F(f64::NAN));
            }
            rows.push(row);
        }
    }
    let converged = reports.iter().map(|r| r.starts.iter().filter(|s| s.converged).count()).sum::<usize>() > 0;
    let mut checks = vec![("some_start_converged".into(), converged)];
    if p.refine {
        checks.push(("grid_doubling".into(), refined_ok));
    }
    Ok((vec!["lambda", "index", "energy", "gradient_norm", "u_max", "refined_gradient"], rows, checks))
}

// ---------------------------------------------------------------------------
// process entry point

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: &'a str,
    message: String,
}

fn error_record(kind: &str, message: String) -> String {
    serde_json::to_string(&ErrorRecord { error: kind, message }).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}"))
}

/// Caps rayon's global pool from [`THREADS_ENV`] (ignored when unset or invalid).
pub fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args`, runs, writes the artifact; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage-error", e.to_string().trim_end().to_string()));
            return 1;
        }
    };
    let result = cli.into_config().and_then(|cfg| {
        let out = run(&cfg)?;
        let text = out.render()?;
        match &out.config.output.path {
            Some(path) => std::fs::write(path, text)?,
            None => {
                use std::io::Write;
                std::io::stdout().write_all(text.as_bytes())?;
            }
        }
        Ok(out)
    });
    match result {
        Ok(out) if out.passed() => 0,
        Ok(out) => {
            let failed: Vec<&str> = out.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
            eprintln!("{}", error_record("check-failed", format!("failed checks: {}", failed.join(", "))));
            2
        }
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), e.to_string()));
            1
        }
    }
}
