//! Experiment configuration.
//!
//! A config file is flat TOML: one `key = value` per line, lists as arrays.
//!
//! ```toml
//! preset = "exp2"          # eta set of a preset experiment
//! eta = [0.01, 0.1, 1.0]   # explicit eta set, wins over preset
//! sims_per_eta = 20
//! n = 100
//! box_length = 25.0
//! speed = 0.03
//! radius = 1.0
//! steps = 500
//! heading_rule = "circular_mean"   # or "arithmetic_mean"
//! metric = "euclidean"             # or "toroidal"
//! subsample = 10                   # time step of crocker slices
//! order_subsample = 1              # time step of order-parameter features
//! eps_count = 50
//! eps_max = 0.35
//! alphas = [0.0, 0.01, 0.02]
//! max_scale = 0.52                 # default eps_max + largest alpha
//! features = ["order_parameter", "crocker_plot_H0", "alpha_slice(0.05)"]
//! pca = 3                          # 0 disables the PCA column
//! seed = 0
//! restarts = 0                     # extra random PAM restarts
//! keep_traces = true               # experiment writes trace CSVs
//! diagram_deaths = "truncate"      # or "complete", "infinite"
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use crocker::summaries::ScaleGrid;
use crocker::vicsek::{CloudMetric, HeadingRule, VicsekParams};
use serde::{Deserialize, Serialize};

pub const EXP1: [f64; 5] = [0.01, 0.5, 1.0, 1.5, 2.0];
pub const EXP2: [f64; 3] = [0.01, 0.1, 1.0];
pub const EXP3: [f64; 6] = [0.01, 0.02, 0.19, 0.2, 1.99, 2.0];
pub const EXP4: [f64; 15] = [
    0.01, 0.02, 0.03, 0.05, 0.1, 0.19, 0.2, 0.21, 0.3, 0.5, 1.0, 1.5, 1.9, 1.99, 2.0,
];

pub fn preset_etas(name: &str) -> Result<Vec<f64>> {
    Ok(match name {
        "exp1" => EXP1.to_vec(),
        "exp2" => EXP2.to_vec(),
        "exp3" => EXP3.to_vec(),
        "exp4" => EXP4.to_vec(),
        _ => bail!("unknown preset {name:?} (expected exp1..exp4)"),
    })
}

/// Homology dimensions combined in a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    H0,
    H1,
    H01,
}

impl Dims {
    pub fn list(self) -> &'static [usize] {
        match self {
            Dims::H0 => &[0],
            Dims::H1 => &[1],
            Dims::H01 => &[0, 1],
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Dims::H0 => "H0",
            Dims::H1 => "H1",
            Dims::H01 => "H01",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureKind {
    OrderParameter,
    CrockerPlot(Dims),
    CrockerStack(Dims),
    /// One α-smoothed plot in `H0` and `H1`, concatenated.
    AlphaSlice(f64),
    /// Supremum bottleneck distance between per-slice diagrams of one dimension.
    StackedDiagrams(usize),
}

impl FeatureKind {
    /// Whether the feature is a vector (Euclidean distances, PCA possible).
    pub fn is_vector(&self) -> bool {
        !matches!(self, FeatureKind::StackedDiagrams(_))
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::OrderParameter => write!(f, "order_parameter"),
            FeatureKind::CrockerPlot(d) => write!(f, "crocker_plot_{}", d.suffix()),
            FeatureKind::CrockerStack(d) => write!(f, "crocker_stack_{}", d.suffix()),
            FeatureKind::AlphaSlice(a) => write!(f, "alpha_slice({a})"),
            FeatureKind::StackedDiagrams(0) => write!(f, "stacked_diagrams_bottleneck"),
            FeatureKind::StackedDiagrams(d) => write!(f, "stacked_diagrams_bottleneck_H{d}"),
        }
    }
}

impl FromStr for FeatureKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let dims = |d: &str| match d {
            "H0" => Ok(Dims::H0),
            "H1" => Ok(Dims::H1),
            "H01" => Ok(Dims::H01),
            _ => bail!("unknown homology suffix {d:?} in {s:?}"),
        };
        let s = s.trim();
        if s == "order_parameter" {
            return Ok(FeatureKind::OrderParameter);
        }
        if s == "stacked_diagrams_bottleneck" || s == "stacked_diagrams_bottleneck_H0" {
            return Ok(FeatureKind::StackedDiagrams(0));
        }
        if s == "stacked_diagrams_bottleneck_H1" {
            return Ok(FeatureKind::StackedDiagrams(1));
        }
        if let Some(d) = s.strip_prefix("crocker_plot_") {
            return Ok(FeatureKind::CrockerPlot(dims(d)?));
        }
        if let Some(d) = s.strip_prefix("crocker_stack_") {
            return Ok(FeatureKind::CrockerStack(dims(d)?));
        }
        if let Some(a) = s.strip_prefix("alpha_slice(").and_then(|r| r.strip_suffix(')')) {
            let a: f64 = a.trim().parse().with_context(|| format!("bad alpha in {s:?}"))?;
            return Ok(FeatureKind::AlphaSlice(a));
        }
        bail!("unknown feature kind {s:?}")
    }
}

impl Serialize for FeatureKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Deaths of classes still alive at `max_scale` in the diagrams compared by
/// stacked-diagram features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagramDeaths {
    /// Recorded at `max_scale`.
    #[default]
    Truncate,
    /// Filtration run to each slice's diameter; only one `H0` bar is infinite.
    Complete,
    /// Left at `+∞`.
    Infinite,
}

/// Feature rows of the Table-1 style report.
pub fn default_features() -> Vec<FeatureKind> {
    use Dims::*;
    vec![
        FeatureKind::OrderParameter,
        FeatureKind::CrockerPlot(H01),
        FeatureKind::CrockerPlot(H0),
        FeatureKind::CrockerPlot(H1),
        FeatureKind::CrockerStack(H01),
        FeatureKind::CrockerStack(H0),
        FeatureKind::CrockerStack(H1),
    ]
}

/// `0, 0.01, …, 0.17`.
pub fn default_alphas() -> Vec<f64> {
    (0..18).map(|k| k as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub eta_values: Vec<f64>,
    pub sims_per_eta: usize,
    pub n: usize,
    pub box_length: f64,
    pub speed: f64,
    pub radius: f64,
    pub steps: usize,
    pub heading_rule: HeadingRule,
    pub metric: CloudMetric,
    pub subsample: usize,
    pub order_subsample: usize,
    pub eps_count: usize,
    pub eps_max: f64,
    pub alphas: Vec<f64>,
    pub max_scale: f64,
    pub features: Vec<FeatureKind>,
    pub pca: Option<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub keep_traces: bool,
    pub diagram_deaths: DiagramDeaths,
}

impl Default for ExperimentConfig {
    /// Desk-scale exp1: `n = 100`, `T = 500`, 20 simulations per η.
    fn default() -> Self {
        let alphas = default_alphas();
        Self {
            eta_values: EXP1.to_vec(),
            sims_per_eta: 20,
            n: 100,
            box_length: 25.0,
            speed: 0.03,
            radius: 1.0,
            steps: 500,
            heading_rule: HeadingRule::CircularMean,
            metric: CloudMetric::Euclidean,
            subsample: 10,
            order_subsample: 1,
            eps_count: 50,
            eps_max: 0.35,
            max_scale: 0.35 + 0.17,
            alphas,
            features: default_features(),
            pca: Some(3),
            seed: 0,
            restarts: 0,
            keep_traces: true,
            diagram_deaths: DiagramDeaths::Truncate,
        }
    }
}

/// Keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub eta: Option<Vec<f64>>,
    pub sims_per_eta: Option<usize>,
    pub n: Option<usize>,
    pub box_length: Option<f64>,
    pub speed: Option<f64>,
    pub radius: Option<f64>,
    pub steps: Option<usize>,
    pub heading_rule: Option<HeadingRule>,
    pub metric: Option<CloudMetric>,
    pub subsample: Option<usize>,
    pub order_subsample: Option<usize>,
    pub eps_count: Option<usize>,
    pub eps_max: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub max_scale: Option<f64>,
    pub features: Option<Vec<FeatureKind>>,
    pub pca: Option<usize>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub keep_traces: Option<bool>,
    pub diagram_deaths: Option<DiagramDeaths>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid config file")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text)
    }
}

/// Command-line settings that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub paper_scale: bool,
}

impl ExperimentConfig {
    /// Defaults, then the file, then the flags.
    pub fn resolve(file: Option<ConfigFile>, flags: &Overrides) -> Result<Self> {
        let mut c = Self::default();
        let f = file.unwrap_or_default();
        if let Some(p) = &f.preset {
            c.eta_values = preset_etas(p)?;
        }
        let mut explicit_scale = false;
        macro_rules! take {
            ($($k:ident),*) => { $( if let Some(v) = f.$k { c.$k = v; } )* };
        }
        take!(sims_per_eta, n, box_length, speed, radius, steps, heading_rule, metric);
        take!(subsample, order_subsample, eps_count, eps_max, seed, restarts, keep_traces);
        take!(alphas, features, diagram_deaths);
        if let Some(e) = f.eta {
            c.eta_values = e;
        }
        if let Some(m) = f.max_scale {
            c.max_scale = m;
            explicit_scale = true;
        }
        if let Some(k) = f.pca {
            c.pca = (k > 0).then_some(k);
        }
        if let Some(p) = &flags.preset {
            c.eta_values = preset_etas(p)?;
        }
        if let Some(s) = flags.seed {
            c.seed = s;
        }
        if flags.paper_scale {
            c.n = 300;
            c.box_length = 25.0;
            c.steps = 2000;
            c.sims_per_eta = 100;
        }
        if !explicit_scale {
            c.max_scale = c.grid()?.required_scale();
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eta_values.is_empty() {
            bail!("eta set is empty");
        }
        if self.eta_values.iter().any(|e| !e.is_finite() || *e < 0.0) {
            bail!("eta values must be finite and nonnegative");
        }
        if self.sims_per_eta == 0 {
            bail!("sims_per_eta must be at least 1");
        }
        if self.subsample == 0 || self.order_subsample == 0 {
            bail!("subsample steps must be at least 1");
        }
        if !(self.max_scale > 0.0) {
            bail!("max_scale must be positive");
        }
        if self.features.is_empty() {
            bail!("no feature kinds configured");
        }
        for f in &self.features {
            if let FeatureKind::AlphaSlice(a) = f {
                self.alpha_index(*a)?;
            }
        }
        self.grid()?;
        self.vicsek(0.0, 0).validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<ScaleGrid> {
        Ok(ScaleGrid::linear(self.eps_count, self.eps_max, self.alphas.clone())?)
    }

    /// Position of `alpha` in the α grid.
    pub fn alpha_index(&self, alpha: f64) -> Result<usize> {
        self.alphas
            .iter()
            .position(|&a| (a - alpha).abs() < 1e-12)
            .with_context(|| format!("alpha {alpha} is not on the configured grid"))
    }

    pub fn vicsek(&self, eta: f64, seed: u64) -> VicsekParams {
        VicsekParams {
            n: self.n,
            box_length: self.box_length,
            speed: self.speed,
            noise: eta,
            radius: self.radius,
            steps: self.steps,
            seed,
            heading_rule: self.heading_rule,
            ..VicsekParams::default()
        }
    }

    pub fn simulation_count(&self) -> usize {
        self.eta_values.len() * self.sims_per_eta
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `rep` of the `eta_index`-th noise value.
pub fn derive_seed(seed: u64, eta_index: usize, rep: usize) -> u64 {
    seed ^ splitmix64(((eta_index as u64) << 32) | rep as u64)
}
