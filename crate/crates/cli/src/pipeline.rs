//! Corpus generation and the simulate → summarize → distances → cluster chain.
//!
//! Everything lives under one output directory:
//!
//! ```text
//! manifest.json
//! traces/sim_00000.csv
//! summaries/sim_00000/{order.csv, barcodes.csv, plot_H0.csv, plot_H1.csv,
//!                      stack_H0.json, stack_H1.json, diagrams.csv}
//! distances/<feature>.csv        distances/<feature>_pca3.csv
//! clusters/<feature>.json        clusters/<feature>.txt
//! report.txt  report.json
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use crocker::analysis::{
    clustering_accuracy, euclidean_distance_matrix, k_medoids_pam_with, pca_reduce, Confusion,
    FeatureMatrix,
};
use crocker::distances::sup_bottleneck;
use crocker::io::{self as fmt, ClusterReport};
use crocker::metric::{pairwise_distances, DistanceMatrix};
use crocker::persistence::{rips_barcode, Barcode};
use crocker::summaries::{
    crocker_plot, crocker_stack, vectorize, vectorize_stack, BarcodeSeries, CrockerPlot,
    CrockerStack, ScaleGrid,
};
use crocker::vicsek::{order_parameter, simulate, to_point_clouds, SimulationTrace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{derive_seed, DiagramDeaths, ExperimentConfig, FeatureKind};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub eta: f64,
    pub seed: u64,
    /// Trace path relative to the output directory, when kept.
    pub trace: Option<String>,
}

/// The corpus in distance-matrix row order, plus the config that made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub config: ExperimentConfig,
    pub simulations: Vec<ManifestEntry>,
}

impl CorpusManifest {
    pub fn plan(cfg: &ExperimentConfig) -> Self {
        let mut simulations = Vec::with_capacity(cfg.simulation_count());
        for (e, &eta) in cfg.eta_values.iter().enumerate() {
            for r in 0..cfg.sims_per_eta {
                let id = format!("sim_{:05}", simulations.len());
                simulations.push(ManifestEntry {
                    trace: None,
                    eta,
                    seed: derive_seed(cfg.seed, e, r),
                    id,
                });
            }
        }
        Self {
            config: cfg.clone(),
            simulations,
        }
    }

    pub fn labels(&self) -> Vec<f64> {
        self.simulations.iter().map(|s| s.eta).collect()
    }

    pub fn distinct_labels(&self) -> usize {
        let mut l = self.labels();
        l.sort_by(f64::total_cmp);
        l.dedup();
        l.len()
    }

    pub fn load(out: &Path) -> Result<Self> {
        let path = out.join(MANIFEST);
        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        serde_json::from_reader(BufReader::new(f)).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        let mut w = create(&out.join(MANIFEST))?;
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> crocker::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).with_context(|| format!("writing {}", path.display()))?;
    w.flush()?;
    Ok(())
}

pub fn trace_path(out: &Path, id: &str) -> PathBuf {
    out.join("traces").join(format!("{id}.csv"))
}

pub fn summary_dir(out: &Path, id: &str) -> PathBuf {
    out.join("summaries").join(id)
}

/// File-name form of a feature kind, with an optional PCA suffix.
pub fn feature_stem(kind: &FeatureKind, pca: Option<usize>) -> String {
    let base: String = kind
        .to_string()
        .chars()
        .filter(|&c| c != ')')
        .map(|c| if c == '(' { '_' } else { c })
        .collect();
    match pca {
        Some(k) => format!("{base}_pca{k}"),
        None => base,
    }
}

fn run_one(cfg: &ExperimentConfig, entry: &ManifestEntry) -> Result<SimulationTrace> {
    Ok(simulate(&cfg.vicsek(entry.eta, entry.seed))?)
}

fn save_trace(out: &Path, entry: &mut ManifestEntry, trace: &SimulationTrace) -> Result<()> {
    let path = trace_path(out, &entry.id);
    write_with(&path, |w| fmt::write_trace_csv(w, &trace.frames))?;
    entry.trace = Some(format!("traces/{}.csv", entry.id));
    Ok(())
}

/// Runs every simulation of the corpus and writes its trace.
pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<CorpusManifest> {
    let mut manifest = CorpusManifest::plan(cfg);
    manifest
        .simulations
        .par_iter_mut()
        .try_for_each(|entry| -> Result<()> {
            let trace = run_one(cfg, entry)?;
            save_trace(out, entry, &trace)
        })?;
    manifest.save(out)?;
    Ok(manifest)
}

/// Consistency counts over every computed stack.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackChecks {
    pub stacks: usize,
    /// Stacks with a cell that increases along α.
    pub monotonicity_violations: usize,
    /// Stacks whose α = 0 slice differs from the crocker plot.
    pub slice_mismatches: usize,
}

impl StackChecks {
    fn merge(self, o: Self) -> Self {
        Self {
            stacks: self.stacks + o.stacks,
            monotonicity_violations: self.monotonicity_violations + o.monotonicity_violations,
            slice_mismatches: self.slice_mismatches + o.slice_mismatches,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.monotonicity_violations == 0 && self.slice_mismatches == 0
    }
}

/// Barcodes of every subsampled slice, up to `H1`.
pub fn barcode_series(cfg: &ExperimentConfig, trace: &SimulationTrace) -> Result<BarcodeSeries> {
    let clouds = to_point_clouds(trace, cfg.subsample, cfg.metric)?;
    let barcodes = clouds
        .clouds()
        .iter()
        .map(|c| Ok(rips_barcode(&pairwise_distances(c)?, cfg.max_scale, 1)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(BarcodeSeries::new(clouds.times().to_vec(), barcodes)?)
}

/// Barcodes of every slice over the whole filtration, up to `H1`.
///
/// Past the diameter the complex is a full simplex, so `H0` keeps exactly one
/// infinite bar and every other bar has a finite death.
pub fn complete_series(cfg: &ExperimentConfig, trace: &SimulationTrace) -> Result<BarcodeSeries> {
    let clouds = to_point_clouds(trace, cfg.subsample, cfg.metric)?;
    let barcodes = clouds
        .clouds()
        .iter()
        .map(|c| {
            let dm = pairwise_distances(c)?;
            let b = rips_barcode(&dm, dm.diameter(), 1)?;
            Ok(Barcode::new(b.intervals().iter().copied(), f64::INFINITY))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarcodeSeries::new(clouds.times().to_vec(), barcodes)?)
}

/// Infinite deaths replaced by the scale the barcodes were computed to.
pub fn truncate_series(series: &BarcodeSeries) -> Result<BarcodeSeries> {
    let barcodes = series
        .barcodes()
        .iter()
        .map(|b| {
            let top = b.max_scale();
            let bars = b.intervals().iter().map(|iv| {
                let mut iv = *iv;
                iv.death = iv.death.min(top);
                iv
            });
            Barcode::new(bars, top)
        })
        .collect();
    Ok(BarcodeSeries::new(series.times().to_vec(), barcodes)?)
}

fn summarize_trace(
    cfg: &ExperimentConfig,
    grid: &ScaleGrid,
    trace: &SimulationTrace,
    dir: &Path,
) -> Result<StackChecks> {
    let phi = order_parameter(trace);
    let times: Vec<f64> = (0..phi.len()).map(|t| t as f64 * trace.params.dt).collect();
    write_with(&dir.join("order.csv"), |w| fmt::write_series_csv(w, "phi", &times, &phi))?;

    let series = barcode_series(cfg, trace)?;
    write_with(&dir.join("barcodes.csv"), |w| fmt::write_barcode_series_csv(w, &series))?;

    if cfg.features.iter().any(|f| !f.is_vector()) {
        let diagrams = match cfg.diagram_deaths {
            DiagramDeaths::Truncate => truncate_series(&series)?,
            DiagramDeaths::Complete => complete_series(cfg, trace)?,
            DiagramDeaths::Infinite => series.clone(),
        };
        write_with(&dir.join("diagrams.csv"), |w| fmt::write_barcode_series_csv(w, &diagrams))?;
    }

    let zero = cfg.alphas.iter().position(|&a| a == 0.0);
    let mut checks = StackChecks::default();
    for dim in 0..2 {
        let plot = crocker_plot(&series, grid, dim)?;
        let stack = crocker_stack(&series, grid, dim)?;
        checks.stacks += 1;
        if !stack.is_monotone_in_alpha() {
            checks.monotonicity_violations += 1;
        }
        if let Some(a) = zero {
            if stack.slice(a).values != plot.values {
                checks.slice_mismatches += 1;
            }
        }
        write_with(&dir.join(format!("plot_H{dim}.csv")), |w| fmt::write_plot_csv(w, &plot))?;
        write_with(&dir.join(format!("stack_H{dim}.json")), |w| fmt::write_stack_json(w, &stack))?;
    }
    Ok(checks)
}

/// Computes order parameters, barcodes, plots and stacks from stored traces.
pub fn cmd_summarize(manifest: &CorpusManifest, out: &Path) -> Result<StackChecks> {
    let cfg = &manifest.config;
    let grid = cfg.grid()?;
    let checks = manifest
        .simulations
        .par_iter()
        .map(|entry| -> Result<StackChecks> {
            let rel = entry
                .trace
                .as_ref()
                .with_context(|| format!("{} has no stored trace", entry.id))?;
            let frames = fmt::read_trace_csv(open(&out.join(rel))?)
                .with_context(|| format!("reading trace of {}", entry.id))?;
            let trace = SimulationTrace {
                params: cfg.vicsek(entry.eta, entry.seed),
                frames,
            };
            summarize_trace(cfg, &grid, &trace, &summary_dir(out, &entry.id))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(checks.into_iter().fold(StackChecks::default(), StackChecks::merge))
}

/// Simulates and summarizes each simulation in one pass, keeping traces only
/// when configured.
fn simulate_and_summarize(cfg: &ExperimentConfig, out: &Path) -> Result<(CorpusManifest, StackChecks)> {
    let mut manifest = CorpusManifest::plan(cfg);
    let grid = cfg.grid()?;
    let checks = manifest
        .simulations
        .par_iter_mut()
        .map(|entry| -> Result<StackChecks> {
            let trace = run_one(cfg, entry)?;
            if cfg.keep_traces {
                save_trace(out, entry, &trace)?;
            }
            summarize_trace(cfg, &grid, &trace, &summary_dir(out, &entry.id))
        })
        .collect::<Result<Vec<_>>>()?;
    manifest.save(out)?;
    Ok((manifest, checks.into_iter().fold(StackChecks::default(), StackChecks::merge)))
}

pub fn read_plot(dir: &Path, dim: usize, max_scale: f64) -> Result<CrockerPlot> {
    let path = dir.join(format!("plot_H{dim}.csv"));
    Ok(fmt::read_plot_csv(open(&path)?, dim, 0.0, max_scale)?)
}

pub fn read_stack(dir: &Path, dim: usize) -> Result<CrockerStack> {
    let path = dir.join(format!("stack_H{dim}.json"));
    Ok(fmt::read_stack_json(open(&path)?)?)
}

fn feature_vector(cfg: &ExperimentConfig, dir: &Path, kind: &FeatureKind) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    match kind {
        FeatureKind::OrderParameter => {
            let (_, phi) = fmt::read_series_csv(open(&dir.join("order.csv"))?)?;
            v.extend(phi.into_iter().step_by(cfg.order_subsample));
        }
        FeatureKind::CrockerPlot(d) => {
            for &dim in d.list() {
                v.extend(vectorize(&read_plot(dir, dim, cfg.max_scale)?));
            }
        }
        FeatureKind::CrockerStack(d) => {
            for &dim in d.list() {
                v.extend(vectorize_stack(&read_stack(dir, dim)?));
            }
        }
        FeatureKind::AlphaSlice(alpha) => {
            let a = cfg.alpha_index(*alpha)?;
            for dim in 0..2 {
                v.extend(vectorize(&read_stack(dir, dim)?.slice(a)));
            }
        }
        FeatureKind::StackedDiagrams(_) => bail!("{kind} is not a vector feature"),
    }
    Ok(v)
}

/// One row per simulation, in manifest order.
pub fn load_features(manifest: &CorpusManifest, out: &Path, kind: &FeatureKind) -> Result<FeatureMatrix> {
    let rows = manifest
        .simulations
        .par_iter()
        .map(|e| feature_vector(&manifest.config, &summary_dir(out, &e.id), kind))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(rows, manifest.labels()).with_context(|| format!("assembling {kind} features"))
}

/// The full-filtration diagrams written by `summarize` for stacked-diagram features.
pub fn load_diagram_series(manifest: &CorpusManifest, out: &Path) -> Result<Vec<BarcodeSeries>> {
    manifest
        .simulations
        .par_iter()
        .map(|e| {
            let path = summary_dir(out, &e.id).join("diagrams.csv");
            if !path.exists() {
                bail!("{} missing; summarize with a stacked_diagrams feature configured", path.display());
            }
            let scale = match manifest.config.diagram_deaths {
                DiagramDeaths::Complete => f64::INFINITY,
                _ => manifest.config.max_scale,
            };
            Ok(fmt::read_barcode_series_csv(open(&path)?, scale)?)
        })
        .collect()
}

/// Pairwise supremum bottleneck distances over all time slices.
pub fn sup_bottleneck_matrix(series: &[BarcodeSeries], dim: usize) -> Result<DistanceMatrix> {
    let n = series.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| Ok(sup_bottleneck(&series[i], &series[j], dim)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut upper = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(values) {
        upper[i][j] = d;
    }
    Ok(DistanceMatrix::from_fn(n, |i, j| upper[i][j]))
}

/// Distance matrix of one feature kind, written to `distances/`.
pub fn cmd_distances(
    manifest: &CorpusManifest,
    out: &Path,
    kind: &FeatureKind,
    pca: Option<usize>,
) -> Result<DistanceMatrix> {
    let dm = match kind {
        FeatureKind::StackedDiagrams(dim) => {
            if pca.is_some() {
                bail!("PCA does not apply to {kind}");
            }
            sup_bottleneck_matrix(&load_diagram_series(manifest, out)?, *dim)?
        }
        _ => {
            let fm = load_features(manifest, out, kind)?;
            match pca {
                Some(k) => {
                    let k = k.min(fm.n_rows()).min(fm.n_cols());
                    euclidean_distance_matrix(&pca_reduce(&fm, k)?.0)
                }
                None => euclidean_distance_matrix(&fm),
            }
        }
    };
    let path = out.join("distances").join(format!("{}.csv", feature_stem(kind, pca)));
    write_with(&path, |w| fmt::write_distance_csv(w, &dm))?;
    Ok(dm)
}

/// Confusion matrix with true labels down and medoid labels across.
pub fn confusion_table(c: &Confusion) -> String {
    let mut s = String::from("true\\medoid");
    for m in &c.medoid_labels {
        s.push_str(&format!("\t{m}"));
    }
    s.push('\n');
    for (label, row) in c.true_labels.iter().zip(&c.counts) {
        s.push_str(&label.to_string());
        for n in row {
            s.push_str(&format!("\t{n}"));
        }
        s.push('\n');
    }
    s
}

/// PAM with `k` clusters (default: number of distinct labels); writes the
/// cluster JSON and a confusion table under `clusters/<name>`.
pub fn cmd_cluster(
    dm: &DistanceMatrix,
    labels: &[f64],
    k: usize,
    seed: u64,
    restarts: usize,
    out: &Path,
    name: &str,
) -> Result<ClusterReport> {
    if dm.len() != labels.len() {
        bail!("{} labels for a {}x{} distance matrix", labels.len(), dm.len(), dm.len());
    }
    let cr = k_medoids_pam_with(dm, k, seed, restarts)?;
    let (accuracy, confusion) = clustering_accuracy(&cr, labels)?;
    let report = ClusterReport::new(&cr, labels, accuracy, confusion);
    let dir = out.join("clusters");
    write_with(&dir.join(format!("{name}.json")), |w| fmt::write_cluster_json(w, &report))?;
    let mut w = create(&dir.join(format!("{name}.txt")))?;
    writeln!(w, "accuracy\t{accuracy:.4}")?;
    w.write_all(confusion_table(&report.confusion).as_bytes())?;
    w.flush()?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub feature: String,
    pub accuracy: f64,
    pub pca_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub eta_values: Vec<f64>,
    pub simulations: usize,
    pub pca: Option<usize>,
    pub rows: Vec<ReportRow>,
    pub checks: StackChecks,
}

impl ExperimentReport {
    pub fn row(&self, feature: &FeatureKind) -> Option<&ReportRow> {
        let name = feature.to_string();
        self.rows.iter().find(|r| r.feature == name)
    }

    /// Plain-text accuracy table.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.feature.len()).max().unwrap_or(7).max(7);
        let pca = match self.pca {
            Some(k) => format!("pca{k}"),
            None => "pca".into(),
        };
        let etas: Vec<String> = self.eta_values.iter().map(f64::to_string).collect();
        let mut s = format!(
            "eta = {{{}}}, {} simulations\n{:width$}  {:>8}  {:>8}\n",
            etas.join(", "),
            self.simulations,
            "feature",
            "accuracy",
            pca
        );
        for r in &self.rows {
            let p = r.pca_accuracy.map_or("-".to_string(), |a| format!("{a:.2}"));
            s.push_str(&format!("{:width$}  {:>8.2}  {:>8}\n", r.feature, r.accuracy, p));
        }
        s.push_str(&format!(
            "stacks checked {}, alpha-monotonicity violations {}, alpha=0 slice mismatches {}\n",
            self.checks.stacks, self.checks.monotonicity_violations, self.checks.slice_mismatches
        ));
        s
    }
}

/// Full pipeline for every configured feature kind; writes `report.txt`
/// and `report.json`.
pub fn cmd_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    let (manifest, checks) = simulate_and_summarize(cfg, out)?;
    let labels = manifest.labels();
    let k = manifest.distinct_labels();
    let mut rows = Vec::new();
    for kind in &cfg.features {
        let accuracy = |pca: Option<usize>| -> Result<f64> {
            let dm = cmd_distances(&manifest, out, kind, pca)?;
            let name = feature_stem(kind, pca);
            Ok(cmd_cluster(&dm, &labels, k, cfg.seed, cfg.restarts, out, &name)?.accuracy)
        };
        let plain = accuracy(None)?;
        let pca = match cfg.pca {
            Some(p) if kind.is_vector() => Some(accuracy(Some(p))?),
            _ => None,
        };
        rows.push(ReportRow {
            feature: kind.to_string(),
            accuracy: plain,
            pca_accuracy: pca,
        });
    }
    let report = ExperimentReport {
        eta_values: cfg.eta_values.clone(),
        simulations: manifest.simulations.len(),
        pca: cfg.pca,
        rows,
        checks,
    };
    let mut w = create(&out.join("report.json"))?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;
    let mut w = create(&out.join("report.txt"))?;
    w.write_all(report.table().as_bytes())?;
    w.flush()?;
    Ok(report)
}

/// Value clamp for rendered heatmaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Clamp {
    /// 6 for `H0`, none otherwise.
    #[default]
    Auto,
    Off,
    At(u32),
}

impl Clamp {
    fn for_dim(self, dim: usize) -> Option<u32> {
        match self {
            Clamp::Auto => (dim == 0).then_some(6),
            Clamp::Off => None,
            Clamp::At(v) => Some(v),
        }
    }
}

fn render_plot(plot: &CrockerPlot, dest: &Path, stem: &str, clamp: Clamp) -> Result<Vec<PathBuf>> {
    let csv = dest.join(format!("{stem}.csv"));
    let pgm = dest.join(format!("{stem}.pgm"));
    write_with(&csv, |w| fmt::write_plot_csv(w, plot))?;
    write_with(&pgm, |w| fmt::write_pgm(w, plot, clamp.for_dim(plot.dim)))?;
    Ok(vec![csv, pgm])
}

/// Writes a CSV grid and a PGM heatmap for a plot CSV, or one pair per α
/// slice for a stack JSON. `dim` labels a plot CSV, which does not record it.
pub fn cmd_render(input: &Path, dest: &Path, dim: usize, clamp: Clamp) -> Result<Vec<PathBuf>> {
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .context("input has no file name")?;
    let is_json = input.extension().is_some_and(|e| e == "json");
    if is_json {
        let stack = fmt::read_stack_json(open(input)?)?;
        let mut files = Vec::new();
        for a in 0..stack.alphas.len() {
            files.extend(render_plot(&stack.slice(a), dest, &format!("{stem}_a{a:02}"), clamp)?);
        }
        Ok(files)
    } else {
        let plot = fmt::read_plot_csv(open(input)?, dim, 0.0, f64::INFINITY)?;
        render_plot(&plot, dest, &format!("{stem}_render"), clamp)
    }
}
