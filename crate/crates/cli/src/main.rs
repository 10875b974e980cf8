use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use crocker_cli::config::{ConfigFile, ExperimentConfig, FeatureKind, Overrides};
use crocker_cli::pipeline::{self, Clamp, CorpusManifest};

#[derive(Parser)]
#[command(name = "crocker", version, about = "Crocker summaries of Vicsek simulations")]
struct Cli {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Noise set of a preset experiment (exp1..exp4).
    #[arg(long, global = true)]
    preset: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "crocker-out")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// n = 300, ℓ = 25, T = 2000, 100 simulations per η.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulations and write their traces.
    Simulate,
    /// Order parameters, barcodes, crocker plots and stacks from stored traces.
    Summarize,
    /// Pairwise distance matrix of one feature kind.
    Distances {
        #[arg(long)]
        feature: FeatureKind,
        /// Reduce to this many principal components first.
        #[arg(long)]
        pca: Option<usize>,
    },
    /// K-medoids on a stored distance matrix.
    Cluster {
        #[arg(long)]
        feature: FeatureKind,
        #[arg(long)]
        pca: Option<usize>,
        /// Cluster count (default: number of distinct η).
        #[arg(long)]
        k: Option<usize>,
    },
    /// simulate, summarize, distances and cluster for every feature kind.
    Experiment,
    /// CSV grid and PGM heatmap of a plot CSV or stack JSON.
    Render {
        input: PathBuf,
        /// Homology dimension of a plot CSV.
        #[arg(long, default_value_t = 0)]
        dim: usize,
        /// Clamp values above this level (default 6 for H0).
        #[arg(long, conflicts_with = "no_clamp")]
        clamp: Option<u32>,
        #[arg(long)]
        no_clamp: bool,
    },
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let flags = Overrides {
        preset: cli.preset.clone(),
        seed: cli.seed,
        paper_scale: cli.paper_scale,
    };
    ExperimentConfig::resolve(file, &flags)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()?;
    let out = &cli.out;
    match &cli.command {
        Command::Simulate => {
            let m = pipeline::cmd_simulate(&config(&cli)?, out)?;
            println!("wrote {} traces to {}", m.simulations.len(), out.display());
        }
        Command::Summarize => {
            let m = CorpusManifest::load(out)?;
            let checks = pipeline::cmd_summarize(&m, out)?;
            println!(
                "summarized {} simulations; {} stacks, {} monotonicity violations, {} slice mismatches",
                m.simulations.len(),
                checks.stacks,
                checks.monotonicity_violations,
                checks.slice_mismatches
            );
        }
        Command::Distances { feature, pca } => {
            let m = CorpusManifest::load(out)?;
            let dm = pipeline::cmd_distances(&m, out, feature, *pca)?;
            println!("{}x{} distance matrix for {feature}", dm.len(), dm.len());
        }
        Command::Cluster { feature, pca, k } => {
            let m = CorpusManifest::load(out)?;
            let name = pipeline::feature_stem(feature, *pca);
            let path = out.join("distances").join(format!("{name}.csv"));
            if !path.exists() {
                bail!("{} not found; run `distances` first", path.display());
            }
            let dm = crocker::io::read_distance_csv(std::io::BufReader::new(std::fs::File::open(&path)?))?;
            let k = k.unwrap_or_else(|| m.distinct_labels());
            let cfg = &m.config;
            let report = pipeline::cmd_cluster(&dm, &m.labels(), k, cfg.seed, cfg.restarts, out, &name)?;
            println!("accuracy {:.4}", report.accuracy);
            print!("{}", pipeline::confusion_table(&report.confusion));
        }
        Command::Experiment => {
            let report = pipeline::cmd_experiment(&config(&cli)?, out)?;
            print!("{}", report.table());
        }
        Command::Render { input, dim, clamp, no_clamp } => {
            let clamp = match (clamp, no_clamp) {
                (_, true) => Clamp::Off,
                (Some(v), _) => Clamp::At(*v),
                _ => Clamp::Auto,
            };
            let files = pipeline::cmd_render(input, &out.join("render"), *dim, clamp)?;
            println!("wrote {} files to {}", files.len(), out.join("render").display());
        }
    }
    Ok(())
}
