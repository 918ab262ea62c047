//! Command-line driver: scene generation, enhancement, evaluation, geometry
//! inspection, and beam patterns.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hybeam::harness::{
    corpus, run_experiment, ExperimentConfig, MaskSource, OutputSet, write_beampattern_csv,
};
use hybeam::geometry::builtin_arrays;
use hybeam::hybrid::Variant;

#[derive(Parser)]
#[command(name = "hybeam", version, about = "Array-agnostic speech enhancement pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Experiment selection and overrides shared by the pipeline subcommands.
#[derive(Args, Clone)]
struct RunArgs {
    /// TOML experiment config; alternative to --preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset: exp1 (Ref/Small/Large) or exp2 (Seen/Unseen)
    #[arg(long, value_parser = ["exp1", "exp2"])]
    preset: Option<String>,
    /// Corpus directory of 16 kHz mono WAVs (with --preset)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory (with --preset)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,
    /// Scenes per array override
    #[arg(long)]
    scenes_per_array: Option<usize>,
    /// Run a single variant (baseline1|baseline2|hybrid1|hybrid2|hybrid3)
    #[arg(long)]
    variant: Option<String>,
    /// Bandwise cutoff frequency in Hz
    #[arg(long)]
    cutoff_hz: Option<f64>,
    /// Comma-separated band edges in Hz, e.g. 0,500,1000,2000,4000,8000
    #[arg(long)]
    bands: Option<String>,
    /// Image-source reflection order (omit to span each room's T60)
    #[arg(long)]
    max_order: Option<usize>,
    /// Also write mixture/enhanced WAVs and masks
    #[arg(long)]
    save_audio: bool,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory of external <scene>__<variant>.hbmk masks; defaults to the
    /// oracle mask
    #[arg(long)]
    mask_dir: Option<PathBuf>,
}

impl RunArgs {
    fn build_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.preset.as_deref()) {
            (Some(path), None) => ExperimentConfig::from_toml_file(path)
                .with_context(|| format!("loading {}", path.display()))?,
            (None, Some(preset)) => {
                let corpus = self
                    .corpus
                    .clone()
                    .context("--preset requires --corpus <dir>")?;
                let out = self.out.clone().context("--preset requires --out <dir>")?;
                match preset {
                    "exp1" => ExperimentConfig::experiment_1(corpus, out),
                    _ => ExperimentConfig::experiment_2(corpus, out),
                }
            }
            (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
            (None, None) => bail!("provide --config <file> or --preset exp1|exp2"),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(n) = self.scenes_per_array {
            cfg.scenes_per_array = n;
        }
        if let Some(v) = &self.variant {
            cfg.variants = vec![v.parse::<Variant>()?];
        }
        if let Some(f) = self.cutoff_hz {
            cfg.cutoff_hz = f;
        }
        if let Some(bands) = &self.bands {
            cfg.band_edges_hz = bands
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad band edge: {e}")))
                .collect::<Result<Vec<f64>>>()?;
        }
        if let Some(order) = self.max_order {
            cfg.max_order = Some(order);
        }
        if self.save_audio {
            cfg.save_audio = true;
        }
        if let Some(jobs) = self.jobs {
            cfg.jobs = jobs;
        }
        Ok(cfg)
    }

    fn mask_source(&self) -> MaskSource {
        match &self.mask_dir {
            Some(dir) => MaskSource::ExternalDir(dir.clone()),
            None => MaskSource::Oracle,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample scenes and render mixtures/target images to the output tree
    Gen(RunArgs),
    /// Render, enhance with oracle or external masks, and write enhanced WAVs
    Enhance(RunArgs),
    /// Render, enhance, and emit metrics reports (no audio unless --save-audio)
    Eval(RunArgs),
    /// Full pipeline: scenes, enhancement, metrics, reports
    Run(RunArgs),
    /// Print or validate the shipped array geometry file
    Arrays {
        /// Check invariants and perturbation provenance instead of printing
        #[arg(long)]
        validate: bool,
    },
    /// Write directivity curves for one array's beam to CSV
    Beampattern {
        /// Array id from the geometry file
        #[arg(long, default_value = "0")]
        array: String,
        /// Beam label: front, back, left, right
        #[arg(long, default_value = "front")]
        beam: String,
        /// Comma-separated frequencies in Hz
        #[arg(long, default_value = "250,1000,4000")]
        freqs: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a deterministic synthetic 16 kHz corpus
    SynthCorpus {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Number of utterances
        #[arg(long, default_value_t = 24)]
        count: usize,
        /// Seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum duration in seconds
        #[arg(long, default_value_t = 2.0)]
        min_duration: f64,
        /// Maximum duration in seconds
        #[arg(long, default_value_t = 3.5)]
        max_duration: f64,
    },
}

fn pipeline(args: &RunArgs, outputs_for: fn(&ExperimentConfig) -> OutputSet) -> Result<()> {
    let cfg = args.build_config()?;
    let outputs = outputs_for(&cfg);
    let report = run_experiment(&cfg, &args.mask_source(), &outputs)?;
    eprintln!(
        "{}: {} records over {} arrays -> {}",
        cfg.name,
        report.per_utterance.len(),
        cfg.arrays.len(),
        cfg.output_dir.display()
    );
    for (group, variants) in &report.per_group {
        for (variant, cell) in variants {
            let si = cell.si_sdr_db.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            eprintln!("  {group:>8} {variant:<10} n={:<4} si_sdr={si} dB", cell.count);
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen(args) => pipeline(&args, |_| OutputSet::generate()),
        Command::Enhance(args) => pipeline(&args, |cfg| OutputSet::enhance(cfg.save_audio)),
        Command::Eval(args) => pipeline(&args, |_| OutputSet::evaluate()),
        Command::Run(args) => pipeline(&args, |cfg| OutputSet::full(cfg.save_audio)),
        Command::Arrays { validate } => {
            let set = builtin_arrays();
            if validate {
                set.validate()?;
                eprintln!("geometry file OK: {} arrays", set.arrays.len());
            } else {
                print!("{}", set.to_toml());
            }
            Ok(())
        }
        Command::Beampattern { array, beam, freqs, out } => {
            let set = builtin_arrays();
            let arr = set.get(&array)?;
            let freqs: Vec<f64> = freqs
                .split(',')
                .map(|s| s.trim().parse::<f64>().context("bad frequency"))
                .collect::<Result<_>>()?;
            if let Some(dir) = out.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let file = std::fs::File::create(&out)?;
            write_beampattern_csv(arr, &beam, &freqs, file)?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::SynthCorpus { out, count, seed, min_duration, max_duration } => {
            let paths =
                corpus::generate_synthetic_corpus(&out, count, seed, (min_duration, max_duration))?;
            eprintln!("wrote {} utterances to {}", paths.len(), out.display());
            Ok(())
        }
    }
}
