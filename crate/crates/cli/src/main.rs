use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pcg_annotator::ServerConfig;
use pcg_core::features::FeatureKind;
use pcg_pipeline::experiment::{evaluate_checkpoint, prepare};
use pcg_pipeline::features::extract_features;
use pcg_pipeline::manifest::BuildOptions;
use pcg_pipeline::store::open_or_build;
use pcg_pipeline::synth::{generate_toy_dataset, ToyConfig};
use pcg_pipeline::{ablate_window, run_experiment, Experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "pcg", version, about = "Heart sound murmur and abnormality experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dataset_root: Option<PathBuf>,
    /// e1, e2, e3 or e4.
    #[arg(long, global = true)]
    experiment: Option<Experiment>,
    /// Overrides `work_dir` from the config.
    #[arg(long, global = true)]
    work_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, segment and normalize a dataset into the segment store.
    Preprocess,
    /// Compute and cache feature maps for the experiment's segments.
    Extract {
        /// Overrides the configured feature kind.
        #[arg(long)]
        kind: Option<FeatureKind>,
    },
    /// Train, select the best validation epoch and report test metrics.
    Train,
    /// Evaluate a saved checkpoint on the test split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// One full run per window length.
    Ablate {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 3, 4, 5])]
        sizes: Vec<u32>,
    },
    /// Serve the segment review API.
    AnnotateServe {
        /// Segment store; defaults to the configured store.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory with the review UI.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Allowed CORS origin; repeatable. Defaults to any localhost origin.
        #[arg(long)]
        origin: Vec<String>,
    },
    /// Write the synthetic three-class dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        patients: usize,
        #[arg(long, default_value_t = 12.0)]
        seconds: f64,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::for_experiment(common.experiment.unwrap_or_default()),
    };
    if let Some(e) = common.experiment {
        cfg.experiment = e;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(root) = &common.dataset_root {
        cfg.dataset_root = Some(root.clone());
    }
    if let Some(dir) = &common.work_dir {
        cfg.work_dir = dir.clone();
    }
    Ok(cfg)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { out, patients, seconds } => {
            let toy = ToyConfig {
                patients,
                seconds,
                seed: cli.common.seed.unwrap_or(ToyConfig::default().seed),
                ..ToyConfig::default()
            };
            let n = generate_toy_dataset(&out, &toy)?;
            println!("wrote {n} recordings to {}", out.display());
        }
        Command::Preprocess => {
            let cfg = load_config(&cli.common)?;
            let Some(root) = &cfg.dataset_root else { bail!("--dataset-root is required") };
            let options = BuildOptions {
                preprocess: cfg.preprocess,
                relabel_file: cfg.relabel_file.clone(),
            };
            let (store, manifest) = open_or_build(root, &cfg.store_dir(), &options)?;
            println!("{} segments in {}", manifest.len(), store.root().display());
            print_json(&manifest.counts(None));
        }
        Command::Extract { kind } => {
            let mut cfg = load_config(&cli.common)?;
            if let Some(k) = kind {
                cfg.features.kind = k;
            }
            let (store, manifest) = prepare(&cfg)?;
            let r = extract_features(&store, &manifest.entries, cfg.features.kind, &cfg.features.params)?;
            println!("{} computed, {} cached", r.computed, r.cached);
        }
        Command::Train => {
            let cfg = load_config(&cli.common)?;
            let out = run_experiment(&cfg)?;
            println!("best epoch {}; results in {}", out.best_epoch, out.run_dir.display());
            print_json(&out.report);
            if let Some(v) = &out.voted {
                println!("voted:");
                print_json(v);
            }
        }
        Command::Eval { checkpoint } => {
            let cfg = load_config(&cli.common)?;
            let (report, voted) = evaluate_checkpoint(&cfg, &checkpoint)?;
            print_json(&report);
            if let Some(v) = voted {
                println!("voted:");
                print_json(&v);
            }
        }
        Command::Ablate { sizes } => {
            let cfg = load_config(&cli.common)?;
            let table = ablate_window(&cfg, &sizes)?;
            std::fs::create_dir_all(&cfg.work_dir)?;
            let md = table.to_markdown();
            std::fs::write(cfg.work_dir.join("ablation.md"), &md)?;
            std::fs::write(cfg.work_dir.join("ablation.json"), serde_json::to_vec_pretty(&table)?)?;
            print!("{md}");
        }
        Command::AnnotateServe { store, addr, static_dir, origin } => {
            let store = match store {
                Some(s) => s,
                None => load_config(&cli.common)?.store_dir(),
            };
            let config = ServerConfig {
                static_dir,
                cors_origins: origin,
                ..ServerConfig::new(store)
            };
            tokio::runtime::Runtime::new()?.block_on(pcg_annotator::serve(&config, addr))?;
        }
    }
    Ok(())
}
