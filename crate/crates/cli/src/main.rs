mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tsanet::proposal::NmsKind;
use tsanet::{Error, ErrorKind, RunConfig};

/// Temporal action proposals: synthesize data, train, propose, evaluate.
#[derive(Debug, Parser)]
#[command(name = "tsanet", version)]
struct Cli {
    /// TOML run configuration; omitted keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-video stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset split into train and val files.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the critical-point detector.
    TrainDetector {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Checkpoint to write.
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch loss log (default: `<out>.loss.csv`).
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Train the pair-compatibility network on top of a trained detector.
    TrainPhi {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        detector: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Generate ranked proposals for every video in a feature file.
    Propose {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        detector: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_parser = ["greedy", "soft"])]
        nms: Option<String>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Label proposals with the class of the best-matching annotated instance.
        #[arg(long)]
        oracle_classes: Option<PathBuf>,
    },
    /// Score proposals against annotations.
    Eval {
        #[arg(long)]
        proposals: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        /// Directory for report.txt, ar_an.csv and recall_iou.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a two-column curve CSV as an SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn kind_label(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Numeric => "numeric",
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Command::Propose { nms, top_k, .. } = &cli.command {
        if let Some(kind) = nms {
            cfg.nms.kind = kind.parse::<NmsKind>().map_err(Error::Config)?;
        }
        if let Some(k) = top_k {
            cfg.proposals.top_k = *k;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::Synth { out } => commands::synth(&cfg, &out),
        Command::TrainDetector {
            features,
            annotations,
            out,
            loss_csv,
        } => commands::train_detector(&cfg, &features, &annotations, &out, loss_csv),
        Command::TrainPhi {
            features,
            annotations,
            detector,
            out,
            loss_csv,
        } => commands::train_phi(&cfg, &features, &annotations, &detector, &out, loss_csv),
        Command::Propose {
            features,
            detector,
            phi,
            out,
            oracle_classes,
            ..
        } => commands::propose(
            &cfg,
            &features,
            &detector,
            &phi,
            &out,
            oracle_classes.as_deref(),
        ),
        Command::Eval {
            proposals,
            annotations,
            out,
        } => commands::eval(&cfg, &proposals, &annotations, &out),
        Command::Plot { csv, out } => commands::plot(&csv, &out),
        Command::PrintConfig => {
            print!("{}", cfg.to_toml_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid usage");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.kind();
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", kind_label(kind));
            ExitCode::from(exit_code(kind))
        }
    }
}
