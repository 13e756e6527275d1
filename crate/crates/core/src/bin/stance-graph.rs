use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stance_graph::config::RunConfig;
use stance_graph::pipeline::{self, CellSummary, CommandOutput};
use stance_graph::{Error, Result};

#[derive(Parser)]
#[command(name = "stance-graph", version, about = "Cross-target stance detection from text and user networks")]
struct Cli {
    /// TOML run config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides paths.output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Comma-separated seeds (overrides harness.seeds).
    #[arg(long, global = true, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Force the reproducible single-threaded embedding trainer.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus and a run.toml pointing at it.
    Synth,
    /// Train node embeddings for the three relations.
    EmbedGraph,
    /// Train the four heads on one split and save checkpoints.
    Train {
        #[arg(long)]
        source: String,
        #[arg(long)]
        dest: String,
        #[arg(long)]
        shots: usize,
        #[arg(long, default_value_t = 24)]
        seed: u64,
    },
    /// Seed-averaged evaluation of one cell.
    Evaluate {
        #[arg(long)]
        source: String,
        #[arg(long)]
        dest: String,
        #[arg(long)]
        shots: usize,
    },
    /// The nine component subsets per target pair.
    Ablate {
        #[arg(long, requires = "dest")]
        source: Option<String>,
        #[arg(long, requires = "source")]
        dest: Option<String>,
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Pairs x shot counts x seeds.
    SweepShots {
        /// Comma-separated shot counts (overrides harness.shots).
        #[arg(long, value_delimiter = ',')]
        shots: Option<Vec<usize>>,
    },
    /// Render a results file as a table.
    Report {
        /// Defaults to sweep-shots.jsonl in the output directory.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.paths.output = out.clone();
    }
    if let Some(seeds) = &cli.seed_list {
        cfg.harness.seeds = seeds.clone();
    }
    if cli.deterministic {
        cfg.embed.deterministic = true;
    }
    if cfg.paths.output.as_os_str().is_empty() {
        cfg.paths.output = PathBuf::from(".");
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_cells(out: &CommandOutput) -> Result<()> {
    for c in &out.cells {
        println!("{}", serde_json::to_string(&CellSummary::from(c))?);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::param("workers", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = load_config(&cli)?;
    let out = match cli.command {
        Command::Synth => pipeline::synth(&cfg)?,
        Command::EmbedGraph => pipeline::embed_graph(&cfg)?,
        Command::Train {
            source,
            dest,
            shots,
            seed,
        } => pipeline::train(&cfg, &source, &dest, shots, seed)?,
        Command::Evaluate { source, dest, shots } => pipeline::evaluate(&cfg, &source, &dest, shots)?,
        Command::Ablate { source, dest, shots } => {
            let pair = source.as_deref().zip(dest.as_deref());
            pipeline::ablate(&cfg, pair, shots)?
        }
        Command::SweepShots { shots } => {
            if let Some(s) = shots {
                cfg.harness.shots = s;
            }
            pipeline::sweep_shots(&cfg)?
        }
        Command::Report { results } => {
            let path = results.unwrap_or_else(|| cfg.paths.output.join("sweep-shots.jsonl"));
            let (text, _) = pipeline::report(&cfg, &path)?;
            print!("{text}");
            return Ok(());
        }
    };
    print_cells(&out)?;
    eprintln!("manifest: {}", out.manifest_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
