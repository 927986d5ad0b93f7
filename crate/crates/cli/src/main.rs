//! `canopy` — tree-canopy mapping from multispectral imagery.
//!
//! Subcommands cover each pipeline stage (synthesize, composite, indices,
//! mask, train, classify, evaluate, area, render) plus `run`, which chains
//! them end to end, and `ablate`, which compares feature sets. All stages
//! are deterministic: seeded randomness only, no timestamps in outputs.

use canopy_cli::commands;
use canopy_cli::errors::CliResult;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "canopy",
    version,
    about = "Map tree canopy from multispectral imagery",
    long_about = "Map tree canopy from multispectral imagery: cloud-screened median \
                  composites, spectral indices, rule-based exclusion masking, \
                  random-forest classification, accuracy assessment and area reporting. \
                  Every command is deterministic given its inputs and seeds."
)]
struct Cli {
    /// Worker threads for parallel sections (default: all CPU cores).
    /// Results are identical at any thread count.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene: observations, cloud masks, truth, labels
    Synth(commands::synth::SynthArgs),
    /// Median-composite observations after cloud screening
    Composite(commands::composite::CompositeArgs),
    /// Compute spectral index bands or the full feature stack
    Indices(commands::indices::IndicesArgs),
    /// Build the built-up / low-vegetation exclusion mask
    Mask(commands::mask::MaskArgs),
    /// Train a random-forest classifier from labeled pixels
    Train(commands::train::TrainArgs),
    /// Classify every pixel of a feature raster
    Classify(commands::classify::ClassifyArgs),
    /// Score a classification against reference truth or point labels
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Summarize tree-canopy area from a classification map
    Area(commands::area::AreaArgs),
    /// Render a classification map to a PPM image
    Render(commands::render::RenderArgs),
    /// Run the whole pipeline from a scene spec into an output directory
    Run(commands::run::RunArgs),
    /// Compare feature sets by training one model per set on a shared split
    Ablate(commands::ablate::AblateArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // The global pool can only be set once; a second attempt is a no-op.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result: CliResult<()> = match &cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Composite(args) => commands::composite::run(args),
        Command::Indices(args) => commands::indices::run(args),
        Command::Mask(args) => commands::mask::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Classify(args) => commands::classify::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Area(args) => commands::area::run(args),
        Command::Render(args) => commands::render::run(args),
        Command::Run(args) => commands::run::run(args),
        Command::Ablate(args) => commands::ablate::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
