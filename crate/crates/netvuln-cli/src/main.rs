//! `netvuln` — trust-based community vulnerability analysis.
//!
//! Single binary with one subcommand per pipeline stage plus `pipeline`
//! to run the whole chain from a flat key=value config. Every stage is
//! seeded and sequential, so identical inputs give byte-identical output
//! files. Nonzero exit codes are stage-tagged: 2 input/parse, 3 trust,
//! 4 community detection, 5 role classification, 6 vulnerability,
//! 7 evaluation.

mod config;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PipelineArgs;
use crate::runner::Stage;

#[derive(Parser)]
#[command(name = "netvuln", version, about = "Trust-based community vulnerability analytics")]
pub struct Cli {
    /// Worker thread count (1 is the determinism reference; stages run
    /// sequentially either way). Defaults to $NETVULN_THREADS or 1.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
pub struct EdgesArgs {
    /// Edge list path (src, dst, optional weight per line)
    #[arg(long)]
    pub edges: PathBuf,

    /// Edge list separator: tsv or csv
    #[arg(long, default_value = "tsv")]
    pub format: String,
}

#[derive(Args)]
pub struct TsmArgs {
    /// Involvement exponent s in the trust propagation equations
    #[arg(long, default_value_t = 1.0)]
    pub involvement: f64,

    #[arg(long, default_value_t = 100)]
    pub max_iters: u32,

    /// Convergence threshold on the max per-node score delta
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,

    /// Lower bound of the log min-max normalized score range
    #[arg(long, default_value_t = 1e-6)]
    pub log_floor: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compute trust scores and write node_id,ti,tw
    Trust {
        #[command(flatten)]
        edges: EdgesArgs,
        #[command(flatten)]
        tsm: TsmArgs,
        #[arg(long)]
        out: PathBuf,
    },

    /// Detect communities (or load an external assignment)
    Communities {
        #[command(flatten)]
        edges: EdgesArgs,
        /// louvain, lpa, or file
        #[arg(long, default_value = "louvain")]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Louvain resolution gamma
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        /// Label-propagation sweep cap
        #[arg(long, default_value_t = 100)]
        max_sweeps: u32,
        /// Assignment file, required with --algo file
        #[arg(long)]
        assignment: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },

    /// Classify members of each community as boundary or core
    Roles {
        #[command(flatten)]
        edges: EdgesArgs,
        /// Community assignment file (node<TAB>community)
        #[arg(long)]
        communities: PathBuf,
        /// follow-out or any
        #[arg(long, default_value = "follow-out")]
        edge_semantics: String,
        #[arg(long)]
        out_roles: PathBuf,
        #[arg(long)]
        out_neighbors: PathBuf,
    },

    /// Node- and community-level vulnerability report
    Vulnerability {
        #[command(flatten)]
        edges: EdgesArgs,
        #[command(flatten)]
        tsm: TsmArgs,
        #[arg(long)]
        communities: PathBuf,
        #[arg(long, default_value = "follow-out")]
        edge_semantics: String,
        /// Restrict each neighbor set to the listed known spreaders
        #[arg(long)]
        infected_only: Option<PathBuf>,
        #[arg(long)]
        out_json: PathBuf,
        #[arg(long)]
        out_nodes: Option<PathBuf>,
        #[arg(long)]
        out_communities: Option<PathBuf>,
    },

    /// Ranking evaluation against a ground-truth spreader set
    Evaluate {
        #[command(flatten)]
        edges: EdgesArgs,
        #[command(flatten)]
        tsm: TsmArgs,
        #[arg(long)]
        communities: PathBuf,
        #[arg(long, default_value = "follow-out")]
        edge_semantics: String,
        /// Ground-truth spreader list, one node id per line
        #[arg(long)]
        spreaders: PathBuf,
        /// Precision cutoffs, ascending
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,15")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 15)]
        map_k: usize,
        /// standard or literal
        #[arg(long, default_value = "standard")]
        map_variant: String,
        #[arg(long)]
        out_json: PathBuf,
        /// One summary row per network
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },

    /// Seeded synthetic networks and spreader plantings
    Synth {
        #[command(subcommand)]
        cmd: SynthCommand,
    },

    /// Run the whole chain from a flat key=value config file
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum SynthCommand {
    /// Stochastic block model edge list with its planted assignment
    Sbm {
        /// Comma-separated block sizes
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<usize>,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample each unordered pair once and add both directions
        #[arg(long)]
        undirected: bool,
        #[arg(long)]
        out: PathBuf,
        /// Planted community assignment output
        #[arg(long)]
        truth: Option<PathBuf>,
    },

    /// Flag spreader nodes over an existing network
    Plant {
        #[command(flatten)]
        edges: EdgesArgs,
        #[command(flatten)]
        tsm: TsmArgs,
        /// uniform, trust, or boundary
        #[arg(long)]
        strategy: String,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Community assignment, required with --strategy boundary
        #[arg(long)]
        communities: Option<PathBuf>,
        #[arg(long, default_value = "follow-out")]
        edge_semantics: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = runner::resolve_threads(cli.threads) {
        eprintln!("netvuln: error [input]: {e}");
        return ExitCode::from(Stage::Input.exit_code());
    }
    match runner::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("netvuln: error [{}]: {}", failure.stage, failure.error);
            ExitCode::from(failure.stage.exit_code())
        }
    }
}
