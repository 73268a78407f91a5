//! `cocoft`: prepare MS COCO category subsets for detector fine-tuning and
//! score detection results.
//!
//! Machine-readable output is JSON on stdout; diagnostics (warnings, error
//! messages, the evaluation summary table) go to stderr. Exit codes: 0
//! success, 1 usage error, 2 data/integrity error, 3 empty result.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

#[derive(Parser)]
#[command(
    name = "cocoft",
    version,
    about = "COCO category-subset tooling: filter instances files, rewrite prototxt network \
             definitions, pick demo images, and score detection results"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List the categories of an instances file, sorted by id
    ListCategories {
        /// COCO instances JSON file
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Tsv)]
        format: Format,
    },
    /// Reduce an instances file to the configured categories
    ///
    /// Writes `filtered.json` and `category_map.json` into the output
    /// directory and prints a one-line filter report to stdout.
    Filter {
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        /// Config file carrying CAT_IDS
        #[arg(long, value_name = "PATH")]
        cfg: PathBuf,
        /// Output directory
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Rewrite category-dependent parameters in prototxt files
    Rewrite {
        /// Config file carrying CAT_IDS (K = number of ids)
        #[arg(long, value_name = "PATH")]
        cfg: PathBuf,
        /// Output directory (rewritten files keep their names)
        #[arg(long, value_name = "DIR", conflicts_with = "in_place")]
        out: Option<PathBuf>,
        /// Overwrite the input files instead of writing to --out
        #[arg(long)]
        in_place: bool,
        /// Check the 4x / param_str relationship after rewriting
        #[arg(long)]
        verify: bool,
        /// Network definition files to rewrite
        #[arg(required = true, value_name = "PROTOTXT")]
        prototxts: Vec<PathBuf>,
    },
    /// Pick random demo images that contain the selected categories
    SelectDemo {
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        #[arg(long, value_name = "PATH")]
        cfg: PathBuf,
        /// How many images to pick (default: DEMO_COUNT from the config)
        #[arg(long, value_name = "N")]
        count: Option<usize>,
        /// RNG seed (default: SEED from the config, else 0)
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
    },
    /// Score a detection results file against ground truth
    ///
    /// Prints the report as JSON on stdout and a summary table on stderr.
    Evaluate {
        /// Ground-truth instances JSON
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        /// Detections JSON (COCO results format)
        #[arg(long, value_name = "PATH")]
        detections: PathBuf,
        #[arg(long, value_name = "PATH")]
        cfg: PathBuf,
    },
    /// Check an instances file and report findings and warnings
    Validate {
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
    },
    /// filter + rewrite + select-demo in one run
    Pipeline {
        #[arg(long, value_name = "PATH")]
        instances: PathBuf,
        #[arg(long, value_name = "PATH")]
        cfg: PathBuf,
        /// Output directory for every artifact
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Network definition files to rewrite (repeatable)
        #[arg(long = "prototxt", value_name = "PATH")]
        prototxts: Vec<PathBuf>,
        #[arg(long, value_name = "N")]
        count: Option<usize>,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Check rewrite consistency as part of the run
        #[arg(long)]
        verify: bool,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::ListCategories { instances, format } => {
            commands::list_categories(&instances, format)
        }
        Command::Filter {
            instances,
            cfg,
            out,
        } => commands::filter(&instances, &cfg, &out),
        Command::Rewrite {
            cfg,
            out,
            in_place,
            verify,
            prototxts,
        } => commands::rewrite(&prototxts, &cfg, out.as_deref(), in_place, verify),
        Command::SelectDemo {
            instances,
            cfg,
            count,
            seed,
        } => commands::select_demo(&instances, &cfg, count, seed),
        Command::Evaluate {
            instances,
            detections,
            cfg,
        } => commands::evaluate(&instances, &detections, &cfg),
        Command::Validate { instances } => commands::validate(&instances),
        Command::Pipeline {
            instances,
            cfg,
            out,
            prototxts,
            count,
            seed,
            verify,
        } => commands::pipeline(&instances, &cfg, &out, &prototxts, count, seed, verify),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
