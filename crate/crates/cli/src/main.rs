mod cache;
mod commands;
mod job;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::cache::Cache;
use crate::job::{Command, JobSpec};

#[derive(Parser, Debug)]
#[command(name = "ancestrec", version, about = "Ancestor correlators of A_n singularities")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Singularity type, e.g. `A2`.
    #[arg(long, global = true, default_value = "A1")]
    pub model: String,
    /// Point as a JSON array of numbers or `[re, im]` pairs.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t: Option<String>,
    #[arg(long, global = true, default_value_t = 2)]
    pub gmax: usize,
    #[arg(long, global = true, default_value_t = 3)]
    pub nmax: usize,
    /// R-matrix order.
    #[arg(long, global = true)]
    pub order: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, env = "ANCESTREC_CACHE")]
    pub cache: Option<PathBuf>,
    /// JSON object `{"direction": [...], "eps": [...]}` for `sweep`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// Evaluate correlators by extended integrals (required at non-semisimple points).
    #[arg(long, global = true)]
    pub caustic: bool,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Adds this amount to every entry of R_1 before certification.
    #[arg(long, global = true, hide = true)]
    pub perturb_r: Option<f64>,
}

#[derive(Subcommand, Debug, Clone)]
enum Sub {
    /// Correlator table at a point.
    Correlators,
    /// Invariant and oracle checks at a point.
    Verify,
    /// Approach a caustic and compare extrapolated limits with extended integrals.
    Sweep,
    /// Compare extended integrals with residue sums.
    #[command(name = "theorem2")]
    Extended {
        /// Bound on the total t-degree of compared entries.
        #[arg(long, default_value_t = 2)]
        deg: usize,
    },
}

/// Invalid user input (exit 2).
#[derive(Debug)]
pub struct Validation(pub String);

impl std::fmt::Display for Validation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Validation {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Validation>().is_some() {
        return 2;
    }
    match err.downcast_ref::<ancestrec::Error>() {
        Some(ancestrec::Error::Invalid(_)) | Some(ancestrec::Error::NotSemisimple { .. }) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let command = match cli.command {
        Sub::Correlators => Command::Correlators,
        Sub::Verify => Command::Verify,
        Sub::Sweep => Command::Sweep,
        Sub::Extended { deg } => Command::Extended { deg },
    };
    let spec = JobSpec::from_args(&cli.common, command)?;
    let cache = cli.common.cache.as_ref().map(|d| Cache::new(d.clone(), env!("CARGO_PKG_VERSION")));
    let doc = match cache.as_ref().and_then(|c| c.load(&spec)) {
        Some(doc) => doc,
        None => {
            let doc = commands::execute(&spec)?;
            if let Some(c) = &cache {
                if let Err(e) = c.store(&spec, &doc) {
                    eprintln!("warning: cache write failed: {e}");
                }
            }
            doc
        }
    };
    let pass = doc.get("pass").and_then(|p| p.as_bool()).unwrap_or(true);
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &cli.common.report {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
