use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use subcheck::corpus::{self, CorpusEntry, CorpusError};
use subcheck::report::{self, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "subcheck",
    version,
    about = "Classify submersions and verify their structure identities numerically"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify each map (no theorem suite).
    Classify(Opts),
    /// Classify and run the theorem suite.
    Check(Opts),
    /// Classify and check every bundled entry (or the given paths).
    CorpusVerify(Opts),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct Opts {
    /// Definition files or directories. Bare names of bundled entries also resolve.
    paths: Vec<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sample points per instance (default: the file's own count).
    #[arg(long)]
    points: Option<usize>,
    /// Random field draws per point and check.
    #[arg(long, default_value_t = 2)]
    draws: usize,
    /// Replace every check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated check ids.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Bind a parameter, e.g. `alpha=pi/6`; replaces its grid.
    #[arg(long = "param", value_parser = corpus::parse_override)]
    params: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    report: Format,
}

fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CorpusError {
                    origin: p.display().to_string(),
                    path: "-".into(),
                    message: e.to_string(),
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "toml"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_entries(cmd: Command, opts: &Opts, params: &BTreeMap<String, f64>) -> Result<Vec<CorpusEntry>, CorpusError> {
    if opts.paths.is_empty() {
        if cmd == Command::CorpusVerify {
            return corpus::load_all_bundled(params);
        }
        return Err(CorpusError {
            origin: "-".into(),
            path: "-".into(),
            message: "no definition files given".into(),
        });
    }
    expand(&opts.paths)?
        .iter()
        .map(|p| corpus::load(Path::new(p), params))
        .collect()
}

fn init_threads() {
    if let Ok(v) = std::env::var("SUBCHECK_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring SUBCHECK_THREADS={v}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let (cmd, opts) = match &cli.command {
        Cmd::Classify(o) => (Command::Classify, o),
        Cmd::Check(o) => (Command::Check, o),
        Cmd::CorpusVerify(o) => (Command::CorpusVerify, o),
    };
    let params: BTreeMap<String, f64> = opts.params.iter().cloned().collect();
    let cfg = RunConfig {
        seed: opts.seed,
        points: opts.points,
        draws: opts.draws,
        tol: opts.tol,
        only: opts.only.clone(),
        params: params.clone(),
    };
    if let Err(msg) = cfg.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let entries = match load_entries(cmd, opts, &params) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let jobs: Vec<_> = entries.into_iter().map(|e| (e.origin, e.instances)).collect();
    let doc = report::run(&jobs, cmd, &cfg);
    match opts.report {
        Format::Json => print!("{}", doc.to_json()),
        Format::Text => print!("{}", doc.to_text()),
    }
    ExitCode::from(doc.exit_code)
}
