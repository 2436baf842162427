//! `sparse-qi`: batch experiments for sparse-grid recovery and cubature.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{ConfigError, Loaded};
use table::Table;

const THREADS_VAR: &str = "SPARSE_QI_THREADS";

#[derive(Parser)]
#[command(
    name = "sparse-qi",
    version,
    about = "Sparse-grid B-spline recovery and cubature experiments"
)]
#[command(after_help = "Set SPARSE_QI_THREADS to cap the number of worker threads.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set spec.epsilon=0.1`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Comma-separated budgets; replaces `run.budgets`.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<u64>>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// `csv` or `jsonl`.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct Single {
    #[command(flatten)]
    common: Common,
    /// Budget target; defaults to the smallest configured budget.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Level-set size and budget growth per budget target.
    Gridinfo(Common),
    /// Recovery error per budget and test function.
    Recover(Common),
    /// Cubature error per budget and test function.
    Integrate(Common),
    /// Budgets of anisotropic, Smolyak and full grids at equal threshold.
    Compare(Common),
    /// Cubature points and weights for one budget.
    ExportRule(Single),
    /// Level set for one budget in the text format.
    DumpGrid(Single),
}

enum Exit {
    Failure(Failure),
    Io(String),
}

impl From<Failure> for Exit {
    fn from(f: Failure) -> Self {
        Exit::Failure(f)
    }
}

impl From<ConfigError> for Exit {
    fn from(e: ConfigError) -> Self {
        Exit::Failure(Failure::Config(e))
    }
}

fn setup_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let bad = |m: String| ConfigError {
        origin: THREADS_VAR.into(),
        line: None,
        message: m,
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| bad(format!("expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| bad(e.to_string()))
}

fn load(common: &Common) -> Result<Loaded, ConfigError> {
    let mut overrides = common.set.clone();
    if let Some(b) = &common.budgets {
        let list: Vec<String> = b.iter().map(u64::to_string).collect();
        overrides.push(format!("run.budgets=[{}]", list.join(",")));
    }
    if let Some(f) = &common.format {
        overrides.push(format!("output.format=\"{f}\""));
    }
    config::load(&common.config, &overrides)
}

fn open_output(common: &Common, loaded: &Loaded) -> Result<Box<dyn Write>, Exit> {
    let path = common
        .out
        .clone()
        .or_else(|| loaded.config.output.path.as_ref().map(PathBuf::from));
    match path {
        Some(p) => {
            let file = File::create(&p).map_err(|e| Exit::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn emit(table: &Table, common: &Common, loaded: &Loaded) -> Result<(), Exit> {
    let mut out = open_output(common, loaded)?;
    let written = match loaded.format() {
        "jsonl" => table.write_jsonl(&mut out).map_err(|e| e.to_string()),
        _ => table.write_csv(&mut out).map_err(|e| e.to_string()),
    };
    written
        .and_then(|_| out.flush().map_err(|e| e.to_string()))
        .map_err(Exit::Io)
}

fn write_plots(table: &Table, loaded: &Loaded, prefix: &str, error_column: &str) -> Result<(), Exit> {
    let Some(dir) = &loaded.config.output.plot_dir else {
        return Ok(());
    };
    let dir = Path::new(dir);
    std::fs::create_dir_all(dir).map_err(|e| Exit::Io(format!("{}: {e}", dir.display())))?;
    for (name, body) in commands::plot_series(table, error_column) {
        let path = dir.join(format!("{prefix}_{name}.dat"));
        std::fs::write(&path, body).map_err(|e| Exit::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Exit> {
    setup_threads()?;
    match cli.command {
        Command::Gridinfo(c) => {
            let l = load(&c)?;
            emit(&commands::gridinfo(&l)?, &c, &l)
        }
        Command::Recover(c) => {
            let l = load(&c)?;
            let t = commands::recover(&l)?;
            write_plots(&t, &l, "recover", "error_q")?;
            emit(&t, &c, &l)
        }
        Command::Integrate(c) => {
            let l = load(&c)?;
            let t = commands::integrate(&l)?;
            write_plots(&t, &l, "integrate", "error")?;
            emit(&t, &c, &l)
        }
        Command::Compare(c) => {
            let l = load(&c)?;
            emit(&commands::compare(&l)?, &c, &l)
        }
        Command::ExportRule(s) => {
            let l = load(&s.common)?;
            emit(&commands::export_rule(&l, s.budget)?, &s.common, &l)
        }
        Command::DumpGrid(s) => {
            let l = load(&s.common)?;
            let text = commands::dump_grid(&l, s.budget)?;
            let mut out = open_output(&s.common, &l)?;
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Exit::Io(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit::Io(m)) => {
            eprintln!("sparse-qi: i/o error: {m}");
            ExitCode::from(1)
        }
        Err(Exit::Failure(f)) => {
            eprintln!("sparse-qi: {f}");
            ExitCode::from(match f {
                Failure::Config(_) => 2,
                Failure::Numerical(_) => 3,
            })
        }
    }
}
