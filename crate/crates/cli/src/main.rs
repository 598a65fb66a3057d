use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use meanfield_annealer::config::Task;
use meanfield_annealer::{run, CliError, Request};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Scan,
    Gap,
    MinGap,
    OptimizeXi,
    EdCheck,
    Figure,
}

/// Mean-field scans, gap optimization and oracle checks for the two-cluster
/// annealing models.
#[derive(Debug, Parser)]
#[command(name = "meanfield-annealer", version)]
struct Args {
    task: Command,
    /// Flat JSON experiment config. Not used by `figure`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Figure id for the `figure` task.
    #[arg(long)]
    figure: Option<String>,
    /// Output directory. Overrides the directory of the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for column-parallel scans.
    #[arg(long)]
    workers: Option<usize>,
}

fn request(args: &Args) -> Result<Request, CliError> {
    let task = match args.task {
        Command::Figure => {
            let id = args.figure.clone().ok_or_else(|| CliError::Config("figure needs --figure <id>".into()))?;
            if args.config.is_some() {
                log::warn!("figure uses built-in configs; --config is ignored");
            }
            return Ok(Request::Figure { id, out: args.out.clone() });
        }
        Command::Scan => Task::Scan,
        Command::Gap => Task::Gap,
        Command::MinGap => Task::MinGap,
        Command::OptimizeXi => Task::OptimizeXi,
        Command::EdCheck => Task::EdCheck,
    };
    let config = args.config.clone().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    Ok(Request::Task { task, config, out: args.out.clone() })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = request(&args).and_then(|req| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = args.workers {
            if n == 0 {
                return Err(CliError::Config("--workers must be at least 1".into()));
            }
            pool = pool.num_threads(n);
        }
        let pool = pool.build().map_err(|e| CliError::Io(e.to_string()))?;
        pool.install(|| run(&req))
    });
    match result {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.failed_points > 0 {
                eprintln!("solver error: {} points failed and are flagged in the CSV", report.failed_points);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
