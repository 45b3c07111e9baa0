use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use epipole_cli::problem::parse_json;
use epipole_cli::server::{self, ServerConfig};
use epipole_cli::solve::{fmatrix, solve_problem, to_json};
use epipole_cli::{problem_from_scene, FmatrixRequest, ProblemFile, ServiceError};
use epipole_core::bench::{bench_noise, BenchConfig, BenchMethod};
use epipole_core::{generate_scene, SceneConfig, SceneMode};

/// Locate epipoles from 4-6 point correspondences and one known epipole
/// (or epipolar line).
#[derive(Parser, Debug)]
#[command(name = "epipole", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a problem file: 4 points give a conic, 5 the epipole, 6 (with
    /// an epipolar line) both epipoles.
    Solve {
        path: PathBuf,
        /// Also recover the fundamental matrix (5 or 6 points).
        #[arg(long)]
        fmatrix: bool,
        #[arg(long)]
        pretty: bool,
    },
    /// Fundamental matrix and epipolar lines from both epipoles and at least
    /// three correspondences.
    Fmatrix {
        path: PathBuf,
        #[arg(long)]
        pretty: bool,
    },
    /// Generate a synthetic two-view scene as JSON.
    Simulate {
        #[arg(long, default_value = "facing")]
        mode: SceneMode,
        #[arg(long, default_value_t = 12)]
        n_points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep camera 2 at its nominal pose.
        #[arg(long)]
        no_jitter: bool,
        /// Write a problem file with this many correspondences (4-6) instead
        /// of the scene.
        #[arg(long)]
        problem: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Noise sensitivity table as CSV.
    Bench {
        #[arg(long)]
        method: BenchMethod,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "facing")]
        mode: SceneMode,
        /// Leave the known epipole exact.
        #[arg(long)]
        no_perturb_epipole: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the JSON API and the UI.
    Serve {
        #[arg(long, env = "EPIPOLE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "EPIPOLE_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        /// Built UI directory to serve at `/`.
        #[arg(long, env = "EPIPOLE_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

fn fail(err: &ServiceError) -> ExitCode {
    eprintln!("{}", to_json(&err.body()));
    ExitCode::from(err.exit_code() as u8)
}

fn read(path: &PathBuf) -> Result<Vec<u8>, ServiceError> {
    fs::read(path).map_err(|e| ServiceError::Malformed(format!("{}: {e}", path.display())))
}

fn write_out(out: Option<&PathBuf>, text: &str) -> Result<(), ServiceError> {
    let res = match out {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    res.map_err(|e| ServiceError::Malformed(format!("cannot write output: {e}")))
}

fn render<T: serde::Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("result types serialize") + "\n"
    } else {
        to_json(value) + "\n"
    }
}

fn run(cmd: Command) -> Result<(), ServiceError> {
    match cmd {
        Command::Solve { path, fmatrix, pretty } => {
            let pf: ProblemFile = parse_json(&read(&path)?)?;
            let out = solve_problem(&pf, fmatrix)?;
            write_out(None, &render(&out, pretty))
        }
        Command::Fmatrix { path, pretty } => {
            let req: FmatrixRequest = parse_json(&read(&path)?)?;
            write_out(None, &render(&fmatrix(&req)?, pretty))
        }
        Command::Simulate { mode, n_points, seed, no_jitter, problem, out } => {
            let config = SceneConfig {
                mode,
                n_points,
                seed,
                jitter: !no_jitter,
                ..SceneConfig::default()
            };
            let scene = generate_scene(&config)?;
            let text = match problem {
                Some(n) => render(&problem_from_scene(&scene, n)?, true),
                None => render(&scene, true),
            };
            write_out(out.as_ref(), &text)
        }
        Command::Bench { method, sigmas, trials, seed, mode, no_perturb_epipole, out } => {
            let mut cfg = BenchConfig::new(method, sigmas, trials, seed);
            cfg.mode = mode;
            cfg.perturb_epipole = !no_perturb_epipole;
            let report = bench_noise(&cfg)?;
            write_out(out.as_ref(), &report.to_csv())
        }
        Command::Serve { port, host, static_dir } => {
            let rt = tokio::runtime::Runtime::new()
                .map_err(|e| ServiceError::Malformed(format!("cannot start runtime: {e}")))?;
            rt.block_on(server::serve(SocketAddr::new(host, port), ServerConfig { static_dir }))
                .map_err(|e| ServiceError::Malformed(format!("server error: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => fail(&err),
    }
}
