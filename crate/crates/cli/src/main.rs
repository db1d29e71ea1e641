//! `kbound`: K-matrix inspection, K-symmetric potentials, spectral genus,
//! CMC surface generation with boundary diagnostics, the verification suite and sweeps.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or I/O error.

mod commands;
mod error;
mod io;
mod report;
mod suite;
mod surface;
mod sweep;
mod tol;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kbound::laurent::C64;

use crate::error::CliResult;
use crate::io::{parse_complex, parse_domain, parse_grid};
use crate::tol::Tolerances;

pub const DEFAULT_SEED: u64 = 20240917;

#[derive(Parser, Debug)]
#[command(name = "kbound", version, about = "Integrable boundary conditions for CMC surfaces")]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Root seed; every random draw derives from it.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// JSON object overriding named tolerances.
    #[arg(long, global = true)]
    tol_file: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// K-matrix roots, kernels, eigenvalues and residues.
    Kmat {
        #[command(subcommand)]
        cmd: KmatCmd,
    },
    /// Sample, verify or count K-symmetric potentials.
    Potential {
        #[command(subcommand)]
        cmd: PotentialCmd,
    },
    /// Spectral curve of a potential.
    Spectral {
        #[command(subcommand)]
        cmd: SpectralCmd,
    },
    /// Frames, immersions and boundary diagnostics on a domain grid.
    Surface {
        #[command(subcommand)]
        cmd: SurfaceCmd,
    },
    /// Second-boundary diagnostics.
    Twoboundary {
        #[command(subcommand)]
        cmd: TwoBoundaryCmd,
    },
    /// Named verification battery.
    Suite {
        #[command(subcommand)]
        cmd: SuiteCmd,
    },
    /// Parameter sweeps over degree and boundary constants.
    Sweep {
        #[command(subcommand)]
        cmd: SweepCmd,
    },
}

#[derive(Subcommand, Debug)]
enum KmatCmd {
    Inspect {
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: f64,
        /// Evaluation point re[,im].
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda: Option<C64>,
    },
}

#[derive(Subcommand, Debug)]
enum PotentialCmd {
    Sample {
        #[arg(long)]
        degree: usize,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: f64,
        /// Restrict to the off-diagonal family α = 0.
        #[arg(long)]
        offdiag: bool,
        /// Scale so that Im β₋₁·Im β_{d−1} = 1/16.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Verify {
        file: PathBuf,
    },
    Dim {
        #[arg(long)]
        degree: usize,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: f64,
        /// SVD rank instead of exact rational rank.
        #[arg(long)]
        float: bool,
    },
}

#[derive(Subcommand, Debug)]
enum SpectralCmd {
    Genus {
        file: PathBuf,
        /// Exact multiplicities over Q(i). Coefficients are taken as the exact binary
        /// fractions stored in the file, so only rational inputs give a meaningful count.
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    #[arg(long, value_parser = parse_grid, default_value = "64x64")]
    pub grid: (usize, usize),
    #[arg(long, value_parser = parse_domain, default_value = "-1,1,-1,1", allow_hyphen_values = true)]
    pub domain: [f64; 4],
    /// Iwasawa truncation N; the λ-grid has 4N points.
    #[arg(long, default_value_t = kbound::frame::DEFAULT_MODES)]
    pub modes: usize,
}

#[derive(Subcommand, Debug)]
enum SurfaceCmd {
    Generate {
        file: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        /// Sym point λ₀ (re[,im]) on the unit circle.
        #[arg(long, value_parser = parse_complex, default_value = "1.0", allow_hyphen_values = true)]
        sym_point: C64,
        #[arg(long = "H", default_value_t = 0.5, allow_hyphen_values = true)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        omega: Option<PathBuf>,
    },
    Verify {
        file: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "A", allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "B", allow_hyphen_values = true)]
        b: f64,
        #[arg(long = "A1", allow_hyphen_values = true, requires_all = ["b1", "y1"])]
        a1: Option<f64>,
        #[arg(long = "B1", allow_hyphen_values = true, requires_all = ["a1", "y1"])]
        b1: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires_all = ["a1", "b1"])]
        y1: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum TwoBoundaryCmd {
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, allow_hyphen_values = true)]
        y1: f64,
        /// Second constants; when omitted A₁ is matched to the ω data at y₁ for the given B₁.
        #[arg(long = "A1", allow_hyphen_values = true)]
        a1: Option<f64>,
        #[arg(long = "B1", allow_hyphen_values = true)]
        b1: f64,
    },
}

#[derive(Subcommand, Debug)]
enum SuiteCmd {
    Run {
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SweepCmd {
    Run {
        /// Degrees: "1..8", "1,3,5" or "" for an empty sweep.
        #[arg(long, default_value = "1..8")]
        degrees: String,
        #[arg(long = "A", default_value = "0.375", allow_hyphen_values = true)]
        a: String,
        #[arg(long = "B", default_value = "0.75", allow_hyphen_values = true)]
        b: String,
        /// Sample from the off-diagonal family for the genus column.
        #[arg(long)]
        offdiag: bool,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// What a command hands back to `main` for printing.
pub struct Output {
    pub json: serde_json::Value,
    pub text: String,
    pub pass: bool,
}

pub struct Ctx {
    pub seed: u64,
    pub tols: Tolerances,
}

fn run(cli: Cli) -> CliResult<Output> {
    let ctx = Ctx { seed: cli.seed, tols: Tolerances::load(cli.tol_file.as_deref())? };
    match cli.cmd {
        Cmd::Kmat { cmd: KmatCmd::Inspect { a, b, lambda } } => commands::kmat_inspect(a, b, lambda),
        Cmd::Potential { cmd } => match cmd {
            PotentialCmd::Sample { degree, a, b, offdiag, normalize, out } => {
                commands::potential_sample(&ctx, degree, a, b, offdiag, normalize, out.as_deref())
            }
            PotentialCmd::Verify { file } => commands::potential_verify(&ctx, &file),
            PotentialCmd::Dim { degree, a, b, float } => commands::potential_dim(degree, a, b, float),
        },
        Cmd::Spectral { cmd: SpectralCmd::Genus { file, exact } } => commands::spectral_genus(&file, exact),
        Cmd::Surface { cmd } => match cmd {
            SurfaceCmd::Generate { file, grid, sym_point, h, out, report, omega } => surface::generate(
                &ctx,
                &surface::GenerateArgs { file, grid, sym_point, h, out, report, omega },
            ),
            SurfaceCmd::Verify { file, grid, a, b, a1, b1, y1, report } => {
                let second = a1.zip(b1).zip(y1).map(|((a1, b1), y1)| (a1, b1, y1));
                surface::verify(&ctx, &file, &grid, a, b, second, report.as_deref())
            }
        },
        Cmd::Twoboundary { cmd: TwoBoundaryCmd::Analyze { file, grid, y1, a1, b1 } } => {
            surface::twoboundary(&ctx, &file, &grid, y1, a1, b1)
        }
        Cmd::Suite { cmd: SuiteCmd::Run { report } } => suite::run(&ctx, report.as_deref()),
        Cmd::Sweep { cmd: SweepCmd::Run { degrees, a, b, offdiag, out } } => {
            sweep::run(&ctx, &degrees, &a, &b, offdiag, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(out) => {
            let body = if json { serde_json::to_string_pretty(&out.json).expect("report serializes") } else { out.text.trim_end().to_string() };
            // a closed pipe (e.g. `| head`) is not an error worth a panic
            if !body.is_empty() {
                let _ = writeln!(std::io::stdout().lock(), "{body}");
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("kbound: {e}");
            ExitCode::from(2)
        }
    }
}
