//! `scarlab`: periodic orbits, sections, spectra, scar scores and trace
//! formula peaks from the command line.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure
//! (partial output may have been written).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_window, RunConfig, Settings};
use output::Context;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(scarlab::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "scarlab", version, about = "Periodic orbits, spectra and scars of C3v-symmetric planar Hamiltonians")]
struct Cli {
    /// TOML run configuration; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Annotate headers with the example laboratory energy scale.
    #[arg(long, global = true)]
    physical: bool,
    /// Record the generation time in file headers.
    #[arg(long, global = true)]
    timestamp: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SCARLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `ring` or `hh`.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args, Debug, Default)]
struct Quantum {
    #[arg(long)]
    eta: Option<f64>,
    /// Energy window `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    window: Option<[f64; 2]>,
    /// Irreps to compute (A1, A2, E or all); repeatable.
    #[arg(long)]
    irrep: Vec<String>,
    /// Mesh points per shortest wavelength.
    #[arg(long)]
    resolution: Option<f64>,
    /// Recount each window at doubled resolution and warn on a mismatch.
    #[arg(long)]
    check_doubled: bool,
}

#[derive(Args, Debug, Default)]
struct Scar {
    #[arg(long)]
    tube_radius: Option<f64>,
    /// Side of the density rasters written for scarred states.
    #[arg(long)]
    raster: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Continue a periodic orbit family over an energy grid.
    Orbits {
        #[command(flatten)]
        common: Common,
        /// A, B or C.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        emin: Option<f64>,
        #[arg(long)]
        emax: Option<f64>,
        #[arg(long)]
        de: Option<f64>,
        /// Energy at which the family is first located.
        #[arg(long)]
        seed_energy: Option<f64>,
        /// Also write one period of each orbit.
        #[arg(long)]
        paths: bool,
    },
    /// Poincare surface of section at x = 0, px >= 0.
    Sos {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long)]
        crossings: Option<usize>,
        /// `grid:NxM` or `list:y,py;y,py;...`.
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Eigenpairs of each irrep sector in a window.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: Quantum,
        /// Write the level table only, no eigenvector files.
        #[arg(long)]
        levels_only: bool,
    },
    /// Scar scores of every state in a window.
    Scar {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: Quantum,
        #[command(flatten)]
        scar: Scar,
    },
    /// Periodic-orbit contribution to the level density and its maxima.
    Trace {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: Quantum,
        /// Energies sampled across the window.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Scar scores matched to trace maxima, one report per irrep.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        quantum: Quantum,
        #[command(flatten)]
        scar: Scar,
        #[arg(long)]
        points: Option<usize>,
    },
}

impl Quantum {
    fn apply(&self, c: &mut RunConfig) {
        let o = RunConfig {
            eta: self.eta,
            window: self.window,
            irreps: (!self.irrep.is_empty()).then(|| self.irrep.clone()),
            resolution: self.resolution,
            check_doubled: self.check_doubled.then_some(true),
            ..Default::default()
        };
        c.merge(o);
    }
}

impl Scar {
    fn apply(&self, c: &mut RunConfig) {
        c.merge(RunConfig {
            tube_radius: self.tube_radius,
            raster: self.raster,
            ..Default::default()
        });
    }
}

/// File config overridden by the flags of the chosen command.
fn run_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let common = match &cli.command {
        Command::Orbits { common, .. }
        | Command::Sos { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Scar { common, .. }
        | Command::Trace { common, .. }
        | Command::Report { common, .. } => common,
    };
    c.merge(RunConfig {
        model: common.model.clone(),
        out_dir: cli.out.clone(),
        ..Default::default()
    });
    match &cli.command {
        Command::Orbits { family, emin, emax, de, seed_energy, .. } => c.merge(RunConfig {
            family: family.clone(),
            emin: *emin,
            emax: *emax,
            de: *de,
            seed_energy: *seed_energy,
            ..Default::default()
        }),
        Command::Sos { energy, crossings, seeds, .. } => c.merge(RunConfig {
            energy: *energy,
            crossings: *crossings,
            seeds: seeds.clone(),
            ..Default::default()
        }),
        Command::Spectrum { quantum, .. } => quantum.apply(&mut c),
        Command::Scar { quantum, scar, .. } => {
            quantum.apply(&mut c);
            scar.apply(&mut c);
        }
        Command::Trace { quantum, points, .. } => {
            quantum.apply(&mut c);
            c.merge(RunConfig {
                trace_points: *points,
                ..Default::default()
            });
        }
        Command::Report { quantum, scar, points, .. } => {
            quantum.apply(&mut c);
            scar.apply(&mut c);
            c.merge(RunConfig {
                trace_points: *points,
                ..Default::default()
            });
        }
    }
    Ok(c)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let settings = Settings::from_config(&run_config(cli)?)?;
    let name = match &cli.command {
        Command::Orbits { .. } => "orbits",
        Command::Sos { .. } => "sos",
        Command::Spectrum { .. } => "spectrum",
        Command::Scar { .. } => "scar",
        Command::Trace { .. } => "trace",
        Command::Report { .. } => "report",
    };
    let ctx = Context::new(name, &settings, cli.physical, cli.timestamp)?;
    log::info!("{name}: config hash {}", ctx.hash);
    match &cli.command {
        Command::Orbits { paths, .. } => commands::orbits(&settings, &ctx, *paths),
        Command::Sos { .. } => commands::sos(&settings, &ctx),
        Command::Spectrum { levels_only, .. } => commands::spectrum(&settings, &ctx, *levels_only),
        Command::Scar { .. } => commands::scar(&settings, &ctx),
        Command::Trace { .. } => commands::trace(&settings, &ctx),
        Command::Report { .. } => commands::report(&settings, &ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
