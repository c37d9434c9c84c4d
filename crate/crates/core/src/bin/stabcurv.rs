use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stabcurv::analysis::{write_csv, CSV_HEADER};
use stabcurv::experiment::{default_levels, parse_levels, run_once, run_study, RunConfig};
use stabcurv::{Error, MeshKind};

#[derive(Parser)]
#[command(version, about = "Stabilized discrete mean curvature vector on torus surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single level (the first of --levels).
    Run(Options),
    /// Convergence study over all levels.
    Study(Options),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Meshed,
    Cut,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Structured,
    Flipped,
    Perturbed,
}

#[derive(Args)]
struct Options {
    #[arg(long, value_enum, default_value = "meshed")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "structured")]
    family: FamilyArg,
    /// Comma separated levels, NTHETAxNPHI for meshed runs or cells per unit
    /// length for cut runs.
    #[arg(long)]
    levels: Option<String>,
    /// Edge stabilization; default 0.1 meshed, 0 cut.
    #[arg(long = "tau-e")]
    tau_e: Option<f64>,
    /// Face stabilization; default 0 meshed, 0.1 cut.
    #[arg(long = "tau-f")]
    tau_f: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    #[arg(long = "R", default_value_t = 1.0)]
    major: f64,
    #[arg(long = "r", default_value_t = 0.5)]
    minor: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long = "export-vtk")]
    export_vtk: Option<PathBuf>,
    #[arg(long = "export-obj")]
    export_obj: Option<PathBuf>,
}

impl Options {
    fn config(&self) -> Result<RunConfig, Error> {
        let family = match self.family {
            FamilyArg::Structured => MeshKind::Structured,
            FamilyArg::Flipped => MeshKind::FlippedDiagonals,
            FamilyArg::Perturbed => MeshKind::Perturbed,
        };
        let mut config = match self.mode {
            ModeArg::Meshed => RunConfig::meshed(family),
            ModeArg::Cut => RunConfig::cut(),
        };
        config.levels = match &self.levels {
            Some(s) => parse_levels(s)?,
            None => default_levels(config.mode),
        };
        if let Some(t) = self.tau_e {
            config.tau_e = t;
        }
        if let Some(t) = self.tau_f {
            config.tau_f = t;
        }
        config.seed = self.seed;
        config.amplitude = self.amplitude;
        config.major = self.major;
        config.minor = self.minor;
        config.csv = self.csv.clone();
        config.export_vtk = self.export_vtk.clone();
        config.export_obj = self.export_obj.clone();
        config.validate()?;
        Ok(config)
    }
}

fn exit_status(err: &Error) -> u8 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidShape(_) => 2,
        _ => 1,
    }
}

fn exit_code(err: &Error) -> ExitCode {
    ExitCode::from(exit_status(err))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (options, study) = match &cli.command {
        Command::Run(o) => (o, false),
        Command::Study(o) => (o, true),
    };
    let config = match options.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let outcome = if study {
        run_study(&config)
    } else {
        run_once(&config).map(|r| vec![r.record])
    };
    match outcome {
        Ok(records) => {
            if config.csv.is_none() {
                if let Err(e) = write_csv(&records, std::io::stdout().lock()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            } else {
                println!("{CSV_HEADER}");
                for r in &records {
                    println!(
                        "{:.4e},{},{:.4e},{},{:.4e},{:.3},{:.3},{}",
                        r.h,
                        r.dofs,
                        r.error,
                        r.eoc.map(|v| format!("{v:.3}")).unwrap_or_default(),
                        r.stability,
                        r.rho_ratio,
                        r.normal_ratio,
                        r.cg_iterations
                    );
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
