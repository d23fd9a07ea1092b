use boltwave::cli;
use boltwave::verify::VerifyFault;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "boltwave", version, about = "2D Boltzmann transport with goal-based angular adaptivity")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a TOML run config; writes per-step VTK files and a CSV record.
    Run { config: PathBuf },
    /// Run the built-in verification suite.
    Verify {
        /// Inject a deliberate fault (test hook): `perturb-moment`.
        #[arg(long)]
        fault: Option<String>,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        cmd: MeshCmd,
    },
}

#[derive(Subcommand)]
enum MeshCmd {
    /// Generate a duct mesh file.
    Gen {
        out: PathBuf,
        #[arg(long)]
        length: f64,
        #[arg(long, default_value_t = 1.0)]
        width: f64,
        #[arg(long)]
        h: f64,
    },
    /// Validate a mesh file.
    Check { path: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.cmd {
        Cmd::Run { config } => match cli::cmd_run(&config) {
            Ok(summary) => {
                if let Some(path) = &summary.csv_path {
                    println!("record written to {}", path.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Cmd::Verify { fault } => {
            let fault = match fault.as_deref() {
                None => VerifyFault::None,
                Some("perturb-moment") => VerifyFault::PerturbMomentMatrix,
                Some(other) => {
                    eprintln!("error: unknown fault '{other}' (expected 'perturb-moment')");
                    return ExitCode::FAILURE;
                }
            };
            if cli::cmd_verify(fault) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Cmd::Mesh { cmd } => {
            let result = match cmd {
                MeshCmd::Gen { out, length, width, h } => cli::cmd_mesh_gen(&out, length, width, h),
                MeshCmd::Check { path } => match cli::cmd_mesh_check(&path) {
                    Ok(true) => Ok(()),
                    Ok(false) => {
                        return ExitCode::FAILURE;
                    }
                    Err(e) => Err(e),
                },
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
