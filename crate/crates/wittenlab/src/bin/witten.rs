use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wittenlab::config::load_config;
use wittenlab::experiments::{run, Command};
use wittenlab::Error;

#[derive(Parser)]
#[command(name = "witten", version, about = "Witten deformation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Hodge Laplacian spectra, Betti numbers and lattice volumes.
    Spectra(Common),
    /// Eigenvalue branches of the deformed Laplacians, gaps and cluster labels.
    Branches(Common),
    /// Critical points, trajectory counts and the Morse complex.
    Morse(Common),
    /// Torsion identities, comparison maps and a^q(t) traces.
    TorsionCheck(Common),
    /// Oscillator symbol tables against brute force, and the 1-D finite-difference ladder.
    OscillatorTables(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Thread hint; kernels run sequentially so results stay reproducible.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Cmd::Spectra(c) => (Command::Spectra, c),
        Cmd::Branches(c) => (Command::Branches, c),
        Cmd::Morse(c) => (Command::Morse, c),
        Cmd::TorsionCheck(c) => (Command::TorsionCheck, c),
        Cmd::OscillatorTables(c) => (Command::OscillatorTables, c),
    };
    match execute(cmd, &common) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn execute(cmd: Command, common: &Common) -> Result<Vec<PathBuf>, Error> {
    let mut cfg = load_config(&common.config)?;
    if let Some(s) = common.seed {
        cfg.solver.seed = s;
    }
    if let Some(t) = common.threads {
        log::info!("thread hint {t} ignored: kernels are sequential for reproducibility");
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config { path: "output".into(), message: "no --out given and no output directory in the config".into() })?;
    let art = run(cmd, &cfg)?;
    art.write(&out)
}
