use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hopgame::mdp::DEFAULT_TOL;
use hopgame_cli::commands;
use hopgame_cli::config::{Experiment, ExperimentConfig};
use hopgame_cli::figures::figure;
use hopgame_cli::{exit_code, CsvDoc};

/// Anti-jamming frequency-hopping experiments.
///
/// Settings come from built-in defaults, then the --config file, then the
/// command-line flags, each overriding the one before.
#[derive(Debug, Parser)]
#[command(name = "hopgame", version)]
struct Cli {
    /// TOML config with dotted keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; a directory for `figure`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Value-iteration tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the per-user MDP.
    Solve,
    /// Monte-Carlo EDSR and theta.
    Simulate {
        /// Also write a slot-by-slot trace of one world.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        trace_slots: usize,
    },
    /// The four-round arms race.
    ArmsRace,
    /// Theta bounds and the threshold bounds they imply.
    Bounds,
    /// Regenerate the dataset for a figure (6 to 13).
    Figure { id: u32 },
}

fn experiment(cli: &Cli) -> Result<Experiment> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(episodes) = cli.episodes {
        cfg.sim.episodes = episodes;
    }
    if cli.horizon.is_some() {
        cfg.sim.horizon = cli.horizon;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    Ok(cfg.validate()?)
}

fn emit(doc: &CsvDoc, out: Option<&Path>) -> Result<()> {
    let text = doc.render();
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("cannot write to stdout"),
    }
}

fn run(cli: &Cli) -> Result<()> {
    if cli.tol.is_nan() || cli.tol <= 0.0 {
        return Err(hopgame_cli::ConfigError::new("tol", format!("must be positive, got {}", cli.tol)).into());
    }
    if let Command::Figure { id } = cli.command {
        let seed = match &cli.config {
            Some(_) => experiment(cli)?.seed,
            None => cli.seed.unwrap_or(ExperimentConfig::default().seed),
        };
        let doc = figure(id, seed, cli.episodes)?;
        let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = dir.join(format!("fig{id}.csv"));
        emit(&doc, Some(&path))?;
        eprintln!("wrote {} ({} rows)", path.display(), doc.rows.len());
        return Ok(());
    }
    let exp = experiment(cli)?;
    let out = exp.output.as_deref();
    match &cli.command {
        Command::Solve => {
            let doc = commands::solve(&exp, cli.tol)?;
            let get = |k| doc.get_note(k).unwrap_or("?");
            eprintln!("theta = {} ({}), K = {}, EDSR = {}", get("theta"), get("theta_source"), get("K"), get("edsr"));
            emit(&doc, out)
        }
        Command::Simulate { trace, trace_slots } => {
            let sim = commands::simulate(&exp)?;
            emit(&sim.doc, out)?;
            if let Some(path) = trace {
                let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
                let mut w = io::BufWriter::new(file);
                commands::trace(&sim.scenario, exp.seed, *trace_slots, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        Command::ArmsRace => emit(&commands::arms_race_cmd(&exp)?, out),
        Command::Bounds => {
            let doc = commands::bounds(&exp)?;
            if out.is_some() {
                emit(&doc, out)?;
            }
            print!("{}", commands::bounds_summary(&doc));
            Ok(())
        }
        Command::Figure { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
