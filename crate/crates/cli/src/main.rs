use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use consim_core::batch::Manifest;
use consim_core::generate::{generate_scenario, GeneratorConfig};
use consim_core::report::emit_outputs;
use consim_core::{batch_compare, load_scenario, run, scenario_to_toml, Algorithm};

#[derive(Parser)]
#[command(name = "consim", version, about = "Positional consensus simulator for unicycle agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write the trajectory log, summary and plots.
    Run {
        scenario: PathBuf,
        /// Output directory (default: out/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the control algorithm.
        #[arg(long)]
        algorithm: Option<Algorithm>,
    },
    /// Run every scenario, algorithm and seed listed in a manifest.
    Batch {
        manifest: PathBuf,
        /// Worker threads (0 uses every core).
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        /// Also write the table as JSON to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Check a scenario file and report the first problem.
    Validate { scenario: PathBuf },
    /// Print a randomized scenario on the reference arena.
    Gen {
        #[arg(long)]
        agents: usize,
        #[arg(long)]
        loss_pct: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        obstacles: usize,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { scenario, out, seed, algorithm } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s = s.with_seed(seed);
            }
            if let Some(algorithm) = algorithm {
                s = s.with_algorithm(algorithm);
            }
            let result = run(&s)?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(&s.name));
            emit_outputs(&result, &s.arena, &out)
                .with_context(|| format!("writing outputs to {}", out.display()))?;
            match result.consensus_step {
                Some(k) => println!(
                    "{}: consensus at step {k} ({:.1} s), outputs in {}",
                    s.name,
                    k as f64 * s.step_seconds,
                    out.display()
                ),
                None => println!(
                    "{}: no consensus after {} steps, outputs in {}",
                    s.name,
                    result.steps_executed,
                    out.display()
                ),
            }
            if let Some(c) = result.collision {
                bail!("agent {} collided at step {} ({:.2}, {:.2})", c.agent, c.step, c.x, c.y);
            }
        }
        Command::Batch { manifest, parallel, json } => {
            let (m, scenarios) = Manifest::load(&manifest)?;
            let table = batch_compare(&scenarios, &m.algorithms, &m.seeds, parallel)?;
            print!("{}", table.render());
            for cell in table.cells.iter() {
                for r in cell.runs.iter().filter(|r| r.error.is_some()) {
                    eprintln!(
                        "{} / {} / seed {}: {}",
                        cell.scenario,
                        cell.algorithm,
                        r.seed,
                        r.error.as_deref().unwrap_or_default()
                    );
                }
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&table)?;
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Validate { scenario } => {
            let s = load_scenario(&scenario)?;
            println!(
                "{}: ok ({} agents, {} obstacles, {} zones covering {:.2}%)",
                scenario.display(),
                s.n(),
                s.arena.obstacles.len(),
                s.arena.zones.len(),
                s.arena.zone_fraction() * 100.0
            );
        }
        Command::Gen { agents, loss_pct, seed, obstacles, out } => {
            let mut config = GeneratorConfig::new(agents, loss_pct, seed);
            config.obstacles = obstacles;
            let text = scenario_to_toml(&generate_scenario(&config)?);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
