//! The `ecoq` operator commands.

pub mod client;
pub mod seed;
pub mod simulate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use client::Client;

#[derive(Debug, Parser)]
#[command(name = "ecoq", version, about = "Run and drive an EcoQ cleanup-event service")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Service address (`host:port` or URL); `serve` listens here.
    #[arg(long, global = true, env = "ECOQ_ADDR", default_value = ecoq_api::config::DEFAULT_ADDR)]
    pub addr: String,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Start the HTTP service.
    Serve,
    /// Replay a scenario file against a running service.
    Seed {
        #[arg(long)]
        file: PathBuf,
    },
    /// Drive deterministic smart-bin drops against a running service.
    SimulateBins {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        drops: usize,
        #[arg(long)]
        seed: u64,
        /// Also write the simulated event's CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Download an event's CSV export.
    Export {
        #[arg(long)]
        event: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ecoq_api::config::ConfigError),
    #[error("invalid --addr `{0}`")]
    Addr(String),
    #[error(transparent)]
    Client(#[from] client::ClientError),
    #[error(transparent)]
    Seed(#[from] seed::SeedError),
    #[error(transparent)]
    Simulation(#[from] simulate::SimError),
    #[error("simulation broke bin conservation")]
    NotConserved,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("server: {0}")]
    Server(String),
}

fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_csv(client: &Client, event: &str, out: &std::path::Path) -> Result<usize, CliError> {
    let reply = client.ok("GET", &format!("/events/{event}/export.csv"), None, None, None)?;
    std::fs::write(out, &reply.body).map_err(io(out))?;
    Ok(reply.body.len())
}

/// Runs one command; `Ok` means exit status 0.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = ecoq_api::Config::from_env()?;
    let client = Client::new(&cli.addr);
    match cli.command {
        Cmd::Serve => {
            let addr = cli.addr.parse().map_err(|_| CliError::Addr(cli.addr.clone()))?;
            let config = ecoq_api::Config { addr, ..config };
            match &config.data_dir {
                Some(dir) => eprintln!("ecoq: data directory {}", dir.display()),
                None => eprintln!("ecoq: ECOQ_DATA_DIR unset, keeping logs in memory"),
            }
            eprintln!("ecoq: listening on {addr}");
            ecoq_api::serve(config).map_err(|e| CliError::Server(e.to_string()))
        }
        Cmd::Seed { file } => {
            let script = std::fs::read_to_string(&file).map_err(io(&file))?;
            let report = seed::run_seed(&client, &organizer_token(&config), &script)?;
            println!("seeded {} requests from {}", report.requests, file.display());
            for (name, value) in &report.vars {
                if !name.contains("token") {
                    println!("  {name} = {value}");
                }
            }
            Ok(())
        }
        Cmd::SimulateBins { count, drops, seed, out } => {
            let params = simulate::SimParams { count, drops, seed };
            let report = simulate::simulate_bins(&client, &organizer_token(&config), params)?;
            let accepted = report.drops.iter().filter(|d| d.accepted()).count();
            println!(
                "event {}: {} drops, {} accepted, {} refused, {} telemetry readings",
                report.event_id,
                report.drops.len(),
                accepted,
                report.drops.len() - accepted,
                report.telemetry_readings
            );
            for b in &report.bins {
                println!("  {} scale {} g -> {} g", b.bin_id, b.initial_grams, b.final_grams);
            }
            if let Some(out) = out {
                let n = write_csv(&client, &report.event_id, &out)?;
                println!("wrote {n} bytes to {}", out.display());
            }
            if report.conserved() {
                Ok(())
            } else {
                Err(CliError::NotConserved)
            }
        }
        Cmd::Export { event, out } => {
            let n = write_csv(&client, &event, &out)?;
            println!("wrote {n} bytes to {}", out.display());
            Ok(())
        }
    }
}

/// The organizer token as a client presents it.
pub fn organizer_token(config: &ecoq_api::Config) -> String {
    ecoq_api::TokenAuthority::new(&config.organizer_token, &config.participant_token_seed).organizer_token()
}
