use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod state;

use config::{CliConfig, Format};
use error::CliError;
use state::Store;

/// Drive the UAV authentication protocol over persisted party state, run
/// adversarial scenarios and print overhead reports.
#[derive(Debug, Parser)]
#[command(name = "fanet-aka", version)]
struct Cli {
    /// JSON object or key=value file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Freshness window in clock ticks.
    #[arg(long = "delta-t", global = true)]
    delta_t: Option<u32>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long = "state-dir", global = true)]
    state_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create the gateway and a new deployment in the state directory.
    InitGwn,
    /// Register a user and issue a smart card.
    RegisterUser {
        #[arg(long)]
        user: String,
        #[arg(long)]
        password: String,
    },
    /// Register a UAV before deployment.
    RegisterUav {
        #[arg(long)]
        uav: String,
    },
    /// Register a UAV after deployment and broadcast it to users.
    AddUav {
        #[arg(long)]
        uav: String,
    },
    /// Run login and the full key agreement between a user and a UAV.
    RunAka {
        #[arg(long)]
        user: String,
        #[arg(long)]
        uav: String,
        #[arg(long)]
        password: String,
    },
    /// Change the password and optionally enrol a new biometric.
    UpdateCredentials {
        #[arg(long)]
        user: String,
        #[arg(long)]
        password: String,
        #[arg(long = "new-password")]
        new_password: String,
        #[arg(long = "new-biometric")]
        new_biometric: bool,
    },
    /// Issue a replacement smart card.
    ReplaceCard {
        #[arg(long)]
        user: String,
        #[arg(long = "new-password")]
        new_password: String,
    },
    /// Run one adversarial scenario; exit 0 iff every verdict passes.
    Attack { scenario: String },
    /// Overhead comparison for the last run-aka.
    Report,
    /// Run the acceptance suite; exit 0 iff every criterion passes.
    Selftest,
}

fn configure(cli: &Cli) -> Result<CliConfig, CliError> {
    let mut c = match &cli.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.delta_t {
        c.delta_t = v;
    }
    if let Some(v) = cli.format {
        c.format = v;
    }
    if let Some(v) = &cli.state_dir {
        c.state_dir = v.clone();
    }
    c.protocol()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let cfg = configure(&cli)?;
    let store = Store::new(&cfg.state_dir);
    match &cli.command {
        Command::InitGwn => commands::init_gwn(&cfg, &store),
        Command::RegisterUser { user, password } => {
            commands::register_user(&cfg, &store, user, password)
        }
        Command::RegisterUav { uav } => commands::register_uav(&cfg, &store, uav, false),
        Command::AddUav { uav } => commands::register_uav(&cfg, &store, uav, true),
        Command::RunAka {
            user,
            uav,
            password,
        } => commands::run_aka(&cfg, &store, user, uav, password),
        Command::UpdateCredentials {
            user,
            password,
            new_password,
            new_biometric,
        } => {
            commands::update_credentials(&cfg, &store, user, password, new_password, *new_biometric)
        }
        Command::ReplaceCard { user, new_password } => {
            commands::replace_card(&cfg, &store, user, new_password)
        }
        Command::Attack { scenario } => commands::attack(&cfg, scenario),
        Command::Report => commands::report(&cfg, &store),
        Command::Selftest => commands::selftest(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{}", out.text.trim_end());
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
