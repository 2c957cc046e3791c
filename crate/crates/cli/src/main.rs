//! Command-line front end for the hiring-competition engine.

mod commands;
mod config;
mod model;
mod output;
mod sweep;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{exit_code, Result, Settings};

#[derive(Parser)]
#[command(
    name = "hiregame",
    version,
    about = "Equilibria, welfare ratios, dynamics, and sample-size tables \
             for a capacity-constrained hiring-competition game"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each maps to a config key of the same
/// name; a flag on the command line overrides the config entry.
#[derive(Args, Default)]
struct Common {
    /// Flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of firms
    #[arg(long)]
    n: Option<String>,
    /// Per-firm interview capacity in (0, 1]
    #[arg(long)]
    c: Option<String>,
    /// correlated | independent
    #[arg(long)]
    scheme: Option<String>,
    /// uniform | piecewise-constant | piecewise-linear
    #[arg(long)]
    dist: Option<String>,
    /// Comma-separated density breakpoints (0,...,1)
    #[arg(long)]
    breakpoints: Option<String>,
    /// Comma-separated density values
    #[arg(long)]
    values: Option<String>,
    /// Output directory (default: $HIREGAME_OUT_DIR, else the working dir)
    #[arg(long)]
    out_dir: Option<String>,
    /// File name for the command's main artifact
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the equal-utility equilibrium; writes solution.json
    Solve {
        #[command(flatten)]
        common: Common,
        /// Verification tolerance (default 1e-6)
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Check a profile against the equilibrium conditions; writes verification.json
    Verify {
        #[command(flatten)]
        common: Common,
        /// Profile file: a solve/one-turn JSON or `firm: lo-hi, ...` text
        #[arg(long)]
        profile: Option<String>,
        /// Verification tolerance (default 1e-6)
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Best-response dynamics; writes dynamics_trace.csv and dynamics_final.json
    Dynamics {
        #[command(flatten)]
        common: Common,
        /// Adoption/verification tolerance (default 1e-6)
        #[arg(long)]
        epsilon: Option<String>,
        /// Round limit (default 200)
        #[arg(long)]
        max_rounds: Option<String>,
        /// Starting profile: naive (default) or a profile file path
        #[arg(long)]
        start: Option<String>,
    },
    /// Sequential-entry dynamics; writes one_turn.json and one_turn_trace.csv
    OneTurn {
        #[command(flatten)]
        common: Common,
        /// Verification tolerance (default 1e-6)
        #[arg(long)]
        epsilon: Option<String>,
    },
    /// Monte Carlo hiring simulation; writes simulation.json
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Applicants to draw (default 1000000)
        #[arg(long)]
        applicants: Option<String>,
        /// RNG seed (default 0)
        #[arg(long)]
        seed: Option<String>,
        /// Profile: equilibrium (default), naive, or a profile file path
        #[arg(long)]
        profile: Option<String>,
    },
    /// Welfare-ratio sweep over an n or c grid; writes pons_sweep.csv
    PonsSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// The same sweep table named for the optimality gap; writes poa_sweep.csv
    PoaSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Sample counts for telling two applicant pools apart; writes
    /// samples.json, or samples.csv for a p2 range
    Samples {
        #[command(flatten)]
        common: Common,
        /// Pool-1 pass rate
        #[arg(long)]
        p1: Option<String>,
        /// Pool-2 pass rate (the sweep start when --p2-stop is given)
        #[arg(long)]
        p2: Option<String>,
        /// Target probability of a correct comparison
        #[arg(long)]
        q: Option<String>,
        /// Sweep end for p2; switches to the sweep table
        #[arg(long)]
        p2_stop: Option<String>,
        /// Sweep step for p2 (default 0.01)
        #[arg(long)]
        p2_step: Option<String>,
        /// Comma-separated q values for the sweep table
        #[arg(long)]
        q_list: Option<String>,
        /// Scan limit (default 10000)
        #[arg(long)]
        k_max: Option<String>,
    },
    /// Fixed-welfare plans under capacity splitting; writes flexcap.json
    Flexcap {
        #[command(flatten)]
        common: Common,
        /// Target welfare W
        #[arg(long)]
        welfare: Option<String>,
        /// Comma-separated firm counts
        #[arg(long)]
        n_list: Option<String>,
    },
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let mut s = Settings::load(self.config.as_deref())?;
        s.flag("n", &self.n);
        s.flag("c", &self.c);
        s.flag("scheme", &self.scheme);
        s.flag("dist", &self.dist);
        s.flag("breakpoints", &self.breakpoints);
        s.flag("values", &self.values);
        s.flag("out-dir", &self.out_dir);
        s.flag("out", &self.out);
        Ok(s)
    }
}

#[derive(Args, Default)]
struct GridArgs {
    /// Sweep axis: n (grid of firm counts at fixed c) or c (grid of
    /// capacities at fixed n)
    #[arg(long)]
    axis: Option<String>,
    /// Comma-separated grid values along the axis
    #[arg(long)]
    grid: Option<String>,
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Solve { common, epsilon } => {
            let mut s = common.settings()?;
            s.flag("epsilon", epsilon);
            commands::solve(&s)
        }
        Command::Verify {
            common,
            profile,
            epsilon,
        } => {
            let mut s = common.settings()?;
            s.flag("profile", profile);
            s.flag("epsilon", epsilon);
            commands::verify(&s)
        }
        Command::Dynamics {
            common,
            epsilon,
            max_rounds,
            start,
        } => {
            let mut s = common.settings()?;
            s.flag("epsilon", epsilon);
            s.flag("max-rounds", max_rounds);
            s.flag("start", start);
            commands::dynamics(&s)
        }
        Command::OneTurn { common, epsilon } => {
            let mut s = common.settings()?;
            s.flag("epsilon", epsilon);
            commands::one_turn(&s)
        }
        Command::Simulate {
            common,
            applicants,
            seed,
            profile,
        } => {
            let mut s = common.settings()?;
            s.flag("applicants", applicants);
            s.flag("seed", seed);
            s.flag("profile", profile);
            commands::simulate(&s)
        }
        Command::PonsSweep { common, grid } => {
            let mut s = common.settings()?;
            s.flag("axis", &grid.axis);
            s.flag("grid", &grid.grid);
            sweep::run(&s, "pons_sweep.csv", "pons-sweep")
        }
        Command::PoaSweep { common, grid } => {
            let mut s = common.settings()?;
            s.flag("axis", &grid.axis);
            s.flag("grid", &grid.grid);
            sweep::run(&s, "poa_sweep.csv", "poa-sweep")
        }
        Command::Samples {
            common,
            p1,
            p2,
            q,
            p2_stop,
            p2_step,
            q_list,
            k_max,
        } => {
            let mut s = common.settings()?;
            s.flag("p1", p1);
            s.flag("p2", p2);
            s.flag("q", q);
            s.flag("p2-stop", p2_stop);
            s.flag("p2-step", p2_step);
            s.flag("q-list", q_list);
            s.flag("k-max", k_max);
            commands::samples(&s)
        }
        Command::Flexcap {
            common,
            welfare,
            n_list,
        } => {
            let mut s = common.settings()?;
            s.flag("welfare", welfare);
            s.flag("n-list", n_list);
            commands::flexcap(&s)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version land on stdout with status 0; real parse
            // errors are argument errors, status 1.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
