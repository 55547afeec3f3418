use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lphom::cli::{run, Command, RunOptions};
use lphom::config::Config;

#[derive(Parser)]
#[command(name = "lphom", version, about = "Locally-periodic homogenization toolkit")]
struct Args {
    #[command(subcommand)]
    command: Sub,
    /// JSON configuration file.
    #[arg(long, global = true, default_value = "lphom.json")]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate and print the plan without computing.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Write log-log plot tables next to the reports.
    #[arg(long, global = true)]
    emit_plot_data: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Build and serialize the cube covering.
    Covering,
    /// Export microstructure indicator voxels.
    Microstructure,
    /// Run the operator lemma suite.
    LtsVerify,
    /// Solve cell problems and sample the homogenized tensors.
    Homogenize,
    /// Solve the macroscopic problem with a tensor file.
    Macro,
    /// Run homogenization error and lp/np discrepancy studies.
    Converge,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Covering => Command::Covering,
            Sub::Microstructure => Command::Microstructure,
            Sub::LtsVerify => Command::LtsVerify,
            Sub::Homogenize => Command::Homogenize,
            Sub::Macro => Command::Macro,
            Sub::Converge => Command::Converge,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LPHOM_LOG", "error")).init();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut config = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let command = Command::from(args.command);
    let opts = RunOptions {
        out: args.out.unwrap_or_else(|| config.output_dir()),
        dry_run: args.dry_run,
        emit_plot_data: args.emit_plot_data,
    };
    match run(command, &config, &opts) {
        Ok(outcome) => {
            if opts.dry_run {
                println!("plan for `{command}`:");
                for step in &outcome.plan {
                    println!("  {step}");
                }
                return ExitCode::SUCCESS;
            }
            for path in &outcome.outputs {
                println!("wrote {}", path.display());
            }
            for (name, passed) in &outcome.flags {
                println!("{} {name}", if *passed { "PASS" } else { "FAIL" });
            }
            if outcome.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {command}: {e}");
            ExitCode::from(2)
        }
    }
}
