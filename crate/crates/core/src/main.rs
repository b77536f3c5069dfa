use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hughes_core::experiments::{self, fmt_f64, parse_alpha_range, Config, EngineKind};

#[derive(Parser)]
#[command(
    name = "hughes",
    version,
    about = "Particle simulations of the 1D Hughes evacuation model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration until evacuation.
    Run(Common),
    /// Evacuation time over a range of alpha values.
    Sweep(Common),
    /// L1 error against the exact solution for a symmetric block.
    Converge(Common),
    /// Check model assumptions, datum and time step without running.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Sweep range as start:stop:step.
    #[arg(long)]
    alpha_range: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    allow_cfl_violation: bool,
}

impl Common {
    fn config(&self) -> hughes_core::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(e) = self.engine {
            cfg.run.engine = e;
        }
        if let Some(a) = self.alpha {
            cfg.run.alpha = a;
        }
        if let Some(range) = &self.alpha_range {
            let (start, stop, step) = parse_alpha_range(range)?;
            cfg.sweep.alpha_start = start;
            cfg.sweep.alpha_stop = stop;
            cfg.sweep.alpha_step = step;
        }
        if let Some(n) = self.n {
            cfg.run.n = n;
        }
        if let Some(dt) = self.dt {
            cfg.run.dt = Some(dt);
        }
        if self.allow_cfl_violation {
            cfg.run.allow_cfl_violation = true;
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> hughes_core::Result<bool> {
    match command {
        Command::Run(c) => {
            let cfg = c.config()?;
            let s = experiments::run_single(&cfg, &c.out)?;
            match s.evacuation_time {
                Some(t) => println!("evacuation time {} ({} steps)", fmt_f64(t), s.steps),
                None => println!("stopped at t = {} before evacuation", fmt_f64(s.final_time)),
            }
            Ok(true)
        }
        Command::Sweep(c) => {
            let cfg = c.config()?;
            let r = experiments::run_sweep(&cfg, &c.out)?;
            println!(
                "{} values; minimum {} at alpha = {}; {} jumps above {}",
                r.points.len(),
                fmt_f64(r.min_time),
                r.argmin_alpha,
                r.jumps.len(),
                r.jump_threshold
            );
            Ok(true)
        }
        Command::Converge(c) => {
            let cfg = c.config()?;
            for p in experiments::run_convergence(&cfg, &c.out)? {
                println!("n = {:4}  L1 = {}", p.n, fmt_f64(p.l1_error));
            }
            Ok(true)
        }
        Command::Validate(c) => {
            let cfg = c.config()?;
            let r = experiments::validate(&cfg)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&r).expect("report serializes")
            );
            Ok(r.ok())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
