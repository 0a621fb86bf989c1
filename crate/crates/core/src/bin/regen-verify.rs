use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regen::scenario::{thread_pool_from_env, Scenario};
use regen::Result;

#[derive(Parser)]
#[command(name = "regen-verify", version, about = "Verify limit theorems for dependent regenerative processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config and echo it with defaults filled in.
    Validate(Common),
    /// Product-form gap sweep; writes gap.csv and verdict.json.
    VerifyIndependence(Common),
    /// Status-update probability against its closed form.
    StatusPi(Common),
    /// Renewal-reward against time-average stationary estimate.
    Stationary(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
}

fn load(args: &Common) -> Result<Scenario> {
    let mut scenario = Scenario::load(&args.config)?;
    let cfg = scenario.config_mut();
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(reps) = args.reps {
        cfg.run.replications = reps;
    }
    if let Some(out) = &args.out {
        cfg.output.directory = out.clone();
    }
    let config = scenario.config().clone();
    let scenario = Scenario::new(config)?;
    for w in scenario.warnings() {
        eprintln!("WARN: {w}");
    }
    Ok(scenario)
}

fn run(command: &Command) -> Result<i32> {
    match command {
        Command::Validate(args) => {
            let s = load(args)?;
            println!("{}", s.config().to_json());
            Ok(0)
        }
        Command::VerifyIndependence(args) => {
            let s = load(args)?;
            let report = s.verify_independence()?;
            for path in s.write_independence(&report, &s.config().output.directory)? {
                eprintln!("wrote {}", path.display());
            }
            println!("{}", if report.passed() { "PASS" } else { "FAIL" });
            Ok(report.exit_code())
        }
        Command::StatusPi(args) => {
            let s = load(args)?;
            let report = s.status_pi()?;
            for path in s.write_status_pi(&report, &s.config().output.directory)? {
                eprintln!("wrote {}", path.display());
            }
            println!(
                "pi_closed_form={:.6} pi_simulated={:.6} z={:.3}",
                report.pi_closed_form, report.pi_simulated, report.z_score
            );
            Ok(report.exit_code())
        }
        Command::Stationary(args) => {
            let s = load(args)?;
            let report = s.stationary()?;
            for path in s.write_stationary(&report, &s.config().output.directory)? {
                eprintln!("wrote {}", path.display());
            }
            println!(
                "renewal_reward={:.6} time_average={:.6} z={:.3}",
                report.renewal_reward.estimate, report.time_average.estimate, report.z
            );
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match thread_pool_from_env() {
        Ok(Some(pool)) => pool.install(|| run(&cli.command)),
        Ok(None) => run(&cli.command),
        Err(e) => Err(e),
    };
    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
