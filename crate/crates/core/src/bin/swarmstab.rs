use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use swarmstab::cli::commands::{self, CliError, ExitStatus, Overrides};
use swarmstab::cli::instances;
use swarmstab::cli::report::Report;
use swarmstab::cli::scenario::{self, Expectation, Scenario};
use swarmstab::cli::selftest;

#[derive(Debug, Parser)]
#[command(
    name = "swarmstab",
    version,
    about = "Consensus and swarm-stability analysis of descriptor multi-agent networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Output directory (simulate and paper write report.json, trajectory.csv, dispersion.csv
    /// and plot.svg there)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of uniform samples over the horizon
    #[arg(long)]
    samples: Option<usize>,
    /// Relative rank tolerance base
    #[arg(long)]
    tol_rank: Option<f64>,
    /// Eigenvalue cluster tolerance base
    #[arg(long)]
    tol_eig: Option<f64>,
    /// Expected verdict; a mismatch exits with code 3
    #[arg(long, value_parser = parse_expect)]
    expect: Option<Expectation>,
    /// Report format on stdout
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            samples: self.samples,
            tol_rank: self.tol_rank,
            tol_eig: self.tol_eig,
            expect: self.expect,
        }
    }
}

fn parse_expect(s: &str) -> Result<Expectation, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide consensus and swarm stability for a scenario file
    Analyze {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze and simulate a scenario file, writing trajectory artifacts
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Analyze and simulate one of the built-in published instances
    Paper {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        instance: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Run reduced cross-oracle suites
    Selftest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn emit(report: &Report, format: Format) {
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Text => println!("{}", report.to_text()),
    }
}

fn load(path: &Path, common: &Common) -> Result<Scenario, CliError> {
    let s = scenario::parse_scenario(path)?;
    commands::apply_overrides(s, &common.overrides())
}

fn run(cli: Cli) -> Result<ExitStatus, CliError> {
    let (report, format) = match cli.command {
        Command::Analyze { scenario, common } => {
            let s = load(&scenario, &common)?;
            let report = commands::analyze(&s)?;
            if let Some(out) = &common.out {
                commands::write_report(&report, out)?;
            }
            (report, common.format)
        }
        Command::Simulate { scenario, common } => {
            let s = load(&scenario, &common)?;
            let out = common.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            (commands::simulate(&s, &out)?, common.format)
        }
        Command::Paper { instance, common } => {
            let s = instances::instance(instance).expect("range-checked by clap");
            let s = commands::apply_overrides(s, &common.overrides())?;
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(format!("out/{}", s.name)));
            (commands::simulate(&s, &out)?, common.format)
        }
        Command::Selftest { seed } => {
            let summary = selftest::selftest(seed, &instances::all());
            println!("{}", summary.render());
            return Ok(if summary.passed() {
                ExitStatus::Ok
            } else {
                ExitStatus::Failure
            });
        }
    };
    emit(&report, format);
    Ok(commands::exit_status(&report))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ExitStatus::Failure.code() as u8)
        }
    }
}
