use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dyadic_weights::constants::{a1_constant, ap_constant, cp_constant, fujii_wilson, weak_ainfty};
use dyadic_weights::czsparse::cz_decompose;
use dyadic_weights::runner::{run_experiments, RunOptions};
use dyadic_weights::{Error, Family, GridFunction};

#[derive(Parser)]
#[command(name = "dyadic-weights", version, about = "Grid experiments for A∞-type weights and BMO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites of a JSON config and write reports into a directory.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
        /// overrides the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// worker threads (defaults to all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// overrides the config family
        #[arg(long)]
        family: Option<Family>,
    },
    /// Print one weight constant of a grid file as JSON.
    Constant {
        grid: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// exponent for `ap` and `cp`
        #[arg(long)]
        p: Option<f64>,
    },
    /// Print the Calderón–Zygmund decomposition of a grid file over the unit cube.
    Czdump {
        grid: PathBuf,
        #[arg(long)]
        level: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ainfty,
    A1,
    Ap,
    Weak,
    Cp,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run { config, out, seed, jobs, family } => {
            let summary = run_experiments(&config, &out, &RunOptions { seed, jobs, family })?;
            eprintln!(
                "{} reports in {:.1}s, {} hard failures; output in {}",
                summary.reports,
                summary.wall_clock_seconds,
                summary.hard_failures.len(),
                out.display()
            );
            for f in &summary.hard_failures {
                eprintln!("FAIL {f}");
            }
            Ok(summary.exit_code() as u8)
        }
        Command::Constant { grid, kind, p } => {
            let w = GridFunction::load(&grid)?;
            let need_p = || p.ok_or_else(|| Error::InvalidParameter("--p is required for this kind".into()));
            let report = match kind {
                Kind::Ainfty => fujii_wilson(&w)?,
                Kind::Weak => weak_ainfty(&w)?,
                Kind::A1 => a1_constant(&w)?,
                Kind::Ap => ap_constant(&w, need_p()?)?.0,
                Kind::Cp => cp_constant(&w, need_p()?)?,
            };
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(0)
        }
        Command::Czdump { grid, level } => {
            let f = GridFunction::load(&grid)?;
            let dec = cz_decompose(&f, &f.spec().unit_cube(), level)?;
            let check = dec.check(&f)?;
            let out = serde_json::json!({ "decomposition": dec, "check": check });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
    }
}
