use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilot_wave::error::Error;
use pilot_wave::harness::{export_plots, list_scenarios, load_config, run_scenario, shipped, verify_run, ScenarioConfig};

const EXIT_ANALYSIS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "pilotwave", version, about = "Pilot-wave trajectory simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a TOML file or a shipped scenario name.
    Run {
        config: String,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped scenarios.
    List,
    /// Write SVG plots into <run-dir>/plots.
    Plot { run_dir: PathBuf },
    /// Re-check artifact checksums against the run manifest.
    Verify { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.root() {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            })
        }
    }
}

fn resolve(config: &str) -> Result<ScenarioConfig, Error> {
    let path = Path::new(config);
    if path.is_file() {
        return load_config(path);
    }
    match shipped(config) {
        Some(c) => c,
        None => Err(Error::Config(vec![format!("{config}: neither a config file nor a shipped scenario (see `pilotwave list`)")])),
    }
}

fn dispatch(command: Command) -> Result<u8, Error> {
    match command {
        Command::Run { config, out, threads } => {
            let mut config = resolve(&config)?;
            if out.is_some() {
                config.output_dir = out;
            }
            set_threads(threads)?;
            let manifest = run_scenario(&config)?;
            for a in &manifest.analyses {
                println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.analysis, a.detail);
            }
            for t in &manifest.timings {
                println!("  {:<24} {:>9.3} s", t.phase, t.seconds);
            }
            println!("wrote {}", config.output_dir().display());
            Ok(if manifest.pass { 0 } else { EXIT_ANALYSIS })
        }
        Command::List => {
            for s in list_scenarios()? {
                println!("{:<24} {}", s.name, s.description);
                println!("{:<24} analyses: {}", "", s.analyses.join(", "));
            }
            Ok(0)
        }
        Command::Plot { run_dir } => {
            let report = export_plots(&run_dir)?;
            for p in &report.written {
                println!("wrote {}", p.display());
            }
            for s in &report.skipped {
                println!("skipped {s}");
            }
            Ok(0)
        }
        Command::Verify { run_dir } => {
            let v = verify_run(&run_dir)?;
            for f in &v.mismatched {
                println!("checksum mismatch: {f}");
            }
            for f in &v.missing {
                println!("missing: {f}");
            }
            for f in &v.unlisted {
                println!("not in manifest: {f}");
            }
            println!("{} artifacts checked, {}", v.checked, if v.ok() { "all match" } else { "verification failed" });
            Ok(if v.ok() { 0 } else { EXIT_ANALYSIS })
        }
    }
}

#[cfg(feature = "parallel")]
fn set_threads(threads: Option<usize>) -> Result<(), Error> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(vec![format!("threads: {e}")]))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(threads: Option<usize>) -> Result<(), Error> {
    if threads.is_some_and(|n| n != 1) {
        return Err(Error::Config(vec!["threads: built without the parallel feature".into()]));
    }
    Ok(())
}
