use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use metaimp::config::SweepConfig;
use metaimp::run::{run_optimize, run_sweep, with_threads};
use metaimp::verify::{run_verify, VerifyOptions};
use metaimp::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "metaimp", version, about = "Effective impedance of periodic plasmonic metasurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Override `output.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_svg: bool,
    #[arg(long)]
    dump_operators: bool,
    /// Omit the generation-time comment so output is byte-reproducible.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep alpha_inf over the configured wavelength grid.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Shape ascent of |alpha_inf|^2 at a fixed wavelength.
    Optimize {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the numerical self-checks.
    Verify {
        #[arg(long)]
        fast: bool,
        /// Nodes on the reference particle.
        #[arg(long, default_value_t = 128)]
        nodes: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn load(path: &Path, flags: &RunFlags) -> Result<SweepConfig, Error> {
    let mut cfg = SweepConfig::from_path(path)?;
    if let Some(dir) = &flags.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(t) = flags.threads {
        cfg.threads = t;
    }
    cfg.output.svg &= !flags.no_svg;
    cfg.output.dump_operators |= flags.dump_operators;
    cfg.output.timestamp &= !flags.no_timestamp;
    Ok(cfg)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_NUMERICAL })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep { config, flags } => {
            let cfg = match load(&config, &flags) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match with_threads(cfg.threads, || run_sweep(&cfg)).and_then(|r| r) {
                Ok(out) => {
                    for p in &out.peaks {
                        println!(
                            "peak at {:.1} nm: |alpha_inf| = {:.6e} (mode {}, lambda = {:.6})",
                            p.wavelength_nm, p.value, p.dominant_mode_index, p.dominant_mode_lambda
                        );
                    }
                    if out.peaks.is_empty() {
                        println!("no resonance peaks in the sweep window");
                    }
                    for f in &out.files {
                        println!("wrote {}", f.display());
                    }
                    if out.failures() > 0 {
                        eprintln!("{} wavelengths failed; see sweep.csv", out.failures());
                        return ExitCode::from(EXIT_NUMERICAL);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Optimize { config, flags } => {
            let cfg = match load(&config, &flags) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            match with_threads(cfg.threads, || run_optimize(&cfg)).and_then(|r| r) {
                Ok(out) => {
                    for (k, t) in out.trajectories.iter().enumerate() {
                        let first = &t.records[0];
                        let last = t.last();
                        println!(
                            "start {k}: J {:.6e} -> {:.6e} in {} steps ({})",
                            first.j,
                            last.j,
                            last.iteration,
                            t.status.as_str()
                        );
                    }
                    for f in &out.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify { fast, nodes, threads } => {
            let opts = VerifyOptions {
                nodes,
                fast,
                ..VerifyOptions::default()
            };
            match with_threads(threads.unwrap_or(0), || run_verify(&opts)) {
                Ok(report) => {
                    print!("{}", report.render());
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_VERIFY)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}
