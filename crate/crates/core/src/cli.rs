//! Command-line front end. Every run is a batch job keyed by a TOML config
//! and a seed; exit code 0 means every gate passed, 2 that a gate failed,
//! 1 an error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::dynamics::{build_mkv_reference, CouplingRun};
use crate::error::{Error, Result};
use crate::experiments::{
    config_hash, persist, run_chaos_campaign, run_moderate_campaign, run_path_metrics, CampaignResult, ConfigFile,
    Fingerprint,
};
use crate::kernels::kernel_report;
use crate::metrics::{coupling_error, observable_error, TestFunction};
use crate::rng::derive_seed;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_GATE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mfchaos",
    about = "Particle systems driven by fractional Brownian motion: noise checks, kernel budgets, coupled runs and rate campaigns",
    disable_version_flag = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    /// TOML config file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override a config key, e.g. `--set sim.replicas=50`; repeatable,
    /// applied left to right
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed (overrides `seed`)
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads; changes speed only, never results
    #[arg(long, global = true, value_name = "INT")]
    pub threads: Option<usize>,
    /// Only errors on stderr
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    pub quiet: bool,
    /// Progress and diagnostics on stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,
    /// Print the build fingerprint (with the config hash when `--config`
    /// holds a campaign) and exit
    #[arg(long, short = 'V')]
    pub version: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Monte Carlo checks of the fBm sampler ([noise_check])
    FbmCheck,
    /// Admissibility report of a kernel ([kernel_info] or [sim])
    KernelInfo,
    /// One coupled run of the particle system and its McKean-Vlasov copies ([sim])
    Simulate {
        /// Write ips.csv and copies.csv trajectories to the output directory
        #[arg(long)]
        trajectories: bool,
    },
    /// Coupling-error rate over N at a fixed mollification width ([sim], [campaign])
    ChaosRate,
    /// Rate over N with a width schedule delta(N) ([sim], [campaign])
    ModerateRate,
    /// Path-norm refinement study and remainder diagnostic ([metrics_job])
    Metrics,
}

/// Log level from the verbosity flags.
pub fn log_level(cli: &Cli) -> log::LevelFilter {
    if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    }
}

fn load(cli: &Cli, required: bool) -> Result<ConfigFile> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    match &cli.config {
        Some(path) => ConfigFile::load(path, &overrides),
        None if required => Err(Error::Config {
            key: "--config".into(),
            line: None,
            message: "this command needs a config file".into(),
        }),
        None => ConfigFile::parse("", &overrides),
    }
}

fn output_dir(cli: &Cli, file: &ConfigFile) -> Option<PathBuf> {
    cli.out.clone().or_else(|| file.output_dir.clone())
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Run a parsed invocation, writing the human summary to `out`.
pub fn dispatch<W: Write>(cli: &Cli, out: &mut W) -> i32 {
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                let mut buf = Vec::new();
                let r = pool.install(|| execute(cli, &mut buf));
                out.write_all(&buf).map_err(io_out).and(r)
            }
            Err(e) => Err(Error::Input(format!("cannot start {n} threads: {e}"))),
        },
        None => execute(cli, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn gate_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_GATE
    }
}

fn io_out(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<i32> {
    if cli.version {
        let mut fp = Fingerprint::environment();
        if cli.config.is_some() {
            let file = load(cli, true)?;
            fp.seed = Some(file.seed);
            if let Ok(exp) = file.experiment() {
                fp.config_hash = Some(config_hash(&exp));
            }
        }
        writeln!(out, "{fp}").map_err(io_out)?;
        return Ok(EXIT_PASS);
    }
    let Some(command) = &cli.command else {
        return Err(Error::Input("no subcommand given; see --help".into()));
    };
    match command {
        Command::FbmCheck => {
            let file = load(cli, false)?;
            let report = file.noise_check.clone().unwrap_or_default().run(file.seed)?;
            write!(out, "{report}").map_err(io_out)?;
            if let Some(dir) = output_dir(cli, &file) {
                write_json(&dir, "noise_check.json", &report)?;
            }
            Ok(gate_code(report.passed()))
        }
        Command::KernelInfo => {
            let file = load(cli, true)?;
            let (kernel, hurst, q) = file.kernel_info()?;
            kernel.validate()?;
            let report = kernel_report(&kernel, q, hurst);
            writeln!(out, "{report}").map_err(io_out)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes")).map_err(io_out)?;
            if let Some(dir) = output_dir(cli, &file) {
                write_json(&dir, "kernel_info.json", &report)?;
            }
            Ok(EXIT_PASS)
        }
        Command::Simulate { trajectories } => simulate(cli, *trajectories, out),
        Command::ChaosRate | Command::ModerateRate => {
            let file = load(cli, true)?;
            let exp = file.experiment()?;
            let result = if matches!(command, Command::ChaosRate) {
                run_chaos_campaign(&exp)?
            } else {
                run_moderate_campaign(&exp)?
            };
            report_campaign(cli, &file, &result, out)
        }
        Command::Metrics => {
            let file = load(cli, false)?;
            let job = file.metrics_job.clone().unwrap_or_default();
            let sim = match &file.sim {
                Some(_) => Some(file.sim()?),
                None => None,
            };
            let report = run_path_metrics(&job, sim.as_ref(), file.seed)?;
            write!(out, "{report}").map_err(io_out)?;
            if let Some(dir) = output_dir(cli, &file) {
                write_json(&dir, "metrics.json", &report)?;
            }
            Ok(gate_code(report.passed()))
        }
    }
}

fn report_campaign<W: Write>(cli: &Cli, file: &ConfigFile, result: &CampaignResult, out: &mut W) -> Result<i32> {
    writeln!(out, "{}", result.fingerprint).map_err(io_out)?;
    write!(out, "{}", result.summary_table()).map_err(io_out)?;
    if let Some(dir) = output_dir(cli, file) {
        persist(result, &dir)?;
        writeln!(out, "artifacts in {}", dir.display()).map_err(io_out)?;
    }
    Ok(gate_code(result.passed()))
}

fn simulate<W: Write>(cli: &Cli, trajectories: bool, out: &mut W) -> Result<i32> {
    let file = load(cli, true)?;
    let sim = file.sim()?;
    sim.validate()?;
    let dir = output_dir(cli, &file);
    if trajectories && dir.is_none() {
        return Err(Error::Config {
            key: "--out".into(),
            line: None,
            message: "trajectories need an output directory".into(),
        });
    }
    let noise = sim.sample_noise(sim.particles)?;
    let initials = sim.sample_initials(sim.particles)?;
    let flow = build_mkv_reference(&sim, derive_seed(sim.seed, "mkv-reference"))?;
    let run = CouplingRun::run(&sim, &flow, &noise, &initials)?;
    let coupling = coupling_error(&run, sim.moment)?;
    let observable = observable_error(&run.ips, &flow, &TestFunction::Tanh, sim.moment)?;
    writeln!(
        out,
        "N = {}, M = {}, replicas = {}, n = {}, kernel {}",
        sim.particles,
        sim.mkv_size,
        sim.replicas,
        sim.grid.steps(),
        sim.kernel.family.name()
    )
    .map_err(io_out)?;
    writeln!(out, "coupling error      {:.6e} +/- {:.2e}", coupling.value, coupling.stderr).map_err(io_out)?;
    writeln!(out, "observable (tanh)   {:.6e} +/- {:.2e}", observable.value, observable.stderr).map_err(io_out)?;
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_json(
            &dir,
            "simulate.json",
            &serde_json::json!({ "coupling": coupling, "observable_tanh": observable, "seed": sim.seed }),
        )?;
        if trajectories {
            for (name, ens) in [("ips.csv", &run.ips), ("copies.csv", &run.copies)] {
                let path = dir.join(name);
                let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
                let mut w = BufWriter::new(f);
                ens.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
            }
            writeln!(out, "trajectories in {}", dir.display()).map_err(io_out)?;
        }
    }
    Ok(EXIT_PASS)
}

/// Parse `args` (including the program name) and dispatch.
pub fn run_from_args<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli, out),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = write!(out, "{e}");
            code
        }
    }
}
