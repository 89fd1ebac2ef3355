use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pbdm_cli::config::{Experiment, ExperimentConfig};
use pbdm_cli::presets::{self, Scale};
use pbdm_cli::{output, runner};
use pbdm_core::stability::Case;
use pbdm_core::{Exec, ModelParams};

#[derive(Parser)]
#[command(name = "pbdm", version, about = "Pathway-based diffusion model experiments")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, env = "PBDM_OUT_DIR", default_value = "runs")]
    out: PathBuf,
    /// Worker threads; 1 runs every loop sequentially.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Use the reduced desk-scale presets (default).
    #[arg(long, global = true, conflicts_with = "native")]
    desk: bool,
    /// Use the full-size grids and horizons.
    #[arg(long, global = true)]
    native: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Preset name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the run length.
    #[arg(long)]
    t_end: Option<f64>,
    /// Skip binary field dumps.
    #[arg(long)]
    no_dumps: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or config file.
    Run(Source),
    /// Inspect presets.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Kinetic runs over a kappa list plus the limit run, with the gap table.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        kappa: Vec<f64>,
        #[command(flatten)]
        source: Source,
    },
    /// Eigenvalue table of a stability case.
    Stability {
        #[arg(long)]
        case: String,
        #[arg(long, default_value_t = 10.0)]
        kmax: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Parameter set: `stability` or `biological`.
        #[arg(long, default_value = "stability")]
        params: String,
        /// z spacing for the worst-case internal-state scan.
        #[arg(long, default_value_t = 0.03)]
        dz: f64,
    },
    /// Relative L2 error of run A against run B (directories or dump files).
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

fn scale(cli: &Cli) -> Scale {
    if cli.native {
        Scale::Native
    } else {
        Scale::Desk
    }
}

fn resolve(cli: &Cli, src: &Source, fallback: &str) -> Result<ExperimentConfig> {
    let mut cfg = match (&src.preset, &src.config) {
        (_, Some(path)) => ExperimentConfig::load(path)?,
        (Some(name), None) => presets::preset(name, scale(cli))?,
        (None, None) => presets::preset(fallback, scale(cli))?,
    };
    if let Some(t) = src.t_end {
        cfg.run.t_end = t;
        let steps = cfg.steps_for(cfg.grid.dt)?;
        if steps % cfg.run.cadence != 0 {
            cfg.run.cadence = steps;
        }
    }
    if src.no_dumps {
        cfg.run.dumps = false;
    }
    Ok(cfg)
}

fn exec_for(workers: Option<usize>) -> Result<Exec> {
    match workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(1) => Ok(Exec::Sequential),
        Some(n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("building the worker pool")?;
            #[cfg(not(feature = "parallel"))]
            let _ = n;
            Ok(Exec::Parallel)
        }
        None => Ok(Exec::default()),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let exec = exec_for(cli.workers)?;
    match &cli.command {
        Command::Run(src) => {
            let cfg = resolve(cli, src, "fig1")?;
            let dir = cli.out.join(&cfg.name);
            let m = runner::run(&cfg, &dir, exec)?;
            println!(
                "{}: {} ({} files) in {}",
                cfg.name,
                m.status,
                m.files.len(),
                dir.display()
            );
        }
        Command::Preset {
            action: PresetAction::List,
        } => {
            for name in presets::NAMES {
                println!("{name}");
            }
        }
        Command::Preset {
            action: PresetAction::Show { name },
        } => {
            print!("{}", presets::preset(name, scale(cli))?.to_toml()?);
        }
        Command::Sweep { kappa, source } => {
            let mut cfg = resolve(cli, source, "fig1")?;
            cfg.experiment = Experiment::KappaGap;
            cfg.run.kappas = kappa.clone();
            cfg.name = format!("{}_sweep", cfg.name);
            let dir = cli.out.join(&cfg.name);
            runner::run(&cfg, &dir, exec)?;
            print!("{}", std::fs::read_to_string(dir.join("gap.csv"))?);
        }
        Command::Stability {
            case,
            kmax,
            points,
            params,
            dz,
        } => {
            let case = Case::parse(case)?;
            let p = match params.as_str() {
                "stability" => ModelParams::stability_study(),
                "biological" => ModelParams::biological(),
                other => bail!("unknown parameter set {other:?}"),
            };
            let rows = runner::stability_table(case, *kmax, *points, &p, *dz)?;
            let dir = cli.out.join(format!("stability_{}", case.name()));
            output::create_dir(&dir)?;
            output::write_text(&dir.join("stability.csv"), &output::stability_csv(&rows))?;
            let worst = rows.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
            let class = rows
                .iter()
                .map(|r| r.class.as_str())
                .find(|c| *c == "unstable")
                .unwrap_or("stable/marginal");
            println!(
                "{}: max Re = {worst:e}, {class}; table in {}",
                case.name(),
                dir.display()
            );
        }
        Command::Compare { a, b } => {
            let da = runner::latest_dump(a)?;
            let db = runner::latest_dump(b)?;
            println!("{:e}", runner::compare_dumps(&da, &db)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
