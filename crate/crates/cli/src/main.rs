use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nanorbit::{reproduce, Config, Pipeline, PipelineError, Request, Stage};

#[derive(Parser)]
#[command(name = "nanorbit", version, about = "Orbital wave packets of an atom trapped around an optical nanofiber")]
struct Cli {
    /// Config file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; every stage is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// HE11 mode profiles of the trap light.
    Mode,
    /// Potential components for one m.
    Potential {
        #[arg(long)]
        m: i64,
    },
    /// Lowest radial states for one m.
    Eigen {
        #[arg(long)]
        m: i64,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Dispersion table, derivatives and timescales.
    Dispersion {
        #[arg(long)]
        m_min: Option<i64>,
        #[arg(long)]
        m_max: Option<i64>,
    },
    /// Density snapshots and azimuthal marginals.
    Evolve {
        /// Snapshot time, s.
        #[arg(long, conflicts_with = "t_list")]
        t: Option<f64>,
        /// File with one time per line (s).
        #[arg(long)]
        t_list: Option<PathBuf>,
    },
    /// Probe scattering-rate trace and its analysis.
    Probe {
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        axis_angle: Option<f64>,
    },
    /// Full pipeline plus the acceptance table.
    Reproduce,
}

fn read_times(path: &PathBuf) -> Result<Vec<f64>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.clone(),
        source,
    })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>().map_err(|e| PipelineError::Config {
                key: "--t-list".into(),
                message: format!("`{l}`: {e}"),
            })
        })
        .collect()
}

fn execute(cli: Cli) -> Result<ExitCode, PipelineError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let mut request = Request::default();
    match cli.command {
        Command::Mode => request.stages.insert(Stage::Mode),
        Command::Potential { m } => {
            request.potential_m = Some(m);
            request.stages.insert(Stage::Potential)
        }
        Command::Eigen { m, count } => {
            for file in nanorbit::pipeline::run_eigen(&config, &out, m, count)? {
                println!("{}", out.join(file).display());
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Dispersion { m_min, m_max } => {
            config.numerics.m_scan_min = m_min.unwrap_or(config.numerics.m_scan_min);
            config.numerics.m_scan_max = m_max.unwrap_or(config.numerics.m_scan_max);
            request.stages.insert(Stage::Dispersion)
        }
        Command::Evolve { t, t_list } => {
            if let Some(t) = t {
                config.evolve.times_s = vec![t];
            } else if let Some(path) = &t_list {
                config.evolve.times_s = read_times(path)?;
            }
            request.stages.insert(Stage::Evolve)
        }
        Command::Probe { t_max, dt, axis_angle } => {
            config.probe.t_max_s = t_max.unwrap_or(config.probe.t_max_s);
            config.probe.dt_s = dt.unwrap_or(config.probe.dt_s);
            config.probe.axis_angle_rad = axis_angle.unwrap_or(config.probe.axis_angle_rad);
            request.stages.insert(Stage::Probe)
        }
        Command::Reproduce => {
            config.validate()?;
            let report = reproduce(&config, &out, cli.threads)?;
            print!("{}", report.render());
            println!("runtime {:.1} s, report in {}", report.runtime_s, out.join("report.csv").display());
            return Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(4) });
        }
    };
    config.validate()?;
    let run = Pipeline::new(config, &out).with_threads(cli.threads).run(&request)?;
    for files in run.manifest.outputs.values() {
        for file in files {
            println!("{}", out.join(file).display());
        }
    }
    println!("{}", out.join("manifest.json").display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
