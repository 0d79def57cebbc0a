//! `parafreq`: command-line front end for the frequency laboratory.
//!
//! Exit codes: 0 when every requested verdict passed, 1 when a verdict failed,
//! 2 on configuration or solver errors.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use parafreq::diagnostics::{Exponents, Tolerance};
use parafreq::experiment::{
    barenblatt_table, growth_label, parse_checks, read_series, run_barenblatt, run_sweep, simulate_series,
    spectral_table, thread_limit, verify, write_outputs, Axis, ConfigMap, ExperimentConfig, Status, SweepSpec,
};
use parafreq::spectral::{SpectralMode, SpectralSolution};
use parafreq::{Error, Result};

#[derive(Parser)]
#[command(name = "parafreq", version, about = "Frequency diagnostics for doubly nonlinear diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured simulation, write its series and print the verdict report.
    Simulate {
        config: PathBuf,
        /// Include the wall time in the report (makes reports non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Tabulate closed-form and quadrature energies of a Barenblatt solution.
    #[command(allow_negative_numbers = true)]
    Barenblatt {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long = "t", num_args = 1.., required = true, value_delimiter = ',')]
        t: Vec<f64>,
        /// Radial cells used for the discrete residual.
        #[arg(long, default_value_t = 256)]
        cells: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a finite eigenmode expansion on `[0, L]` along an ancient time range.
    #[command(allow_negative_numbers = true)]
    Spectral {
        #[arg(long = "L")]
        length: f64,
        /// Amplitudes of modes 1, 2, ...
        #[arg(long, num_args = 1.., required = true, value_delimiter = ',')]
        modes: Vec<f64>,
        /// Start and end of the (negative) time range.
        #[arg(long = "t-range", num_args = 1..=2, required = true, value_delimiter = ',')]
        t_range: Vec<f64>,
        #[arg(long, default_value_t = 21)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a stored series CSV.
    Verify {
        series: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Comma-separated check names.
        #[arg(long)]
        checks: String,
        #[arg(long, default_value_t = Tolerance::RK4_DEFAULT.atol)]
        atol: f64,
        #[arg(long, default_value_t = Tolerance::RK4_DEFAULT.ctol)]
        ctol: f64,
        #[arg(long, default_value_t = Tolerance::RK4_DEFAULT.order)]
        order: i32,
    },
    /// Run a config template over the cartesian product of axes.
    Sweep {
        template: PathBuf,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip cells with `q(p-1) - 1 < 0`.
        #[arg(long)]
        nonnegative_delta: bool,
        /// Worker threads; defaults to `PARAFREQ_THREADS`, then to the core count.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Error.exit_code() as u8)
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => Ok(std::fs::write(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Simulate { config, timing } => {
            let cfg = ExperimentConfig::load(&config)?;
            let start = Instant::now();
            let (series, mut report) = simulate_series(&cfg)?;
            if timing {
                report.wall_time = Some(start.elapsed().as_secs_f64());
            }
            write_outputs(&cfg.output, &series, &report)?;
            print!("{}", report.render());
            Ok(report.status())
        }
        Command::Barenblatt { n, p, q, c, t, cells, out } => {
            let rows = run_barenblatt(n, p, q, c, &t, cells)?;
            emit(&barenblatt_table(&rows), out.as_ref())?;
            Ok(Status::Pass)
        }
        Command::Spectral { length, modes, t_range, samples, out } => {
            let [t0, t1] = t_range[..] else {
                return Err(Error::Parameter(format!("t-range takes two values, got {}", t_range.len())));
            };
            if !(t0 < t1 && t1 < 0.0) {
                return Err(Error::Parameter(format!("t-range must satisfy t0 < t1 < 0, got {t0}, {t1}")));
            }
            let modes =
                modes.iter().enumerate().map(|(k, &amplitude)| SpectralMode { k: k as u32 + 1, amplitude }).collect();
            let sol = SpectralSolution::new(length, modes, -t0)?;
            let samples = samples.max(2);
            let mut times: Vec<f64> = (0..samples).map(|j| t0 + (t1 - t0) * j as f64 / (samples - 1) as f64).collect();
            times[samples - 1] = t1;
            let (table, growth) = spectral_table(&sol, &times)?;
            emit(&table, out.as_ref())?;
            let line = format!("growth={}", growth_label(growth));
            if out.is_some() {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
            Ok(Status::Pass)
        }
        Command::Verify { series, p, q, checks, atol, ctol, order } => {
            let checks = parse_checks(&checks)?;
            let ex = Exponents::new(p, q)?;
            let file = File::open(&series).map_err(|e| Error::Io(format!("{}: {e}", series.display())))?;
            let data = read_series(BufReader::new(file), ex)?;
            let report = verify(&data, &checks, &Tolerance { atol, ctol, order })?;
            print!("{}", report.render());
            Ok(report.status())
        }
        Command::Sweep { template, axes, out, nonnegative_delta, threads } => {
            let spec = SweepSpec {
                template: ConfigMap::load(&template)?,
                axes: axes.iter().map(|a| Axis::parse(a)).collect::<Result<_>>()?,
                nonnegative_delta_only: nonnegative_delta,
                output_dir: out,
            };
            let report = run_sweep(&spec, threads.unwrap_or_else(thread_limit))?;
            print!("{}", report.render());
            for cell in &report.cells {
                if let Err(e) = &cell.result {
                    eprintln!("cell {:03}: {e}", cell.index);
                }
            }
            Ok(report.status())
        }
    }
}
