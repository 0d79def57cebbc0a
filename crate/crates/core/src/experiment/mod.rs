//! Batch runs: configured simulations, oracle tables, offline verification of
//! series files and parameter sweeps, with line-oriented `key=value` reports.

mod config;
mod series_csv;
mod sweep;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub use config::{parse_checks, parse_scalar_fn, Check, ConfigMap, ExperimentConfig, OutputPaths};
pub use series_csv::{fmt_f64, read_series, series_to_string, write_series, HEADER};
pub use sweep::{run_sweep, thread_limit, Axis, CellOutcome, Overrides, SweepReport, SweepSpec};

use crate::barenblatt::{
    barenblatt_i, barenblatt_i_quadrature, barenblatt_n, barenblatt_params, pde_residual, truncation_radius,
};
use crate::diagnostics::{
    almost_monotonicity_check, check_convexity, check_extinction_time, check_identity_i_prime, check_monotonicity,
    lower_bound_i, vanishing_order, FrequencySeries, Tolerance, Verdict,
};
use crate::domain::{make_grid, DomainSpec};
use crate::error::Result;
use crate::evolution::evolve;
use crate::spectral::{
    classify_spectral, spectral_d, spectral_i, spectral_log_i, spectral_n, Growth, SpectralSolution,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit status derived from a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    VerdictFailure,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::VerdictFailure => 1,
            Status::Error => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictReport {
    pub config_echo: Vec<(String, String)>,
    pub verdicts: Vec<Verdict>,
    pub series_file: Option<PathBuf>,
    pub records: usize,
    pub extinction_time: Option<f64>,
    /// The initial data vanished identically; no checks were run.
    pub trivial: bool,
    /// Wall time in seconds; only rendered when set.
    pub wall_time: Option<f64>,
}

impl VerdictReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn status(&self) -> Status {
        if self.passed() {
            Status::Pass
        } else {
            Status::VerdictFailure
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "version={VERSION}");
        for (k, v) in &self.config_echo {
            let _ = writeln!(s, "config.{k}={v}");
        }
        let _ = writeln!(s, "run.records={}", self.records);
        let _ = writeln!(s, "run.trivial={}", self.trivial);
        let _ = writeln!(s, "run.extinction_time={}", self.extinction_time.map_or("none".into(), fmt_f64));
        if let Some(p) = &self.series_file {
            let _ = writeln!(s, "series={}", p.display());
        }
        if let Some(w) = self.wall_time {
            let _ = writeln!(s, "wall_time={w:.3}");
        }
        for v in &self.verdicts {
            render_verdict(&mut s, v);
        }
        let _ = writeln!(s, "summary.verdicts={}", self.verdicts.len());
        let _ = writeln!(s, "summary.failed={}", self.verdicts.iter().filter(|v| !v.passed).count());
        let _ = writeln!(s, "summary.passed={}", self.passed());
        s
    }
}

fn render_verdict(s: &mut String, v: &Verdict) {
    let n = &v.name;
    let _ = writeln!(s, "verdict.{n}.passed={}", v.passed);
    let _ = writeln!(s, "verdict.{n}.worst_violation={}", fmt_f64(v.worst_violation));
    let _ = writeln!(s, "verdict.{n}.t={}", fmt_f64(v.t));
    let _ = writeln!(s, "verdict.{n}.tolerance={}", fmt_f64(v.tolerance));
    let _ = writeln!(s, "verdict.{n}.checked={}", v.checked);
    let _ = writeln!(s, "verdict.{n}.skipped={}", v.skipped);
}

/// Runs the requested checks on a series, each with `tolerance.for_series`.
pub fn run_checks(series: &FrequencySeries, checks: &[Check], tolerance: &Tolerance) -> Result<Vec<Verdict>> {
    let tol = tolerance.for_series(series);
    let mut out = Vec::new();
    for check in checks {
        match check {
            Check::IdentityIPrime => out.push(check_identity_i_prime(series, tol)?),
            Check::Monotonicity => out.extend(check_monotonicity(series, tol)?),
            Check::Convexity => out.push(check_convexity(series, tol)?),
            Check::LowerBound => out.push(lower_bound_i(series, 0, tol)?),
            Check::ExtinctionBound => out.push(check_extinction_time(series, tol)?),
            Check::VanishingOrder => {
                let a = series.records.first().map_or(0.0, |r| r.t);
                out.push(vanishing_order(series, a, tol)?.1);
            }
            Check::AlmostMonotonicity => out.extend(almost_monotonicity_check(series, tol)?),
        }
    }
    Ok(out)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Runs one configured simulation, writes the configured outputs and returns the report.
pub fn run_simulate(config: &ExperimentConfig) -> Result<VerdictReport> {
    let (series, report) = simulate_series(config)?;
    write_outputs(&config.output, &series, &report)?;
    Ok(report)
}

/// Writes the series CSV and the rendered report to whichever paths are set.
pub fn write_outputs(output: &OutputPaths, series: &FrequencySeries, report: &VerdictReport) -> Result<()> {
    if let Some(path) = &output.series {
        write_file(path, &series_to_string(series)?)?;
    }
    if let Some(path) = &output.report {
        write_file(path, &report.render())?;
    }
    Ok(())
}

/// Runs the simulation and checks without touching the file system.
pub fn simulate_series(config: &ExperimentConfig) -> Result<(FrequencySeries, VerdictReport)> {
    let params = &config.params;
    let grid = make_grid(&params.domain, &params.weight)?;
    let u0 = config.initial.build(params, &grid, config.t_span.0)?;
    let trivial = u0.values().iter().all(|&x| x == 0.0);
    let (_, series) =
        evolve(&u0, config.t_span, params, &grid, &config.scheme, config.perturbation.as_ref(), config.record_every)?;
    let verdicts = if trivial { Vec::new() } else { run_checks(&series, &config.checks, &config.tolerance)? };
    let report = VerdictReport {
        config_echo: config.source.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        verdicts,
        series_file: config.output.series.clone(),
        records: series.len(),
        extinction_time: series.extinction_time,
        trivial,
        wall_time: None,
    };
    Ok((series, report))
}

/// Re-checks a stored series.
pub fn verify(series: &FrequencySeries, checks: &[Check], tolerance: &Tolerance) -> Result<VerdictReport> {
    let verdicts = run_checks(series, checks, tolerance)?;
    let ex = series.exponents;
    Ok(VerdictReport {
        config_echo: vec![("p".into(), ex.p.to_string()), ("q".into(), ex.q.to_string())],
        verdicts,
        series_file: None,
        records: series.len(),
        extinction_time: series.extinction_time,
        trivial: series.records.iter().all(|r| r.i == 0.0),
        wall_time: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattRow {
    pub t: f64,
    pub i_closed: f64,
    pub i_quadrature: f64,
    pub n_closed: f64,
    pub residual_norm: f64,
}

/// Closed-form and quadrature energies plus the discrete PDE residual on a
/// radial grid of `cells` cells covering the solution at each time.
pub fn run_barenblatt(n: u32, p: f64, q: f64, c: f64, times: &[f64], cells: usize) -> Result<Vec<BarenblattRow>> {
    let bp = barenblatt_params(n, p, q, c)?;
    times
        .iter()
        .map(|&t| {
            let reach = truncation_radius(&bp, t, 1e-10)?;
            let r_max = if bp.support_radius().is_some() { 1.5 * reach } else { reach };
            let rep = pde_residual(&bp, &DomainSpec::whole_space(n, r_max, cells), t)?;
            Ok(BarenblattRow {
                t,
                i_closed: barenblatt_i(t, &bp)?,
                i_quadrature: barenblatt_i_quadrature(t, &bp)?,
                n_closed: barenblatt_n(t, &bp)?,
                residual_norm: rep.interior_norm,
            })
        })
        .collect()
}

pub fn barenblatt_table(rows: &[BarenblattRow]) -> String {
    let mut s = String::from("t,I_closed,I_quadrature,N_closed,residual_norm\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.i_closed),
            fmt_f64(r.i_quadrature),
            fmt_f64(r.n_closed),
            fmt_f64(r.residual_norm)
        );
    }
    s
}

/// `t,I,log_I,D,N` rows of a spectral solution and its growth class.
///
/// `I` and `D` overflow for large `|t|`; `log_I` and `N` do not. Both are empty
/// for the zero solution.
pub fn spectral_table(sol: &SpectralSolution, times: &[f64]) -> Result<(String, Growth)> {
    let mut s = String::from("t,I,log_I,D,N\n");
    for &t in times {
        let (log_i, n) = if sol.is_trivial() {
            (String::new(), String::new())
        } else {
            (fmt_f64(spectral_log_i(sol, t)?), fmt_f64(spectral_n(sol, t)?))
        };
        let (i, d) = (fmt_f64(spectral_i(sol, t)?), fmt_f64(spectral_d(sol, t)?));
        let _ = writeln!(s, "{},{i},{log_i},{d},{n}", fmt_f64(t));
    }
    let growth = classify_spectral(sol, 200, 10.0)?;
    Ok((s, growth))
}

pub fn growth_label(g: Growth) -> String {
    match g {
        Growth::Polynomial { degree } => format!("polynomial({})", fmt_f64(degree)),
        Growth::Exponential => "exponential".into(),
        Growth::Undetermined => "undetermined".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    const EIGEN: &str = "
        p = 2
        q = 1
        domain.left = 0
        domain.right = 3.141592653589793
        domain.cells = 64
        time.end = 0.2
        scheme.dt = 1e-3
        initial.kind = eigenmode
        checks = identity_I_prime, monotonicity, convexity
    ";

    #[test]
    fn eigenmode_run_passes() {
        let cfg = ExperimentConfig::parse(EIGEN).unwrap();
        let rep = run_simulate(&cfg).unwrap();
        assert!(rep.passed(), "{}", rep.render());
        assert_eq!(rep.status(), Status::Pass);
        assert_eq!(rep.verdicts.len(), 5);
    }

    #[test]
    fn zero_run_is_trivial() {
        let cfg = ExperimentConfig::parse(&EIGEN.replace("eigenmode", "zero")).unwrap();
        let rep = run_simulate(&cfg).unwrap();
        assert!(rep.trivial && rep.verdicts.is_empty());
        assert_eq!(rep.status().exit_code(), 0);
        assert!(rep.render().contains("run.trivial=true"));
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = ExperimentConfig::parse(&EIGEN.replace("eigenmode", "random\ninitial.modes = 6")).unwrap();
        let (s1, r1) = simulate_series(&cfg).unwrap();
        let (s2, r2) = simulate_series(&cfg).unwrap();
        assert_eq!(series_to_string(&s1).unwrap(), series_to_string(&s2).unwrap());
        assert_eq!(r1.render(), r2.render());
    }

    #[test]
    fn barenblatt_rows() {
        let rows = run_barenblatt(1, 2.0, 1.0, 1.0, &[1.0], 128).unwrap();
        assert_eq!(rows[0].n_closed, -0.25);
        let rows = run_barenblatt(1, 2.0, 2.0, 1.0, &[1.0, 2.0, 4.0], 128).unwrap();
        for w in rows.windows(2) {
            assert!((w[1].i_closed / w[0].i_closed - 2f64.powf(-2.0 / 3.0)).abs() < 1e-14);
        }
        assert!(barenblatt_table(&rows).starts_with("t,I_closed,I_quadrature,N_closed,residual_norm\n"));
        assert!(matches!(run_barenblatt(4, 2.0, 0.5, 1.0, &[1.0], 64), Err(Error::Regime(_))));
    }

    #[test]
    fn verify_round_trip() {
        let cfg = ExperimentConfig::parse(EIGEN).unwrap();
        let (series, rep) = simulate_series(&cfg).unwrap();
        let text = series_to_string(&series).unwrap();
        let back = read_series(text.as_bytes(), series.exponents).unwrap();
        let rep2 = verify(&back, &cfg.checks, &cfg.tolerance).unwrap();
        assert_eq!(rep.verdicts, rep2.verdicts);
    }
}
