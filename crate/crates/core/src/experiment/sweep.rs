//! Parameter sweeps over a config template.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use super::{run_simulate, ConfigMap, ExperimentConfig, Status, VerdictReport};
use crate::error::{Error, Result};

/// One swept key and its values, applied as raw config text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    /// Parses `key=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, vals) =
            spec.split_once('=').ok_or_else(|| Error::Config(format!("axis `{spec}` must look like key=v1,v2")))?;
        let values: Vec<String> = vals.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if key.trim().is_empty() || values.is_empty() {
            return Err(Error::Config(format!("axis `{spec}` has no key or no values")));
        }
        Ok(Self { key: key.trim().to_string(), values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub template: ConfigMap,
    pub axes: Vec<Axis>,
    /// Drop cells whose `(p, q)` give `δ < 0`.
    pub nonnegative_delta_only: bool,
    /// Per-cell outputs go to `<dir>/cell_NNN/{series.csv,report.txt}`.
    pub output_dir: Option<PathBuf>,
}

/// `(key, value)` pairs applied on top of the template for one cell.
pub type Overrides = Vec<(String, String)>;

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub index: usize,
    pub overrides: Overrides,
    pub result: std::result::Result<VerdictReport, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<CellOutcome>,
}

impl SweepReport {
    /// `verdict name → (passed, total)` over all cells that ran.
    pub fn aggregate(&self) -> BTreeMap<String, (usize, usize)> {
        let mut agg: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for cell in &self.cells {
            if let Ok(rep) = &cell.result {
                for v in &rep.verdicts {
                    let e = agg.entry(v.name.clone()).or_default();
                    e.0 += usize::from(v.passed);
                    e.1 += 1;
                }
            }
        }
        agg
    }

    pub fn errors(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_err()).count()
    }

    pub fn status(&self) -> Status {
        if self.errors() > 0 {
            Status::Error
        } else if self.cells.iter().all(|c| c.result.as_ref().is_ok_and(|r| r.passed())) {
            Status::Pass
        } else {
            Status::VerdictFailure
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sweep.cells={}", self.cells.len());
        let _ = writeln!(s, "sweep.errors={}", self.errors());
        for c in &self.cells {
            let label: Vec<String> = c.overrides.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            let _ = writeln!(s, "cell.{:03}.overrides={}", c.index, label.join(";"));
            match &c.result {
                Ok(rep) => {
                    let _ = writeln!(s, "cell.{:03}.passed={}", c.index, rep.passed());
                }
                Err(e) => {
                    let _ = writeln!(s, "cell.{:03}.error={e}", c.index);
                }
            }
        }
        for (name, (passed, total)) in self.aggregate() {
            let _ = writeln!(s, "aggregate.{name}.passed={passed}");
            let _ = writeln!(s, "aggregate.{name}.total={total}");
            let _ = writeln!(s, "aggregate.{name}.rate={:.4}", passed as f64 / total as f64);
        }
        let _ = writeln!(s, "summary.status={}", self.status().exit_code());
        s
    }
}

/// Worker count from `PARAFREQ_THREADS`; 0 lets rayon decide.
pub fn thread_limit() -> usize {
    std::env::var("PARAFREQ_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

fn cartesian(axes: &[Axis]) -> Vec<Overrides> {
    let mut cells = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(cells.len() * axis.values.len());
        for cell in &cells {
            for v in &axis.values {
                let mut c = cell.clone();
                c.push((axis.key.clone(), v.clone()));
                next.push(c);
            }
        }
        cells = next;
    }
    cells
}

fn delta_of_map(map: &ConfigMap) -> Option<f64> {
    let p: f64 = map.get("p")?.parse().ok()?;
    let q: f64 = map.get("q")?.parse().ok()?;
    Some(q * (p - 1.0) - 1.0)
}

/// Runs every cell of the sweep concurrently on at most `threads` workers
/// (0 for the rayon default). Cell order in the report is the axis order.
pub fn run_sweep(spec: &SweepSpec, threads: usize) -> Result<SweepReport> {
    let mut jobs = Vec::new();
    for overrides in cartesian(&spec.axes) {
        let mut map = spec.template.clone();
        for (k, v) in &overrides {
            map.set(k, v);
        }
        if spec.nonnegative_delta_only && delta_of_map(&map).is_some_and(|d| d < 0.0) {
            continue;
        }
        jobs.push((overrides, map));
    }
    let jobs: Vec<(usize, Overrides, ConfigMap)> = jobs
        .into_iter()
        .enumerate()
        .map(|(i, (o, mut map))| {
            if let Some(dir) = &spec.output_dir {
                let cell = dir.join(format!("cell_{i:03}"));
                map.set("output.series", &cell.join("series.csv").display().to_string());
                map.set("output.report", &cell.join("report.txt").display().to_string());
            }
            (i, o, map)
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<CellOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|(index, overrides, map)| {
                let result = ExperimentConfig::from_map(map).and_then(|c| run_simulate(&c)).map_err(|e| e.to_string());
                CellOutcome { index: *index, overrides: overrides.clone(), result }
            })
            .collect()
    });
    let report = SweepReport { cells };
    if let Some(dir) = &spec.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.txt"), report.render())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEMPLATE: &str = "
        p = 2
        q = 1
        domain.left = 0
        domain.right = 1
        domain.cells = 16
        time.end = 0.01
        scheme.dt = 1e-4
        initial.kind = random
        initial.modes = 4
        checks = monotonicity
    ";

    #[test]
    fn grid_with_delta_filter() {
        let spec = SweepSpec {
            template: ConfigMap::parse(TEMPLATE).unwrap(),
            axes: vec![Axis::parse("p=2,3,1.5").unwrap(), Axis::parse("q=1,2,0.5").unwrap()],
            nonnegative_delta_only: true,
            output_dir: None,
        };
        let rep = run_sweep(&spec, 2).unwrap();
        // (2,0.5), (1.5,0.5) and (1.5,1) have δ < 0
        assert_eq!(rep.cells.len(), 6);
        assert_eq!(rep.errors(), 0);
        assert_eq!(rep.cells[0].overrides, vec![("p".into(), "2".into()), ("q".into(), "1".into())]);
    }

    #[test]
    fn bad_cell_is_recorded() {
        let spec = SweepSpec {
            template: ConfigMap::parse(TEMPLATE).unwrap(),
            axes: vec![Axis::parse("p=2,0.5").unwrap()],
            nonnegative_delta_only: false,
            output_dir: None,
        };
        let rep = run_sweep(&spec, 1).unwrap();
        assert_eq!(rep.errors(), 1);
        assert_eq!(rep.status(), Status::Error);
        assert!(rep.render().contains("cell.001.error="));
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(Axis::parse("seed=1,2").unwrap().values, vec!["1", "2"]);
        assert!(Axis::parse("seed").is_err());
        assert!(Axis::parse("seed=").is_err());
    }
}
