//! Initial data catalog.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barenblatt::{barenblatt_field, barenblatt_params};
use crate::domain::{dot_weighted, Field, Grid, ProblemParams, WeightSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// Barenblatt solution with profile constant `c` sampled at time `t0`.
    Barenblatt {
        t0: f64,
        c: f64,
    },
    /// `k`-th sine mode on an interval, `cos((k - 1/2)πr/R)` on a radial grid.
    Eigenmode {
        k: u32,
    },
    /// Seeded smooth sign-changing data, `max|u| = 1`.
    RandomSignChanging {
        seed: u64,
        smoothness: f64,
        modes: u32,
    },
    /// `amplitude (1 - ((x - center)/width)²)_+²`
    Bump {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    Zero,
    Table(Vec<f64>),
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::Barenblatt { .. } => "barenblatt",
            InitialData::Eigenmode { .. } => "eigenmode",
            InitialData::RandomSignChanging { .. } => "random",
            InitialData::Bump { .. } => "bump",
            InitialData::Zero => "zero",
            InitialData::Table(_) => "table",
        }
    }

    /// Builds the field at time `t`.
    pub fn build(&self, params: &ProblemParams, grid: &Grid, t: f64) -> Result<Field> {
        let (lo, hi) = span(grid);
        let len = hi - lo;
        match self {
            InitialData::Barenblatt { t0, c } => {
                if params.weight != WeightSpec::Zero {
                    return Err(Error::Parameter("barenblatt data requires a zero weight".into()));
                }
                let bp = barenblatt_params(params.n(), params.p(), params.q(), *c)?;
                let f = barenblatt_field(&bp, grid, *t0)?;
                Field::new(f.into_values(), t)
            }
            InitialData::Eigenmode { k } => {
                if *k == 0 {
                    return Err(Error::Parameter("mode index starts at 1".into()));
                }
                let k = *k as f64;
                Field::from_fn(grid, t, |x| mode(grid, k, x, lo, len))
            }
            InitialData::RandomSignChanging { seed, smoothness, modes } => {
                random_sign_changing(grid, t, *seed, *smoothness, *modes)
            }
            InitialData::Bump { center, width, amplitude } => {
                if !(*width > 0.0) {
                    return Err(Error::Parameter(format!("bump width must be positive, got {width}")));
                }
                Field::from_fn(grid, t, |x| {
                    let s = (x - center) / width;
                    amplitude * (1.0 - s * s).max(0.0).powi(2)
                })
            }
            InitialData::Zero => Ok(Field::zeros(grid.len(), t)),
            InitialData::Table(values) => {
                if values.len() != grid.len() {
                    return Err(Error::Dimension { expected: grid.len(), got: values.len() });
                }
                Field::new(values.clone(), t)
            }
        }
    }
}

fn span(grid: &Grid) -> (f64, f64) {
    let f = grid.faces();
    (f[0], f[f.len() - 1])
}

fn mode(grid: &Grid, k: f64, x: f64, lo: f64, len: f64) -> f64 {
    use std::f64::consts::PI;
    if grid.is_radial() {
        ((k - 0.5) * PI * x / len).cos()
    } else {
        (k * PI * (x - lo) / len).sin()
    }
}

/// Sum of `modes` eigenmodes with uniform random amplitudes decaying like
/// `k^{-smoothness}`; the first amplitude is then reset so the weighted mean
/// vanishes, which forces a sign change.
fn random_sign_changing(grid: &Grid, t: f64, seed: u64, smoothness: f64, modes: u32) -> Result<Field> {
    if modes < 2 {
        return Err(Error::Parameter("random data needs at least two modes".into()));
    }
    if !(smoothness >= 0.0 && smoothness.is_finite()) {
        return Err(Error::Parameter(format!("smoothness must be non-negative, got {smoothness}")));
    }
    let (lo, hi) = span(grid);
    let len = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = grid.cell_weights();
    let basis: Vec<Vec<f64>> =
        (1..=modes).map(|k| grid.centers().iter().map(|&x| mode(grid, k as f64, x, lo, len)).collect()).collect();
    let mut amps: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) * (k as f64).powf(-smoothness)).collect();
    // draw again if everything past the first mode is negligible
    if amps[1..].iter().all(|a| a.abs() < 1e-3) {
        amps[1] = 0.5;
    }
    let means: Vec<f64> = basis.iter().map(|b| dot_weighted(b, w)).collect();
    let rest: f64 = amps[1..].iter().zip(&means[1..]).map(|(a, m)| a * m).sum();
    amps[0] = -rest / means[0];
    let mut u = vec![0.0; grid.len()];
    for (a, b) in amps.iter().zip(&basis) {
        for (ui, bi) in u.iter_mut().zip(b) {
            *ui += a * bi;
        }
    }
    let max = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(max > 0.0) {
        return Err(Error::Parameter("random data degenerated to zero".into()));
    }
    Field::new(u.into_iter().map(|x| x / max).collect(), t)
}
