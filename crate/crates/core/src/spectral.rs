//! Ancient solutions of the heat equation on a Dirichlet interval `[0, L]`
//! by finite eigenexpansion, and a growth classifier for energy histories.

use crate::diagnostics::least_squares;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMode {
    /// Mode index, at least 1.
    pub k: u32,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub length: f64,
    pub modes: Vec<SpectralMode>,
    /// The solution is considered on `(-horizon, 0)`.
    pub horizon: f64,
}

impl SpectralSolution {
    pub fn new(length: f64, modes: Vec<SpectralMode>, horizon: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Parameter(format!("length must be positive, got {length}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon must be positive, got {horizon}")));
        }
        if let Some(m) = modes.iter().find(|m| m.k == 0 || !m.amplitude.is_finite()) {
            return Err(Error::Parameter(format!("invalid mode {m:?}")));
        }
        Ok(Self { length, modes, horizon })
    }

    /// Dirichlet eigenvalue `(kπ/L)²`.
    pub fn eigenvalue(&self, k: u32) -> f64 {
        (k as f64 * std::f64::consts::PI / self.length).powi(2)
    }

    /// Orthonormal eigenfunction `√(2/L) sin(kπx/L)`.
    pub fn eigenfunction(&self, k: u32, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * (k as f64 * std::f64::consts::PI * x / self.length).sin()
    }

    pub fn is_trivial(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    fn active(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.modes.iter().filter(|m| m.amplitude != 0.0).map(|m| (m.amplitude, self.eigenvalue(m.k)))
    }

    /// Largest eigenvalue carrying a nonzero amplitude.
    pub fn top_eigenvalue(&self) -> Option<f64> {
        self.active().map(|(_, l)| l).reduce(f64::max)
    }

    /// Smallest eigenvalue carrying a nonzero amplitude.
    pub fn bottom_eigenvalue(&self) -> Option<f64> {
        self.active().map(|(_, l)| l).reduce(f64::min)
    }
}

fn check_ancient(t: f64) -> Result<()> {
    if t < 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("ancient solutions are evaluated at t < 0, got {t}")))
    }
}

/// `u(x, t) = Σ a_k e^{-λ_k t} φ_k(x)`.
pub fn spectral_eval(sol: &SpectralSolution, x: f64, t: f64) -> Result<f64> {
    check_ancient(t)?;
    Ok(sol.modes.iter().map(|m| m.amplitude * (-sol.eigenvalue(m.k) * t).exp() * sol.eigenfunction(m.k, x)).sum())
}

/// `I(t) = Σ a_k² e^{2λ_k|t|}`.
pub fn spectral_i(sol: &SpectralSolution, t: f64) -> Result<f64> {
    check_ancient(t)?;
    Ok(sol.active().fold(0.0, |s, (a, l)| s + a * a * (2.0 * l * t.abs()).exp()))
}

/// `log I(t)`, stable for large `|t|`; `-∞` for the zero solution.
pub fn spectral_log_i(sol: &SpectralSolution, t: f64) -> Result<f64> {
    check_ancient(t)?;
    let logs: Vec<f64> = sol.active().map(|(a, l)| 2.0 * a.abs().ln() + 2.0 * l * t.abs()).collect();
    Ok(log_sum_exp(&logs))
}

/// `D(t) = -Σ a_k² λ_k e^{2λ_k|t|}`.
pub fn spectral_d(sol: &SpectralSolution, t: f64) -> Result<f64> {
    check_ancient(t)?;
    Ok(0.0 - sol.active().fold(0.0, |s, (a, l)| s + a * a * l * (2.0 * l * t.abs()).exp()))
}

/// `N(t) = D/I`, a weighted mean of `-λ_k` evaluated without overflow.
pub fn spectral_n(sol: &SpectralSolution, t: f64) -> Result<f64> {
    check_ancient(t)?;
    if sol.is_trivial() {
        return Err(Error::Domain("frequency of the zero solution is undefined".into()));
    }
    let terms: Vec<(f64, f64)> = sol.active().map(|(a, l)| (2.0 * a.abs().ln() + 2.0 * l * t.abs(), l)).collect();
    let top = terms.iter().map(|(e, _)| *e).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for (e, l) in terms {
        let w = (e - top).exp();
        num += w * l;
        den += w;
    }
    Ok(-num / den)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    /// `I(t) ≲ (1+|t|)^degree`; `degree` is the fitted exponent.
    Polynomial {
        degree: f64,
    },
    Exponential,
    Undetermined,
}

/// Minimum ratio `max|t| / min|t|` (two decades).
const MIN_SPAN: f64 = 100.0;
/// The linear-in-`|t|` fit must beat the power fit by this RSS factor.
const RSS_FACTOR: f64 = 10.0;

/// Classifies the growth of `I` along an ancient history as `t → -∞`.
///
/// Over the final decade of `|t|`, `log I` is fitted against `|t|` and against
/// `log(1+|t|)`; exponential growth is reported when the linear fit reduces the
/// residual sum of squares by at least a factor of 10. A fitted power above
/// `d_max`, or a horizon shorter than two decades, is undetermined.
pub fn growth_classify(times: &[f64], energies: &[f64], d_max: f64) -> Result<Growth> {
    if times.len() != energies.len() {
        return Err(Error::Dimension { expected: times.len(), got: energies.len() });
    }
    if energies.iter().any(|&i| !(i >= 0.0) || !i.is_finite()) {
        return Err(Error::Parameter("energies must be finite and non-negative".into()));
    }
    if energies.iter().all(|&i| i == 0.0) {
        check_times(times)?;
        return Ok(Growth::Polynomial { degree: 0.0 });
    }
    if energies.contains(&0.0) {
        return Ok(Growth::Undetermined);
    }
    let logs: Vec<f64> = energies.iter().map(|i| i.ln()).collect();
    classify_log(times, &logs, d_max)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    if let Some(t) = times.iter().find(|&&t| !(t < 0.0)) {
        return Err(Error::Domain(format!("history is not ancient: contains t = {t}")));
    }
    Ok(())
}

fn classify_log(times: &[f64], logs: &[f64], d_max: f64) -> Result<Growth> {
    check_times(times)?;
    let far = times.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let near = times.iter().map(|t| t.abs()).fold(f64::INFINITY, f64::min);
    if far / near < MIN_SPAN {
        return Ok(Growth::Undetermined);
    }
    let window: Vec<(f64, f64)> =
        times.iter().zip(logs).filter(|(t, _)| t.abs() >= far / 10.0).map(|(t, &y)| (t.abs(), y)).collect();
    if window.len() < 3 {
        return Ok(Growth::Undetermined);
    }
    let spread = window.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
        - window.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let scale = window.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
    if spread <= 1e-12 * scale {
        return Ok(Growth::Polynomial { degree: 0.0 });
    }
    let (slope_lin, _, rss_lin) = least_squares(&window);
    let logt: Vec<(f64, f64)> = window.iter().map(|&(s, y)| ((1.0 + s).ln(), y)).collect();
    let (degree, _, rss_pow) = least_squares(&logt);
    if slope_lin > 0.0 && rss_pow >= RSS_FACTOR * rss_lin {
        Ok(Growth::Exponential)
    } else if degree <= d_max {
        Ok(Growth::Polynomial { degree: degree.max(0.0) })
    } else {
        Ok(Growth::Undetermined)
    }
}

/// Classifies a spectral solution over its horizon from closed-form `log I`
/// sampled at `samples` log-spaced times in `[-horizon, -horizon/1000]`.
pub fn classify_spectral(sol: &SpectralSolution, samples: usize, d_max: f64) -> Result<Growth> {
    let samples = samples.max(8);
    let times: Vec<f64> =
        (0..samples).map(|j| -sol.horizon * 10f64.powf(-3.0 * (1.0 - j as f64 / (samples - 1) as f64))).collect();
    if sol.is_trivial() {
        return Ok(Growth::Polynomial { degree: 0.0 });
    }
    let logs = times.iter().map(|&t| spectral_log_i(sol, t)).collect::<Result<Vec<_>>>()?;
    classify_log(&times, &logs, d_max)
}
