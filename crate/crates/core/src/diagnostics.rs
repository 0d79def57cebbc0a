//! Weighted energies, parabolic frequencies and the inequality checks run on
//! recorded frequency series.
//!
//! For a solution `u` with `v = u^q`:
//!
//! * `I = Σ |u_i|^{q+1} w_i`
//! * `D = -Σ_f |∂v_f|^p w_f`
//! * `N = D / I`, `N_G = D / I^{pq/(q+1)}`
//!
//! Every check returns a [`Verdict`] whose `worst_violation` is a
//! dimensionless, locally normalized shortfall. Time derivatives use
//! (possibly non-uniform) central differences at interior records, and each
//! point's violation is reduced by the floating-point rounding bound of the
//! difference quotient before it is compared with the tolerance.

use crate::domain::{signed_pow, Field, Grid};
use crate::error::{Error, Result};
use crate::evolution::PerturbationSpec;
use crate::operator::gradient_into;

/// The exponent pair `(p, q)` a series was produced with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
}

impl Exponents {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        crate::domain::delta_of(p, q)?;
        Ok(Self { p, q })
    }

    pub fn delta(&self) -> f64 {
        self.q * (self.p - 1.0) - 1.0
    }
}

/// Frequency data at one instant. `n` and `n_g` are `None` when `I = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyRecord {
    pub t: f64,
    pub i: f64,
    pub d: f64,
    pub n: Option<f64>,
    pub n_g: Option<f64>,
    pub extinct: bool,
}

impl FrequencyRecord {
    pub fn from_energies(t: f64, i: f64, d: f64, ex: Exponents) -> Self {
        let (n, n_g) = if i > 0.0 { (Some(d / i), Some(d / i.powf(ex.p * ex.q / (ex.q + 1.0)))) } else { (None, None) };
        Self { t, i, d, n, n_g, extinct: false }
    }
}

/// Time-ordered frequency records of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub exponents: Exponents,
    pub records: Vec<FrequencyRecord>,
    /// Set when the run was stopped because `I` fell below the extinction floor.
    pub extinction_time: Option<f64>,
    /// The perturbation the run was driven with, if any.
    pub perturbation: Option<PerturbationSpec>,
}

impl FrequencySeries {
    pub fn new(exponents: Exponents) -> Self {
        Self { exponents, records: Vec::new(), extinction_time: None, perturbation: None }
    }

    /// Builds a series from records, checking that times strictly increase.
    pub fn from_records(exponents: Exponents, records: Vec<FrequencyRecord>) -> Result<Self> {
        if records.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::Parameter("record times must strictly increase".into()));
        }
        let extinction_time = records.iter().find(|r| r.extinct).map(|r| r.t);
        Ok(Self { exponents, records, extinction_time, perturbation: None })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Largest time step between consecutive records.
    pub fn max_step(&self) -> f64 {
        self.records.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max)
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    /// Time of the worst violation (`NaN` when no point was checked).
    pub t: f64,
    pub tolerance: f64,
    /// Points skipped because a quantity was undefined there.
    pub skipped: usize,
    /// Points actually compared.
    pub checked: usize,
}

impl Verdict {
    fn from_violations(name: &str, tolerance: f64, points: &[(f64, f64)], skipped: usize) -> Self {
        let (t, worst) =
            points.iter().copied().fold(
                (f64::NAN, f64::NEG_INFINITY),
                |(bt, bw), (t, w)| {
                    if w > bw {
                        (t, w)
                    } else {
                        (bt, bw)
                    }
                },
            );
        let worst = if points.is_empty() { 0.0 } else { worst };
        Self {
            name: name.to_string(),
            passed: worst <= tolerance,
            worst_violation: worst,
            t,
            tolerance,
            skipped,
            checked: points.len(),
        }
    }
}

/// `atol + ctol · dt^order`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub ctol: f64,
    pub order: i32,
}

impl Tolerance {
    /// Calibrated on the heat-equation eigenmode: central differences of
    /// RK4 records are second order in the record spacing.
    pub const RK4_DEFAULT: Tolerance = Tolerance { atol: 1e-6, ctol: 10.0, order: 2 };

    pub fn at(&self, dt: f64) -> f64 {
        self.atol + self.ctol * dt.powi(self.order)
    }

    pub fn for_series(&self, series: &FrequencySeries) -> f64 {
        self.at(series.max_step())
    }
}

/// `I = Σ |u_i|^{q+1} w_i`.
pub fn energy_i(u: &Field, grid: &Grid, q: f64) -> Result<f64> {
    grid.check_len(u.len())?;
    Ok(energy_i_slice(u.values(), grid, q))
}

pub(crate) fn energy_i_slice(u: &[f64], grid: &Grid, q: f64) -> f64 {
    u.iter().zip(grid.cell_weights()).map(|(x, w)| x.abs().powf(q + 1.0) * w).sum()
}

/// `D = -Σ_f |∂(u^q)_f|^p w_f` with the operator's face weights.
pub fn dissipation_d(u: &Field, grid: &Grid, p: f64, q: f64) -> Result<f64> {
    grid.check_len(u.len())?;
    let mut grad = vec![0.0; grid.len() + 1];
    Ok(dissipation_slice(u.values(), grid, p, q, &mut grad))
}

pub(crate) fn dissipation_slice(u: &[f64], grid: &Grid, p: f64, q: f64, grad: &mut [f64]) -> f64 {
    let v: Vec<f64> = u.iter().map(|&x| signed_pow(x, q)).collect();
    gradient_into(&v, grid, grad);
    -grad.iter().zip(grid.face_weights()).map(|(g, w)| g.abs().powf(p) * w).sum::<f64>()
}

/// Assembles `(t, I, D, N, N_G)` for `u`.
pub fn frequency(u: &Field, grid: &Grid, ex: Exponents) -> Result<FrequencyRecord> {
    let i = energy_i(u, grid, ex.q)?;
    let d = dissipation_d(u, grid, ex.p, ex.q)?;
    Ok(FrequencyRecord::from_energies(u.time(), i, d, ex))
}

// ---------------------------------------------------------------------------
// difference quotients

/// Central first derivative at `k` from records `k-1, k, k+1`.
fn central_first(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * f[0] + (h2 - h1) / (h1 * h2) * f[1] + h1 / (h2 * (h1 + h2)) * f[2]
}

/// Central second derivative at `k`.
fn central_second(t: [f64; 3], f: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    2.0 * (f[0] / (h1 * (h1 + h2)) - f[1] / (h1 * h2) + f[2] / (h2 * (h1 + h2)))
}

/// Rounding bound on a difference quotient of values of size `mag` over spacing `h`
/// (`h²` for second differences).
fn rounding(mag: f64, h_pow: f64) -> f64 {
    8.0 * f64::EPSILON * mag / h_pow
}

fn safe_scale(x: f64) -> f64 {
    if x > 0.0 && x.is_finite() {
        x
    } else {
        f64::MIN_POSITIVE
    }
}

fn interior_triples(series: &FrequencySeries) -> impl Iterator<Item = [&FrequencyRecord; 3]> {
    series.records.windows(3).map(|w| [&w[0], &w[1], &w[2]])
}

/// `dI/dt = (q+1) D` at interior records; violation is relative to `|(q+1)D|`.
pub fn check_identity_i_prime(series: &FrequencySeries, tol: f64) -> Result<Verdict> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("identity check needs >= 3 records, got {}", series.len())));
    }
    let q = series.exponents.q;
    let mut points = Vec::new();
    let mut skipped = 0;
    for [a, b, c] in interior_triples(series) {
        if a.extinct || b.extinct || c.extinct {
            skipped += 1;
            continue;
        }
        let ts = [a.t, b.t, c.t];
        let di = central_first(ts, [a.i, b.i, c.i]);
        let rhs = (q + 1.0) * b.d;
        let scale = rhs.abs().max(di.abs());
        if scale == 0.0 {
            points.push((b.t, 0.0));
            continue;
        }
        let h = (ts[1] - ts[0]).min(ts[2] - ts[1]);
        let round = rounding(a.i.max(b.i).max(c.i), h) / scale;
        points.push((b.t, ((di - rhs).abs() / scale - round).max(0.0)));
    }
    Ok(Verdict::from_violations("identity_I_prime", tol, &points, skipped))
}

/// monotonicity family: `N_G` non-decreasing, `N' ≥ δN²`, and (for `δ ≥ 0`) `N` non-decreasing.
pub fn check_monotonicity(series: &FrequencySeries, tol: f64) -> Result<Vec<Verdict>> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("monotonicity check needs >= 3 records, got {}", series.len())));
    }
    let delta = series.exponents.delta();
    let recs = &series.records;

    // N_G non-decreasing between consecutive records, as a relative rate.
    let mut ng_points = Vec::new();
    let mut ng_skipped = 0;
    let mut n_points = Vec::new();
    for w in recs.windows(2) {
        match (w[0].n_g, w[1].n_g, w[0].n, w[1].n) {
            (Some(g0), Some(g1), Some(n0), Some(n1)) if !w[0].extinct && !w[1].extinct => {
                let h = w[1].t - w[0].t;
                let tm = 0.5 * (w[0].t + w[1].t);
                let nm = 0.5 * (n0 + n1);
                let gm = 0.5 * (g0 + g1);
                let scale = safe_scale(gm.abs() * nm.abs());
                let round = rounding(g0.abs().max(g1.abs()), h) / scale;
                ng_points.push((tm, (-(g1 - g0) / h / scale - round).max(0.0)));
                let scale_n = safe_scale(nm * nm);
                let round_n = rounding(n0.abs().max(n1.abs()), h) / scale_n;
                n_points.push((tm, (-(n1 - n0) / h / scale_n - round_n).max(0.0)));
            }
            _ => ng_skipped += 1,
        }
    }

    // N' ≥ δ N² at interior records.
    let mut ineq_points = Vec::new();
    let mut ineq_skipped = 0;
    for [a, b, c] in interior_triples(series) {
        match (a.n, b.n, c.n) {
            (Some(n0), Some(n1), Some(n2)) if !(a.extinct || b.extinct || c.extinct) => {
                let ts = [a.t, b.t, c.t];
                let dn = central_first(ts, [n0, n1, n2]);
                let rhs = delta * n1 * n1;
                let scale = safe_scale((n1 * n1).max(dn.abs()));
                let h = (ts[1] - ts[0]).min(ts[2] - ts[1]);
                let round = rounding(n0.abs().max(n1.abs()).max(n2.abs()), h) / scale;
                ineq_points.push((b.t, ((rhs - dn) / scale - round).max(0.0)));
            }
            _ => ineq_skipped += 1,
        }
    }

    let mut out = vec![
        Verdict::from_violations("monotonicity.ng_nondecreasing", tol, &ng_points, ng_skipped),
        Verdict::from_violations("monotonicity.n_inequality", tol, &ineq_points, ineq_skipped),
    ];
    if delta >= 0.0 {
        out.push(Verdict::from_violations("monotonicity.n_nondecreasing", tol, &n_points, ng_skipped));
    }
    Ok(out)
}

/// Convexity of `log I` (`δ = 0`) or of `-δ⁻¹ I^{-δ/(q+1)}` (`δ ≠ 0`).
pub fn check_convexity(series: &FrequencySeries, tol: f64) -> Result<Verdict> {
    if series.len() < 3 {
        return Err(Error::InsufficientData(format!("convexity check needs >= 3 records, got {}", series.len())));
    }
    let ex = series.exponents;
    let delta = ex.delta();
    let transform = |i: f64| {
        if delta == 0.0 {
            i.ln()
        } else {
            -(i.powf(-delta / (ex.q + 1.0))) / delta
        }
    };
    let mut points = Vec::new();
    let mut skipped = 0;
    for [a, b, c] in interior_triples(series) {
        let defined = a.i > 0.0 && b.i > 0.0 && c.i > 0.0 && !(a.extinct || b.extinct || c.extinct);
        let (Some(n), Some(ng)) = (b.n, b.n_g) else {
            skipped += 1;
            continue;
        };
        if !defined {
            skipped += 1;
            continue;
        }
        let ts = [a.t, b.t, c.t];
        let f = [transform(a.i), transform(b.i), transform(c.i)];
        let second = central_second(ts, f);
        // f' is (q+1)N for δ = 0 and N_G otherwise
        let slope = if delta == 0.0 { (ex.q + 1.0) * n } else { ng };
        let scale = safe_scale(slope.abs() * n.abs());
        let h1 = ts[1] - ts[0];
        let h2 = ts[2] - ts[1];
        let round = rounding(f[0].abs().max(f[1].abs()).max(f[2].abs()), h1 * h2) / scale;
        points.push((b.t, (-second / scale - round).max(0.0)));
    }
    Ok(Verdict::from_violations("convexity", tol, &points, skipped))
}

/// `b₀ = min{1/(N(a)δ) + a, b}` for `N(a) < 0`, `δ < 0`.
pub fn extinction_lower_bound(n_a: f64, delta: f64, a: f64, b: f64) -> Result<f64> {
    if !(n_a < 0.0) {
        return Err(Error::Parameter(format!("N(a) must be negative, got {n_a}")));
    }
    if !(delta < 0.0) {
        return Err(Error::Parameter(format!("delta must be negative, got {delta}")));
    }
    Ok((1.0 / (n_a * delta) + a).min(b))
}

/// Measured extinction time against `b₀` for a `δ < 0` run started at the first
/// record. A run that never goes extinct satisfies the bound on its window.
/// The violation is `(b₀ - T_ext)/(b₀ - a)`.
pub fn check_extinction_time(series: &FrequencySeries, tol: f64) -> Result<Verdict> {
    let first = series.records.first().ok_or_else(|| Error::InsufficientData("empty series".into()))?;
    let last = series.records.last().map_or(first.t, |r| r.t);
    let n_a = first.n.ok_or_else(|| Error::Domain("I(a) must be positive".into()))?;
    let b0 = extinction_lower_bound(n_a, series.exponents.delta(), first.t, last)?;
    let measured = series.extinction_time.unwrap_or(f64::INFINITY);
    let span = safe_scale(b0 - first.t);
    let violation = ((b0 - measured) / span).max(0.0);
    Ok(Verdict {
        name: "extinction_bound".into(),
        passed: violation <= tol,
        worst_violation: violation,
        t: series.extinction_time.unwrap_or(last),
        tolerance: tol,
        skipped: 0,
        checked: 1,
    })
}

/// Lower bound on `I(t)` obtained by integrating the frequency inequality from `t = a`.
pub fn i_lower_bound(i_a: f64, n_a: f64, delta: f64, q: f64, elapsed: f64) -> f64 {
    if delta >= 0.0 {
        i_a * ((q + 1.0) * n_a * elapsed).exp()
    } else {
        i_a * (1.0 / (1.0 - delta * elapsed * n_a)).powf((q + 1.0) / delta)
    }
}

/// Checks `I(t) ≥ (1 - tol) · bound(t)` for records after `a_index`.
///
/// For `δ < 0` only records with `t < b₀` are compared; the rest are counted as skipped.
pub fn lower_bound_i(series: &FrequencySeries, a_index: usize, tol: f64) -> Result<Verdict> {
    let rec_a =
        series.records.get(a_index).ok_or_else(|| Error::InsufficientData(format!("no record at index {a_index}")))?;
    let n_a = rec_a.n.ok_or_else(|| Error::Domain("I(a) must be positive".into()))?;
    let ex = series.exponents;
    let delta = ex.delta();
    let horizon = if delta < 0.0 && n_a < 0.0 {
        extinction_lower_bound(n_a, delta, rec_a.t, f64::INFINITY)?
    } else {
        f64::INFINITY
    };
    let mut points = Vec::new();
    let mut skipped = 0;
    for r in &series.records[a_index + 1..] {
        if r.t >= horizon {
            skipped += 1;
            continue;
        }
        let bound = i_lower_bound(rec_a.i, n_a, delta, ex.q, r.t - rec_a.t);
        if !(bound > 0.0) {
            skipped += 1;
            continue;
        }
        points.push((r.t, (bound - r.i) / bound));
    }
    Ok(Verdict::from_violations("lower_bound_I", tol, &points, skipped))
}

/// Least-squares slope of `log I` against `log(t - a + 1)` over the final
/// decade, and the verdict `k̂ ≤ (q+1)/δ + tol`.
pub fn vanishing_order(series: &FrequencySeries, a: f64, tol: f64) -> Result<(f64, Verdict)> {
    let ex = series.exponents;
    let delta = ex.delta();
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("vanishing order needs delta > 0, got {delta}")));
    }
    let pts: Vec<(f64, f64)> =
        series.records.iter().filter(|r| r.t > a && r.i > 0.0).map(|r| ((r.t - a + 1.0).ln(), r.i.ln())).collect();
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => return Err(Error::InsufficientData("empty series".into())),
    };
    let cut = last - std::f64::consts::LN_10;
    if first > cut {
        return Err(Error::InsufficientData("horizon shorter than one decade".into()));
    }
    let window: Vec<(f64, f64)> = pts.into_iter().filter(|&(x, _)| x >= cut).collect();
    if window.len() < 2 {
        return Err(Error::InsufficientData("fewer than two records in the final decade".into()));
    }
    let slope = least_squares(&window).0;
    let k_hat = -slope;
    let bound = (ex.q + 1.0) / delta;
    let verdict = Verdict {
        name: "vanishing_order".into(),
        passed: k_hat - bound <= tol,
        worst_violation: k_hat - bound,
        t: series.records.last().map_or(f64::NAN, |r| r.t),
        tolerance: tol,
        skipped: 0,
        checked: window.len(),
    };
    Ok((k_hat, verdict))
}

/// Returns `(slope, intercept, residual sum of squares)`.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, rss)
}

/// Almost-monotonicity under a bounded perturbation:
/// `d/dt log I ≥ (q+1+C)N − (2q+3/2)C` and `N' ≥ pq/(q+1) C² (N − q − 1/2)`,
/// followed by the integrated lower bound on `I(b)`.
pub fn almost_monotonicity_check(series: &FrequencySeries, tol: f64) -> Result<Vec<Verdict>> {
    let pert = series
        .perturbation
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("series carries no perturbation metadata".into()))?;
    if series.len() < 3 {
        return Err(Error::InsufficientData("almost-monotonicity needs >= 3 records".into()));
    }
    let ex = series.exponents;
    let (p, q) = (ex.p, ex.q);
    let mut log_points = Vec::new();
    let mut n_points = Vec::new();
    let mut skipped = 0;
    for [a, b, c] in interior_triples(series) {
        let (Some(n0), Some(n1), Some(n2)) = (a.n, b.n, c.n) else {
            skipped += 1;
            continue;
        };
        if a.extinct || b.extinct || c.extinct {
            skipped += 1;
            continue;
        }
        let ts = [a.t, b.t, c.t];
        let h = (ts[1] - ts[0]).min(ts[2] - ts[1]);
        let cb = pert.bound.eval(b.t);

        let f = [a.i.ln(), b.i.ln(), c.i.ln()];
        let dlog = central_first(ts, f);
        let rhs = (q + 1.0 + cb) * n1 - (2.0 * q + 1.5) * cb;
        let scale = safe_scale(((q + 1.0 + cb) * n1).abs() + (2.0 * q + 1.5) * cb);
        let round = rounding(f[0].abs().max(f[1].abs()).max(f[2].abs()), h) / scale;
        log_points.push((b.t, ((rhs - dlog) / scale - round).max(0.0)));

        let dn = central_first(ts, [n0, n1, n2]);
        let rhs_n = p * q / (q + 1.0) * cb * cb * (n1 - q - 0.5);
        let scale_n = safe_scale((n1 * n1).max(rhs_n.abs()));
        let round_n = rounding(n0.abs().max(n1.abs()).max(n2.abs()), h) / scale_n;
        n_points.push((b.t, ((rhs_n - dn) / scale_n - round_n).max(0.0)));
    }
    let mut out = vec![
        Verdict::from_violations("almost_monotonicity.log_i", tol, &log_points, skipped),
        Verdict::from_violations("almost_monotonicity.n", tol, &n_points, skipped),
    ];
    out.push(perturbed_endpoint_bound(series, tol)?);
    Ok(out)
}

/// `I(b) ≥ I(a) exp((b−a)(q+1+sup C)[exp(∫ pq/(q+1) C²)(N(a) − q − 1/2) − q − 1])`
/// with `a`, `b` the first and last defined records.
pub fn perturbed_endpoint_bound(series: &FrequencySeries, tol: f64) -> Result<Verdict> {
    let pert = series
        .perturbation
        .as_ref()
        .ok_or_else(|| Error::InsufficientData("series carries no perturbation metadata".into()))?;
    let defined: Vec<&FrequencyRecord> = series.records.iter().filter(|r| r.n.is_some() && !r.extinct).collect();
    let (first, last) = match (defined.first(), defined.last()) {
        (Some(f), Some(l)) if l.t > f.t => (*f, *l),
        _ => return Err(Error::InsufficientData("need two defined records".into())),
    };
    let ex = series.exponents;
    let (p, q) = (ex.p, ex.q);
    let times: Vec<f64> = defined.iter().map(|r| r.t).collect();
    let sup_c = times.iter().map(|&t| pert.bound.eval(t)).fold(0.0, f64::max);
    let int_c2: f64 = times
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (pert.bound.eval(w[0]).powi(2) + pert.bound.eval(w[1]).powi(2)))
        .sum();
    let n_a = first.n.unwrap_or(0.0);
    let growth = (p * q / (q + 1.0) * int_c2).exp();
    let exponent = (last.t - first.t) * (q + 1.0 + sup_c) * (growth * (n_a - q - 0.5) - q - 1.0);
    let bound = first.i * exponent.exp();
    let violation = if bound > 0.0 { (bound - last.i) / bound } else { 0.0 };
    Ok(Verdict {
        name: "almost_monotonicity.endpoint_bound".into(),
        passed: violation <= tol,
        worst_violation: violation,
        t: last.t,
        tolerance: tol,
        skipped: 0,
        checked: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{make_grid, DomainSpec, WeightSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn heat() -> Exponents {
        Exponents::new(2.0, 1.0).unwrap()
    }

    fn series_from(ex: Exponents, f: impl Fn(f64) -> (f64, f64), ts: &[f64]) -> FrequencySeries {
        let recs = ts.iter().map(|&t| {
            let (i, d) = f(t);
            FrequencyRecord::from_energies(t, i, d, ex)
        });
        FrequencySeries::from_records(ex, recs.collect()).unwrap()
    }

    #[test]
    fn energies_of_simple_fields() {
        let g = make_grid(&DomainSpec::interval(0.0, 1.0, 32), &WeightSpec::Zero).unwrap();
        let z = Field::zeros(32, 0.0);
        assert_eq!(energy_i(&z, &g, 2.0).unwrap(), 0.0);
        let r = frequency(&z, &g, heat()).unwrap();
        assert_eq!((r.i, r.d, r.n, r.n_g), (0.0, 0.0, None, None));
        let one = Field::from_fn(&g, 0.0, |_| 1.0).unwrap();
        assert_relative_eq!(energy_i(&one, &g, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(energy_i(&one.map(|x| -x).unwrap(), &g, 2.0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn eigenmode_dissipation_is_discrete_eigenvalue() {
        let cells = 64;
        let g = make_grid(&DomainSpec::interval(0.0, PI, cells), &WeightSpec::Zero).unwrap();
        let dx = g.dx();
        let lambda_h = 4.0 / (dx * dx) * (dx / 2.0).sin().powi(2);
        let u = Field::from_fn(&g, 0.0, f64::sin).unwrap();
        let r = frequency(&u, &g, heat()).unwrap();
        assert_relative_eq!(r.d, -lambda_h * r.i, max_relative = 1e-12);
        assert_relative_eq!(r.n.unwrap(), -lambda_h, max_relative = 1e-12);
        assert!((r.n.unwrap() + 1.0).abs() < dx * dx / 10.0);
    }

    #[test]
    fn dissipation_converges_second_order() {
        // u = x(1-x) vanishes at both ends: -∫(1-2x)² dx = -1/3
        let err = |cells: usize| {
            let g = make_grid(&DomainSpec::interval(0.0, 1.0, cells), &WeightSpec::Zero).unwrap();
            let u = Field::from_fn(&g, 0.0, |x| x * (1.0 - x)).unwrap();
            (dissipation_d(&u, &g, 2.0, 1.0).unwrap() + 1.0 / 3.0).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e1 < 1e-3);
        assert!((e1 / e2).log2() > 1.9, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn scaling_covariance() {
        let g = make_grid(&DomainSpec::interval(0.0, 1.0, 40), &WeightSpec::Quadratic { a: 0.25 }).unwrap();
        let u = Field::from_fn(&g, 0.0, |x| (3.0 * PI * x).sin() + 0.5 * (PI * x).sin()).unwrap();
        for &(p, q) in &[(2.0, 1.0), (3.0, 1.0), (2.0, 2.0), (1.5, 2.0), (2.0, 0.5)] {
            let ex = Exponents::new(p, q).unwrap();
            let c: f64 = 1.7;
            let r1 = frequency(&u, &g, ex).unwrap();
            let r2 = frequency(&u.map(|x| c * x).unwrap(), &g, ex).unwrap();
            assert_relative_eq!(r2.n.unwrap(), c.powf(ex.delta()) * r1.n.unwrap(), max_relative = 1e-12);
            if ex.delta() == 0.0 {
                assert_relative_eq!(r2.n_g.unwrap(), r1.n_g.unwrap(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn identity_check_on_exponential() {
        // I = e^{-2t}, D = -e^{-2t}: the heat eigenmode with λ = 1
        let ts: Vec<f64> = (0..200).map(|k| k as f64 * 1e-3).collect();
        let s = series_from(heat(), |t| ((-2.0 * t).exp(), -(-2.0 * t).exp()), &ts);
        let v = check_identity_i_prime(&s, 1e-6).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.worst_violation < 1e-6);
        // a wrong D is caught
        let bad = series_from(heat(), |t| ((-2.0 * t).exp(), -1.1 * (-2.0 * t).exp()), &ts);
        assert!(!check_identity_i_prime(&bad, 1e-6).unwrap().passed);
        assert!(check_identity_i_prime(&FrequencySeries::new(heat()), 1e-6).is_err());
    }

    #[test]
    fn identity_check_on_zero_run() {
        let ts = [0.0, 0.1, 0.2, 0.3];
        let s = series_from(heat(), |_| (0.0, 0.0), &ts);
        let v = check_identity_i_prime(&s, 1e-6).unwrap();
        assert!(v.passed);
        assert_eq!(v.worst_violation, 0.0);
    }

    #[test]
    fn barenblatt_like_series_passes_monotonicity_checks() {
        // n=1, p=2, q=2: I = c t^{-2/3}, N = -2/(9t); δ = 1
        let ex = Exponents::new(2.0, 2.0).unwrap();
        let ts: Vec<f64> = (0..400).map(|k| 1.0 + k as f64 * 2.5e-3).collect();
        let s = series_from(
            ex,
            |t| {
                let i = 3.0 * t.powf(-2.0 / 3.0);
                (i, -2.0 / (9.0 * t) * i)
            },
            &ts,
        );
        for v in check_monotonicity(&s, 1e-6).unwrap() {
            assert!(v.passed, "{v:?}");
        }
        assert!(check_convexity(&s, 1e-6).unwrap().passed);
        assert!(lower_bound_i(&s, 0, 1e-6).unwrap().passed);
    }

    #[test]
    fn decreasing_frequency_fails_monotonicity() {
        let ex = heat();
        let ts: Vec<f64> = (0..50).map(|k| k as f64 * 0.01).collect();
        // N = -1 - t decreasing
        let s = series_from(ex, |t| (1.0, -1.0 - t), &ts);
        let vs = check_monotonicity(&s, 1e-6).unwrap();
        assert!(vs.iter().any(|v| !v.passed));
    }

    #[test]
    fn extinction_bound_examples() {
        assert_relative_eq!(extinction_lower_bound(-2.0, -0.5, 0.0, 10.0).unwrap(), 1.0);
        assert_relative_eq!(extinction_lower_bound(-1.0, -1.0, 0.0, 0.5).unwrap(), 0.5);
        assert_relative_eq!(extinction_lower_bound(-10.0, -0.5, 1.0, 10.0).unwrap(), 1.2, max_relative = 1e-14);
        assert!(extinction_lower_bound(0.0, -0.5, 0.0, 1.0).is_err());
        assert!(extinction_lower_bound(-1.0, 0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn vanishing_order_of_power_law() {
        let ex = Exponents::new(2.0, 2.0).unwrap();
        let ts: Vec<f64> = (0..=60).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
        let s = series_from(
            ex,
            |t| {
                let i = t.powf(-2.0 / 3.0);
                (i, -2.0 / (9.0 * t) * i)
            },
            &ts,
        );
        let (k, v) = vanishing_order(&s, 0.0, 0.0).unwrap();
        assert!((k - 2.0 / 3.0).abs() < 0.01 * 2.0 / 3.0);
        assert!(v.passed);
        let heat_series = series_from(heat(), |t| ((-t).exp(), -(-t).exp()), &ts);
        assert!(vanishing_order(&heat_series, 0.0, 0.0).is_err());
        let short = series_from(ex, |t| (t.powf(-1.0), -1.0), &[1.0, 2.0, 3.0]);
        assert!(vanishing_order(&short, 0.0, 0.0).is_err());
    }

    #[test]
    fn central_difference_weights() {
        let t = [0.0, 0.1, 0.3];
        let f = t.map(|x: f64| x * x);
        assert_relative_eq!(central_first(t, f), 0.2, max_relative = 1e-12);
        assert_relative_eq!(central_second(t, f), 2.0, max_relative = 1e-12);
    }
}
