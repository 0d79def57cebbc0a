//! Self-similar (Barenblatt) solutions on `ℝⁿ` with `φ ≡ 0`.
//!
//! With `m = p/(p-1)`, `ξ = |x| t^{-1/β}` and `β = p + nδ`:
//!
//! * `δ > 0`: `u = t^{-n/β} (C - ϰ ξ^m)_+^γ`, compactly supported;
//! * `δ = 0`: `u = C t^{-n/p} exp(-ζ ξ^m)`;
//! * `δ < 0`: `u = t^{-n/β} (C + |ϰ| ξ^m)^γ` with `γ < 0`, valid for `δ > -p/n`.
//!
//! `I(t) = ω_n A t^{-nq/β}` where `ω_n` is the area of the unit sphere, so that
//! `ω_n ∫ r^{n-1}` is the volume integral; `A` is the profile integral.

use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::domain::{make_grid, signed_pow, sphere_area, DomainKind, DomainSpec, Field, Grid, WeightSpec};
use crate::error::{Error, Result};
use crate::operator::{apply_operator, OperatorConfig};
use crate::quadrature::{integrate, integrate_half_line, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `δ > 0`
    Slow,
    /// `δ = 0`
    Critical,
    /// `-p/n < δ < 0`
    Fast,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Slow => "slow",
            Regime::Critical => "critical",
            Regime::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarenblattParams {
    pub n: u32,
    pub p: f64,
    pub q: f64,
    /// Free profile constant `C > 0` (an amplitude in the critical case).
    pub c: f64,
    pub delta: f64,
    pub beta: f64,
    /// Profile exponent; zero in the critical case.
    pub gamma: f64,
    /// Signed profile coefficient; zero in the critical case.
    pub kappa: f64,
    /// Gaussian-type coefficient; zero unless critical.
    pub zeta: f64,
    /// Profile integral `A`, from its Beta/Gamma closed form.
    pub a: f64,
    pub omega: f64,
    pub regime: Regime,
}

/// Tolerance below which `|δ|` is treated as zero.
const CRITICAL_EPS: f64 = 1e-12;

pub fn barenblatt_params(n: u32, p: f64, q: f64, c: f64) -> Result<BarenblattParams> {
    if n == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(p > 1.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
        return Err(Error::Parameter(format!("need p > 1, q > 0; got p = {p}, q = {q}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!("profile constant must be positive, got {c}")));
    }
    let nf = n as f64;
    let delta = q * (p - 1.0) - 1.0;
    let beta_exp = p + nf * delta;
    if !(beta_exp > 0.0) || delta <= -p / nf {
        return Err(Error::Regime(format!("δ = {delta} must exceed -p/n = {}", -p / nf)));
    }
    let m = p / (p - 1.0);
    let omega = sphere_area(n);
    let regime = if delta.abs() < CRITICAL_EPS {
        Regime::Critical
    } else if delta > 0.0 {
        Regime::Slow
    } else {
        Regime::Fast
    };
    let mut bp = BarenblattParams {
        n,
        p,
        q,
        c,
        delta,
        beta: beta_exp,
        gamma: 0.0,
        kappa: 0.0,
        zeta: 0.0,
        a: 0.0,
        omega,
        regime,
    };
    match regime {
        Regime::Critical => {
            bp.beta = p;
            bp.zeta = (p - 1.0).powi(2) * p.powf(-p / (p - 1.0));
            let rate = p * bp.zeta / (p - 1.0);
            bp.a = c.powf(q + 1.0) * gamma(nf / m) / (m * rate.powf(nf / m));
        }
        Regime::Slow | Regime::Fast => {
            bp.gamma = (p - 1.0) / delta;
            bp.kappa = delta / (p * q) * beta_exp.powf(-1.0 / (p - 1.0));
            let e = bp.gamma * (q + 1.0);
            let pre = c.powf(e) * (c / bp.kappa.abs()).powf(nf / m) / m;
            bp.a = if regime == Regime::Slow { pre * beta(nf / m, e + 1.0) } else { pre * beta(nf / m, -e - nf / m) };
        }
    }
    if !(bp.a > 0.0 && bp.a.is_finite()) {
        return Err(Error::Regime(format!("profile integral is not finite: {}", bp.a)));
    }
    Ok(bp)
}

impl BarenblattParams {
    /// `p/(p-1)`
    pub fn profile_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// Self-similar profile `g(ξ)` with `u = t^{-n/β} g(|x| t^{-1/β})`.
    pub fn profile(&self, xi: f64) -> f64 {
        let m = self.profile_exponent();
        let s = xi.abs().powf(m);
        match self.regime {
            Regime::Critical => self.c * (-self.zeta * s).exp(),
            Regime::Slow => {
                let base = self.c - self.kappa * s;
                if base <= 0.0 {
                    0.0
                } else {
                    base.powf(self.gamma)
                }
            }
            Regime::Fast => (self.c - self.kappa * s).powf(self.gamma),
        }
    }

    /// Support radius `ξ₀ = (C/ϰ)^{(p-1)/p}` of the profile, `None` unless `δ > 0`.
    pub fn support_radius(&self) -> Option<f64> {
        (self.regime == Regime::Slow).then(|| (self.c / self.kappa).powf(1.0 / self.profile_exponent()))
    }

    /// Decay exponent `nq/β` of `I`.
    pub fn decay_rate(&self) -> f64 {
        self.n as f64 * self.q / self.beta
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive, got {t}")))
    }
}

/// `u(x, t)` at distance `|x|` (or radius `r`) from the origin.
pub fn barenblatt_eval(x_or_r: f64, t: f64, bp: &BarenblattParams) -> Result<f64> {
    check_time(t)?;
    let s = t.powf(1.0 / bp.beta);
    Ok(t.powf(-(bp.n as f64) / bp.beta) * bp.profile(x_or_r / s))
}

/// Samples the solution at time `t` on the cell centers of `grid` (absolute
/// position for intervals, radius for radial grids).
pub fn barenblatt_field(bp: &BarenblattParams, grid: &Grid, t: f64) -> Result<Field> {
    check_time(t)?;
    let values = grid.centers().iter().map(|&x| barenblatt_eval(x, t, bp)).collect::<Result<Vec<_>>>()?;
    Field::new(values, t)
}

/// `A` by adaptive quadrature of the profile, independent of the closed form.
pub fn barenblatt_a(bp: &BarenblattParams) -> Result<f64> {
    let cfg = QuadratureConfig { rel_tol: 1e-12, ..Default::default() };
    let nm1 = bp.n as i32 - 1;
    let e = bp.q + 1.0;
    let f = |xi: f64| bp.profile(xi).powf(e) * xi.powi(nm1);
    match bp.support_radius() {
        Some(r) => integrate(f, 0.0, r, &cfg),
        None => integrate_half_line(f, 0.0, profile_scale(bp), &cfg),
    }
}

/// `A` from the Beta/Gamma closed form.
pub fn barenblatt_a_closed(bp: &BarenblattParams) -> f64 {
    bp.a
}

/// Length scale of the profile in `ξ`.
fn profile_scale(bp: &BarenblattParams) -> f64 {
    let m = bp.profile_exponent();
    match bp.regime {
        Regime::Critical => 4.0 * (bp.p * bp.zeta / (bp.p - 1.0)).powf(-1.0 / m),
        _ => 4.0 * (bp.c / bp.kappa.abs()).powf(1.0 / m),
    }
}

/// Closed-form `I(t) = ω_n A t^{-nq/β}`.
pub fn barenblatt_i(t: f64, bp: &BarenblattParams) -> Result<f64> {
    check_time(t)?;
    Ok(bp.omega * bp.a * t.powf(-bp.decay_rate()))
}

/// Closed-form `N(t) = -nq/((q+1)(p+nδ)) / t`.
pub fn barenblatt_n(t: f64, bp: &BarenblattParams) -> Result<f64> {
    check_time(t)?;
    Ok(-bp.decay_rate() / (bp.q + 1.0) / t)
}

/// `I(t)` by quadrature of the sampled solution `ω_n ∫ u(r,t)^{q+1} r^{n-1} dr`.
pub fn barenblatt_i_quadrature(t: f64, bp: &BarenblattParams) -> Result<f64> {
    check_time(t)?;
    let cfg = QuadratureConfig { rel_tol: 1e-12, ..Default::default() };
    let nm1 = bp.n as i32 - 1;
    let e = bp.q + 1.0;
    let f = |r: f64| barenblatt_eval(r, t, bp).map(|u| u.powf(e) * r.powi(nm1)).unwrap_or(f64::NAN);
    let spread = t.powf(1.0 / bp.beta);
    let integral = match bp.support_radius() {
        Some(r0) => integrate(f, 0.0, r0 * spread, &cfg)?,
        None => integrate_half_line(f, 0.0, profile_scale(bp) * spread, &cfg)?,
    };
    Ok(bp.omega * integral)
}

/// Smallest radius (found by doubling) such that the part of `I(t)` outside it
/// is below `tail_rel · I(t)`; the support radius when `δ > 0`.
pub fn truncation_radius(bp: &BarenblattParams, t: f64, tail_rel: f64) -> Result<f64> {
    check_time(t)?;
    let spread = t.powf(1.0 / bp.beta);
    if let Some(r0) = bp.support_radius() {
        return Ok(r0 * spread);
    }
    let total = barenblatt_i(t, bp)?;
    let cfg = QuadratureConfig { rel_tol: 1e-8, ..Default::default() };
    let nm1 = bp.n as i32 - 1;
    let e = bp.q + 1.0;
    let f = |r: f64| barenblatt_eval(r, t, bp).map(|u| u.powf(e) * r.powi(nm1)).unwrap_or(f64::NAN);
    let mut r = profile_scale(bp) * spread / 4.0;
    for _ in 0..200 {
        let tail = bp.omega * integrate_half_line(f, r, r, &cfg)?;
        if tail <= tail_rel * total {
            return Ok(r);
        }
        r *= 1.25;
    }
    Err(Error::Regime(format!("no truncation radius found for tail {tail_rel:e}")))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// Max-norm of `∂ₜu - 𝓛_h u^q` on admissible cells at the base resolution.
    pub interior_norm: f64,
    /// Same norm after doubling the cell count.
    pub refined_norm: f64,
    /// `log2(interior_norm / refined_norm)`.
    pub order_estimate: f64,
}

/// Cells within this many of the free boundary or the outer truncation edge are excluded.
const RESIDUAL_MARGIN: f64 = 3.0;

/// PDE residual of the exact solution under the discrete operator on `domain`
/// (`φ ≡ 0`), with an order estimate from one refinement.
pub fn pde_residual(bp: &BarenblattParams, domain: &DomainSpec, t: f64) -> Result<ResidualReport> {
    check_time(t)?;
    if domain.dim() != bp.n {
        return Err(Error::Parameter(format!("domain dimension {} differs from n = {}", domain.dim(), bp.n)));
    }
    let coarse = residual_norm(bp, domain, t)?;
    let fine_domain = DomainSpec { kind: domain.kind.clone(), cells: domain.cells * 2 };
    let fine = residual_norm(bp, &fine_domain, t)?;
    Ok(ResidualReport { interior_norm: coarse, refined_norm: fine, order_estimate: (coarse / fine).log2() })
}

fn residual_norm(bp: &BarenblattParams, domain: &DomainSpec, t: f64) -> Result<f64> {
    let grid = make_grid(domain, &WeightSpec::Zero)?;
    let u = barenblatt_field(bp, &grid, t)?;
    let v = u.map(|x| signed_pow(x, bp.q))?;
    let lv = apply_operator(&v, &grid, &OperatorConfig::exact(bp.p)?)?;
    let h = 1e-5 * t;
    let dx = grid.dx();
    let margin = RESIDUAL_MARGIN * dx;
    let (lo, hi) = match domain.kind {
        DomainKind::Interval { left, right } => (Some(left), right),
        DomainKind::Ball { radius, .. } => (None, radius),
        DomainKind::WholeSpace { r_max, .. } => (None, r_max),
    };
    let front = bp.support_radius().map(|r0| r0 * t.powf(1.0 / bp.beta));
    let mut worst: f64 = 0.0;
    for (i, &x) in grid.centers().iter().enumerate() {
        if hi - x <= margin || lo.is_some_and(|l| x - l <= margin) {
            continue;
        }
        if front.is_some_and(|rf| (x.abs() - rf).abs() <= margin) {
            continue;
        }
        let ut = (barenblatt_eval(x, t + h, bp)? - barenblatt_eval(x, t - h, bp)?) / (2.0 * h);
        worst = worst.max((ut - lv.values()[i]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn constants_match_direct_evaluation() {
        let bp = barenblatt_params(1, 2.0, 2.0, 1.0).unwrap();
        assert_eq!(bp.regime, Regime::Slow);
        assert_relative_eq!(bp.beta, 3.0);
        assert_relative_eq!(bp.gamma, 1.0);
        assert_relative_eq!(bp.kappa, 1.0 / 12.0, max_relative = 1e-15);

        let heat = barenblatt_params(1, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(heat.regime, Regime::Critical);
        assert_relative_eq!(heat.zeta, 0.25);

        let p3 = barenblatt_params(1, 3.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(p3.beta, 4.0);
        assert_relative_eq!(p3.gamma, 2.0);
        assert_relative_eq!(p3.kappa, 1.0 / 6.0, max_relative = 1e-15);
    }

    #[test]
    fn fast_regime_window() {
        let bp = barenblatt_params(1, 2.0, 0.5, 1.0).unwrap();
        assert_eq!(bp.regime, Regime::Fast);
        assert!(bp.gamma < 0.0 && bp.kappa < 0.0);
        // δ = -1/2 against -p/n = -2/3 for n = 3: allowed; n = 4 gives -1/2: rejected
        assert!(barenblatt_params(3, 2.0, 0.5, 1.0).is_ok());
        assert!(matches!(barenblatt_params(4, 2.0, 0.5, 1.0), Err(Error::Regime(_))));
        assert!(matches!(barenblatt_params(5, 2.0, 0.25, 1.0), Err(Error::Regime(_))));
    }

    #[test]
    fn eval_examples() {
        let heat = barenblatt_params(1, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(barenblatt_eval(0.0, 1.0, &heat).unwrap(), 1.0);
        let x = 0.7;
        let t = 1.3;
        assert_relative_eq!(
            barenblatt_eval(x, t, &heat).unwrap(),
            t.powf(-0.5) * (-x * x / (4.0 * t)).exp(),
            max_relative = 1e-14
        );
        let pme = barenblatt_params(1, 2.0, 2.0, 1.0).unwrap();
        let r0 = pme.support_radius().unwrap();
        assert_relative_eq!(r0, 12f64.sqrt(), max_relative = 1e-14);
        assert_eq!(barenblatt_eval(r0 * 2f64.powf(1.0 / 3.0) * (1.0 + 1e-12), 2.0, &pme).unwrap(), 0.0);
        assert_eq!(barenblatt_eval(10.0, 1.0, &pme).unwrap(), 0.0);
        assert!(barenblatt_eval(3.0, 1.0, &pme).unwrap() > 0.0);
        assert!(matches!(barenblatt_eval(0.0, 0.0, &pme), Err(Error::Domain(_))));
    }

    #[test]
    fn profile_integral_closed_form_and_quadrature() {
        let heat = barenblatt_params(1, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(heat.a, (PI / 2.0).sqrt(), max_relative = 1e-13);
        assert_relative_eq!(barenblatt_a(&heat).unwrap(), (PI / 2.0).sqrt(), max_relative = 1e-11);

        let pme = barenblatt_params(1, 2.0, 2.0, 1.0).unwrap();
        // ∫_0^{√12} (1 - ξ²/12)³ dξ = √12 · 16/35
        let exact = 12f64.sqrt() * 16.0 / 35.0;
        assert_relative_eq!(pme.a, exact, max_relative = 1e-12);
        assert_relative_eq!(barenblatt_a(&pme).unwrap(), exact, max_relative = 1e-10);

        for (n, p, q) in [(1, 2.0, 0.5), (2, 3.0, 0.4), (3, 1.5, 3.0), (2, 2.5, 2.0 / 3.0)] {
            let bp = barenblatt_params(n, p, q, 1.3).unwrap();
            assert_relative_eq!(barenblatt_a(&bp).unwrap(), bp.a, max_relative = 1e-9);
        }
    }

    #[test]
    fn energy_and_frequency_closed_forms() {
        let heat = barenblatt_params(1, 2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(barenblatt_n(2.0, &heat).unwrap(), -0.125);
        let b = barenblatt_params(2, 2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(barenblatt_n(1.0, &b).unwrap(), -1.0 / 3.0, max_relative = 1e-15);
        let pme = barenblatt_params(1, 2.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(barenblatt_n(1.0, &pme).unwrap(), -2.0 / 9.0, max_relative = 1e-15);
        for bp in [heat, b, pme] {
            let ratio = barenblatt_i(2.0, &bp).unwrap() / barenblatt_i(1.0, &bp).unwrap();
            assert_relative_eq!(ratio, 2f64.powf(-bp.decay_rate()), max_relative = 1e-14);
            for t in [0.5, 1.0, 2.0] {
                let qi = barenblatt_i_quadrature(t, &bp).unwrap();
                assert_relative_eq!(qi, barenblatt_i(t, &bp).unwrap(), max_relative = 1e-9);
            }
        }
        assert!(barenblatt_i(-1.0, &pme).is_err());
    }

    #[test]
    fn frequency_inequality_slack() {
        // N' - δN² = k/t² (1 - δk) with k = nq/((q+1)β) stays non-negative
        for (n, p, q) in [(1, 2.0, 2.0), (2, 2.0, 2.0), (1, 3.0, 1.0), (1, 2.0, 0.5), (2, 1.5, 1.0)] {
            let bp = barenblatt_params(n, p, q, 1.0).unwrap();
            let k = bp.decay_rate() / (q + 1.0);
            assert!(1.0 - bp.delta * k > 0.0);
            let t = 1.7;
            let h = 1e-4;
            let dn = (barenblatt_n(t + h, &bp).unwrap() - barenblatt_n(t - h, &bp).unwrap()) / (2.0 * h);
            let nn = barenblatt_n(t, &bp).unwrap();
            assert_relative_eq!(dn - bp.delta * nn * nn, k / (t * t) * (1.0 - bp.delta * k), max_relative = 1e-6);
        }
    }

    #[test]
    fn heat_kernel_residual_is_second_order() {
        let bp = barenblatt_params(1, 2.0, 1.0, 1.0).unwrap();
        let rep = pde_residual(&bp, &DomainSpec::whole_space(1, 12.0, 200), 1.0).unwrap();
        assert!(rep.order_estimate > 1.9, "{rep:?}");
    }

    #[test]
    fn slow_residual_converges_away_from_front() {
        let bp = barenblatt_params(1, 2.0, 2.0, 1.0).unwrap();
        let rep = pde_residual(&bp, &DomainSpec::interval(-5.0, 5.0, 200), 1.0).unwrap();
        assert!(rep.order_estimate >= 1.0, "{rep:?}");
    }

    #[test]
    fn fast_residual_decreases() {
        let bp = barenblatt_params(1, 2.0, 0.5, 1.0).unwrap();
        let r = truncation_radius(&bp, 1.0, 1e-10).unwrap();
        let rep = pde_residual(&bp, &DomainSpec::whole_space(1, r, 400), 1.0).unwrap();
        assert!(rep.refined_norm < rep.interior_norm, "{rep:?}");
    }

    #[test]
    fn radial_residual_in_two_dimensions() {
        let bp = barenblatt_params(2, 2.0, 1.0, 1.0).unwrap();
        let rep = pde_residual(&bp, &DomainSpec::whole_space(2, 10.0, 160), 1.0).unwrap();
        assert!(rep.order_estimate > 1.5, "{rep:?}");
    }
}
