//! Time integration of the semi-discrete system `du/dt = 𝓛_h(u^q) + f`.
//!
//! Explicit Euler and classical RK4 are used for diagnostics-grade runs,
//! implicit Euler with a damped Newton solve on the tridiagonal Jacobian for
//! stiff runs. The optional forcing is `f = c(t) u`.

use crate::diagnostics::{dissipation_slice, energy_i_slice, Exponents, FrequencyRecord, FrequencySeries};
use crate::domain::{signed_pow, Boundary, Field, Grid, ProblemParams};
use crate::error::{Error, Result};
use crate::operator::{apply_into, gradient_into, operator_jacobian, OperatorConfig, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    ExplicitEuler,
    Rk4,
    ImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// `min(stable_dt, dt_max)` for explicit schemes, `dt_max` for implicit Euler.
    Adaptive {
        dt_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    pub max_iter: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub damping_min: f64,
    /// Relative gradient regularization used only in the Jacobian.
    pub jacobian_eps: f64,
    pub max_halvings: u32,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iter: 50,
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            damping_min: 1.0 / 1024.0,
            jacobian_eps: 1e-8,
            max_halvings: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub step: TimeStep,
    pub cfl_safety: f64,
    pub newton: NewtonConfig,
    /// Floor on `|u|` in frozen `|u|^{q-1}` coefficients.
    pub u_floor: f64,
    /// Floor on `|∇v|` in frozen `|∇v|^{p-2}` coefficients.
    pub g_floor: f64,
    /// Flux regularization `ε` (zero by default).
    pub eps_reg: f64,
    /// Stop once `I < extinction_ratio · I(a)`.
    pub extinction_ratio: f64,
    pub max_steps: usize,
}

impl SchemeConfig {
    pub fn rk4(step: TimeStep) -> Self {
        Self {
            kind: SchemeKind::Rk4,
            step,
            cfl_safety: 0.9,
            newton: NewtonConfig::default(),
            u_floor: 1e-12,
            g_floor: 1e-12,
            eps_reg: 0.0,
            extinction_ratio: 1e-12,
            max_steps: 50_000_000,
        }
    }

    pub fn explicit_euler(step: TimeStep) -> Self {
        Self { kind: SchemeKind::ExplicitEuler, cfl_safety: 0.5, ..Self::rk4(step) }
    }

    pub fn implicit_euler(step: TimeStep) -> Self {
        Self { kind: SchemeKind::ImplicitEuler, ..Self::rk4(step) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::Parameter(format!("fixed dt must be positive, got {dt}")))
            }
            TimeStep::Adaptive { dt_max } if !(dt_max > 0.0) => {
                return Err(Error::Parameter(format!("dt_max must be positive, got {dt_max}")))
            }
            _ => {}
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.5) {
            return Err(Error::Parameter(format!("cfl_safety out of range: {}", self.cfl_safety)));
        }
        let n = &self.newton;
        if !(n.abs_tol > 0.0 && n.rel_tol > 0.0 && n.damping_min > 0.0 && n.max_iter > 0) {
            return Err(Error::Parameter("newton tolerances must be positive".into()));
        }
        if !(self.u_floor > 0.0 && self.g_floor > 0.0 && self.eps_reg >= 0.0) {
            return Err(Error::Parameter("floors must be positive and eps_reg non-negative".into()));
        }
        Ok(())
    }
}

/// A scalar function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn {
    Constant(f64),
    /// `offset + slope · t`
    Affine {
        offset: f64,
        slope: f64,
    },
    /// `amplitude · sin(frequency · t + phase)`
    Sine {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl ScalarFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ScalarFn::Constant(c) => c,
            ScalarFn::Affine { offset, slope } => offset + slope * t,
            ScalarFn::Sine { amplitude, frequency, phase } => amplitude * (frequency * t + phase).sin(),
        }
    }
}

/// Forcing `f = c(t) u` with a declared bound `|c(t)| ≤ C(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub c: ScalarFn,
    pub bound: ScalarFn,
}

impl PerturbationSpec {
    pub fn constant(c: f64, bound: f64) -> Self {
        Self { c: ScalarFn::Constant(c), bound: ScalarFn::Constant(bound) }
    }

    /// Asserts `|f_i| ≤ C(t)(|u_i| + |∇u^q|^{p/(q+1)})` (`q ≥ 1`) or
    /// `|f_i| ≤ C(t)(|u_i| + |u_i|^{1/2}|∇u^q|^{p/(2q+2)})` (`q < 1`) at every cell,
    /// with `|∇u^q|` the larger of the two adjacent face gradients.
    pub fn check_bound(&self, u: &[f64], t: f64, grid: &Grid, p: f64, q: f64) -> Result<()> {
        let c = self.c.eval(t);
        let bound = self.bound.eval(t);
        if !(bound >= 0.0) {
            return Err(Error::Perturbation { t, detail: format!("bound C(t) = {bound} is negative") });
        }
        let v: Vec<f64> = u.iter().map(|&x| signed_pow(x, q)).collect();
        let mut grad = vec![0.0; u.len() + 1];
        gradient_into(&v, grid, &mut grad);
        for (i, &ui) in u.iter().enumerate() {
            let g = grad[i].abs().max(grad[i + 1].abs());
            let allowed = if q >= 1.0 {
                bound * (ui.abs() + g.powf(p / (q + 1.0)))
            } else {
                bound * (ui.abs() + ui.abs().sqrt() * g.powf(p / (2.0 * q + 2.0)))
            };
            let f = (c * ui).abs();
            if f > allowed * (1.0 + 1e-14) {
                return Err(Error::Perturbation { t, detail: format!("cell {i}: |f| = {f:e} > {allowed:e}") });
            }
        }
        Ok(())
    }
}

/// Snapshots of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ProblemParams,
    pub snapshots: Vec<Field>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&Field> {
        self.snapshots.last()
    }
}

/// Right-hand side evaluator with reusable buffers.
struct Rhs<'a> {
    grid: &'a Grid,
    cfg: OperatorConfig,
    q: f64,
    pert: Option<&'a PerturbationSpec>,
    ws: Workspace,
    v: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(params: &ProblemParams, grid: &'a Grid, eps: f64, pert: Option<&'a PerturbationSpec>) -> Result<Self> {
        Ok(Self {
            grid,
            cfg: OperatorConfig::new(params.p(), eps)?,
            q: params.q(),
            pert,
            ws: Workspace::new(grid.len()),
            v: vec![0.0; grid.len()],
        })
    }

    /// `𝓛_h v` for an already-powered `v`.
    fn apply(&mut self, v: &[f64], out: &mut [f64]) {
        apply_into(v, self.grid, &self.cfg, &mut self.ws, out);
    }

    fn eval(&mut self, u: &[f64], t: f64, out: &mut [f64]) {
        for (v, &x) in self.v.iter_mut().zip(u) {
            *v = signed_pow(x, self.q);
        }
        apply_into(&self.v, self.grid, &self.cfg, &mut self.ws, out);
        if let Some(pert) = self.pert {
            let c = pert.c.eval(t);
            for (o, &x) in out.iter_mut().zip(u) {
                *o += c * x;
            }
        }
    }
}

/// Explicit stability estimate from the frozen-coefficient linearization of
/// `𝓛_h u^q`: `cfl · 2 / max_i ρ_i`, where `ρ_i` is the Gershgorin radius of row `i`
/// of `∂(𝓛_h u^q)/∂u` with `|u|` and `|∇v|` floored.
///
/// On a uniform interval this is about `cfl · Δx² / (2 max q(p-1)|u|^{q-1}|∇v|^{p-2})`,
/// which for the heat equation is the classical `cfl · Δx²/2`.
pub fn stable_dt(u: &Field, params: &ProblemParams, grid: &Grid, cfg: &SchemeConfig) -> Result<f64> {
    grid.check_len(u.len())?;
    Ok(stable_dt_slice(u.values(), params.p(), params.q(), grid, cfg))
}

fn stable_dt_slice(u: &[f64], p: f64, q: f64, grid: &Grid, cfg: &SchemeConfig) -> f64 {
    let n = u.len();
    let v: Vec<f64> = u.iter().map(|&x| signed_pow(x, q)).collect();
    let mut grad = vec![0.0; n + 1];
    gradient_into(&v, grid, &mut grad);
    let dx = grid.dx();
    let wf = grid.face_weights();
    let hf = grid.face_lengths();
    let wc = grid.cell_weights();
    // frozen face conductance ρ_f (p-1)|g_f|^{p-2} / dx
    let cond: Vec<f64> =
        (0..=n).map(|f| wf[f] / hf[f] * (p - 1.0) * grad[f].abs().max(cfg.g_floor).powf(p - 2.0) / dx).collect();
    let coef = |x: f64| q * x.abs().max(cfg.u_floor).powf(q - 1.0);
    let edge = |b: Boundary| match b {
        Boundary::Dirichlet => 2.0,
        Boundary::Symmetry => 0.0,
    };
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let left = if i == 0 { edge(grid.left_boundary()) } else { 1.0 } * cond[i];
        let right = if i + 1 == n { edge(grid.right_boundary()) } else { 1.0 } * cond[i + 1];
        let mut rho = (left + right) * coef(u[i]);
        if i > 0 {
            rho += cond[i] * coef(u[i - 1]);
        }
        if i + 1 < n {
            rho += cond[i + 1] * coef(u[i + 1]);
        }
        worst = worst.max(rho / wc[i]);
    }
    if worst > 0.0 {
        cfg.cfl_safety * 2.0 / worst
    } else {
        f64::INFINITY
    }
}

fn check_finite(u: &[f64], t: f64) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Unstable { t })
    }
}

/// One explicit Euler or RK4 step from `u` (at `u.time()`).
pub fn step_explicit(
    u: &Field,
    dt: f64,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    pert: Option<&PerturbationSpec>,
) -> Result<Field> {
    grid.check_len(u.len())?;
    let mut rhs = Rhs::new(params, grid, cfg.eps_reg, pert)?;
    let mut out = u.values().to_vec();
    explicit_in_place(&mut out, u.time(), dt, cfg.kind, &mut rhs)?;
    Field::new(out, u.time() + dt).map_err(|_| Error::Unstable { t: u.time() + dt })
}

fn explicit_in_place(u: &mut [f64], t: f64, dt: f64, kind: SchemeKind, rhs: &mut Rhs<'_>) -> Result<()> {
    let n = u.len();
    match kind {
        SchemeKind::ExplicitEuler => {
            let mut k = vec![0.0; n];
            rhs.eval(u, t, &mut k);
            for (x, k) in u.iter_mut().zip(&k) {
                *x += dt * k;
            }
        }
        SchemeKind::Rk4 => {
            let mut k1 = vec![0.0; n];
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            let mut tmp = vec![0.0; n];
            rhs.eval(u, t, &mut k1);
            for i in 0..n {
                tmp[i] = u[i] + 0.5 * dt * k1[i];
            }
            rhs.eval(&tmp, t + 0.5 * dt, &mut k2);
            for i in 0..n {
                tmp[i] = u[i] + 0.5 * dt * k2[i];
            }
            rhs.eval(&tmp, t + 0.5 * dt, &mut k3);
            for i in 0..n {
                tmp[i] = u[i] + dt * k3[i];
            }
            rhs.eval(&tmp, t + dt, &mut k4);
            for i in 0..n {
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        SchemeKind::ImplicitEuler => {
            return Err(Error::Parameter("implicit scheme passed to explicit stepper".into()));
        }
    }
    check_finite(u, t + dt)
}

/// One implicit Euler step: solves `U − dt·𝓛_h(U^q) = u + dt·f(u)` by damped Newton,
/// halving `dt` (and taking two half steps) on failure.
pub fn step_implicit(
    u: &Field,
    dt: f64,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    pert: Option<&PerturbationSpec>,
) -> Result<Field> {
    grid.check_len(u.len())?;
    let mut rhs = Rhs::new(params, grid, cfg.eps_reg, pert)?;
    let out = implicit_with_halving(u.values(), u.time(), dt, params, grid, cfg, &mut rhs, 0)?;
    Field::new(out, u.time() + dt)
}

#[allow(clippy::too_many_arguments)]
fn implicit_with_halving(
    u: &[f64],
    t: f64,
    dt: f64,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    rhs: &mut Rhs<'_>,
    depth: u32,
) -> Result<Vec<f64>> {
    match newton_solve(u, t, dt, params, grid, cfg, rhs) {
        Ok(x) => Ok(x),
        Err(e) if depth >= cfg.newton.max_halvings => Err(e),
        Err(_) => {
            let half = 0.5 * dt;
            let mid = implicit_with_halving(u, t, half, params, grid, cfg, rhs, depth + 1)?;
            implicit_with_halving(&mid, t + half, half, params, grid, cfg, rhs, depth + 1)
        }
    }
}

/// Damped Newton for `U − dt·𝓛_h(U^q) = b`.
///
/// For `q ≥ 1` the unknown is `U`; for `q < 1` it is `W = U^q`, so that the
/// map `W ↦ |W|^{1/q}` stays differentiable through sign changes.
fn newton_solve(
    u: &[f64],
    t: f64,
    dt: f64,
    params: &ProblemParams,
    grid: &Grid,
    cfg: &SchemeConfig,
    rhs: &mut Rhs<'_>,
) -> Result<Vec<f64>> {
    let n = u.len();
    let q = params.q();
    let p = params.p();
    let nc = cfg.newton;
    let in_power = q < 1.0;
    let to_u = |y: f64| if in_power { signed_pow(y, 1.0 / q) } else { y };
    let to_v = |y: f64| if in_power { y } else { signed_pow(y, q) };

    // right-hand side u + dt f(u); the forcing is evaluated at the old state
    let mut b = u.to_vec();
    if let Some(pert) = rhs.pert {
        let c = pert.c.eval(t);
        for (bi, &x) in b.iter_mut().zip(u) {
            *bi += dt * c * x;
        }
    }
    let saved = rhs.pert.take();
    let mut v = vec![0.0; n];
    let mut lv = vec![0.0; n];
    // the residual is accepted relative to the size of its terms, so that
    // rounding in dt·𝓛_h(U^q) does not stall convergence when |U^q| ≫ |U|
    let term_scale = std::cell::Cell::new(0.0f64);
    let mut residual = |y: &[f64], rhs: &mut Rhs<'_>, out: &mut Vec<f64>| {
        for (vi, &yi) in v.iter_mut().zip(y) {
            *vi = to_v(yi);
        }
        rhs.apply(&v, &mut lv);
        let mut norm = 0.0f64;
        for i in 0..n {
            let ui = to_u(y[i]);
            out[i] = ui - dt * lv[i] - b[i];
            norm = norm.max(out[i].abs());
            term_scale.set(term_scale.get().max(ui.abs() + dt * lv[i].abs() + b[i].abs()));
        }
        norm
    };
    let converged = |norm: f64| norm <= nc.abs_tol + nc.rel_tol * term_scale.get();

    let mut y: Vec<f64> = u.iter().map(|&x| if in_power { signed_pow(x, q) } else { x }).collect();
    let mut r = vec![0.0; n];
    let mut norm = residual(&y, rhs, &mut r);
    let mut trial = vec![0.0; n];
    let mut r_trial = vec![0.0; n];
    let mut done = converged(norm);
    for _ in 0..nc.max_iter {
        if done {
            break;
        }
        let vy: Vec<f64> = y.iter().map(|&yi| to_v(yi)).collect();
        let vscale = vy.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let eps = nc.jacobian_eps * vscale / grid.dx();
        let mut jac = operator_jacobian(&vy, grid, p, eps);
        // J = diag(du/dy) − dt · L'(v) · diag(dv/dy)
        let (dudy, dvdy): (Vec<f64>, Vec<f64>) = y
            .iter()
            .map(|&yi| {
                if in_power {
                    (yi.abs().powf(1.0 / q - 1.0) / q, 1.0)
                } else {
                    (1.0, q * yi.abs().max(cfg.u_floor).powf(q - 1.0))
                }
            })
            .unzip();
        for i in 0..n {
            jac.diag[i] = dudy[i] - dt * jac.diag[i] * dvdy[i];
            if i > 0 {
                jac.lower[i] = -dt * jac.lower[i] * dvdy[i - 1];
            }
            if i + 1 < n {
                jac.upper[i] = -dt * jac.upper[i] * dvdy[i + 1];
            }
        }
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let Some(step) = jac.solve(&neg) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= nc.damping_min {
            for i in 0..n {
                trial[i] = y[i] + lambda * step[i];
            }
            let tn = residual(&trial, rhs, &mut r_trial);
            if tn.is_finite() && tn < (1.0 - 1e-4 * lambda) * norm {
                std::mem::swap(&mut y, &mut trial);
                std::mem::swap(&mut r, &mut r_trial);
                norm = tn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
        done = converged(norm);
    }
    rhs.pert = saved;
    if done {
        Ok(y.into_iter().map(to_u).collect())
    } else {
        Err(Error::Newton { t, dt, residual: norm })
    }
}

/// Evolves `u0` over `t_span`, recording a [`FrequencyRecord`] after every
/// accepted step and a snapshot every `record_every` steps (plus the last one).
///
/// Stops early once `I < extinction_ratio · I(a)`, flagging the extinction time.
pub fn evolve(
    u0: &Field,
    t_span: (f64, f64),
    params: &ProblemParams,
    grid: &Grid,
    scheme: &SchemeConfig,
    pert: Option<&PerturbationSpec>,
    record_every: usize,
) -> Result<(Trajectory, FrequencySeries)> {
    scheme.validate()?;
    grid.check_len(u0.len())?;
    let (a, b) = t_span;
    if !(b > a) {
        return Err(Error::Parameter(format!("time span must be increasing, got ({a}, {b})")));
    }
    let record_every = record_every.max(1);
    let ex = Exponents::new(params.p(), params.q())?;
    let (p, q) = (ex.p, ex.q);

    let mut u = u0.values().to_vec();
    let mut grad = vec![0.0; grid.len() + 1];
    let record = |u: &[f64], t: f64, grad: &mut [f64]| {
        FrequencyRecord::from_energies(t, energy_i_slice(u, grid, q), dissipation_slice(u, grid, p, q, grad), ex)
    };

    let mut series = FrequencySeries::new(ex);
    series.perturbation = pert.copied();
    let first = record(&u, a, &mut grad);
    let i_a = first.i;
    series.records.push(first);
    let mut snapshots = vec![Field::new(u.clone(), a)?];

    let mut rhs = Rhs::new(params, grid, scheme.eps_reg, pert)?;
    let mut t = a;
    let mut steps = 0usize;
    while t < b {
        if steps >= scheme.max_steps {
            return Err(Error::Parameter(format!("step limit {} reached at t = {t}", scheme.max_steps)));
        }
        if let Some(pert) = pert {
            pert.check_bound(&u, t, grid, p, q)?;
        }
        let mut dt = match scheme.step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Adaptive { dt_max } => match scheme.kind {
                SchemeKind::ImplicitEuler => dt_max,
                _ => stable_dt_slice(&u, p, q, grid, scheme).min(dt_max),
            },
        };
        let mut t_next = match scheme.step {
            TimeStep::Fixed(h) => a + (steps + 1) as f64 * h,
            TimeStep::Adaptive { .. } => t + dt,
        };
        if t_next >= b || (b - t_next) < 1e-9 * dt {
            t_next = b;
        }
        dt = t_next - t;
        match scheme.kind {
            SchemeKind::ImplicitEuler => {
                u = implicit_with_halving(&u, t, dt, params, grid, scheme, &mut rhs, 0)?;
            }
            kind => explicit_in_place(&mut u, t, dt, kind, &mut rhs)?,
        }
        t = t_next;
        steps += 1;
        let mut rec = record(&u, t, &mut grad);
        let extinct = i_a > 0.0 && rec.i < scheme.extinction_ratio * i_a;
        rec.extinct = extinct;
        series.records.push(rec);
        if extinct {
            series.extinction_time = Some(t);
            snapshots.push(Field::new(u.clone(), t)?);
            break;
        }
        if steps.is_multiple_of(record_every) || t >= b {
            snapshots.push(Field::new(u.clone(), t)?);
        }
    }
    Ok((Trajectory { params: params.clone(), snapshots }, series))
}
