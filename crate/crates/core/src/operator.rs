//! Summation-by-parts discretization of the weighted p-Laplacian
//! `𝓛v = e^{φ} div(e^{-φ} |∇v|^{p-2} ∇v)`.
//!
//! Gradients live on faces, fluxes are weighted by the face density
//! `w_f / h_f`, and the divergence is divided by the cell weight. With these
//! choices the discrete duality
//!
//! ```text
//! Σ_i a_i (𝓛_h b)_i w_i = -Σ_f (∂a)_f · flux((∂b)_f) · w_f
//! ```
//!
//! holds for every pair of cell fields, so the energy identities of the
//! continuous flow carry over exactly to the semi-discrete system.

use crate::domain::{signed_pow, Boundary, Field, Grid};
use crate::error::{Error, Result};

/// Values on all `len() + 1` faces of a grid, boundary faces included.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    values: Vec<f64>,
}

impl FaceField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConfig {
    pub p: f64,
    /// Gradient regularization `ε` in `(g² + ε²)^{(p-2)/2} g`.
    pub eps_reg: f64,
}

impl OperatorConfig {
    pub fn new(p: f64, eps_reg: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Parameter(format!("p must be > 1, got {p}")));
        }
        if !(eps_reg >= 0.0) {
            return Err(Error::Parameter(format!("eps_reg must be >= 0, got {eps_reg}")));
        }
        Ok(Self { p, eps_reg })
    }

    /// Unregularized operator.
    pub fn exact(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }
}

/// Regularized flux `(g² + ε²)^{(p-2)/2} g`; equals `|g|^{p-2} g` when `ε = 0`.
#[inline]
pub fn flux_value(g: f64, p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        if p == 2.0 {
            g
        } else {
            signed_pow(g, p - 1.0)
        }
    } else {
        (g * g + eps * eps).powf(0.5 * (p - 2.0)) * g
    }
}

/// `d flux / d g = (g² + ε²)^{(p-4)/2} ((p-1) g² + ε²)`.
///
/// With `ε = 0` and `p < 2` this is infinite at `g = 0`; Newton solvers pass a positive `ε`.
#[inline]
pub fn flux_derivative(g: f64, p: f64, eps: f64) -> f64 {
    if p == 2.0 {
        return 1.0;
    }
    let s = g * g + eps * eps;
    if s == 0.0 {
        return if p > 2.0 { 0.0 } else { f64::INFINITY };
    }
    s.powf(0.5 * (p - 4.0)) * ((p - 1.0) * g * g + eps * eps)
}

/// Face gradients of `v` with ghost cells from the boundary conditions.
pub fn face_gradient(v: &Field, grid: &Grid) -> Result<FaceField> {
    grid.check_len(v.len())?;
    let mut out = vec![0.0; grid.len() + 1];
    gradient_into(v.values(), grid, &mut out);
    FaceField::new(out)
}

/// Applies `flux` face by face.
pub fn flux(g: &FaceField, cfg: &OperatorConfig) -> FaceField {
    FaceField { values: g.values.iter().map(|&x| flux_value(x, cfg.p, cfg.eps_reg)).collect() }
}

/// `(𝓛_h v)_i = (1/w_i) [ρ_{i+1/2} flux_{i+1/2} - ρ_{i-1/2} flux_{i-1/2}]`, with `ρ_f = w_f / h_f`.
pub fn apply_operator(v: &Field, grid: &Grid, cfg: &OperatorConfig) -> Result<Field> {
    grid.check_len(v.len())?;
    let mut ws = Workspace::new(grid.len());
    let mut out = vec![0.0; grid.len()];
    apply_into(v.values(), grid, cfg, &mut ws, &mut out);
    Field::new(out, v.time())
}

/// `Σ a (𝓛_h b) w + Σ ∂a · flux(∂b) · w_f`; zero up to rounding for every pair of fields.
pub fn duality_defect(a: &Field, b: &Field, grid: &Grid, cfg: &OperatorConfig) -> Result<f64> {
    let lb = apply_operator(b, grid, cfg)?;
    let ga = face_gradient(a, grid)?;
    let fb = flux(&face_gradient(b, grid)?, cfg);
    let volume: f64 = a.values().iter().zip(lb.values()).zip(grid.cell_weights()).map(|((x, y), w)| x * y * w).sum();
    let surface: f64 = ga.values().iter().zip(fb.values()).zip(grid.face_weights()).map(|((x, y), w)| x * y * w).sum();
    Ok(volume + surface)
}

/// Scratch buffers reused across operator applications.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pub grad: Vec<f64>,
    pub flux: Vec<f64>,
}

impl Workspace {
    pub fn new(cells: usize) -> Self {
        Self { grad: vec![0.0; cells + 1], flux: vec![0.0; cells + 1] }
    }
}

pub(crate) fn gradient_into(v: &[f64], grid: &Grid, out: &mut [f64]) {
    let n = v.len();
    let dx = grid.dx();
    for f in 1..n {
        out[f] = (v[f] - v[f - 1]) / dx;
    }
    out[0] = match grid.left_boundary() {
        Boundary::Dirichlet => 2.0 * v[0] / dx,
        Boundary::Symmetry => 0.0,
    };
    out[n] = match grid.right_boundary() {
        Boundary::Dirichlet => -2.0 * v[n - 1] / dx,
        Boundary::Symmetry => 0.0,
    };
}

pub(crate) fn apply_into(v: &[f64], grid: &Grid, cfg: &OperatorConfig, ws: &mut Workspace, out: &mut [f64]) {
    gradient_into(v, grid, &mut ws.grad);
    let wf = grid.face_weights();
    let hf = grid.face_lengths();
    for f in 0..ws.flux.len() {
        ws.flux[f] = wf[f] / hf[f] * flux_value(ws.grad[f], cfg.p, cfg.eps_reg);
    }
    let wc = grid.cell_weights();
    for i in 0..out.len() {
        out[i] = (ws.flux[i + 1] - ws.flux[i]) / wc[i];
    }
}

/// Tridiagonal matrix stored by diagonals; `lower[i]` couples row `i` to `i-1`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// Thomas algorithm; `None` when a pivot vanishes.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut beta = self.diag[0];
        if beta == 0.0 || !beta.is_finite() {
            return None;
        }
        c[0] = self.upper[0] / beta;
        d[0] = rhs[0] / beta;
        for i in 1..n {
            beta = self.diag[i] - self.lower[i] * c[i - 1];
            if beta == 0.0 || !beta.is_finite() {
                return None;
            }
            c[i] = if i + 1 < n { self.upper[i] / beta } else { 0.0 };
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / beta;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Some(d)
    }
}

/// Jacobian `∂(𝓛_h v)/∂v` using the `ε`-regularized flux derivative.
pub(crate) fn operator_jacobian(v: &[f64], grid: &Grid, p: f64, eps: f64) -> Tridiagonal {
    let n = v.len();
    let mut grad = vec![0.0; n + 1];
    gradient_into(v, grid, &mut grad);
    let dx = grid.dx();
    let wf = grid.face_weights();
    let hf = grid.face_lengths();
    let wc = grid.cell_weights();
    // conductance of face f: ρ_f F'(g_f) / dx
    let cond: Vec<f64> = (0..=n).map(|f| wf[f] / hf[f] * flux_derivative(grad[f], p, eps) / dx).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let right = cond[i + 1];
        let left = cond[i];
        let right_diag = if i + 1 == n {
            match grid.right_boundary() {
                Boundary::Dirichlet => 2.0 * right,
                Boundary::Symmetry => 0.0,
            }
        } else {
            upper[i] = right / wc[i];
            right
        };
        let left_diag = if i == 0 {
            match grid.left_boundary() {
                Boundary::Dirichlet => 2.0 * left,
                Boundary::Symmetry => 0.0,
            }
        } else {
            lower[i] = left / wc[i];
            left
        };
        diag[i] = -(right_diag + left_diag) / wc[i];
    }
    Tridiagonal { lower, diag, upper }
}
