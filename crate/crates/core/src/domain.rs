//! Equation parameters, weighted cell-centered grids and fields.
//!
//! A [`Grid`] is a uniform cell-centered mesh on an interval or on a radial
//! segment `[0, R]`. Cell weights carry the measure `e^{-φ} dV` (times the
//! sphere area `ω_n r^{n-1}` in radial geometry) and face weights carry the
//! same density multiplied by the length of the dual cell around the face, so
//! that `Σ_i w_i` and `Σ_f w_f` are both quadratures of the weighted volume.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `|x|^{s-1} x`, the odd power used for `u^q`.
///
/// Returns `0` at `x = 0` for every `s > 0`.
pub fn signed_power(x: f64, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Parameter(format!("signed power exponent must be > 0, got {s}")));
    }
    Ok(signed_pow(x, s))
}

/// Unchecked signed power for hot loops; the caller guarantees `s > 0`.
#[inline]
pub(crate) fn signed_pow(x: f64, s: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if s == 1.0 {
        x
    } else {
        x.abs().powf(s).copysign(x)
    }
}

/// `|x|^s` for `s ≥ 0`.
pub fn abs_power(x: f64, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::Parameter(format!("absolute power exponent must be >= 0, got {s}")));
    }
    Ok(x.abs().powf(s))
}

/// `q(p-1) - 1`.
pub fn delta_of(p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    Ok(q * (p - 1.0) - 1.0)
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p must be a finite number > 1, got {p}")));
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Parameter(format!("q must be a finite number > 0, got {q}")));
    }
    Ok(())
}

/// Area of the unit sphere `S^{n-1} ⊂ ℝⁿ` (`ω_1 = 2`, `ω_2 = 2π`, `ω_3 = 4π`).
pub fn sphere_area(n: u32) -> f64 {
    let half = f64::from(n) / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Shape of the computational domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// `[left, right]` with homogeneous Dirichlet data at both ends.
    Interval { left: f64, right: f64 },
    /// Ball of radius `radius` in `ℝⁿ`, Dirichlet at `r = radius`.
    Ball { dim: u32, radius: f64 },
    /// `ℝⁿ` truncated at `r_max` with homogeneous Dirichlet data there.
    WholeSpace { dim: u32, r_max: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub cells: usize,
}

impl DomainSpec {
    pub fn interval(left: f64, right: f64, cells: usize) -> Self {
        Self { kind: DomainKind::Interval { left, right }, cells }
    }

    pub fn ball(dim: u32, radius: f64, cells: usize) -> Self {
        Self { kind: DomainKind::Ball { dim, radius }, cells }
    }

    pub fn whole_space(dim: u32, r_max: f64, cells: usize) -> Self {
        Self { kind: DomainKind::WholeSpace { dim, r_max }, cells }
    }

    /// Spatial dimension: 1 for intervals, `n` for radial domains.
    pub fn dim(&self) -> u32 {
        match self.kind {
            DomainKind::Interval { .. } => 1,
            DomainKind::Ball { dim, .. } | DomainKind::WholeSpace { dim, .. } => dim,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, DomainKind::Interval { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 8 {
            return Err(Error::Parameter(format!("need at least 8 cells, got {}", self.cells)));
        }
        match self.kind {
            DomainKind::Interval { left, right } => {
                if !(left.is_finite() && right.is_finite() && left < right) {
                    return Err(Error::Parameter(format!("interval bounds not ordered: [{left}, {right}]")));
                }
            }
            DomainKind::Ball { dim, radius: r } | DomainKind::WholeSpace { dim, r_max: r } => {
                if dim == 0 {
                    return Err(Error::Parameter("radial dimension must be >= 1".into()));
                }
                if !(r > 0.0 && r.is_finite()) {
                    return Err(Error::Parameter(format!("radius must be positive, got {r}")));
                }
            }
        }
        Ok(())
    }
}

/// The potential `φ` defining the weight `e^{-φ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Zero,
    /// `φ(x) = a x`.
    Linear {
        a: f64,
    },
    /// `φ(x) = a |x|²`.
    Quadratic {
        a: f64,
    },
    /// Piecewise-linear interpolation of `(x, φ)` samples, constant beyond the ends.
    Tabulated {
        points: Vec<(f64, f64)>,
    },
}

impl WeightSpec {
    pub fn phi(&self, x: f64) -> f64 {
        match self {
            WeightSpec::Zero => 0.0,
            WeightSpec::Linear { a } => a * x,
            WeightSpec::Quadratic { a } => a * x * x,
            WeightSpec::Tabulated { points } => interpolate(points, x),
        }
    }

    fn validate(&self) -> Result<()> {
        if let WeightSpec::Tabulated { points } = self {
            if points.is_empty() {
                return Err(Error::Parameter("tabulated weight needs at least one sample".into()));
            }
            if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(Error::Parameter("tabulated weight abscissae must increase".into()));
            }
        }
        Ok(())
    }
}

fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let k = points.partition_point(|&(xk, _)| xk <= x);
    let (x0, y0) = points[k - 1];
    let (x1, y1) = points[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Boundary treatment at one end of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// `v = 0` on the boundary face (antisymmetric ghost cell).
    Dirichlet,
    /// Zero gradient (symmetric ghost cell); used at the origin of radial grids.
    Symmetry,
}

/// One equation instance: exponents, geometry and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    p: f64,
    q: f64,
    pub domain: DomainSpec,
    pub weight: WeightSpec,
}

impl ProblemParams {
    pub fn new(p: f64, q: f64, domain: DomainSpec, weight: WeightSpec) -> Result<Self> {
        check_exponents(p, q)?;
        domain.validate()?;
        weight.validate()?;
        Ok(Self { p, q, domain, weight })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> u32 {
        self.domain.dim()
    }

    pub fn delta(&self) -> f64 {
        self.q * (self.p - 1.0) - 1.0
    }
}

/// Uniform cell-centered mesh with weighted quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dx: f64,
    centers: Vec<f64>,
    faces: Vec<f64>,
    cell_weights: Vec<f64>,
    face_weights: Vec<f64>,
    /// Dual-cell length around each face: `dx` inside, `dx/2` at the ends.
    face_lengths: Vec<f64>,
    left: Boundary,
    right: Boundary,
    radial: bool,
}

/// Builds a uniform cell-centered grid on `domain` with weight `e^{-φ}`.
pub fn make_grid(domain: &DomainSpec, weight: &WeightSpec) -> Result<Grid> {
    domain.validate()?;
    weight.validate()?;
    let cells = domain.cells;
    let (lo, hi, dim, left) = match domain.kind {
        DomainKind::Interval { left, right } => (left, right, None, Boundary::Dirichlet),
        DomainKind::Ball { dim, radius } => (0.0, radius, Some(dim), Boundary::Symmetry),
        DomainKind::WholeSpace { dim, r_max } => (0.0, r_max, Some(dim), Boundary::Symmetry),
    };
    let dx = (hi - lo) / cells as f64;
    let density = |x: f64| -> f64 {
        let base = (-weight.phi(x)).exp();
        match dim {
            None => base,
            Some(n) => sphere_area(n) * x.abs().powi(n as i32 - 1) * base,
        }
    };

    let centers: Vec<f64> = (0..cells).map(|i| lo + (i as f64 + 0.5) * dx).collect();
    let faces: Vec<f64> = (0..=cells).map(|i| lo + i as f64 * dx).collect();
    let face_lengths: Vec<f64> = (0..=cells).map(|i| if i == 0 || i == cells { 0.5 * dx } else { dx }).collect();
    let cell_weights: Vec<f64> = centers.iter().map(|&x| density(x) * dx).collect();
    let face_weights: Vec<f64> = faces.iter().zip(&face_lengths).map(|(&x, &h)| density(x) * h).collect();

    if let Some(i) = cell_weights.iter().position(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::NonFinite { index: i });
    }
    if let Some(i) = face_weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::NonFinite { index: i });
    }

    Ok(Grid {
        dx,
        centers,
        faces,
        cell_weights,
        face_weights,
        face_lengths,
        left,
        right: Boundary::Dirichlet,
        radial: dim.is_some(),
    })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// All `len() + 1` face positions, boundary faces included.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    pub fn cell_weights(&self) -> &[f64] {
        &self.cell_weights
    }

    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    pub fn face_lengths(&self) -> &[f64] {
        &self.face_lengths
    }

    pub fn left_boundary(&self) -> Boundary {
        self.left
    }

    pub fn right_boundary(&self) -> Boundary {
        self.right
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    /// Total weighted measure `Σ w_i`.
    pub fn measure(&self) -> f64 {
        self.cell_weights.iter().sum()
    }

    /// Samples `f` at the cell centers.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.centers.iter().map(|&x| f(x)).collect()
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Dimension { expected: self.len(), got });
        }
        Ok(())
    }
}

/// Cell values of a solution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(values: Vec<f64>, time: f64) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values, time })
    }

    pub fn zeros(len: usize, time: f64) -> Self {
        Self { values: vec![0.0; len], time }
    }

    pub fn from_fn(grid: &Grid, time: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid.sample(f), time)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.time)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Weighted integral `Σ_i f_i w_i`.
pub fn integrate(f: &Field, grid: &Grid) -> Result<f64> {
    grid.check_len(f.len())?;
    Ok(dot_weighted(f.values(), grid.cell_weights()))
}

pub(crate) fn dot_weighted(f: &[f64], w: &[f64]) -> f64 {
    f.iter().zip(w).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn signed_power_examples() {
        assert_eq!(signed_power(-2.0, 2.0).unwrap(), -4.0);
        assert_relative_eq!(signed_power(-8.0, 1.0 / 3.0).unwrap(), -2.0, max_relative = 1e-15);
        assert_eq!(signed_power(1.7, 1.0).unwrap(), 1.7);
        assert_eq!(signed_power(0.0, 0.5).unwrap(), 0.0);
        assert!(signed_power(1.0, 0.0).is_err());
        assert!(signed_power(1.0, -1.0).is_err());
        assert_eq!(abs_power(-3.0, 2.0).unwrap(), 9.0);
        assert_eq!(abs_power(-3.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_of(2.0, 1.0).unwrap(), 0.0);
        assert_eq!(delta_of(3.0, 1.0).unwrap(), 1.0);
        assert_eq!(delta_of(2.0, 0.5).unwrap(), -0.5);
        assert!(delta_of(1.0, 1.0).is_err());
        assert!(delta_of(2.0, 0.0).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn params_recompute_delta() {
        let d = DomainSpec::interval(0.0, 1.0, 16);
        let pp = ProblemParams::new(3.0, 2.0, d.clone(), WeightSpec::Zero).unwrap();
        assert_eq!(pp.delta(), 3.0);
        assert!(ProblemParams::new(0.5, 1.0, d.clone(), WeightSpec::Zero).is_err());
        assert!(ProblemParams::new(2.0, 1.0, DomainSpec::interval(0.0, 1.0, 4), WeightSpec::Zero).is_err());
        assert!(ProblemParams::new(2.0, 1.0, DomainSpec::interval(1.0, 0.0, 16), WeightSpec::Zero).is_err());
        assert!(ProblemParams::new(2.0, 1.0, DomainSpec::ball(2, -1.0, 16), WeightSpec::Zero).is_err());
    }

    #[test]
    fn uniform_interval_weights() {
        let d = DomainSpec { kind: DomainKind::Interval { left: 0.0, right: 1.0 }, cells: 8 };
        let g = make_grid(&d, &WeightSpec::Zero).unwrap();
        assert!(g.cell_weights().iter().all(|&w| (w - 0.125).abs() < 1e-15));
        assert_relative_eq!(g.face_weights().iter().sum::<f64>(), 1.0, max_relative = 1e-14);
        assert_eq!(g.face_weights()[0], 0.0625);
        assert_eq!(g.faces().len(), 9);
    }

    #[test]
    fn four_cell_grid_is_rejected_but_weights_are_quarter() {
        // make_grid insists on >= 8 cells; the 4-cell weight value is the same formula.
        assert!(make_grid(&DomainSpec::interval(0.0, 1.0, 4), &WeightSpec::Zero).is_err());
        let g = make_grid(&DomainSpec::interval(0.0, 2.0, 8), &WeightSpec::Zero).unwrap();
        assert!(g.cell_weights().iter().all(|&w| w == 0.25));
    }

    #[test]
    fn disc_area_converges() {
        let g = make_grid(&DomainSpec::ball(2, 1.0, 4096), &WeightSpec::Zero).unwrap();
        assert_relative_eq!(g.measure(), PI, max_relative = 1e-6);
        assert_eq!(g.face_weights()[0], 0.0);
    }

    #[test]
    fn exponential_weight_measure() {
        // exact: ∫_0^1 e^{-x} dx = 1 - e^{-1}; midpoint error ≈ dx²/24 · (1 - e^{-1})
        let g = make_grid(&DomainSpec::interval(0.0, 1.0, 8192), &WeightSpec::Linear { a: 1.0 }).unwrap();
        assert!((g.measure() - (1.0 - (-1.0f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn weight_totals_second_order() {
        // ∫_0^1 4π r² e^{-r²} dr, exact = π^{3/2} erf(1)/ ... computed via fine composite Simpson oracle.
        let exact = {
            let m = 200_000;
            let h = 1.0 / m as f64;
            let f = |r: f64| 4.0 * PI * r * r * (-r * r).exp();
            let mut s = f(0.0) + f(1.0);
            for k in 1..m {
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
            }
            s * h / 3.0
        };
        let w = WeightSpec::Quadratic { a: 1.0 };
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&c| (make_grid(&DomainSpec::ball(3, 1.0, c), &w).unwrap().measure() - exact).abs())
            .collect();
        assert!((errs[0] / errs[1]).log2() > 1.9);
        assert!((errs[1] / errs[2]).log2() > 1.9);
    }

    #[test]
    fn integrate_examples() {
        let g = make_grid(&DomainSpec::interval(0.0, 1.0, 64), &WeightSpec::Zero).unwrap();
        let one = Field::from_fn(&g, 0.0, |_| 1.0).unwrap();
        assert_relative_eq!(integrate(&one, &g).unwrap(), 1.0, max_relative = 1e-14);
        let zero = Field::zeros(64, 0.0);
        assert_eq!(integrate(&zero, &g).unwrap(), 0.0);
        assert!(integrate(&Field::zeros(3, 0.0), &g).is_err());

        // midpoint rule is exact for linear f; x² shows the O(dx²) rate
        let x = Field::from_fn(&g, 0.0, |x| x).unwrap();
        assert_relative_eq!(integrate(&x, &g).unwrap(), 0.5, max_relative = 1e-14);
        let err = |c: usize| {
            let g = make_grid(&DomainSpec::interval(0.0, 1.0, c), &WeightSpec::Zero).unwrap();
            (integrate(&Field::from_fn(&g, 0.0, |x| x * x).unwrap(), &g).unwrap() - 1.0 / 3.0).abs()
        };
        assert_relative_eq!(err(32) / err(64), 4.0, max_relative = 1e-6);
    }

    #[test]
    fn field_rejects_nan() {
        assert_eq!(Field::new(vec![0.0, f64::NAN], 0.0), Err(Error::NonFinite { index: 1 }));
        assert!(Field::new(vec![f64::INFINITY], 0.0).is_err());
    }

    #[test]
    fn tabulated_weight_interpolates() {
        let w = WeightSpec::Tabulated { points: vec![(0.0, 0.0), (1.0, 2.0)] };
        assert_eq!(w.phi(0.5), 1.0);
        assert_eq!(w.phi(-1.0), 0.0);
        assert_eq!(w.phi(3.0), 2.0);
        let bad = WeightSpec::Tabulated { points: vec![(1.0, 0.0), (0.0, 2.0)] };
        assert!(make_grid(&DomainSpec::interval(0.0, 1.0, 8), &bad).is_err());
    }

    proptest! {
        #[test]
        fn signed_power_is_odd(x in -100.0f64..100.0, s in 0.05f64..5.0) {
            prop_assert_eq!(signed_pow(-x, s), -signed_pow(x, s));
        }

        #[test]
        fn signed_power_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, s in 0.05f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(signed_pow(lo, s) <= signed_pow(hi, s));
        }

        #[test]
        fn signed_power_inverts(x in -10.0f64..10.0, k in 0usize..5) {
            let q = [1.0 / 3.0, 0.5, 1.0, 2.0, 3.0][k];
            let back = signed_pow(signed_pow(x, q), 1.0 / q);
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(f64::MIN_POSITIVE));
        }

        #[test]
        fn integrate_is_linear(
            f in proptest::collection::vec(-5.0f64..5.0, 16),
            g in proptest::collection::vec(-5.0f64..5.0, 16),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let grid = make_grid(&DomainSpec::interval(0.0, 2.0, 16), &WeightSpec::Quadratic { a: 0.3 }).unwrap();
            let comb: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let lhs = integrate(&Field::new(comb, 0.0).unwrap(), &grid).unwrap();
            let rhs = a * integrate(&Field::new(f, 0.0).unwrap(), &grid).unwrap()
                + b * integrate(&Field::new(g, 0.0).unwrap(), &grid).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
