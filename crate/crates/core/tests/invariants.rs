//! Property tests for invariants that span several modules.

use approx::assert_relative_eq;
use parafreq::barenblatt::{barenblatt_eval, barenblatt_n, barenblatt_params};
use parafreq::diagnostics::{check_convexity, check_monotonicity, frequency, Exponents};
use parafreq::domain::{make_grid, DomainSpec, Field, Grid, ProblemParams, WeightSpec};
use parafreq::evolution::{evolve, SchemeConfig, TimeStep};
use parafreq::experiment::{read_series, series_to_string};
use parafreq::initial::InitialData;
use parafreq::spectral::{classify_spectral, Growth, SpectralMode, SpectralSolution};
use proptest::prelude::*;

fn setup(p: f64, q: f64, cells: usize) -> (ProblemParams, Grid) {
    let d = DomainSpec::interval(0.0, 1.0, cells);
    let w = WeightSpec::Quadratic { a: 0.25 };
    (ProblemParams::new(p, q, d.clone(), w.clone()).unwrap(), make_grid(&d, &w).unwrap())
}

fn field(cells: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-2.0f64..2.0, cells)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frequency_scales_with_delta(
        u in field(24),
        c in 0.1f64..10.0,
        p in 1.5f64..3.5,
        q in 0.5f64..3.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3));
        let (_, grid) = setup(p, q, 24);
        let ex = Exponents::new(p, q).unwrap();
        let base = frequency(&Field::new(u.clone(), 0.0).unwrap(), &grid, ex).unwrap();
        let scaled = frequency(&Field::new(u.iter().map(|x| c * x).collect(), 0.0).unwrap(), &grid, ex).unwrap();
        let (n0, n1) = (base.n.unwrap(), scaled.n.unwrap());
        prop_assert!(n0 <= 0.0 && base.n_g.unwrap() <= 0.0);
        assert_relative_eq!(n1, c.powf(ex.delta()) * n0, max_relative = 1e-12, epsilon = 1e-300);
        assert_relative_eq!(scaled.i, c.powf(q + 1.0) * base.i, max_relative = 1e-12);
        assert_relative_eq!(scaled.d, c.powf(p * q) * base.d, max_relative = 1e-12, epsilon = 1e-300);
    }

    #[test]
    fn barenblatt_frequency_is_inverse_time(
        n in 1u32..4,
        p in 1.5f64..4.0,
        q in 0.6f64..3.0,
        t in 0.1f64..10.0,
    ) {
        let Ok(bp) = barenblatt_params(n, p, q, 1.0) else { return Ok(()) };
        let k = n as f64 * q / ((q + 1.0) * (p + n as f64 * bp.delta));
        assert_relative_eq!(barenblatt_n(t, &bp).unwrap() * t, -k, max_relative = 1e-13);
    }

    #[test]
    fn barenblatt_vanishes_outside_support(p in 2.2f64..4.0, q in 1.0f64..3.0, t in 0.5f64..4.0, s in 1.0f64..3.0) {
        let bp = barenblatt_params(1, p, q, 1.0).unwrap();
        let r0 = bp.support_radius().unwrap() * t.powf(1.0 / bp.beta);
        prop_assert_eq!(barenblatt_eval(r0 * s * (1.0 + 1e-12), t, &bp).unwrap(), 0.0);
    }

    #[test]
    fn nontrivial_spectral_solutions_grow_exponentially(
        amps in proptest::collection::vec(-3.0f64..3.0, 1..5),
        l in 0.5f64..5.0,
    ) {
        prop_assume!(amps.iter().any(|a| a.abs() > 1e-6));
        let modes = amps.iter().enumerate().map(|(k, &a)| SpectralMode { k: k as u32 + 1, amplitude: a }).collect();
        let sol = SpectralSolution::new(l, modes, 50.0).unwrap();
        prop_assert_eq!(classify_spectral(&sol, 200, 10.0).unwrap(), Growth::Exponential);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_is_odd(seed in 0u64..1000, p in 1.8f64..3.0, q in 1.0f64..2.0) {
        let (params, grid) = setup(p, q, 24);
        let u0 = InitialData::RandomSignChanging { seed, smoothness: 2.0, modes: 5 }.build(&params, &grid, 0.0).unwrap();
        let neg = u0.map(|x| -x).unwrap();
        let scheme = SchemeConfig::rk4(TimeStep::Adaptive { dt_max: 1e-3 });
        let (a, _) = evolve(&u0, (0.0, 0.01), &params, &grid, &scheme, None, 1000).unwrap();
        let (b, _) = evolve(&neg, (0.0, 0.01), &params, &grid, &scheme, None, 1000).unwrap();
        for (x, y) in a.last().unwrap().values().iter().zip(b.last().unwrap().values()) {
            prop_assert!((x + y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn energy_decays_and_monotonicity_checks_pass(seed in 0u64..1000, pq in prop::sample::select(vec![(2.0, 1.0), (3.0, 1.0), (2.0, 2.0)])) {
        let (p, q) = pq;
        let (params, grid) = setup(p, q, 32);
        let u0 = InitialData::RandomSignChanging { seed, smoothness: 2.0, modes: 6 }.build(&params, &grid, 0.0).unwrap();
        let scheme = SchemeConfig::rk4(TimeStep::Adaptive { dt_max: 1e-4 });
        let (_, series) = evolve(&u0, (0.0, 0.01), &params, &grid, &scheme, None, usize::MAX).unwrap();
        let i_a = series.records[0].i;
        for w in series.records.windows(2) {
            prop_assert!(w[1].d <= 0.0);
            prop_assert!(w[1].i <= w[0].i + 1e-10 * i_a);
        }
        let tol = 1e-6 + 10.0 * series.max_step().powi(2);
        for v in check_monotonicity(&series, tol).unwrap() {
            prop_assert!(v.passed, "{:?}", v);
        }
        let conv = check_convexity(&series, tol).unwrap();
        prop_assert!(conv.passed, "{:?}", conv);

        let ex = Exponents::new(p, q).unwrap();
        let text = series_to_string(&series).unwrap();
        prop_assert_eq!(read_series(text.as_bytes(), ex).unwrap().records, series.records.clone());
        // identical input, identical verdicts
        prop_assert_eq!(check_convexity(&series, tol).unwrap(), conv);
    }
}

#[test]
fn zero_is_a_fixed_point_of_every_scheme() {
    let (params, grid) = setup(2.5, 0.5, 16);
    let zero = Field::zeros(16, 0.0);
    for scheme in [
        SchemeConfig::rk4(TimeStep::Fixed(1e-4)),
        SchemeConfig::explicit_euler(TimeStep::Fixed(1e-5)),
        SchemeConfig::implicit_euler(TimeStep::Fixed(1e-3)),
    ] {
        let (traj, _) = evolve(&zero, (0.0, 0.01), &params, &grid, &scheme, None, 1).unwrap();
        assert!(traj.snapshots.iter().all(|s| s.values().iter().all(|&x| x == 0.0)));
    }
}
