use ddpx_core::grid::{ExponentField, Grid, ScalarField};
use ddpx_core::solver::{energy, solve_regularized, ProblemSpec, SolverConfig};
use ddpx_core::transforms::Regime;
use ddpx_core::verification::{estimate_integrals, BarenblattParams};
use proptest::prelude::*;

fn bump(g: Grid, c: f64, w: f64, h: f64) -> ScalarField {
    ScalarField::from_fn(g, |x| {
        let r = (x - c) / (0.5 * w);
        if r.abs() < 1.0 {
            h * (1.0 - r * r).powi(2)
        } else {
            0.0
        }
    })
    .unwrap()
}

#[test]
fn energy_decreases_by_at_least_the_dissipation() {
    let g = Grid::new(0.0, 1.0, 51).unwrap();
    for m in [0.5, 1.0, 2.0, 3.0] {
        for p in [ExponentField::constant(g, 1.5).unwrap(), ExponentField::linear(g, 1.5, 2.5).unwrap(), ExponentField::constant(g, 3.0).unwrap()] {
            let spec = ProblemSpec::new(Regime::new(m).unwrap(), p.clone(), bump(g, 0.5, 0.5, 1.0), 0.02, 0.01).unwrap();
            let traj = solve_regularized(&spec, &SolverConfig::for_horizon(0.02)).unwrap();
            for (k, d) in traj.diagnostics.iter().enumerate().skip(1) {
                let drop = traj.diagnostics[k - 1].energy - d.energy;
                assert!(drop + 1e-12 * (1.0 + d.energy) >= d.dissipation, "m={m} step {k}: {drop} < {}", d.dissipation);
            }
            let est = estimate_integrals(&traj, &spec).unwrap();
            assert!(est.all_ok());
            assert!((est.initial_energy - energy(&traj.u[0], &p)).abs() < 1e-12);
        }
    }
}

#[test]
fn barenblatt_run_tracks_profile() {
    let bp = BarenblattParams::new(0.5, 1.0).unwrap();
    let g = Grid::new(-4.0, 4.0, 81).unwrap();
    let spec = ProblemSpec::new(Regime::new(0.5).unwrap(), ExponentField::constant(g, 2.0).unwrap(), bp.profile(g, 0.0), 0.2, 1e-4).unwrap();
    let mut cfg = SolverConfig::for_horizon(0.2);
    cfg.dt = 2e-3;
    let traj = solve_regularized(&spec, &cfg).unwrap();
    let exact = bp.profile(g, 0.2);
    let err = traj.final_u().values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 2e-2, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ordered_data_gives_ordered_solutions(
        m in prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
        p in 1.5f64..3.0,
        c in 0.3f64..0.7,
        h in 0.2f64..1.0,
        lift in 0.0f64..0.5,
    ) {
        let g = Grid::new(0.0, 1.0, 31).unwrap();
        let low = bump(g, c, 0.4, h);
        let high = bump(g, c, 0.5, h + lift);
        let pf = ExponentField::constant(g, p).unwrap();
        let cfg = SolverConfig::for_horizon(0.01);
        let r = Regime::new(m).unwrap();
        let a = solve_regularized(&ProblemSpec::new(r, pf.clone(), low, 0.01, 0.01).unwrap(), &cfg).unwrap();
        let b = solve_regularized(&ProblemSpec::new(r, pf, high, 0.01, 0.01).unwrap(), &cfg).unwrap();
        for (ua, ub) in a.u.iter().zip(&b.u) {
            for (x, y) in ua.values().iter().zip(ub.values()) {
                prop_assert!(x <= &(y + 1e-8 * (1.0 + b.k)));
            }
        }
    }
}
