use super::*;
use crate::reaction::{kink, MultiDirParams};

fn cfg(t_end: f64) -> SolverConfig {
    SolverConfig::for_reaction(&Reaction::cubic(1).unwrap(), t_end)
}

#[test]
fn initial_fronts_have_the_right_limits() {
    let g = Grid1D::centered(40.0, 0.05).unwrap();
    let right = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    assert!((right.values[0] - 1.0).abs() < 1e-12);
    assert!(right.values[g.nx - 1] < 1e-12);
    let left = front_initial(g, Orientation::LeftMoving, 1.0, 0.0).unwrap();
    assert!(left.values[0] < 1e-12);
    assert!((left.values[g.nx - 1] - 1.0).abs() < 1e-12);
    let stair = front_initial(g, Orientation::RightMoving, 3.0, 0.0).unwrap();
    assert!(stair.values.iter().all(|v| (0.0..=3.0).contains(v)));
    assert!(front_initial(g, Orientation::RightMoving, 0.0, 1.0).is_err());
}

#[test]
fn grid_rejects_degenerate_input() {
    assert!(Grid1D::new(0.0, 1.0, 8).is_err());
    assert!(Grid1D::new(1.0, 0.0, 32).is_err());
    let g = Grid1D::centered(60.0, 0.05).unwrap();
    assert_eq!(g.nx, 2401);
    assert!((g.dx() - 0.05).abs() < 1e-15);
    assert_eq!(g.x(1200), 0.0);
}

#[test]
fn stable_levels_are_fixed_points() {
    let r = Reaction::stack(vec![
        Reaction::family_1d(0.3, 0.1).unwrap(),
        Reaction::family_1d(0.8, 0.1).unwrap(),
    ])
    .unwrap();
    let g = Grid1D::centered(5.0, 0.05).unwrap();
    for scheme in [Scheme::CnImex, Scheme::BeImex] {
        for p in [0.0, 1.0, 2.0] {
            let mut f = Field1D::from_fn(g, |_| p).unwrap();
            let c = SolverConfig { scheme, ..cfg(1.0) };
            for _ in 0..200 {
                f = step(&f, &r, &c).unwrap();
            }
            assert!(f.values.iter().all(|v| (v - p).abs() < 1e-13));
        }
    }
}

#[test]
fn kink_stays_put_in_the_homogeneous_medium() {
    let r = Reaction::cubic(1).unwrap();
    let g = Grid1D::centered(40.0, 0.05).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    let obs = Observers::midlevel(&r, Orientation::RightMoving);
    let (traj, _) = evolve(f, &r, &cfg(10.0), &obs).unwrap();
    let last = traj.records.last().unwrap();
    assert!((last.t - 10.0).abs() < 1e-9);
    assert!(last.positions[0].abs() < g.dx());
}

// Offset of the quarter-level crossing after relaxing the sampled kink.
fn kink_drift(dx: f64) -> f64 {
    let r = Reaction::cubic(1).unwrap();
    let g = Grid1D::centered(30.0, dx).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    let c = SolverConfig {
        dt: dx * dx,
        ..cfg(10.0)
    };
    let obs = Observers {
        levels: vec![0.25],
        orientation: Orientation::RightMoving,
    };
    let (traj, _) = evolve(f, &r, &c, &obs).unwrap();
    let exact = kink::kink_inverse(0.25).unwrap();
    (traj.records.last().unwrap().positions[0] - exact).abs()
}

#[test]
fn kink_drift_converges_at_second_order() {
    let coarse = kink_drift(0.1);
    let fine = kink_drift(0.05);
    assert!(coarse > 0.0);
    assert!(fine * 3.0 <= coarse, "coarse {coarse:e} fine {fine:e}");
}

#[test]
fn heat_step_conserves_trapezoid_mass() {
    let g = Grid1D::centered(10.0, 0.05).unwrap();
    let mut f = Field1D::from_fn(g, |x| (-(x - 1.0) * (x - 1.0)).exp()).unwrap();
    let mass = |f: &Field1D| {
        let v = &f.values;
        let n = v.len();
        (v.iter().sum::<f64>() - 0.5 * (v[0] + v[n - 1])) * f.grid.dx()
    };
    let m0 = mass(&f);
    for scheme in [Scheme::CnImex, Scheme::BeImex, Scheme::Explicit] {
        let c = SolverConfig {
            scheme,
            dt: 1e-3,
            ..cfg(1.0)
        };
        for _ in 0..500 {
            f = step_heat(&f, &c).unwrap();
        }
        assert!((mass(&f) - m0).abs() < 1e-10, "{scheme:?}");
    }
}

#[test]
fn zero_duration_gives_a_single_record() {
    let r = Reaction::cubic(1).unwrap();
    let g = Grid1D::centered(20.0, 0.05).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    let (traj, out) = evolve(
        f.clone(),
        &r,
        &cfg(0.0),
        &Observers::midlevel(&r, Orientation::RightMoving),
    )
    .unwrap();
    assert_eq!(traj.records.len(), 1);
    let n = f.values.len();
    assert_eq!(out.values[1..n - 1], f.values[1..n - 1]);
    assert_eq!((out.values[0], out.values[n - 1]), (1.0, 0.0));
}

#[test]
fn divergence_and_explicit_limit_are_reported() {
    let r = Reaction::cubic(1).unwrap();
    let g = Grid1D::centered(5.0, 0.05).unwrap();
    let f = Field1D::from_fn(g, |_| 0.0).unwrap();
    let bad = SolverConfig {
        scheme: Scheme::Explicit,
        dt: 0.01,
        ..cfg(1.0)
    };
    assert!(matches!(step(&f, &r, &bad), Err(Error::InvalidParameter(_))));
    let mut big = Field1D::from_fn(g, |_| 0.0).unwrap();
    big.values[50] = 1.9;
    let c = SolverConfig { dt: 5.0, ..cfg(50.0) };
    let mut hit = false;
    for _ in 0..50 {
        match step(&big, &r, &c) {
            Ok(next) => big = next,
            Err(Error::Divergence { .. }) => {
                hit = true;
                break;
            }
            Err(e) => panic!("{e}"),
        }
    }
    assert!(hit);
}

#[test]
fn blocked_front_never_recenters() {
    let r = Reaction::family_1d(0.0, 0.1).unwrap();
    let g = Grid1D::centered(60.0, 0.05).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    let c = SolverConfig {
        recenter_threshold: Some(5.0),
        ..cfg(200.0)
    };
    let (traj, _) = evolve(f, &r, &c, &Observers::midlevel(&r, Orientation::RightMoving)).unwrap();
    assert_eq!(traj.recenterings, 0);
}

#[test]
fn moving_window_agrees_with_a_wide_grid() {
    let r = Reaction::family_1d(0.0, 0.1).unwrap();
    let obs = Observers::midlevel(&r, Orientation::LeftMoving);
    let narrow = Grid1D::centered(30.0, 0.05).unwrap();
    let wide = Grid1D::spanning(-80.0, 30.0, 0.05).unwrap();
    let c = SolverConfig {
        recenter_threshold: Some(2.0),
        ..cfg(60.0)
    };
    let (a, _) = evolve(
        front_initial(narrow, Orientation::LeftMoving, 1.0, 0.0).unwrap(),
        &r,
        &c,
        &obs,
    )
    .unwrap();
    let fixed = SolverConfig {
        recenter_threshold: None,
        ..c.clone()
    };
    let (b, _) = evolve(
        front_initial(wide, Orientation::LeftMoving, 1.0, 0.0).unwrap(),
        &r,
        &fixed,
        &obs,
    )
    .unwrap();
    assert!(a.recenterings > 0);
    assert_eq!(a.records.len(), b.records.len());
    let total = a.records.last().unwrap().positions[0];
    assert!(total < -3.0, "front barely moved: {total}");
    for (p, q) in a.records.iter().zip(&b.records) {
        assert!((p.positions[0] - q.positions[0]).abs() < 2.0 * 0.05);
    }
}

#[test]
fn boundary_contamination_is_detected() {
    let r = Reaction::family_1d(0.0, 0.1).unwrap();
    let g = Grid1D::centered(12.0, 0.05).unwrap();
    let f = front_initial(g, Orientation::LeftMoving, 1.0, 0.0).unwrap();
    let err = evolve(f, &r, &cfg(200.0), &Observers::midlevel(&r, Orientation::LeftMoving)).unwrap_err();
    assert!(
        matches!(err, Error::BoundaryContamination { side: "left", .. }),
        "{err}"
    );
}

#[test]
fn runs_are_bit_reproducible() {
    let r = Reaction::family_1d(0.4, 0.1).unwrap();
    let g = Grid1D::centered(30.0, 0.05).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    let obs = Observers::midlevel(&r, Orientation::RightMoving);
    let c = SolverConfig {
        recenter_threshold: Some(1.0),
        ..cfg(20.0)
    };
    let (a, fa) = evolve(f.clone(), &r, &c, &obs).unwrap();
    let (b, fb) = evolve(f, &r, &c, &obs).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(fa.to_csv(), fb.to_csv());
}

#[test]
fn solutions_stay_in_the_invariant_region() {
    let r = Reaction::family_1d(0.6, 0.1).unwrap();
    let g = Grid1D::centered(20.0, 0.05).unwrap();
    let f = Field1D::from_fn(g, |x| 0.5 + 0.5 * (3.0 * x).sin() * (-x * x / 50.0).exp()).unwrap();
    let c = SolverConfig {
        boundary: Boundary::ZeroFlux,
        snapshot_every: Some(100),
        contamination_tol: None,
        ..cfg(10.0)
    };
    let (traj, _) = evolve(f, &r, &c, &Observers::midlevel(&r, Orientation::RightMoving)).unwrap();
    for s in &traj.snapshots {
        assert!(s.values.iter().all(|v| *v >= -1e-9 && *v <= 1.0 + 1e-9));
    }
}

#[test]
fn csv_headers() {
    let r = Reaction::cubic(1).unwrap();
    let g = Grid1D::centered(5.0, 0.5).unwrap();
    let f = front_initial(g, Orientation::RightMoving, 1.0, 0.0).unwrap();
    assert!(f.to_csv().starts_with("x,u\n"));
    let obs = Observers {
        levels: vec![0.5, 0.25],
        orientation: Orientation::RightMoving,
    };
    let (traj, _) = evolve(f, &r, &cfg(0.0), &obs).unwrap();
    assert!(traj
        .to_csv()
        .starts_with("t,front_pos_level_0.5,front_pos_level_0.25,shift\n"));
}

fn axes(tau: [f64; 2]) -> Reaction {
    Reaction::family_multidir(MultiDirParams::axes(tau.to_vec(), 0.1)).unwrap()
}

#[test]
fn rotated_frame_levels_and_periods() {
    let r = axes([1.0, 0.0]);
    let g = Grid2D::for_reaction(&r, [1.0, 0.0], -10.0, 10.0, 201, 8).unwrap();
    assert_eq!(g.eta_period, 1.0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let d = Grid2D::for_reaction(&r, [s, s], -10.0, 10.0, 201, 8).unwrap();
    assert!((d.eta_period - 2f64.sqrt()).abs() < 1e-14);
    assert!(Grid2D::for_reaction(&r, [1f64.cos(), 1f64.sin()], -10.0, 10.0, 201, 8).is_err());
    let mut f = front_initial_2d(g, Orientation::RightMoving, 1.0, 0.0, 1.0).unwrap();
    for v in f.values.iter_mut() {
        *v = 1.0;
    }
    let c = SolverConfig::for_reaction(&r, 1.0);
    for _ in 0..50 {
        f = step_2d(&f, &r, &c).unwrap();
    }
    assert!(f.values.iter().all(|v| (v - 1.0).abs() < 1e-13));
}

#[test]
fn blocked_planar_front_in_2d() {
    // the reaction depends on y only, so the kink in y is stationary
    let r = axes([1.0, 0.0]);
    let g = Grid2D::for_reaction(&r, [0.0, 1.0], -15.0, 15.0, 301, 8).unwrap();
    let f = front_initial_2d(g, Orientation::RightMoving, 1.0, 0.0, 1.0).unwrap();
    let mut c = SolverConfig::for_reaction(&r, 10.0);
    c.dt = 0.01;
    c.contamination_tol = None;
    let (traj, _) = evolve_2d(f, &r, &c, &Observers::midlevel(&r, Orientation::RightMoving)).unwrap();
    assert!(traj.records.last().unwrap().positions[0].abs() < 0.1);
}

#[test]
fn explicit_and_implicit_2d_agree_on_short_runs() {
    let r = axes([0.5, 0.5]);
    let g = Grid2D::for_reaction(&r, [0.6, 0.8], -8.0, 8.0, 161, 40).unwrap();
    let f = front_initial_2d(g, Orientation::RightMoving, 1.0, 0.0, 1.0).unwrap();
    let dmin = g.d_xi().min(g.d_eta());
    let mut c = SolverConfig::for_reaction(&r, 0.5);
    c.dt = 0.2 * dmin * dmin;
    c.contamination_tol = None;
    let mut a = f.clone();
    let mut b = f;
    let ex = SolverConfig {
        scheme: Scheme::Explicit,
        ..c.clone()
    };
    for _ in 0..c.steps() {
        a = step_2d(&a, &r, &c).unwrap();
        b = step_2d(&b, &r, &ex).unwrap();
    }
    let diff = a
        .values
        .iter()
        .zip(&b.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 2e-3, "{diff}");
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
    #[test]
    fn backward_euler_preserves_order(
        x0 in -4.0f64..4.0,
        width in 0.3f64..3.0,
        wave in 0.5f64..4.0,
        amp in 0.0f64..0.3,
        bump in 0.0f64..0.5,
        tau in 0.0f64..1.0,
    ) {
        let r = Reaction::family_1d(tau, 0.1).unwrap();
        let grid = Grid1D::centered(8.0, 0.05).unwrap();
        let c = SolverConfig {
            dt: 0.02,
            scheme: Scheme::BeImex,
            contamination_tol: None,
            ..SolverConfig::for_reaction(&r, 1.0)
        };
        proptest::prop_assert!(c.comparison_safe(&r));
        let u0 = |x: f64| (kink((x - x0) / width) + amp * (wave * x).sin()).clamp(0.0, 1.0);
        let mut u = Field1D::from_fn(grid, u0).unwrap();
        let mut v = Field1D::from_fn(grid, |x| u0(x) + bump * (-(x - x0).powi(2)).exp()).unwrap();
        for _ in 0..c.steps() {
            u = step(&u, &r, &c).unwrap();
            v = step(&v, &r, &c).unwrap();
            for (a, b) in u.values.iter().zip(&v.values) {
                proptest::prop_assert!(a - b <= 1e-12);
            }
        }
    }
}
