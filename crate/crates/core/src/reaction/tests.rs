use super::*;
use proptest::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

fn axes2(tau: [f64; 2]) -> Reaction {
    Reaction::family_multidir(MultiDirParams::axes(tau.to_vec(), DEFAULT_SIGMA)).unwrap()
}

#[test]
fn family_is_homogeneous_near_the_upper_level_at_tau_zero() {
    let r = Reaction::family_1d(0.0, 0.1).unwrap();
    for i in 0..100 {
        let x = -3.0 + 0.06 * i as f64;
        for k in 0..=20 {
            let u = 1.0 - r.delta0() * k as f64 / 20.0;
            assert_eq!(r.eval_1d(x, u), cubic_balanced(u));
        }
    }
}

#[test]
fn family_is_monotone_in_tau() {
    let taus = [0.0, 0.1, 0.35, 0.6, 0.9, 1.0];
    let rs: Vec<_> = taus.iter().map(|t| Reaction::family_1d(*t, 0.1).unwrap()).collect();
    for i in 0..80 {
        let x = i as f64 / 80.0;
        for k in 0..=100 {
            let u = k as f64 / 100.0;
            for w in rs.windows(2) {
                assert!(w[1].eval_1d(x, u) - w[0].eval_1d(x, u) >= 0.0);
            }
        }
    }
}

#[test]
fn family_rejects_bad_parameters() {
    assert!(Reaction::family_1d(0.0, 0.0).is_err());
    assert!(Reaction::family_1d(0.0, -1.0).is_err());
    assert!(Reaction::family_1d(1.5, 0.1).is_err());
}

#[test]
fn levels_are_zeros_with_uniform_slope() {
    let reactions = vec![
        Reaction::cubic(1).unwrap(),
        Reaction::family_1d(0.3, 0.1).unwrap(),
        Reaction::family_1d(1.0, 0.1).unwrap().rescale(2.0).unwrap(),
        Reaction::stack(vec![
            Reaction::family_1d(0.2, 0.1).unwrap(),
            Reaction::family_1d(0.7, 0.1).unwrap().mirror(),
            Reaction::family_1d(1.0, 0.05).unwrap(),
        ])
        .unwrap(),
    ];
    for r in &reactions {
        for &p in r.levels() {
            for i in 0..50 {
                let x = [0.37 * i as f64 - 4.0];
                let (f, d) = r.eval_du(&x, p);
                assert!(f.abs() < 1e-15, "f={f}");
                assert!((d - r.gamma()).abs() < 1e-13, "d={d} gamma={}", r.gamma());
                assert!(d < 0.0);
            }
        }
    }
}

#[test]
fn homogeneous_within_delta0_of_levels() {
    let r = Reaction::family_1d(0.4, 0.1).unwrap();
    let d = r.delta0();
    for k in 0..=10 {
        for base in [0.0, 1.0] {
            let u = base + d * (2.0 * k as f64 / 10.0 - 1.0);
            let f0 = r.eval_1d(0.0, u);
            for i in 1..40 {
                assert_eq!(r.eval_1d(i as f64 * 0.025, u), f0);
            }
        }
    }
}

#[test]
fn delta0_is_legal() {
    let d = DEFAULT_DELTA0;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..=1000 {
        let s = -d + 2.0 * d * k as f64 / 1000.0;
        worst = worst.max(cubic_balanced_du(s)).max(cubic_balanced_du(1.0 + s));
    }
    assert!(worst <= -0.25, "{worst}");
    // boundary of the admissible band: roots of 3u^2 - 3u + 1/4
    let edge = (3.0 - 6f64.sqrt()) / 6.0;
    assert!((cubic_balanced_du(edge) + 0.25).abs() < 1e-14);
    assert!(d < edge);
}

// Independent midpoint-rule quadrature of f over the cell times [a, b].
fn midpoint_integral(r: &Reaction, n: usize) -> f64 {
    let (a, b) = (r.min_level(), r.max_level());
    let l = r.period()[0];
    let mut s = 0.0;
    for i in 0..n {
        let x = l * (i as f64 + 0.5) / n as f64;
        for k in 0..n {
            let u = a + (b - a) * (k as f64 + 0.5) / n as f64;
            s += r.eval_1d(x, u);
        }
    }
    s * l * (b - a) / (n * n) as f64
}

#[test]
fn integral_sign_cases() {
    let f0 = Reaction::cubic(1).unwrap();
    assert_eq!(f0.integral_sign(), IntegralSign::ZeroWithinTol);
    assert!(f0.integral().abs() < 1e-15);

    let r = Reaction::family_1d(0.0, 0.1).unwrap();
    let oracle = midpoint_integral(&r, 1200);
    assert!(oracle > 0.0);
    assert!((r.integral() - oracle).abs() < 1e-6, "{} vs {oracle}", r.integral());
    assert_eq!(r.integral_sign(), IntegralSign::Positive);

    let r = Reaction::family_1d(0.5, 0.1).unwrap();
    let oracle = midpoint_integral(&r, 1200);
    assert!((r.integral() - oracle).abs() < 1e-6);
    assert_eq!(r.integral_sign(), IntegralSign::Positive);
    assert_eq!(r.flip().integral_sign(), IntegralSign::Negative);
    assert!((r.flip().integral() + r.integral()).abs() < 1e-12);
    assert_eq!(r.dual().integral_sign(), IntegralSign::Negative);
}

#[test]
fn multidir_zero_tau_is_homogeneous() {
    let r = axes2([0.0, 0.0]);
    for i in 0..30 {
        for j in 0..30 {
            let x = [0.13 * i as f64, -0.21 * j as f64];
            for k in 0..=20 {
                let u = k as f64 / 20.0;
                assert_eq!(r.eval(&x, u), cubic_balanced(u));
            }
        }
    }
}

#[test]
fn multidir_single_active_term() {
    let r = axes2([1.0, 0.0]);
    let chi2 = ChiParams::default();
    for i in 0..25 {
        for j in 0..25 {
            let x = [0.09 * i as f64 - 1.0, 0.11 * j as f64 - 1.3];
            for k in 0..=20 {
                let u = k as f64 / 20.0;
                let expected = cubic_balanced(u) + DEFAULT_SIGMA * chi(x[1], u, &chi2);
                assert!((r.eval(&x, u) - expected).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn multidir_periodicity_on_samples() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let r = axes2([0.7, 0.4]);
    let diag = Reaction::family_multidir(MultiDirParams {
        tau: vec![0.5, 1.0, 0.3],
        sigma: 0.1,
        directions: vec![vec![1.0, 0.0], vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2], vec![0.6, 0.8]],
        lattice: vec![1.0, 1.0],
        periods: None,
        delta0: DEFAULT_DELTA0,
    })
    .unwrap();
    for r in [&r, &diag] {
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let u = rng.random_range(0.0..1.0);
            let f = r.eval(&x, u);
            worst = worst.max((r.eval(&[x[0] + 1.0, x[1]], u) - f).abs());
            worst = worst.max((r.eval(&[x[0], x[1] + 1.0], u) - f).abs());
        }
        assert!(worst < 1e-12, "{worst:e}");
    }
}

#[test]
fn multidir_rejects_incommensurate_directions() {
    let err = Reaction::family_multidir(MultiDirParams {
        tau: vec![0.5, 0.5],
        sigma: 0.1,
        directions: vec![vec![1.0, 0.0], vec![1f64.cos(), 1f64.sin()]],
        lattice: vec![1.0, 1.0],
        periods: None,
        delta0: DEFAULT_DELTA0,
    });
    assert!(matches!(err, Err(Error::NotInLattice { .. })));
    let err = Reaction::family_multidir(MultiDirParams {
        periods: Some(vec![1.0, 0.3]),
        ..MultiDirParams::axes(vec![0.5, 0.5], 0.1)
    });
    assert!(matches!(err, Err(Error::NotInLattice { .. })));
}

#[test]
fn multidir_monotone_in_each_tau() {
    let base = axes2([0.3, 0.5]);
    let up1 = axes2([0.8, 0.5]);
    let up2 = axes2([0.3, 0.9]);
    for i in 0..20 {
        for j in 0..20 {
            let x = [i as f64 / 20.0, j as f64 / 20.0];
            for k in 0..=40 {
                let u = k as f64 / 40.0;
                assert!(up1.eval(&x, u) >= base.eval(&x, u));
                assert!(up2.eval(&x, u) >= base.eval(&x, u));
            }
        }
    }
}

#[test]
fn stack_of_one_is_identity() {
    let c = Reaction::family_1d(0.3, 0.1).unwrap();
    let s = Reaction::stack(vec![c.clone()]).unwrap();
    for i in 0..50 {
        for k in -10..=30 {
            let (x, u) = (0.1 * i as f64, 0.05 * k as f64);
            assert_eq!(s.eval_1d(x, u), c.eval_1d(x, u));
        }
    }
}

#[test]
fn stack_maps_layers() {
    let top = Reaction::family_1d(0.9, 0.1).unwrap();
    let bottom = Reaction::family_1d(0.1, 0.1).unwrap().mirror();
    let s = Reaction::stack(vec![top.clone(), bottom.clone()]).unwrap();
    assert_eq!(s.levels(), &[0.0, 1.0, 2.0]);
    for i in 0..30 {
        let x = 0.07 * i as f64;
        for k in 1..20 {
            let v = k as f64 / 20.0;
            assert_eq!(s.eval_1d(x, v), bottom.eval_1d(x, v));
            assert!((s.eval_1d(x, 1.0 + v) - top.eval_1d(x, v)).abs() < 1e-14);
        }
    }
}

#[test]
fn stack_is_c1_across_the_inner_level() {
    let s = Reaction::stack(vec![
        Reaction::family_1d(0.9, 0.1).unwrap(),
        Reaction::family_1d(0.2, 0.1).unwrap(),
    ])
    .unwrap();
    let h = 1e-5;
    for i in 0..40 {
        let x = 0.05 * i as f64;
        let g = |u: f64| s.eval_1d(x, u);
        // continuity
        assert!(g(1.0).abs() < 1e-15);
        assert!(g(1.0 - 1e-9).abs() < 1e-9);
        assert!(g(1.0 + 1e-9).abs() < 1e-9);
        // second-order one-sided differences from each side
        let right = (-3.0 * g(1.0) + 4.0 * g(1.0 + h) - g(1.0 + 2.0 * h)) / (2.0 * h);
        let left = (3.0 * g(1.0) - 4.0 * g(1.0 - h) + g(1.0 - 2.0 * h)) / (2.0 * h);
        assert!((right - s.gamma()).abs() < 1e-8, "right {right}");
        assert!((left - s.gamma()).abs() < 1e-8, "left {left}");
    }
}

#[test]
fn stack_rejects_mismatched_components() {
    let a = Reaction::family_1d(0.2, 0.1).unwrap();
    let b = Reaction::family_1d(0.2, 0.1).unwrap().rescale(2.0).unwrap();
    assert!(matches!(
        Reaction::stack(vec![a.clone(), b]),
        Err(Error::IncompatibleStack(_))
    ));
    let c = Reaction::family_1d_with(0.2, 0.1, ChiParams::new(2.0, 0.05).unwrap()).unwrap();
    assert!(Reaction::stack(vec![a, c]).is_err());
    assert!(Reaction::stack(vec![]).is_err());
}

#[test]
fn rescale_identity_and_period() {
    let r = Reaction::family_1d(0.4, 0.1).unwrap();
    let same = r.rescale(1.0).unwrap();
    for i in 0..100 {
        for k in 0..=20 {
            let (x, u) = (0.031 * i as f64, k as f64 / 20.0);
            assert_eq!(same.eval_1d(x, u), r.eval_1d(x, u));
        }
    }
    let half = r.rescale(2.0).unwrap();
    assert_eq!(half.period(), &[0.5]);
    assert_eq!(half.gamma(), -2.0);
    assert_eq!(half.length_scale(), 0.5);
    assert!((half.eval_1d(0.3, 0.4) - 4.0 * r.eval_1d(0.6, 0.4)).abs() < 1e-15);
    assert!(r.rescale(0.0).is_err());
    assert!(r.rescale(-1.0).is_err());
}

#[test]
fn analytic_u_derivative_matches_differences() {
    let reactions = vec![
        Reaction::family_1d(0.6, 0.1).unwrap(),
        Reaction::family_1d(0.6, 0.1).unwrap().dual(),
        Reaction::family_1d(0.2, 0.3).unwrap().rescale(0.7).unwrap(),
        axes2([0.4, 0.9]),
    ];
    let h = 1e-7;
    for r in &reactions {
        let d = r.dim();
        for i in 0..30 {
            let x: Vec<f64> = (0..d).map(|k| 0.173 * i as f64 - 0.4 * k as f64).collect();
            for u in [0.08, 0.13, 0.31, 0.5, 0.72, 0.89, 0.93] {
                let fd = (r.eval(&x, u + h) - r.eval(&x, u - h)) / (2.0 * h);
                let an = r.eval_du(&x, u).1;
                assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "fd {fd} an {an}");
                assert!((r.eval_du(&x, u).0 - r.eval(&x, u)).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn spec_round_trip_builds_equal_reactions() {
    let r = Reaction::stack(vec![
        Reaction::family_1d(0.2, 0.1).unwrap().mirror(),
        Reaction::family_1d(1.0, 0.05).unwrap(),
    ])
    .unwrap()
    .rescale(1.5)
    .unwrap();
    let spec = r.to_spec();
    let text = toml::to_string(&spec).unwrap();
    let back: ReactionSpec = toml::from_str(&text).unwrap();
    assert_eq!(back, spec);
    let rebuilt = back.build().unwrap();
    for i in 0..40 {
        for k in 0..=40 {
            let (x, u) = (0.05 * i as f64, 2.0 * k as f64 / 40.0);
            assert_eq!(rebuilt.eval_1d(x, u), r.eval_1d(x, u));
        }
    }
}

#[test]
fn spec_rejects_unknown_keys_and_missing_period() {
    let bad = "kind = \"family_1d\"\ntau = 0.0\nsigma = 0.1\n";
    assert!(toml::from_str::<ReactionSpec>(bad).is_err());
    let bad = "kind = \"family_1d\"\ntau = 0.0\nsigma = 0.1\nperiod_length = 1.0\nfoo = 2\n";
    assert!(toml::from_str::<ReactionSpec>(bad).is_err());
    let ok = "kind = \"family_1d\"\ntau = 0.0\nsigma = 0.1\nperiod_length = 1.0\n";
    assert!(toml::from_str::<ReactionSpec>(ok).unwrap().build().is_ok());
}

proptest! {
    #[test]
    fn family_periodic_in_x(x in -50.0f64..50.0, u in -0.5f64..1.5, tau in 0.0f64..1.0, k in -5i32..5) {
        let r = Reaction::family_1d(tau, 0.1).unwrap();
        let a = r.eval_1d(x, u);
        let b = r.eval_1d(x + k as f64, u);
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn mirror_and_flip_are_involutions(x in -5.0f64..5.0, u in 0.0f64..1.0, tau in 0.0f64..1.0) {
        let r = Reaction::family_1d(tau, 0.1).unwrap();
        prop_assert_eq!(r.mirror().mirror().eval_1d(x, u), r.eval_1d(x, u));
        prop_assert!((r.flip().flip().eval_1d(x, u) - r.eval_1d(x, u)).abs() < 1e-14);
        prop_assert_eq!(r.mirror().eval_1d(x, u), r.eval_1d(-x, u));
    }

    #[test]
    fn rescale_relation(x in -5.0f64..5.0, u in 0.0f64..1.0, tau in 0.0f64..1.0, nu in 0.2f64..5.0) {
        let r = Reaction::family_1d(tau, 0.1).unwrap();
        let s = r.rescale(nu).unwrap();
        let want = nu * nu * r.eval_1d(nu * x, u);
        prop_assert!((s.eval_1d(x, u) - want).abs() <= 1e-12 * want.abs().max(1.0));
        prop_assert!((s.period()[0] - 1.0 / nu).abs() < 1e-15);
        prop_assert!((s.rescale(1.0 / nu).unwrap().eval_1d(x, u) - r.eval_1d(x, u)).abs() < 1e-12);
    }

    #[test]
    fn dual_reverses_sign_about_the_midlevel(x in -5.0f64..5.0, u in 0.0f64..1.0, tau in 0.0f64..1.0) {
        let r = Reaction::family_1d(tau, 0.1).unwrap();
        let d = r.dual();
        prop_assert!((d.eval_1d(x, u) + r.eval_1d(-x, 1.0 - u)).abs() < 1e-14);
    }
}
