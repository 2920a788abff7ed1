use super::*;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn envelope_of_constant_speed_is_constant() {
    let samples: Vec<(Vec<f64>, f64)> = (0..64)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / 64.0;
            (vec![a.cos(), a.sin()], 0.37)
        })
        .collect();
    let queries: Vec<Vec<f64>> = samples.iter().map(|(d, _)| d.clone()).collect();
    for w in fg_envelope(&samples, &queries).unwrap() {
        assert_eq!(w, 0.37);
    }
}

#[test]
fn envelope_two_sample_example() {
    let h = 0.5f64.sqrt();
    let samples = vec![(vec![1.0, 0.0], 1.0), (vec![h, h], 0.6)];
    let w = fg_envelope(&samples, &[vec![1.0, 0.0]]).unwrap()[0];
    assert!((w - 0.6 / h).abs() < 1e-12);
    assert!((w - 0.8485).abs() < 1e-4);
    assert!(w <= 1.0);
    let err = fg_envelope(&samples, &[vec![-1.0, 0.0]]);
    assert!(matches!(err, Err(Error::UndefinedDirection(_))));
    assert!(fg_envelope(&[], &[vec![1.0, 0.0]]).is_err());
    assert!(fg_envelope(&[(vec![1.0, 0.0], -0.1)], &[vec![1.0, 0.0]]).is_err());
}

#[test]
fn rational_directions_are_exact_unit_vectors() {
    let dirs = rational_directions(24);
    assert_eq!(dirs.len(), 24);
    let f: Vec<[f64; 2]> = dirs.iter().map(|d| d.to_f64()).collect();
    assert!(f.contains(&[1.0, 0.0]));
    assert!(f.contains(&[0.0, 1.0]));
    assert!(dirs.contains(&RationalDirection {
        num: [3, 5 - 1],
        den: 5
    }));
    for d in &dirs {
        let [x, y] = d.num;
        assert_eq!(x * x + y * y, d.den * d.den);
        assert_eq!(gcd(gcd(x, y), d.den), 1);
        let m = crate::reaction::membership(&d.to_f64(), &[1.0, 1.0]).unwrap();
        assert!(m.period().is_some(), "{d:?}");
    }
    for (i, a) in dirs.iter().enumerate() {
        assert!(!dirs[i + 1..].contains(a));
    }
    assert_eq!(rational_directions(1).len(), 1);
}

#[test]
fn mixed_sign_targets_rejected() {
    let o = Design1dOptions::default();
    assert!(matches!(design_1d(0.03, -0.01, &o), Err(Error::InvalidParameter(_))));
    assert!(matches!(design_1d(-0.03, 0.01, &o), Err(Error::InvalidParameter(_))));
    assert!(matches!(design_1d(f64::NAN, 0.01, &o), Err(Error::InvalidParameter(_))));
    let nd = DesignNdOptions::default();
    let axes = [[1.0, 0.0], [0.0, 1.0]];
    assert!(matches!(
        design_multidir(&[0.1, -0.1], &axes, &nd),
        Err(Error::InvalidParameter(_))
    ));
    assert!(matches!(
        design_multidir(&[0.1], &axes[..1], &nd),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn ratio_outside_unit_interval_rejected() {
    assert!(solve_ratio(1.5, &Design1dOptions::default()).is_err());
}

#[test]
fn zero_targets_give_the_balanced_cubic() {
    let d = design_1d(0.0, 0.0, &Design1dOptions::default()).unwrap();
    assert!(d.reaction.is_homogeneous());
    assert!(d.tau.is_empty());
    for a in &d.achieved {
        assert_eq!(a.class, SpeedClass::Zero);
    }
    assert!(d.log_csv().starts_with("iter,cL,cR,residual\n"));
}

#[test]
fn unsupported_terrace_sizes() {
    let n = SpeedNumerics::design();
    assert!(terrace_scenario(Variant::II, 3, &n).is_err());
    assert!(terrace_scenario(Variant::III, 4, &n).is_err());
    assert!(terrace_scenario(Variant::I, 1, &n).is_err());
}

#[test]
fn log_csv_layout() {
    let e = |iter| LogEntry {
        iter,
        tau: vec![0.1, 0.2],
        speeds: vec![0.3, 0.4],
        residual: 0.5,
    };
    let d = DesignResult {
        tau: vec![0.1, 0.2],
        nu: 1.0,
        reaction: Reaction::cubic(2).unwrap(),
        targets: vec![0.3, 0.4],
        achieved: Vec::new(),
        log: vec![e(1), e(2)],
        speed_names: vec!["c_1".into(), "c_2".into()],
    };
    assert_eq!(
        d.log_csv(),
        "iter,tau_1,tau_2,c_1,c_2,residual\n1,0.1,0.2,0.3,0.4,0.5\n2,0.1,0.2,0.3,0.4,0.5\n"
    );
}

#[test]
fn blocked_pair_and_planar_dichotomy_on_coarse_grids() {
    let p = speed_pair(0.0, 0.1, &SpeedNumerics::design()).unwrap();
    assert_eq!(p.left.class, SpeedClass::Positive);
    assert_eq!(p.right.class, SpeedClass::Zero);
    let r = Reaction::family_multidir(MultiDirParams::axes(vec![1.0, 0.0], 0.1)).unwrap();
    let c = measure_speeds_dirs(&r, &[[1.0, 0.0], [0.0, 1.0]], &PlanarNumerics::default()).unwrap();
    assert_eq!(c[0].class, SpeedClass::Positive, "{:?}", c[0]);
    assert_eq!(c[1].class, SpeedClass::Zero, "{:?}", c[1]);
}

proptest::proptest! {
    #[test]
    fn envelope_is_homogeneous_and_below_samples(
        speeds in proptest::collection::vec(0.05f64..1.0, 8),
        k in 0.1f64..10.0,
    ) {
        let samples: Vec<(Vec<f64>, f64)> = speeds
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let a = std::f64::consts::TAU * i as f64 / 8.0;
                (vec![a.cos(), a.sin()], *c)
            })
            .collect();
        let queries: Vec<Vec<f64>> = samples.iter().map(|s| s.0.clone()).collect();
        let w = fg_envelope(&samples, &queries).unwrap();
        let scaled: Vec<(Vec<f64>, f64)> = samples.iter().map(|(d, c)| (d.clone(), k * c)).collect();
        let wk = fg_envelope(&scaled, &queries).unwrap();
        for ((w, wk), (_, c)) in w.iter().zip(&wk).zip(&samples) {
            proptest::prop_assert!(*w <= c + 1e-12);
            proptest::prop_assert!(*w > 0.0);
            proptest::prop_assert!((wk - k * w).abs() <= 1e-12 * wk.max(1.0));
        }
    }
}
