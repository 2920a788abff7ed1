use frontlab::design::*;
use frontlab::frontmetrics::{SpeedClass, Verdict};
use frontlab::solver::Orientation;

#[test]
fn equal_targets_take_the_symmetric_branch() {
    let d = design_1d(0.05, 0.05, &Design1dOptions::default()).unwrap();
    assert_eq!(d.tau, vec![1.0]);
    let ratio = d.achieved[1].c / d.achieved[0].c;
    assert!((ratio - 1.0).abs() <= 0.02, "{ratio}");
}

#[test]
fn swapped_and_negative_targets() {
    let opts = Design1dOptions::default();
    let d = design_1d(0.012, 0.03, &opts).unwrap();
    assert!(d.relative_errors().iter().all(|e| *e <= 0.05), "{}", d.report());
    let n = design_1d(-0.03, -0.03, &opts).unwrap();
    assert!(
        n.achieved
            .iter()
            .all(|a| a.class == SpeedClass::Negative && (a.c + 0.03).abs() <= 0.0015),
        "{}",
        n.report()
    );
}

#[test]
fn one_zero_planar_target_keeps_its_coordinate_at_zero() {
    let axes = [[1.0, 0.0], [0.0, 1.0]];
    let d = design_multidir(&[0.1, 0.0], &axes, &DesignNdOptions::default()).unwrap();
    assert_eq!(d.tau[1], 0.0);
    assert!(d.log.iter().all(|e| e.tau[1] == 0.0));
    assert_eq!(d.achieved[1].class, SpeedClass::Zero);
    assert!((d.achieved[0].c - 0.1).abs() <= 0.01, "{}", d.report());
}

#[test]
fn variant_i_shares_platforms_with_distinct_speeds() {
    let sc = terrace_scenario(Variant::I, 2, &SpeedNumerics::design()).unwrap();
    assert_eq!(sc.expected_right, vec![2.0, 1.0, 0.0]);
    for c in &sc.components {
        assert!((c.speeds.left.c - c.speeds.right.c).abs() > 1e-3);
    }
    let mut speeds = Vec::new();
    for o in [Orientation::RightMoving, Orientation::LeftMoving] {
        let (rep, _) = run_terrace(&sc, o, &TerraceNumerics::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Valid, "{}", rep.summary());
        assert_eq!(rep.platforms, vec![2.0, 1.0, 0.0], "{}", rep.summary());
        speeds.push(rep.fronts.iter().map(|f| f.speed.c).collect::<Vec<_>>());
    }
    for (r, l) in speeds[0].iter().zip(&speeds[1]) {
        assert!((r - l).abs() > 1e-3, "{speeds:?}");
    }
}
