use super::{solve_ratio, speed_pair, Design1dOptions, SpeedNumerics, SpeedPair};
use crate::error::{Error, Result};
use crate::frontmetrics::{extract_terrace, TerraceOptions, TerraceReport};
use crate::reaction::Reaction;
use crate::solver::{evolve, front_initial_for, Grid1D, Observers, Orientation, SolverConfig, Trajectory};
use serde::{Deserialize, Serialize};

/// Terrace shapes realizable by stacking bistable components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Every level is a platform in both directions, with different speeds.
    I,
    /// Different intermediate platforms to the right and to the left.
    II,
    /// A single front to the right, all levels to the left.
    III,
}

/// One stacked component with the speeds it was designed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPlan {
    pub sigma: f64,
    pub tau: f64,
    pub mirrored: bool,
    pub speeds: SpeedPair,
}

#[derive(Debug, Clone)]
pub struct TerraceScenario {
    pub variant: Variant,
    pub reaction: Reaction,
    /// Top layer first.
    pub components: Vec<ComponentPlan>,
    /// Expected platforms, top state first.
    pub expected_right: Vec<f64>,
    pub expected_left: Vec<f64>,
}

impl TerraceScenario {
    pub fn expected(&self, o: Orientation) -> &[f64] {
        match o {
            Orientation::RightMoving => &self.expected_right,
            Orientation::LeftMoving => &self.expected_left,
        }
    }
}

enum Target {
    /// `slow/fast = ratio` at amplitude `sigma`; `mirrored` puts the faster
    /// speed on the right.
    Ratio { sigma: f64, ratio: f64, mirrored: bool },
    /// Symmetric component (`tau = 1`) with speed midway between the two
    /// outer components' rightward speeds.
    MidSymmetric,
}

fn plan(variant: Variant, n: usize) -> Result<Vec<Target>> {
    use Target::*;
    let r = |sigma: f64, ratio: f64, mirrored: bool| Ratio { sigma, ratio, mirrored };
    Ok(match (variant, n) {
        (Variant::I, 2) => vec![r(0.06, 0.75, false), r(0.1, 0.75, false)],
        (Variant::I, 3) => vec![r(0.05, 0.75, false), r(0.075, 0.75, false), r(0.1, 0.75, false)],
        (Variant::II, 2) => vec![r(0.1, 0.41, true), r(0.1, 0.41, false), r(0.1, 0.67, true)],
        (Variant::III, 2) => vec![r(0.1, 0.6, true), r(0.1, 0.6, false)],
        (Variant::III, 3) => vec![r(0.1, 0.6, true), MidSymmetric, r(0.1, 0.6, false)],
        _ => {
            return Err(Error::InvalidParameter(format!(
                "terrace variant {variant:?} is available for N in {}",
                match variant {
                    Variant::II => "{2}",
                    _ => "{2, 3}",
                }
            )))
        }
    })
}

fn swapped(p: &SpeedPair) -> SpeedPair {
    SpeedPair {
        left: p.right,
        right: p.left,
    }
}

/// Symmetric component whose speed is `target`, by bisection on `sigma`.
fn symmetric_with_speed(target: f64, num: &SpeedNumerics) -> Result<(f64, SpeedPair)> {
    let (mut lo, mut hi) = (0.01, 0.1);
    let mut best = None;
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        let p = speed_pair(1.0, mid, num)?;
        let c = p.left.c;
        best = Some((mid, p));
        if (c - target).abs() <= 0.02 * target {
            break;
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.ok_or_else(|| Error::Design("symmetric component search did not run".into()))
}

fn ordering_holds(variant: Variant, comps: &[ComponentPlan]) -> bool {
    let r: Vec<f64> = comps.iter().map(|c| c.speeds.right.c).collect();
    let l: Vec<f64> = comps.iter().map(|c| c.speeds.left.c).collect();
    let positive = r.iter().chain(&l).all(|c| *c > 0.0);
    let inc = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
    let dec = |v: &[f64]| v.windows(2).all(|w| w[0] > w[1]);
    positive
        && match variant {
            Variant::I => inc(&r) && inc(&l) && r.iter().zip(&l).all(|(a, b)| (a - b).abs() > 1e-3),
            Variant::II => r[1] < r[0] && r[0] < r[2] && l[0] < l[2] && l[2] < l[1],
            Variant::III => dec(&r) && inc(&l),
        }
}

/// Designs the per-level components of a terrace variant, stacks them and
/// states the platforms each direction should show. `n` counts fronts
/// (components) for variants i and iii and intermediate-level pairs for
/// variant ii, which always has three components.
pub fn terrace_scenario(variant: Variant, n: usize, num: &SpeedNumerics) -> Result<TerraceScenario> {
    let targets = plan(variant, n)?;
    let mut solved: Vec<Option<ComponentPlan>> = vec![None; targets.len()];
    let mut cache: Vec<((f64, f64), (f64, SpeedPair))> = Vec::new();
    for (k, t) in targets.iter().enumerate() {
        if let Target::Ratio { sigma, ratio, mirrored } = *t {
            let (tau, pair) = match cache.iter().find(|(key, _)| *key == (sigma, ratio)) {
                Some((_, v)) => v.clone(),
                None => {
                    let opts = Design1dOptions {
                        sigma,
                        numerics: *num,
                        ratio_tol: 0.05,
                        max_iter: 16,
                    };
                    let sol = solve_ratio(ratio, &opts)?;
                    cache.push(((sigma, ratio), (sol.tau, sol.pair.clone())));
                    (sol.tau, sol.pair)
                }
            };
            solved[k] = Some(ComponentPlan {
                sigma,
                tau,
                mirrored,
                speeds: if mirrored { swapped(&pair) } else { pair },
            });
        }
    }
    for (k, t) in targets.iter().enumerate() {
        if let Target::MidSymmetric = t {
            let outer: Vec<f64> = solved.iter().flatten().map(|c| c.speeds.right.c).collect();
            let target = 0.5 * (outer[0] + outer[outer.len() - 1]);
            let (sigma, pair) = symmetric_with_speed(target, num)?;
            solved[k] = Some(ComponentPlan {
                sigma,
                tau: 1.0,
                mirrored: false,
                speeds: pair,
            });
        }
    }
    let components: Vec<ComponentPlan> = solved.into_iter().flatten().collect();
    if !ordering_holds(variant, &components) {
        let speeds: Vec<(f64, f64)> = components.iter().map(|c| (c.speeds.left.c, c.speeds.right.c)).collect();
        return Err(Error::Design(format!(
            "component speeds (cL, cR) = {speeds:?} do not satisfy the ordering of variant {variant:?}"
        )));
    }
    let layers = components
        .iter()
        .map(|c| {
            let r = Reaction::family_1d(c.tau, c.sigma)?;
            Ok(if c.mirrored { r.mirror() } else { r })
        })
        .collect::<Result<Vec<_>>>()?;
    let reaction = Reaction::stack(layers)?;
    let top = components.len();
    let all: Vec<f64> = (0..=top).rev().map(|k| k as f64).collect();
    let (expected_right, expected_left) = match variant {
        Variant::I => (all.clone(), all),
        Variant::II => (vec![3.0, 1.0, 0.0], vec![3.0, 2.0, 0.0]),
        Variant::III => (vec![top as f64, 0.0], all),
    };
    Ok(TerraceScenario {
        variant,
        reaction,
        components,
        expected_right,
        expected_left,
    })
}

/// Numerics of a terrace run started from a single steep staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerraceNumerics {
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Room behind the start and ahead of the fastest expected front.
    pub margin: f64,
    pub snapshots: usize,
}

impl Default for TerraceNumerics {
    fn default() -> Self {
        Self {
            dx: 0.05,
            dt: 2.5e-3,
            t_end: 300.0,
            margin: 40.0,
            snapshots: 100,
        }
    }
}

/// Runs the scenario in direction `o` from `I U0` and extracts the terrace.
pub fn run_terrace(sc: &TerraceScenario, o: Orientation, num: &TerraceNumerics) -> Result<(TerraceReport, Trajectory)> {
    let r = &sc.reaction;
    let s = r.length_scale();
    let c_max = sc
        .components
        .iter()
        .map(|c| c.speeds.left.c.max(c.speeds.right.c))
        .fold(0.0, f64::max);
    let t_end = num.t_end * s * s;
    let reach = num.margin * s + 1.2 * c_max * t_end;
    let (a, b) = match o {
        Orientation::RightMoving => (-num.margin * s, reach),
        Orientation::LeftMoving => (-reach, num.margin * s),
    };
    let grid = Grid1D::spanning(a, b, num.dx * s)?;
    let field = front_initial_for(grid, r, o)?;
    let mut cfg = SolverConfig {
        dt: num.dt * s * s,
        ..SolverConfig::for_reaction(r, t_end)
    };
    cfg.snapshot_every = Some((cfg.steps() / num.snapshots.max(1)).max(1));
    let levels = r.levels();
    let obs = Observers {
        levels: levels.windows(2).rev().map(|w| 0.5 * (w[0] + w[1])).collect(),
        orientation: o,
    };
    let (traj, _) = evolve(field, r, &cfg, &obs)?;
    let mut candidates = levels.to_vec();
    candidates.reverse();
    let report = extract_terrace(&traj, &candidates, TerraceOptions::new(r.delta0(), s))?;
    Ok((report, traj))
}
