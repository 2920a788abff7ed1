//! Inverse problems: reactions with prescribed front speeds, terrace
//! scenarios built from stacked components, and the spreading envelope.

mod directions;
mod terrace;

pub use directions::{fg_envelope, rational_directions, RationalDirection};
pub use terrace::{run_terrace, terrace_scenario, ComponentPlan, TerraceNumerics, TerraceScenario, Variant};

use crate::error::{Error, Result};
use crate::frontmetrics::{estimate_speed, SpeedClass, SpeedEstimate, DEFAULT_DISCARD};
use crate::reaction::{MultiDirParams, Reaction, DEFAULT_DELTA0};
use crate::solver::{
    evolve, evolve_2d, front_initial_2d, front_initial_for, Grid1D, Grid2D, Observers, Orientation, Scheme,
    SolverConfig,
};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[cfg(test)]
mod tests;

/// Numerics of a 1-D speed measurement. Lengths are in units of the
/// reaction's length scale and times in units of its square, so a rescaled
/// reaction is measured on the equivalent grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedNumerics {
    pub half_width: f64,
    pub dx: f64,
    pub dt: f64,
    pub t_end: f64,
    pub recenter: f64,
    pub discard: f64,
    pub scheme: Scheme,
}

impl Default for SpeedNumerics {
    fn default() -> Self {
        Self {
            half_width: 40.0,
            dx: 0.05,
            dt: 2.5e-3,
            t_end: 200.0,
            recenter: 5.0,
            discard: DEFAULT_DISCARD,
            scheme: Scheme::CnImex,
        }
    }
}

impl SpeedNumerics {
    /// Shorter runs used inside design loops.
    pub fn design() -> Self {
        Self {
            half_width: 30.0,
            t_end: 150.0,
            ..Self::default()
        }
    }
}

/// Speed of the front between the extreme levels of a 1-D reaction.
pub fn measure_speed(r: &Reaction, o: Orientation, num: &SpeedNumerics) -> Result<SpeedEstimate> {
    if r.dim() != 1 {
        return Err(Error::InvalidParameter(
            "1-D speed measurement needs a 1-D reaction".into(),
        ));
    }
    let s = r.length_scale();
    let grid = Grid1D::centered(num.half_width * s, num.dx * s)?;
    let field = front_initial_for(grid, r, o)?;
    let cfg = SolverConfig {
        dt: num.dt * s * s,
        scheme: num.scheme,
        recenter_threshold: Some(num.recenter * s),
        ..SolverConfig::for_reaction(r, num.t_end * s * s)
    };
    let obs = Observers::midlevel(r, o);
    let (traj, _) = evolve(field, r, &cfg, &obs)?;
    estimate_speed(&traj, obs.levels[0], num.discard)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedPair {
    pub left: SpeedEstimate,
    pub right: SpeedEstimate,
}

impl SpeedPair {
    pub fn ratio(&self) -> f64 {
        self.right.c / self.left.c
    }
}

/// Leftward and rightward speeds from two independent runs.
pub fn speed_pair_of(r: &Reaction, num: &SpeedNumerics) -> Result<SpeedPair> {
    let (left, right) = rayon::join(
        || measure_speed(r, Orientation::LeftMoving, num),
        || measure_speed(r, Orientation::RightMoving, num),
    );
    let (left, right) = (left?, right?);
    for (e, side) in [(&left, "leftward"), (&right, "rightward")] {
        if e.class == SpeedClass::Inconclusive {
            return Err(Error::InsufficientSamples(format!(
                "{side} speed inconclusive: c = {:e} +- {:e}",
                e.c, e.stderr
            )));
        }
    }
    if left.class.opposite(right.class) {
        return Err(Error::Design(format!(
            "leftward and rightward speeds have opposite signs ({:e}, {:e})",
            left.c, right.c
        )));
    }
    Ok(SpeedPair { left, right })
}

pub fn speed_pair(tau: f64, sigma: f64, num: &SpeedNumerics) -> Result<SpeedPair> {
    speed_pair_of(&Reaction::family_1d(tau, sigma)?, num)
}

/// Sampled speeds of the 1-D family over a grid of `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedMap {
    pub sigma: f64,
    pub taus: Vec<f64>,
    pub pairs: Vec<SpeedPair>,
}

impl SpeedMap {
    pub fn sample(taus: &[f64], sigma: f64, num: &SpeedNumerics) -> Result<Self> {
        use rayon::prelude::*;
        let pairs = taus
            .par_iter()
            .map(|&t| speed_pair(t, sigma, num))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sigma,
            taus: taus.to_vec(),
            pairs,
        })
    }

    /// Consecutive grid points where a speed decreases by more than three
    /// combined standard errors, as `(index, side)`.
    pub fn monotonicity_violations(&self) -> Vec<(usize, &'static str)> {
        let mut out = Vec::new();
        for k in 1..self.pairs.len() {
            let (a, b) = (&self.pairs[k - 1], &self.pairs[k]);
            for (x, y, side) in [(&a.left, &b.left, "left"), (&a.right, &b.right, "right")] {
                if y.c < x.c - 3.0 * x.stderr.hypot(y.stderr) {
                    out.push((k, side));
                }
            }
        }
        out
    }

    /// CSV with header `tau,cL,cL_stderr,cL_class,cR,cR_stderr,cR_class`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,cL,cL_stderr,cL_class,cR,cR_stderr,cR_class\n");
        for (t, p) in self.taus.iter().zip(&self.pairs) {
            let _ = writeln!(
                s,
                "{t},{},{},{},{},{},{}",
                p.left.c,
                p.left.stderr,
                p.left.class.name(),
                p.right.c,
                p.right.stderr,
                p.right.class.name()
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub tau: Vec<f64>,
    pub speeds: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct DesignResult {
    /// Empty when the parameter is irrelevant (both targets zero).
    pub tau: Vec<f64>,
    pub nu: f64,
    pub reaction: Reaction,
    pub targets: Vec<f64>,
    pub achieved: Vec<SpeedEstimate>,
    pub log: Vec<LogEntry>,
    /// Column names of the achieved speeds, e.g. `cL,cR`.
    pub speed_names: Vec<String>,
}

impl DesignResult {
    pub fn relative_errors(&self) -> Vec<f64> {
        self.targets
            .iter()
            .zip(&self.achieved)
            .map(|(t, a)| {
                if *t == 0.0 {
                    a.c.abs()
                } else {
                    (a.c - t).abs() / t.abs()
                }
            })
            .collect()
    }

    /// CSV of the iteration log with header `iter,tau...,<speeds>,residual`.
    pub fn log_csv(&self) -> String {
        let nt = self.log.first().map_or(self.tau.len(), |e| e.tau.len());
        let mut s = String::from("iter");
        if nt == 1 {
            s.push_str(",tau");
        } else {
            for j in 0..nt {
                let _ = write!(s, ",tau_{}", j + 1);
            }
        }
        for n in &self.speed_names {
            let _ = write!(s, ",{n}");
        }
        s.push_str(",residual\n");
        for e in &self.log {
            let _ = write!(s, "{}", e.iter);
            for t in &e.tau {
                let _ = write!(s, ",{t}");
            }
            for c in &e.speeds {
                let _ = write!(s, ",{c}");
            }
            let _ = writeln!(s, ",{}", e.residual);
        }
        s
    }

    pub fn report(&self) -> String {
        let mut s = format!("tau = {:?}\nnu = {}\n", self.tau, self.nu);
        for ((n, t), a) in self.speed_names.iter().zip(&self.targets).zip(&self.achieved) {
            let _ = writeln!(
                s,
                "{n}: target {t}, achieved {:.6} +- {:.2e} [{}]",
                a.c,
                a.stderr,
                a.class.name()
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Design1dOptions {
    pub sigma: f64,
    pub numerics: SpeedNumerics,
    /// Accepted deviation of `cR/cL` from the target ratio, relative to it.
    pub ratio_tol: f64,
    pub max_iter: usize,
}

impl Default for Design1dOptions {
    fn default() -> Self {
        Self {
            sigma: crate::reaction::DEFAULT_SIGMA,
            numerics: SpeedNumerics::design(),
            ratio_tol: 0.01,
            max_iter: 40,
        }
    }
}

/// Outcome of the search for `tau` with a prescribed speed ratio.
#[derive(Debug, Clone)]
pub struct RatioSolution {
    pub tau: f64,
    pub pair: SpeedPair,
    pub log: Vec<LogEntry>,
}

fn ratio_entry(iter: usize, tau: f64, p: &SpeedPair, gamma: f64) -> LogEntry {
    LogEntry {
        iter,
        tau: vec![tau],
        speeds: vec![p.left.c, p.right.c],
        residual: p.ratio() - gamma,
    }
}

/// Finds `tau` in `[0, 1]` with `cR/cL = gamma` for the family at `sigma`,
/// by bisection with a 21-point scan when monotonicity fails.
pub fn solve_ratio(gamma: f64, opts: &Design1dOptions) -> Result<RatioSolution> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("speed ratio {gamma} outside [0, 1]")));
    }
    let num = &opts.numerics;
    let tol = opts.ratio_tol * gamma.max(1e-3);
    let mut log = Vec::new();
    if gamma == 0.0 || gamma == 1.0 {
        let tau = gamma;
        let pair = speed_pair(tau, opts.sigma, num)?;
        log.push(ratio_entry(0, tau, &pair, gamma));
        return Ok(RatioSolution { tau, pair, log });
    }
    let (mut lo, mut hi) = ((0.0, 0.0), (1.0, 1.0));
    let mut scanned = false;
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        let mid = 0.5 * (lo.0 + hi.0);
        let pair = speed_pair(mid, opts.sigma, num)?;
        let rho = pair.ratio();
        log.push(ratio_entry(iter, mid, &pair, gamma));
        if (rho - gamma).abs() <= tol {
            return Ok(RatioSolution { tau: mid, pair, log });
        }
        let consistent = rho >= lo.1 - tol && rho <= hi.1 + tol;
        if !consistent && !scanned {
            scanned = true;
            let (a, b) = scan_bracket(gamma, opts, &mut log, &mut iter)?;
            lo = a;
            hi = b;
            continue;
        }
        if rho < gamma {
            lo = (mid, rho);
        } else {
            hi = (mid, rho);
        }
        if hi.0 - lo.0 < 1e-6 {
            break;
        }
    }
    Err(Error::Design(format!(
        "ratio bracket [{}, {}] collapsed with ratios ({}, {}) without reaching {gamma} +- {tol}",
        lo.0, hi.0, lo.1, hi.1
    )))
}

fn scan_bracket(
    gamma: f64,
    opts: &Design1dOptions,
    log: &mut Vec<LogEntry>,
    iter: &mut usize,
) -> Result<((f64, f64), (f64, f64))> {
    use rayon::prelude::*;
    let taus: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let pairs = taus
        .par_iter()
        .map(|&t| speed_pair(t, opts.sigma, &opts.numerics))
        .collect::<Result<Vec<_>>>()?;
    for (t, p) in taus.iter().zip(&pairs) {
        *iter += 1;
        log.push(ratio_entry(*iter, *t, p, gamma));
    }
    let rhos: Vec<f64> = pairs.iter().map(|p| p.ratio()).collect();
    (0..20)
        .find(|&k| (rhos[k] - gamma) * (rhos[k + 1] - gamma) <= 0.0)
        .map(|k| ((taus[k], rhos[k]), (taus[k + 1], rhos[k + 1])))
        .ok_or_else(|| Error::Design(format!("no sampled tau brackets the ratio {gamma}")))
}

/// A reaction whose leftward and rightward speeds are the targets.
///
/// Targets of equal sign are realized by the family at the `tau` matching
/// their ratio, rescaled so the faster speed is hit; a larger rightward
/// target mirrors the construction and negative targets take its dual.
pub fn design_1d(c_left: f64, c_right: f64, opts: &Design1dOptions) -> Result<DesignResult> {
    if !(c_left.is_finite() && c_right.is_finite()) {
        return Err(Error::InvalidParameter("targets must be finite".into()));
    }
    if c_left * c_right < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "targets ({c_left}, {c_right}) have opposite signs; both front speeds share the sign of the reaction integral"
        )));
    }
    let names = vec!["cL".to_string(), "cR".to_string()];
    if c_left == 0.0 && c_right == 0.0 {
        let reaction = Reaction::cubic(1)?;
        let p = speed_pair_of(&reaction, &opts.numerics)?;
        return Ok(DesignResult {
            tau: Vec::new(),
            nu: 1.0,
            reaction,
            targets: vec![0.0, 0.0],
            achieved: vec![p.left, p.right],
            log: Vec::new(),
            speed_names: names,
        });
    }
    let negative = c_left < 0.0 || c_right < 0.0;
    let (a, b) = (c_left.abs(), c_right.abs());
    let swap = b > a;
    let (fast, slow) = if swap { (b, a) } else { (a, b) };
    let sol = solve_ratio(slow / fast, opts)?;
    let nu = fast / sol.pair.left.c;
    let mut reaction = Reaction::family_1d(sol.tau, opts.sigma)?.rescale(nu)?;
    if swap {
        reaction = reaction.mirror();
    }
    if negative {
        reaction = reaction.dual();
    }
    let p = speed_pair_of(&reaction, &opts.numerics)?;
    Ok(DesignResult {
        tau: vec![sol.tau],
        nu,
        reaction,
        targets: vec![c_left, c_right],
        achieved: vec![p.left, p.right],
        log: sol.log,
        speed_names: names,
    })
}

/// Numerics of a planar speed measurement in the rotated frame, in units of
/// the reaction length scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarNumerics {
    pub half_width: f64,
    pub n_xi: usize,
    pub n_eta: usize,
    pub dt: f64,
    pub t_end: f64,
    pub recenter: f64,
    pub discard: f64,
}

impl Default for PlanarNumerics {
    /// Coarse grid used by the multi-direction design loop.
    fn default() -> Self {
        Self {
            half_width: 30.0,
            n_xi: 601,
            n_eta: 8,
            dt: 0.01,
            t_end: 80.0,
            recenter: 5.0,
            discard: DEFAULT_DISCARD,
        }
    }
}

/// Speed `c*(zeta)` of the planar front invading in direction `zeta`.
pub fn measure_speed_dir(r: &Reaction, zeta: [f64; 2], num: &PlanarNumerics) -> Result<SpeedEstimate> {
    let s = r.length_scale();
    let hw = num.half_width * s;
    let grid = Grid2D::for_reaction(r, zeta, -hw, hw, num.n_xi, num.n_eta)?;
    let o = Orientation::RightMoving;
    let field = front_initial_2d(grid, o, r.max_level(), r.min_level(), r.length_scale())?;
    let cfg = SolverConfig {
        dt: num.dt * s * s,
        recenter_threshold: Some(num.recenter * s),
        sample_every: 10,
        ..SolverConfig::for_reaction(r, num.t_end * s * s)
    };
    let obs = Observers::midlevel(r, o);
    let (traj, _) = evolve_2d(field, r, &cfg, &obs)?;
    estimate_speed(&traj, obs.levels[0], num.discard)
}

/// Speeds in every direction, measured concurrently and returned in order.
pub fn measure_speeds_dirs(r: &Reaction, dirs: &[[f64; 2]], num: &PlanarNumerics) -> Result<Vec<SpeedEstimate>> {
    use rayon::prelude::*;
    dirs.par_iter().map(|z| measure_speed_dir(r, *z, num)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignNdOptions {
    pub sigma: f64,
    pub lattice: Vec<f64>,
    pub numerics: PlanarNumerics,
    /// Accepted relative deviation per direction.
    pub tol: f64,
    pub max_sweeps: usize,
    pub bisection_steps: usize,
}

impl Default for DesignNdOptions {
    fn default() -> Self {
        Self {
            sigma: crate::reaction::DEFAULT_SIGMA,
            lattice: vec![1.0, 1.0],
            numerics: PlanarNumerics::default(),
            tol: 0.03,
            max_sweeps: 12,
            bisection_steps: 12,
        }
    }
}

fn multidir(tau: &[f64], dirs: &[[f64; 2]], opts: &DesignNdOptions) -> Result<Reaction> {
    Reaction::family_multidir(MultiDirParams {
        tau: tau.to_vec(),
        sigma: opts.sigma,
        directions: dirs.iter().map(|d| d.to_vec()).collect(),
        lattice: opts.lattice.clone(),
        periods: None,
        delta0: DEFAULT_DELTA0,
    })
}

/// A planar reaction whose front speeds in `dirs` are proportional to
/// `targets`, then rescaled to match them.
///
/// The reachable box `[0, eta*]^N` is estimated from the unit vectors of the
/// parameter cube, the targets are scaled into it, and `G(tau) = targets` is
/// solved by cyclic bisection on one coordinate at a time.
pub fn design_multidir(targets: &[f64], dirs: &[[f64; 2]], opts: &DesignNdOptions) -> Result<DesignResult> {
    let n = targets.len();
    if n < 2 || dirs.len() != n {
        return Err(Error::InvalidParameter(
            "need one target per direction and at least two directions".into(),
        ));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("targets must be finite".into()));
    }
    let pos = targets.iter().any(|t| *t > 0.0);
    let neg = targets.iter().any(|t| *t < 0.0);
    if pos && neg {
        return Err(Error::InvalidParameter("targets must share one sign".into()));
    }
    let names: Vec<String> = (1..=n).map(|j| format!("c_{j}")).collect();
    let num = &opts.numerics;
    if !pos && !neg {
        let tau = vec![0.0; n];
        let reaction = multidir(&tau, dirs, opts)?;
        let achieved = measure_speeds_dirs(&reaction, dirs, num)?;
        return Ok(DesignResult {
            tau,
            nu: 1.0,
            reaction,
            targets: targets.to_vec(),
            achieved,
            log: Vec::new(),
            speed_names: names,
        });
    }
    let abs: Vec<f64> = targets.iter().map(|t| t.abs()).collect();

    use rayon::prelude::*;
    let corner_speeds = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            measure_speed_dir(&multidir(&e, dirs, opts)?, dirs[j], num)
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = corner_speeds.iter().map(|e| e.c).fold(f64::INFINITY, f64::min);
    if !(eta > 0.0) {
        return Err(Error::Design(format!("reachable speed box is empty (eta* = {eta})")));
    }
    let cmax = abs.iter().cloned().fold(0.0, f64::max);
    let scaled: Vec<f64> = abs.iter().map(|c| eta * c / cmax).collect();

    let mut tau = vec![0.0; n];
    let mut log = Vec::new();
    let mut iter = 0;
    let mut eval = |tau: &[f64], log: &mut Vec<LogEntry>| -> Result<Vec<f64>> {
        let r = multidir(tau, dirs, opts)?;
        let c: Vec<f64> = measure_speeds_dirs(&r, dirs, num)?.iter().map(|e| e.c).collect();
        iter += 1;
        let residual = c
            .iter()
            .zip(&scaled)
            .map(|(a, b)| if *b == 0.0 { a.abs() } else { (a - b).abs() / b })
            .fold(0.0, f64::max);
        log.push(LogEntry {
            iter,
            tau: tau.to_vec(),
            speeds: c.clone(),
            residual,
        });
        Ok(c)
    };
    let within = |c: &[f64], j: usize| (c[j] - scaled[j]).abs() <= opts.tol * scaled[j];
    let mut current = eval(&tau, &mut log)?;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..opts.max_sweeps {
        for j in 0..n {
            if scaled[j] == 0.0 || within(&current, j) {
                continue;
            }
            let (mut lo, mut hi) = (0.0, 1.0);
            if current[j] < scaled[j] {
                lo = tau[j];
            } else {
                hi = tau[j];
            }
            for _ in 0..opts.bisection_steps {
                tau[j] = 0.5 * (lo + hi);
                current = eval(&tau, &mut log)?;
                if within(&current, j) {
                    break;
                }
                if current[j] < scaled[j] {
                    lo = tau[j];
                } else {
                    hi = tau[j];
                }
            }
        }
        let res = log.last().map_or(f64::INFINITY, |e| e.residual);
        if (0..n).all(|j| scaled[j] == 0.0 || within(&current, j)) {
            let nu = cmax / eta;
            let mut reaction = multidir(&tau, dirs, opts)?.rescale(nu)?;
            if neg {
                reaction = reaction.dual();
            }
            let achieved = measure_speeds_dirs(&reaction, dirs, num)?;
            return Ok(DesignResult {
                tau,
                nu,
                reaction,
                targets: targets.to_vec(),
                achieved,
                log,
                speed_names: names,
            });
        }
        if res < best - opts.tol * 0.1 {
            best = res;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        }
    }
    let resid: Vec<f64> = current.iter().zip(&scaled).map(|(a, b)| a - b).collect();
    Err(Error::Design(format!(
        "cyclic bisection stalled; residual vector {resid:?}"
    )))
}
