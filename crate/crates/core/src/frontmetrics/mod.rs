//! Front positions, speeds, decay rates and terrace structure measured from
//! simulated trajectories.

use crate::error::{Error, Result};
use crate::solver::{Field1D, Orientation, Snapshot, Trajectory};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default fraction of the run discarded as transient.
pub const DEFAULT_DISCARD: f64 = 0.5;
/// Minimum number of samples kept for a speed fit.
pub const MIN_SAMPLES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedClass {
    Positive,
    Zero,
    Negative,
    Inconclusive,
}

impl SpeedClass {
    pub fn name(self) -> &'static str {
        match self {
            SpeedClass::Positive => "positive",
            SpeedClass::Zero => "zero",
            SpeedClass::Negative => "negative",
            SpeedClass::Inconclusive => "inconclusive",
        }
    }

    /// Whether two classifications are strictly positive and strictly
    /// negative.
    pub fn opposite(self, other: SpeedClass) -> bool {
        matches!(
            (self, other),
            (SpeedClass::Positive, SpeedClass::Negative) | (SpeedClass::Negative, SpeedClass::Positive)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// First-passage times of whole periods.
    PeriodSynchronized,
    /// Least squares over all retained samples.
    Raw,
}

/// Speed measured in the invasion direction: positive when the upper state
/// advances into the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub c: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub class: SpeedClass,
    /// Signed displacement over the window.
    pub displacement: f64,
    pub method: FitMethod,
}

/// Crossings of `level`, ordered.
pub fn front_position(field: &Field1D, level: f64) -> Vec<f64> {
    field.crossings(level)
}

pub(crate) struct LineFit {
    pub slope: f64,
    pub stderr: f64,
    pub rms: f64,
}

pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let stderr = if sxx > 0.0 {
        (ssr / dof / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LineFit {
        slope,
        stderr,
        rms: (ssr / n).sqrt(),
    }
}

/// Speed from a series of `(t, p)` where `p` is the position measured in
/// the invasion direction, for a medium of period `period`.
pub fn estimate_speed_series(series: &[(f64, f64)], period: f64, discard: f64) -> Result<SpeedEstimate> {
    if series.is_empty() {
        return Err(Error::InsufficientSamples("empty series".into()));
    }
    if !(0.0..1.0).contains(&discard) {
        return Err(Error::InvalidParameter(format!(
            "discard fraction must lie in [0,1), got {discard}"
        )));
    }
    let t0 = series[0].0;
    let t1 = series[series.len() - 1].0;
    let start = t0 + discard * (t1 - t0);
    let kept: Vec<(f64, f64)> = series.iter().copied().filter(|(t, _)| *t >= start).collect();
    if kept.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} samples after discarding, need {MIN_SAMPLES}",
            kept.len()
        )));
    }
    if kept.iter().any(|(_, p)| !p.is_finite()) {
        return Err(Error::InsufficientSamples(
            "front lost during the measurement window".into(),
        ));
    }
    let (ta, pa) = kept[0];
    let (tb, pb) = kept[kept.len() - 1];
    let d = pb - pa;
    let tq = tb - 0.25 * (tb - ta);
    let pq = kept.iter().find(|(t, _)| *t >= tq).map(|(_, p)| *p).unwrap_or(pb);
    let dq = pb - pq;

    let passages = if d.abs() >= 4.0 * period {
        first_passages(&kept, period, d.signum())
    } else {
        Vec::new()
    };
    let (fit, method) = if passages.len() >= 4 {
        let ts: Vec<f64> = passages.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = passages.iter().map(|p| p.1).collect();
        (line_fit(&ts, &ys), FitMethod::PeriodSynchronized)
    } else {
        let ts: Vec<f64> = kept.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = kept.iter().map(|p| p.1).collect();
        (line_fit(&ts, &ys), FitMethod::Raw)
    };
    let c = fit.slope;
    let class = if d.abs() < 0.5 * period && dq.abs() < 0.1 * period {
        SpeedClass::Zero
    } else if c > 3.0 * fit.stderr {
        SpeedClass::Positive
    } else if c < -3.0 * fit.stderr {
        SpeedClass::Negative
    } else {
        SpeedClass::Inconclusive
    };
    Ok(SpeedEstimate {
        c,
        stderr: fit.stderr,
        window: (ta, tb),
        class,
        displacement: d,
        method,
    })
}

/// Times at which the position first advances by whole periods past its
/// initial value, with the corresponding target positions.
fn first_passages(kept: &[(f64, f64)], period: f64, dir: f64) -> Vec<(f64, f64)> {
    let p0 = kept[0].1;
    let mut out = Vec::new();
    let mut k = 1;
    for w in kept.windows(2) {
        let (ta, pa) = w[0];
        let (tb, pb) = w[1];
        loop {
            let target = p0 + dir * k as f64 * period;
            let (sa, sb) = (dir * (pa - target), dir * (pb - target));
            if sb < 0.0 {
                break;
            }
            let s = if sa < 0.0 { sa / (sa - sb) } else { 0.0 };
            out.push((ta + s * (tb - ta), target));
            k += 1;
        }
    }
    out
}

fn level_index(traj: &Trajectory, level: f64) -> Result<usize> {
    traj.levels
        .iter()
        .position(|p| (p - level).abs() <= 1e-12 * (1.0 + level.abs()))
        .ok_or_else(|| Error::InvalidParameter(format!("level {level} was not observed")))
}

/// Speed of the front tracked at `level`, in the invasion direction of the
/// trajectory's orientation.
pub fn estimate_speed(traj: &Trajectory, level: f64, discard: f64) -> Result<SpeedEstimate> {
    let k = level_index(traj, level)?;
    let s = traj.orientation.sign();
    let series: Vec<(f64, f64)> = traj.records.iter().map(|r| (r.t, s * r.positions[k])).collect();
    estimate_speed_series(&series, traj.period, discard)
}

/// Largest deviation from the pulsating relation `u(t + L/|c|, x + L) =
/// u(t, x)` (with the spatial shift taken in the direction of motion)
/// over snapshot pairs after the discarded transient.
pub fn check_pulsating_relation(traj: &Trajectory, period: f64, c: f64, discard: f64) -> Result<f64> {
    if c == 0.0 || !c.is_finite() {
        return Err(Error::InvalidParameter(
            "pulsating relation needs a nonzero speed".into(),
        ));
    }
    let snaps = &traj.snapshots;
    if snaps.len() < 2 {
        return Err(Error::Cadence("fewer than two snapshots".into()));
    }
    let lag = period / c.abs();
    let dxs = c.signum() * traj.orientation.sign() * period;
    let spacing = snaps.windows(2).map(|w| w[1].t - w[0].t).fold(0.0f64, f64::max);
    if spacing > 0.1 * lag {
        return Err(Error::Cadence(format!(
            "snapshot spacing {spacing} exceeds a tenth of the period time {lag}"
        )));
    }
    let (t0, t1) = (snaps[0].t, snaps[snaps.len() - 1].t);
    let start = t0 + discard * (t1 - t0);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for a in snaps.iter().filter(|s| s.t >= start) {
        let target = a.t + lag;
        if target > t1 {
            break;
        }
        let j = snaps.partition_point(|s| s.t < target).max(1);
        let (b0, b1) = (&snaps[j - 1], &snaps[j.min(snaps.len() - 1)]);
        let w = if b1.t > b0.t {
            (target - b0.t) / (b1.t - b0.t)
        } else {
            0.0
        };
        let margin = 5.0 * a.dx;
        for (i, ua) in a.values.iter().enumerate() {
            let x = a.x_start + i as f64 * a.dx;
            let y = x + dxs;
            if !inside(b0, y, margin) || !inside(b1, y, margin) || !inside(a, x, margin) {
                continue;
            }
            let v = (1.0 - w) * b0.value_at(y).unwrap() + w * b1.value_at(y).unwrap();
            worst = worst.max((v - ua).abs());
        }
        pairs += 1;
    }
    if pairs == 0 {
        return Err(Error::Cadence(format!(
            "run too short: no snapshot pair separated by {lag} after the transient"
        )));
    }
    Ok(worst)
}

fn inside(s: &Snapshot, x: f64, margin: f64) -> bool {
    let end = s.x_start + (s.values.len() - 1) as f64 * s.dx;
    x >= s.x_start + margin && x <= end - margin
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Toward the lower state, into which the front advances.
    Ahead,
    /// Toward the upper state, left behind by the front.
    Behind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub side: Tail,
    pub rate: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
    pub theoretical: f64,
    pub points: usize,
}

impl DecayFit {
    pub fn relative_error(&self) -> f64 {
        (self.rate - self.theoretical).abs() / self.theoretical
    }
}

/// Range of deviations from the limit state used by [`fit_decay`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayWindow {
    pub min_dev: f64,
    pub max_dev: f64,
    /// Nodes next to each boundary left out of the fit.
    pub boundary_nodes: usize,
}

impl Default for DecayWindow {
    fn default() -> Self {
        Self {
            min_dev: 1e-9,
            max_dev: 1e-3,
            boundary_nodes: 5,
        }
    }
}

/// Decay rate ahead of a front with speed `c` into a state with reaction
/// slope `slope < 0`.
pub fn decay_rate_ahead(c: f64, slope: f64) -> f64 {
    0.5 * (c + (c * c - 4.0 * slope).sqrt())
}

/// Decay rate behind a front with speed `c` toward a state with reaction
/// slope `slope < 0`.
pub fn decay_rate_behind(c: f64, slope: f64) -> f64 {
    0.5 * (-c + (c * c - 4.0 * slope).sqrt())
}

/// Log-linear fits of `|u - limit|` on both tails of a front profile.
/// `limits = (upper, lower)`, `slopes` are `f_u` at those states.
pub fn fit_decay(
    field: &Field1D,
    orientation: Orientation,
    limits: (f64, f64),
    slopes: (f64, f64),
    c: f64,
    window: DecayWindow,
) -> Result<(DecayFit, DecayFit)> {
    if window.min_dev < 1e-12 {
        return Err(Error::DecayWindow(format!(
            "lower deviation bound {:e} is below the floating-point floor 1e-12",
            window.min_dev
        )));
    }
    if !(window.max_dev > window.min_dev) {
        return Err(Error::DecayWindow("empty deviation range".into()));
    }
    let (upper, lower) = limits;
    let mid = 0.5 * (upper + lower);
    let cr = field.crossings(mid);
    let front = match orientation {
        Orientation::RightMoving => cr.last(),
        Orientation::LeftMoving => cr.first(),
    }
    .copied()
    .ok_or_else(|| Error::DecayWindow("no front in the field".into()))?;
    let s = orientation.sign();
    let n = field.values.len();
    let nb = window.boundary_nodes;
    let fit_side = |side: Tail| -> Result<DecayFit> {
        let (limit, dir, theo) = match side {
            Tail::Ahead => (lower, s, decay_rate_ahead(c, slopes.1)),
            Tail::Behind => (upper, -s, decay_rate_behind(c, slopes.0)),
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in nb..n.saturating_sub(nb) {
            let x = field.x(i);
            if dir * (x - front) <= 0.0 {
                continue;
            }
            let dev = (field.values[i] - limit).abs();
            if dev >= window.min_dev && dev <= window.max_dev {
                // distance from the front along the tail
                xs.push(dir * (x - front));
                ys.push(dev.ln());
            }
        }
        if xs.len() < 5 {
            return Err(Error::DecayWindow(format!(
                "only {} nodes of the {side:?} tail fall in the deviation window",
                xs.len()
            )));
        }
        let fit = line_fit(&xs, &ys);
        Ok(DecayFit {
            side,
            rate: -fit.slope,
            residual: fit.rms,
            theoretical: theo,
            points: xs.len(),
        })
    };
    let ahead = fit_side(Tail::Ahead)?;
    let behind = fit_side(Tail::Behind)?;
    Ok((ahead, behind))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauFit {
    pub level: f64,
    /// Growth rate of the plateau width.
    pub slope: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerraceFront {
    pub upper: f64,
    pub lower: f64,
    pub level: f64,
    pub speed: SpeedEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerraceReport {
    pub orientation: Orientation,
    /// Strictly decreasing, from the top state to the bottom state.
    pub platforms: Vec<f64>,
    /// Fronts from the rearmost (highest) to the leading one.
    pub fronts: Vec<TerraceFront>,
    pub plateaus: Vec<PlateauFit>,
    pub verdict: Verdict,
}

impl TerraceReport {
    /// Platforms strictly between the extremes.
    pub fn intermediate(&self) -> &[f64] {
        let n = self.platforms.len();
        if n <= 2 {
            &[]
        } else {
            &self.platforms[1..n - 1]
        }
    }

    /// CSV with header `level,c,stderr,class`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,c,stderr,class\n");
        for f in &self.fronts {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                f.level,
                f.speed.c,
                f.speed.stderr,
                f.speed.class.name()
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "direction {}: platforms {:?}, verdict {:?}\n",
            self.orientation.name(),
            self.platforms,
            self.verdict
        );
        for (k, f) in self.fronts.iter().enumerate() {
            let _ = writeln!(
                s,
                "  front {} ({} -> {}): c = {:.6} +- {:.2e} [{}]",
                k + 1,
                f.upper,
                f.lower,
                f.speed.c,
                f.speed.stderr,
                f.speed.class.name()
            );
        }
        s
    }
}

/// Options for [`extract_terrace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerraceOptions {
    /// Half-width of the state band counted as lying on a platform.
    pub band: f64,
    /// Minimal plateau growth rate (length per time) for a platform.
    pub min_growth: f64,
    pub discard: f64,
}

impl TerraceOptions {
    pub fn new(delta0: f64, length_scale: f64) -> Self {
        Self {
            band: 0.5 * delta0,
            min_growth: 0.01 * length_scale,
            discard: DEFAULT_DISCARD,
        }
    }
}

/// Detects platforms among `candidates` from the snapshots of a run started
/// from a monotone staircase, then measures the speed of each front between
/// consecutive platforms and checks that the speeds are ordered.
pub fn extract_terrace(traj: &Trajectory, candidates: &[f64], opts: TerraceOptions) -> Result<TerraceReport> {
    let snaps = &traj.snapshots;
    if snaps.len() < 2 * MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "terrace extraction needs {} snapshots, got {}",
            2 * MIN_SAMPLES,
            snaps.len()
        )));
    }
    let mut levels: Vec<f64> = candidates.to_vec();
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
    levels.dedup();
    if levels.len() < 2 {
        return Err(Error::InvalidParameter("need at least the two extreme levels".into()));
    }
    let top = levels[0];
    let bottom = levels[levels.len() - 1];
    let (t0, t1) = (snaps[0].t, snaps[snaps.len() - 1].t);
    let start = t0 + opts.discard * (t1 - t0);
    let late: Vec<&Snapshot> = snaps.iter().filter(|s| s.t >= start).collect();

    let mut plateaus = Vec::new();
    let mut platforms = vec![top];
    let mut inconclusive = false;
    for &q in &levels[1..levels.len() - 1] {
        let ts: Vec<f64> = late.iter().map(|s| s.t).collect();
        let ws: Vec<f64> = late
            .iter()
            .map(|s| s.values.iter().filter(|v| (*v - q).abs() < opts.band).count() as f64 * s.dx)
            .collect();
        let fit = line_fit(&ts, &ws);
        if fit.slope > opts.min_growth {
            platforms.push(q);
            if fit.stderr > 0.5 * fit.slope {
                inconclusive = true;
            }
        }
        plateaus.push(PlateauFit {
            level: q,
            slope: fit.slope,
            stderr: fit.stderr,
        });
    }
    platforms.push(bottom);

    let sgn = traj.orientation.sign();
    let mut fronts = Vec::new();
    for w in platforms.windows(2) {
        let level = 0.5 * (w[0] + w[1]);
        let series: Vec<(f64, f64)> = snaps
            .iter()
            .map(|s| {
                let cr = crate::solver::crossings(&s.values, s.x_start, s.dx, level);
                let p = match traj.orientation {
                    Orientation::RightMoving => cr.last(),
                    Orientation::LeftMoving => cr.first(),
                };
                (s.t, p.map_or(f64::NAN, |p| sgn * p))
            })
            .collect();
        let speed = estimate_speed_series(&series, traj.period, opts.discard)?;
        if speed.class == SpeedClass::Inconclusive {
            inconclusive = true;
        }
        fronts.push(TerraceFront {
            upper: w[0],
            lower: w[1],
            level,
            speed,
        });
    }
    let ordered = fronts.windows(2).all(|w| {
        let (a, b) = (&w[0].speed, &w[1].speed);
        a.c <= b.c + 3.0 * (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
    });
    let verdict = if !ordered {
        Verdict::Invalid
    } else if inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::Valid
    };
    Ok(TerraceReport {
        orientation: traj.orientation,
        platforms,
        fronts,
        plateaus,
        verdict,
    })
}
