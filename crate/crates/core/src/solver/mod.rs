//! Finite-difference integration of `u_t = Laplacian u + f(x, u)`.
//!
//! Diffusion is implicit (Crank-Nicolson or backward Euler through a
//! prefactored tridiagonal solve) and the reaction explicit. In two
//! dimensions the equation is written in a frame rotated onto a lattice
//! direction, periodic transversally, and diffusion is split into
//! implicit sweeps.

mod grid;
mod tridiag;
mod two_d;

pub use grid::{Grid1D, Grid2D};
pub use tridiag::{CyclicTridiag, Tridiag};
pub use two_d::{evolve_2d, front_initial_2d, step_2d, Field2D};

use crate::error::{Error, Result};
use crate::reaction::{kink, Reaction};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Default spatial step in units of the reaction length scale.
pub const DEFAULT_DX: f64 = 0.05;
/// Default time step in units of the squared reaction length scale.
pub const DEFAULT_DT: f64 = 2.5e-3;
/// Deviation from the limit state tolerated next to the boundary.
pub const CONTAMINATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CnImex,
    BeImex,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Dirichlet values snapped to the nearest stable level.
    ClampToLevels,
    /// Homogeneous Neumann via reflected ghost nodes.
    ZeroFlux,
}

/// Which way the upper state invades: right-moving fronts have the upper
/// state on the left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    RightMoving,
    LeftMoving,
}

impl Orientation {
    /// `+1` for right-moving, `-1` for left-moving.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::RightMoving => 1.0,
            Orientation::LeftMoving => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::RightMoving => "right",
            Orientation::LeftMoving => "left",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub boundary: Boundary,
    /// Steps between trajectory records.
    pub sample_every: usize,
    /// Steps between stored field snapshots.
    pub snapshot_every: Option<usize>,
    /// Recenter when the tracked front is farther than this from the
    /// window center.
    pub recenter_threshold: Option<f64>,
    /// Fail when the field departs from the limit state next to a boundary
    /// by more than this.
    pub contamination_tol: Option<f64>,
}

impl SolverConfig {
    /// Default numerics scaled to the reaction's length unit.
    pub fn for_reaction(r: &Reaction, t_end: f64) -> Self {
        let s = r.length_scale();
        Self {
            dt: DEFAULT_DT * s * s,
            t_end,
            scheme: Scheme::CnImex,
            boundary: Boundary::ClampToLevels,
            sample_every: 40,
            snapshot_every: None,
            recenter_threshold: None,
            contamination_tol: Some(CONTAMINATION_TOL),
        }
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Checks the time-step restrictions for grid spacing `dx` in `dim`
    /// dimensions.
    pub fn validate(&self, dx: f64, dim: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.sample_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::InvalidParameter("sampling cadences must be positive".into()));
        }
        if self.scheme == Scheme::Explicit && self.dt > dx * dx / (2.0 * dim as f64) * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "explicit scheme needs dt <= dx^2/(2d) = {}",
                dx * dx / (2.0 * dim as f64)
            )));
        }
        Ok(())
    }

    /// Whether the discrete comparison principle is guaranteed: backward
    /// Euler diffusion and `dt Lip_u(f) <= 1/2`.
    pub fn comparison_safe(&self, r: &Reaction) -> bool {
        self.scheme == Scheme::BeImex && self.dt * r.lipschitz_u() <= 0.5
    }
}

/// Node values on a 1-D grid translated by `offset` whole nodes:
/// node `i` sits at `x_min + (offset + i) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    pub grid: Grid1D,
    pub offset: i64,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field1D {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nx {
            return Err(Error::InvalidParameter("field length does not match grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(Self {
            grid,
            offset: 0,
            t: 0.0,
            values,
        })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let v = (0..grid.nx).map(|i| f(grid.x(i))).collect();
        Self::new(grid, v)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.grid.x_min + (self.offset + i as i64) as f64 * self.grid.dx()
    }

    pub fn x_start(&self) -> f64 {
        self.x(0)
    }

    /// Cumulative translation of the window.
    pub fn shift(&self) -> f64 {
        self.offset as f64 * self.grid.dx()
    }

    /// All crossings of `level`, ordered.
    pub fn crossings(&self, level: f64) -> Vec<f64> {
        crossings(&self.values, self.x_start(), self.grid.dx(), level)
    }

    /// CSV with header `x,u`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,u\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{}", self.x(i), v);
        }
        s
    }
}

/// Sign changes of `u - level` located by linear interpolation.
pub(crate) fn crossings(values: &[f64], x_start: f64, dx: f64, level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..values.len().saturating_sub(1) {
        let a = values[i] - level;
        let b = values[i + 1] - level;
        if (a >= 0.0) != (b >= 0.0) {
            out.push(x_start + dx * (i as f64 + a / (a - b)));
        }
    }
    out
}

/// Crossing nearest the invaded side.
fn leading(cr: &[f64], o: Orientation) -> Option<f64> {
    match o {
        Orientation::RightMoving => cr.last().copied(),
        Orientation::LeftMoving => cr.first().copied(),
    }
}

/// Kink front from `upper` to `lower` centered at `x0`: the upper state
/// lies on the left for right-moving fronts and on the right otherwise.
pub fn front_initial_at(grid: Grid1D, o: Orientation, upper: f64, lower: f64, x0: f64) -> Result<Field1D> {
    if !(upper > lower) {
        return Err(Error::InvalidParameter(format!(
            "need upper > lower, got {upper} <= {lower}"
        )));
    }
    let s = o.sign();
    Field1D::from_fn(grid, |x| lower + (upper - lower) * kink(s * (x - x0)))
}

pub fn front_initial(grid: Grid1D, o: Orientation, upper: f64, lower: f64) -> Result<Field1D> {
    front_initial_at(grid, o, upper, lower, 0.0)
}

/// Front between the extreme levels of `r`, with the kink width measured
/// in the reaction's length unit.
pub fn front_initial_for(grid: Grid1D, r: &Reaction, o: Orientation) -> Result<Field1D> {
    let (upper, lower, l, s) = (r.max_level(), r.min_level(), r.length_scale(), o.sign());
    Field1D::from_fn(grid, |x| lower + (upper - lower) * kink(s * x / l))
}

/// Levels tracked during a run and the side from which crossings are read.
#[derive(Debug, Clone, PartialEq)]
pub struct Observers {
    pub levels: Vec<f64>,
    pub orientation: Orientation,
}

impl Observers {
    /// Midway between the extreme levels of `r`.
    pub fn midlevel(r: &Reaction, orientation: Orientation) -> Self {
        Self {
            levels: vec![0.5 * (r.min_level() + r.max_level())],
            orientation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    /// Absolute position per observed level; NaN without a crossing.
    pub positions: Vec<f64>,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub x_start: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    fn of(f: &Field1D) -> Self {
        Self {
            t: f.t,
            x_start: f.x_start(),
            dx: f.grid.dx(),
            values: f.values.clone(),
        }
    }

    /// Linear interpolation in space; `None` outside the sampled range.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let s = (x - self.x_start) / self.dx;
        let n = self.values.len();
        if s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        let w = s - i as f64;
        Some((1.0 - w) * self.values[i] + w * self.values[i + 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub orientation: Orientation,
    /// Spatial period of the medium along the direction of propagation.
    pub period: f64,
    pub levels: Vec<f64>,
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub recenterings: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    /// Position series for the observed level with index `k`.
    pub fn series(&self, k: usize) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.positions[k])).collect()
    }

    /// CSV with header `t,front_pos_level_<p>,...,shift`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for p in &self.levels {
            let _ = write!(s, ",front_pos_level_{p}");
        }
        s.push_str(",shift\n");
        for r in &self.records {
            let _ = write!(s, "{}", r.t);
            for p in &r.positions {
                let _ = write!(s, ",{p}");
            }
            let _ = writeln!(s, ",{}", r.shift);
        }
        s
    }
}

/// Prefactored one-step map for a fixed grid and configuration.
struct Stepper1D {
    theta: f64,
    r: f64,
    dt: f64,
    scheme: Scheme,
    boundary: Boundary,
    solver: Option<Tridiag>,
    rhs: Vec<f64>,
}

fn theta_of(s: Scheme) -> f64 {
    match s {
        Scheme::CnImex => 0.5,
        Scheme::BeImex => 1.0,
        Scheme::Explicit => 0.0,
    }
}

impl Stepper1D {
    fn new(grid: &Grid1D, cfg: &SolverConfig) -> Result<Self> {
        let dx = grid.dx();
        cfg.validate(dx, 1)?;
        let theta = theta_of(cfg.scheme);
        let r = cfg.dt / (dx * dx);
        let n = grid.nx;
        let solver = if theta > 0.0 {
            let (off, diag) = (-theta * r, 1.0 + 2.0 * theta * r);
            Some(match cfg.boundary {
                Boundary::ClampToLevels => Tridiag::constant(n - 2, off, diag, off),
                Boundary::ZeroFlux => {
                    let mut a = vec![off; n];
                    let mut c = vec![off; n];
                    c[0] = 2.0 * off;
                    a[n - 1] = 2.0 * off;
                    Tridiag::new(&a, &vec![diag; n], &c)
                }
            })
        } else {
            None
        };
        Ok(Self {
            theta,
            r,
            dt: cfg.dt,
            scheme: cfg.scheme,
            boundary: cfg.boundary,
            solver,
            rhs: vec![0.0; n],
        })
    }

    /// Boundary nodes are left untouched under `ClampToLevels`.
    fn advance(&mut self, f: &mut Field1D, reaction: impl Fn(f64, f64) -> f64) {
        let n = f.values.len();
        let dx = f.grid.dx();
        let x0 = f.x_start();
        let u = &mut f.values;
        let ex = (1.0 - self.theta) * self.r;
        let rhs = &mut self.rhs;
        let lap = |u: &[f64], i: usize| -> f64 {
            if i == 0 {
                2.0 * (u[1] - u[0])
            } else if i == n - 1 {
                2.0 * (u[n - 2] - u[n - 1])
            } else {
                u[i - 1] - 2.0 * u[i] + u[i + 1]
            }
        };
        let (lo, hi) = match self.boundary {
            Boundary::ClampToLevels => (1, n - 1),
            Boundary::ZeroFlux => (0, n),
        };
        for i in lo..hi {
            let x = x0 + i as f64 * dx;
            rhs[i] = u[i] + ex * lap(u, i) + self.dt * reaction(x, u[i]);
        }
        match self.scheme {
            Scheme::Explicit => u[lo..hi].copy_from_slice(&rhs[lo..hi]),
            _ => {
                let solver = self.solver.as_ref().expect("implicit schemes are prefactored");
                if self.boundary == Boundary::ClampToLevels {
                    let b = self.theta * self.r;
                    rhs[1] += b * u[0];
                    rhs[n - 2] += b * u[n - 1];
                }
                solver.solve(&mut rhs[lo..hi]);
                u[lo..hi].copy_from_slice(&rhs[lo..hi]);
            }
        }
        f.t += self.dt;
    }
}

pub(crate) fn nearest_level(r: &Reaction, v: f64) -> f64 {
    let mut best = r.levels()[0];
    for &p in r.levels() {
        if (p - v).abs() < (best - v).abs() {
            best = p;
        }
    }
    best
}

pub(crate) fn check_bounds(values: &[f64], r: &Reaction, t: f64) -> Result<()> {
    let (lo, hi) = (r.min_level() - 1.0, r.max_level() + 1.0);
    for &v in values {
        if !(v >= lo && v <= hi) {
            return Err(Error::Divergence { t, value: v });
        }
    }
    Ok(())
}

/// One time step.
pub fn step(field: &Field1D, r: &Reaction, cfg: &SolverConfig) -> Result<Field1D> {
    check_dim(r, 1)?;
    let mut st = Stepper1D::new(&field.grid, cfg)?;
    let mut out = field.clone();
    if cfg.boundary == Boundary::ClampToLevels {
        clamp_edges(&mut out.values, r);
    }
    st.advance(&mut out, |x, u| r.eval(&[x], u));
    check_bounds(&out.values, r, out.t)?;
    Ok(out)
}

/// One step of the heat equation (`f = 0`) with zero-flux boundaries.
pub fn step_heat(field: &Field1D, cfg: &SolverConfig) -> Result<Field1D> {
    let cfg = SolverConfig {
        boundary: Boundary::ZeroFlux,
        ..cfg.clone()
    };
    let mut st = Stepper1D::new(&field.grid, &cfg)?;
    let mut out = field.clone();
    st.advance(&mut out, |_, _| 0.0);
    Ok(out)
}

fn clamp_edges(v: &mut [f64], r: &Reaction) {
    let n = v.len();
    v[0] = nearest_level(r, v[0]);
    v[n - 1] = nearest_level(r, v[n - 1]);
}

pub(crate) fn check_dim(r: &Reaction, d: usize) -> Result<()> {
    if r.dim() != d {
        return Err(Error::InvalidParameter(format!(
            "reaction is {}-dimensional, solver expects {d}",
            r.dim()
        )));
    }
    Ok(())
}

/// Shifts node values by `k` (positive: content moves left), padding with
/// the edge value on the side that opens up.
pub(crate) fn shift_values(v: &mut [f64], k: i64) {
    let n = v.len();
    if k > 0 {
        let k = (k as usize).min(n - 1);
        let edge = v[n - 1];
        v.copy_within(k.., 0);
        v[n - k..].fill(edge);
    } else if k < 0 {
        let k = (k.unsigned_abs() as usize).min(n - 1);
        let edge = v[0];
        v.copy_within(..n - k, k);
        v[..k].fill(edge);
    }
}

fn boundary_deviation(values: &[f64], r: &Reaction) -> (f64, f64) {
    let n = values.len();
    let m = 6.min(n / 2);
    let left_ref = nearest_level(r, values[0]);
    let right_ref = nearest_level(r, values[n - 1]);
    let left = values[..m].iter().fold(0.0f64, |a, v| a.max((v - left_ref).abs()));
    let right = values[n - m..].iter().fold(0.0f64, |a, v| a.max((v - right_ref).abs()));
    (left, right)
}

pub(crate) fn check_contamination(values: &[f64], r: &Reaction, tol: Option<f64>, t: f64) -> Result<()> {
    if let Some(tol) = tol {
        let (l, rr) = boundary_deviation(values, r);
        if l > tol {
            return Err(Error::BoundaryContamination {
                t,
                side: "left",
                deviation: l,
            });
        }
        if rr > tol {
            return Err(Error::BoundaryContamination {
                t,
                side: "right",
                deviation: rr,
            });
        }
    }
    Ok(())
}

/// Repeated stepping with sampling, optional snapshots and an optional
/// moving window. Returns the trajectory and the final field.
pub fn evolve(initial: Field1D, r: &Reaction, cfg: &SolverConfig, obs: &Observers) -> Result<(Trajectory, Field1D)> {
    check_dim(r, 1)?;
    let mut st = Stepper1D::new(&initial.grid, cfg)?;
    let mut f = initial;
    if cfg.boundary == Boundary::ClampToLevels {
        clamp_edges(&mut f.values, r);
    }
    check_bounds(&f.values, r, f.t)?;
    let dx = f.grid.dx();
    let mut traj = Trajectory {
        orientation: obs.orientation,
        period: r.period()[0],
        levels: obs.levels.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
        recenterings: 0,
    };
    let record = |f: &Field1D, traj: &mut Trajectory| {
        let positions = obs
            .levels
            .iter()
            .map(|&p| leading(&f.crossings(p), obs.orientation).unwrap_or(f64::NAN))
            .collect();
        traj.records.push(Record {
            t: f.t,
            positions,
            shift: f.shift(),
        });
    };
    record(&f, &mut traj);
    if cfg.snapshot_every.is_some() {
        traj.snapshots.push(Snapshot::of(&f));
    }
    let steps = cfg.steps();
    for k in 1..=steps {
        st.advance(&mut f, |x, u| r.eval(&[x], u));
        let sample = k % cfg.sample_every == 0 || k == steps;
        if sample {
            check_bounds(&f.values, r, f.t)?;
            if let Some(th) = cfg.recenter_threshold {
                let n = f.values.len();
                let level = 0.5 * (f.values[0] + f.values[n - 1]);
                if let Some(pos) = leading(&f.crossings(level), obs.orientation) {
                    let center = f.x(0) + 0.5 * (n - 1) as f64 * dx;
                    if (pos - center).abs() > th {
                        let shift = ((pos - center) / dx).round() as i64;
                        shift_values(&mut f.values, shift);
                        f.offset += shift;
                        traj.recenterings += 1;
                    }
                }
            }
            check_contamination(&f.values, r, cfg.contamination_tol, f.t)?;
            record(&f, &mut traj);
        }
        if let Some(every) = cfg.snapshot_every {
            if k % every == 0 {
                traj.snapshots.push(Snapshot::of(&f));
            }
        }
    }
    Ok((traj, f))
}

#[cfg(test)]
mod tests;
