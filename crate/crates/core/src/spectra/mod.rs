//! Periodic steady states and principal eigenvalues of their linearization.
//!
//! Everything here lives on one spatial period `[0, L)` of a 1-D reaction,
//! discretized with `n` equispaced nodes and the periodic second difference.

use crate::error::{Error, Result};
use crate::reaction::{cubic_balanced, kink, Reaction};
use crate::solver::{CyclicTridiag, Orientation};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;


/// Max-norm residual accepted for a steady state.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// States closer than this in max norm are merged.
pub const DEDUP_TOL: f64 = 1e-6;
/// Intermediate states need `lambda1` above this to count as unstable.
pub const UNSTABLE_MARGIN: f64 = 1e-6;
pub const MAX_POWER_ITERATIONS: usize = 100_000;
/// Largest system handed to the dense eigen solver.
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub dx: f64,
    pub values: Vec<f64>,
    pub residual: f64,
    pub lambda1: f64,
    pub tag: Stability,
}

impl SteadyState {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    /// True if the state is the constant `level` within `tol`.
    pub fn is_constant(&self, level: f64, tol: f64) -> bool {
        self.values.iter().all(|v| (v - level).abs() <= tol)
    }
}

#[derive(Debug, Clone)]
pub struct SpectraOptions {
    /// Nodes per unit of the reaction's length scale.
    pub nodes_per_unit: usize,
    pub seed: u64,
    pub random_seeds: usize,
    pub harvest_runs: usize,
    /// Duration of each harvesting run, in units of `length_scale^2`.
    pub harvest_time: f64,
    pub max_newton: usize,
}

impl Default for SpectraOptions {
    fn default() -> Self {
        Self {
            nodes_per_unit: 128,
            seed: 0,
            random_seeds: 16,
            harvest_runs: 20,
            harvest_time: 30.0,
            max_newton: 60,
        }
    }
}

/// Equispaced nodes on one period.
#[derive(Debug, Clone, Copy)]
pub struct CellGrid {
    pub period: f64,
    pub n: usize,
}

impl CellGrid {
    pub fn for_reaction(r: &Reaction, nodes_per_unit: usize) -> Result<Self> {
        if r.dim() != 1 {
            return Err(Error::InvalidParameter(
                "steady-state analysis is implemented for 1-D reactions".into(),
            ));
        }
        let period = r.period()[0];
        let n = ((period / r.length_scale()) * nodes_per_unit as f64).round().max(16.0) as usize;
        Ok(Self { period, n })
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }
}

fn laplacian_at(u: &[f64], i: usize, inv_dx2: f64) -> f64 {
    let n = u.len();
    (u[(i + n - 1) % n] - 2.0 * u[i] + u[(i + 1) % n]) * inv_dx2
}

/// `u'' + f(x, u)` on the periodic grid.
pub fn residual(r: &Reaction, grid: CellGrid, u: &[f64]) -> Vec<f64> {
    let inv = 1.0 / (grid.dx() * grid.dx());
    (0..grid.n)
        .map(|i| laplacian_at(u, i, inv) + r.eval_1d(grid.x(i), u[i]))
        .collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration from `seed`. Returns the converged profile and its
/// residual, or `None` if the seed does not converge.
pub fn newton(r: &Reaction, grid: CellGrid, seed: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)> {
    let xs: Vec<f64> = (0..grid.n).map(|i| grid.x(i)).collect();
    let f = |i: usize, u: f64| r.eval_du(&[xs[i]], u);
    newton_with(&f, grid, seed, max_iter, (r.min_level(), r.max_level()))
}

/// Newton on `u'' + g(i, u) = 0` where `g` returns the reaction and its
/// `u`-derivative at node `i`.
fn newton_with(
    g: &dyn Fn(usize, f64) -> (f64, f64),
    grid: CellGrid,
    seed: &[f64],
    max_iter: usize,
    (lo, hi): (f64, f64),
) -> Option<(Vec<f64>, f64)> {
    let n = grid.n;
    let inv = 1.0 / (grid.dx() * grid.dx());
    let span = hi - lo;
    let res_of = |u: &[f64]| -> Vec<f64> { (0..n).map(|i| laplacian_at(u, i, inv) + g(i, u[i]).0).collect() };
    let l2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut u = seed.to_vec();
    let mut res = res_of(&u);
    let mut norm = l2(&res);
    for _ in 0..max_iter {
        if max_abs(&res) < 0.1 * RESIDUAL_TOL {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = -2.0 * inv + g(i, u[i]).1;
            jac[(i, (i + 1) % n)] += inv;
            jac[(i, (i + n - 1) % n)] += inv;
        }
        let rhs = DVector::from_iterator(n, res.iter().map(|v| -v));
        let step = jac.lu().solve(&rhs)?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
            let tr = res_of(&trial);
            let tn = l2(&tr);
            if tn < (1.0 - 0.25 * alpha) * norm || (alpha < 1.0 / 1024.0 && tn < norm) {
                u = trial;
                res = tr;
                norm = tn;
                break;
            }
            alpha *= 0.5;
            if alpha < 1.0 / 4096.0 {
                return None;
            }
        }
        let (a, b) = u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        if a < lo - span || b > hi + span {
            return None;
        }
    }
    let norm = max_abs(&res);
    (norm < RESIDUAL_TOL).then_some((u, norm))
}

/// Follows the constant steady states of the cell-averaged reaction
/// `fbar(u)` along `fbar + s (f - fbar)`, `s: 0 -> 1`. Returns the profiles
/// reached at `s = 1`.
pub fn continuation_seeds(r: &Reaction, grid: CellGrid) -> Vec<Vec<f64>> {
    let n = grid.n;
    let xs: Vec<f64> = (0..n).map(|i| grid.x(i)).collect();
    let mean = |u: f64| -> (f64, f64) {
        let (a, b) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
            let (f, df) = r.eval_du(&[*x], u);
            (a + f, b + df)
        });
        (a / n as f64, b / n as f64)
    };
    let (lo, hi) = (r.min_level(), r.max_level());
    let samples = 2000;
    let mut roots = Vec::new();
    let mut prev = (lo, mean(lo).0);
    for k in 1..=samples {
        let u = lo + (hi - lo) * k as f64 / samples as f64;
        let fu = mean(u).0;
        if prev.1 * fu < 0.0 {
            let (mut a, mut b, fa) = (prev.0, u, prev.1);
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if mean(m).0 * fa > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            let root = 0.5 * (a + b);
            if r.levels().iter().all(|p| (root - p).abs() > 1e-6) {
                roots.push(root);
            }
        }
        prev = (u, fu);
    }
    roots
        .into_par_iter()
        .filter_map(|root| {
            let mut u = vec![root; n];
            let mut s: f64 = 0.0;
            let mut ds: f64 = 0.05;
            while s < 1.0 {
                let next = (s + ds).min(1.0);
                let g = |i: usize, v: f64| {
                    let (f, df) = r.eval_du(&[xs[i]], v);
                    let (m, dm) = mean(v);
                    (m + next * (f - m), dm + next * (df - dm))
                };
                match newton_with(&g, grid, &u, 12, (lo, hi)) {
                    Some((v, _)) => {
                        u = v;
                        s = next;
                        ds = (ds * 1.5).min(0.1);
                    }
                    None => {
                        ds *= 0.5;
                        if ds < 1e-4 {
                            return None;
                        }
                    }
                }
            }
            Some(u)
        })
        .collect()
}

/// Principal eigenpair of a periodic Schroedinger-type operator.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Normalized to unit max norm, positive.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub dense: bool,
}

/// Largest eigenvalue of `D2 + diag(q)` with periodic second difference
/// `D2` of spacing `dx`.
///
/// Power iteration on the resolvent `(s - D2 - q)^-1` with shift
/// `s = max q + 1`; the resolvent is a positive matrix so the iterates stay
/// positive and converge to the principal eigenvector. Falls back to a dense
/// symmetric eigensolve for small systems that fail to converge.
pub fn principal_eigenpair(q: &[f64], dx: f64) -> Result<Eigenpair> {
    principal_eigenpair_capped(q, dx, MAX_POWER_ITERATIONS, true)
}

pub(crate) fn principal_eigenpair_capped(q: &[f64], dx: f64, max_iter: usize, fallback: bool) -> Result<Eigenpair> {
    let n = q.len();
    if n < 3 {
        return Err(Error::InvalidParameter("at least three nodes are required".into()));
    }
    let inv = 1.0 / (dx * dx);
    let shift = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    let diag: Vec<f64> = q.iter().map(|qi| shift - qi + 2.0 * inv).collect();
    let solver = CyclicTridiag::with_diagonal(&diag, -inv);
    let apply = |v: &[f64]| -> Vec<f64> { (0..n).map(|i| laplacian_at(v, i, inv) + q[i] * v[i]).collect() };
    let rayleigh = |v: &[f64]| -> f64 {
        let mv = apply(v);
        let num: f64 = mv.iter().zip(v).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().map(|a| a * a).sum();
        num / den
    };
    let scale = 4.0 * inv + max_abs(q);
    let mut v = vec![1.0; n];
    let mut lambda = rayleigh(&v);
    for it in 1..=max_iter {
        solver.solve(&mut v);
        let m = max_abs(&v);
        v.iter_mut().for_each(|a| *a /= m);
        let next = rayleigh(&v);
        let change = (next - lambda).abs();
        lambda = next;
        if change <= 1e-15 * (1.0 + lambda.abs()) {
            let r: Vec<f64> = apply(&v).iter().zip(&v).map(|(a, b)| a - lambda * b).collect();
            if max_abs(&r) < 1e-10 * scale {
                return finish(lambda, v, it, false);
            }
        }
    }
    if fallback && n <= DENSE_LIMIT {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = q[i] - 2.0 * inv;
            m[(i, (i + 1) % n)] += inv;
            m[(i, (i + n - 1) % n)] += inv;
        }
        let eig = m.symmetric_eigen();
        let k = eig.eigenvalues.imax();
        let mut vec: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
        if vec.iter().sum::<f64>() < 0.0 {
            vec.iter_mut().for_each(|a| *a = -*a);
        }
        let m = max_abs(&vec);
        vec.iter_mut().for_each(|a| *a /= m);
        return finish(eig.eigenvalues[k], vec, max_iter, true);
    }
    Err(Error::EigenNotConverged(max_iter))
}

fn finish(lambda: f64, vector: Vec<f64>, iterations: usize, dense: bool) -> Result<Eigenpair> {
    let min = vector.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::EigenvectorSign(min));
    }
    Ok(Eigenpair {
        lambda,
        vector,
        iterations,
        dense,
    })
}

/// `lambda1` of the linearization of `r` around the periodic profile `u`.
pub fn principal_eigenvalue(r: &Reaction, grid: CellGrid, u: &[f64]) -> Result<Eigenpair> {
    let q: Vec<f64> = (0..grid.n).map(|i| r.eval_du(&[grid.x(i)], u[i]).1).collect();
    principal_eigenpair(&q, grid.dx())
}

fn smooth_random(rng: &mut ChaCha8Rng, grid: CellGrid, lo: f64, hi: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let mean = rng.random_range(lo..hi);
    let amp = rng.random_range(0.0..0.5) * (hi - lo);
    let (p1, p2) = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
    let w = rng.random_range(0.0..1.0);
    (0..grid.n)
        .map(|i| {
            let s = 2.0 * PI * grid.x(i) / grid.period;
            (mean + amp * ((1.0 - w) * (s + p1).sin() + w * (2.0 * s + p2).sin())).clamp(lo, hi)
        })
        .collect()
}

/// Long backward-Euler run of the periodic parabolic problem from `u`.
fn harvest(r: &Reaction, grid: CellGrid, mut u: Vec<f64>, t_end: f64) -> Vec<f64> {
    let dt = 0.01 * r.length_scale().powi(2);
    let a = dt / (grid.dx() * grid.dx());
    let solver = CyclicTridiag::new(grid.n, 1.0 + 2.0 * a, -a);
    let steps = (t_end / dt).ceil() as usize;
    for _ in 0..steps {
        for (i, v) in u.iter_mut().enumerate() {
            *v += dt * r.eval_1d(grid.x(i), *v);
        }
        solver.solve(&mut u);
    }
    u
}

/// Newton seeds: states continued from the cell-averaged reaction, every
/// constant level and midlevel, random smooth profiles and the end states of
/// randomized long parabolic runs.
pub fn default_seeds(r: &Reaction, grid: CellGrid, opts: &SpectraOptions) -> Vec<Vec<f64>> {
    let mut seeds = continuation_seeds(r, grid);
    let levels = r.levels();
    for &p in levels {
        seeds.push(vec![p; grid.n]);
    }
    for w in levels.windows(2) {
        for frac in [0.25, 0.5, 0.75] {
            seeds.push(vec![w[0] + frac * (w[1] - w[0]); grid.n]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let layer = |rng: &mut ChaCha8Rng| {
        let k = rng.random_range(0..levels.len() - 1);
        (levels[k], levels[k + 1])
    };
    for _ in 0..opts.random_seeds {
        let (lo, hi) = layer(&mut rng);
        seeds.push(smooth_random(&mut rng, grid, lo, hi));
    }
    let starts: Vec<Vec<f64>> = (0..opts.harvest_runs)
        .map(|_| {
            let (lo, hi) = layer(&mut rng);
            smooth_random(&mut rng, grid, lo, hi)
        })
        .collect();
    let t_end = opts.harvest_time * r.length_scale().powi(2);
    seeds.extend(
        starts
            .into_par_iter()
            .map(|u| harvest(r, grid, u, t_end))
            .collect::<Vec<_>>(),
    );
    seeds
}

#[derive(Debug, Clone)]
pub struct SteadyStateSearch {
    pub grid: CellGrid,
    /// Distinct states, ordered by mean value.
    pub states: Vec<SteadyState>,
    /// Seeds for which Newton did not converge.
    pub failures: usize,
}

pub fn find_steady_states(r: &Reaction, opts: &SpectraOptions) -> Result<SteadyStateSearch> {
    let grid = CellGrid::for_reaction(r, opts.nodes_per_unit)?;
    let seeds = default_seeds(r, grid, opts);
    find_steady_states_from(r, grid, &seeds, opts.max_newton)
}

pub fn find_steady_states_from(
    r: &Reaction,
    grid: CellGrid,
    seeds: &[Vec<f64>],
    max_newton: usize,
) -> Result<SteadyStateSearch> {
    let solved: Vec<Option<(Vec<f64>, f64)>> = seeds.par_iter().map(|s| newton(r, grid, s, max_newton)).collect();
    let mut failures = 0;
    let mut distinct: Vec<(Vec<f64>, f64)> = Vec::new();
    for s in solved {
        match s {
            None => failures += 1,
            Some((u, res)) => {
                let dup = distinct
                    .iter()
                    .any(|(v, _)| u.iter().zip(v).all(|(a, b)| (a - b).abs() < DEDUP_TOL));
                if !dup {
                    distinct.push((u, res));
                }
            }
        }
    }
    let mut states = distinct
        .into_par_iter()
        .map(|(values, residual)| {
            let eig = principal_eigenvalue(r, grid, &values)?;
            Ok(SteadyState {
                dx: grid.dx(),
                values,
                residual,
                lambda1: eig.lambda,
                tag: if eig.lambda < 0.0 {
                    Stability::Stable
                } else {
                    Stability::Unstable
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |s: &SteadyState| s.values.iter().sum::<f64>() / s.values.len() as f64;
    states.sort_by(|a, b| mean(a).total_cmp(&mean(b)));
    Ok(SteadyStateSearch { grid, states, failures })
}

/// Outcome of a bistability certification.
#[derive(Debug, Clone)]
pub struct Certification {
    pub certified: bool,
    pub states: Vec<SteadyState>,
    /// Index into `states` of the offending state and the reason.
    pub witness: Option<(usize, String)>,
    pub failures: usize,
}

impl Certification {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("state_id,max,min,lambda1,tag\n");
        for (k, st) in self.states.iter().enumerate() {
            s.push_str(&format!(
                "{k},{:.12e},{:.12e},{:.12e},{}\n",
                st.max(),
                st.min(),
                st.lambda1,
                st.tag.name()
            ));
        }
        s
    }

    pub fn summary(&self) -> String {
        match &self.witness {
            None => format!(
                "certified: {} steady states, {} non-convergent seeds\n",
                self.states.len(),
                self.failures
            ),
            Some((k, why)) => format!("refused: state {k} {why}\n"),
        }
    }
}

/// Checks the (multi)stable structure level pair by level pair: both
/// constant levels linearly stable and every discovered state strictly
/// between them linearly unstable.
pub fn certify_bistable(r: &Reaction, opts: &SpectraOptions) -> Result<Certification> {
    let search = find_steady_states(r, opts)?;
    let tol = 1e-8;
    let mut witness = None;
    let levels = r.levels();
    'pairs: for w in levels.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        for p in [lo, hi] {
            match search.states.iter().position(|s| s.is_constant(p, tol)) {
                None => {
                    witness = Some((usize::MAX, format!("level {p} was not recovered as a steady state")));
                    break 'pairs;
                }
                Some(k) if !(search.states[k].lambda1 < 0.0) => {
                    witness = Some((
                        k,
                        format!("level {p} has lambda1 = {:e} >= 0", search.states[k].lambda1),
                    ));
                    break 'pairs;
                }
                _ => {}
            }
        }
        for (k, s) in search.states.iter().enumerate() {
            let inside = s.min() >= lo - tol && s.max() <= hi + tol;
            if inside && !s.is_constant(lo, tol) && !s.is_constant(hi, tol) && !(s.lambda1 > UNSTABLE_MARGIN) {
                witness = Some((
                    k,
                    format!("between {lo} and {hi} has lambda1 = {:e}, not unstable", s.lambda1),
                ));
                break 'pairs;
            }
        }
    }
    Ok(Certification {
        certified: witness.is_none(),
        states: search.states,
        witness,
        failures: search.failures,
    })
}

/// Range of `v'' + f(x, v)` over one period for the shifted kink
/// `v(x) = U0(x + xi)` (right-moving) or `U0(-x + xi)` (left-moving).
pub fn subsolution_residual(r: &Reaction, xi: f64, orientation: Orientation, samples: usize) -> Result<(f64, f64)> {
    if r.dim() != 1 {
        return subsolution_residual_dir(r, &unit(r.dim(), orientation), xi, samples);
    }
    let s = orientation.sign();
    let period = r.period()[0];
    let n = samples.max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let x = period * i as f64 / (n - 1) as f64;
        let v = kink(s * x + xi);
        let rho = r.eval_1d(x, v) - cubic_balanced(v);
        lo = lo.min(rho);
        hi = hi.max(rho);
    }
    Ok((lo, hi))
}

fn unit(d: usize, o: Orientation) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[0] = o.sign();
    e
}

/// Range of `Laplacian v + f(x, v)` over one period cell for the planar
/// kink `v(x) = U0(x . zeta + xi)`, `|zeta| = 1`.
pub fn subsolution_residual_dir(r: &Reaction, zeta: &[f64], xi: f64, samples_per_axis: usize) -> Result<(f64, f64)> {
    let d = r.dim();
    if zeta.len() != d {
        return Err(Error::InvalidParameter("direction dimension mismatch".into()));
    }
    let norm2: f64 = zeta.iter().map(|z| z * z).sum();
    if (norm2 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("direction must be a unit vector".into()));
    }
    let n = samples_per_axis.max(2);
    let total = n.pow(d as u32);
    let mut x = vec![0.0; d];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for idx in 0..total {
        let mut k = idx;
        for (a, xa) in x.iter_mut().enumerate() {
            *xa = r.period()[a] * (k % n) as f64 / (n - 1) as f64;
            k /= n;
        }
        let s: f64 = x.iter().zip(zeta).map(|(a, b)| a * b).sum();
        let v = kink(s + xi);
        let rho = r.eval(&x, v) - cubic_balanced(v);
        lo = lo.min(rho);
        hi = hi.max(rho);
    }
    Ok((lo, hi))
}
