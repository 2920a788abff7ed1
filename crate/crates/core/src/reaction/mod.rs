//! Spatially periodic bistable and multistable reaction terms.
//!
//! Every reaction is built from the balanced cubic `f0(u) = u(1-u)(u-1/2)`
//! perturbed by nonnegative bumps that vanish near the stable levels, so the
//! levels, their derivative `gamma` and the homogeneous bands are known
//! exactly and carried as metadata.

pub mod chi;
pub mod kink;
pub mod lattice;
mod spec;

pub use chi::{chi, chi_du, chi_dz, BumpProfile, ChiParams, DEFAULT_DELTA0};
pub use kink::{cubic_balanced, cubic_balanced_du, kink, kink_inverse, KinkProfile};
pub use lattice::{membership, transverse_period, Membership};
pub use spec::ReactionSpec;

use crate::error::{Error, Result};
use chi::{chi_and_du_with, chi_with, StatePart};
use std::sync::OnceLock;

/// Default perturbation amplitude, certified bistable by the spectra module.
pub const DEFAULT_SIGMA: f64 = 0.1;

/// Highest spatial dimension supported.
pub const MAX_DIM: usize = 3;

#[derive(Debug, Clone)]
enum Kind {
    Cubic,
    Family1d {
        sigma: f64,
        tau: f64,
        chi: ChiParams,
    },
    MultiDir(MultiDirParams),
    /// Components ordered from the top layer down.
    Stacked(Vec<Reaction>),
    Rescaled {
        inner: Box<Reaction>,
        nu: f64,
    },
    /// `f(-x, u)`.
    Mirrored(Box<Reaction>),
    /// `-f(x, a + b - u)` for extreme levels `a < b`.
    Flipped(Box<Reaction>),
}

/// Parameters of the multi-direction construction
/// `f0(u) + sigma sum_j tau_j prod_{l != j} chi_l(x . zeta_l, u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDirParams {
    pub tau: Vec<f64>,
    pub sigma: f64,
    pub directions: Vec<Vec<f64>>,
    pub lattice: Vec<f64>,
    /// Bump period per direction; `None` takes the largest admissible one.
    pub periods: Option<Vec<f64>>,
    pub delta0: f64,
}

impl MultiDirParams {
    pub fn axes(tau: Vec<f64>, sigma: f64) -> Self {
        let n = tau.len();
        let directions = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            tau,
            sigma,
            directions,
            lattice: vec![1.0; n],
            periods: None,
            delta0: DEFAULT_DELTA0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralSign {
    Positive,
    Negative,
    ZeroWithinTol,
}

/// An evaluable periodic reaction `f(x, u)` with exact metadata.
#[derive(Debug, Clone)]
pub struct Reaction {
    kind: Kind,
    period: Vec<f64>,
    levels: Vec<f64>,
    gamma: f64,
    delta0: f64,
    length_scale: f64,
    lipschitz: OnceLock<f64>,
}

impl Reaction {
    fn make(kind: Kind, period: Vec<f64>, levels: Vec<f64>, gamma: f64, delta0: f64, scale: f64) -> Self {
        Self {
            kind,
            period,
            levels,
            gamma,
            delta0,
            length_scale: scale,
            lipschitz: OnceLock::new(),
        }
    }

    /// The homogeneous balanced cubic in `dim` dimensions, unit periods.
    pub fn cubic(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!("unsupported dimension {dim}")));
        }
        Ok(Self::make(
            Kind::Cubic,
            vec![1.0; dim],
            vec![0.0, 1.0],
            -0.5,
            DEFAULT_DELTA0,
            1.0,
        ))
    }

    /// `f0(u) + sigma chi(x,u) + tau sigma chi(-x,u)` with unit period.
    pub fn family_1d(tau: f64, sigma: f64) -> Result<Self> {
        Self::family_1d_with(tau, sigma, ChiParams::default())
    }

    pub fn family_1d_with(tau: f64, sigma: f64, chi: ChiParams) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau must lie in [0,1], got {tau}")));
        }
        chi.validate()?;
        Ok(Self::make(
            Kind::Family1d { sigma, tau, chi },
            vec![chi.period],
            vec![0.0, 1.0],
            -0.5,
            chi.delta0,
            1.0,
        ))
    }

    pub fn family_multidir(params: MultiDirParams) -> Result<Self> {
        let d = params.lattice.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidParameter(format!("unsupported dimension {d}")));
        }
        if params.directions.len() < 2 || params.directions.len() != params.tau.len() {
            return Err(Error::InvalidParameter(
                "at least two directions and one tau per direction are required".into(),
            ));
        }
        if !(params.sigma > 0.0) {
            return Err(Error::InvalidParameter("sigma must be positive".into()));
        }
        if params.tau.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidParameter("tau entries must lie in [0,1]".into()));
        }
        let mut periods = Vec::with_capacity(params.directions.len());
        for (j, dir) in params.directions.iter().enumerate() {
            if dir.len() != d {
                return Err(Error::InvalidParameter("direction dimension mismatch".into()));
            }
            let m = match lattice::membership(dir, &params.lattice)? {
                Membership::Member(m) => m,
                Membership::NotMember => {
                    return Err(Error::NotInLattice {
                        dir: dir.clone(),
                        lattice: params.lattice.clone(),
                    })
                }
            };
            let m = match &params.periods {
                Some(ps) => {
                    let mj = *ps
                        .get(j)
                        .ok_or_else(|| Error::InvalidParameter("one period per direction is required".into()))?;
                    if !(mj > 0.0) || !lattice::period_compatible(dir, &params.lattice, mj) {
                        return Err(Error::NotInLattice {
                            dir: dir.clone(),
                            lattice: params.lattice.clone(),
                        });
                    }
                    mj
                }
                None => m,
            };
            periods.push(m);
        }
        ChiParams::new(periods[0], params.delta0)?;
        let mut params = params;
        params.periods = Some(periods);
        let lattice = params.lattice.clone();
        let delta0 = params.delta0;
        Ok(Self::make(
            Kind::MultiDir(params),
            lattice,
            vec![0.0, 1.0],
            -0.5,
            delta0,
            1.0,
        ))
    }

    /// Stacks bistable components into a multistable reaction with levels
    /// `0, 1, ..., I`. `components[0]` acts on the top layer `(I-1, I]`.
    pub fn stack(components: Vec<Reaction>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::IncompatibleStack("no components".into()))?;
        for (k, c) in components.iter().enumerate() {
            if c.levels != [0.0, 1.0] {
                return Err(Error::IncompatibleStack(format!(
                    "component {k} is not a bistable reaction on [0,1]"
                )));
            }
            if c.period.len() != first.period.len()
                || c.period
                    .iter()
                    .zip(&first.period)
                    .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs())
            {
                return Err(Error::IncompatibleStack(format!(
                    "component {k} has period {:?}, expected {:?}",
                    c.period, first.period
                )));
            }
            if (c.gamma - first.gamma).abs() > 1e-12 * first.gamma.abs() {
                return Err(Error::IncompatibleStack(format!(
                    "component {k} has level derivative {}, expected {}",
                    c.gamma, first.gamma
                )));
            }
            if (c.delta0 - first.delta0).abs() > 1e-15 {
                return Err(Error::IncompatibleStack(format!(
                    "component {k} has delta0 {}, expected {}",
                    c.delta0, first.delta0
                )));
            }
        }
        if components.len() == 1 {
            return Ok(components.into_iter().next().unwrap());
        }
        let i = components.len();
        let period = first.period.clone();
        let (gamma, delta0, scale) = (first.gamma, first.delta0, first.length_scale);
        let levels = (0..=i).map(|k| k as f64).collect();
        Ok(Self::make(
            Kind::Stacked(components),
            period,
            levels,
            gamma,
            delta0,
            scale,
        ))
    }

    /// `nu^2 f(nu x, u)`: period `L / nu`, speeds multiplied by `nu`.
    pub fn rescale(&self, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
        }
        Ok(Self::make(
            Kind::Rescaled {
                inner: Box::new(self.clone()),
                nu,
            },
            self.period.iter().map(|l| l / nu).collect(),
            self.levels.clone(),
            nu * nu * self.gamma,
            self.delta0,
            self.length_scale / nu,
        ))
    }

    /// Spatial reflection `x -> -x`; swaps leftward and rightward speeds.
    pub fn mirror(&self) -> Self {
        Self::make(
            Kind::Mirrored(Box::new(self.clone())),
            self.period.clone(),
            self.levels.clone(),
            self.gamma,
            self.delta0,
            self.length_scale,
        )
    }

    /// State reflection `u -> a + b - u`; negates the integral of `f`.
    pub fn flip(&self) -> Self {
        Self::make(
            Kind::Flipped(Box::new(self.clone())),
            self.period.clone(),
            self.levels.clone(),
            self.gamma,
            self.delta0,
            self.length_scale,
        )
    }

    /// `flip` composed with `mirror`: maps speeds `(cL, cR)` to `(-cL, -cR)`.
    pub fn dual(&self) -> Self {
        self.mirror().flip()
    }

    pub fn dim(&self) -> usize {
        self.period.len()
    }

    pub fn period(&self) -> &[f64] {
        &self.period
    }

    /// Stable levels in increasing order.
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn min_level(&self) -> f64 {
        self.levels[0]
    }

    pub fn max_level(&self) -> f64 {
        *self.levels.last().unwrap()
    }

    /// `d f / du` at every stable level (negative, uniform in `x`).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Half-width of the homogeneous state bands around each level.
    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Natural length unit: 1 for the unscaled constructions, `1/nu` after
    /// rescaling by `nu`.
    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn is_homogeneous(&self) -> bool {
        match &self.kind {
            Kind::Cubic => true,
            Kind::Family1d { .. } => false,
            Kind::MultiDir(p) => p.tau.iter().all(|t| *t == 0.0),
            Kind::Stacked(cs) => cs.iter().all(|c| c.is_homogeneous()),
            Kind::Rescaled { inner, .. } | Kind::Mirrored(inner) | Kind::Flipped(inner) => inner.is_homogeneous(),
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], u: f64) -> f64 {
        match &self.kind {
            Kind::Cubic => cubic_balanced(u),
            Kind::Family1d { sigma, tau, chi } => {
                let f0 = cubic_balanced(u);
                match StatePart::new(u, chi.delta0) {
                    None => f0,
                    Some(part) => {
                        let mut f = f0 + sigma * chi_with(x[0], &part, chi.period);
                        if *tau != 0.0 {
                            f += tau * sigma * chi_with(-x[0], &part, chi.period);
                        }
                        f
                    }
                }
            }
            Kind::MultiDir(p) => multidir_eval(p, x, u).0,
            Kind::Stacked(cs) => {
                let (k, shift) = stack_layer(cs.len(), u);
                cs[k].eval(x, u - shift)
            }
            Kind::Rescaled { inner, nu } => {
                let y = scaled(x, *nu);
                nu * nu * inner.eval(&y[..x.len()], u)
            }
            Kind::Mirrored(inner) => {
                let y = scaled(x, -1.0);
                inner.eval(&y[..x.len()], u)
            }
            Kind::Flipped(inner) => {
                let s = inner.min_level() + inner.max_level();
                -inner.eval(x, s - u)
            }
        }
    }

    /// Returns `(f, df/du)`.
    #[inline]
    pub fn eval_du(&self, x: &[f64], u: f64) -> (f64, f64) {
        match &self.kind {
            Kind::Cubic => (cubic_balanced(u), cubic_balanced_du(u)),
            Kind::Family1d { sigma, tau, chi } => {
                let (f0, d0) = (cubic_balanced(u), cubic_balanced_du(u));
                match StatePart::new(u, chi.delta0) {
                    None => (f0, d0),
                    Some(part) => {
                        let (a, da) = chi_and_du_with(x[0], &part, chi.period);
                        let (b, db) = chi_and_du_with(-x[0], &part, chi.period);
                        (f0 + sigma * (a + tau * b), d0 + sigma * (da + tau * db))
                    }
                }
            }
            Kind::MultiDir(p) => multidir_eval(p, x, u),
            Kind::Stacked(cs) => {
                let (k, shift) = stack_layer(cs.len(), u);
                cs[k].eval_du(x, u - shift)
            }
            Kind::Rescaled { inner, nu } => {
                let y = scaled(x, *nu);
                let (f, d) = inner.eval_du(&y[..x.len()], u);
                (nu * nu * f, nu * nu * d)
            }
            Kind::Mirrored(inner) => {
                let y = scaled(x, -1.0);
                inner.eval_du(&y[..x.len()], u)
            }
            Kind::Flipped(inner) => {
                let s = inner.min_level() + inner.max_level();
                let (f, d) = inner.eval_du(x, s - u);
                (-f, d)
            }
        }
    }

    #[inline]
    pub fn eval_1d(&self, x: f64, u: f64) -> f64 {
        self.eval(&[x], u)
    }

    /// Sampled bound on `|df/du|` over one period cell and the level range.
    pub fn lipschitz_u(&self) -> f64 {
        *self.lipschitz.get_or_init(|| {
            let d = self.dim();
            let nx: usize = if d == 1 { 64 } else { 24 };
            let nu = 400;
            let (a, b) = (self.min_level(), self.max_level());
            let mut worst: f64 = 0.0;
            let total = nx.pow(d as u32);
            let mut x = vec![0.0; d];
            for idx in 0..total {
                let mut r = idx;
                for (i, xi) in x.iter_mut().enumerate() {
                    *xi = self.period[i] * (r % nx) as f64 / nx as f64;
                    r /= nx;
                }
                for k in 0..=nu {
                    let u = a + (b - a) * k as f64 / nu as f64;
                    worst = worst.max(self.eval_du(&x, u).1.abs());
                }
            }
            worst
        })
    }

    /// `int_a^b int_cell f dx du` by Gauss-Legendre in `u` and the periodic
    /// trapezoid rule in `x`.
    pub fn integral(&self) -> f64 {
        let d = self.dim();
        let nx: usize = match d {
            1 => 128,
            2 => 48,
            _ => 16,
        };
        let (a, b) = (self.min_level(), self.max_level());
        let panels = 400 * (b - a).round().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let cell: f64 = self.period.iter().product();
        let total = nx.pow(d as u32);
        let mut x = vec![0.0; d];
        let mut sum = 0.0;
        for idx in 0..total {
            let mut r = idx;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = self.period[i] * (r % nx) as f64 / nx as f64;
                r /= nx;
            }
            let mut line = 0.0;
            for p in 0..panels {
                let mid = a + (p as f64 + 0.5) * h;
                for (node, w) in GAUSS5 {
                    line += w * self.eval(&x, mid + 0.5 * h * node);
                }
            }
            sum += 0.5 * h * line;
        }
        sum * cell / total as f64
    }

    pub fn integral_sign(&self) -> IntegralSign {
        let cell: f64 = self.period.iter().product();
        let v = self.integral();
        let tol = 1e-8 * cell;
        if v > tol {
            IntegralSign::Positive
        } else if v < -tol {
            IntegralSign::Negative
        } else {
            IntegralSign::ZeroWithinTol
        }
    }

    /// Description of this reaction in the configuration schema.
    pub fn to_spec(&self) -> ReactionSpec {
        match &self.kind {
            Kind::Cubic => ReactionSpec::Cubic { dimension: self.dim() },
            Kind::Family1d { sigma, tau, chi } => ReactionSpec::Family1d {
                tau: *tau,
                sigma: *sigma,
                period_length: chi.period,
                delta0: Some(chi.delta0),
            },
            Kind::MultiDir(p) => ReactionSpec::FamilyMultidir {
                tau: p.tau.clone(),
                sigma: p.sigma,
                directions: p.directions.clone(),
                lattice_lengths: p.lattice.clone(),
                period_lengths: p.periods.clone(),
                delta0: Some(p.delta0),
            },
            Kind::Stacked(cs) => ReactionSpec::Stacked {
                components: cs.iter().map(|c| c.to_spec()).collect(),
            },
            Kind::Rescaled { inner, nu } => ReactionSpec::Rescaled {
                nu: *nu,
                inner: Box::new(inner.to_spec()),
            },
            Kind::Mirrored(inner) => ReactionSpec::Mirrored {
                inner: Box::new(inner.to_spec()),
            },
            Kind::Flipped(inner) => ReactionSpec::Flipped {
                inner: Box::new(inner.to_spec()),
            },
        }
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

#[inline]
fn scaled(x: &[f64], s: f64) -> [f64; MAX_DIM] {
    let mut y = [0.0; MAX_DIM];
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = s * xi;
    }
    y
}

/// Component index (top first) and level shift for state `u` in a stack of
/// `n` layers; layer `b` covers `(b, b+1]`.
#[inline]
fn stack_layer(n: usize, u: f64) -> (usize, f64) {
    let b = (u.ceil() - 1.0).clamp(0.0, (n - 1) as f64);
    (n - 1 - b as usize, b)
}

fn multidir_eval(p: &MultiDirParams, x: &[f64], u: f64) -> (f64, f64) {
    let (f0, d0) = (cubic_balanced(u), cubic_balanced_du(u));
    let Some(part) = StatePart::new(u, p.delta0) else {
        return (f0, d0);
    };
    let periods = p.periods.as_deref().expect("periods resolved at construction");
    let n = p.directions.len();
    let mut vals = [(0.0, 0.0); 8];
    let mut vals_vec;
    let v: &mut [(f64, f64)] = if n <= 8 {
        &mut vals[..n]
    } else {
        vals_vec = vec![(0.0, 0.0); n];
        &mut vals_vec
    };
    for (l, slot) in v.iter_mut().enumerate() {
        let z: f64 = p.directions[l].iter().zip(x).map(|(a, b)| a * b).sum();
        *slot = chi_and_du_with(z, &part, periods[l]);
    }
    let mut f = 0.0;
    let mut df = 0.0;
    for j in 0..n {
        if p.tau[j] == 0.0 {
            continue;
        }
        let mut prod = 1.0;
        let mut dprod = 0.0;
        for (l, &(c, dc)) in v.iter().enumerate() {
            if l == j {
                continue;
            }
            dprod = dprod * c + prod * dc;
            prod *= c;
        }
        f += p.tau[j] * prod;
        df += p.tau[j] * dprod;
    }
    (f0 + p.sigma * f, d0 + p.sigma * df)
}

#[cfg(test)]
mod tests;
