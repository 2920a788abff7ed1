use crate::error::{Error, Result};
use crate::reaction::{lattice, Membership, Reaction};

/// Uniform node grid on `[x_min, x_max]` with `nx` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, nx: usize) -> Result<Self> {
        if nx < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 16 nodes, got {nx}"
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!("empty grid [{x_min}, {x_max}]")));
        }
        Ok(Self { x_min, x_max, nx })
    }

    /// Grid symmetric about 0 with spacing as close to `dx` as fits.
    pub fn centered(half_width: f64, dx: f64) -> Result<Self> {
        Self::spanning(-half_width, half_width, dx)
    }

    /// Grid on `[x_min, x_max]` with spacing as close to `dx` as fits.
    pub fn spanning(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) {
            return Err(Error::InvalidParameter(format!("dx must be positive, got {dx}")));
        }
        let cells = ((x_max - x_min) / dx).round().max(1.0) as usize;
        Self::new(x_min, x_max, cells + 1)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }
}

/// Rotated frame `x = xi zeta + eta zeta_perp` with `zeta_perp = (-zeta_2, zeta_1)`:
/// `n_xi` nodes on `[xi_min, xi_max]` and `n_eta` periodic nodes on a
/// transverse period `eta_period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_xi: usize,
    pub eta_period: f64,
    pub n_eta: usize,
    pub zeta: [f64; 2],
}

impl Grid2D {
    /// Builds the frame for direction `zeta`, taking the transverse period
    /// from the reaction lattice and checking it by sampling.
    pub fn for_reaction(
        r: &Reaction,
        zeta: [f64; 2],
        xi_min: f64,
        xi_max: f64,
        n_xi: usize,
        n_eta: usize,
    ) -> Result<Self> {
        if r.dim() != 2 {
            return Err(Error::InvalidParameter("rotated frame needs a planar reaction".into()));
        }
        if n_xi < 16 || n_eta < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid too small: {n_xi} x {n_eta} (need 16 x 8)"
            )));
        }
        if !(xi_max > xi_min) {
            return Err(Error::InvalidParameter("empty longitudinal range".into()));
        }
        if let Membership::NotMember = lattice::membership(&zeta, r.period())? {
            return Err(Error::NotInLattice {
                dir: zeta.to_vec(),
                lattice: r.period().to_vec(),
            });
        }
        let p = lattice::transverse_period(&zeta, r.period())?;
        let g = Self {
            xi_min,
            xi_max,
            n_xi,
            eta_period: p,
            n_eta,
            zeta,
        };
        g.verify_transverse_period(r)?;
        Ok(g)
    }

    fn verify_transverse_period(&self, r: &Reaction) -> Result<()> {
        let mut worst: f64 = 0.0;
        for i in 0..17 {
            let xi = 0.37 * i as f64 - 3.0;
            for j in 0..7 {
                let eta = 0.29 * j as f64;
                for k in 1..10 {
                    let u = k as f64 / 10.0;
                    let a = r.eval(&self.point(xi, eta), u);
                    let b = r.eval(&self.point(xi, eta + self.eta_period), u);
                    worst = worst.max((a - b).abs());
                }
            }
        }
        if worst > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "transverse period {} not verified (mismatch {worst:e})",
                self.eta_period
            )));
        }
        Ok(())
    }

    pub fn d_xi(&self) -> f64 {
        (self.xi_max - self.xi_min) / (self.n_xi - 1) as f64
    }

    pub fn d_eta(&self) -> f64 {
        self.eta_period / self.n_eta as f64
    }

    pub fn perp(&self) -> [f64; 2] {
        [-self.zeta[1], self.zeta[0]]
    }

    #[inline]
    pub fn point(&self, xi: f64, eta: f64) -> [f64; 2] {
        [
            xi * self.zeta[0] - eta * self.zeta[1],
            xi * self.zeta[1] + eta * self.zeta[0],
        ]
    }
}
