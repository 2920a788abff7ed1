use super::{
    check_bounds, check_contamination, check_dim, crossings, leading, nearest_level, shift_values, theta_of, Boundary,
    CyclicTridiag, Grid2D, Observers, Orientation, Record, Scheme, SolverConfig, Trajectory, Tridiag,
};
use crate::error::{Error, Result};
use crate::reaction::{kink, lattice, Reaction};
use std::fmt::Write as _;

/// Node values in the rotated frame, stored row by row (one row per
/// transverse node). Node `(i, j)` sits at
/// `xi = xi_min + (offset + i) d_xi`, `eta = j d_eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub offset: i64,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field2D {
    #[inline]
    pub fn xi(&self, i: usize) -> f64 {
        self.grid.xi_min + (self.offset + i as i64) as f64 * self.grid.d_xi()
    }

    pub fn eta(&self, j: usize) -> f64 {
        j as f64 * self.grid.d_eta()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.n_xi;
        &self.values[j * n..(j + 1) * n]
    }

    /// Leading crossing of `level` averaged over the transverse rows.
    pub fn mean_crossing(&self, level: f64, o: Orientation) -> Option<f64> {
        let mut s = 0.0;
        for j in 0..self.grid.n_eta {
            let cr = crossings(self.row(j), self.xi(0), self.grid.d_xi(), level);
            s += leading(&cr, o)?;
        }
        Some(s / self.grid.n_eta as f64)
    }

    /// CSV with header `xi,eta,u`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("xi,eta,u\n");
        for j in 0..self.grid.n_eta {
            for (i, v) in self.row(j).iter().enumerate() {
                let _ = writeln!(s, "{},{},{}", self.xi(i), self.eta(j), v);
            }
        }
        s
    }
}

/// Planar kink `lower + (upper - lower) U0(+-xi / width)`, constant across
/// the transverse direction.
pub fn front_initial_2d(grid: Grid2D, o: Orientation, upper: f64, lower: f64, width: f64) -> Result<Field2D> {
    if !(upper > lower) {
        return Err(Error::InvalidParameter(format!(
            "need upper > lower, got {upper} <= {lower}"
        )));
    }
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "kink width must be positive, got {width}"
        )));
    }
    let s = o.sign();
    let dxi = grid.d_xi();
    let row: Vec<f64> = (0..grid.n_xi)
        .map(|i| lower + (upper - lower) * kink(s * (grid.xi_min + i as f64 * dxi) / width))
        .collect();
    let mut values = Vec::with_capacity(grid.n_xi * grid.n_eta);
    for _ in 0..grid.n_eta {
        values.extend_from_slice(&row);
    }
    Ok(Field2D {
        grid,
        offset: 0,
        t: 0.0,
        values,
    })
}

struct Stepper2D {
    theta: f64,
    dt: f64,
    r_xi: f64,
    r_eta: f64,
    scheme: Scheme,
    boundary: Boundary,
    xi_solver: Option<Tridiag>,
    eta_solver: Option<CyclicTridiag>,
    row: Vec<f64>,
    col: Vec<f64>,
    col_rhs: Vec<f64>,
    lap: Vec<f64>,
}

impl Stepper2D {
    fn new(g: &Grid2D, cfg: &SolverConfig) -> Result<Self> {
        let dxi = g.d_xi();
        let deta = g.d_eta();
        cfg.validate(dxi.min(deta), 2)?;
        let theta = theta_of(cfg.scheme);
        // xi sweeps cover dt/2 each, the eta sweep the full dt
        let r_xi = 0.5 * cfg.dt / (dxi * dxi);
        let r_eta = cfg.dt / (deta * deta);
        let (xi_solver, eta_solver) = if theta > 0.0 {
            let n = g.n_xi;
            let (off, diag) = (-theta * r_xi, 1.0 + 2.0 * theta * r_xi);
            let xs = match cfg.boundary {
                Boundary::ClampToLevels => Tridiag::constant(n - 2, off, diag, off),
                Boundary::ZeroFlux => {
                    let mut a = vec![off; n];
                    let mut c = vec![off; n];
                    c[0] = 2.0 * off;
                    a[n - 1] = 2.0 * off;
                    Tridiag::new(&a, &vec![diag; n], &c)
                }
            };
            let es = CyclicTridiag::new(g.n_eta, 1.0 + 2.0 * theta * r_eta, -theta * r_eta);
            (Some(xs), Some(es))
        } else {
            (None, None)
        };
        Ok(Self {
            theta,
            dt: cfg.dt,
            r_xi,
            r_eta,
            scheme: cfg.scheme,
            boundary: cfg.boundary,
            xi_solver,
            eta_solver,
            row: vec![0.0; g.n_xi],
            col: vec![0.0; g.n_eta],
            col_rhs: vec![0.0; g.n_eta],
            lap: if cfg.scheme == Scheme::Explicit {
                vec![0.0; g.n_xi * g.n_eta]
            } else {
                Vec::new()
            },
        })
    }

    fn range(&self, n: usize) -> (usize, usize) {
        match self.boundary {
            Boundary::ClampToLevels => (1, n - 1),
            Boundary::ZeroFlux => (0, n),
        }
    }

    fn advance(&mut self, f: &mut Field2D, r: &Reaction) {
        let g = f.grid;
        let (nx, ny) = (g.n_xi, g.n_eta);
        let (lo, hi) = self.range(nx);
        if self.boundary == Boundary::ClampToLevels {
            for j in 0..ny {
                f.values[j * nx] = nearest_level(r, f.values[j * nx]);
                f.values[j * nx + nx - 1] = nearest_level(r, f.values[j * nx + nx - 1]);
            }
        }
        if self.scheme == Scheme::Explicit {
            self.explicit(f, r);
            f.t += self.dt;
            return;
        }
        let xi0 = f.xi(0);
        let dxi = g.d_xi();
        let deta = g.d_eta();
        for j in 0..ny {
            let eta = j as f64 * deta;
            let row = &mut f.values[j * nx..(j + 1) * nx];
            for (i, u) in row.iter_mut().enumerate().take(hi).skip(lo) {
                let x = g.point(xi0 + i as f64 * dxi, eta);
                *u += self.dt * r.eval(&x, *u);
            }
        }
        self.xi_sweep(f);
        self.eta_sweep(f, lo, hi);
        self.xi_sweep(f);
        f.t += self.dt;
    }

    fn xi_sweep(&mut self, f: &mut Field2D) {
        let nx = f.grid.n_xi;
        let (lo, hi) = self.range(nx);
        let ex = (1.0 - self.theta) * self.r_xi;
        let b = self.theta * self.r_xi;
        let solver = self.xi_solver.as_ref().unwrap();
        for j in 0..f.grid.n_eta {
            let u = &mut f.values[j * nx..(j + 1) * nx];
            let rhs = &mut self.row;
            for i in lo..hi {
                let l = if i == 0 {
                    2.0 * (u[1] - u[0])
                } else if i == nx - 1 {
                    2.0 * (u[nx - 2] - u[nx - 1])
                } else {
                    u[i - 1] - 2.0 * u[i] + u[i + 1]
                };
                rhs[i] = u[i] + ex * l;
            }
            if self.boundary == Boundary::ClampToLevels {
                rhs[1] += b * u[0];
                rhs[nx - 2] += b * u[nx - 1];
            }
            solver.solve(&mut rhs[lo..hi]);
            u[lo..hi].copy_from_slice(&rhs[lo..hi]);
        }
    }

    fn eta_sweep(&mut self, f: &mut Field2D, lo: usize, hi: usize) {
        let (nx, ny) = (f.grid.n_xi, f.grid.n_eta);
        let ex = (1.0 - self.theta) * self.r_eta;
        let solver = self.eta_solver.as_ref().unwrap();
        for i in lo..hi {
            for j in 0..ny {
                self.col[j] = f.values[j * nx + i];
            }
            for j in 0..ny {
                let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
                self.col_rhs[j] = self.col[j] + ex * (self.col[jm] - 2.0 * self.col[j] + self.col[jp]);
            }
            solver.solve(&mut self.col_rhs);
            for j in 0..ny {
                f.values[j * nx + i] = self.col_rhs[j];
            }
        }
    }

    fn explicit(&mut self, f: &mut Field2D, r: &Reaction) {
        let g = f.grid;
        let (nx, ny) = (g.n_xi, g.n_eta);
        let (lo, hi) = self.range(nx);
        let (dxi, deta) = (g.d_xi(), g.d_eta());
        let (a, b) = (1.0 / (dxi * dxi), 1.0 / (deta * deta));
        let xi0 = f.xi(0);
        let u = &f.values;
        for j in 0..ny {
            let (jm, jp) = ((j + ny - 1) % ny, (j + 1) % ny);
            for i in lo..hi {
                let c = u[j * nx + i];
                let lx = if i == 0 {
                    2.0 * (u[j * nx + 1] - c)
                } else if i == nx - 1 {
                    2.0 * (u[j * nx + nx - 2] - c)
                } else {
                    u[j * nx + i - 1] - 2.0 * c + u[j * nx + i + 1]
                };
                let ly = u[jm * nx + i] - 2.0 * c + u[jp * nx + i];
                let x = g.point(xi0 + i as f64 * dxi, j as f64 * deta);
                self.lap[j * nx + i] = c + self.dt * (a * lx + b * ly + r.eval(&x, c));
            }
        }
        for j in 0..ny {
            for i in lo..hi {
                f.values[j * nx + i] = self.lap[j * nx + i];
            }
        }
    }
}

/// One time step in the rotated frame.
pub fn step_2d(field: &Field2D, r: &Reaction, cfg: &SolverConfig) -> Result<Field2D> {
    check_dim(r, 2)?;
    let mut st = Stepper2D::new(&field.grid, cfg)?;
    let mut out = field.clone();
    st.advance(&mut out, r);
    check_bounds(&out.values, r, out.t)?;
    Ok(out)
}

/// Two-dimensional analogue of [`super::evolve`]; positions are the
/// transverse averages of the leading crossings along `xi`.
pub fn evolve_2d(initial: Field2D, r: &Reaction, cfg: &SolverConfig, obs: &Observers) -> Result<(Trajectory, Field2D)> {
    check_dim(r, 2)?;
    let mut st = Stepper2D::new(&initial.grid, cfg)?;
    let mut f = initial;
    let g = f.grid;
    let (nx, ny) = (g.n_xi, g.n_eta);
    check_bounds(&f.values, r, f.t)?;
    let period = lattice::membership(&g.zeta, r.period())?
        .period()
        .ok_or_else(|| Error::NotInLattice {
            dir: g.zeta.to_vec(),
            lattice: r.period().to_vec(),
        })?;
    let mut traj = Trajectory {
        orientation: obs.orientation,
        period,
        levels: obs.levels.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
        recenterings: 0,
    };
    let record = |f: &Field2D, traj: &mut Trajectory| {
        let positions = obs
            .levels
            .iter()
            .map(|&p| f.mean_crossing(p, obs.orientation).unwrap_or(f64::NAN))
            .collect();
        traj.records.push(Record {
            t: f.t,
            positions,
            shift: f.offset as f64 * g.d_xi(),
        });
    };
    record(&f, &mut traj);
    let steps = cfg.steps();
    for k in 1..=steps {
        st.advance(&mut f, r);
        if k % cfg.sample_every == 0 || k == steps {
            check_bounds(&f.values, r, f.t)?;
            if let Some(th) = cfg.recenter_threshold {
                let level = 0.5 * (f.values[0] + f.values[nx - 1]);
                if let Some(pos) = f.mean_crossing(level, obs.orientation) {
                    let center = f.xi(0) + 0.5 * (nx - 1) as f64 * g.d_xi();
                    if (pos - center).abs() > th {
                        let shift = ((pos - center) / g.d_xi()).round() as i64;
                        for j in 0..ny {
                            shift_values(&mut f.values[j * nx..(j + 1) * nx], shift);
                        }
                        f.offset += shift;
                        traj.recenterings += 1;
                    }
                }
            }
            for j in 0..ny {
                check_contamination(f.row(j), r, cfg.contamination_tol, f.t)?;
            }
            record(&f, &mut traj);
        }
    }
    Ok((traj, f))
}
