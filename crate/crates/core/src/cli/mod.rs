//! Command-line experiment runner.

mod config;

pub use config::*;

use crate::design::{
    design_1d, design_multidir, fg_envelope, measure_speed, measure_speeds_dirs, rational_directions, run_terrace,
    speed_pair_of, terrace_scenario, Design1dOptions, DesignNdOptions, DesignResult, PlanarNumerics, SpeedMap,
    SpeedNumerics, TerraceNumerics,
};
use crate::error::{Error, Result};
use crate::frontmetrics::{estimate_speed, fit_decay, DecayWindow, SpeedClass, SpeedEstimate};
use crate::reaction::{Reaction, DEFAULT_SIGMA};
use crate::solver::{
    evolve, evolve_2d, front_initial_2d, front_initial_for, Grid1D, Grid2D, Observers, Orientation, SolverConfig,
};
use crate::spectra::{certify_bistable, SpectraOptions};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "frontlab",
    version,
    about = "Pulsating fronts in periodic reaction-diffusion media"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Seed for randomized Newton seeding.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate one front and write its trajectory and final field.
    Simulate,
    /// Leftward and rightward speeds (or planar speeds per direction).
    Speed,
    /// Steady states, principal eigenvalues and bistability certificate.
    Certify,
    /// Converged profile and exponential tail fits.
    Decay,
    /// Reaction with prescribed leftward and rightward speeds.
    Design,
    /// Planar reaction with prescribed speeds in several directions.
    #[command(name = "design-nd")]
    DesignNd,
    /// Stacked terrace scenario, run in both directions.
    Terrace,
    /// Speeds over rational directions and the spreading envelope.
    Fg,
    /// Speed map over a grid of tau.
    Sweep,
}

/// Result of a command: whether every stated verdict passed, plus the text
/// report printed on stdout.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub report: String,
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = cli.out.clone();
    match execute(&cli) {
        Ok(o) => {
            print!("{}", o.report);
            if o.pass {
                0
            } else {
                println!("verdict: FAIL");
                1
            }
        }
        Err(e) => {
            let rec = ErrorRecord {
                kind: e.kind(),
                exit_code: e.exit_code(),
                message: e.to_string(),
            };
            let text = toml::to_string(&rec).unwrap_or_else(|_| format!("kind = \"{}\"\n", rec.kind));
            eprint!("{text}");
            if let Some(dir) = out {
                if std::fs::create_dir_all(&dir).is_ok() {
                    let _ = std::fs::write(dir.join("error.toml"), &text);
                }
            }
            e.exit_code()
        }
    }
}

/// Loads the configuration and runs the command inside a thread pool of the
/// requested size.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = Some(s);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(1);
    if jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::create_dir_all(&out)?;
    pool.install(|| run(cli.command, &cfg, &out))
}

/// Runs one command with a parsed configuration, writing artifacts to `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut o = match cmd {
        Command::Simulate => simulate(cfg, out),
        Command::Speed => speed(cfg, out),
        Command::Certify => certify(cfg, out),
        Command::Decay => decay(cfg, out),
        Command::Design => design(cfg, out),
        Command::DesignNd => design_nd(cfg, out),
        Command::Terrace => terrace(cfg, out),
        Command::Fg => fg(cfg, out),
        Command::Sweep => sweep(cfg, out),
    }?;
    if let Some(name) = &cfg.scenario {
        o.report = format!("scenario: {name}\n{}", o.report);
    }
    std::fs::write(out.join("report.txt"), &o.report)?;
    Ok(o)
}

fn write(out: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(out.join(name), text)?;
    Ok(())
}

fn speed_numerics(cfg: &ExperimentConfig, base: SpeedNumerics) -> SpeedNumerics {
    let n = &cfg.numerics;
    SpeedNumerics {
        half_width: n.half_width_length.unwrap_or(base.half_width),
        dx: n.dx_length.unwrap_or(base.dx),
        dt: n.dt_time.unwrap_or(base.dt),
        t_end: n.t_end_time.unwrap_or(base.t_end),
        recenter: n.recenter_length.unwrap_or(base.recenter),
        discard: cfg.discard(),
        scheme: n.scheme.unwrap_or(base.scheme),
    }
}

fn planar_numerics(cfg: &ExperimentConfig, base: PlanarNumerics) -> PlanarNumerics {
    let n = &cfg.numerics;
    PlanarNumerics {
        half_width: n.half_width_length.unwrap_or(base.half_width),
        n_xi: n.n_xi.unwrap_or(base.n_xi),
        n_eta: n.n_eta.unwrap_or(base.n_eta),
        dt: n.dt_time.unwrap_or(base.dt),
        t_end: n.t_end_time.unwrap_or(base.t_end),
        recenter: n.recenter_length.unwrap_or(base.recenter),
        discard: cfg.discard(),
    }
}

fn solver_config(cfg: &ExperimentConfig, r: &Reaction, t_end: f64) -> SolverConfig {
    let n = &cfg.numerics;
    let s = r.length_scale();
    let base = SolverConfig::for_reaction(r, n.t_end_time.unwrap_or(t_end) * s * s);
    SolverConfig {
        dt: n.dt_time.map_or(base.dt, |d| d * s * s),
        scheme: n.scheme.unwrap_or(base.scheme),
        boundary: n.boundary.unwrap_or(base.boundary),
        sample_every: n.sample_every_steps.unwrap_or(base.sample_every),
        recenter_threshold: n.recenter_length.map(|l| l * s),
        ..base
    }
}

fn check_class(label: &str, got: SpeedClass, want: Option<SpeedClass>, report: &mut String) -> bool {
    match want {
        None => true,
        Some(w) => {
            let ok = got == w;
            let _ = writeln!(
                report,
                "{} {label}: expected {}, got {}",
                if ok { "PASS" } else { "FAIL" },
                w.name(),
                got.name()
            );
            ok
        }
    }
}

fn estimate_row(label: &str, e: &SpeedEstimate) -> String {
    format!(
        "{label},{},{},{},{},{}\n",
        e.c,
        e.stderr,
        e.class.name(),
        match e.method {
            crate::frontmetrics::FitMethod::PeriodSynchronized => "period_synchronized",
            crate::frontmetrics::FitMethod::Raw => "raw",
        },
        e.displacement
    )
}

fn planar_directions(cfg: &ExperimentConfig) -> Vec<[f64; 2]> {
    cfg.measurement
        .directions
        .clone()
        .unwrap_or_else(|| vec![[1.0, 0.0], [0.0, 1.0]])
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let r = cfg.reaction()?;
    let s = r.length_scale();
    let n = &cfg.numerics;
    let hw = n.half_width_length.unwrap_or(40.0) * s;
    let mut report = String::new();
    let dirs = cfg
        .measurement
        .orientation
        .unwrap_or(Direction::RightMoving)
        .orientations();
    let levels = r.levels();
    for o in dirs {
        let obs = Observers {
            levels: levels.windows(2).rev().map(|w| 0.5 * (w[0] + w[1])).collect(),
            orientation: o,
        };
        let mut sc = solver_config(cfg, &r, 100.0);
        sc.recenter_threshold = Some(n.recenter_length.unwrap_or(5.0) * s);
        if let Some(k) = n.snapshot_count {
            sc.snapshot_every = Some((sc.steps() / k.max(1)).max(1));
        }
        let (traj, field_csv) = match r.dim() {
            1 => {
                let grid = Grid1D::centered(hw, n.dx_length.unwrap_or(0.05) * s)?;
                let f = front_initial_for(grid, &r, o)?;
                let (traj, f) = evolve(f, &r, &sc, &obs)?;
                (traj, f.to_csv())
            }
            2 => {
                let zeta = planar_directions(cfg)[0];
                let n_xi = n.n_xi.unwrap_or(801);
                let grid = Grid2D::for_reaction(&r, zeta, -hw, hw, n_xi, n.n_eta.unwrap_or(16))?;
                let f = front_initial_2d(grid, o, r.max_level(), r.min_level(), r.length_scale())?;
                let (traj, f) = evolve_2d(f, &r, &sc, &obs)?;
                (traj, f.to_csv())
            }
            d => {
                return Err(Error::InvalidParameter(format!(
                    "simulation in {d} dimensions is not supported"
                )))
            }
        };
        write(out, &format!("trajectory_{}.csv", o.name()), &traj.to_csv())?;
        write(out, &format!("field_{}.csv", o.name()), &field_csv)?;
        if !traj.snapshots.is_empty() {
            let mut csv = String::from("t,x,u\n");
            for sn in &traj.snapshots {
                for (i, u) in sn.values.iter().enumerate() {
                    let _ = writeln!(csv, "{},{},{}", sn.t, sn.x_start + i as f64 * sn.dx, u);
                }
            }
            write(out, &format!("snapshots_{}.csv", o.name()), &csv)?;
        }
        let _ = writeln!(
            report,
            "{}: {} records, {} recenterings",
            o.name(),
            traj.records.len(),
            traj.recenterings
        );
        for p in &obs.levels {
            if let Ok(e) = estimate_speed(&traj, *p, cfg.discard()) {
                let _ = writeln!(
                    report,
                    "  level {p}: c = {:.6} +- {:.2e} [{}]",
                    e.c,
                    e.stderr,
                    e.class.name()
                );
            }
        }
    }
    Ok(Outcome { pass: true, report })
}

fn speed(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let r = cfg.reaction()?;
    let mut report = String::new();
    let mut pass = true;
    if r.dim() == 1 {
        let num = speed_numerics(cfg, SpeedNumerics::default());
        let mut csv = String::from("orientation,c,stderr,class,method,displacement\n");
        let dir = cfg.measurement.orientation.unwrap_or(Direction::Both);
        let (left, right) = if dir == Direction::Both {
            let p = speed_pair_of(&r, &num)?;
            (Some(p.left), Some(p.right))
        } else {
            let e = measure_speed(&r, dir.orientations()[0], &num)?;
            if dir == Direction::LeftMoving {
                (Some(e), None)
            } else {
                (None, Some(e))
            }
        };
        for (label, e, want) in [
            ("left", left, cfg.expect.left_class),
            ("right", right, cfg.expect.right_class),
        ] {
            if let Some(e) = e {
                csv.push_str(&estimate_row(label, &e));
                let _ = writeln!(
                    report,
                    "{label}: c = {:.6} +- {:.2e} [{}]",
                    e.c,
                    e.stderr,
                    e.class.name()
                );
                pass &= check_class(label, e.class, want, &mut report);
            }
        }
        write(out, "speed.csv", &csv)?;
    } else {
        let num = planar_numerics(cfg, PlanarNumerics::default());
        let dirs = planar_directions(cfg);
        let est = measure_speeds_dirs(&r, &dirs, &num)?;
        let mut csv = String::from("zeta_x,zeta_y,c,stderr,class,method,displacement\n");
        for (k, (z, e)) in dirs.iter().zip(&est).enumerate() {
            csv.push_str(&estimate_row(&format!("{},{}", z[0], z[1]), e));
            let _ = writeln!(
                report,
                "zeta {z:?}: c = {:.6} +- {:.2e} [{}]",
                e.c,
                e.stderr,
                e.class.name()
            );
            let want = cfg.expect.direction_classes.as_ref().and_then(|v| v.get(k).copied());
            pass &= check_class(&format!("direction {}", k + 1), e.class, want, &mut report);
        }
        write(out, "speed.csv", &csv)?;
    }
    Ok(Outcome { pass, report })
}

fn certify(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let r = cfg.reaction()?;
    let c = cfg.certify.clone().unwrap_or_default();
    let d = SpectraOptions::default();
    let opts = SpectraOptions {
        nodes_per_unit: c.nodes_per_length.unwrap_or(d.nodes_per_unit),
        seed: cfg.seed.unwrap_or(d.seed),
        random_seeds: c.random_seeds.unwrap_or(d.random_seeds),
        harvest_runs: c.harvest_runs.unwrap_or(d.harvest_runs),
        harvest_time: c.harvest_time.unwrap_or(d.harvest_time),
        max_newton: d.max_newton,
    };
    let cert = certify_bistable(&r, &opts)?;
    write(out, "certification.csv", &cert.to_csv())?;
    let want = cfg.expect.certified.unwrap_or(true);
    Ok(Outcome {
        pass: cert.certified == want,
        report: cert.summary(),
    })
}

fn decay(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let r = cfg.reaction()?;
    if r.dim() != 1 {
        return Err(Error::InvalidParameter("decay fits need a 1-D reaction".into()));
    }
    let s = r.length_scale();
    let n = &cfg.numerics;
    let tol = cfg.expect.relative_tolerance.unwrap_or(0.05);
    let d = DecayWindow::default();
    let window = DecayWindow {
        min_dev: cfg.measurement.decay_min_deviation.unwrap_or(d.min_dev),
        max_dev: cfg.measurement.decay_max_deviation.unwrap_or(d.max_dev),
        ..d
    };
    let mut csv = String::from("orientation,side,rate,theoretical,relative_error,points\n");
    let mut report = String::new();
    let mut pass = true;
    for o in cfg
        .measurement
        .orientation
        .unwrap_or(Direction::RightMoving)
        .orientations()
    {
        let grid = Grid1D::centered(n.half_width_length.unwrap_or(60.0) * s, n.dx_length.unwrap_or(0.05) * s)?;
        let f = front_initial_for(grid, &r, o)?;
        let mut sc = solver_config(cfg, &r, 200.0);
        sc.recenter_threshold = Some(n.recenter_length.unwrap_or(5.0) * s);
        let obs = Observers::midlevel(&r, o);
        let (traj, field) = evolve(f, &r, &sc, &obs)?;
        let est = estimate_speed(&traj, obs.levels[0], cfg.discard())?;
        let c = if est.class == SpeedClass::Zero { 0.0 } else { est.c };
        let (ahead, behind) = fit_decay(
            &field,
            o,
            (r.max_level(), r.min_level()),
            (r.gamma(), r.gamma()),
            c,
            window,
        )?;
        write(out, &format!("profile_{}.csv", o.name()), &field.to_csv())?;
        let _ = writeln!(report, "{}: c = {:.6} [{}]", o.name(), est.c, est.class.name());
        for fit in [ahead, behind] {
            let side = match fit.side {
                crate::frontmetrics::Tail::Ahead => "ahead",
                crate::frontmetrics::Tail::Behind => "behind",
            };
            let err = fit.relative_error();
            let _ = writeln!(
                csv,
                "{},{side},{},{},{},{}",
                o.name(),
                fit.rate,
                fit.theoretical,
                err,
                fit.points
            );
            let ok = err <= tol;
            pass &= ok;
            let _ = writeln!(
                report,
                "{} {side} tail: rate {:.6}, expected {:.6} (relative error {:.2e})",
                if ok { "PASS" } else { "FAIL" },
                fit.rate,
                fit.theoretical,
                err
            );
        }
    }
    write(out, "decay.csv", &csv)?;
    Ok(Outcome { pass, report })
}

fn design_outcome(d: &DesignResult, tol: f64, out: &Path) -> Result<Outcome> {
    write(out, "design_log.csv", &d.log_csv())?;
    let spec = toml::to_string(&d.reaction.to_spec()).map_err(|e| Error::Config(e.to_string()))?;
    write(out, "reaction.toml", &spec)?;
    let mut report = d.report();
    let mut pass = true;
    for ((name, t), (a, err)) in d
        .speed_names
        .iter()
        .zip(&d.targets)
        .zip(d.achieved.iter().zip(d.relative_errors()))
    {
        let ok = if *t == 0.0 {
            a.class == SpeedClass::Zero
        } else {
            err <= tol
        };
        pass &= ok;
        let _ = writeln!(
            report,
            "{} {name}: relative error {err:.3e}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    Ok(Outcome { pass, report })
}

fn design(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let dc = cfg
        .design
        .as_ref()
        .ok_or_else(|| Error::Config("missing [design] section".into()))?;
    if dc.targets_speed.len() != 2 {
        return Err(Error::Config("design.targets_speed needs [cL, cR]".into()));
    }
    let base = Design1dOptions::default();
    let opts = Design1dOptions {
        sigma: dc.sigma.unwrap_or(DEFAULT_SIGMA),
        numerics: speed_numerics(cfg, base.numerics),
        ratio_tol: dc.ratio_tolerance.unwrap_or(base.ratio_tol),
        max_iter: base.max_iter,
    };
    let d = design_1d(dc.targets_speed[0], dc.targets_speed[1], &opts)?;
    design_outcome(&d, cfg.expect.relative_tolerance.unwrap_or(0.05), out)
}

fn design_nd(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let dc = cfg
        .design
        .as_ref()
        .ok_or_else(|| Error::Config("missing [design] section".into()))?;
    let dirs = dc
        .directions
        .clone()
        .ok_or_else(|| Error::Config("design.directions is required for design-nd".into()))?;
    let base = DesignNdOptions::default();
    let opts = DesignNdOptions {
        sigma: dc.sigma.unwrap_or(DEFAULT_SIGMA),
        lattice: dc.lattice_lengths.clone().unwrap_or(base.lattice.clone()),
        numerics: planar_numerics(cfg, base.numerics),
        tol: dc.speed_tolerance.unwrap_or(base.tol),
        ..base
    };
    let d = design_multidir(&dc.targets_speed, &dirs, &opts)?;
    design_outcome(&d, cfg.expect.relative_tolerance.unwrap_or(0.1), out)
}

fn terrace(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let tc = cfg
        .terrace
        .as_ref()
        .ok_or_else(|| Error::Config("missing [terrace] section".into()))?;
    let sc = terrace_scenario(tc.variant, tc.fronts, &SpeedNumerics::design())?;
    let n = &cfg.numerics;
    let d = TerraceNumerics::default();
    let num = TerraceNumerics {
        dx: n.dx_length.unwrap_or(d.dx),
        dt: n.dt_time.unwrap_or(d.dt),
        t_end: n.t_end_time.unwrap_or(d.t_end),
        margin: n.margin_length.unwrap_or(d.margin),
        snapshots: n.snapshot_count.unwrap_or(d.snapshots),
    };
    let mut comp = String::from("level,sigma,tau,mirrored,cL,cR\n");
    for (k, c) in sc.components.iter().enumerate() {
        let _ = writeln!(
            comp,
            "{},{},{},{},{},{}",
            k + 1,
            c.sigma,
            c.tau,
            c.mirrored,
            c.speeds.left.c,
            c.speeds.right.c
        );
    }
    write(out, "components.csv", &comp)?;
    let mut report = String::new();
    let mut pass = true;
    for o in [Orientation::RightMoving, Orientation::LeftMoving] {
        let (rep, _) = run_terrace(&sc, o, &num)?;
        write(out, &format!("terrace_{}.csv", o.name()), &rep.to_csv())?;
        report.push_str(&rep.summary());
        let ok = rep.verdict == crate::frontmetrics::Verdict::Valid && rep.platforms == sc.expected(o);
        pass &= ok;
        let _ = writeln!(
            report,
            "{} {}: expected platforms {:?}",
            if ok { "PASS" } else { "FAIL" },
            o.name(),
            sc.expected(o)
        );
    }
    Ok(Outcome { pass, report })
}

fn fg(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let r = cfg.reaction()?;
    if r.dim() != 2 {
        return Err(Error::InvalidParameter(
            "the spreading envelope needs a planar reaction".into(),
        ));
    }
    let fc = cfg.fg.clone().unwrap_or_default();
    let dirs: Vec<[f64; 2]> = match fc.directions {
        Some(d) => d,
        None => rational_directions(fc.direction_count.unwrap_or(8))
            .iter()
            .map(|d| d.to_f64())
            .collect(),
    };
    let num = planar_numerics(cfg, PlanarNumerics::default());
    let est = measure_speeds_dirs(&r, &dirs, &num)?;
    let mut csv = String::from("zeta_x,zeta_y,c,stderr,class\n");
    for (z, e) in dirs.iter().zip(&est) {
        let _ = writeln!(csv, "{},{},{},{},{}", z[0], z[1], e.c, e.stderr, e.class.name());
    }
    write(out, "fg_samples.csv", &csv)?;
    let samples: Vec<(Vec<f64>, f64)> = dirs
        .iter()
        .zip(&est)
        .map(|(z, e)| (z.to_vec(), if e.class == SpeedClass::Zero { 0.0 } else { e.c }))
        .collect();
    let queries: Vec<Vec<f64>> = fc
        .queries
        .unwrap_or_else(|| dirs.clone())
        .iter()
        .map(|q| q.to_vec())
        .collect();
    let w = fg_envelope(&samples, &queries)?;
    let mut env = String::from("e_x,e_y,w\n");
    let mut report = String::new();
    for (q, w) in queries.iter().zip(&w) {
        let _ = writeln!(env, "{},{},{}", q[0], q[1], w);
        let _ = writeln!(report, "e = ({}, {}): w* = {:.6}", q[0], q[1], w);
    }
    write(out, "fg_envelope.csv", &env)?;
    Ok(Outcome { pass: true, report })
}

fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let sc = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sweep] section".into()))?;
    let num = speed_numerics(cfg, SpeedNumerics::default());
    let map = SpeedMap::sample(&sc.taus, sc.sigma.unwrap_or(DEFAULT_SIGMA), &num)?;
    write(out, "sweep.csv", &map.to_csv())?;
    let v = map.monotonicity_violations();
    let mut report = format!("{} tau samples, sigma = {}\n", map.taus.len(), map.sigma);
    for (k, side) in &v {
        let _ = writeln!(
            report,
            "FAIL {side} speed decreases between tau = {} and {}",
            map.taus[k - 1],
            map.taus[*k]
        );
    }
    Ok(Outcome {
        pass: v.is_empty(),
        report,
    })
}
