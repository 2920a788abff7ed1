//! Python bindings for `frontlab`.

use frontlab::design::{self, Design1dOptions, SpeedNumerics};
use frontlab::frontmetrics::SpeedEstimate;
use frontlab::reaction::{self, IntegralSign, MultiDirParams, ReactionSpec};
use frontlab::solver::Orientation;
use frontlab::spectra::{self, SpectraOptions};
use frontlab::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: Error) -> PyErr {
    let msg = format!("{}: {e}", e.kind());
    match e.exit_code() {
        2 => PyValueError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

fn orientation(name: &str) -> PyResult<Orientation> {
    match name {
        "right" | "right-moving" => Ok(Orientation::RightMoving),
        "left" | "left-moving" => Ok(Orientation::LeftMoving),
        _ => Err(PyValueError::new_err(format!("unknown orientation {name:?}"))),
    }
}

/// Spatially periodic reaction term `f(x, u)`.
#[pyclass(name = "Reaction", module = "frontlab_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyReaction {
    inner: reaction::Reaction,
}

#[pymethods]
impl PyReaction {
    /// Balanced cubic `u(1-u)(u-1/2)` in `dim` dimensions.
    #[staticmethod]
    #[pyo3(signature = (dim = 1))]
    fn cubic(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: reaction::Reaction::cubic(dim).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (tau, sigma = reaction::DEFAULT_SIGMA))]
    fn family_1d(tau: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: reaction::Reaction::family_1d(tau, sigma).map_err(err)?,
        })
    }

    /// Planar or higher-dimensional family over the coordinate axes.
    #[staticmethod]
    #[pyo3(signature = (tau, sigma = reaction::DEFAULT_SIGMA))]
    fn family_axes(tau: Vec<f64>, sigma: f64) -> PyResult<Self> {
        Ok(Self {
            inner: reaction::Reaction::family_multidir(MultiDirParams::axes(tau, sigma)).map_err(err)?,
        })
    }

    /// Reaction from a TOML table in the configuration schema.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let spec: ReactionSpec = toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: spec.build().map_err(err)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.inner.to_spec()).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Bistable layers stacked into levels `0..=len`; `layers[0]` is the top.
    #[staticmethod]
    fn stack(layers: Vec<PyReaction>) -> PyResult<Self> {
        let parts = layers.into_iter().map(|l| l.inner).collect();
        Ok(Self {
            inner: reaction::Reaction::stack(parts).map_err(err)?,
        })
    }

    fn rescale(&self, nu: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.rescale(nu).map_err(err)?,
        })
    }

    fn mirror(&self) -> Self {
        Self {
            inner: self.inner.mirror(),
        }
    }

    fn flip(&self) -> Self {
        Self {
            inner: self.inner.flip(),
        }
    }

    fn dual(&self) -> Self {
        Self {
            inner: self.inner.dual(),
        }
    }

    fn eval(&self, x: Vec<f64>, u: f64) -> PyResult<f64> {
        if x.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates",
                self.inner.dim()
            )));
        }
        Ok(self.inner.eval(&x, u))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn levels(&self) -> Vec<f64> {
        self.inner.levels().to_vec()
    }

    #[getter]
    fn period(&self) -> Vec<f64> {
        self.inner.period().to_vec()
    }

    #[getter]
    fn length_scale(&self) -> f64 {
        self.inner.length_scale()
    }

    /// Cell average of `int f du` over the full level range.
    fn integral(&self) -> f64 {
        self.inner.integral()
    }

    /// One of `"positive"`, `"negative"` or `"zero"`.
    fn integral_sign(&self) -> &'static str {
        match self.inner.integral_sign() {
            IntegralSign::Positive => "positive",
            IntegralSign::Negative => "negative",
            IntegralSign::ZeroWithinTol => "zero",
        }
    }

    fn __repr__(&self) -> String {
        format!("Reaction(dim={}, levels={:?})", self.inner.dim(), self.inner.levels())
    }
}

#[pyclass(name = "SpeedEstimate", module = "frontlab_py", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySpeed {
    c: f64,
    stderr: f64,
    /// `"positive"`, `"zero"` or `"inconclusive"`.
    speed_class: String,
    displacement: f64,
}

impl From<SpeedEstimate> for PySpeed {
    fn from(e: SpeedEstimate) -> Self {
        Self {
            c: e.c,
            stderr: e.stderr,
            speed_class: e.class.name().to_string(),
            displacement: e.displacement,
        }
    }
}

#[pymethods]
impl PySpeed {
    fn __repr__(&self) -> String {
        format!(
            "SpeedEstimate(c={:.6}, stderr={:.2e}, class={})",
            self.c, self.stderr, self.speed_class
        )
    }
}

fn numerics(half_width: f64, t_end: f64) -> SpeedNumerics {
    SpeedNumerics {
        half_width,
        t_end,
        ..SpeedNumerics::default()
    }
}

/// Speed of the front in the given direction (`"left"` or `"right"`).
#[pyfunction]
#[pyo3(signature = (reaction, direction, half_width = 40.0, t_end = 200.0))]
fn measure_speed(
    py: Python<'_>,
    reaction: &PyReaction,
    direction: &str,
    half_width: f64,
    t_end: f64,
) -> PyResult<PySpeed> {
    let o = orientation(direction)?;
    let r = reaction.inner.clone();
    py.detach(move || design::measure_speed(&r, o, &numerics(half_width, t_end)))
        .map(Into::into)
        .map_err(err)
}

/// `(left, right)` speeds of a 1-D reaction.
#[pyfunction]
#[pyo3(signature = (reaction, half_width = 40.0, t_end = 200.0))]
fn speed_pair(py: Python<'_>, reaction: &PyReaction, half_width: f64, t_end: f64) -> PyResult<(PySpeed, PySpeed)> {
    let r = reaction.inner.clone();
    let p = py
        .detach(move || design::speed_pair_of(&r, &numerics(half_width, t_end)))
        .map_err(err)?;
    Ok((p.left.into(), p.right.into()))
}

#[pyclass(name = "SteadyState", module = "frontlab_py", frozen, get_all)]
struct PySteadyState {
    max: f64,
    min: f64,
    lambda1: f64,
    tag: String,
    values: Vec<f64>,
}

#[pyclass(name = "Certification", module = "frontlab_py", frozen, get_all)]
struct PyCertification {
    certified: bool,
    states: Vec<Py<PySteadyState>>,
    csv: String,
}

/// Steady states with principal eigenvalues and the bistability verdict.
#[pyfunction]
#[pyo3(signature = (reaction, seed = 0))]
fn certify(py: Python<'_>, reaction: &PyReaction, seed: u64) -> PyResult<PyCertification> {
    let r = reaction.inner.clone();
    let opts = SpectraOptions {
        seed,
        ..SpectraOptions::default()
    };
    let cert = py.detach(move || spectra::certify_bistable(&r, &opts)).map_err(err)?;
    let states = cert
        .states
        .iter()
        .map(|s| {
            Py::new(
                py,
                PySteadyState {
                    max: s.max(),
                    min: s.min(),
                    lambda1: s.lambda1,
                    tag: s.tag.name().to_string(),
                    values: s.values.clone(),
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(PyCertification {
        certified: cert.certified,
        csv: cert.to_csv(),
        states,
    })
}

/// Largest eigenvalue of `D2 + q` on a periodic grid of spacing `dx`.
#[pyfunction]
fn principal_eigenvalue(q: Vec<f64>, dx: f64) -> PyResult<f64> {
    spectra::principal_eigenpair(&q, dx).map(|e| e.lambda).map_err(err)
}

#[pyclass(name = "DesignResult", module = "frontlab_py", frozen, get_all)]
struct PyDesign {
    tau: Vec<f64>,
    nu: f64,
    reaction: PyReaction,
    achieved: Vec<PySpeed>,
    relative_errors: Vec<f64>,
    log_csv: String,
}

/// Reaction whose leftward and rightward speeds are `(c_left, c_right)`.
#[pyfunction]
#[pyo3(signature = (c_left, c_right, sigma = reaction::DEFAULT_SIGMA))]
fn design_1d(py: Python<'_>, c_left: f64, c_right: f64, sigma: f64) -> PyResult<PyDesign> {
    let opts = Design1dOptions {
        sigma,
        ..Design1dOptions::default()
    };
    let d = py
        .detach(move || design::design_1d(c_left, c_right, &opts))
        .map_err(err)?;
    Ok(PyDesign {
        relative_errors: d.relative_errors(),
        log_csv: d.log_csv(),
        tau: d.tau,
        nu: d.nu,
        reaction: PyReaction { inner: d.reaction },
        achieved: d.achieved.into_iter().map(Into::into).collect(),
    })
}

/// Spreading envelope `w*(e)` from sampled `(direction, speed)` pairs.
#[pyfunction]
fn fg_envelope(samples: Vec<(Vec<f64>, f64)>, queries: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    design::fg_envelope(&samples, &queries).map_err(err)
}

/// The first `count` rational unit directions, as `(x, y)` floats.
#[pyfunction]
fn rational_directions(count: usize) -> Vec<(f64, f64)> {
    design::rational_directions(count)
        .iter()
        .map(|d| {
            let [x, y] = d.to_f64();
            (x, y)
        })
        .collect()
}

/// Stationary kink `1 / (1 + exp(x / sqrt 2))`.
#[pyfunction]
fn kink(x: f64) -> f64 {
    reaction::kink(x)
}

#[pymodule]
fn frontlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyReaction>()?;
    m.add_class::<PySpeed>()?;
    m.add_class::<PySteadyState>()?;
    m.add_class::<PyCertification>()?;
    m.add_class::<PyDesign>()?;
    m.add_function(wrap_pyfunction!(measure_speed, m)?)?;
    m.add_function(wrap_pyfunction!(speed_pair, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(principal_eigenvalue, m)?)?;
    m.add_function(wrap_pyfunction!(design_1d, m)?)?;
    m.add_function(wrap_pyfunction!(fg_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(rational_directions, m)?)?;
    m.add_function(wrap_pyfunction!(kink, m)?)?;
    Ok(())
}
