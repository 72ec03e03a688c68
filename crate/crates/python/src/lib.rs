//! Python bindings: vehicle parameters, road profiles, drive simulation,
//! input estimation, IRI, system identification, trace matching and
//! evaluation. Sequences cross the boundary as plain lists of floats.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use roughtrack::geomatch::GeoPoint;
use roughtrack::pipeline::eval::{evaluate as eval_segments, fit_calibration as fit, Alignment};
use roughtrack::pipeline::estimate::{estimate_segments, EstimateOptions, Measurements};
use roughtrack::pipeline::io;
use roughtrack::signal::TimeSeries;
use roughtrack::simulate::{DriveConfig, SpeedProfile};
use roughtrack::sysid::{identify as run_identify, SysIdProblem};
use roughtrack::{Error, IriConfig, ModelKind};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

/// Suspension parameters; `i_s` and `l` are only needed by the half-car.
#[pyclass(name = "VehicleParams", from_py_object)]
#[derive(Clone)]
struct PyVehicleParams {
    inner: roughtrack::VehicleParams,
}

#[pymethods]
impl PyVehicleParams {
    #[new]
    #[pyo3(signature = (m_s, m_u, k_s, c_s, k_t, i_s=None, l=None))]
    fn new(m_s: f64, m_u: f64, k_s: f64, c_s: f64, k_t: f64, i_s: Option<f64>, l: Option<f64>) -> Self {
        let mut inner = roughtrack::VehicleParams::quarter_car(m_s, m_u, k_s, c_s, k_t);
        inner.i_s = i_s;
        inner.l = l;
        Self { inner }
    }

    /// The standard Golden car.
    #[staticmethod]
    fn golden() -> Self {
        Self { inner: roughtrack::golden_car_params() }
    }

    /// The identified passenger car, with roll inertia and half-axis width.
    #[staticmethod]
    fn identified() -> Self {
        Self { inner: roughtrack::identified_car_params() }
    }

    /// A parameter file path, or `golden` / `identified`.
    #[staticmethod]
    fn load(spec: &str) -> PyResult<Self> {
        Ok(Self { inner: io::load_params(spec).map_err(to_py)? })
    }

    /// Parameter-file text for these values.
    fn to_text(&self) -> String {
        io::format_params(&self.inner)
    }

    #[getter]
    fn m_s(&self) -> f64 {
        self.inner.m_s
    }
    #[getter]
    fn m_u(&self) -> f64 {
        self.inner.m_u
    }
    #[getter]
    fn k_s(&self) -> f64 {
        self.inner.k_s
    }
    #[getter]
    fn c_s(&self) -> f64 {
        self.inner.c_s
    }
    #[getter]
    fn k_t(&self) -> f64 {
        self.inner.k_t
    }
    #[getter]
    fn i_s(&self) -> Option<f64> {
        self.inner.i_s
    }
    #[getter]
    fn l(&self) -> Option<f64> {
        self.inner.l
    }

    /// Natural frequencies (Hz) of the quarter-car (`qc`) or half-car (`hc`) model.
    #[pyo3(signature = (model="qc"))]
    fn natural_frequencies(&self, model: &str) -> PyResult<Vec<f64>> {
        let ss = roughtrack::build_model(parse::<ModelKind>(model)?, &self.inner).map_err(to_py)?;
        let eig = ss.a.clone().complex_eigenvalues();
        let mut f: Vec<f64> = eig
            .iter()
            .filter(|z| z.im > 0.0)
            .map(|z| z.norm() / (2.0 * std::f64::consts::PI))
            .collect();
        f.sort_by(f64::total_cmp);
        Ok(f)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        let opt = |v: Option<f64>| v.map_or("None".to_string(), |x| x.to_string());
        format!(
            "VehicleParams(m_s={}, m_u={}, k_s={}, c_s={}, k_t={}, i_s={}, l={})",
            p.m_s,
            p.m_u,
            p.k_s,
            p.c_s,
            p.k_t,
            opt(p.i_s),
            opt(p.l)
        )
    }
}

/// Uniformly sampled elevation (m) of one or two wheel tracks.
#[pyclass(name = "RoadProfile")]
struct PyRoadProfile {
    inner: roughtrack::RoadProfile,
}

#[pymethods]
impl PyRoadProfile {
    #[new]
    #[pyo3(signature = (spacing, left, right=None, start=0.0))]
    fn new(spacing: f64, left: Vec<f64>, right: Option<Vec<f64>>, start: f64) -> PyResult<Self> {
        Ok(Self { inner: roughtrack::RoadProfile::new(spacing, start, left, right).map_err(to_py)? })
    }

    /// Random profile of roughness class `A`–`H`.
    #[staticmethod]
    #[pyo3(signature = (class_, length, spacing=0.1, seed=0))]
    fn synthetic(class_: &str, length: f64, spacing: f64, seed: u64) -> PyResult<Self> {
        let class = parse(class_)?;
        Ok(Self { inner: roughtrack::synth_profile(class, length, spacing, seed).map_err(to_py)? })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(Self { inner: io::read_profile(path.as_ref()).map_err(to_py)? })
    }

    fn write(&self, path: &str) -> PyResult<()> {
        io::write_profile(path.as_ref(), &self.inner).map_err(to_py)
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing
    }
    #[getter]
    fn start(&self) -> f64 {
        self.inner.start
    }
    #[getter]
    fn left(&self) -> Vec<f64> {
        self.inner.left.clone()
    }
    #[getter]
    fn right(&self) -> Option<Vec<f64>> {
        self.inner.right.clone()
    }
    #[getter]
    fn stations(&self) -> Vec<f64> {
        (0..self.inner.len()).map(|i| self.inner.station(i)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// One IRI segment; `iri` is in mm/m.
#[pyclass(name = "IriSegment", frozen)]
struct PyIriSegment {
    #[pyo3(get)]
    start_station: f64,
    #[pyo3(get)]
    end_station: f64,
    #[pyo3(get)]
    iri: f64,
    #[pyo3(get)]
    geotag: Option<(f64, f64)>,
    #[pyo3(get)]
    transient: bool,
    #[pyo3(get)]
    partial: bool,
}

#[pymethods]
impl PyIriSegment {
    fn __repr__(&self) -> String {
        format!("IriSegment({}..{} m, iri={:.3})", self.start_station, self.end_station, self.iri)
    }
}

impl From<&roughtrack::IriSegment> for PyIriSegment {
    fn from(s: &roughtrack::IriSegment) -> Self {
        Self {
            start_station: s.start_station,
            end_station: s.end_station,
            iri: s.iri,
            geotag: s.geotag,
            transient: s.transient,
            partial: s.partial,
        }
    }
}

fn to_core(s: &PyIriSegment) -> roughtrack::IriSegment {
    roughtrack::IriSegment {
        start_station: s.start_station,
        end_station: s.end_station,
        iri: s.iri,
        geotag: s.geotag,
        n_samples: 0,
        transient: s.transient,
        partial: s.partial,
    }
}

fn segments(v: &[roughtrack::IriSegment]) -> Vec<PyIriSegment> {
    v.iter().map(Into::into).collect()
}

/// Simulated IMU drive: accelerations without gravity (m/s²), speed (m/s),
/// station under the wheels (m) and the applied road inputs `(left, right)`.
#[pyclass(name = "Drive", frozen)]
struct PyDrive {
    #[pyo3(get)]
    dt: f64,
    #[pyo3(get)]
    vertical: Vec<f64>,
    #[pyo3(get)]
    lateral: Vec<f64>,
    #[pyo3(get)]
    speed: Vec<f64>,
    #[pyo3(get)]
    station: Vec<f64>,
    #[pyo3(get)]
    input_left: Vec<f64>,
    #[pyo3(get)]
    input_right: Vec<f64>,
}

fn speed_profile(speed: &Bound<'_, PyAny>) -> PyResult<SpeedProfile> {
    if let Ok(v) = speed.extract::<f64>() {
        return SpeedProfile::constant(v).map_err(to_py);
    }
    let knots: Vec<(f64, f64)> = speed.extract()?;
    SpeedProfile::piecewise(knots).map_err(to_py)
}

/// Drives `params` over `profile`. `speed` is a constant in m/s or a list of
/// `(time, speed)` knots.
#[pyfunction]
#[pyo3(signature = (profile, speed, params, model="qc", noise=0.05, seed=0, dt=0.02, duration=None))]
#[allow(clippy::too_many_arguments)]
fn simulate_drive(
    profile: PyRef<'_, PyRoadProfile>,
    speed: &Bound<'_, PyAny>,
    params: PyRef<'_, PyVehicleParams>,
    model: &str,
    noise: f64,
    seed: u64,
    dt: f64,
    duration: Option<f64>,
) -> PyResult<PyDrive> {
    let cfg = DriveConfig {
        model: parse(model)?,
        dt,
        noise_std: noise,
        seed,
        duration,
        ..DriveConfig::default()
    };
    let t = roughtrack::drive(&profile.inner, &speed_profile(speed)?, &params.inner, &cfg).map_err(to_py)?;
    Ok(PyDrive {
        dt: t.dt,
        input_left: t.true_inputs.iter().map(|u| u[0]).collect(),
        input_right: t.true_inputs.iter().map(|u| u[1]).collect(),
        vertical: t.vertical_acc,
        lateral: t.lateral_acc,
        speed: t.speed,
        station: t.station,
    })
}

/// IRI segments of a measured profile (track average when it has two tracks).
#[pyfunction]
#[pyo3(signature = (profile, segment_length=40.0, spacing=None))]
fn iri(profile: PyRef<'_, PyRoadProfile>, segment_length: f64, spacing: Option<f64>) -> PyResult<Vec<PyIriSegment>> {
    let cfg = IriConfig::new(segment_length, spacing.unwrap_or(profile.inner.spacing)).map_err(to_py)?;
    let avg = roughtrack::average_tracks(&profile.inner).map_err(to_py)?;
    Ok(segments(&roughtrack::iri_from_profile(&avg, &cfg).map_err(to_py)?))
}

/// Estimates IRI segments from accelerations and speed sampled every `dt`.
///
/// `gravity` is subtracted from `vertical`; pass 0 for simulated signals.
/// Filter cutoffs of `None` disable that filter.
#[pyfunction]
#[pyo3(signature = (
    vertical, lateral, speed, dt, params, channels="vertical", model=None, gravity=0.0,
    lpf=None, hpf=Some(0.5), qr_ratio=None, initial_variance=None, calibration=1.0,
    segment_length=40.0, spacing=0.1,
))]
#[allow(clippy::too_many_arguments)]
fn estimate_iri(
    vertical: Vec<f64>,
    lateral: Vec<f64>,
    speed: Vec<f64>,
    dt: f64,
    params: PyRef<'_, PyVehicleParams>,
    channels: &str,
    model: Option<&str>,
    gravity: f64,
    lpf: Option<f64>,
    hpf: Option<f64>,
    qr_ratio: Option<f64>,
    initial_variance: Option<f64>,
    calibration: f64,
    segment_length: f64,
    spacing: f64,
) -> PyResult<Vec<PyIriSegment>> {
    let mut opts = EstimateOptions {
        channels: parse(channels)?,
        model: model.map(parse).transpose()?,
        gravity,
        lpf_vertical: lpf,
        lpf_lateral: lpf,
        hpf_lateral: hpf,
        calibration,
        iri: IriConfig::new(segment_length, spacing).map_err(to_py)?,
        ..EstimateOptions::default()
    };
    if let Some(r) = qr_ratio {
        opts.qr_ratio = r;
    }
    if let Some(v) = initial_variance {
        opts.initial_variance = v;
    }
    let series = |v: Vec<f64>| TimeSeries::single(0.0, dt, v).map_err(to_py);
    let m = Measurements {
        vertical: series(vertical)?,
        lateral: series(lateral)?,
        speed: series(speed)?,
        positions: None,
    };
    Ok(segments(&estimate_segments(&m, &params.inner, &opts).map_err(to_py)?))
}

/// Identifies `K_s, C_s, K_t, I_s` and the gain `mu` of a half-car from
/// measured accelerations and the road inputs under each track.
#[pyfunction]
#[pyo3(signature = (vertical, lateral, input_left, input_right, dt, params, band=(0.5, 15.0), starts=5, seed=0))]
#[allow(clippy::too_many_arguments)]
fn identify(
    vertical: Vec<f64>,
    lateral: Vec<f64>,
    input_left: Vec<f64>,
    input_right: Vec<f64>,
    dt: f64,
    params: PyRef<'_, PyVehicleParams>,
    band: (f64, f64),
    starts: usize,
    seed: u64,
) -> PyResult<(PyVehicleParams, f64, f64)> {
    let p = &params.inner;
    let l = p.l.ok_or_else(|| PyValueError::new_err("params must provide l"))?;
    let measured = TimeSeries::new(0.0, dt, vec![vertical, lateral]).map_err(to_py)?;
    let inputs = TimeSeries::new(0.0, dt, vec![input_left, input_right]).map_err(to_py)?;
    let mut problem = SysIdProblem::new(measured, inputs, p.m_s, p.m_u, l);
    problem.band = band;
    problem.starts = starts;
    problem.seed = seed;
    let r = run_identify(&problem).map_err(to_py)?;
    Ok((PyVehicleParams { inner: problem.params(&r.beta) }, r.mu, r.cost))
}

/// Nearest reference point for every IMU point as `(ref_index, distance_m,
/// angle_deg)`, or `None` where the distance or heading gate rejects it.
#[pyfunction]
#[pyo3(signature = (imu, reference, d_max=4.0, phi_max=45.0))]
fn match_traces(
    imu: Vec<(f64, f64)>,
    reference: Vec<(f64, f64)>,
    d_max: f64,
    phi_max: f64,
) -> PyResult<Vec<Option<(usize, f64, f64)>>> {
    let pts = |v: Vec<(f64, f64)>| v.into_iter().map(|(lat, lon)| GeoPoint { lat, lon }).collect::<Vec<_>>();
    let cfg = roughtrack::MatchConfig::new(d_max, phi_max).map_err(to_py)?;
    let r = roughtrack::match_traces(&pts(imu), &pts(reference), &cfg).map_err(to_py)?;
    Ok(r.matches.iter().map(|m| m.map(|m| (m.ref_index, m.distance, m.angle))).collect())
}

/// Error statistics of estimated against reference segments, paired by
/// station or, with `gnss_dmax`, by nearest geotag. Returns a dict with the
/// overall `n`, `mean`, `std`, `rmse` and `distance_km`, and `bins`, a list
/// of per-roughness-bin dicts with `lo` and `hi` added.
#[pyfunction]
#[pyo3(signature = (estimate, reference, gnss_dmax=None))]
fn evaluate<'py>(
    py: Python<'py>,
    estimate: Vec<PyRef<'py, PyIriSegment>>,
    reference: Vec<PyRef<'py, PyIriSegment>>,
    gnss_dmax: Option<f64>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    use pyo3::types::{PyDict, PyDictMethods};
    let est: Vec<_> = estimate.iter().map(|s| to_core(s)).collect();
    let reference: Vec<_> = reference.iter().map(|s| to_core(s)).collect();
    let how = gnss_dmax.map_or(Alignment::Station, |d_max| Alignment::Gnss { d_max });
    let report = eval_segments(&est, &reference, how).map_err(to_py)?;
    let stats = |b: &roughtrack::pipeline::eval::BinStats| -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        d.set_item("lo", b.lo)?;
        d.set_item("hi", b.hi)?;
        d.set_item("n", b.n)?;
        d.set_item("mean", b.mean)?;
        d.set_item("std", b.std)?;
        d.set_item("rmse", b.rmse)?;
        d.set_item("distance_km", b.distance_km)?;
        Ok(d)
    };
    let out = stats(&report.overall)?;
    out.set_item("bins", report.bins.iter().map(stats).collect::<PyResult<Vec<_>>>()?)?;
    out.set_item("pairs", report.pairs)?;
    Ok(out)
}

/// Through-origin slope `reference ≈ slope · estimate` over `(estimate, reference)` pairs.
#[pyfunction]
fn fit_calibration(pairs: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(fit(&pairs).map_err(to_py)?.slope)
}

#[pymodule]
fn roughtrack_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyVehicleParams>()?;
    m.add_class::<PyRoadProfile>()?;
    m.add_class::<PyIriSegment>()?;
    m.add_class::<PyDrive>()?;
    m.add_function(wrap_pyfunction!(simulate_drive, m)?)?;
    m.add_function(wrap_pyfunction!(iri, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_iri, m)?)?;
    m.add_function(wrap_pyfunction!(identify, m)?)?;
    m.add_function(wrap_pyfunction!(match_traces, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_calibration, m)?)?;
    Ok(())
}
