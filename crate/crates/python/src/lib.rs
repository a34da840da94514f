//! Python bindings: problem files, the annihilator, and the classic and
//! channel helpers.

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use prony::channel::{channel_symbol, gaussian_cross_term as cross_term, goodh_inverse as inverse};
use prony::classic::{circle_distance, classic_model, ClassicInstance};
use prony::{
    minimal_annihilator as annihilator, run_recovery, ChannelProbeSetup, MeasurementRecord, PronyError, RecoveryConfig,
    TfShift, Warning,
};

fn err(e: PronyError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Recovery settings: `kappa`, `M`, and optional tolerance overrides.
#[pyclass(name = "RecoveryConfig", module = "prony", from_py_object)]
#[derive(Clone)]
struct PyRecoveryConfig {
    inner: RecoveryConfig,
}

#[pymethods]
impl PyRecoveryConfig {
    #[new]
    #[pyo3(signature = (kappa, m = 1, **tolerances))]
    fn new(kappa: usize, m: usize, tolerances: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut inner = RecoveryConfig::new(kappa, m);
        if let Some(t) = tolerances {
            for (k, v) in t.iter() {
                inner.set_tolerance(&k.extract::<String>()?, v.extract::<f64>()?).map_err(err)?;
            }
        }
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn kappa(&self) -> usize {
        self.inner.kappa
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m
    }

    /// Smallest `L` the recovery needs.
    fn required_l(&self) -> usize {
        self.inner.required_l()
    }

    fn set_tolerance(&mut self, key: &str, value: f64) -> PyResult<()> {
        self.inner.set_tolerance(key, value).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("RecoveryConfig(kappa={}, M={})", self.inner.kappa, self.inner.m)
    }
}

/// Minimal annihilating polynomial of a measurement record.
#[pyclass(name = "Annihilator", module = "prony", frozen)]
struct PyAnnihilator {
    #[pyo3(get)]
    coeffs: Vec<C64>,
    /// `(value, multiplicity)` of each nonzero root.
    #[pyo3(get)]
    roots: Vec<(C64, usize)>,
    #[pyo3(get)]
    hankel_rank: usize,
    #[pyo3(get)]
    rank_saturated: bool,
    #[pyo3(get)]
    residual: f64,
}

#[pymethods]
impl PyAnnihilator {
    fn __repr__(&self) -> String {
        format!("Annihilator(degree={}, hankel_rank={})", self.coeffs.len() - 1, self.hankel_rank)
    }
}

fn record(rows: Vec<Vec<C64>>) -> PyResult<MeasurementRecord> {
    MeasurementRecord::from_rows(&rows).map_err(err)
}

/// Annihilator of `measurements`, one row `[y_l(0), ..., y_l(S-1)]` per `l`.
#[pyfunction]
fn minimal_annihilator(measurements: Vec<Vec<C64>>, config: &PyRecoveryConfig) -> PyResult<PyAnnihilator> {
    let a = annihilator(&record(measurements)?, &config.inner).map_err(err)?;
    Ok(PyAnnihilator {
        coeffs: a.poly.coeffs().to_vec(),
        roots: a.r_min.iter().map(|r| (r.value, r.multiplicity)).collect(),
        hankel_rank: a.hankel_rank,
        rank_saturated: a.rank_saturated,
        residual: a.annihilation_residual,
    })
}

/// Samples `x(0), ..., x(L)` of `sum c e^{2 pi i gamma t}`.
#[pyfunction]
fn classic_measure(modes: Vec<(f64, C64)>, l_max: usize) -> PyResult<Vec<C64>> {
    let model = classic_model(&modes).map_err(err)?;
    let y = ClassicInstance::default().measure(&model, l_max).map_err(err)?;
    Ok(y.flatten())
}

/// Frequencies and coefficients `(gamma, c)` recovered from classic samples.
#[pyfunction]
#[pyo3(signature = (samples, kappa))]
fn recover_classic(samples: Vec<C64>, kappa: usize) -> PyResult<Vec<(f64, C64)>> {
    let meas = MeasurementRecord::scalar(&samples).map_err(err)?;
    let rec = run_recovery(&meas, &ClassicInstance::default(), &RecoveryConfig::new(kappa, 1)).map_err(err)?;
    Ok(rec.model.modes.iter().map(|m| (m.gamma.value(), m.coeffs[0])).collect())
}

/// Distance on the circle `R / Z`.
#[pyfunction]
fn circle_dist(a: f64, b: f64) -> PyResult<f64> {
    let f = |x: f64| prony::Frequency::new(x.rem_euclid(1.0)).map_err(err);
    Ok(circle_distance(f(a)?, f(b)?))
}

/// Default channel symbol at `(t, nu)`.
#[pyfunction]
fn goodh(t: f64, nu: f64) -> C64 {
    channel_symbol(TfShift::new(t, nu), &ChannelProbeSetup::default())
}

#[pyfunction]
fn goodh_inverse(z: C64) -> PyResult<(f64, f64)> {
    let g = inverse(z).map_err(err)?;
    Ok((g.t, g.nu))
}

/// Closed-form `<pi_gamma pi_s u, pi_s u>` for the Gaussian probe.
#[pyfunction]
fn gaussian_cross_term(gamma: (f64, f64), s: (f64, f64)) -> C64 {
    cross_term(TfShift::new(gamma.0, gamma.1), TfShift::new(s.0, s.1))
}

/// A problem file: instance kind, setup, config, truth and/or measurements.
#[pyclass(name = "Problem", module = "prony", frozen)]
struct PyProblem {
    inner: prony::Problem,
}

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: prony::Problem::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    #[getter]
    fn kappa(&self) -> usize {
        self.inner.config().kappa
    }

    /// Forward values of the ground truth, one row per power index.
    fn synthesize(&self) -> PyResult<Vec<Vec<C64>>> {
        let y = self.inner.synthesize().map_err(err)?;
        Ok((0..=y.l_max()).map(|l| (0..y.channels()).map(|s| y.get(l, s)).collect()).collect())
    }

    /// Copy of the problem carrying its synthesized measurements.
    fn with_measurements(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_measurements().map_err(err)? })
    }

    #[pyo3(signature = (timing = false))]
    fn recover(&self, timing: bool) -> PyResult<PyReport> {
        let r = self.inner.recover(prony::RunOptions { timing }).map_err(err)?;
        Ok(PyReport { inner: r })
    }

    /// Grid checks of the symbol as a dict.
    fn validate_symbol<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let v = self.inner.validate_symbol().map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("passed", v.passed())?;
        d.set_item("grid_points", v.grid_points)?;
        d.set_item("min_separation", v.min_separation)?;
        d.set_item("min_modulus", v.min_modulus)?;
        d.set_item("max_round_trip_error", v.max_round_trip_error)?;
        d.set_item("injective", v.injective)?;
        d.set_item("nonvanishing", v.nonvanishing)?;
        d.set_item("round_trip_ok", v.round_trip_ok)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Problem(kind={:?}, kappa={})", self.inner.kind(), self.inner.config().kappa)
    }
}

#[pyclass(name = "Report", module = "prony", frozen)]
struct PyReport {
    inner: prony::Report,
}

#[pymethods]
impl PyReport {
    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn is_clean(&self) -> bool {
        self.inner.is_clean()
    }

    /// Warning tags such as `"rank_saturated"`.
    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner
            .warnings()
            .iter()
            .map(|w| {
                match w {
                    Warning::SpuriousRoot { .. } => "spurious_root",
                    Warning::NonUniqueCoefficients { .. } => "non_unique_coefficients",
                    Warning::RankSaturated { .. } => "rank_saturated",
                    Warning::LargeResidual { .. } => "large_residual",
                }
                .to_owned()
            })
            .collect()
    }

    /// `(support_matched, max_point_error, max_coeff_error)` when the
    /// problem carried ground truth.
    #[getter]
    fn truth_comparison(&self) -> Option<(bool, Option<f64>, Option<f64>)> {
        self.inner.truth_comparison().map(|c| (c.support_matched, c.max_point_error, c.max_coeff_error))
    }
}

#[pymodule]
#[pyo3(name = "prony")]
fn prony_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRecoveryConfig>()?;
    m.add_class::<PyAnnihilator>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(minimal_annihilator, m)?)?;
    m.add_function(wrap_pyfunction!(classic_measure, m)?)?;
    m.add_function(wrap_pyfunction!(recover_classic, m)?)?;
    m.add_function(wrap_pyfunction!(circle_dist, m)?)?;
    m.add_function(wrap_pyfunction!(goodh, m)?)?;
    m.add_function(wrap_pyfunction!(goodh_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_cross_term, m)?)?;
    Ok(())
}
