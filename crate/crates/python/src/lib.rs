//! Python bindings: chain synthesis and evolution, the effective gate and
//! its decomposition, the parity protocol, scenarios and the device model.
//!
//! Frequencies are angular (rad/s) as in the Rust library; device and pulse
//! descriptions use the JSON file forms (GHz, ns).

use fstchain::chain::{detuning_range, spectrum_check, ChainParams};
use fstchain::circuit::{
    build_decomposition, decomposition_distance, AngleConvention, DECOMPOSITION_CHECK_MAX_SITES,
};
use fstchain::device::spec::DeviceSpecFile;
use fstchain::device::{
    gate_metrics, propagate, seed_pulse as device_seed, zz_coupling as device_zz,
    ComputationalFrame, DeviceSpec, PropagationOptions, PulseConfig, PulseShape,
};
use fstchain::fermion::{evolve_state, single_propagator, EvolveMethod};
use fstchain::protocols::{
    correlator_measure, parity_measure as protocol, parse_paulis, KernelMethod, Parity,
    ProtocolOptions,
};
use fstchain::scenario::{run_scenario as run, Scenario};
use fstchain::{gates, CMatrix, ChainSpec, FstError, StateVector, TimeScale, C64};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::{json, Value};

fn err(e: FstError) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, x) in o {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn state(amplitudes: Vec<C64>) -> PyResult<StateVector> {
    let len = amplitudes.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(PyValueError::new_err(format!(
            "need 2^N amplitudes with N >= 1, got {len}"
        )));
    }
    StateVector::new(len.trailing_zeros() as usize, amplitudes).map_err(err)
}

fn device(json: Option<&str>) -> PyResult<DeviceSpec> {
    match json {
        None => Ok(DeviceSpec::reference()),
        Some(t) => {
            DeviceSpec::try_from(serde_json::from_str::<DeviceSpecFile>(t).map_err(json_err)?)
                .map_err(err)
        }
    }
}

/// Mirror-symmetric chain realising fractional state transfer by angle `theta`.
#[pyclass(module = "fstchain", frozen)]
struct Chain {
    params: ChainParams,
    theta: f64,
}

#[pymethods]
impl Chain {
    /// Give either the transfer time `tau` (s) or the coupling ceiling `j_max` (rad/s).
    #[new]
    #[pyo3(signature = (n_sites, theta, tau=None, j_max=None))]
    fn new(n_sites: usize, theta: f64, tau: Option<f64>, j_max: Option<f64>) -> PyResult<Self> {
        let scale = match (tau, j_max) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give tau or j_max, not both")),
            (_, Some(j)) => TimeScale::JMax(j),
            (t, None) => TimeScale::Tau(t.unwrap_or(1.0)),
        };
        let spec = ChainSpec::new(n_sites, theta, scale).map_err(err)?;
        Ok(Chain {
            params: fstchain::synthesize(&spec).map_err(err)?,
            theta,
        })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.params.n_sites()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.theta
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.params.tau
    }

    #[getter]
    fn couplings(&self) -> Vec<f64> {
        self.params.couplings.clone()
    }

    #[getter]
    fn detunings(&self) -> Vec<f64> {
        self.params.detunings.clone()
    }

    fn mirror_asymmetry(&self) -> f64 {
        self.params.mirror_asymmetry()
    }

    /// `(direct, closed_form)` spread of the detunings.
    fn detuning_range(&self) -> (f64, f64) {
        let r = detuning_range(&self.params, self.theta);
        (r.direct, r.closed_form)
    }

    /// Single-excitation propagator `U(t)`.
    fn single_propagator(&self, t: f64) -> PyResult<Vec<Vec<C64>>> {
        Ok(rows(
            &single_propagator(&self.params, t).map_err(err)?.matrix,
        ))
    }

    #[pyo3(signature = (tol=1e-8))]
    fn spectrum<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let s = spectrum_check(&self.params, self.theta, tol).map_err(err)?;
        to_py(py, &serde_json::to_value(s).map_err(json_err)?)
    }

    /// Distance between `U(tau)` with the phase fix and the effective gate.
    #[pyo3(signature = (tol=1e-8))]
    fn verify_mapping<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let m = gates::verify_mapping(&self.params, self.theta, tol).map_err(err)?;
        to_py(py, &serde_json::to_value(m).map_err(json_err)?)
    }

    /// Evolve a register state for time `t`; `method` is `"lift"` or `"dense"`.
    #[pyo3(signature = (amplitudes, t, method="lift"))]
    fn evolve(&self, amplitudes: Vec<C64>, t: f64, method: &str) -> PyResult<Vec<C64>> {
        let method = match method {
            "lift" => EvolveMethod::Lift,
            "dense" => EvolveMethod::Dense,
            m => return Err(PyValueError::new_err(format!("unknown method '{m}'"))),
        };
        let psi = state(amplitudes)?;
        Ok(evolve_state(&psi, &self.params, t, method)
            .map_err(err)?
            .into_amplitudes())
    }

    fn __repr__(&self) -> String {
        format!(
            "Chain(n_sites={}, theta={}, tau={})",
            self.params.n_sites(),
            self.theta,
            self.params.tau
        )
    }
}

/// `K_N(theta) = exp(-i theta/2 G_N)` as nested lists.
#[pyfunction]
fn effective_gate(n_sites: usize, theta: f64) -> PyResult<Vec<Vec<C64>>> {
    Ok(rows(
        &gates::effective_gate(n_sites, theta).map_err(err)?.matrix,
    ))
}

/// iSWAP/FSWAP network for `K_N(theta)` with durations at `j_max` (rad/s).
#[pyfunction]
#[pyo3(signature = (n_sites, theta, j_max=1.0))]
fn decompose<'py>(
    py: Python<'py>,
    n_sites: usize,
    theta: f64,
    j_max: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let c = build_decomposition(n_sites, theta, j_max).map_err(err)?;
    let distance = if n_sites <= DECOMPOSITION_CHECK_MAX_SITES {
        Some(decomposition_distance(&c, theta, AngleConvention::HalfAngle).map_err(err)?)
    } else {
        None
    };
    let v = json!({
        "layers": c.layers,
        "fswap_count": c.fswap_count(),
        "iswap_count": c.iswap_count(),
        "duration": c.total_duration(),
        "z_layer_distance": distance,
    });
    to_py(py, &v)
}

/// Decomposition duration over the FST gate time.
#[pyfunction]
fn speed_gain(n_sites: usize, theta: f64) -> PyResult<f64> {
    Ok(fstchain::circuit::speed_gain(n_sites, theta, 1.0)
        .map_err(err)?
        .ratio)
}

fn kernel(method: &str) -> PyResult<KernelMethod> {
    match method {
        "fst_lift" => Ok(KernelMethod::FstLift),
        "pair_rotations" => Ok(KernelMethod::PairRotations),
        m => Err(PyValueError::new_err(format!("unknown method '{m}'"))),
    }
}

/// Parity of a register via two ancillas and `K_{N+2}(pi)`.
#[pyfunction]
#[pyo3(signature = (amplitudes, method="fst_lift", j_max=1.0))]
fn parity_measure<'py>(
    py: Python<'py>,
    amplitudes: Vec<C64>,
    method: &str,
    j_max: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = ProtocolOptions {
        method: kernel(method)?,
        j_max,
        ..Default::default()
    };
    let r = protocol(&state(amplitudes)?, &opts).map_err(err)?;
    let v = json!({
        "p_left_one": r.left_ancilla_one_probability,
        "parity": if r.inferred_parity == Parity::Even { "even" } else { "odd" },
        "duration": r.protocol_duration,
        "duration_in_iswaps": r.duration_in_iswaps,
    });
    to_py(py, &v)
}

/// `<P_1 ... P_N>` read out through the parity protocol, e.g. `paulis="XYZ"`.
#[pyfunction]
fn correlator(amplitudes: Vec<C64>, paulis: &str) -> PyResult<f64> {
    let p = parse_paulis(paulis).map_err(err)?;
    correlator_measure(&state(amplitudes)?, &p, &ProtocolOptions::default()).map_err(err)
}

/// Run a scenario given as JSON text; returns times, populations and measurements.
#[pyfunction]
fn run_scenario<'py>(py: Python<'py>, scenario_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let s = Scenario::from_json(scenario_json).map_err(err)?;
    let r = run(&s).map_err(err)?;
    to_py(py, &serde_json::to_value(r).map_err(json_err)?)
}

/// Static ZZ coupling (rad/s) of pair 1 `(q1, q2)` or 2 `(q2, q3)`.
#[pyfunction]
#[pyo3(signature = (phi1, phi2, pair=1, device_json=None))]
fn zz_coupling(phi1: f64, phi2: f64, pair: usize, device_json: Option<&str>) -> PyResult<f64> {
    if !(1..=2).contains(&pair) {
        return Err(PyValueError::new_err("pair must be 1 or 2"));
    }
    device_zz(&device(device_json)?, [phi1, phi2], pair - 1).map_err(err)
}

/// Theory-seeded pulse for angle `theta` in the JSON file form.
#[pyfunction]
#[pyo3(signature = (theta, device_json=None))]
fn seed_pulse<'py>(
    py: Python<'py>,
    theta: f64,
    device_json: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let s = device_seed(&device(device_json)?, theta, &PulseShape::default()).map_err(err)?;
    to_py(py, &serde_json::to_value(s.config).map_err(json_err)?)
}

/// Propagate a pulse (JSON file form) and score it against `K_3(theta)`.
#[pyfunction]
#[pyo3(signature = (theta, pulse_json, device_json=None, substeps=None))]
fn pulse_metrics<'py>(
    py: Python<'py>,
    theta: f64,
    pulse_json: &str,
    device_json: Option<&str>,
    substeps: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = device(device_json)?;
    let cfg: PulseConfig = serde_json::from_str(pulse_json).map_err(json_err)?;
    let frame = ComputationalFrame::new(&spec).map_err(err)?;
    let opts = PropagationOptions {
        substeps_per_sample: substeps,
        ..Default::default()
    };
    let p = py
        .detach(|| propagate(&spec, &cfg, &frame, &opts))
        .map_err(err)?;
    let m = gate_metrics(&p, theta).map_err(err)?;
    let mut v = serde_json::to_value(m).map_err(json_err)?;
    v["unitarity_error"] = json!(p.unitarity_error);
    to_py(py, &v)
}

#[pymodule]
#[pyo3(name = "fstchain")]
pub fn fstchain_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", fstchain::VERSION)?;
    m.add_class::<Chain>()?;
    m.add_function(wrap_pyfunction!(effective_gate, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(speed_gain, m)?)?;
    m.add_function(wrap_pyfunction!(parity_measure, m)?)?;
    m.add_function(wrap_pyfunction!(correlator, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(zz_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(seed_pulse, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_metrics, m)?)?;
    Ok(())
}
