//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use forbal::balance::{self, ProfileChoice};
use forbal::config;
use forbal::dynamics::WrenchMode;
use forbal::harness::{self, TrajectorySpec};
use forbal::ik::{self, PoseTarget5};
use forbal::model::{forward_kinematics, Branch, MechanismSpec, Vec2, Vec3};
use forbal::workspace;

create_exception!(forbal_py, ForbalError, PyValueError);
create_exception!(forbal_py, UnreachableError, ForbalError);

fn err(e: forbal::Error) -> PyErr {
    match e {
        forbal::Error::Unreachable(_) => UnreachableError::new_err(e.to_string()),
        _ => ForbalError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ForbalError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn profile(name: &str) -> PyResult<ProfileChoice> {
    match name {
        "short" => Ok(ProfileChoice::Link12Short),
        "extended" => Ok(ProfileChoice::Link12Extended),
        _ => Err(PyValueError::new_err(
            "profile must be 'short' or 'extended'",
        )),
    }
}

fn mode(raw: bool) -> WrenchMode {
    if raw {
        WrenchMode::Raw
    } else {
        WrenchMode::Zeroed
    }
}

/// A five-bar mechanism description (SI units).
#[pyclass(module = "forbal_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Mechanism {
    spec: MechanismSpec,
}

#[pymethods]
impl Mechanism {
    /// Load a JSON config file, or `forbal2` / `forbal5`.
    #[staticmethod]
    fn load(name_or_path: &str) -> PyResult<Self> {
        Ok(Self {
            spec: config::load_named(name_or_path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn forbal2() -> Self {
        Self {
            spec: config::forbal2(),
        }
    }

    #[staticmethod]
    fn forbal5() -> Self {
        Self {
            spec: config::forbal5(),
        }
    }

    #[getter]
    fn name(&self) -> String {
        self.spec.name.clone()
    }

    #[getter]
    fn is_spatial(&self) -> bool {
        self.spec.spatial.is_some()
    }

    /// Counter masses `[m11c, m12c, m21c, m22c]`, kg.
    fn counter_masses(&self) -> [f64; 4] {
        self.spec.counter_masses()
    }

    /// Force-balance residuals `(c11, c12, c21)`.
    fn residuals(&self) -> (f64, f64, f64) {
        let r = balance::balance_residuals(&self.spec);
        (r.c11, r.c12, r.c21)
    }

    #[pyo3(signature = (profile_name = "short"))]
    fn solve<'py>(&self, py: Python<'py>, profile_name: &str) -> PyResult<Bound<'py, PyAny>> {
        let p = profile(profile_name)?;
        let sol = balance::solve_counter_masses(
            &self.spec,
            &balance::Mounting::from_spec(&self.spec, p),
            p,
        )
        .map_err(err)?;
        to_py(py, &sol)
    }

    /// Copy with solved counter masses installed.
    #[pyo3(signature = (profile_name = "short"))]
    fn balanced(&self, profile_name: &str) -> PyResult<Self> {
        Ok(Self {
            spec: balance::balanced(&self.spec, profile(profile_name)?).map_err(err)?,
        })
    }

    /// Copy with every counter mass removed.
    fn unbalanced(&self) -> Self {
        Self {
            spec: self.spec.without_counter_masses(),
        }
    }

    /// End-effector `(x, z)` for actuated angles in the IK convention.
    fn fk(&self, q11: f64, q21: f64) -> PyResult<(f64, f64)> {
        let fk = forward_kinematics(&self.spec, -q11, q21, Branch::ElbowUp).map_err(err)?;
        Ok((fk.p_e.x, fk.p_e.y))
    }

    /// Spatial pose `{"p": [x, y, z], "beta": .., "gamma": ..}`.
    fn fk5<'py>(
        &self,
        py: Python<'py>,
        q0: f64,
        q11: f64,
        q21: f64,
        q3: f64,
        q4: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let pose = ik::forward_kinematics5(&self.spec, q0, q11, q21, q3, q4).map_err(err)?;
        to_py(
            py,
            &serde_json::json!({"p": [pose.p.x, pose.p.y, pose.p.z], "beta": pose.beta, "gamma": pose.gamma}),
        )
    }

    #[pyo3(signature = (x, z, limits = false))]
    fn ik<'py>(
        &self,
        py: Python<'py>,
        x: f64,
        z: f64,
        limits: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let p = Vec2::new(x, z);
        let sol = if limits {
            ik::ik_forbal2_limited(&self.spec, p)
        } else {
            ik::ik_forbal2(&self.spec, p)
        }
        .map_err(err)?;
        to_py(py, &sol)
    }

    #[pyo3(signature = (x, y, z, beta, gamma, limits = false))]
    #[allow(clippy::too_many_arguments)]
    fn ik5<'py>(
        &self,
        py: Python<'py>,
        x: f64,
        y: f64,
        z: f64,
        beta: f64,
        gamma: f64,
        limits: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = PoseTarget5 {
            p: Vec3::new(x, y, z),
            beta,
            gamma,
        };
        let sol = if limits {
            ik::ik_forbal5_limited(&self.spec, &t)
        } else {
            ik::ik_forbal5(&self.spec, &t)
        }
        .map_err(err)?;
        to_py(py, &sol)
    }

    #[pyo3(signature = (spacing_deg = 10.0))]
    fn trace_workspace<'py>(
        &self,
        py: Python<'py>,
        spacing_deg: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = workspace::trace_workspace(
            &self.spec,
            &self.spec.limits,
            spacing_deg,
            self.spec.nominal_pose,
        )
        .map_err(err)?;
        to_py(py, &t)
    }

    #[pyo3(signature = (spacing_deg = 10.0))]
    fn toroid_volume(&self, spacing_deg: f64) -> PyResult<f64> {
        let t = workspace::trace_workspace(
            &self.spec,
            &self.spec.limits,
            spacing_deg,
            self.spec.nominal_pose,
        )
        .map_err(err)?;
        workspace::toroid_volume(&t, &self.spec).map_err(err)
    }

    /// Balanced (and unbalanced) runs of a built-in id or waypoint file.
    #[pyo3(signature = (traj, both = true, dt = 0.01, raw = false))]
    fn run_experiment<'py>(
        &self,
        py: Python<'py>,
        traj: &str,
        both: bool,
        dt: f64,
        raw: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = TrajectorySpec::resolve(traj, &self.spec, None).map_err(err)?;
        let runs = harness::run_experiment(&self.spec, &t, both, dt, mode(raw)).map_err(err)?;
        to_py(py, &runs)
    }

    /// Channel-wise balanced vs unbalanced reductions.
    #[pyo3(signature = (traj, dt = 0.01, raw = false))]
    fn reduction<'py>(
        &self,
        py: Python<'py>,
        traj: &str,
        dt: f64,
        raw: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let t = TrajectorySpec::resolve(traj, &self.spec, None).map_err(err)?;
        let runs = harness::run_experiment(&self.spec, &t, true, dt, mode(raw)).map_err(err)?;
        let rep = harness::reduction_metrics(&runs[0], &runs[1]).map_err(err)?;
        to_py(py, &rep)
    }

    #[pyo3(signature = (traj, out_dir, dt = 0.01, raw = false))]
    fn write_report(&self, traj: &str, out_dir: PathBuf, dt: f64, raw: bool) -> PyResult<()> {
        let t = TrajectorySpec::resolve(traj, &self.spec, None).map_err(err)?;
        harness::write_report(&self.spec, &t, &out_dir, dt, mode(raw)).map_err(err)?;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("Mechanism({:?})", self.spec.name)
    }
}

#[pyfunction]
fn builtin_ids() -> Vec<&'static str> {
    forbal::trajectory::BUILTIN_IDS.to_vec()
}

#[pymodule]
fn forbal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Mechanism>()?;
    m.add_function(wrap_pyfunction!(builtin_ids, m)?)?;
    m.add("ForbalError", m.py().get_type::<ForbalError>())?;
    m.add("UnreachableError", m.py().get_type::<UnreachableError>())?;
    Ok(())
}
