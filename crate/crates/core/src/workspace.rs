//! Joint limits, planar workspace tracing and the spatial toroid volume.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ik::ik_forbal2;
use crate::model::{forward_kinematics, Branch, IkAngles, MechanismSpec, Vec2};

/// Tolerance on joint-limit checks, rad.
pub const LIMIT_TOL: f64 = 1e-9;

/// Ray march step, m.
pub const MARCH_STEP: f64 = 1e-3;

/// Boundary bisection resolution, m.
pub const BISECT_TOL: f64 = 1e-5;

/// Joint ranges `(min, max)` in the IK convention, rad.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub q11: (f64, f64),
    pub q12: (f64, f64),
    pub q21: (f64, f64),
    pub q22: (f64, f64),
    pub q0: Option<(f64, f64)>,
    pub q3: Option<(f64, f64)>,
    pub q4: Option<(f64, f64)>,
}

impl JointLimits {
    /// Every joint free over (-pi, pi].
    pub fn unlimited() -> Self {
        let full = (-PI, PI);
        Self {
            q11: full,
            q12: full,
            q21: full,
            q22: full,
            q0: None,
            q3: None,
            q4: None,
        }
    }

    /// All four planar ranges collapsed onto one pose.
    pub fn collapsed(q: &IkAngles) -> Self {
        Self {
            q11: (q.q11, q.q11),
            q12: (q.q12, q.q12),
            q21: (q.q21, q.q21),
            q22: (q.q22, q.q22),
            q0: None,
            q3: None,
            q4: None,
        }
    }

    fn ranges(&self) -> Vec<(&'static str, (f64, f64))> {
        let mut out = vec![
            ("q11", self.q11),
            ("q12", self.q12),
            ("q21", self.q21),
            ("q22", self.q22),
        ];
        for (name, r) in [("q0", self.q0), ("q3", self.q3), ("q4", self.q4)] {
            if let Some(r) = r {
                out.push((name, r));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.ranges() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSpec(format!(
                    "joint limit {name}: need finite min < max, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn check_one(joint: &'static str, value: f64, (min, max): (f64, f64)) -> Result<()> {
        if value < min - LIMIT_TOL || value > max + LIMIT_TOL || !value.is_finite() {
            return Err(Error::LimitViolation {
                joint,
                value,
                min,
                max,
            });
        }
        Ok(())
    }

    /// Check the four planar joints.
    pub fn check(&self, q: &IkAngles) -> Result<()> {
        Self::check_one("q11", q.q11, self.q11)?;
        Self::check_one("q12", q.q12, self.q12)?;
        Self::check_one("q21", q.q21, self.q21)?;
        Self::check_one("q22", q.q22, self.q22)
    }

    pub fn contains(&self, q: &IkAngles) -> bool {
        self.check(q).is_ok()
    }

    /// Smallest distance of a planar joint to one of its bounds, rad.
    pub fn slack(&self, q: &IkAngles) -> f64 {
        [
            (q.q11, self.q11),
            (q.q12, self.q12),
            (q.q21, self.q21),
            (q.q22, self.q22),
        ]
        .iter()
        .map(|&(v, (lo, hi))| (v - lo).min(hi - v))
        .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceTrace {
    /// Ray endpoints, counter-clockwise from the +x direction.
    pub boundary: Vec<Vec2>,
    pub area: f64,
    /// Largest distance of a boundary vertex from the fixed-frame origin.
    pub max_reach: f64,
    /// End-effector position of the default pose, where all rays start.
    pub center: Vec2,
    pub ray_spacing_deg: f64,
    /// Set when the traced area is zero (e.g. collapsed limits).
    pub degenerate: bool,
}

fn reachable(spec: &MechanismSpec, limits: &JointLimits, p: Vec2) -> bool {
    ik_forbal2(spec, p)
        .map(|s| limits.contains(&s.angles()))
        .unwrap_or(false)
}

/// Signed polygon area (counter-clockwise positive).
pub fn polygon_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
}

/// Polygon centroid; `None` for a zero-area polygon.
pub fn polygon_centroid(poly: &[Vec2]) -> Option<Vec2> {
    let a = polygon_area(poly);
    if a.abs() < 1e-15 {
        return None;
    }
    let n = poly.len();
    let mut c = Vec2::zeros();
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = p.x * q.y - q.x * p.y;
        c += (p + q) * w;
    }
    Some(c / (6.0 * a))
}

/// Cast rays from the default pose and march each to the reachability edge.
pub fn trace_workspace(
    spec: &MechanismSpec,
    limits: &JointLimits,
    ray_spacing_deg: f64,
    default_pose: (f64, f64),
) -> Result<WorkspaceTrace> {
    if !(ray_spacing_deg > 0.0 && ray_spacing_deg <= 180.0) {
        return Err(Error::InvalidSpec(format!(
            "ray spacing must be in (0, 180] degrees, got {ray_spacing_deg}"
        )));
    }
    let (q11, q21) = default_pose;
    let fk = forward_kinematics(spec, -q11, q21, Branch::ElbowUp)
        .map_err(|e| Error::DefaultPoseInvalid(e.to_string()))?;
    limits
        .check(&fk.state.to_ik())
        .map_err(|e| Error::DefaultPoseInvalid(e.to_string()))?;
    let center = fk.p_e;
    if !reachable(spec, limits, center) {
        return Err(Error::DefaultPoseInvalid(
            "default end-effector position fails the IK check".into(),
        ));
    }

    let n = (360.0 / ray_spacing_deg).round().max(3.0) as usize;
    let reach_bound = 2.0
        * (spec.links.l21.length
            + spec.links.l22.length
            + spec.ee_offset.abs()
            + spec.base_separation);
    let boundary: Vec<Vec2> = (0..n)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n as f64;
            let dir = Vec2::new(phi.cos(), phi.sin());
            let mut s = 0.0;
            while s < reach_bound && reachable(spec, limits, center + (s + MARCH_STEP) * dir) {
                s += MARCH_STEP;
            }
            let (mut lo, mut hi) = (s, s + MARCH_STEP);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                if reachable(spec, limits, center + mid * dir) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            center + lo * dir
        })
        .collect();
    let area = polygon_area(&boundary).abs();
    let max_reach = boundary.iter().map(|p| p.norm()).fold(0.0, f64::max);
    Ok(WorkspaceTrace {
        boundary,
        area,
        max_reach,
        center,
        ray_spacing_deg: 360.0 / n as f64,
        degenerate: area < 1e-12,
    })
}

/// Workspace area estimated by sweeping an `n x n` grid over the actuated
/// joint ranges, running the forward kinematics and counting occupied
/// `cell x cell` squares. Independent of the ray tracer.
pub fn occupancy_area(spec: &MechanismSpec, limits: &JointLimits, n: usize, cell: f64) -> f64 {
    let mut cells = std::collections::HashSet::new();
    let (a0, a1) = limits.q11;
    let (b0, b1) = limits.q21;
    for i in 0..n {
        let q11 = a0 + (a1 - a0) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let q21 = b0 + (b1 - b0) * (j as f64 + 0.5) / n as f64;
            let Ok(fk) = forward_kinematics(spec, -q11, q21, Branch::ElbowUp) else {
                continue;
            };
            if !limits.contains(&fk.state.to_ik()) {
                continue;
            }
            let key = (
                (fk.p_e.x / cell).floor() as i64,
                (fk.p_e.y / cell).floor() as i64,
            );
            cells.insert(key);
        }
    }
    cells.len() as f64 * cell * cell
}

/// Volume swept by revolving the workspace cross-section about the joint-0
/// axis, after shifting it by the EE-motor offset (Pappus).
pub fn toroid_volume(trace: &WorkspaceTrace, spec: &MechanismSpec) -> Result<f64> {
    let shift = spec
        .spatial
        .as_ref()
        .map(|e| Vec2::new(e.motor_offset.x, e.motor_offset.z))
        .unwrap_or_else(Vec2::zeros);
    let section: Vec<Vec2> = trace.boundary.iter().map(|p| p + shift).collect();
    revolved_volume(&section, spec.base_x)
}

/// Pappus volume of a polygon revolved about the vertical line `x = axis_x`.
pub fn revolved_volume(section: &[Vec2], axis_x: f64) -> Result<f64> {
    let min_x = section.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = section
        .iter()
        .map(|p| p.x)
        .fold(f64::NEG_INFINITY, f64::max);
    if min_x <= axis_x && max_x >= axis_x {
        return Err(Error::AxisIntersects);
    }
    let Some(c) = polygon_centroid(section) else {
        return Ok(0.0);
    };
    Ok(2.0 * PI * polygon_area(section).abs() * (c.x - axis_x).abs())
}
