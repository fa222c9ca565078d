//! Closed-form inverse kinematics for the planar (2-DOF) and spatial (5-DOF)
//! variants, with reachability diagnostics.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    forward_kinematics, wrap_angle, Branch, IkAngles, JointState, MechanismSpec, Vec2, Vec3,
};
use crate::workspace::JointLimits;

/// Slack on cosine-rule arguments before a target counts as unreachable.
pub const ACOS_GRACE: f64 = 1e-9;

/// Below this margin [`reachability`] reports `NearSingular`.
pub const NEAR_SINGULAR_MARGIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkSolution {
    pub q11: f64,
    pub q12: f64,
    pub q21: f64,
    pub q22: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q4: Option<f64>,
    /// Interior angle at joint 22 of the triangle joint 21 / joint 22 / p_e.
    pub beta: f64,
    /// Angle at joint 21 between link 21 and the direction to p_e.
    pub gamma: f64,
    /// Direction of `p_e - p_b`.
    pub theta_be: f64,
    pub p_be_norm: f64,
}

impl IkSolution {
    pub fn angles(&self) -> IkAngles {
        IkAngles {
            q11: self.q11,
            q12: self.q12,
            q21: self.q21,
            q22: self.q22,
        }
    }

    pub fn joint_state(&self) -> JointState {
        self.angles().to_absolute()
    }

    /// Fails with `LimitViolation` on the first joint outside `limits`.
    pub fn check_limits(&self, limits: &JointLimits) -> Result<()> {
        limits.check(&self.angles())?;
        for (name, value, range) in [
            ("q0", self.q0, limits.q0),
            ("q3", self.q3, limits.q3),
            ("q4", self.q4, limits.q4),
        ] {
            if let (Some(v), Some(r)) = (value, range) {
                JointLimits::check_one(name, v, r)?;
            }
        }
        Ok(())
    }
}

/// acos with a small grace band; returns the angle and `1 - |c|`.
fn cosine_rule(c: f64, what: &str) -> Result<(f64, f64)> {
    if !c.is_finite() {
        return Err(Error::Unreachable(format!("{what}: non-finite cosine")));
    }
    if c.abs() > 1.0 + ACOS_GRACE {
        return Err(Error::Unreachable(format!(
            "{what}: cosine-rule argument {c:.12} outside [-1, 1]"
        )));
    }
    let margin = 1.0 - c.abs();
    if margin < ACOS_GRACE {
        return Err(Error::Singular(format!(
            "{what}: triangle is degenerate (cosine {c:.12})"
        )));
    }
    Ok((c.acos(), margin))
}

struct PlanarSolve {
    sol: IkSolution,
    margin: f64,
}

fn solve_planar(spec: &MechanismSpec, p_e: Vec2) -> Result<PlanarSolve> {
    if !(p_e.x.is_finite() && p_e.y.is_finite()) {
        return Err(Error::Unreachable("non-finite target".into()));
    }
    let l = &spec.links;
    let j21 = spec.joint21();
    let p_be = p_e - j21;
    let r = p_be.norm();
    if r <= 1e-12 * spec.max_link_length() {
        return Err(Error::Singular(
            "target coincides with the base joint".into(),
        ));
    }
    // Chain 2 triangle: sides l21, L = l22 + l_e, r.
    let l21 = l.l21.length;
    let big_l = l.l22.length + spec.ee_offset;
    let (beta, m_beta) = cosine_rule(
        (l21 * l21 + big_l * big_l - r * r) / (2.0 * l21 * big_l),
        "beta",
    )?;
    let (gamma, m_gamma) = cosine_rule(
        (r * r + l21 * l21 - big_l * big_l) / (2.0 * l21 * r),
        "gamma",
    )?;
    let theta_be = p_be.y.atan2(p_be.x);
    let q21 = gamma + theta_be;
    let q22 = PI - beta;

    let (q11, q12, margin) = if spec.is_rhombus() {
        (PI - beta - q21, PI - beta, m_beta.min(m_gamma))
    } else {
        let theta21 = q21;
        let theta22 = theta21 - q22;
        let j22 = j21 + l21 * Vec2::new(theta21.cos(), theta21.sin());
        let p_c = j22 + l.l22.length * Vec2::new(theta22.cos(), theta22.sin());
        let j11 = spec.joint11();
        let d = p_c - j11;
        let r1 = d.norm();
        let (l11, l12) = (l.l11.length, l.l12.length);
        if r1 <= 1e-12 * spec.max_link_length() {
            return Err(Error::Singular("closed-loop point on joint 11".into()));
        }
        let (alpha, m_alpha) = cosine_rule(
            (l11 * l11 + r1 * r1 - l12 * l12) / (2.0 * l11 * r1),
            "chain 1",
        )?;
        let theta11 = d.y.atan2(d.x) - alpha;
        let a = j11 + l11 * Vec2::new(theta11.cos(), theta11.sin());
        let theta12 = (p_c.y - a.y).atan2(p_c.x - a.x);
        (
            wrap_angle(-theta11),
            wrap_angle(theta12 - theta11),
            m_beta.min(m_gamma).min(m_alpha),
        )
    };
    if q11 + q21 <= 0.0 {
        return Err(Error::Singular(format!(
            "q11 + q21 = {:.6} rad: loop folds through the singular branch",
            q11 + q21
        )));
    }
    Ok(PlanarSolve {
        sol: IkSolution {
            q11: wrap_angle(q11),
            q12: wrap_angle(q12),
            q21: wrap_angle(q21),
            q22: wrap_angle(q22),
            q0: None,
            q3: None,
            q4: None,
            beta,
            gamma,
            theta_be,
            p_be_norm: r,
        },
        margin,
    })
}

/// Planar inverse kinematics for an end-effector target in the x-z plane.
/// Joint limits are not applied; see [`IkSolution::check_limits`].
pub fn ik_forbal2(spec: &MechanismSpec, p_e: Vec2) -> Result<IkSolution> {
    Ok(solve_planar(spec, p_e)?.sol)
}

/// Planar IK followed by the joint-limit check.
pub fn ik_forbal2_limited(spec: &MechanismSpec, p_e: Vec2) -> Result<IkSolution> {
    let sol = ik_forbal2(spec, p_e)?;
    sol.check_limits(&spec.limits)?;
    Ok(sol)
}

/// Spatial target: position plus implement pitch and yaw.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseTarget5 {
    pub p: Vec3,
    pub beta: f64,
    pub gamma: f64,
}

/// Rotation by `a` in the linkage plane, x toward z (about -y).
pub fn pitch_rotation(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c)
}

pub fn yaw_rotation(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Implement orientation demanded by a pose target whose joint-0 angle is `q0`.
pub fn target_orientation(beta: f64, gamma: f64, q0: f64) -> Matrix3<f64> {
    yaw_rotation(q0) * pitch_rotation(beta) * yaw_rotation(gamma - q0)
}

fn rotate_plane(a: f64, v: Vec2) -> Vec2 {
    let (s, c) = a.sin_cos();
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

fn check_pitch(beta: f64) -> Result<()> {
    if (wrap_angle(beta).abs() - PI).abs() < 1e-9 {
        return Err(Error::PitchSingularity);
    }
    Ok(())
}

/// Spatial inverse kinematics. Joint limits are not applied.
pub fn ik_forbal5(spec: &MechanismSpec, target: &PoseTarget5) -> Result<IkSolution> {
    Ok(solve_spatial(spec, target)?.sol)
}

pub fn ik_forbal5_limited(spec: &MechanismSpec, target: &PoseTarget5) -> Result<IkSolution> {
    let sol = ik_forbal5(spec, target)?;
    sol.check_limits(&spec.limits)?;
    Ok(sol)
}

fn solve_spatial(spec: &MechanismSpec, target: &PoseTarget5) -> Result<PlanarSolve> {
    let ext = spec
        .spatial
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("mechanism has no spatial extension".into()))?;
    check_pitch(target.beta)?;
    let p = target.p;
    let rho = p.x.hypot(p.y);
    if rho < 1e-12 {
        return Err(Error::YawSingularity);
    }
    let q0 = p.y.atan2(p.x);
    let p_plane = Vec2::new(rho, p.z);
    let me = Vec2::new(ext.motor_offset.x, ext.motor_offset.z);
    let p_m = p_plane - rotate_plane(target.beta, me);
    let mut s = solve_planar(spec, p_m)?;
    s.sol.q0 = Some(q0);
    s.sol.q3 = Some(wrap_angle(s.sol.q22 - s.sol.q21 + target.beta));
    s.sol.q4 = Some(wrap_angle(q0 - target.gamma));
    Ok(s)
}

/// Pose reached by the spatial variant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose5 {
    pub p: Vec3,
    pub beta: f64,
    pub gamma: f64,
    pub rotation: Matrix3<f64>,
    pub state: JointState,
}

/// Spatial forward kinematics from IK-convention actuated angles.
pub fn forward_kinematics5(
    spec: &MechanismSpec,
    q0: f64,
    q11: f64,
    q21: f64,
    q3: f64,
    q4: f64,
) -> Result<Pose5> {
    let ext = spec
        .spatial
        .as_ref()
        .ok_or_else(|| Error::InvalidSpec("mechanism has no spatial extension".into()))?;
    let fk = forward_kinematics(spec, -q11, q21, Branch::ElbowUp)?;
    let pitch = fk.state.theta22 + q3;
    let me = Vec2::new(ext.motor_offset.x, ext.motor_offset.z);
    let p_plane = fk.p_e + rotate_plane(pitch, me);
    let p = yaw_rotation(q0) * Vec3::new(p_plane.x, 0.0, p_plane.y);
    let rotation = yaw_rotation(q0) * pitch_rotation(pitch) * yaw_rotation(-q4);
    let (beta, gamma) = extract_pitch_yaw(&rotation, q0);
    Ok(Pose5 {
        p,
        beta,
        gamma,
        rotation,
        state: fk.state,
    })
}

/// Inverse of [`target_orientation`] for a known joint-0 angle.
pub fn extract_pitch_yaw(rotation: &Matrix3<f64>, q0: f64) -> (f64, f64) {
    let m = yaw_rotation(-q0) * rotation;
    let beta = (-m[(0, 2)]).atan2(m[(2, 2)]);
    let n = pitch_rotation(beta).transpose() * m;
    let phi = n[(1, 0)].atan2(n[(0, 0)]);
    (beta, wrap_angle(q0 + phi))
}

/// Planar or spatial target for [`reachability`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Planar(Vec2),
    Spatial(PoseTarget5),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Reachability {
    Reachable,
    Unreachable,
    /// Reachable, but either a cosine-rule argument or a joint sits within
    /// `margin` of its bound.
    NearSingular {
        margin: f64,
    },
}

/// Classify a target against the IK and the spec's joint limits.
pub fn reachability(spec: &MechanismSpec, target: &Target) -> Reachability {
    let solved = match target {
        Target::Planar(p) => solve_planar(spec, *p),
        Target::Spatial(t) => solve_spatial(spec, t),
    };
    let Ok(s) = solved else {
        return Reachability::Unreachable;
    };
    if s.sol.check_limits(&spec.limits).is_err() {
        return Reachability::Unreachable;
    }
    let margin = s.margin.min(spec.limits.slack(&s.sol.angles()));
    if margin < NEAR_SINGULAR_MARGIN {
        Reachability::NearSingular { margin }
    } else {
        Reachability::Reachable
    }
}
