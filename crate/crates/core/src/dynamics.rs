//! Inverse dynamics in reduced coordinates (theta11, theta21, and q0 for the
//! spatial variant): actuator torques and the base reaction wrench.
//!
//! Each link is a rigid body with its aggregated mass at the inline CoM
//! (shifted out of plane by its y offset) and a slender-rod inertia tensor.
//! The linkage plane turns with joint 0; planar quantities are lifted into
//! the rotating frame `R_z(q0)`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ik::yaw_rotation;
use crate::model::{loop_closure_rates, LinkId, LinkPoint, MechanismSpec, RateState, Vec3};
use crate::trajectory::{joint_sample, JointSample, SpatialJoints, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkInertia {
    pub mass: f64,
    /// Inline CoM offset from the proximal joint, m.
    pub com: f64,
    /// About the CoM, out-of-plane axis, kg·m².
    pub rot_inertia: f64,
}

pub fn link_inertia(spec: &MechanismSpec, id: LinkId) -> LinkInertia {
    let p = spec.mass_props(id);
    LinkInertia {
        mass: p.mass,
        com: p.com(),
        rot_inertia: p.inertia,
    }
}

/// Force and moment about the fixed-frame origin that the base exerts on
/// the manipulator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReactionWrench {
    pub force: Vec3,
    pub moment: Vec3,
}

impl ReactionWrench {
    pub fn zero() -> Self {
        Self {
            force: Vec3::zeros(),
            moment: Vec3::zeros(),
        }
    }

    pub fn minus(&self, other: &ReactionWrench) -> Self {
        Self {
            force: self.force - other.force,
            moment: self.moment - other.moment,
        }
    }
}

/// Actuator torques in the IK sign convention, N·m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Torques {
    pub tau11: f64,
    pub tau21: f64,
    pub tau0: Option<f64>,
}

/// Whether the static wrench of the nominal pose is subtracted, like a
/// force sensor tared with the manipulator at rest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrenchMode {
    Raw,
    Zeroed,
}

#[derive(Clone, Copy, Debug)]
struct Body {
    mass: f64,
    r: Vec3,
    v: Vec3,
    a: Vec3,
    w: Vec3,
    alpha: Vec3,
    inertia: Matrix3<f64>,
}

impl Body {
    /// Net force and moment (about the CoM) the body needs.
    fn wrench(&self, g: &Vec3) -> (Vec3, Vec3) {
        let f = self.mass * (self.a - g);
        let iw = self.inertia * self.w;
        let n = self.inertia * self.alpha + self.w.cross(&iw);
        (f, n)
    }
}

fn gravity(spec: &MechanismSpec) -> Vec3 {
    Vec3::new(0.0, 0.0, -spec.gravity)
}

fn spatial_of(js: &JointSample) -> SpatialJoints {
    js.spatial.unwrap_or_default()
}

fn lift(v: crate::model::Vec2, y: f64) -> Vec3 {
    Vec3::new(v.x, y, v.y)
}

fn bodies(spec: &MechanismSpec, js: &JointSample) -> [Body; 4] {
    let sp = spatial_of(js);
    let rot = yaw_rotation(sp.q0);
    let w0 = Vec3::new(0.0, 0.0, sp.dq0);
    let dw0 = Vec3::new(0.0, 0.0, sp.ddq0);
    let (q, rates) = (&js.state, &js.rates);
    LinkId::ALL.map(|id| {
        let mp = spec.mass_props(id);
        let p = LinkPoint::on_link(spec, id, mp.com());
        let r_b = lift(p.pos(q), mp.offplane());
        let v_b = lift(p.vel(q, rates), 0.0);
        let a_b = lift(p.acc(q, rates), 0.0);
        let th = q.get(id);
        let w_link = rot * Vec3::new(0.0, -rates.vel(id), 0.0);
        let axis = rot * Vec3::new(th.cos(), 0.0, th.sin());
        Body {
            mass: mp.mass,
            r: rot * r_b,
            v: rot * (v_b + w0.cross(&r_b)),
            a: rot * (a_b + 2.0 * w0.cross(&v_b) + dw0.cross(&r_b) + w0.cross(&w0.cross(&r_b))),
            w: w0 + w_link,
            alpha: dw0 + rot * Vec3::new(0.0, -rates.acc(id), 0.0) + w0.cross(&w_link),
            inertia: mp.inertia * (Matrix3::identity() - axis * axis.transpose()),
        }
    })
}

/// Body CoM velocities and angular velocities for a unit rate of one
/// independent coordinate (0: theta11, 1: theta21, 2: q0).
fn unit_jacobian(
    spec: &MechanismSpec,
    js: &JointSample,
    coord: usize,
) -> Result<[(Vec3, Vec3); 4]> {
    let sp = spatial_of(js);
    let rot = yaw_rotation(sp.q0);
    let q = &js.state;
    if coord == 2 {
        let z = Vec3::new(0.0, 0.0, 1.0);
        return Ok(LinkId::ALL.map(|id| {
            let mp = spec.mass_props(id);
            let p = LinkPoint::on_link(spec, id, mp.com());
            let r = rot * lift(p.pos(q), mp.offplane());
            (z.cross(&r), z)
        }));
    }
    let (d11, d21) = if coord == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
    let (d12, d22) = loop_closure_rates(spec, q, d11, d21)?;
    let rates = RateState {
        thetadot11: d11,
        thetadot12: d12,
        thetadot21: d21,
        thetadot22: d22,
        ..Default::default()
    };
    Ok(LinkId::ALL.map(|id| {
        let mp = spec.mass_props(id);
        let p = LinkPoint::on_link(spec, id, mp.com());
        (
            rot * lift(p.vel(q, &rates), 0.0),
            rot * Vec3::new(0.0, -rates.vel(id), 0.0),
        )
    }))
}

/// Generalized forces on (theta11, theta21, q0).
fn generalized_forces(spec: &MechanismSpec, js: &JointSample) -> Result<[f64; 3]> {
    let g = gravity(spec);
    let wrenches = bodies(spec, js).map(|b| b.wrench(&g));
    let n_coords = if js.spatial.is_some() { 3 } else { 2 };
    let mut tau = [0.0; 3];
    for (k, t) in tau.iter_mut().enumerate().take(n_coords) {
        let jac = unit_jacobian(spec, js, k)?;
        *t = jac
            .iter()
            .zip(&wrenches)
            .map(|((v, w), (f, n))| v.dot(f) + w.dot(n))
            .sum();
    }
    Ok(tau)
}

/// Actuator torques for one sample.
pub fn inverse_dynamics(spec: &MechanismSpec, js: &JointSample) -> Result<Torques> {
    let tau = generalized_forces(spec, js)?;
    Ok(Torques {
        tau11: -tau[0],
        tau21: tau[1],
        tau0: js.spatial.map(|_| tau[2]),
    })
}

/// Base reaction including the static base mass.
pub fn raw_reaction(spec: &MechanismSpec, js: &JointSample) -> ReactionWrench {
    let g = gravity(spec);
    let mut force = -spec.base_mass * g;
    let mut moment = spec.base_com.cross(&force);
    for b in bodies(spec, js) {
        let (f, n) = b.wrench(&g);
        force += f;
        moment += b.r.cross(&f) + n;
    }
    ReactionWrench { force, moment }
}

/// Wrench of the manipulator held still at its nominal pose.
pub fn static_wrench(spec: &MechanismSpec) -> Result<ReactionWrench> {
    let js = nominal_sample(spec)?;
    Ok(raw_reaction(spec, &js))
}

/// The nominal pose at rest (joint 0 at zero for the spatial variant).
pub fn nominal_sample(spec: &MechanismSpec) -> Result<JointSample> {
    Ok(JointSample {
        t: 0.0,
        state: spec.nominal_state()?,
        rates: RateState::default(),
        spatial: spec.spatial.as_ref().map(|_| SpatialJoints::default()),
    })
}

pub fn base_reaction(
    spec: &MechanismSpec,
    js: &JointSample,
    mode: WrenchMode,
) -> Result<ReactionWrench> {
    let raw = raw_reaction(spec, js);
    Ok(match mode {
        WrenchMode::Raw => raw,
        WrenchMode::Zeroed => raw.minus(&static_wrench(spec)?),
    })
}

/// `sum m a`: the part of the reaction force caused by motion.
pub fn dynamic_force(spec: &MechanismSpec, js: &JointSample) -> Vec3 {
    bodies(spec, js)
        .iter()
        .fold(Vec3::zeros(), |acc, b| acc + b.mass * b.a)
}

pub fn linear_momentum3(spec: &MechanismSpec, js: &JointSample) -> Vec3 {
    bodies(spec, js)
        .iter()
        .fold(Vec3::zeros(), |acc, b| acc + b.mass * b.v)
}

/// Largest `|F_dynamic - dL/dt|` over the interior samples, with dL/dt from
/// central differences.
pub fn momentum_audit(spec: &MechanismSpec, samples: &[JointSample]) -> f64 {
    if samples.len() < 3 {
        return 0.0;
    }
    let l: Vec<Vec3> = samples.iter().map(|s| linear_momentum3(spec, s)).collect();
    (1..samples.len() - 1)
        .map(|k| {
            let dl = (l[k + 1] - l[k - 1]) / (samples[k + 1].t - samples[k - 1].t);
            (dynamic_force(spec, &samples[k]) - dl).norm()
        })
        .fold(0.0, f64::max)
}

/// Kinetic and potential energy of the moving links.
pub fn energy(spec: &MechanismSpec, js: &JointSample) -> (f64, f64) {
    let g = spec.gravity;
    bodies(spec, js).iter().fold((0.0, 0.0), |(t, v), b| {
        (
            t + 0.5 * b.mass * b.v.norm_squared() + 0.5 * b.w.dot(&(b.inertia * b.w)),
            v + b.mass * g * b.r.z,
        )
    })
}

/// Actuator power `sum tau q_dot`, W.
pub fn power(spec: &MechanismSpec, js: &JointSample) -> Result<f64> {
    let tau = generalized_forces(spec, js)?;
    let dq0 = js.spatial.map(|s| s.dq0).unwrap_or(0.0);
    Ok(tau[0] * js.rates.thetadot11 + tau[1] * js.rates.thetadot21 + tau[2] * dq0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit {
    /// Integral of the actuator power, J.
    pub work: f64,
    /// Integral of the absolute actuator power, J.
    pub abs_work: f64,
    pub delta_energy: f64,
    /// `|work - delta_energy| / max(abs_work, |delta_energy|)`.
    pub rel_error: f64,
}

/// Integrate actuator power along the continuous trajectory with
/// Gauss-Legendre quadrature on each smooth piece and compare with the
/// change of mechanical energy.
pub fn energy_audit(
    spec: &MechanismSpec,
    traj: &Trajectory,
    enforce_limits: bool,
) -> Result<EnergyAudit> {
    let rule = GaussLegendre::new(NonZeroUsize::new(12).unwrap());
    let eval = |t: f64| joint_sample(spec, traj.kind, &traj.eval(t), enforce_limits);
    let mut work = 0.0;
    let mut abs_work = 0.0;
    const SUBDIV: usize = 4;
    for w in traj.breakpoints().windows(2) {
        let h = (w[1] - w[0]) / SUBDIV as f64;
        for i in 0..SUBDIV {
            let (a, b) = (w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h);
            for &(x, wt) in rule.iter() {
                let t = 0.5 * ((b - a) * x + b + a);
                let p = power(spec, &eval(t)?)?;
                work += 0.5 * (b - a) * wt * p;
                abs_work += 0.5 * (b - a) * wt * p.abs();
            }
        }
    }
    let e = |t: f64| -> Result<f64> {
        let (k, v) = energy(spec, &eval(t)?);
        Ok(k + v)
    };
    let delta_energy = e(traj.duration())? - e(0.0)?;
    let scale = abs_work.max(delta_energy.abs());
    let rel_error = if scale > 0.0 {
        (work - delta_energy).abs() / scale
    } else {
        0.0
    };
    Ok(EnergyAudit {
        work,
        abs_work,
        delta_energy,
        rel_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::{balanced, ProfileChoice};
    use crate::config;
    use crate::model::{forward_kinematics, passive_motion, Branch, JointState};

    fn still(spec: &MechanismSpec, q11: f64, q21: f64) -> JointSample {
        let fk = forward_kinematics(spec, -q11, q21, Branch::ElbowUp).unwrap();
        JointSample {
            t: 0.0,
            state: fk.state,
            rates: RateState::default(),
            spatial: spec.spatial.as_ref().map(|_| SpatialJoints::default()),
        }
    }

    fn moving(spec: &MechanismSpec, q11: f64, q21: f64, rates: [f64; 4]) -> JointSample {
        let fk = forward_kinematics(spec, -q11, q21, Branch::ElbowUp).unwrap();
        let r = passive_motion(spec, &fk.state, rates[0], rates[1], rates[2], rates[3]).unwrap();
        JointSample {
            t: 0.0,
            state: fk.state,
            rates: r,
            spatial: None,
        }
    }

    #[test]
    fn balanced_static_hold_needs_no_torque() {
        let spec = balanced(&config::forbal2(), ProfileChoice::Link12Short).unwrap();
        let t = inverse_dynamics(&spec, &still(&spec, 0.3, 0.9)).unwrap();
        assert!(t.tau11.abs() < 1e-12 && t.tau21.abs() < 1e-12, "{t:?}");
    }

    #[test]
    fn unbalanced_static_torque_is_potential_gradient() {
        let spec = config::forbal2();
        let (q11, q21) = (0.5, 0.7);
        let t = inverse_dynamics(&spec, &still(&spec, q11, q21)).unwrap();
        let v = |a: f64, b: f64| energy(&spec, &still(&spec, a, b)).1;
        let h = 1e-6;
        let dv_dq11 = (v(q11 + h, q21) - v(q11 - h, q21)) / (2.0 * h);
        let dv_dq21 = (v(q11, q21 + h) - v(q11, q21 - h)) / (2.0 * h);
        assert!((t.tau11 - dv_dq11).abs() < 1e-7, "{} {}", t.tau11, dv_dq11);
        assert!((t.tau21 - dv_dq21).abs() < 1e-7, "{} {}", t.tau21, dv_dq21);
    }

    #[test]
    fn static_balanced_force_is_total_weight() {
        let spec = balanced(&config::forbal2(), ProfileChoice::Link12Short).unwrap();
        let w = raw_reaction(&spec, &still(&spec, 0.2, 0.4));
        let total = spec.moving_mass() + spec.base_mass;
        assert!((w.force.z - total * spec.gravity).abs() < 1e-12);
        assert!(w.force.x.abs() < 1e-15 && w.force.y.abs() < 1e-15);
        // Balanced: the total CoM is fixed, so the y moment is pose independent.
        let w2 = raw_reaction(&spec, &still(&spec, -0.3, 1.0));
        assert!((w.moment.y - w2.moment.y).abs() < 1e-12);
    }

    #[test]
    fn balanced_x_moment_is_negative() {
        let spec = balanced(&config::forbal2(), ProfileChoice::Link12Short).unwrap();
        assert!(static_wrench(&spec).unwrap().moment.x < 0.0);
    }

    #[test]
    fn zeroed_static_hold_is_zero() {
        let spec = config::forbal2();
        let (q11, q21) = spec.nominal_pose;
        let w = base_reaction(&spec, &still(&spec, q11, q21), WrenchMode::Zeroed).unwrap();
        assert!(w.force.norm() < 1e-12 && w.moment.norm() < 1e-12);
    }

    #[test]
    fn balanced_motion_has_no_dynamic_force() {
        let spec = balanced(&config::forbal2(), ProfileChoice::Link12Short).unwrap();
        let js = moving(&spec, 0.4, 0.6, [1.5, -2.0, 4.0, 3.0]);
        assert!(dynamic_force(&spec, &js).norm() < 1e-12);
    }

    #[test]
    fn power_equals_energy_rate() {
        let spec = config::forbal2();
        let js = moving(&spec, 0.4, 0.6, [1.5, -2.0, 4.0, 3.0]);
        let p = power(&spec, &js).unwrap();
        // d/dt E along the motion by a first-order step of all coordinates.
        let h = 1e-7;
        let step = |s: f64| {
            let q = &js.state;
            let r = &js.rates;
            let state = JointState {
                theta11: q.theta11 + s * r.thetadot11 + 0.5 * s * s * r.thetaddot11,
                theta12: q.theta12 + s * r.thetadot12 + 0.5 * s * s * r.thetaddot12,
                theta21: q.theta21 + s * r.thetadot21 + 0.5 * s * s * r.thetaddot21,
                theta22: q.theta22 + s * r.thetadot22 + 0.5 * s * s * r.thetaddot22,
            };
            let rates = passive_motion(
                &spec,
                &state,
                r.thetadot11 + s * r.thetaddot11,
                r.thetadot21 + s * r.thetaddot21,
                r.thetaddot11,
                r.thetaddot21,
            )
            .unwrap();
            let (k, v) = energy(&spec, &JointSample { state, rates, ..js });
            k + v
        };
        let de = (step(h) - step(-h)) / (2.0 * h);
        assert!((p - de).abs() < 1e-5 * p.abs().max(1.0), "{p} {de}");
    }

    #[test]
    fn link_inertia_defaults_to_rod_model() {
        let spec = config::forbal2();
        let li = link_inertia(&spec, LinkId::L11);
        let l = &spec.links.l11;
        let expected = l.profile_mass * l.length * l.length / 12.0;
        assert!((li.rot_inertia - expected).abs() < 1e-15);
        assert_eq!(li.com, l.profile_com);
    }
}
