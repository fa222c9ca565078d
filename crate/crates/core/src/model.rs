//! Mechanism description and closed-loop kinematics of the five-bar linkage.
//!
//! The linkage lives in the x-z plane of the fixed frame (y out of plane).
//! Two RR chains start at joints 11 and 21 and meet at the closed-loop point
//! `p_c`; the end effector `p_e` sits on link 22, `ee_offset` past `p_c`.
//!
//! Angles `theta_ij` are absolute: measured from the fixed x axis toward z.
//! The inverse-kinematics convention (`q_ij`) is only used at the IK
//! boundary, see [`IkAngles`].

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workspace::JointLimits;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Discriminant below which the two loop circles count as tangent.
const TANGENT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkId {
    L11,
    L12,
    L21,
    L22,
}

impl LinkId {
    pub const ALL: [LinkId; 4] = [LinkId::L11, LinkId::L12, LinkId::L21, LinkId::L22];

    pub fn index(self) -> usize {
        match self {
            LinkId::L11 => 0,
            LinkId::L12 => 1,
            LinkId::L21 => 2,
            LinkId::L22 => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LinkId::L11 => "11",
            LinkId::L12 => "12",
            LinkId::L21 => "21",
            LinkId::L22 => "22",
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Geometry and mass distribution of one link.
///
/// Offsets are inline (along the link axis) and signed, measured from the
/// proximal joint. Counter masses are point masses; `counter_com` is usually
/// negative (mounted behind the joint).
#[derive(Clone, Debug, PartialEq)]
pub struct LinkSpec {
    pub length: f64,
    pub profile_mass: f64,
    pub profile_com: f64,
    pub counter_mass: f64,
    pub counter_com: f64,
    /// Out-of-plane (y) CoM offset of the profile. Does not enter the
    /// balance conditions, only the x/z reaction moments.
    pub offplane_com: f64,
    pub counter_offplane: f64,
    /// Rotational inertia about the aggregated CoM, out-of-plane axis.
    /// `None` selects the slender-rod plus point-mass model.
    pub rot_inertia: Option<f64>,
}

impl LinkSpec {
    /// A link without counter mass; the counter mount defaults to `-length`.
    pub fn new(length: f64, profile_mass: f64, profile_com: f64) -> Self {
        Self {
            length,
            profile_mass,
            profile_com,
            counter_mass: 0.0,
            counter_com: -length,
            offplane_com: 0.0,
            counter_offplane: 0.0,
            rot_inertia: None,
        }
    }

    pub fn with_counter(mut self, mass: f64, com: f64) -> Self {
        self.counter_mass = mass;
        self.counter_com = com;
        self
    }

    /// Aggregated mass `m_ij = m_ij,p + m_ij,c`.
    pub fn mass(&self) -> f64 {
        self.profile_mass + self.counter_mass
    }

    /// Aggregated first moment `m_ij e_ij = m_ij,p e_ij,p + m_ij,c e_ij,c`.
    pub fn first_moment(&self) -> f64 {
        self.profile_mass * self.profile_com + self.counter_mass * self.counter_com
    }

    fn validate(&self, id: LinkId) -> Result<()> {
        let fields = [
            self.length,
            self.profile_mass,
            self.profile_com,
            self.counter_mass,
            self.counter_com,
            self.offplane_com,
            self.counter_offplane,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("link {id}: non-finite field")));
        }
        if self.length <= 0.0 {
            return Err(Error::InvalidSpec(format!("link {id}: length must be > 0")));
        }
        if self.profile_mass < 0.0 || self.counter_mass < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "link {id}: masses must be >= 0"
            )));
        }
        if let Some(i) = self.rot_inertia {
            if !(i >= 0.0 && i.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "link {id}: rot_inertia must be >= 0"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Links {
    pub l11: LinkSpec,
    pub l12: LinkSpec,
    pub l21: LinkSpec,
    pub l22: LinkSpec,
}

impl Index<LinkId> for Links {
    type Output = LinkSpec;

    fn index(&self, id: LinkId) -> &LinkSpec {
        match id {
            LinkId::L11 => &self.l11,
            LinkId::L12 => &self.l12,
            LinkId::L21 => &self.l21,
            LinkId::L22 => &self.l22,
        }
    }
}

impl IndexMut<LinkId> for Links {
    fn index_mut(&mut self, id: LinkId) -> &mut LinkSpec {
        match id {
            LinkId::L11 => &mut self.l11,
            LinkId::L12 => &mut self.l12,
            LinkId::L21 => &mut self.l21,
            LinkId::L22 => &mut self.l22,
        }
    }
}

/// Spatial 5-DOF extension: a joint-0 turntable under the linkage and a
/// two-axis end-effector motor (joints 3 and 4) at `p_e`.
#[derive(Clone, Debug, PartialEq)]
pub struct Forbal5Extension {
    /// Drop from the joint 11/21 midpoint to the joint-0 mount. The joint-0
    /// axis itself always passes through that midpoint.
    pub joint0_offset: f64,
    /// Vector from joint 3 to joint 4 in the EE-motor frame (`p_me`).
    pub motor_offset: Vec3,
    pub ee_motor_mass: f64,
    /// Inline offset of the EE-motor CoM from `p_c` along link 22.
    pub ee_motor_com: f64,
    pub implement_mass: f64,
    /// Implement CoM; x is taken as its inline offset from `p_c`, y as its
    /// out-of-plane offset.
    pub implement_com: Vec3,
}

/// A point mass carried rigidly by link 22, offset measured from `p_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PayloadMass {
    pub mass: f64,
    pub inline: f64,
    pub offplane: f64,
}

/// Aggregated mass properties of one moving link (payload included for 22).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassProps {
    pub mass: f64,
    /// Inline first moment about the proximal joint, kg·m.
    pub first_moment: f64,
    /// Out-of-plane first moment, kg·m.
    pub offplane_moment: f64,
    /// Rotational inertia about the aggregated CoM, kg·m².
    pub inertia: f64,
}

impl MassProps {
    /// Inline CoM offset `e_ij`; zero for a massless link.
    pub fn com(&self) -> f64 {
        if self.mass > 0.0 {
            self.first_moment / self.mass
        } else {
            0.0
        }
    }

    pub fn offplane(&self) -> f64 {
        if self.mass > 0.0 {
            self.offplane_moment / self.mass
        } else {
            0.0
        }
    }
}

/// Full parameter set of a five-bar manipulator. Every other module reads
/// geometry and masses from here.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanismSpec {
    pub name: String,
    pub links: Links,
    /// x of the joint 11/21 midpoint `p_b` in the fixed frame.
    pub base_x: f64,
    /// Height `l_h` of `p_b` above the fixed-frame origin.
    pub base_height: f64,
    /// Distance `l_d` between joints 11 and 21.
    pub base_separation: f64,
    /// Extension `l_e` of link 22 past `p_c`.
    pub ee_offset: f64,
    pub ee_payload_mass: f64,
    /// Inline offset of the payload CoM from `p_c`.
    pub ee_payload_com: f64,
    pub ee_payload_offplane: f64,
    pub gravity: f64,
    /// Static mass on the base (motors, frame), lumped at `base_com`.
    pub base_mass: f64,
    pub base_com: Vec3,
    /// Require all four link lengths to be equal.
    pub uniform: bool,
    pub limits: JointLimits,
    /// Nominal pose (q11, q21) in the IK convention.
    pub nominal_pose: (f64, f64),
    pub spatial: Option<Forbal5Extension>,
    /// Alternative link-12 profile with a backward extension.
    pub link12_extended: Option<LinkSpec>,
}

impl MechanismSpec {
    pub fn validate(&self) -> Result<()> {
        for id in LinkId::ALL {
            self.links[id].validate(id)?;
        }
        let scalars = [
            self.base_x,
            self.base_height,
            self.base_separation,
            self.ee_offset,
            self.ee_payload_mass,
            self.ee_payload_com,
            self.ee_payload_offplane,
            self.gravity,
            self.base_mass,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("non-finite scalar field".into()));
        }
        if self.base_separation < 0.0 {
            return Err(Error::InvalidSpec("base_separation must be >= 0".into()));
        }
        if self.ee_payload_mass < 0.0 || self.base_mass < 0.0 {
            return Err(Error::InvalidSpec("masses must be >= 0".into()));
        }
        if self.ee_offset <= -self.links.l22.length {
            return Err(Error::InvalidSpec(
                "ee_offset folds p_e behind joint 22".into(),
            ));
        }
        if self.uniform {
            let l = self.links.l11.length;
            let same = LinkId::ALL
                .iter()
                .all(|&id| (self.links[id].length - l).abs() <= 1e-12 * l);
            if !same {
                return Err(Error::InvalidSpec(
                    "uniform flag set but link lengths differ".into(),
                ));
            }
        }
        if let Some(ext) = &self.spatial {
            if self.base_x != 0.0 {
                return Err(Error::InvalidSpec(
                    "spatial variant: joint-0 axis must pass through p_b, so base_x must be 0"
                        .into(),
                ));
            }
            if ext.motor_offset.y != 0.0 {
                return Err(Error::InvalidSpec(
                    "spatial variant: joint 4 must lie in the linkage plane (p_me.y = 0)".into(),
                ));
            }
            if ext.ee_motor_mass < 0.0 || ext.implement_mass < 0.0 {
                return Err(Error::InvalidSpec("spatial masses must be >= 0".into()));
            }
        }
        if let Some(p) = &self.link12_extended {
            p.validate(LinkId::L12)?;
        }
        self.limits.validate()?;
        Ok(())
    }

    /// Midpoint `p_b` of joints 11 and 21.
    pub fn p_b(&self) -> Vec2 {
        Vec2::new(self.base_x, self.base_height)
    }

    pub fn joint11(&self) -> Vec2 {
        self.p_b() - Vec2::new(0.5 * self.base_separation, 0.0)
    }

    pub fn joint21(&self) -> Vec2 {
        self.p_b() + Vec2::new(0.5 * self.base_separation, 0.0)
    }

    pub fn joint_origin(&self, id: LinkId) -> Vec2 {
        match id {
            LinkId::L11 | LinkId::L12 => self.joint11(),
            LinkId::L21 | LinkId::L22 => self.joint21(),
        }
    }

    /// Equal link lengths and coaxial base joints: the loop is a rhombus.
    pub fn is_rhombus(&self) -> bool {
        let l = self.links.l11.length;
        self.base_separation == 0.0
            && LinkId::ALL
                .iter()
                .all(|&id| (self.links[id].length - l).abs() <= 1e-12 * l)
    }

    pub fn max_link_length(&self) -> f64 {
        LinkId::ALL
            .iter()
            .map(|&id| self.links[id].length)
            .fold(0.0, f64::max)
    }

    /// Point masses lumped onto link 22 beyond `p_c`.
    pub fn payload(&self) -> Vec<PayloadMass> {
        let mut out = vec![PayloadMass {
            mass: self.ee_payload_mass,
            inline: self.ee_payload_com,
            offplane: self.ee_payload_offplane,
        }];
        if let Some(ext) = &self.spatial {
            out.push(PayloadMass {
                mass: ext.ee_motor_mass,
                inline: ext.ee_motor_com,
                offplane: 0.0,
            });
            out.push(PayloadMass {
                mass: ext.implement_mass,
                inline: ext.implement_com.x,
                offplane: ext.implement_com.y,
            });
        }
        out
    }

    pub fn payload_mass(&self) -> f64 {
        self.payload().iter().map(|p| p.mass).sum()
    }

    /// Payload first moment about joint 22 (inline).
    pub fn payload_first_moment(&self) -> f64 {
        let l22 = self.links.l22.length;
        self.payload()
            .iter()
            .map(|p| p.mass * (l22 + p.inline))
            .sum()
    }

    /// Aggregated mass properties, profile + counter mass (+ payload on 22).
    pub fn mass_props(&self, id: LinkId) -> MassProps {
        let link = &self.links[id];
        // (mass, inline position, own inertia)
        let mut points = vec![
            (
                link.profile_mass,
                link.profile_com,
                link.profile_mass * link.length * link.length / 12.0,
            ),
            (link.counter_mass, link.counter_com, 0.0),
        ];
        let mut offplane_moment =
            link.profile_mass * link.offplane_com + link.counter_mass * link.counter_offplane;
        if id == LinkId::L22 {
            for p in self.payload() {
                points.push((p.mass, link.length + p.inline, 0.0));
                offplane_moment += p.mass * p.offplane;
            }
        }
        let mass: f64 = points.iter().map(|p| p.0).sum();
        let first_moment: f64 = points.iter().map(|p| p.0 * p.1).sum();
        let com = if mass > 0.0 { first_moment / mass } else { 0.0 };
        let inertia = link.rot_inertia.unwrap_or_else(|| {
            points
                .iter()
                .map(|&(m, x, own)| own + m * (x - com) * (x - com))
                .sum()
        });
        MassProps {
            mass,
            first_moment,
            offplane_moment,
            inertia,
        }
    }

    /// Mass of the moving links including payload.
    pub fn moving_mass(&self) -> f64 {
        LinkId::ALL.iter().map(|&id| self.mass_props(id).mass).sum()
    }

    pub fn counter_masses(&self) -> [f64; 4] {
        LinkId::ALL.map(|id| self.links[id].counter_mass)
    }

    /// Same spec with every counter mass removed (mount offsets kept).
    pub fn without_counter_masses(&self) -> Self {
        let mut out = self.clone();
        for id in LinkId::ALL {
            out.links[id].counter_mass = 0.0;
        }
        out
    }

    /// Same spec with every out-of-plane CoM offset removed.
    pub fn inline_only(&self) -> Self {
        let mut out = self.clone();
        for id in LinkId::ALL {
            out.links[id].offplane_com = 0.0;
            out.links[id].counter_offplane = 0.0;
        }
        out.ee_payload_offplane = 0.0;
        if let Some(ext) = out.spatial.as_mut() {
            ext.implement_com.y = 0.0;
        }
        if let Some(p) = out.link12_extended.as_mut() {
            p.offplane_com = 0.0;
            p.counter_offplane = 0.0;
        }
        out
    }

    /// Nominal pose in absolute angles.
    pub fn nominal_state(&self) -> Result<JointState> {
        let (q11, q21) = self.nominal_pose;
        Ok(forward_kinematics(self, -q11, q21, Branch::ElbowUp)?.state)
    }
}

/// Unit vector of an absolute angle in the x-z plane.
#[inline]
pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Derivative of [`unit`] with respect to the angle.
#[inline]
pub fn unit_perp(theta: f64) -> Vec2 {
    Vec2::new(-theta.sin(), theta.cos())
}

#[inline]
pub(crate) fn cross2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Assembly mode of the closed loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `p_c` on the far side of the line joint 12 -> joint 22 from the base:
    /// the convex working mode that the inverse kinematics returns.
    ElbowUp,
    ElbowDown,
}

/// Absolute joint angles, radians from the fixed x axis.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct JointState {
    pub theta11: f64,
    pub theta12: f64,
    pub theta21: f64,
    pub theta22: f64,
}

impl JointState {
    pub fn get(&self, id: LinkId) -> f64 {
        match id {
            LinkId::L11 => self.theta11,
            LinkId::L12 => self.theta12,
            LinkId::L21 => self.theta21,
            LinkId::L22 => self.theta22,
        }
    }

    pub fn to_ik(&self) -> IkAngles {
        IkAngles {
            q11: wrap_angle(-self.theta11),
            q12: wrap_angle(self.theta12 - self.theta11),
            q21: wrap_angle(self.theta21),
            q22: wrap_angle(self.theta21 - self.theta22),
        }
    }

    /// Mismatch of `p_c` evaluated through chain 1 and chain 2.
    pub fn loop_error(&self, spec: &MechanismSpec) -> f64 {
        let l = &spec.links;
        let c1 =
            spec.joint11() + l.l11.length * unit(self.theta11) + l.l12.length * unit(self.theta12);
        let c2 =
            spec.joint21() + l.l21.length * unit(self.theta21) + l.l22.length * unit(self.theta22);
        (c1 - c2).norm()
    }
}

/// Joint rates and accelerations, rad/s and rad/s².
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RateState {
    pub thetadot11: f64,
    pub thetadot12: f64,
    pub thetadot21: f64,
    pub thetadot22: f64,
    pub thetaddot11: f64,
    pub thetaddot12: f64,
    pub thetaddot21: f64,
    pub thetaddot22: f64,
}

impl RateState {
    pub fn vel(&self, id: LinkId) -> f64 {
        match id {
            LinkId::L11 => self.thetadot11,
            LinkId::L12 => self.thetadot12,
            LinkId::L21 => self.thetadot21,
            LinkId::L22 => self.thetadot22,
        }
    }

    pub fn acc(&self, id: LinkId) -> f64 {
        match id {
            LinkId::L11 => self.thetaddot11,
            LinkId::L12 => self.thetaddot12,
            LinkId::L21 => self.thetaddot21,
            LinkId::L22 => self.thetaddot22,
        }
    }
}

/// Joint angles in the IK convention: q11 is measured clockwise, q12 and
/// q22 are the interior angles of the loop at joints 12 and 22.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct IkAngles {
    pub q11: f64,
    pub q12: f64,
    pub q21: f64,
    pub q22: f64,
}

impl IkAngles {
    pub fn to_absolute(&self) -> JointState {
        JointState {
            theta11: wrap_angle(-self.q11),
            theta12: wrap_angle(self.q12 - self.q11),
            theta21: wrap_angle(self.q21),
            theta22: wrap_angle(self.q21 - self.q22),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FkResult {
    pub state: JointState,
    pub p_c: Vec2,
    pub p_e: Vec2,
    pub branch: Branch,
}

/// A point fixed on the linkage, written as `origin + sum(coef * unit(theta))`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LinkPoint {
    origin: Vec2,
    terms: [(f64, LinkId); 2],
}

impl LinkPoint {
    /// Point at `inline` along link `id` from its proximal joint.
    pub(crate) fn on_link(spec: &MechanismSpec, id: LinkId, inline: f64) -> Self {
        let origin = spec.joint_origin(id);
        let terms = match id {
            LinkId::L11 => [(inline, LinkId::L11), (0.0, LinkId::L12)],
            LinkId::L12 => [(spec.links.l11.length, LinkId::L11), (inline, LinkId::L12)],
            LinkId::L21 => [(inline, LinkId::L21), (0.0, LinkId::L22)],
            LinkId::L22 => [(spec.links.l21.length, LinkId::L21), (inline, LinkId::L22)],
        };
        Self { origin, terms }
    }

    pub(crate) fn pos(&self, q: &JointState) -> Vec2 {
        self.terms
            .iter()
            .fold(self.origin, |acc, &(c, id)| acc + c * unit(q.get(id)))
    }

    pub(crate) fn vel(&self, q: &JointState, r: &RateState) -> Vec2 {
        self.terms.iter().fold(Vec2::zeros(), |acc, &(c, id)| {
            acc + c * r.vel(id) * unit_perp(q.get(id))
        })
    }

    pub(crate) fn acc(&self, q: &JointState, r: &RateState) -> Vec2 {
        self.terms.iter().fold(Vec2::zeros(), |acc, &(c, id)| {
            let th = q.get(id);
            let w = r.vel(id);
            acc + c * (r.acc(id) * unit_perp(th) - w * w * unit(th))
        })
    }
}

/// Closed-loop forward kinematics from the actuated absolute angles.
pub fn forward_kinematics(
    spec: &MechanismSpec,
    theta11: f64,
    theta21: f64,
    branch: Branch,
) -> Result<FkResult> {
    let l = &spec.links;
    let a = spec.joint11() + l.l11.length * unit(theta11);
    let b = spec.joint21() + l.l21.length * unit(theta21);
    let (r1, r2) = (l.l12.length, l.l22.length);
    let ab = b - a;
    let d = ab.norm();
    let scale = r1.max(r2);
    if d <= 1e-12 * scale {
        return Err(Error::Singular(
            "joints 12 and 22 coincide: loop closure is indeterminate".into(),
        ));
    }
    if d > r1 + r2 + 1e-12 * scale || d < (r1 - r2).abs() - 1e-12 * scale {
        return Err(Error::Unreachable(format!(
            "loop circles do not intersect (distance {d:.6} m)"
        )));
    }
    let along = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - along * along;
    if h2 < TANGENT_TOL * r1 * r1 {
        return Err(Error::Singular(
            "loop circles are tangent: links 12 and 22 are collinear".into(),
        ));
    }
    let h = h2.sqrt();
    let e = ab / d;
    let perp = Vec2::new(-e.y, e.x);
    let side = match branch {
        Branch::ElbowUp => -1.0,
        Branch::ElbowDown => 1.0,
    };
    let p_c = a + along * e + side * h * perp;
    let theta12 = (p_c.y - a.y).atan2(p_c.x - a.x);
    let theta22 = (p_c.y - b.y).atan2(p_c.x - b.x);
    let p_e = p_c + spec.ee_offset * unit(theta22);
    Ok(FkResult {
        state: JointState {
            theta11,
            theta12,
            theta21,
            theta22,
        },
        p_c,
        p_e,
        branch,
    })
}

/// Assembly mode of an arbitrary loop-consistent state.
pub fn branch_of(spec: &MechanismSpec, state: &JointState) -> Branch {
    let l = &spec.links;
    let a = spec.joint11() + l.l11.length * unit(state.theta11);
    let b = spec.joint21() + l.l21.length * unit(state.theta21);
    let c = a + l.l12.length * unit(state.theta12);
    if cross2(&(b - a), &(c - a)) < 0.0 {
        Branch::ElbowUp
    } else {
        Branch::ElbowDown
    }
}

/// End-effector position of a loop-consistent state.
pub fn end_effector(spec: &MechanismSpec, state: &JointState) -> Vec2 {
    LinkPoint::on_link(spec, LinkId::L22, spec.links.l22.length + spec.ee_offset).pos(state)
}

// Velocity loop closure, solved for the passive rates:
//   l12 u12' w12 - l22 u22' w22 = rhs
fn solve_passive(spec: &MechanismSpec, q: &JointState, rhs: Vec2) -> Result<(f64, f64)> {
    let (l12, l22) = (spec.links.l12.length, spec.links.l22.length);
    let c0 = l12 * unit_perp(q.theta12);
    let c1 = -l22 * unit_perp(q.theta22);
    let det = cross2(&c0, &c1);
    if det.abs() <= 1e-12 * l12 * l22 {
        return Err(Error::SingularConfiguration { det });
    }
    let w12 = cross2(&rhs, &c1) / det;
    let w22 = cross2(&c0, &rhs) / det;
    Ok((w12, w22))
}

/// Passive rates (thetadot12, thetadot22) from the actuated rates.
pub fn loop_closure_rates(
    spec: &MechanismSpec,
    state: &JointState,
    thetadot11: f64,
    thetadot21: f64,
) -> Result<(f64, f64)> {
    let (l11, l21) = (spec.links.l11.length, spec.links.l21.length);
    let rhs =
        -l11 * thetadot11 * unit_perp(state.theta11) + l21 * thetadot21 * unit_perp(state.theta21);
    solve_passive(spec, state, rhs)
}

/// Passive accelerations from the time derivative of the velocity loop.
pub fn loop_closure_accels(
    spec: &MechanismSpec,
    state: &JointState,
    rates: &RateState,
    thetaddot11: f64,
    thetaddot21: f64,
) -> Result<(f64, f64)> {
    let l = &spec.links;
    let q = state;
    let r = rates;
    let rhs = -l.l11.length * thetaddot11 * unit_perp(q.theta11)
        + l.l11.length * r.thetadot11.powi(2) * unit(q.theta11)
        + l.l12.length * r.thetadot12.powi(2) * unit(q.theta12)
        + l.l21.length * thetaddot21 * unit_perp(q.theta21)
        - l.l21.length * r.thetadot21.powi(2) * unit(q.theta21)
        - l.l22.length * r.thetadot22.powi(2) * unit(q.theta22);
    solve_passive(spec, state, rhs)
}

/// Complete rate state from actuated rates and accelerations.
pub fn passive_motion(
    spec: &MechanismSpec,
    state: &JointState,
    thetadot11: f64,
    thetadot21: f64,
    thetaddot11: f64,
    thetaddot21: f64,
) -> Result<RateState> {
    let (w12, w22) = loop_closure_rates(spec, state, thetadot11, thetadot21)?;
    let mut rates = RateState {
        thetadot11,
        thetadot12: w12,
        thetadot21,
        thetadot22: w22,
        thetaddot11,
        thetaddot21,
        ..Default::default()
    };
    let (a12, a22) = loop_closure_accels(spec, state, &rates, thetaddot11, thetaddot21)?;
    rates.thetaddot12 = a12;
    rates.thetaddot22 = a22;
    Ok(rates)
}

/// CoM position, velocity and acceleration of one link in the x-z plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComKinematics {
    pub pos: Vec2,
    pub vel: Vec2,
    pub acc: Vec2,
}

/// Per-link CoM kinematics, ordered 11, 12, 21, 22.
pub fn com_kinematics(
    spec: &MechanismSpec,
    state: &JointState,
    rates: &RateState,
) -> [ComKinematics; 4] {
    LinkId::ALL.map(|id| {
        let e = spec.mass_props(id).com();
        let p = LinkPoint::on_link(spec, id, e);
        ComKinematics {
            pos: p.pos(state),
            vel: p.vel(state, rates),
            acc: p.acc(state, rates),
        }
    })
}
