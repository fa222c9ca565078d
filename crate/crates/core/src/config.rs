//! JSON mechanism configuration.
//!
//! The file mirrors [`MechanismSpec`]. A `units` header selects the input
//! units for lengths (`m` or `mm`), masses (`kg` or `g`) and angles (`rad`
//! or `deg`); everything is converted to SI on load.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Forbal5Extension, LinkId, LinkSpec, Links, MechanismSpec, Vec3, STANDARD_GRAVITY,
};
use crate::workspace::JointLimits;

const FORBAL2_JSON: &str = include_str!("../configs/forbal2.json");
const FORBAL5_JSON: &str = include_str!("../configs/forbal5.json");

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "default_length_unit")]
    pub length: LengthUnit,
    #[serde(default = "default_mass_unit")]
    pub mass: MassUnit,
    #[serde(default = "default_angle_unit")]
    pub angle: AngleUnit,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: LengthUnit::M,
            mass: MassUnit::Kg,
            angle: AngleUnit::Rad,
        }
    }
}

fn default_length_unit() -> LengthUnit {
    LengthUnit::M
}

fn default_mass_unit() -> MassUnit {
    MassUnit::Kg
}

fn default_angle_unit() -> AngleUnit {
    AngleUnit::Rad
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    M,
    Mm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassUnit {
    Kg,
    G,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Rad,
    Deg,
}

impl Units {
    fn len(&self) -> f64 {
        match self.length {
            LengthUnit::M => 1.0,
            LengthUnit::Mm => 1e-3,
        }
    }

    fn mass(&self) -> f64 {
        match self.mass {
            MassUnit::Kg => 1.0,
            MassUnit::G => 1e-3,
        }
    }

    fn angle(&self) -> f64 {
        match self.angle {
            AngleUnit::Rad => 1.0,
            AngleUnit::Deg => std::f64::consts::PI / 180.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub length: f64,
    pub profile_mass: f64,
    pub profile_com: f64,
    #[serde(default)]
    pub counter_mass: f64,
    /// Defaults to `-length`.
    #[serde(default)]
    pub counter_com: Option<f64>,
    #[serde(default)]
    pub offplane_com: f64,
    #[serde(default)]
    pub counter_offplane: f64,
    /// Always kg·m² regardless of the units header.
    #[serde(default)]
    pub rot_inertia: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadConfig {
    pub mass: f64,
    pub com: f64,
    #[serde(default)]
    pub offplane: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConfig {
    pub mass: f64,
    pub com: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub q11: [f64; 2],
    pub q12: [f64; 2],
    pub q21: [f64; 2],
    pub q22: [f64; 2],
    #[serde(default)]
    pub q0: Option<[f64; 2]>,
    #[serde(default)]
    pub q3: Option<[f64; 2]>,
    #[serde(default)]
    pub q4: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialConfig {
    #[serde(default)]
    pub joint0_offset: f64,
    pub motor_offset: [f64; 3],
    pub ee_motor_mass: f64,
    pub ee_motor_com: f64,
    pub implement_mass: f64,
    pub implement_com: [f64; 3],
}

/// On-disk form of a mechanism, before unit conversion and validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub uniform: bool,
    pub links: BTreeMap<String, LinkConfig>,
    #[serde(default)]
    pub base_x: f64,
    pub base_height: f64,
    #[serde(default)]
    pub base_separation: f64,
    #[serde(default)]
    pub ee_offset: f64,
    pub ee_payload: PayloadConfig,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub base: BaseConfig,
    pub limits: LimitsConfig,
    /// (q11, q21) in the IK convention.
    pub nominal_pose: [f64; 2],
    #[serde(default)]
    pub spatial: Option<SpatialConfig>,
    #[serde(default)]
    pub link12_extended: Option<LinkConfig>,
    /// Free-form hardware notes; carried but never read.
    #[serde(default)]
    pub metadata: Option<serde_json::Value>,
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

impl LinkConfig {
    fn to_spec(&self, u: &Units) -> LinkSpec {
        let (l, m) = (u.len(), u.mass());
        LinkSpec {
            length: self.length * l,
            profile_mass: self.profile_mass * m,
            profile_com: self.profile_com * l,
            counter_mass: self.counter_mass * m,
            counter_com: self.counter_com.unwrap_or(-self.length) * l,
            offplane_com: self.offplane_com * l,
            counter_offplane: self.counter_offplane * l,
            rot_inertia: self.rot_inertia,
        }
    }
}

impl MechanismConfig {
    pub fn into_spec(self) -> Result<MechanismSpec> {
        let u = self.units;
        let (l, m, a) = (u.len(), u.mass(), u.angle());
        let link = |id: LinkId| -> Result<LinkSpec> {
            self.links
                .get(id.label())
                .map(|c| c.to_spec(&u))
                .ok_or_else(|| Error::InvalidSpec(format!("missing link `{}`", id.label())))
        };
        if let Some(k) = self
            .links
            .keys()
            .find(|k| !LinkId::ALL.iter().any(|id| id.label() == k.as_str()))
        {
            return Err(Error::InvalidSpec(format!("unknown link `{k}`")));
        }
        let links = Links {
            l11: link(LinkId::L11)?,
            l12: link(LinkId::L12)?,
            l21: link(LinkId::L21)?,
            l22: link(LinkId::L22)?,
        };
        let range = |r: [f64; 2]| (r[0] * a, r[1] * a);
        let lim = &self.limits;
        let limits = JointLimits {
            q11: range(lim.q11),
            q12: range(lim.q12),
            q21: range(lim.q21),
            q22: range(lim.q22),
            q0: lim.q0.map(range),
            q3: lim.q3.map(range),
            q4: lim.q4.map(range),
        };
        let v3 = |v: [f64; 3]| Vec3::new(v[0], v[1], v[2]) * l;
        let spatial = self.spatial.as_ref().map(|s| Forbal5Extension {
            joint0_offset: s.joint0_offset * l,
            motor_offset: v3(s.motor_offset),
            ee_motor_mass: s.ee_motor_mass * m,
            ee_motor_com: s.ee_motor_com * l,
            implement_mass: s.implement_mass * m,
            implement_com: v3(s.implement_com),
        });
        let spec = MechanismSpec {
            name: self.name.clone(),
            links,
            base_x: self.base_x * l,
            base_height: self.base_height * l,
            base_separation: self.base_separation * l,
            ee_offset: self.ee_offset * l,
            ee_payload_mass: self.ee_payload.mass * m,
            ee_payload_com: self.ee_payload.com * l,
            ee_payload_offplane: self.ee_payload.offplane * l,
            gravity: self.gravity,
            base_mass: self.base.mass * m,
            base_com: v3(self.base.com),
            uniform: self.uniform,
            limits,
            nominal_pose: (self.nominal_pose[0] * a, self.nominal_pose[1] * a),
            spatial,
            link12_extended: self.link12_extended.as_ref().map(|c| c.to_spec(&u)),
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn parse(json: &str) -> Result<MechanismSpec> {
    serde_json::from_str::<MechanismConfig>(json)?.into_spec()
}

pub fn load(path: impl AsRef<Path>) -> Result<MechanismSpec> {
    parse(&std::fs::read_to_string(path)?)
}

/// The shipped Forbal-2 prototype without counter masses.
pub fn forbal2() -> MechanismSpec {
    parse(FORBAL2_JSON).expect("shipped forbal2.json is valid")
}

/// The shipped Forbal-5 prototype without counter masses.
pub fn forbal5() -> MechanismSpec {
    parse(FORBAL5_JSON).expect("shipped forbal5.json is valid")
}

/// Resolve `forbal2` / `forbal5` to the shipped configs, anything else to a file.
pub fn load_named(name_or_path: &str) -> Result<MechanismSpec> {
    match name_or_path {
        "forbal2" => Ok(forbal2()),
        "forbal5" => Ok(forbal5()),
        path => load(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_configs_load() {
        let f2 = forbal2();
        assert!((f2.links.l11.length - 0.2).abs() < 1e-15);
        assert!((f2.links.l12.profile_mass - 0.0955).abs() < 1e-15);
        assert!(f2.spatial.is_none());
        let f5 = forbal5();
        assert!(f5.spatial.is_some());
        assert_eq!(f5.base_x, 0.0);
    }

    #[test]
    fn millimetre_and_metre_files_agree() {
        let mm = r#"{
            "units": {"length": "mm", "mass": "g", "angle": "deg"},
            "links": {
                "11": {"length": 200, "profile_mass": 100, "profile_com": 10},
                "12": {"length": 200, "profile_mass": 100, "profile_com": 10},
                "21": {"length": 200, "profile_mass": 100, "profile_com": 10},
                "22": {"length": 200, "profile_mass": 100, "profile_com": 10}
            },
            "base_height": 100,
            "ee_payload": {"mass": 50, "com": 5},
            "base": {"mass": 500, "com": [0, 0, 100]},
            "limits": {"q11": [-90, 90], "q12": [-170, 170], "q21": [-90, 90], "q22": [10, 170]},
            "nominal_pose": [45, 45]
        }"#;
        let si = r#"{
            "links": {
                "11": {"length": 0.2, "profile_mass": 0.1, "profile_com": 0.01},
                "12": {"length": 0.2, "profile_mass": 0.1, "profile_com": 0.01},
                "21": {"length": 0.2, "profile_mass": 0.1, "profile_com": 0.01},
                "22": {"length": 0.2, "profile_mass": 0.1, "profile_com": 0.01}
            },
            "base_height": 0.1,
            "ee_payload": {"mass": 0.05, "com": 0.005},
            "base": {"mass": 0.5, "com": [0, 0, 0.1]},
            "limits": {"q11": [-1.5707963267948966, 1.5707963267948966],
                       "q12": [-2.9670597283903604, 2.9670597283903604],
                       "q21": [-1.5707963267948966, 1.5707963267948966],
                       "q22": [0.17453292519943295, 2.9670597283903604]},
            "nominal_pose": [0.7853981633974483, 0.7853981633974483]
        }"#;
        let a = parse(mm).unwrap();
        let b = parse(si).unwrap();
        for id in LinkId::ALL {
            assert!((a.links[id].length - b.links[id].length).abs() < 1e-15);
            assert!((a.links[id].profile_mass - b.links[id].profile_mass).abs() < 1e-15);
            assert!((a.links[id].counter_com - b.links[id].counter_com).abs() < 1e-15);
        }
        assert!((a.limits.q22.0 - b.limits.q22.0).abs() < 1e-15);
        assert!((a.nominal_pose.0 - b.nominal_pose.0).abs() < 1e-15);
    }

    #[test]
    fn missing_link_is_rejected() {
        let mut cfg: MechanismConfig = serde_json::from_str(FORBAL2_JSON).unwrap();
        cfg.links.remove("21");
        assert!(matches!(cfg.into_spec(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn negative_length_is_rejected() {
        let mut cfg: MechanismConfig = serde_json::from_str(FORBAL2_JSON).unwrap();
        cfg.links.get_mut("11").unwrap().length = -1.0;
        assert!(cfg.into_spec().is_err());
    }
}
