//! Linear momentum, force-balance residuals and the counter-mass solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{com_kinematics, unit_perp, JointState, LinkId, MechanismSpec, RateState, Vec2};

/// Residual magnitude below which a spec counts as force balanced, kg·m.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Counter-mass ring denominations of the prototype, kg.
pub const RING_MASSES: [f64; 2] = [0.0132, 0.0114];

/// Coefficients of the reduced momentum expression. All three vanish for a
/// force-balanced linkage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceResiduals {
    /// Coefficient of the thetadot11 term, kg·m.
    pub c11: f64,
    /// `m12 e12 / l12 + m22 e22 / l22`, kg.
    pub c12: f64,
    /// Coefficient of the thetadot21 term, kg·m.
    pub c21: f64,
}

impl BalanceResiduals {
    pub fn max_abs(&self) -> f64 {
        self.c11.abs().max(self.c12.abs()).max(self.c21.abs())
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        self.max_abs() < tol
    }
}

pub fn balance_residuals(spec: &MechanismSpec) -> BalanceResiduals {
    let l = |id: LinkId| spec.links[id].length;
    let p = LinkId::ALL.map(|id| spec.mass_props(id));
    let [p11, p12, p21, p22] = p;
    BalanceResiduals {
        c11: p11.first_moment
            + p12.mass * l(LinkId::L11)
            + p22.first_moment * l(LinkId::L11) / l(LinkId::L22),
        c12: p12.first_moment / l(LinkId::L12) + p22.first_moment / l(LinkId::L22),
        c21: p21.first_moment + p22.mass * l(LinkId::L21)
            - p22.first_moment * l(LinkId::L21) / l(LinkId::L22),
    }
}

/// Total linear momentum `sum m_ij rdot_ij` of the moving links.
pub fn linear_momentum(spec: &MechanismSpec, state: &JointState, rates: &RateState) -> Vec2 {
    let com = com_kinematics(spec, state, rates);
    LinkId::ALL
        .iter()
        .zip(com.iter())
        .fold(Vec2::zeros(), |acc, (&id, c)| {
            acc + spec.mass_props(id).mass * c.vel
        })
}

/// Momentum from the three-term form, with thetadot22 eliminated through the
/// velocity loop closure.
pub fn linear_momentum_reduced(
    spec: &MechanismSpec,
    state: &JointState,
    rates: &RateState,
) -> Vec2 {
    let r = balance_residuals(spec);
    let l12 = spec.links.l12.length;
    r.c11 * rates.thetadot11 * unit_perp(state.theta11)
        + r.c12 * l12 * rates.thetadot12 * unit_perp(state.theta12)
        + r.c21 * rates.thetadot21 * unit_perp(state.theta21)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileChoice {
    /// Short link 12 without a counter mass.
    Link12Short,
    /// Link 12 built from the extended profile, with its own counter mount.
    Link12Extended,
}

/// Inline counter-mass mount offsets, m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mounting {
    pub e11c: f64,
    pub e12c: f64,
    pub e21c: f64,
    pub e22c: f64,
}

impl Mounting {
    /// Mount offsets as stored in the spec (link 12 from the extended
    /// profile when one is present).
    pub fn from_spec(spec: &MechanismSpec, profile: ProfileChoice) -> Self {
        let e12c = match (profile, &spec.link12_extended) {
            (ProfileChoice::Link12Extended, Some(ext)) => ext.counter_com,
            _ => spec.links.l12.counter_com,
        };
        Self {
            e11c: spec.links.l11.counter_com,
            e12c,
            e21c: spec.links.l21.counter_com,
            e22c: spec.links.l22.counter_com,
        }
    }

    fn get(&self, id: LinkId) -> f64 {
        match id {
            LinkId::L11 => self.e11c,
            LinkId::L12 => self.e12c,
            LinkId::L21 => self.e21c,
            LinkId::L22 => self.e22c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterMassSolution {
    pub profile: ProfileChoice,
    pub m11c: f64,
    /// Present only for the extended link-12 profile.
    pub m12c: Option<f64>,
    pub m21c: f64,
    pub m22c: f64,
    pub mounting: Mounting,
    pub total_mass_without_cm: f64,
    pub total_mass_with_cm: f64,
    pub residuals_before: BalanceResiduals,
    pub residuals_after: BalanceResiduals,
}

impl CounterMassSolution {
    pub fn counter_mass(&self, id: LinkId) -> f64 {
        match id {
            LinkId::L11 => self.m11c,
            LinkId::L12 => self.m12c.unwrap_or(0.0),
            LinkId::L21 => self.m21c,
            LinkId::L22 => self.m22c,
        }
    }
}

fn base_spec(spec: &MechanismSpec, profile: ProfileChoice) -> Result<MechanismSpec> {
    let mut out = spec.without_counter_masses();
    if profile == ProfileChoice::Link12Extended {
        let ext = spec
            .link12_extended
            .clone()
            .ok_or(Error::MissingProfile("link12_extended"))?;
        out.links.l12 = ext;
        out.links.l12.counter_mass = 0.0;
    }
    Ok(out)
}

fn counter_mass_for(id: LinkId, e_c: f64, required_moment: f64) -> Result<f64> {
    // m_c e_c = required_moment
    if required_moment == 0.0 {
        return Ok(0.0);
    }
    if e_c == 0.0 {
        return Err(Error::InfeasibleMounting {
            link: id,
            reason: "counter mass mount offset is zero".into(),
        });
    }
    let m = required_moment / e_c;
    if m < 0.0 {
        return Err(Error::InfeasibleMounting {
            link: id,
            reason: format!(
                "required counter mass {:.3} g is negative for mount offset {:.4} m",
                m * 1e3,
                e_c
            ),
        });
    }
    Ok(m)
}

/// Closed-form counter masses that make `spec` force balanced.
///
/// Existing counter masses in `spec` are ignored. Link 22 is solved first
/// against link 12 (and the payload), then links 11 and 21 absorb the rest.
pub fn solve_counter_masses(
    spec: &MechanismSpec,
    mounting: &Mounting,
    profile: ProfileChoice,
) -> Result<CounterMassSolution> {
    let mut work = base_spec(spec, profile)?;
    let residuals_before = balance_residuals(&spec.without_counter_masses());
    let lens = LinkId::ALL.map(|id| work.links[id].length);
    let l = |id: LinkId| lens[id.index()];
    for id in LinkId::ALL {
        work.links[id].counter_com = mounting.get(id);
    }

    let m12c = match profile {
        ProfileChoice::Link12Short => None,
        ProfileChoice::Link12Extended => {
            // Cancel the link-12 first moment when that needs a positive mass;
            // otherwise link 22 takes up the remainder below.
            let fm12 = work.mass_props(LinkId::L12).first_moment;
            let m = if fm12 > 0.0 {
                counter_mass_for(LinkId::L12, mounting.e12c, -fm12)?
            } else {
                0.0
            };
            work.links.l12.counter_mass = m;
            Some(m)
        }
    };

    let fm12 = work.mass_props(LinkId::L12).first_moment;
    let fm22 = work.mass_props(LinkId::L22).first_moment;
    let m22c = counter_mass_for(
        LinkId::L22,
        mounting.e22c,
        -l(LinkId::L22) * (fm22 / l(LinkId::L22) + fm12 / l(LinkId::L12)),
    )?;
    work.links.l22.counter_mass = m22c;

    let p12 = work.mass_props(LinkId::L12);
    let p22 = work.mass_props(LinkId::L22);
    let fm11 = work.mass_props(LinkId::L11).first_moment;
    let m11c = counter_mass_for(
        LinkId::L11,
        mounting.e11c,
        -(fm11 + p12.mass * l(LinkId::L11) + p22.first_moment * l(LinkId::L11) / l(LinkId::L22)),
    )?;
    let fm21 = work.mass_props(LinkId::L21).first_moment;
    let m21c = counter_mass_for(
        LinkId::L21,
        mounting.e21c,
        -(fm21 + p22.mass * l(LinkId::L21) - p22.first_moment * l(LinkId::L21) / l(LinkId::L22)),
    )?;
    work.links.l11.counter_mass = m11c;
    work.links.l21.counter_mass = m21c;

    let without = base_spec(spec, profile)?;
    let total_mass_without_cm = without.moving_mass() + without.base_mass;
    Ok(CounterMassSolution {
        profile,
        m11c,
        m12c,
        m21c,
        m22c,
        mounting: *mounting,
        total_mass_without_cm,
        total_mass_with_cm: work.moving_mass() + work.base_mass,
        residuals_before,
        residuals_after: balance_residuals(&work),
    })
}

/// Solve with the spec's own mount offsets and install the result.
pub fn balanced(spec: &MechanismSpec, profile: ProfileChoice) -> Result<MechanismSpec> {
    let sol = solve_counter_masses(spec, &Mounting::from_spec(spec, profile), profile)?;
    install(spec, &sol)
}

/// Copy of `spec` carrying the counter masses of `solution`.
pub fn install(spec: &MechanismSpec, solution: &CounterMassSolution) -> Result<MechanismSpec> {
    let mut out = base_spec(spec, solution.profile)?;
    for id in LinkId::ALL {
        out.links[id].counter_com = solution.mounting.get(id);
        out.links[id].counter_mass = solution.counter_mass(id);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    /// Links, payload and base.
    pub total_without_cm: f64,
    pub counter_masses: f64,
    pub total_with_cm: f64,
}

pub fn total_mass_report(spec: &MechanismSpec) -> MassReport {
    let counter_masses: f64 = spec.counter_masses().iter().sum();
    let total_with_cm = spec.moving_mass() + spec.base_mass;
    MassReport {
        total_without_cm: total_with_cm - counter_masses,
        counter_masses,
        total_with_cm,
    }
}

/// Nearest stack of the two ring denominations to a target counter mass.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingStack {
    pub large: u32,
    pub small: u32,
    pub mass: f64,
    /// `mass - target`, kg.
    pub residual: f64,
}

pub fn ring_stack(target: f64) -> RingStack {
    let [a, b] = RING_MASSES;
    let max_a = (target.max(0.0) / a).ceil() as u32 + 1;
    let max_b = (target.max(0.0) / b).ceil() as u32 + 1;
    let mut best = RingStack {
        large: 0,
        small: 0,
        mass: 0.0,
        residual: -target,
    };
    for i in 0..=max_a {
        for j in 0..=max_b {
            let mass = i as f64 * a + j as f64 * b;
            let residual = mass - target;
            let better = residual.abs() < best.residual.abs() - 1e-12
                || ((residual.abs() - best.residual.abs()).abs() <= 1e-12
                    && i + j < best.large + best.small);
            if better {
                best = RingStack {
                    large: i,
                    small: j,
                    mass,
                    residual,
                };
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;
    use crate::model::{forward_kinematics, passive_motion, Branch, LinkSpec};

    fn grams(kg: f64) -> f64 {
        kg * 1e3
    }

    #[test]
    fn massless_distal_links_are_balanced() {
        let mut spec = config::forbal2();
        spec.links.l11 = LinkSpec::new(0.2, 0.3, 0.0);
        spec.links.l21 = LinkSpec::new(0.2, 0.3, 0.0);
        spec.links.l12 = LinkSpec::new(0.2, 0.0, 0.1);
        spec.links.l22 = LinkSpec::new(0.2, 0.0, 0.1);
        spec.ee_payload_mass = 0.0;
        assert_eq!(balance_residuals(&spec).max_abs(), 0.0);
    }

    #[test]
    fn unbalanced_prototype_has_positive_residuals() {
        let r = balance_residuals(&config::forbal2());
        assert!(r.c11 > 0.0 && r.c21 > 0.0, "{r:?}");
    }

    // Tolerances cover the 0.1 g / 0.01 mm rounding of the tabulated inputs.
    #[test]
    fn short_profile_reproduces_published_counter_masses() {
        let spec = config::forbal2();
        let sol = solve_counter_masses(
            &spec,
            &Mounting::from_spec(&spec, ProfileChoice::Link12Short),
            ProfileChoice::Link12Short,
        )
        .unwrap();
        assert!((grams(sol.m11c) - 29.8).abs() < 0.05, "{}", grams(sol.m11c));
        assert!((grams(sol.m21c) - 325.6).abs() < 0.2, "{}", grams(sol.m21c));
        assert!((grams(sol.m22c) - 87.1).abs() < 0.05, "{}", grams(sol.m22c));
        assert!((grams(sol.total_mass_without_cm) - 1405.1).abs() < 0.05);
        assert!((grams(sol.total_mass_with_cm) - 1847.6).abs() < 0.3);
        assert!(sol.residuals_after.max_abs() < 1e-12);
        assert!(sol.m12c.is_none());
    }

    #[test]
    fn extended_profile_reproduces_published_counter_masses() {
        let spec = config::forbal2();
        let sol = solve_counter_masses(
            &spec,
            &Mounting::from_spec(&spec, ProfileChoice::Link12Extended),
            ProfileChoice::Link12Extended,
        )
        .unwrap();
        assert!(
            (grams(sol.m11c) - 164.0).abs() < 0.05,
            "{}",
            grams(sol.m11c)
        );
        assert_eq!(sol.m12c, Some(0.0));
        assert!((grams(sol.m21c) - 173.5).abs() < 0.2, "{}", grams(sol.m21c));
        assert!((grams(sol.m22c) - 11.1).abs() < 0.05, "{}", grams(sol.m22c));
        assert!((grams(sol.total_mass_without_cm) - 1463.1).abs() < 0.3);
        assert!((grams(sol.total_mass_with_cm) - 1811.7).abs() < 0.5);
    }

    #[test]
    fn forbal5_counter_masses_match_theoretical_column() {
        let spec = config::forbal5();
        let b = balanced(&spec, ProfileChoice::Link12Short).unwrap();
        assert!((grams(b.links.l11.counter_mass) - 29.8).abs() < 0.05);
        assert!((grams(b.links.l22.counter_mass) - 190.1).abs() < 0.1);
        // 515.5 g published; the EE-motor mount is calibrated on link 22 only.
        assert!((grams(b.links.l21.counter_mass) - 515.5).abs() < 3.0);
        let report = total_mass_report(&b);
        assert!((grams(report.total_with_cm) - 2421.5).abs() < 3.0);
    }

    #[test]
    fn symmetric_zero_com_profiles_need_no_counter_mass() {
        let mut spec = config::forbal2();
        for id in LinkId::ALL {
            spec.links[id] = LinkSpec::new(0.2, 0.1, 0.0);
        }
        spec.ee_payload_mass = 0.0;
        spec.link12_extended = Some(LinkSpec::new(0.2, 0.1, 0.0));
        // Links 12/22 carry mass at the joints, so 11/21 still need mass:
        // only the distal conditions are trivially met.
        let sol = solve_counter_masses(
            &spec,
            &Mounting::from_spec(&spec, ProfileChoice::Link12Extended),
            ProfileChoice::Link12Extended,
        )
        .unwrap();
        assert_eq!(sol.m12c, Some(0.0));
        assert_eq!(sol.m22c, 0.0);
        assert!(sol.residuals_after.max_abs() < 1e-15);
    }

    #[test]
    fn forward_mount_is_infeasible() {
        let spec = config::forbal2();
        let mut mounting = Mounting::from_spec(&spec, ProfileChoice::Link12Short);
        mounting.e21c = 0.2;
        let err = solve_counter_masses(&spec, &mounting, ProfileChoice::Link12Short).unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleMounting {
                link: LinkId::L21,
                ..
            }
        ));
    }

    #[test]
    fn missing_extended_profile_is_reported() {
        let mut spec = config::forbal2();
        spec.link12_extended = None;
        let err = balanced(&spec, ProfileChoice::Link12Extended).unwrap_err();
        assert!(matches!(err, Error::MissingProfile(_)));
    }

    #[test]
    fn reduced_momentum_matches_full_sum() {
        let spec = config::forbal2();
        let fk = forward_kinematics(&spec, -0.6, 0.9, Branch::ElbowUp).unwrap();
        let rates = passive_motion(&spec, &fk.state, 1.3, -0.7, 0.0, 0.0).unwrap();
        let full = linear_momentum(&spec, &fk.state, &rates);
        let reduced = linear_momentum_reduced(&spec, &fk.state, &rates);
        assert!(
            (full - reduced).norm() <= 1e-12 * full.norm(),
            "{full} {reduced}"
        );
    }

    #[test]
    fn balanced_prototype_has_no_momentum() {
        let spec = balanced(&config::forbal2(), ProfileChoice::Link12Short).unwrap();
        let fk = forward_kinematics(&spec, -0.6, 0.9, Branch::ElbowUp).unwrap();
        let rates = passive_motion(&spec, &fk.state, 1.3, -0.7, 0.0, 0.0).unwrap();
        assert!(linear_momentum(&spec, &fk.state, &rates).norm() < 1e-15);
    }

    #[test]
    fn payload_changes_link22_counter_mass_linearly() {
        let spec = config::forbal2();
        let m22c = |dm: f64| {
            let mut s = spec.clone();
            s.ee_payload_mass += dm;
            balanced(&s, ProfileChoice::Link12Short)
                .unwrap()
                .links
                .l22
                .counter_mass
        };
        let l22 = spec.links.l22.length;
        let slope = -(l22 + spec.ee_payload_com) / spec.links.l22.counter_com;
        let fd = (m22c(0.02) - m22c(0.0)) / 0.02;
        let fd2 = (m22c(0.04) - m22c(0.02)) / 0.02;
        assert!((fd - slope).abs() < 1e-9);
        assert!((fd2 - fd).abs() < 1e-9);
    }

    #[test]
    fn zero_counter_masses_leave_totals_equal() {
        let r = total_mass_report(&config::forbal2());
        assert_eq!(r.total_with_cm, r.total_without_cm);
        assert!((grams(r.total_without_cm) - 1405.1).abs() < 1e-9);
    }

    #[test]
    fn ring_stack_picks_nearest_combination() {
        let s = ring_stack(0.0298);
        assert_eq!((s.large, s.small), (2, 0));
        let exact = ring_stack(2.0 * 0.0132 + 3.0 * 0.0114);
        assert_eq!((exact.large, exact.small), (2, 3));
        assert!(exact.residual.abs() < 1e-12);
        assert_eq!(ring_stack(0.0).mass, 0.0);
    }
}
