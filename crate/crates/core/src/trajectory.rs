//! Waypoint splines, trapezoidal time scaling, sampling and the built-in
//! experiment trajectories.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::ik::{ik_forbal2, ik_forbal5, pitch_rotation, PoseTarget5};
use crate::model::{
    passive_motion, unit, unit_perp, IkAngles, JointState, MechanismSpec, RateState, Vec2, Vec3,
};

/// Default sampling step, s.
pub const DEFAULT_DT: f64 = 0.01;

/// Acceleration and deceleration time of the built-ins, s.
pub const BUILTIN_T_ACC: f64 = 0.5;

/// What a waypoint vector holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaypointKind {
    /// `(x, z)` of the end effector.
    PlanarTask,
    /// `(x, y, z, beta, gamma)` of the implement.
    SpatialTask,
    /// `(q11, q21)` in the IK convention.
    Joint,
}

impl WaypointKind {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            WaypointKind::PlanarTask => &["x", "z"],
            WaypointKind::SpatialTask => &["x", "y", "z", "beta", "gamma"],
            WaypointKind::Joint => &["q11", "q21"],
        }
    }

    pub fn dim(self) -> usize {
        self.columns().len()
    }

    fn from_header(cols: &[&str]) -> Option<Self> {
        [Self::PlanarTask, Self::SpatialTask, Self::Joint]
            .into_iter()
            .find(|k| k.columns() == cols)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointSet {
    pub kind: WaypointKind,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Cyclic path: last value equals the first and tangents wrap around.
    pub closed: bool,
}

impl WaypointSet {
    pub fn new(
        kind: WaypointKind,
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
        closed: bool,
    ) -> Result<Self> {
        let set = Self {
            kind,
            times,
            values,
            closed,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::InvalidTrajectory(
                "times and values differ in length".into(),
            ));
        }
        if self.times.len() < 2 {
            return Err(Error::InvalidTrajectory("need at least 2 waypoints".into()));
        }
        let dim = self.kind.dim();
        if let Some(i) = self.values.iter().position(|v| v.len() != dim) {
            return Err(Error::InvalidTrajectory(format!(
                "waypoint {i} has {} components, expected {dim}",
                self.values[i].len()
            )));
        }
        if self
            .times
            .iter()
            .chain(self.values.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidTrajectory("non-finite waypoint data".into()));
        }
        if let Some(i) = self.times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::DuplicateTime { index: i + 1 });
        }
        if self.closed {
            if self.times.len() < 3 {
                return Err(Error::InvalidTrajectory(
                    "closed path needs at least 3 waypoints".into(),
                ));
            }
            if self.values.first() != self.values.last() {
                return Err(Error::InvalidTrajectory(
                    "closed path must end on its first waypoint".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.times.last().unwrap() - self.times[0]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t"];
        header.extend_from_slice(self.kind.columns());
        w.write_record(&header)?;
        for (t, v) in self.times.iter().zip(&self.values) {
            let mut row = vec![fmt_sig(*t)];
            row.extend(v.iter().map(|x| fmt_sig(*x)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parse a waypoint CSV. The header selects the kind; a path whose last
    /// row repeats the first is treated as closed.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = r.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.first() != Some(&"t") {
            return Err(Error::InvalidTrajectory("first column must be `t`".into()));
        }
        let kind = WaypointKind::from_header(&cols[1..]).ok_or_else(|| {
            Error::InvalidTrajectory(format!(
                "unrecognised header `{}`; expected t,x,z / t,x,y,z,beta,gamma / t,q11,q21",
                cols.join(",")
            ))
        })?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let nums = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidTrajectory(format!("row {}: {e}", i + 1)))?;
            if nums.len() != kind.dim() + 1 {
                return Err(Error::InvalidTrajectory(format!(
                    "row {}: wrong column count",
                    i + 1
                )));
            }
            times.push(nums[0]);
            values.push(nums[1..].to_vec());
        }
        let closed = values.len() >= 3 && values.first() == values.last();
        Self::new(kind, times, values, closed)
    }
}

/// Format with 9 significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.8e}")
}

/// Cubic Hermite interpolant through the waypoints.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteSpline {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    tangents: Vec<Vec<f64>>,
}

/// Value and first two derivatives at one parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PathPoint {
    pub value: Vec<f64>,
    pub d: Vec<f64>,
    pub dd: Vec<f64>,
}

fn diff_quot(a: &[f64], b: &[f64], dt: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y) / dt).collect()
}

/// Catmull-Rom tangents; zero at open ends, periodic for closed paths.
pub fn build_spline(wps: &WaypointSet) -> Result<HermiteSpline> {
    wps.validate()?;
    let (t, p) = (&wps.times, &wps.values);
    let n = t.len();
    let dim = wps.kind.dim();
    let mut tangents = vec![vec![0.0; dim]; n];
    for k in 1..n - 1 {
        tangents[k] = diff_quot(&p[k + 1], &p[k - 1], t[k + 1] - t[k - 1]);
    }
    if wps.closed {
        let m = diff_quot(&p[1], &p[n - 2], (t[1] - t[0]) + (t[n - 1] - t[n - 2]));
        tangents[0] = m.clone();
        tangents[n - 1] = m;
    }
    Ok(HermiteSpline {
        times: t.clone(),
        values: p.clone(),
        tangents,
    })
}

impl HermiteSpline {
    /// A single knot: constant value, zero derivatives.
    pub fn constant(t: f64, value: Vec<f64>) -> Self {
        let dim = value.len();
        Self {
            times: vec![t],
            values: vec![value],
            tangents: vec![vec![0.0; dim]],
        }
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.times
    }

    /// Evaluate at `t`, clamped to the knot range.
    pub fn eval(&self, t: f64) -> PathPoint {
        let dim = self.values[0].len();
        let n = self.times.len();
        if n == 1 {
            return PathPoint {
                value: self.values[0].clone(),
                d: vec![0.0; dim],
                dd: vec![0.0; dim],
            };
        }
        let t = t.clamp(self.times[0], self.times[n - 1]);
        let k = match self.times.partition_point(|&x| x <= t) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (s2, s3) = (s * s, s * s * s);
        // Written in terms of p1 - p0 so constant segments stay exact.
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h10 = s3 - 2.0 * s2 + s;
        let h11 = s3 - s2;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d11 = 3.0 * s2 - 2.0 * s;
        let dd01 = -12.0 * s + 6.0;
        let dd10 = 6.0 * s - 4.0;
        let dd11 = 6.0 * s - 2.0;
        let (p0, p1) = (&self.values[k], &self.values[k + 1]);
        let (m0, m1) = (&self.tangents[k], &self.tangents[k + 1]);
        let mut out = PathPoint {
            value: vec![0.0; dim],
            d: vec![0.0; dim],
            dd: vec![0.0; dim],
        };
        for i in 0..dim {
            let dp = p1[i] - p0[i];
            out.value[i] = p0[i] + h01 * dp + h * (h10 * m0[i] + h11 * m1[i]);
            out.d[i] = d01 * dp / h + d10 * m0[i] + d11 * m1[i];
            out.dd[i] = dd01 * dp / (h * h) + (dd10 * m0[i] + dd11 * m1[i]) / h;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedLaw {
    pub t_acc: f64,
    pub t_dec: f64,
}

impl SpeedLaw {
    pub fn symmetric(t: f64) -> Self {
        Self { t_acc: t, t_dec: t }
    }
}

/// Trapezoidal time warp `s(t)` on `[0, T]`: the path parameter accelerates
/// uniformly for `t_acc`, cruises at a constant rate and decelerates for
/// `t_dec`, keeping the total duration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWarp {
    pub duration: f64,
    pub t_acc: f64,
    pub t_dec: f64,
    /// Cruise rate of the path parameter.
    pub peak_rate: f64,
}

impl TimeWarp {
    pub fn new(duration: f64, law: &SpeedLaw) -> Result<Self> {
        let (ta, td) = (law.t_acc, law.t_dec);
        if !(ta >= 0.0 && td >= 0.0 && ta.is_finite() && td.is_finite()) {
            return Err(Error::InvalidTrajectory(
                "acceleration and deceleration times must be >= 0".into(),
            ));
        }
        if ta + td > duration * (1.0 + 1e-12) {
            return Err(Error::InfeasibleLaw {
                total: ta + td,
                duration,
            });
        }
        let peak_rate = if duration > 0.0 {
            duration / (duration - 0.5 * (ta + td))
        } else {
            1.0
        };
        Ok(Self {
            duration,
            t_acc: ta,
            t_dec: td,
            peak_rate,
        })
    }

    /// `(s, ds/dt, d2s/dt2)` at physical time `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (big_t, ta, td, v) = (self.duration, self.t_acc, self.t_dec, self.peak_rate);
        let t = t.clamp(0.0, big_t);
        if t < ta {
            (v * t * t / (2.0 * ta), v * t / ta, v / ta)
        } else if t > big_t - td {
            let r = big_t - t;
            (big_t - v * r * r / (2.0 * td), v * r / td, -v / td)
        } else {
            (v * (t - 0.5 * ta), v, 0.0)
        }
    }

    /// Physical time at which the path parameter reaches `s`.
    pub fn inverse(&self, s: f64) -> f64 {
        let (big_t, ta, td, v) = (self.duration, self.t_acc, self.t_dec, self.peak_rate);
        let s = s.clamp(0.0, big_t);
        if s < 0.5 * v * ta {
            (2.0 * ta * s / v).sqrt()
        } else if s > big_t - 0.5 * v * td {
            big_t - (2.0 * td * (big_t - s) / v).sqrt()
        } else {
            s / v + 0.5 * ta
        }
    }
}

/// Spline composed with a time warp.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub kind: WaypointKind,
    pub spline: HermiteSpline,
    pub warp: TimeWarp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub value: Vec<f64>,
    pub d_value: Vec<f64>,
    pub dd_value: Vec<f64>,
}

impl Trajectory {
    pub fn new(wps: &WaypointSet, law: &SpeedLaw) -> Result<Self> {
        let spline = build_spline(wps)?;
        let warp = TimeWarp::new(wps.duration(), law)?;
        Ok(Self {
            kind: wps.kind,
            spline,
            warp,
        })
    }

    /// Zero-duration trajectory holding one value.
    pub fn stationary(kind: WaypointKind, value: Vec<f64>) -> Self {
        Self {
            kind,
            spline: HermiteSpline::constant(0.0, value),
            warp: TimeWarp {
                duration: 0.0,
                t_acc: 0.0,
                t_dec: 0.0,
                peak_rate: 1.0,
            },
        }
    }

    pub fn duration(&self) -> f64 {
        self.warp.duration
    }

    /// Value and derivatives at physical time `t` (from 0).
    pub fn eval(&self, t: f64) -> TrajectorySample {
        let (s, ds, dds) = self.warp.eval(t);
        let p = self.spline.eval(self.spline.start() + s);
        TrajectorySample {
            t,
            value: p.value,
            d_value: p.d.iter().map(|d| d * ds).collect(),
            dd_value: p
                .dd
                .iter()
                .zip(&p.d)
                .map(|(dd, d)| dd * ds * ds + d * dds)
                .collect(),
        }
    }

    /// Physical times where the second derivative may jump: warp corners
    /// and spline knots.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .spline
            .knots()
            .iter()
            .map(|k| self.warp.inverse(k - self.spline.start()))
            .collect();
        out.push(self.warp.t_acc);
        out.push(self.duration() - self.warp.t_dec);
        out.push(0.0);
        out.push(self.duration());
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    /// Samples at `t_k = k dt`, `k = 0..=floor(T/dt)`.
    pub fn sample(&self, dt: f64) -> Result<Vec<TrajectorySample>> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "dt must be > 0, got {dt}"
            )));
        }
        Ok((0..sample_count(self.duration(), dt))
            .map(|k| self.eval(k as f64 * dt))
            .collect())
    }
}

pub fn sample_count(duration: f64, dt: f64) -> usize {
    (duration / dt + 1e-9).floor() as usize + 1
}

/// Spatial joints beyond the planar linkage.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SpatialJoints {
    pub q0: f64,
    pub dq0: f64,
    pub ddq0: f64,
    pub q3: f64,
    pub q4: f64,
}

/// Joint-space state of one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointSample {
    pub t: f64,
    pub state: JointState,
    pub rates: RateState,
    pub spatial: Option<SpatialJoints>,
}

impl JointSample {
    pub fn ik_angles(&self) -> IkAngles {
        self.state.to_ik()
    }
}

/// Solve `[a u'(alpha), b u'(beta)] x = rhs` for the two link rates.
fn rr_solve(a: f64, alpha: f64, b: f64, beta: f64, rhs: Vec2) -> Result<(f64, f64)> {
    let c0 = a * unit_perp(alpha);
    let c1 = b * unit_perp(beta);
    let det = c0.x * c1.y - c0.y * c1.x;
    if det.abs() <= 1e-12 * a * b {
        return Err(Error::SingularConfiguration { det });
    }
    Ok((
        (rhs.x * c1.y - rhs.y * c1.x) / det,
        (c0.x * rhs.y - c0.y * rhs.x) / det,
    ))
}

/// Joint rates and accelerations for a planar end-effector motion.
fn planar_rates(spec: &MechanismSpec, q: &JointState, v: Vec2, a: Vec2) -> Result<RateState> {
    let l = &spec.links;
    let big_l = l.l22.length + spec.ee_offset;
    let (w21, w22) = rr_solve(l.l21.length, q.theta21, big_l, q.theta22, v)?;
    let a_rhs =
        a + l.l21.length * w21 * w21 * unit(q.theta21) + big_l * w22 * w22 * unit(q.theta22);
    let (a21, a22) = rr_solve(l.l21.length, q.theta21, big_l, q.theta22, a_rhs)?;
    // p_c through chain 2, then chain 1.
    let vc = l.l21.length * w21 * unit_perp(q.theta21) + l.l22.length * w22 * unit_perp(q.theta22);
    let ac = l.l21.length * (a21 * unit_perp(q.theta21) - w21 * w21 * unit(q.theta21))
        + l.l22.length * (a22 * unit_perp(q.theta22) - w22 * w22 * unit(q.theta22));
    let (w11, w12) = rr_solve(l.l11.length, q.theta11, l.l12.length, q.theta12, vc)?;
    let ac_rhs = ac
        + l.l11.length * w11 * w11 * unit(q.theta11)
        + l.l12.length * w12 * w12 * unit(q.theta12);
    let (a11, a12) = rr_solve(l.l11.length, q.theta11, l.l12.length, q.theta12, ac_rhs)?;
    Ok(RateState {
        thetadot11: w11,
        thetadot12: w12,
        thetadot21: w21,
        thetadot22: w22,
        thetaddot11: a11,
        thetaddot12: a12,
        thetaddot21: a21,
        thetaddot22: a22,
    })
}

/// Map one sample into joint space; limits are checked when `enforce_limits`.
pub fn joint_sample(
    spec: &MechanismSpec,
    kind: WaypointKind,
    s: &TrajectorySample,
    enforce_limits: bool,
) -> Result<JointSample> {
    let (v, d, dd) = (&s.value, &s.d_value, &s.dd_value);
    let out = match kind {
        WaypointKind::PlanarTask => {
            let sol = ik_forbal2(spec, Vec2::new(v[0], v[1]))?;
            if enforce_limits {
                sol.check_limits(&spec.limits)?;
            }
            let state = sol.joint_state();
            let rates = planar_rates(spec, &state, Vec2::new(d[0], d[1]), Vec2::new(dd[0], dd[1]))?;
            JointSample {
                t: s.t,
                state,
                rates,
                spatial: None,
            }
        }
        WaypointKind::Joint => {
            let q11 = v[0];
            let q21 = v[1];
            let fk =
                crate::model::forward_kinematics(spec, -q11, q21, crate::model::Branch::ElbowUp)?;
            if enforce_limits {
                spec.limits.check(&fk.state.to_ik())?;
            }
            let rates = passive_motion(spec, &fk.state, -d[0], d[1], -dd[0], dd[1])?;
            JointSample {
                t: s.t,
                state: fk.state,
                rates,
                spatial: None,
            }
        }
        WaypointKind::SpatialTask => {
            let ext = spec.spatial.as_ref().ok_or_else(|| {
                Error::InvalidSpec("spatial trajectory on a planar mechanism".into())
            })?;
            let target = PoseTarget5 {
                p: Vec3::new(v[0], v[1], v[2]),
                beta: v[3],
                gamma: v[4],
            };
            let sol = ik_forbal5(spec, &target)?;
            if enforce_limits {
                sol.check_limits(&spec.limits)?;
            }
            let (x, y) = (v[0], v[1]);
            let rho = x.hypot(y);
            let q0 = sol.q0.unwrap();
            let (sn, cs) = q0.sin_cos();
            let drho = (x * d[0] + y * d[1]) / rho;
            let dq0 = (x * d[1] - y * d[0]) / (rho * rho);
            let ddrho = dd[0] * cs + dd[1] * sn + rho * dq0 * dq0;
            let ddq0 = (-dd[0] * sn + dd[1] * cs - 2.0 * drho * dq0) / rho;
            // Joint 3 point: p_m = (rho, z) - P(beta) p_me.
            let me = Vec3::new(ext.motor_offset.x, 0.0, ext.motor_offset.z);
            let (beta, dbeta, ddbeta) = (v[3], d[3], dd[3]);
            let rot = |a: f64| {
                let r = pitch_rotation(a) * me;
                Vec2::new(r.x, r.z)
            };
            let p_me = rot(beta);
            let p_me_perp = rot(beta + 0.5 * PI);
            let vm = Vec2::new(drho, d[2]) - dbeta * p_me_perp;
            let am = Vec2::new(ddrho, dd[2]) - ddbeta * p_me_perp + dbeta * dbeta * p_me;
            let state = sol.joint_state();
            let rates = planar_rates(spec, &state, vm, am)?;
            JointSample {
                t: s.t,
                state,
                rates,
                spatial: Some(SpatialJoints {
                    q0,
                    dq0,
                    ddq0,
                    q3: sol.q3.unwrap(),
                    q4: sol.q4.unwrap(),
                }),
            }
        }
    };
    Ok(out)
}

/// Joint-space mirror of a sampled trajectory; the first failing sample
/// aborts with its index.
pub fn joint_samples(
    spec: &MechanismSpec,
    kind: WaypointKind,
    samples: &[TrajectorySample],
    enforce_limits: bool,
) -> Result<Vec<JointSample>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            joint_sample(spec, kind, s, enforce_limits).map_err(|e| Error::TrajectoryAborted {
                index,
                t: s.t,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Built-in experiment trajectory identifiers.
pub const BUILTIN_IDS: [&str; 7] = [
    "F2-T1", "F2-T2", "F2-T3", "F2-T4", "F5-T1", "F5-T2", "F5-T3",
];

fn diamond() -> Vec<[f64; 2]> {
    vec![
        [0.22, 0.22],
        [0.32, 0.32],
        [0.42, 0.32],
        [0.32, 0.22],
        [0.22, 0.22],
    ]
}

fn circle(center: [f64; 2], r: f64, n: usize) -> Vec<[f64; 2]> {
    (0..=n)
        .map(|k| {
            let a = 2.0 * PI * (k % n) as f64 / n as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

fn times(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * step).collect()
}

/// Built-in waypoints and speed law; `spec` is only used by the
/// joint-space variant to convert the diamond through the IK.
pub fn builtin_for(id: &str, spec: &MechanismSpec) -> Result<(WaypointSet, SpeedLaw)> {
    let law = SpeedLaw::symmetric(BUILTIN_T_ACC);
    let planar = |pts: Vec<[f64; 2]>, step: f64, closed: bool| {
        WaypointSet::new(
            WaypointKind::PlanarTask,
            times(pts.len(), step),
            pts.iter().map(|p| p.to_vec()).collect(),
            closed,
        )
    };
    let spatial = |pts: Vec<[f64; 5]>, step: f64| {
        WaypointSet::new(
            WaypointKind::SpatialTask,
            times(pts.len(), step),
            pts.iter().map(|p| p.to_vec()).collect(),
            true,
        )
    };
    let set = match id.to_ascii_uppercase().as_str() {
        "F2-T1" => planar(diamond(), 1.0, true)?,
        "F2-T2" => {
            let values = diamond()
                .iter()
                .map(|p| {
                    let s = ik_forbal2(spec, Vec2::new(p[0], p[1]))?;
                    Ok(vec![s.q11, s.q21])
                })
                .collect::<Result<Vec<_>>>()?;
            WaypointSet::new(WaypointKind::Joint, times(values.len(), 1.0), values, true)?
        }
        "F2-T3" => {
            let r = 0.025;
            let pts = (0..17)
                .map(|k| {
                    if k <= 8 {
                        let a = (-45.0 + 45.0 * k as f64).to_radians();
                        [0.235 + r * a.cos(), 0.225 + r * a.sin()]
                    } else {
                        let a = (135.0 - 45.0 * (k - 8) as f64).to_radians();
                        [0.285 + r * a.cos(), 0.175 + r * a.sin()]
                    }
                })
                .collect();
            planar(pts, 0.25, false)?
        }
        "F2-T4" => planar(circle([0.25, 0.22], 0.05, 40), 0.2, true)?,
        "F5-T1" => spatial(
            diamond()
                .iter()
                .map(|p| [p[0], 0.0, p[1], 0.0, 0.0])
                .collect(),
            1.0,
        )?,
        "F5-T2" => spatial(
            circle([0.25, 0.22], 0.05, 40)
                .iter()
                .map(|p| [p[0], 0.0, p[1], 0.0, -PI / 2.0])
                .collect(),
            0.2,
        )?,
        "F5-T3" => spatial(
            circle([0.0, 0.3], 0.1, 40)
                .iter()
                .map(|p| [0.3, p[0], p[1], 0.0, 0.0])
                .collect(),
            0.2,
        )?,
        _ => return Err(Error::UnknownTrajectory(id.to_string())),
    };
    Ok((set, law))
}

/// Built-in trajectory using the shipped mechanism for its family.
pub fn builtin(id: &str) -> Result<(WaypointSet, SpeedLaw)> {
    let upper = id.to_ascii_uppercase();
    let spec = if upper.starts_with("F5") {
        config::forbal5()
    } else {
        config::forbal2()
    };
    builtin_for(id, &spec)
}
