//! Balanced / unbalanced experiment runs, reduction metrics and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::balance::{self, ProfileChoice};
use crate::dynamics::{base_reaction, inverse_dynamics, static_wrench, WrenchMode};
use crate::error::{Error, Result};
use crate::model::MechanismSpec;
use crate::trajectory::{
    builtin_for, fmt_sig, joint_samples, Trajectory, WaypointKind, WaypointSet, DEFAULT_DT,
};

/// Environment variable overriding the sampling step of `report`.
pub const DT_ENV: &str = "FORBAL_DT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    Balanced,
    Unbalanced,
}

/// One CSV row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub q11: f64,
    pub q21: f64,
    pub q0: Option<f64>,
    pub q3: Option<f64>,
    pub q4: Option<f64>,
    pub tau11: f64,
    pub tau21: f64,
    pub tau0: Option<f64>,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
}

/// Wrench and torque channels covered by the summaries.
pub const CHANNELS: [&str; 9] = ["Fx", "Fy", "Fz", "Mx", "My", "Mz", "tau11", "tau21", "tau0"];

impl Record {
    pub fn channel(&self, name: &str) -> Option<f64> {
        match name {
            "Fx" => Some(self.fx),
            "Fy" => Some(self.fy),
            "Fz" => Some(self.fz),
            "Mx" => Some(self.mx),
            "My" => Some(self.my),
            "Mz" => Some(self.mz),
            "tau11" => Some(self.tau11),
            "tau21" => Some(self.tau21),
            "tau0" => self.tau0,
            "q11" => Some(self.q11),
            "q21" => Some(self.q21),
            "q0" => self.q0,
            "q3" => self.q3,
            "q4" => self.q4,
            _ => None,
        }
    }
}

/// Round to 9 significant digits, the precision of every emitted artifact.
pub fn round_sig(v: f64) -> f64 {
    fmt_sig(v).parse().unwrap_or(v)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean_abs: f64,
    pub max_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub trajectory: String,
    pub configuration: Configuration,
    pub dt: f64,
    pub spatial: bool,
    pub records: Vec<Record>,
    pub summary: BTreeMap<String, ChannelStats>,
}

pub fn summarize(records: &[Record]) -> BTreeMap<String, ChannelStats> {
    let mut out = BTreeMap::new();
    for ch in CHANNELS {
        let vals: Vec<f64> = records.iter().filter_map(|r| r.channel(ch)).collect();
        if vals.is_empty() {
            continue;
        }
        let mean_abs = vals.iter().map(|v| v.abs()).sum::<f64>() / vals.len() as f64;
        let max_abs = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        out.insert(ch.to_string(), ChannelStats { mean_abs, max_abs });
    }
    out
}

/// A trajectory ready to run: built-in id or waypoint file.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySpec {
    pub id: String,
    pub waypoints: WaypointSet,
    pub law: crate::trajectory::SpeedLaw,
}

impl TrajectorySpec {
    /// Resolve a built-in id, falling back to a waypoint CSV path.
    pub fn resolve(id_or_path: &str, spec: &MechanismSpec, t_acc: Option<f64>) -> Result<Self> {
        match builtin_for(id_or_path, spec) {
            Ok((waypoints, law)) => Ok(Self {
                id: id_or_path.to_ascii_uppercase(),
                waypoints,
                law: t_acc
                    .map(crate::trajectory::SpeedLaw::symmetric)
                    .unwrap_or(law),
            }),
            Err(Error::UnknownTrajectory(_)) if Path::new(id_or_path).exists() => {
                let waypoints = WaypointSet::read_csv(fs::File::open(id_or_path)?)?;
                Ok(Self {
                    id: id_or_path.to_string(),
                    waypoints,
                    law: crate::trajectory::SpeedLaw::symmetric(
                        t_acc.unwrap_or(crate::trajectory::BUILTIN_T_ACC),
                    ),
                })
            }
            Err(e) => Err(e),
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        Trajectory::new(&self.waypoints, &self.law)
    }
}

/// Spec variants used by the experiments. A config that already carries
/// counter masses is taken as the balanced build; otherwise they are solved
/// with the short link-12 profile.
pub fn balanced_spec(spec: &MechanismSpec) -> Result<MechanismSpec> {
    if spec.counter_masses().iter().any(|&m| m > 0.0) {
        Ok(spec.clone())
    } else {
        balance::balanced(spec, ProfileChoice::Link12Short)
    }
}

pub fn unbalanced_spec(spec: &MechanismSpec) -> MechanismSpec {
    spec.without_counter_masses()
}

/// Run one trajectory on one spec.
pub fn simulate(
    spec: &MechanismSpec,
    traj: &TrajectorySpec,
    configuration: Configuration,
    dt: f64,
    mode: WrenchMode,
) -> Result<ExperimentResult> {
    let trajectory = traj.trajectory()?;
    let samples = trajectory.sample(dt)?;
    let joints = joint_samples(spec, traj.waypoints.kind, &samples, true)?;
    let spatial = traj.waypoints.kind == WaypointKind::SpatialTask;
    let records = joints
        .iter()
        .enumerate()
        .map(|(index, js)| {
            let abort = |e: Error| Error::TrajectoryAborted {
                index,
                t: js.t,
                reason: e.to_string(),
            };
            let tau = inverse_dynamics(spec, js).map_err(abort)?;
            let w = base_reaction(spec, js, mode).map_err(abort)?;
            let q = js.ik_angles();
            let sp = js.spatial;
            let r = round_sig;
            Ok(Record {
                t: r(js.t),
                q11: r(q.q11),
                q21: r(q.q21),
                q0: sp.map(|s| r(s.q0)),
                q3: sp.map(|s| r(s.q3)),
                q4: sp.map(|s| r(s.q4)),
                tau11: r(tau.tau11),
                tau21: r(tau.tau21),
                tau0: tau.tau0.map(r),
                fx: r(w.force.x),
                fy: r(w.force.y),
                fz: r(w.force.z),
                mx: r(w.moment.x),
                my: r(w.moment.y),
                mz: r(w.moment.z),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&records);
    Ok(ExperimentResult {
        trajectory: traj.id.clone(),
        configuration,
        dt,
        spatial,
        records,
        summary,
    })
}

/// Balanced and (optionally) unbalanced runs of the same trajectory.
pub fn run_experiment(
    spec: &MechanismSpec,
    traj: &TrajectorySpec,
    both_configs: bool,
    dt: f64,
    mode: WrenchMode,
) -> Result<Vec<ExperimentResult>> {
    let mut out = vec![simulate(
        &balanced_spec(spec)?,
        traj,
        Configuration::Balanced,
        dt,
        mode,
    )?];
    if both_configs {
        out.push(simulate(
            &unbalanced_spec(spec),
            traj,
            Configuration::Unbalanced,
            dt,
            mode,
        )?);
    }
    Ok(out)
}

pub fn write_csv<W: Write>(result: &ExperimentResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t", "q11", "q21"];
    if result.spatial {
        header.extend(["q0", "q3", "q4"]);
    }
    header.extend(["tau11", "tau21"]);
    if result.spatial {
        header.push("tau0");
    }
    header.extend(["Fx", "Fy", "Fz", "Mx", "My", "Mz"]);
    w.write_record(&header)?;
    for rec in &result.records {
        let row: Vec<String> = header
            .iter()
            .map(|h| {
                fmt_sig(
                    rec.channel(h)
                        .unwrap_or(if *h == "t" { rec.t } else { f64::NAN }),
                )
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReduction {
    /// `100 (1 - mean|bal| / mean|unbal|)`; `None` when the unbalanced mean
    /// is zero.
    pub mean_pct: Option<f64>,
    pub max_pct: Option<f64>,
    pub balanced: ChannelStats,
    pub unbalanced: ChannelStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub trajectory: String,
    /// Always 1: the simulation is deterministic.
    pub n_runs: u32,
    pub dt: f64,
    pub samples: usize,
    pub channels: BTreeMap<String, ChannelReduction>,
}

impl ReductionReport {
    pub fn mean_pct(&self, channel: &str) -> Option<f64> {
        self.channels.get(channel).and_then(|c| c.mean_pct)
    }
}

fn pct(bal: f64, unbal: f64) -> Option<f64> {
    (unbal.abs() > 1e-12).then(|| 100.0 * (1.0 - bal / unbal))
}

pub fn reduction_metrics(
    bal: &ExperimentResult,
    unbal: &ExperimentResult,
) -> Result<ReductionReport> {
    if bal.trajectory != unbal.trajectory {
        return Err(Error::MismatchedRuns(format!(
            "trajectories differ: {} vs {}",
            bal.trajectory, unbal.trajectory
        )));
    }
    if bal.dt != unbal.dt || bal.records.len() != unbal.records.len() {
        return Err(Error::MismatchedRuns("sampling differs".into()));
    }
    let mut channels = BTreeMap::new();
    for (name, b) in &bal.summary {
        if let Some(u) = unbal.summary.get(name) {
            channels.insert(
                name.clone(),
                ChannelReduction {
                    mean_pct: pct(b.mean_abs, u.mean_abs),
                    max_pct: pct(b.max_abs, u.max_abs),
                    balanced: *b,
                    unbalanced: *u,
                },
            );
        }
    }
    Ok(ReductionReport {
        trajectory: bal.trajectory.clone(),
        n_runs: 1,
        dt: bal.dt,
        samples: bal.records.len(),
        channels,
    })
}

/// Recursively round every number in a JSON value to 9 significant digits.
pub fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => serde_json::Number::from_f64(round_sig(f))
                .map(Value::Number)
                .unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Sampling step from `FORBAL_DT`, else the default.
pub fn dt_from_env() -> Result<f64> {
    match std::env::var(DT_ENV) {
        Ok(s) => {
            let dt: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::InvalidTrajectory(format!("{DT_ENV}=`{s}` is not a number")))?;
            if dt > 0.0 && dt.is_finite() {
                Ok(dt)
            } else {
                Err(Error::InvalidTrajectory(format!("{DT_ENV} must be > 0")))
            }
        }
        Err(_) => Ok(DEFAULT_DT),
    }
}

/// Write `balanced.csv`, `unbalanced.csv`, `metrics.json` and `plot.svg`.
pub fn write_report(
    spec: &MechanismSpec,
    traj: &TrajectorySpec,
    out_dir: &Path,
    dt: f64,
    mode: WrenchMode,
) -> Result<ReductionReport> {
    let runs = run_experiment(spec, traj, true, dt, mode)?;
    let (bal, unbal) = (&runs[0], &runs[1]);
    let report = reduction_metrics(bal, unbal)?;
    fs::create_dir_all(out_dir)?;
    write_csv(bal, fs::File::create(out_dir.join("balanced.csv"))?)?;
    write_csv(unbal, fs::File::create(out_dir.join("unbalanced.csv"))?)?;
    let solved = balanced_spec(spec)?;
    // The static load is what zeroed-mode channels hide: counter masses
    // raise the base weight.
    let static_bal = static_wrench(&solved)?;
    let static_unbal = static_wrench(&unbalanced_spec(spec))?;
    let metrics = serde_json::json!({
        "trajectory": report.trajectory,
        "n_runs": report.n_runs,
        "dt": report.dt,
        "samples": report.samples,
        "wrench_mode": mode,
        "counter_masses_kg": {
            "m11c": solved.links.l11.counter_mass,
            "m12c": solved.links.l12.counter_mass,
            "m21c": solved.links.l21.counter_mass,
            "m22c": solved.links.l22.counter_mass,
        },
        "channels": report.channels,
        "static_wrench": {
            "balanced": static_bal,
            "unbalanced": static_unbal,
        },
    });
    let text = serde_json::to_string_pretty(&round_json(metrics))?;
    fs::write(out_dir.join("metrics.json"), text + "\n")?;
    fs::write(out_dir.join("plot.svg"), render(bal, Some(unbal)))?;
    Ok(report)
}

const PLOT_W: f64 = 900.0;
const PANEL_H: f64 = 170.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 45.0;

struct Series<'a> {
    channel: &'a str,
    color: &'a str,
}

fn channel_color(ch: &str) -> &'static str {
    match ch {
        "Fx" | "Mx" => "#d62728",
        "Fy" | "My" => "#2ca02c",
        "Fz" | "Mz" => "#1f77b4",
        "q11" | "tau11" => "#5dade2",
        "q21" | "tau21" => "#8b4513",
        _ => "#d4ac0d",
    }
}

fn panels(spatial: bool) -> Vec<(&'static str, Vec<&'static str>)> {
    let (q, tau): (Vec<&str>, Vec<&str>) = if spatial {
        (vec!["q11", "q21", "q0"], vec!["tau11", "tau21", "tau0"])
    } else {
        (vec!["q11", "q21"], vec!["tau11", "tau21"])
    };
    vec![
        ("(a) joint angles [rad]", q),
        ("(b) reaction force [N]", vec!["Fx", "Fy", "Fz"]),
        ("(b) reaction moment [N m]", vec!["Mx", "My", "Mz"]),
        ("(b) joint torque [N m]", tau),
    ]
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.1;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Time-series figure: joint angles on top, then forces, moments and
/// torques. Balanced runs are solid, unbalanced dashed.
pub fn render(bal: &ExperimentResult, unbal: Option<&ExperimentResult>) -> String {
    let runs: Vec<(&ExperimentResult, bool)> = std::iter::once((bal, false))
        .chain(unbal.map(|u| (u, true)))
        .collect();
    let spatial = bal.spatial;
    let layout = panels(spatial);
    let height = MARGIN_T + layout.len() as f64 * (PANEL_H + GAP);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_W}" height="{height}" viewBox="0 0 {PLOT_W} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_L}" y="18" font-size="13">{} (solid: balanced, dashed: unbalanced)</text>"#,
        xml_escape(&bal.trajectory)
    );
    let t_max = runs
        .iter()
        .flat_map(|(r, _)| r.records.last().map(|x| x.t))
        .fold(0.0, f64::max);
    let (t0, t1) = if t_max > 0.0 {
        (0.0, t_max)
    } else {
        (-0.5, 0.5)
    };
    let plot_w = PLOT_W - MARGIN_L - MARGIN_R;

    for (i, (title, chans)) in layout.iter().enumerate() {
        let top = MARGIN_T + i as f64 * (PANEL_H + GAP) + 10.0;
        let series: Vec<Series> = chans
            .iter()
            .map(|c| Series {
                channel: c,
                color: channel_color(c),
            })
            .collect();
        let values = runs
            .iter()
            .flat_map(|(r, _)| r.records.iter())
            .flat_map(|rec| series.iter().filter_map(|s| rec.channel(s.channel)));
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        let (y0, y1) = nice_range(lo, hi);
        let px = |t: f64| MARGIN_L + (t - t0) / (t1 - t0) * plot_w;
        let py = |v: f64| top + PANEL_H - (v - y0) / (y1 - y0) * PANEL_H;

        let _ = writeln!(
            svg,
            r##"<rect x="{MARGIN_L}" y="{top:.2}" width="{plot_w:.2}" height="{PANEL_H}" fill="none" stroke="#444"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{MARGIN_L}" y="{:.2}">{}</text>"#,
            top - 4.0,
            xml_escape(title)
        );
        for k in 0..=4 {
            let v = y0 + (y1 - y0) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
                MARGIN_L - 4.0,
                py(v) + 4.0,
                v
            );
            let t = t0 + (t1 - t0) * k as f64 / 4.0;
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.2}</text>"#,
                px(t),
                top + PANEL_H + 14.0,
                t
            );
        }
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                svg,
                r##"<line x1="{MARGIN_L}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#bbb"/>"##,
                py(0.0),
                MARGIN_L + plot_w
            );
        }
        for s in &series {
            for (run, dashed) in &runs {
                let pts: Vec<(f64, f64)> = run
                    .records
                    .iter()
                    .filter_map(|r| r.channel(s.channel).map(|v| (px(r.t), py(v))))
                    .collect();
                let dash = if *dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                match pts.len() {
                    0 => {}
                    1 => {
                        let (x, y) = pts[0];
                        let fill = if *dashed { "none" } else { s.color };
                        let _ = writeln!(
                            svg,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{fill}" stroke="{}"/>"#,
                            s.color
                        );
                    }
                    _ => {
                        let mut d = String::new();
                        for (k, (x, y)) in pts.iter().enumerate() {
                            let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
                        }
                        let _ = writeln!(
                            svg,
                            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.2"{dash}/>"#,
                            s.color
                        );
                    }
                }
            }
        }
        for (k, s) in series.iter().enumerate() {
            let x = MARGIN_L + plot_w - 70.0 * (series.len() - k) as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" fill="{}">{}</text>"#,
                top - 4.0,
                s.color,
                s.channel
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t [s]</text>"#,
        MARGIN_L + plot_w / 2.0,
        height - 6.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub(crate) fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    fn short_traj(spec: &MechanismSpec) -> TrajectorySpec {
        TrajectorySpec::resolve("F2-T1", spec, None).unwrap()
    }

    #[test]
    fn identical_runs_reduce_nothing() {
        let spec = config::forbal2();
        let t = short_traj(&spec);
        let r = simulate(&spec, &t, Configuration::Balanced, 0.05, WrenchMode::Zeroed).unwrap();
        let rep = reduction_metrics(&r, &r).unwrap();
        for (name, c) in &rep.channels {
            if let Some(p) = c.mean_pct {
                assert_eq!(p, 0.0, "{name}");
            }
        }
        assert_eq!(rep.n_runs, 1);
    }

    #[test]
    fn kinematic_channels_match_between_configurations() {
        let spec = config::forbal2();
        let runs =
            run_experiment(&spec, &short_traj(&spec), true, 0.05, WrenchMode::Zeroed).unwrap();
        assert_eq!(runs[0].records.len(), 81);
        for (a, b) in runs[0].records.iter().zip(&runs[1].records) {
            assert_eq!((a.t, a.q11, a.q21), (b.t, b.q11, b.q21));
        }
        assert_ne!(runs[0].summary["My"], runs[1].summary["My"]);
    }

    #[test]
    fn mismatched_runs_are_rejected() {
        let spec = config::forbal2();
        let a = simulate(
            &spec,
            &short_traj(&spec),
            Configuration::Balanced,
            0.05,
            WrenchMode::Raw,
        )
        .unwrap();
        let mut b = a.clone();
        b.trajectory = "F2-T4".into();
        assert!(matches!(
            reduction_metrics(&a, &b),
            Err(Error::MismatchedRuns(_))
        ));
    }

    #[test]
    fn summaries_recompute_from_the_csv() {
        let spec = config::forbal2();
        let r = simulate(
            &spec,
            &short_traj(&spec),
            Configuration::Unbalanced,
            0.1,
            WrenchMode::Zeroed,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        let headers = rdr.headers().unwrap().clone();
        let my = headers.iter().position(|h| h == "My").unwrap();
        let vals: Vec<f64> = rdr
            .records()
            .map(|rec| rec.unwrap()[my].parse().unwrap())
            .collect();
        let mean = vals.iter().map(|v: &f64| v.abs()).sum::<f64>() / vals.len() as f64;
        assert_eq!(mean, r.summary["My"].mean_abs);
    }

    #[test]
    fn empty_and_single_sample_plots() {
        let spec = config::forbal2();
        let mut r = simulate(
            &spec,
            &short_traj(&spec),
            Configuration::Balanced,
            0.5,
            WrenchMode::Zeroed,
        )
        .unwrap();
        r.records.truncate(1);
        let svg = render(&r, None);
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("<path"));
        r.records.clear();
        let svg = render(&r, None);
        assert!(svg.contains("<rect") && !svg.contains("<circle") && !svg.contains("<path"));
    }

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round_sig(1.234567891234), 1.23456789);
        assert_eq!(fmt_sig(0.1), "1.00000000e-1");
    }
}
