use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use forbal::balance::{self, ProfileChoice};
use forbal::config;
use forbal::dynamics::WrenchMode;
use forbal::harness::{self, Configuration, TrajectorySpec};
use forbal::ik::{self, PoseTarget5};
use forbal::model::{LinkId, MechanismSpec, Vec2, Vec3};
use forbal::trajectory::{builtin, DEFAULT_DT};
use forbal::workspace;
use forbal::Error;

#[derive(Parser)]
#[command(
    name = "forbal",
    version,
    about = "Force-balanced five-bar manipulator toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Short,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the counter masses for a config.
    DesignBalance {
        /// Config file, or `forbal2` / `forbal5` for the shipped ones.
        #[arg(long)]
        config: String,
        #[arg(long, value_enum, default_value = "short")]
        profile: Profile,
        /// Also report the nearest stack of brass rings per counter mass.
        #[arg(long)]
        rings: bool,
        #[arg(long, value_enum, default_value = "text")]
        out: OutFormat,
    },
    /// Inverse kinematics for `x,z` or `x,y,z,beta,gamma` (metres, radians).
    Ik {
        #[arg(long)]
        config: String,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        /// Reject solutions outside the config's joint limits.
        #[arg(long)]
        limits: bool,
    },
    /// Built-in trajectories.
    Traj {
        #[command(subcommand)]
        action: TrajAction,
    },
    /// Inverse dynamics along a trajectory, written as CSV.
    Simulate {
        #[arg(long)]
        config: String,
        /// Built-in id or waypoint CSV path.
        #[arg(long)]
        traj: String,
        /// Run with the counter masses removed.
        #[arg(long)]
        unbalanced: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Acceleration/deceleration time for waypoint files, s.
        #[arg(long)]
        t_acc: Option<f64>,
        /// Report the full reaction wrench instead of subtracting the static one.
        #[arg(long)]
        raw: bool,
    },
    /// Trace the planar workspace; `.svg` or `.csv` by extension.
    Workspace {
        #[arg(long)]
        config: String,
        /// Ray spacing, degrees.
        #[arg(long, default_value_t = 10.0)]
        spacing: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Balanced vs unbalanced comparison: two CSVs, metrics and a plot.
    Report {
        #[arg(long)]
        config: String,
        #[arg(long)]
        traj: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        t_acc: Option<f64>,
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Subcommand)]
enum TrajAction {
    /// Print a built-in trajectory's waypoints as CSV.
    Export {
        id: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in ids.
    List,
}

/// Prototype workspace center marked on the workspace figure, m.
const WORKSPACE_CENTER: (f64, f64) = (0.3, 0.18);

const EXIT_UNREACHABLE: u8 = 2;
const EXIT_SINGULAR: u8 = 3;
const EXIT_LIMIT: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn mode(raw: bool) -> WrenchMode {
    if raw {
        WrenchMode::Raw
    } else {
        WrenchMode::Zeroed
    }
}

fn load(config: &str) -> anyhow::Result<MechanismSpec> {
    config::load_named(config).with_context(|| format!("loading config `{config}`"))
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::DesignBalance {
            config,
            profile,
            rings,
            out,
        } => {
            let spec = load(&config)?;
            let choice = match profile {
                Profile::Short => ProfileChoice::Link12Short,
                Profile::Extended => ProfileChoice::Link12Extended,
            };
            let mounting = balance::Mounting::from_spec(&spec, choice);
            let sol = balance::solve_counter_masses(&spec, &mounting, choice)?;
            let ring_stacks: Option<Vec<_>> = rings.then(|| {
                LinkId::ALL
                    .iter()
                    .filter(|&&id| id != LinkId::L12 || sol.m12c.is_some())
                    .map(|&id| (id.label(), balance::ring_stack(sol.counter_mass(id))))
                    .collect()
            });
            match out {
                OutFormat::Json => {
                    let mut v = serde_json::to_value(&sol)?;
                    v["units"] = json!({"mass": "kg", "length": "m"});
                    if let Some(rs) = &ring_stacks {
                        v["rings"] = json!(rs
                            .iter()
                            .map(|(l, r)| (format!("m{l}c"), r))
                            .collect::<std::collections::BTreeMap<_, _>>());
                    }
                    println!("{}", serde_json::to_string_pretty(&harness::round_json(v))?);
                }
                OutFormat::Text => {
                    let mut s = String::new();
                    writeln!(s, "{} ({})", spec.name, profile_name(profile))?;
                    for id in LinkId::ALL {
                        if id == LinkId::L12 && sol.m12c.is_none() {
                            continue;
                        }
                        writeln!(
                            s,
                            "  m{}c = {:8.1} g",
                            id.label(),
                            sol.counter_mass(id) * 1e3
                        )?;
                    }
                    writeln!(
                        s,
                        "  total without CM = {:.1} g",
                        sol.total_mass_without_cm * 1e3
                    )?;
                    writeln!(
                        s,
                        "  total with CM    = {:.1} g",
                        sol.total_mass_with_cm * 1e3
                    )?;
                    writeln!(
                        s,
                        "  max residual     = {:.3e}",
                        sol.residuals_after.max_abs()
                    )?;
                    if let Some(rs) = &ring_stacks {
                        for (l, r) in rs {
                            writeln!(
                                s,
                                "  rings m{l}c: {} x 13.2 g + {} x 11.4 g = {:.1} g",
                                r.large,
                                r.small,
                                r.mass * 1e3
                            )?;
                        }
                    }
                    print!("{s}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ik {
            config,
            target,
            limits,
        } => {
            let spec = load(&config)?;
            let vals: Vec<f64> = target
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("bad target `{target}`"))?;
            let result = match vals.as_slice() {
                [x, z] => {
                    let p = Vec2::new(*x, *z);
                    if limits {
                        ik::ik_forbal2_limited(&spec, p)
                    } else {
                        ik::ik_forbal2(&spec, p)
                    }
                }
                [x, y, z, beta, gamma] => {
                    let t = PoseTarget5 {
                        p: Vec3::new(*x, *y, *z),
                        beta: *beta,
                        gamma: *gamma,
                    };
                    if limits {
                        ik::ik_forbal5_limited(&spec, &t)
                    } else {
                        ik::ik_forbal5(&spec, &t)
                    }
                }
                _ => bail!("target must be x,z or x,y,z,beta,gamma"),
            };
            match result {
                Ok(sol) => {
                    let mut v = serde_json::to_value(sol)?;
                    v["status"] = json!("ok");
                    v["units"] = json!({"angle": "rad", "length": "m"});
                    println!("{}", serde_json::to_string_pretty(&harness::round_json(v))?);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    let (status, code) = match &e {
                        Error::Unreachable(_) => ("unreachable", EXIT_UNREACHABLE),
                        Error::Singular(_)
                        | Error::SingularConfiguration { .. }
                        | Error::PitchSingularity
                        | Error::YawSingularity => ("singular", EXIT_SINGULAR),
                        Error::LimitViolation { .. } => ("limit-violation", EXIT_LIMIT),
                        _ => return Err(e.into()),
                    };
                    println!(
                        "{}",
                        serde_json::to_string_pretty(
                            &json!({"status": status, "message": e.to_string()})
                        )?
                    );
                    Ok(ExitCode::from(code))
                }
            }
        }
        Command::Traj { action } => {
            match action {
                TrajAction::Export { id, out } => {
                    let (wps, _) = builtin(&id)?;
                    match out {
                        Some(path) => wps.write_csv(fs::File::create(&path)?)?,
                        None => wps.write_csv(io::stdout().lock())?,
                    }
                }
                TrajAction::List => {
                    for id in forbal::trajectory::BUILTIN_IDS {
                        println!("{id}");
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            config,
            traj,
            unbalanced,
            out,
            dt,
            t_acc,
            raw,
        } => {
            let spec = load(&config)?;
            let t = TrajectorySpec::resolve(&traj, &spec, t_acc)?;
            let (run_spec, cfg) = if unbalanced {
                (harness::unbalanced_spec(&spec), Configuration::Unbalanced)
            } else {
                (harness::balanced_spec(&spec)?, Configuration::Balanced)
            };
            let result = harness::simulate(&run_spec, &t, cfg, dt, mode(raw))?;
            write_output(&out, |w| harness::write_csv(&result, w))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Workspace {
            config,
            spacing,
            out,
        } => {
            let spec = load(&config)?;
            let trace =
                workspace::trace_workspace(&spec, &spec.limits, spacing, spec.nominal_pose)?;
            let ext = out.extension().and_then(|e| e.to_str()).unwrap_or("");
            match ext.to_ascii_lowercase().as_str() {
                "svg" => fs::write(&out, workspace_svg(&trace))?,
                "csv" => write_output(&out, |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record(["x", "z"])?;
                    for p in &trace.boundary {
                        c.write_record([
                            forbal::trajectory::fmt_sig(p.x),
                            forbal::trajectory::fmt_sig(p.y),
                        ])?;
                    }
                    c.flush()?;
                    Ok(())
                })?,
                _ => bail!("--out must end in .svg or .csv"),
            }
            eprintln!(
                "area {:.4} m^2, max reach {:.4} m, {} rays",
                trace.area,
                trace.max_reach,
                trace.boundary.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report {
            config,
            traj,
            out_dir,
            t_acc,
            raw,
        } => {
            let spec = load(&config)?;
            let t = TrajectorySpec::resolve(&traj, &spec, t_acc)?;
            let dt = harness::dt_from_env()?;
            let rep = harness::write_report(&spec, &t, &out_dir, dt, mode(raw))?;
            for (name, c) in &rep.channels {
                match c.mean_pct {
                    Some(p) => eprintln!("{name:>6}: mean |.| reduced {p:6.1} %"),
                    None => eprintln!("{name:>6}: unbalanced mean is zero"),
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::Short => "short link-12 profile",
        Profile::Extended => "extended link-12 profile",
    }
}

fn write_output(path: &Path, f: impl FnOnce(fs::File) -> forbal::Result<()>) -> anyhow::Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f(file)?;
    Ok(())
}

/// Boundary polygon, the workspace-center cross, the ray origin and the
/// fixed-frame origin; z points up.
fn workspace_svg(trace: &workspace::WorkspaceTrace) -> String {
    let scale = 1000.0;
    let pad = 0.05;
    let xs = trace
        .boundary
        .iter()
        .map(|p| p.x)
        .chain([trace.center.x, WORKSPACE_CENTER.0, 0.0]);
    let zs = trace
        .boundary
        .iter()
        .map(|p| p.y)
        .chain([trace.center.y, WORKSPACE_CENTER.1, 0.0]);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let (z0, z1) = zs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let (x0, x1, z0, z1) = (x0 - pad, x1 + pad, z0 - pad, z1 + pad);
    let w = (x1 - x0) * scale;
    let h = (z1 - z0) * scale;
    let sx = |x: f64| (x - x0) * scale;
    let sz = |z: f64| (z1 - z) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let pts: Vec<String> = trace
        .boundary
        .iter()
        .map(|p| format!("{:.2},{:.2}", sx(p.x), sz(p.y)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#cfe2f3" fill-opacity="0.6" stroke="#1f4e79" stroke-width="1.5"/>"##,
        pts.join(" ")
    );
    let (cx, cz) = (sx(WORKSPACE_CENTER.0), sz(WORKSPACE_CENTER.1));
    let _ = writeln!(
        s,
        r##"<g stroke="#c00000" stroke-width="2"><line x1="{:.2}" y1="{cz:.2}" x2="{:.2}" y2="{cz:.2}"/><line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}"/></g>"##,
        cx - 8.0,
        cx + 8.0,
        cz - 8.0,
        cz + 8.0
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="none" stroke="#1f4e79"/>"##,
        sx(trace.center.x),
        sz(trace.center.y)
    );
    let _ = writeln!(
        s,
        r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#000"/>"##,
        sx(0.0),
        sz(0.0)
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="18">area {:.4} m^2, max reach {:.4} m, center ({:.2}, {:.2}) m, rays from ({:.3}, {:.3}) m</text>"#,
        trace.area,
        trace.max_reach,
        WORKSPACE_CENTER.0,
        WORKSPACE_CENTER.1,
        trace.center.x,
        trace.center.y
    );
    s.push_str("</svg>\n");
    s
}
