use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tentkit::config::{load_config, SolveConfig};
use tentkit::dg::{BoundaryData, DgSpace};
use tentkit::driver::{
    convergence_study, error_norm_wave, run_explicit, run_wave, wind_tunnel_demo, wind_tunnel_state, Execution, ExplicitProblem, RunOptions,
    SpeedBound, WindTunnel,
};
use tentkit::io::{dg_snapshot, wave_snapshot, write_json, write_rates_csv, write_vtk, FieldSnapshot, FieldValues};
use tentkit::laws::{Burgers, ConservationLaw, Euler, Transport, Wave};
use tentkit::mesh::{Point, SpatialMesh};
use tentkit::mixedfem::{wave_exact_standing, MixedSpace, WaveSolver};
use tentkit::stepping::radau_iia;
use tentkit::tents::{pitch_slab, PitchParams};

#[derive(Parser)]
#[command(name = "tentkit", version, about = "Mapped tent pitching solvers for hyperbolic systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LawName {
    Transport,
    Burgers,
    Wave,
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Implicit,
    Explicit,
}

#[derive(Subcommand)]
enum Cmd {
    /// Pitch one slab of tents and write it as JSON.
    Pitch {
        /// `square:L`, `step`, `step:H:HCORNER` or a mesh file
        #[arg(long, default_value = "square:2")]
        mesh: String,
        /// Wavespeed bound on every edge
        #[arg(long = "c", default_value_t = 1.0)]
        speed: f64,
        /// Shape constant; defaults to the sine of the smallest mesh angle
        #[arg(long)]
        ctau: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.1)]
        slab: f64,
        /// Print tent count, layer count and pole height range
        #[arg(long)]
        stats: bool,
        #[arg(long, default_value = "tents.json")]
        out: PathBuf,
    },
    /// Run one problem and write the final front and diagnostics.
    Solve {
        #[arg(long, value_enum)]
        law: LawName,
        #[arg(long, value_enum)]
        scheme: Option<Scheme>,
        #[arg(long, default_value = "square:3")]
        mesh: String,
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Radau stages (wave only); defaults to `p`
        #[arg(long)]
        stages: Option<usize>,
        /// Slab height; overrides the config
        #[arg(long)]
        slab: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        tmax: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Standing-wave convergence study written as CSV.
    Converge {
        #[arg(long, value_enum, default_value = "wave")]
        law: LawName,
        /// Comma-separated polynomial degrees
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        p: Vec<usize>,
        /// Refinement levels as `FIRST:LAST`
        #[arg(long, default_value = "2:5")]
        levels: String,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        tmax: f64,
        #[arg(long)]
        serial: bool,
        #[arg(long, default_value = "rates.csv")]
        out: PathBuf,
    },
    /// Mach 3 flow over a forward-facing step.
    Windtunnel {
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        tend: Option<f64>,
        /// JSON with the wind-tunnel settings; flags override it
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
        #[arg(long, default_value = "windtunnel")]
        out: PathBuf,
    },
}

fn parse_mesh(arg: &str) -> Result<SpatialMesh> {
    if let Some(l) = arg.strip_prefix("square:") {
        return Ok(SpatialMesh::structured_square(l.parse().context("bad refinement level")?)?);
    }
    if arg == "step" {
        let d = WindTunnel::default();
        return Ok(SpatialMesh::step_channel(d.h_target, d.h_corner)?);
    }
    if let Some(rest) = arg.strip_prefix("step:") {
        let (h, hc) = rest.split_once(':').context("expected step:H:HCORNER")?;
        return Ok(SpatialMesh::step_channel(h.parse()?, hc.parse()?)?);
    }
    SpatialMesh::load(arg).with_context(|| format!("reading mesh file {arg}"))
}

fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let (a, b) = s.split_once(':').context("levels must be FIRST:LAST")?;
    let (a, b): (u32, u32) = (a.parse()?, b.parse()?);
    if b < a {
        bail!("empty level range {s}");
    }
    Ok((a..=b).collect())
}

fn options(serial: bool) -> RunOptions {
    RunOptions {
        execution: if serial { Execution::Serial } else { Execution::Parallel },
        audit: false,
    }
}

/// Compactly supported `cos^2` bump of radius `r` and height `a`.
fn bump(x: Point, c: Point, r: f64, a: f64) -> f64 {
    let d = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt() / r;
    if d < 1.0 {
        a * (0.5 * std::f64::consts::PI * d).cos().powi(2)
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_explicit<const L: usize>(
    mesh: &SpatialMesh,
    p: usize,
    law: &dyn ConservationLaw<L>,
    bc: BoundaryData<L>,
    u0: impl Fn(Point) -> [f64; L],
    names: [&str; L],
    cfg: &SolveConfig,
    tmax: f64,
    out: &Path,
) -> Result<()> {
    let space = DgSpace::new(mesh, p);
    let prob = ExplicitProblem {
        space: &space,
        law,
        bc: &bc,
        params: &cfg.explicit,
        pitch: &cfg.pitch,
    };
    let start = space.project(u0);
    let mass0 = space.integral(&start);
    let front = run_explicit(&prob, start, tmax, &cfg.run, |f| eprintln!("t = {:.6} after {} slabs", f.time, f.slab))?;
    let mut snap = dg_snapshot(&space, &front.state, names, front.time)?;
    snap = snap.with_cell("nu", FieldValues::Scalar(front.diagnostics.element_nu.clone()))?;
    write_vtk(&snap, out.join("solution.vtk"))?;
    let summary = json!({
        "law": law.name(),
        "time": front.time,
        "integral_start": mass0.to_vec(),
        "integral_end": space.integral(&front.state).to_vec(),
        "diagnostics": front.diagnostics,
    });
    write_json(&summary, out.join("diagnostics.json"))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn solve(law: LawName, scheme: Option<Scheme>, mesh: &str, p: usize, stages: Option<usize>, slab: Option<f64>, tmax: f64, config: Option<&Path>, out: &Path) -> Result<()> {
    let wanted = if law == LawName::Wave { Scheme::Implicit } else { Scheme::Explicit };
    if let Some(s) = scheme {
        if s != wanted {
            bail!("law {law:?} runs with the {wanted:?} scheme, not {s:?}");
        }
    }
    let mesh = parse_mesh(mesh)?;
    let mut cfg = match config {
        Some(path) => load_config::<SolveConfig>(path)?,
        None => {
            let mut c = SolveConfig::default();
            if law != LawName::Wave {
                c.pitch.speed = SpeedBound::State { safety: 1.5, floor: 0.5 };
            }
            if law == LawName::Euler {
                let wt = WindTunnel::default();
                c.pitch = wt.pitch;
                c.explicit = wt.explicit;
            }
            c
        }
    };
    if let Some(s) = slab {
        cfg.pitch.t_slab = s;
    }
    if let Some(s) = stages {
        cfg.stages = Some(s);
    }
    fs::create_dir_all(out)?;
    match law {
        LawName::Wave => {
            let space = MixedSpace::new(&mesh, p);
            let init = space.interpolate(|x| wave_exact_standing(x, 0.0).0, |x| wave_exact_standing(x, 0.0).1);
            let solver = WaveSolver::new(space, Wave::unit(), radau_iia(cfg.stages.unwrap_or(p))?);
            let front = run_wave(&solver, init, &cfg.pitch, tmax, &cfg.run, |f| eprintln!("t = {:.6} after {} slabs", f.time, f.slab))?;
            let error = error_norm_wave(&solver.space, &front.state, front.time);
            write_vtk(&wave_snapshot(&solver.space, &front.state, front.time)?, out.join("solution.vtk"))?;
            write_json(
                &json!({ "law": "wave", "time": front.time, "standing_wave_error": error, "diagnostics": front.diagnostics }),
                out.join("diagnostics.json"),
            )?;
            println!("standing-wave error at t = {}: {error:e}", front.time);
        }
        LawName::Transport => {
            let law = Transport::constant([1.0, 0.5]);
            let bc = BoundaryData::constant_inflow([0.0]);
            solve_explicit(&mesh, p, &law, bc, |x| [bump(x, [0.3, 0.3], 0.2, 1.0)], ["u"], &cfg, tmax, out)?;
        }
        LawName::Burgers => {
            let bc = BoundaryData::constant_inflow([0.0]);
            solve_explicit(&mesh, p, &Burgers, bc, |x| [bump(x, [0.4, 0.4], 0.25, 0.5)], ["u"], &cfg, tmax, out)?;
        }
        LawName::Euler => {
            let inflow = wind_tunnel_state();
            let bc = BoundaryData::constant_inflow(inflow);
            solve_explicit(&mesh, p, &Euler, bc, |_| inflow, ["rho", "m1", "m2", "E"], &cfg, tmax, out)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn windtunnel(p: Option<usize>, tend: Option<f64>, config: Option<&Path>, serial: bool, out: &Path) -> Result<()> {
    let mut cfg = match config {
        Some(path) => load_config::<WindTunnel>(path)?,
        None => WindTunnel::default(),
    };
    if let Some(p) = p {
        cfg.p = p;
    }
    if let Some(t) = tend {
        cfg.t_end = t;
    }
    fs::create_dir_all(out)?;
    let started = std::time::Instant::now();
    let (space, front, snaps) = wind_tunnel_demo(&cfg, &options(serial))?;
    let mut rows = Vec::new();
    for (k, s) in snaps.iter().enumerate() {
        let col = |l: usize| FieldValues::Scalar(s.cell_means.iter().map(|u| u[l]).collect());
        let snap = FieldSnapshot::new(s.time, &space.mesh)?
            .with_cell("rho", col(0))?
            .with_cell("m1", col(1))?
            .with_cell("m2", col(2))?
            .with_cell("E", col(3))?
            .with_cell("nu", FieldValues::Scalar(s.viscosity.clone()))?;
        write_vtk(&snap, out.join(format!("snapshot_{k:03}.vtk")))?;
        println!(
            "t = {:.3}: rho in [{:.4}, {:.4}], min P = {:.4}",
            s.time, s.min_density, s.max_density, s.min_pressure
        );
        rows.push(json!({
            "time": s.time,
            "min_density": s.min_density,
            "max_density": s.max_density,
            "min_pressure": s.min_pressure,
        }));
    }
    write_json(
        &json!({
            "elements": space.mesh.num_elements(),
            "p": cfg.p,
            "seconds": started.elapsed().as_secs_f64(),
            "snapshots": rows,
            "diagnostics": front.diagnostics,
        }),
        out.join("summary.json"),
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Pitch {
            mesh,
            speed,
            ctau,
            gamma,
            slab,
            stats,
            out,
        } => {
            let mesh = parse_mesh(&mesh)?;
            let mut params = PitchParams::uniform(&mesh, speed, slab);
            params.gamma = gamma;
            if let Some(c) = ctau {
                params.c_tau = c;
            }
            let tents = pitch_slab(&mesh, &params)?;
            write_json(&tents, &out)?;
            if stats {
                let st = tents.stats();
                println!("tents {}\nlayers {}\nmin_pole {:e}\nmax_pole {:e}", st.tents, st.layers, st.min_pole, st.max_pole);
            }
            println!("wrote {}", out.display());
        }
        Cmd::Solve {
            law,
            scheme,
            mesh,
            p,
            stages,
            slab,
            tmax,
            config,
            out,
        } => solve(law, scheme, &mesh, p, stages, slab, tmax, config.as_deref(), &out)?,
        Cmd::Converge {
            law,
            p,
            levels,
            stages,
            tmax,
            serial,
            out,
        } => {
            if law != LawName::Wave {
                bail!("convergence studies are available for the wave law only");
            }
            let rows = convergence_study(&p, &parse_levels(&levels)?, stages, tmax, &options(serial))?;
            for r in &rows {
                println!("p = {}  h = {:.5}  e = {:.4e}  slope = {:.3}", r.p, r.h, r.e, r.slope);
            }
            write_rates_csv(&rows, &out)?;
            println!("wrote {}", out.display());
        }
        Cmd::Windtunnel { p, tend, config, serial, out } => windtunnel(p, tend, config.as_deref(), serial, &out)?,
    }
    Ok(())
}
