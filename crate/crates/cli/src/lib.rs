//! Batch driver behind the `sirb` binary.
//!
//! [`run`] executes one validated [`RunConfig`] and writes its artifacts into
//! the configured output directory: a `manifest.json` that echoes the full
//! configuration with per-file SHA-256 hashes, the mode's CSV reports, and
//! `plot_*.csv` files with a `plot.py` stub for external plotting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use log::info;

use sirb_core::config::{Method, Mode, RunConfig};
use sirb_core::deterministic::{homogeneous_ode, integrate, ReactionField};
use sirb_core::diagnostics::{compensator_check, lln_experiment, LlnSetup, QV_COMPONENTS};
use sirb_core::io::{self, DerivedTransport, RunManifest};
use sirb_core::lattice::DEFAULT_QUADRATURE_POINTS;
use sirb_core::stochastic::{run_replicas, simulate_ssa, simulate_tau_leap, SystemState, Trajectory, RNG_ALGORITHM};
use sirb_core::{Compartment, CompartmentFields, SampledPath};

pub const TOOL: &str = "sirb";

/// What a run left on disk.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    /// Paths relative to `output`, each with its SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Default)]
struct Outputs {
    dir: PathBuf,
    files: BTreeMap<String, String>,
    plots: Vec<(String, String, String)>,
}

impl Outputs {
    fn put(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let hash = io::write_file(&path, contents)?;
        self.files.insert(name.to_string(), hash);
        Ok(())
    }

    /// A plot-data file plus the columns `plot.py` should draw.
    fn plot(&mut self, name: &str, x: &str, ys: &str, contents: &str) -> Result<()> {
        self.put(name, contents.as_bytes())?;
        self.plots.push((name.to_string(), x.to_string(), ys.to_string()));
        Ok(())
    }
}

/// Runs `config` on a pool of `config.workers` threads (all cores when 0).
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("building worker pool")?;
    let mut out = Outputs { dir: config.output.clone(), ..Default::default() };
    fs::create_dir_all(&out.dir).with_context(|| format!("creating {}", out.dir.display()))?;
    info!("{} run, seed {}, output {}", config.mode.name(), config.seed, out.dir.display());

    pool.install(|| match config.mode {
        Mode::Simulate => simulate(config, &mut out),
        Mode::Pde => pde(config, &mut out),
        Mode::Homogeneous => homogeneous(config, &mut out),
        Mode::Converge => converge(config, &mut out),
        Mode::Diagnose => diagnose(config, &mut out),
    })?;

    if !out.plots.is_empty() {
        let script = plot_script(&out.plots);
        out.put("plot.py", script.as_bytes())?;
    }
    let manifest = manifest(config, out.files.clone())?;
    io::write_manifest(&out.dir, &manifest)?;
    Ok(RunSummary { output: out.dir, files: out.files })
}

fn manifest(config: &RunConfig, files: BTreeMap<String, String>) -> Result<RunManifest> {
    let tc = config.params()?.transport;
    Ok(RunManifest {
        tool: TOOL.to_string(),
        version: sirb_core::VERSION.to_string(),
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        mode: config.mode.name().to_string(),
        seed: config.seed,
        rng_algorithm: RNG_ALGORITHM.to_string(),
        derived: DerivedTransport { bias: tc.bias(), nu: tc.nu(), diffusion: tc.diffusion() },
        config_toml: config.to_toml(),
        config: serde_json::to_value(config).context("serialising config")?,
        files,
    })
}

fn initial_fields(config: &RunConfig, n: usize) -> Result<CompartmentFields> {
    Ok(CompartmentFields::project(&config.initial, n, DEFAULT_QUADRATURE_POINTS)?)
}

fn initial_state(config: &RunConfig) -> Result<SystemState> {
    let v0 = initial_fields(config, config.scaling.n)?;
    let (state, rounding) = SystemState::from_densities(&v0, &config.scaling)?;
    info!("initial rounding error per compartment {:?}", rounding.max_abs_error);
    Ok(state)
}

fn simulate(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let params = config.params()?;
    let grid = config.grid()?;
    let s0 = initial_state(config)?;
    let sc = config.stochastic;
    let runs = run_replicas(config.replicas, config.seed, |seed| match sc.method {
        Method::Ssa => simulate_ssa(&s0, &grid, &params, &config.scaling, seed, sc.record_events),
        Method::TauLeap => {
            simulate_tau_leap(&s0, &grid, sc.tau, &params, &config.scaling, seed).map(|r| {
                if r.rejections > 0 {
                    info!("replica {}: {} rejected leaps", seed.stream, r.rejections);
                }
                r.trajectory
            })
        }
    })?;
    for (r, traj) in runs.iter().enumerate() {
        let prefix = if config.replicas == 1 { String::new() } else { format!("replica_{r:04}/") };
        put_trajectory(out, &prefix, traj)?;
    }
    let paths: Vec<SampledPath> = runs.iter().map(Trajectory::rescaled).collect();
    out.plot("plot_mean.csv", "time", "S,I,R,B", &mean_table(&paths))
}

fn put_trajectory(out: &mut Outputs, prefix: &str, traj: &Trajectory) -> Result<()> {
    out.put(&format!("{prefix}{}", io::TRAJECTORY_CSV), io::trajectory_csv(&traj.rescaled()).as_bytes())?;
    out.put(&format!("{prefix}{}", io::SNAPSHOTS_FILE), &io::encode_snapshots(traj))?;
    if let Some(log) = &traj.event_log {
        out.put(&format!("{prefix}{}", io::EVENTS_FILE), &io::encode_event_log(log))?;
    }
    Ok(())
}

/// `time,S,I,R,B`: lattice averages, then averaged over the paths.
fn mean_table(paths: &[SampledPath]) -> String {
    let mut s = String::from("time,S,I,R,B\n");
    let Some(first) = paths.first() else { return s };
    for (k, t) in first.times.iter().enumerate() {
        let mut acc = [0.0; 4];
        for p in paths {
            let m = p.states[k].site_means();
            for c in 0..4 {
                acc[c] += m[c] / paths.len() as f64;
            }
        }
        let _ = writeln!(s, "{t},{},{},{},{}", acc[0], acc[1], acc[2], acc[3]);
    }
    s
}

/// `x,S,I,R,B` at the site midpoints.
fn profile_table(v: &CompartmentFields) -> String {
    let mut s = String::from("x,S,I,R,B\n");
    let n = v.n();
    for i in 0..n {
        let y = v.site(i);
        let _ = writeln!(s, "{},{},{},{},{}", (i as f64 + 0.5) / n as f64, y[0], y[1], y[2], y[3]);
    }
    s
}

fn pde(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let m = config.pde_resolution();
    let params = config.params_at(m)?;
    let rf = ReactionField::new(params, config.scaling.hk_ratio(), config.pde.coupling)?;
    let v0 = initial_fields(config, m)?;
    let res = integrate(&v0, &config.grid()?, &rf, &params.transport, config.step())?;
    info!("{} RK4 steps of {:e}, {} clamped entries", res.steps, res.dt, res.clamped);
    out.put(io::TRAJECTORY_CSV, io::trajectory_csv(&res.path).as_bytes())?;
    out.plot("plot_mean.csv", "time", "S,I,R,B", &mean_table(std::slice::from_ref(&res.path)))?;
    let last = res.path.last().context("empty sample grid")?;
    out.plot("plot_final.csv", "x", "S,I,R,B", &profile_table(last))
}

fn homogeneous(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let params = config.params()?;
    let rf = ReactionField::new(params, config.scaling.hk_ratio(), config.pde.coupling)?;
    let y0 = initial_fields(config, config.pde_resolution())?.site_means();
    let path = homogeneous_ode(y0, &config.grid()?, &rf, config.step())?;
    let mut s = String::from("time,S,I,R,B\n");
    for (t, y) in path.times.iter().zip(&path.states) {
        let _ = writeln!(s, "{t},{},{},{},{}", y[0], y[1], y[2], y[3]);
    }
    out.plot("homogeneous.csv", "time", "S,I,R,B", &s)
}

fn converge(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let params = config.params()?;
    let grid = config.grid()?;
    let setup = LlnSetup {
        initial: &config.initial,
        params: &params,
        grid: &grid,
        replicas: config.replicas,
        seed: config.seed,
        regime: config.converge.regime,
        step: config.step(),
    };
    let report = lln_experiment(&config.converge.ladder, &setup)?;
    for rung in &report.rungs {
        info!("N={} H={} K={}: median {:e}", rung.scaling.n, rung.scaling.h, rung.scaling.k, rung.median);
    }
    if !report.medians_strictly_decreasing() {
        log::warn!("medians are not strictly decreasing along the ladder");
    }
    out.put("report_convergence.csv", io::convergence_csv(&report).as_bytes())?;
    out.put("report_summary.csv", io::convergence_summary_csv(&report).as_bytes())?;
    let mut s = String::from("K,median,q25,q75\n");
    for r in &report.rungs {
        let _ = writeln!(s, "{},{},{},{}", r.scaling.k, r.median, r.q25, r.q75);
    }
    out.plot("plot_convergence.csv", "K", "median,q25,q75", &s)
}

fn diagnose(config: &RunConfig, out: &mut Outputs) -> Result<()> {
    let params = config.params()?;
    let grid = config.grid()?;
    let s0 = initial_state(config)?;
    let runs = run_replicas(config.replicas, config.seed, |seed| {
        simulate_ssa(&s0, &grid, &params, &config.scaling, seed, true)
    })?;
    let check = compensator_check(&runs, &params)?;
    out.put("report_martingale.csv", io::martingale_csv(&check).as_bytes())?;
    out.put("report_compensator.csv", io::compensator_csv(&check).as_bytes())?;

    let mut s = String::from("quantity,pass_fraction_3sigma\n");
    for c in Compartment::ALL {
        let _ = writeln!(s, "Z_{},{}", c.label(), check.z_pass_fraction(c, 3.0));
    }
    for (k, label) in QV_COMPONENTS.iter().enumerate() {
        let _ = writeln!(s, "QV_{label},{}", check.residual_pass_fraction(k, 3.0));
    }
    out.put("report_pass_fraction.csv", s.as_bytes())?;

    let mut p = String::from("time,observed_B,predicted_B\n");
    for (t, time) in check.times.iter().enumerate() {
        let mean = |v: &[Vec<[f64; 6]>]| v[t].iter().map(|x| x[3]).sum::<f64>() / check.n as f64;
        let _ = writeln!(p, "{time},{},{}", mean(&check.observed_mean), mean(&check.predicted_mean));
    }
    out.plot("plot_quadratic_variation.csv", "time", "observed_B,predicted_B", &p)
}

fn plot_script(plots: &[(String, String, String)]) -> String {
    let mut s = String::from(
        "#!/usr/bin/env python3\n\
         # Generated by sirb. Draws every plot_*.csv next to this script.\n\
         import csv, os, sys\n\
         import matplotlib.pyplot as plt\n\n\
         HERE = os.path.dirname(os.path.abspath(__file__))\n\
         PLOTS = [\n",
    );
    for (file, x, ys) in plots {
        let cols = ys.split(',').map(|c| format!("{c:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "    ({file:?}, {x:?}, [{cols}]),");
    }
    s.push_str(
        "]\n\n\
         for name, x, ys in PLOTS:\n\
         \x20   with open(os.path.join(HERE, name)) as f:\n\
         \x20       rows = list(csv.DictReader(f))\n\
         \x20   fig, ax = plt.subplots()\n\
         \x20   for y in ys:\n\
         \x20       ax.plot([float(r[x]) for r in rows], [float(r[y]) for r in rows], label=y)\n\
         \x20   ax.set_xlabel(x)\n\
         \x20   ax.legend()\n\
         \x20   fig.savefig(os.path.join(HERE, name.replace('.csv', '.png')), dpi=120)\n\
         \x20   if '--show' in sys.argv:\n\
         \x20       plt.show()\n",
    );
    s
}
