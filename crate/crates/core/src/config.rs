//! Run configuration in TOML.
//!
//! Every key is optional. Unknown keys and out-of-range values are rejected
//! with the dotted key in the message. A minimal example:
//!
//! ```toml
//! mode = "simulate"
//! seed = 7
//! horizon = 2.0
//!
//! [params]
//! beta = 1.5
//! p_out = 0.7
//!
//! [scaling]
//! n = 8
//! h = 1000
//! k = 1000
//!
//! [initial]
//! s = { preset = "fourier", m = 1, amplitude = 0.05, baseline = 0.9 }
//! i = 0.1
//! b = { preset = "bump", center = 0.5, width = 0.1, height = 1.0 }
//! ```

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Table, Value};

use crate::deterministic::{Coupling, StepSize};
use crate::diagnostics::{validate_ladder, Regime};
use crate::fields::{Compartment, InitialCondition, SampleGrid};
use crate::lattice::TransportCoefficients;
use crate::params::{EpidemicParams, ScalingParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Pde,
    Homogeneous,
    Converge,
    Diagnose,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Simulate, Mode::Pde, Mode::Homogeneous, Mode::Converge, Mode::Diagnose];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Pde => "pde",
            Mode::Homogeneous => "homogeneous",
            Mode::Converge => "converge",
            Mode::Diagnose => "diagnose",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Ssa,
    TauLeap,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ssa => "ssa",
            Method::TauLeap => "tau-leap",
        }
    }
}

/// Named initial profiles on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum Preset {
    Constant { value: f64 },
    /// `baseline + amplitude · sin(2πmx)`.
    Fourier { m: u32, amplitude: f64, baseline: f64 },
    /// Smooth periodic bump `baseline + height · exp((cos(2π(x−center)) − 1)/(2π·width)²)`.
    Bump { center: f64, width: f64, height: f64, baseline: f64 },
}

impl Preset {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Preset::Constant { value } => value,
            Preset::Fourier { m, amplitude, baseline } => baseline + amplitude * (2.0 * PI * m as f64 * x).sin(),
            Preset::Bump { center, width, height, baseline } => {
                let w = 2.0 * PI * width;
                baseline + height * (((2.0 * PI * (x - center)).cos() - 1.0) / (w * w)).exp()
            }
        }
    }

    /// Lowest value on the unit interval, used to reject negative profiles.
    pub fn minimum(&self) -> f64 {
        match *self {
            Preset::Constant { value } => value,
            Preset::Fourier { m, amplitude, baseline } => {
                if m == 0 {
                    baseline
                } else {
                    baseline - amplitude.abs()
                }
            }
            Preset::Bump { height, baseline, .. } => baseline + height.min(0.0),
        }
    }

    fn to_toml(self) -> String {
        match self {
            Preset::Constant { value } => format!("{value:?}"),
            Preset::Fourier { m, amplitude, baseline } => {
                format!("{{ preset = \"fourier\", m = {m}, amplitude = {amplitude:?}, baseline = {baseline:?} }}")
            }
            Preset::Bump { center, width, height, baseline } => format!(
                "{{ preset = \"bump\", center = {center:?}, width = {width:?}, height = {height:?}, baseline = {baseline:?} }}"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialSpec {
    pub s: Preset,
    pub i: Preset,
    pub r: Preset,
    pub b: Preset,
}

impl InitialSpec {
    pub fn preset(&self, c: Compartment) -> &Preset {
        match c {
            Compartment::S => &self.s,
            Compartment::I => &self.i,
            Compartment::R => &self.r,
            Compartment::B => &self.b,
        }
    }
}

impl InitialCondition for InitialSpec {
    fn value(&self, c: Compartment, x: f64) -> f64 {
        self.preset(c).eval(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rates {
    pub mu: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub beta: f64,
    pub p_over_w: f64,
    pub mu_b: f64,
    pub ell: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Equally spaced points including both ends.
    Points(usize),
    Interval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticSpec {
    pub method: Method,
    pub tau: f64,
    pub record_events: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PdeSpec {
    /// Lattice size of the deterministic solver; defaults to `scaling.n`.
    pub resolution: Option<usize>,
    /// Fixed RK4 step; automatic when absent.
    pub dt: Option<f64>,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeSpec {
    pub regime: Regime,
    pub ladder: Vec<ScalingParams>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub replicas: usize,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub horizon: f64,
    pub output: PathBuf,
    pub rates: Rates,
    pub scaling: ScalingParams,
    pub sampling: Sampling,
    pub initial: InitialSpec,
    pub stochastic: StochasticSpec,
    pub pde: PdeSpec,
    pub converge: ConvergeSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            seed: 0,
            replicas: 1,
            workers: 0,
            horizon: 1.0,
            output: PathBuf::from("out"),
            rates: Rates {
                mu: 0.2,
                alpha: 0.3,
                gamma: 0.5,
                rho: 0.4,
                beta: 1.5,
                p_over_w: 1.0,
                mu_b: 0.5,
                ell: 1.0,
                p_out: 0.7,
            },
            scaling: ScalingParams { n: 8, h: 1000, k: 1000 },
            sampling: Sampling::Points(11),
            initial: InitialSpec {
                s: Preset::Fourier { m: 1, amplitude: 0.05, baseline: 0.9 },
                i: Preset::Constant { value: 0.1 },
                r: Preset::Constant { value: 0.0 },
                b: Preset::Constant { value: 0.5 },
            },
            stochastic: StochasticSpec {
                method: Method::Ssa,
                tau: 0.01,
                record_events: true,
            },
            pde: PdeSpec {
                resolution: None,
                dt: None,
                coupling: Coupling::Coupled,
            },
            converge: ConvergeSpec {
                regime: Regime::Theorem1,
                ladder: vec![
                    ScalingParams { n: 8, h: 100, k: 100 },
                    ScalingParams { n: 8, h: 1000, k: 1000 },
                    ScalingParams { n: 8, h: 10_000, k: 10_000 },
                ],
            },
        }
    }
}

impl RunConfig {
    /// Rates with transport on the lattice of `scaling.n` sites.
    pub fn params(&self) -> Result<EpidemicParams> {
        self.params_at(self.scaling.n)
    }

    /// Rates with transport for an `n`-site lattice. The transport rate and
    /// bias given in the file belong to `scaling.n`; other lattices keep its
    /// continuum diffusion and velocity.
    pub fn params_at(&self, n: usize) -> Result<EpidemicParams> {
        let r = &self.rates;
        let tc = TransportCoefficients::new(r.ell, r.p_out, self.scaling.n)?.at_resolution(n)?;
        EpidemicParams::new(r.mu, r.alpha, r.gamma, r.rho, r.beta, r.p_over_w, r.mu_b, tc)
    }

    pub fn grid(&self) -> Result<SampleGrid> {
        match self.sampling {
            Sampling::Points(p) => SampleGrid::uniform(self.horizon, p),
            Sampling::Interval(dt) => {
                let mut times = vec![0.0];
                let mut k = 1u64;
                loop {
                    let t = dt * k as f64;
                    if t >= self.horizon * (1.0 - 1e-12) {
                        break;
                    }
                    times.push(t);
                    k += 1;
                }
                if self.horizon > 0.0 {
                    times.push(self.horizon);
                }
                SampleGrid::new(times, self.horizon)
            }
        }
    }

    pub fn pde_resolution(&self) -> usize {
        self.pde.resolution.unwrap_or(self.scaling.n)
    }

    pub fn step(&self) -> StepSize {
        self.pde.dt.map_or(StepSize::Auto, StepSize::Fixed)
    }

    /// Canonical TOML text with every value spelled out; parsing it gives
    /// back an equal configuration.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode = \"{}\"", self.mode.name());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "replicas = {}", self.replicas);
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "horizon = {:?}", self.horizon);
        let _ = writeln!(s, "output = {}", Value::String(self.output.to_string_lossy().into_owned()));
        let r = &self.rates;
        let _ = writeln!(s, "\n[params]");
        for (k, v) in [
            ("mu", r.mu),
            ("alpha", r.alpha),
            ("gamma", r.gamma),
            ("rho", r.rho),
            ("beta", r.beta),
            ("p_over_w", r.p_over_w),
            ("mu_b", r.mu_b),
            ("ell", r.ell),
            ("p_out", r.p_out),
        ] {
            let _ = writeln!(s, "{k} = {v:?}");
        }
        let _ = writeln!(s, "\n[scaling]\nn = {}\nh = {}\nk = {}", self.scaling.n, self.scaling.h, self.scaling.k);
        let _ = writeln!(s, "\n[sampling]");
        match self.sampling {
            Sampling::Points(p) => {
                let _ = writeln!(s, "points = {p}");
            }
            Sampling::Interval(dt) => {
                let _ = writeln!(s, "interval = {dt:?}");
            }
        }
        let _ = writeln!(s, "\n[initial]");
        for c in Compartment::ALL {
            let _ = writeln!(s, "{} = {}", c.label().to_lowercase(), self.initial.preset(c).to_toml());
        }
        let st = &self.stochastic;
        let _ = writeln!(
            s,
            "\n[stochastic]\nmethod = \"{}\"\ntau = {:?}\nrecord_events = {}",
            st.method.name(),
            st.tau,
            st.record_events
        );
        let _ = writeln!(s, "\n[pde]");
        if let Some(m) = self.pde.resolution {
            let _ = writeln!(s, "resolution = {m}");
        }
        if let Some(dt) = self.pde.dt {
            let _ = writeln!(s, "dt = {dt:?}");
        }
        let coupling = match self.pde.coupling {
            Coupling::Coupled => "coupled",
            Coupling::Decoupled => "decoupled",
        };
        let _ = writeln!(s, "coupling = \"{coupling}\"");
        let ladder: Vec<String> = self
            .converge
            .ladder
            .iter()
            .map(|r| format!("[{}, {}, {}]", r.n, r.h, r.k))
            .collect();
        let _ = writeln!(
            s,
            "\n[converge]\nregime = \"{}\"\nladder = [{}]",
            self.converge.regime,
            ladder.join(", ")
        );
        s
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    let mut cfg = RunConfig::default();
    let mut top = Section::new("", &table);

    if let Some(v) = top.str("mode")? {
        cfg.mode = Mode::from_name(v).ok_or_else(|| {
            Error::config("mode", format!("unknown mode `{v}` (simulate, pde, homogeneous, converge, diagnose)"))
        })?;
    }
    if let Some(v) = top.uint("seed")? {
        cfg.seed = v;
    }
    if let Some(v) = top.uint("replicas")? {
        if v == 0 {
            return Err(Error::config("replicas", "must be at least 1"));
        }
        cfg.replicas = to_usize("replicas", v)?;
    }
    if let Some(v) = top.uint("workers")? {
        cfg.workers = to_usize("workers", v)?;
    }
    if let Some(v) = top.float("horizon")? {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config("horizon", format!("must be finite and >= 0, got {v}")));
        }
        cfg.horizon = v;
    }
    if let Some(v) = top.str("output")? {
        cfg.output = PathBuf::from(v);
    }

    if let Some(t) = top.table("params")? {
        let mut sec = Section::new("params", t);
        let r = &mut cfg.rates;
        for (key, slot) in [
            ("mu", &mut r.mu),
            ("alpha", &mut r.alpha),
            ("gamma", &mut r.gamma),
            ("rho", &mut r.rho),
            ("beta", &mut r.beta),
            ("p_over_w", &mut r.p_over_w),
            ("mu_b", &mut r.mu_b),
            ("ell", &mut r.ell),
            ("p_out", &mut r.p_out),
        ] {
            if let Some(v) = sec.float(key)? {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::config(sec.key(key), format!("rate must be finite and >= 0, got {v}")));
                }
                *slot = v;
            }
        }
        if !(0.0..=1.0).contains(&r.p_out) {
            return Err(Error::config("params.p_out", format!("probability out of range [0, 1]: {}", r.p_out)));
        }
        sec.finish()?;
    }

    if let Some(t) = top.table("scaling")? {
        let mut sec = Section::new("scaling", t);
        if let Some(v) = sec.uint("n")? {
            cfg.scaling.n = to_usize("scaling.n", v)?;
        }
        if let Some(v) = sec.uint("h")? {
            cfg.scaling.h = v;
        }
        if let Some(v) = sec.uint("k")? {
            cfg.scaling.k = v;
        }
        sec.finish()?;
    }
    cfg.scaling = ScalingParams::new(cfg.scaling.n, cfg.scaling.h, cfg.scaling.k)
        .map_err(|e| Error::config("scaling", e.to_string()))?;

    if let Some(t) = top.table("sampling")? {
        let mut sec = Section::new("sampling", t);
        let points = sec.uint("points")?;
        let interval = sec.float("interval")?;
        cfg.sampling = match (points, interval) {
            (Some(_), Some(_)) => return Err(Error::config("sampling", "give either `points` or `interval`, not both")),
            (Some(p), None) if p >= 1 => Sampling::Points(to_usize("sampling.points", p)?),
            (Some(_), None) => return Err(Error::config("sampling.points", "must be at least 1")),
            (None, Some(dt)) if dt.is_finite() && dt > 0.0 => Sampling::Interval(dt),
            (None, Some(dt)) => return Err(Error::config("sampling.interval", format!("must be positive, got {dt}"))),
            (None, None) => cfg.sampling,
        };
        sec.finish()?;
    }

    if let Some(t) = top.table("initial")? {
        let mut sec = Section::new("initial", t);
        for c in Compartment::ALL {
            let key = c.label().to_lowercase();
            if let Some(v) = sec.raw(&key) {
                let preset = parse_preset(&sec.key(&key), v)?;
                match c {
                    Compartment::S => cfg.initial.s = preset,
                    Compartment::I => cfg.initial.i = preset,
                    Compartment::R => cfg.initial.r = preset,
                    Compartment::B => cfg.initial.b = preset,
                }
            }
        }
        sec.finish()?;
    }
    for c in Compartment::ALL {
        let p = cfg.initial.preset(c);
        if p.minimum() < 0.0 {
            return Err(Error::config(
                format!("initial.{}", c.label().to_lowercase()),
                format!("profile takes negative values (minimum {})", p.minimum()),
            ));
        }
    }

    if let Some(t) = top.table("stochastic")? {
        let mut sec = Section::new("stochastic", t);
        if let Some(v) = sec.str("method")? {
            cfg.stochastic.method = match v {
                "ssa" => Method::Ssa,
                "tau-leap" => Method::TauLeap,
                other => {
                    return Err(Error::config("stochastic.method", format!("unknown method `{other}` (ssa, tau-leap)")))
                }
            };
        }
        if let Some(v) = sec.float("tau")? {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("stochastic.tau", format!("must be positive, got {v}")));
            }
            cfg.stochastic.tau = v;
        }
        if let Some(v) = sec.bool("record_events")? {
            cfg.stochastic.record_events = v;
        }
        sec.finish()?;
    }

    if let Some(t) = top.table("pde")? {
        let mut sec = Section::new("pde", t);
        if let Some(v) = sec.uint("resolution")? {
            if v < 3 {
                return Err(Error::config("pde.resolution", "needs at least 3 sites"));
            }
            cfg.pde.resolution = Some(to_usize("pde.resolution", v)?);
        }
        if let Some(v) = sec.float("dt")? {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("pde.dt", format!("must be positive, got {v}")));
            }
            cfg.pde.dt = Some(v);
        }
        if let Some(v) = sec.str("coupling")? {
            cfg.pde.coupling = match v {
                "coupled" => Coupling::Coupled,
                "decoupled" => Coupling::Decoupled,
                other => {
                    return Err(Error::config("pde.coupling", format!("unknown coupling `{other}` (coupled, decoupled)")))
                }
            };
        }
        sec.finish()?;
    }

    if let Some(t) = top.table("converge")? {
        let mut sec = Section::new("converge", t);
        if let Some(v) = sec.str("regime")? {
            cfg.converge.regime = v.parse().map_err(|e: Error| Error::config("converge.regime", e.to_string()))?;
        }
        if let Some(v) = sec.raw("ladder") {
            cfg.converge.ladder = parse_ladder(v)?;
        }
        sec.finish()?;
    }
    top.finish()?;

    // check that the transport can be built and re-expressed where it is needed
    cfg.params().map_err(|e| Error::config("params", e.to_string()))?;
    if let Some(m) = cfg.pde.resolution {
        cfg.params_at(m).map_err(|e| Error::config("pde.resolution", e.to_string()))?;
    }
    for rung in &cfg.converge.ladder {
        cfg.params_at(rung.n).map_err(|e| Error::config("converge.ladder", e.to_string()))?;
    }
    validate_ladder(&cfg.converge.ladder, cfg.converge.regime)
        .map_err(|e| Error::config("converge.ladder", e.to_string()))?;
    cfg.grid().map_err(|e| Error::config("sampling", e.to_string()))?;
    Ok(cfg)
}

fn to_usize(key: &str, v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::config(key, format!("{v} is too large")))
}

fn parse_preset(key: &str, v: &Value) -> Result<Preset> {
    match v {
        Value::Integer(_) | Value::Float(_) => Ok(Preset::Constant { value: number(key, v)? }),
        Value::Table(t) => {
            let mut sec = Section::new(key, t);
            let name = sec
                .str("preset")?
                .ok_or_else(|| Error::config(format!("{key}.preset"), "missing preset name"))?
                .to_string();
            let preset = match name.as_str() {
                "constant" => Preset::Constant { value: sec.float("value")?.unwrap_or(0.0) },
                "fourier" => {
                    let m = sec.uint("m")?.unwrap_or(1);
                    Preset::Fourier {
                        m: u32::try_from(m).map_err(|_| Error::config(sec.key("m"), "mode number too large"))?,
                        amplitude: sec.float("amplitude")?.unwrap_or(0.0),
                        baseline: sec.float("baseline")?.unwrap_or(0.0),
                    }
                }
                "bump" => {
                    let width = sec.float("width")?.unwrap_or(0.1);
                    if !(width > 0.0) {
                        return Err(Error::config(sec.key("width"), format!("must be positive, got {width}")));
                    }
                    Preset::Bump {
                        center: sec.float("center")?.unwrap_or(0.5),
                        width,
                        height: sec.float("height")?.unwrap_or(1.0),
                        baseline: sec.float("baseline")?.unwrap_or(0.0),
                    }
                }
                other => {
                    return Err(Error::config(
                        format!("{key}.preset"),
                        format!("unknown preset `{other}` (constant, fourier, bump)"),
                    ))
                }
            };
            sec.finish()?;
            Ok(preset)
        }
        _ => Err(Error::config(key, "expected a number or a preset table")),
    }
}

fn parse_ladder(v: &Value) -> Result<Vec<ScalingParams>> {
    const KEY: &str = "converge.ladder";
    let rungs = v.as_array().ok_or_else(|| Error::config(KEY, "expected an array of [N, H, K] triples"))?;
    rungs
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let key = format!("{KEY}[{j}]");
            let triple = r
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| Error::config(&key, "expected [N, H, K]"))?;
            let ints = triple
                .iter()
                .map(|x| match x {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(Error::config(&key, "entries must be non-negative integers")),
                })
                .collect::<Result<Vec<_>>>()?;
            ScalingParams::new(to_usize(&key, ints[0])?, ints[1], ints[2]).map_err(|e| Error::config(&key, e.to_string()))
        })
        .collect()
}

fn number(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::config(key, format!("expected a number, found {}", v.type_str()))),
    }
}

/// One TOML table being consumed; remembers which keys were read so that
/// leftovers can be reported as unknown.
struct Section<'a> {
    prefix: String,
    table: &'a Table,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(prefix: &str, table: &'a Table) -> Self {
        Self {
            prefix: prefix.to_string(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn raw(&mut self, k: &str) -> Option<&'a Value> {
        self.used.insert(k.to_string());
        self.table.get(k)
    }

    fn float(&mut self, k: &str) -> Result<Option<f64>> {
        let key = self.key(k);
        self.raw(k).map(|v| number(&key, v)).transpose()
    }

    fn uint(&mut self, k: &str) -> Result<Option<u64>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(v) => Err(Error::config(key, format!("expected a non-negative integer, found {v}"))),
        }
    }

    fn str(&mut self, k: &str) -> Result<Option<&'a str>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(Error::config(key, format!("expected a string, found {}", v.type_str()))),
        }
    }

    fn bool(&mut self, k: &str) -> Result<Option<bool>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(Error::config(key, format!("expected true or false, found {}", v.type_str()))),
        }
    }

    fn table(&mut self, k: &str) -> Result<Option<&'a Table>> {
        let key = self.key(k);
        match self.raw(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(v) => Err(Error::config(key, format!("expected a table, found {}", v.type_str()))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.used.contains(*k)) {
            Some(k) => Err(Error::config(self.key(k), "unknown key")),
            None => Ok(()),
        }
    }
}
