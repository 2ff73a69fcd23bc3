//! Deterministic limits: the reaction field, the lattice ODE system driven by
//! `A_N`, the homogeneous ODE and exact solutions of the linear bacteria
//! equation.

use std::f64::consts::PI;

use serde::Serialize;

use crate::fields::{Compartment, CompartmentFields, FieldSelection, InitialCondition, SampleGrid, SampledPath};
use crate::lattice::{transport_apply_into, LatticeField, TransportCoefficients, DEFAULT_QUADRATURE_POINTS};
use crate::params::EpidemicParams;
use crate::{Error, Result};

/// Values above this magnitude are treated as a blow-up.
pub const BLOWUP_THRESHOLD: f64 = 1e15;

/// Safety factor in the automatic step size.
pub const STABILITY_SAFETY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Bacteria are shed by infected humans at rate `(H/K)(p/W)`.
    Coupled,
    /// The `H/K → 0` limit: no shedding term in the bacteria equation.
    Decoupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReactionField {
    pub params: EpidemicParams,
    pub hk_ratio: f64,
    pub mode: Coupling,
}

impl ReactionField {
    pub fn new(params: EpidemicParams, hk_ratio: f64, mode: Coupling) -> Result<Self> {
        params.validate()?;
        if !hk_ratio.is_finite() || hk_ratio < 0.0 {
            return Err(Error::domain(format!("H/K must be finite and >= 0, got {hk_ratio}")));
        }
        Ok(Self { params, hk_ratio, mode })
    }

    pub fn coupled(params: EpidemicParams, hk_ratio: f64) -> Result<Self> {
        Self::new(params, hk_ratio, Coupling::Coupled)
    }

    pub fn decoupled(params: EpidemicParams) -> Result<Self> {
        Self::new(params, 0.0, Coupling::Decoupled)
    }

    /// Coefficient of `y₂` in `F_B`; zero when decoupled.
    pub fn source_coefficient(&self) -> f64 {
        match self.mode {
            Coupling::Coupled => self.hk_ratio * self.params.p_over_w,
            Coupling::Decoupled => 0.0,
        }
    }

    /// Per-component constants `M_c` with `|F_c(y)| ≤ M_c |y|` on the positive
    /// cone, using `y₄/(1+y₄) ≤ 1` and `y₄/(1+y₄)·y₁ ≤ y₁`.
    pub fn component_growth_constants(&self) -> [f64; 4] {
        let p = &self.params;
        let c = self.source_coefficient();
        [
            (p.beta.powi(2) + p.mu.powi(2) + (p.mu + p.rho).powi(2)).sqrt(),
            (p.beta.powi(2) + (p.gamma + p.alpha + p.mu).powi(2)).sqrt(),
            (p.gamma.powi(2) + (p.mu + p.rho).powi(2)).sqrt(),
            (p.mu_b.powi(2) + c * c).sqrt(),
        ]
    }

    /// Euclidean growth constant `M` with `|F(y)| ≤ M|y|` for `y ≥ 0`.
    pub fn growth_constant(&self) -> f64 {
        self.component_growth_constants().iter().map(|m| m * m).sum::<f64>().sqrt()
    }

    /// Same bound in the max norm: the largest absolute row sum.
    pub fn growth_constant_sup(&self) -> f64 {
        let p = &self.params;
        [
            p.beta + 2.0 * p.mu + p.rho,
            p.beta + p.gamma + p.alpha + p.mu,
            p.gamma + p.mu + p.rho,
            p.mu_b + self.source_coefficient(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Local Lipschitz bound of `F` on the box `[0, radius]⁴` in the max norm.
    pub fn lipschitz_sup(&self, radius: f64) -> f64 {
        let p = &self.params;
        let infection = p.beta * (1.0 + radius.max(0.0));
        [
            infection + 2.0 * p.mu + p.rho,
            infection + p.gamma + p.alpha + p.mu,
            p.gamma + p.mu + p.rho,
            p.mu_b + self.source_coefficient(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    #[inline]
    fn eval(&self, y: [f64; 4]) -> [f64; 4] {
        let p = &self.params;
        let infection = p.beta * y[3] / (1.0 + y[3]) * y[0];
        [
            p.mu * y[1] + (p.mu + p.rho) * y[2] - infection,
            infection - (p.gamma + p.alpha + p.mu) * y[1],
            p.gamma * y[1] - (p.mu + p.rho) * y[2],
            -p.mu_b * y[3] + self.source_coefficient() * y[1],
        ]
    }
}

/// `F(y)` for `y = (S, I, R, B) ≥ 0`.
pub fn reaction(y: [f64; 4], rf: &ReactionField) -> Result<[f64; 4]> {
    if y.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::domain(format!("reaction field needs finite y >= 0, got {y:?}")));
    }
    Ok(rf.eval(y))
}

fn check_nonnegative(v: &CompartmentFields) -> Result<()> {
    for c in Compartment::ALL {
        if let Some((i, x)) = v.get(c).values().iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0) {
            return Err(Error::domain(format!(
                "{} at site {} is {x}; deterministic fields must be finite and >= 0",
                c.label(),
                i + 1
            )));
        }
    }
    Ok(())
}

fn check_transport(n: usize, tc: &TransportCoefficients) -> Result<()> {
    if tc.n() != n {
        return Err(Error::Mismatch(format!("fields on {n} sites, transport built for {}", tc.n())));
    }
    Ok(())
}

/// Right-hand side on the flat layout `[S.., I.., R.., B..]`.
fn rhs_flat(v: &[f64], rf: &ReactionField, tc: &TransportCoefficients, out: &mut [f64]) {
    let n = v.len() / 4;
    for i in 0..n {
        let f = rf.eval([v[i], v[n + i], v[2 * n + i], v[3 * n + i]]);
        out[i] = f[0];
        out[n + i] = f[1];
        out[2 * n + i] = f[2];
        out[3 * n + i] = f[3];
    }
    let mut transport = vec![0.0; n];
    transport_apply_into(&v[3 * n..], tc, &mut transport);
    for (o, t) in out[3 * n..].iter_mut().zip(&transport) {
        *o += t;
    }
}

/// `F(v)` sitewise plus `A_N` acting on the bacteria field.
pub fn rhs_discrete(v: &CompartmentFields, rf: &ReactionField, tc: &TransportCoefficients) -> Result<CompartmentFields> {
    check_nonnegative(v)?;
    check_transport(v.n(), tc)?;
    let flat = v.to_flat();
    let mut out = vec![0.0; flat.len()];
    rhs_flat(&flat, rf, tc, &mut out);
    CompartmentFields::from_flat(&out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepSize {
    /// `dt = 0.5 / (4·D·M² + |ν|·M + L)`, `L` a Lipschitz bound of `F`.
    Auto,
    Fixed(f64),
}

/// Output of an RK4 integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub path: SampledPath,
    /// Entries set from a negative roundoff value back to zero.
    pub clamped: u64,
    /// Most negative value seen before clamping (0 if none).
    pub min_before_clamp: f64,
    pub steps: u64,
    pub dt: f64,
}

struct Rk4Stats {
    clamped: u64,
    min_before_clamp: f64,
    steps: u64,
}

/// Classical RK4 from `y0` over `grid`, with sub-steps of at most `dt`
/// landing exactly on each sample time. Negative values after a step are
/// clamped to zero and counted.
fn rk4_drive(
    y0: Vec<f64>,
    grid: &SampleGrid,
    dt: f64,
    mut rhs: impl FnMut(&[f64], &mut [f64]),
) -> Result<(Vec<Vec<f64>>, Rk4Stats)> {
    let len = y0.len();
    let mut y = y0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let mut stats = Rk4Stats {
        clamped: 0,
        min_before_clamp: 0.0,
        steps: 0,
    };
    let mut out = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    for &target in grid.times() {
        let span = target - t;
        if span > 0.0 {
            let substeps = (span / dt).ceil().max(1.0) as u64;
            let h = span / substeps as f64;
            for s in 0..substeps {
                rhs(&y, &mut k1);
                for j in 0..len {
                    tmp[j] = y[j] + 0.5 * h * k1[j];
                }
                rhs(&tmp, &mut k2);
                for j in 0..len {
                    tmp[j] = y[j] + 0.5 * h * k2[j];
                }
                rhs(&tmp, &mut k3);
                for j in 0..len {
                    tmp[j] = y[j] + h * k3[j];
                }
                rhs(&tmp, &mut k4);
                for j in 0..len {
                    let v = y[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                    if !v.is_finite() || v.abs() > BLOWUP_THRESHOLD {
                        return Err(Error::Blowup {
                            time: t + (s + 1) as f64 * h,
                            detail: format!("component {j} reached {v} with dt = {h}"),
                        });
                    }
                    if v < 0.0 {
                        stats.clamped += 1;
                        stats.min_before_clamp = stats.min_before_clamp.min(v);
                        y[j] = 0.0;
                    } else {
                        y[j] = v;
                    }
                }
                stats.steps += 1;
            }
            t = target;
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

fn resolve_dt(step: StepSize, auto: impl FnOnce() -> f64) -> Result<f64> {
    let dt = match step {
        StepSize::Fixed(dt) => dt,
        StepSize::Auto => auto(),
    };
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive and finite, got {dt}")));
    }
    Ok(dt)
}

/// Automatic step for a lattice of `m` sites and data bounded by `radius`.
pub fn auto_dt(rf: &ReactionField, tc: &TransportCoefficients, m: usize, radius: f64) -> f64 {
    let mf = m as f64;
    let denom = 4.0 * tc.diffusion() * mf * mf + tc.nu().abs() * mf + rf.lipschitz_sup(radius);
    if denom > 0.0 {
        STABILITY_SAFETY / denom
    } else {
        f64::INFINITY
    }
}

/// Integrates the lattice system `dv/dt = A_N v_B + F(v)` with RK4.
pub fn integrate(
    initial: &CompartmentFields,
    grid: &SampleGrid,
    rf: &ReactionField,
    tc: &TransportCoefficients,
    step: StepSize,
) -> Result<Integration> {
    check_nonnegative(initial)?;
    check_transport(initial.n(), tc)?;
    let dt = resolve_dt(step, || auto_dt(rf, tc, initial.n(), initial.sup_norm()).min(grid.horizon().max(1.0)))?;
    let (states, stats) = rk4_drive(initial.to_flat(), grid, dt, |y, out| rhs_flat(y, rf, tc, out))?;
    let states = states
        .iter()
        .map(|flat| CompartmentFields::from_flat(flat))
        .collect::<Result<Vec<_>>>()?;
    Ok(Integration {
        path: SampledPath {
            times: grid.times().to_vec(),
            states,
        },
        clamped: stats.clamped,
        min_before_clamp: stats.min_before_clamp,
        steps: stats.steps,
        dt,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogeneousPath {
    pub times: Vec<f64>,
    pub states: Vec<[f64; 4]>,
    pub clamped: u64,
    pub steps: u64,
    pub dt: f64,
}

/// The spatially homogeneous system, integrated with the same RK4 scheme as
/// [`integrate`]. With the same `dt` it reproduces `integrate` on constant
/// data site by site.
pub fn homogeneous_ode(initial: [f64; 4], grid: &SampleGrid, rf: &ReactionField, step: StepSize) -> Result<HomogeneousPath> {
    reaction(initial, rf)?;
    let radius = initial.iter().fold(0.0f64, |a, b| a.max(*b));
    let dt = resolve_dt(step, || {
        let l = rf.lipschitz_sup(radius);
        if l > 0.0 {
            (STABILITY_SAFETY / l).min(grid.horizon().max(1.0))
        } else {
            grid.horizon().max(1.0)
        }
    })?;
    let (states, stats) = rk4_drive(initial.to_vec(), grid, dt, |y, out| {
        out.copy_from_slice(&rf.eval([y[0], y[1], y[2], y[3]]));
    })?;
    Ok(HomogeneousPath {
        times: grid.times().to_vec(),
        states: states.into_iter().map(|v| [v[0], v[1], v[2], v[3]]).collect(),
        clamped: stats.clamped,
        steps: stats.steps,
        dt,
    })
}

/// Exact solution `B(t, x)` of `∂B/∂t = D ∂²B/∂x² − ν ∂B/∂x − μ_B B` with
/// `B(0, x) = amplitude · sin(2πmx)`, using the continuum `D` and `ν` of `tc`.
pub fn linear_oracle(m: u32, amplitude: f64, tc: &TransportCoefficients, mu_b: f64, t: f64, x: f64) -> f64 {
    let k = 2.0 * PI * m as f64;
    amplitude * (-(mu_b + tc.diffusion() * k * k) * t).exp() * (k * (x - tc.nu() * t)).sin()
}

/// Site averages of [`linear_oracle`] on an `n`-site lattice, in closed form.
pub fn linear_oracle_projected(
    m: u32,
    amplitude: f64,
    tc: &TransportCoefficients,
    mu_b: f64,
    t: f64,
    n: usize,
) -> Result<LatticeField> {
    if m == 0 {
        return LatticeField::zeros(n);
    }
    let k = 2.0 * PI * m as f64;
    let decay = amplitude * (-(mu_b + tc.diffusion() * k * k) * t).exp();
    let shift = tc.nu() * t;
    let nf = n as f64;
    LatticeField::from_fn(n, |i| {
        let a = i as f64 / nf - shift;
        let b = (i + 1) as f64 / nf - shift;
        decay * nf * ((k * a).cos() - (k * b).cos()) / k
    })
}

/// Exact solution of the lattice equation `dB/dt = A_N B − μ_B B` from
/// `B_i(0) = amplitude · sin(2πm·i/N + phase)`. Discrete Fourier modes are
/// eigenvectors of `A_N`, so only the decay rate and phase speed change.
pub fn lattice_mode_solution(
    m: u32,
    amplitude: f64,
    phase: f64,
    tc: &TransportCoefficients,
    mu_b: f64,
    t: f64,
) -> Result<LatticeField> {
    let n = tc.n();
    let nf = n as f64;
    let theta = 2.0 * PI * m as f64 / nf;
    let decay = mu_b + 2.0 * tc.diffusion() * nf * nf * (1.0 - theta.cos());
    let drift = tc.nu() * nf * theta.sin();
    let a = amplitude * (-decay * t).exp();
    LatticeField::from_fn(n, |i| a * (theta * i as f64 + phase - drift * t).sin())
}

/// Sup distance, over the sample grid and all compartments, between the
/// solution on `m_coarse` sites and the solution on `2·m_coarse` sites
/// averaged back onto the coarse lattice. Each resolution uses its own
/// lattice transport with the continuum `D` and `ν` of `tc`.
pub fn refine_compare(
    initial: &dyn InitialCondition,
    m_coarse: usize,
    rf: &ReactionField,
    tc: &TransportCoefficients,
    grid: &SampleGrid,
    step: StepSize,
) -> Result<f64> {
    let m_fine = 2 * m_coarse;
    let run = |m: usize| -> Result<Integration> {
        let tcm = tc.at_resolution(m)?;
        let v0 = CompartmentFields::project(initial, m, DEFAULT_QUADRATURE_POINTS)?;
        integrate(&v0, grid, rf, &tcm, step)
    };
    let coarse = run(m_coarse)?;
    let fine = run(m_fine)?;
    let mut worst = 0.0f64;
    for (c, f) in coarse.path.states.iter().zip(&fine.path.states) {
        worst = worst.max(c.max_abs_diff(&f.restrict(m_coarse)?, FieldSelection::All)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{drift_from_events, SystemState};
    use crate::ScalingParams;

    fn params(n: usize) -> EpidemicParams {
        let tc = TransportCoefficients::new(1.0, 0.7, n).unwrap();
        EpidemicParams::new(0.2, 0.3, 0.5, 0.4, 1.5, 1.0, 0.5, tc).unwrap()
    }

    #[test]
    fn disease_free_and_zero_are_fixed_points() {
        let rf = ReactionField::coupled(params(4), 1.0).unwrap();
        assert_eq!(reaction([1.0, 0.0, 0.0, 0.0], &rf).unwrap(), [0.0; 4]);
        assert_eq!(reaction([0.0; 4], &rf).unwrap(), [0.0; 4]);
        assert!(matches!(reaction([1.0, -0.1, 0.0, 0.0], &rf), Err(Error::Domain(_))));
    }

    #[test]
    fn decoupled_drops_the_source() {
        let rf = ReactionField::decoupled(params(4)).unwrap();
        let f = reaction([0.5, 0.7, 0.1, 0.2], &rf).unwrap();
        assert_eq!(f[3], -0.5 * 0.2);
    }

    #[test]
    fn rhs_matches_event_drift() {
        let n = 5;
        let sc = ScalingParams::new(n, 300, 200).unwrap();
        let p = params(n);
        let state = SystemState::new(
            vec![250, 280, 300, 290, 260],
            vec![30, 10, 0, 5, 40],
            vec![3, 0, 7, 1, 2],
            vec![100, 0, 50, 220, 10],
        )
        .unwrap();
        let v = state.rescaled(&sc);
        let rf = ReactionField::coupled(p, sc.hk_ratio()).unwrap();
        let a = rhs_discrete(&v, &rf, &p.transport).unwrap();
        let b = drift_from_events(&state, &p, &sc);
        assert!(a.max_abs_diff(&b, FieldSelection::All).unwrap() < 1e-12);
    }

    #[test]
    fn beta_zero_gives_pure_decay() {
        let mut p = params(3);
        p.beta = 0.0;
        let rf = ReactionField::coupled(p, 1.0).unwrap();
        let grid = SampleGrid::uniform(2.0, 5).unwrap();
        let path = homogeneous_ode([0.8, 0.0, 0.0, 1.3], &grid, &rf, StepSize::Fixed(1e-3)).unwrap();
        for (t, y) in path.times.iter().zip(&path.states) {
            let exact = 1.3 * (-0.5 * t).exp();
            assert!((y[3] - exact).abs() < 1e-12, "t = {t}");
            assert_eq!(y[1], 0.0);
        }
    }

    #[test]
    fn integrate_matches_lattice_mode() {
        let tc = TransportCoefficients::from_continuum(0.01, 0.1, 64).unwrap();
        let mut p = params(64);
        p.transport = tc;
        p.mu_b = 1.0;
        let rf = ReactionField::decoupled(p).unwrap();
        // constant baseline keeps the data positive; it decays as e^{-μ_B t}
        let wave0 = lattice_mode_solution(1, 0.3, 0.2, &tc, 1.0, 0.0).unwrap();
        let b0 = LatticeField::new(wave0.values().iter().map(|v| v + 1.0).collect()).unwrap();
        let zero = LatticeField::zeros(64).unwrap();
        let v0 = CompartmentFields::new(zero.clone(), zero.clone(), zero, b0).unwrap();
        let grid = SampleGrid::uniform(1.0, 3).unwrap();
        let out = integrate(&v0, &grid, &rf, &tc, StepSize::Fixed(1e-3)).unwrap();
        let wave = lattice_mode_solution(1, 0.3, 0.2, &tc, 1.0, 1.0).unwrap();
        let got = out.path.last().unwrap().get(Compartment::B);
        let base = (-1.0f64).exp();
        let err = got.values().iter().zip(wave.values()).map(|(g, w)| (g - base - w).abs()).fold(0.0, f64::max);
        assert!(err / wave.sup_norm() < 1e-6, "{err}");
    }

    #[test]
    fn oracle_pinned_amplitude_factor() {
        // e^{−(1 + 0.01·4π²)·0.5}
        let tc = TransportCoefficients::from_continuum(0.01, 0.1, 64).unwrap();
        let decay = (-(1.0 + 0.01 * 4.0 * PI * PI) * 0.5f64).exp();
        assert!((decay - 0.4978820447115107).abs() < 1e-12, "{decay}");
        let x = 0.25 + tc.nu() * 0.5;
        assert!((linear_oracle(1, 1.0, &tc, 1.0, 0.5, x) - decay).abs() < 1e-12);
        assert_eq!(linear_oracle(1, 2.0, &tc, 1.0, 0.0, 0.125), 2.0 * (PI / 4.0).sin());
    }

    #[test]
    fn projected_oracle_is_site_average() {
        let tc = TransportCoefficients::from_continuum(0.02, 0.3, 16).unwrap();
        let closed = linear_oracle_projected(2, 0.7, &tc, 0.4, 0.6, 16).unwrap();
        let quad = crate::lattice::project(|x| linear_oracle(2, 0.7, &tc, 0.4, 0.6, x), 16, 4000).unwrap();
        assert!(closed.max_abs_diff(&quad).unwrap() < 1e-8);
    }
}
