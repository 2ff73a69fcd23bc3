use serde::Serialize;

use crate::fields::{Compartment, CompartmentFields};
use crate::lattice::{wrap, LatticeField};
use crate::params::{EpidemicParams, ScalingParams};
use crate::stats::{mean_stderr, passes_mean_zero};
use crate::stochastic::{renormalisation, EventKind, SystemState, Trajectory};
use crate::{Error, Result};

/// Labels of the quadratic-variation components: the four squared
/// increments, then the bacterial cross products with the next and previous
/// sites.
pub const QV_COMPONENTS: [&str; 6] = ["S", "I", "R", "B", "B_next", "B_prev"];

/// Quadratic-variation rates of the rescaled process, in density units.
/// Multiplied by `1/H` (humans) or `1/K` (bacteria) they give the
/// compensators of the squared jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareAmplitudes {
    pub s: LatticeField,
    pub i: LatticeField,
    pub r: LatticeField,
    /// `|A_N|² + |F_B|²`.
    pub b: LatticeField,
    pub transport: LatticeField,
    pub reaction_b: LatticeField,
    /// Rate of `δB_i · δB_{i+1}`, which is negative.
    pub cross_next: LatticeField,
    /// Rate of `δB_i · δB_{i−1}`.
    pub cross_prev: LatticeField,
}

#[inline]
fn densities(state: &SystemState, scaling: &ScalingParams, site: usize) -> [f64; 4] {
    let h = scaling.h as f64;
    let k = scaling.k as f64;
    [
        state.count(Compartment::S, site) as f64 / h,
        state.count(Compartment::I, site) as f64 / h,
        state.count(Compartment::R, site) as f64 / h,
        state.count(Compartment::B, site) as f64 / k,
    ]
}

/// `[S, I, R, B, B_next, B_prev]` amplitudes at one site.
#[inline]
fn site_amplitudes(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams, site: usize) -> [f64; 6] {
    let n = state.n();
    let [us, ui, ur, ub] = densities(state, scaling, site);
    let ub_next = state.count(Compartment::B, wrap(site as isize + 1, n)) as f64 / scaling.k as f64;
    let ub_prev = state.count(Compartment::B, wrap(site as isize - 1, n)) as f64 / scaling.k as f64;
    let p = params;
    let tc = &p.transport;
    let (ell, p_out, p_in) = (tc.ell(), tc.p_out(), tc.p_in());
    let infection = p.beta * ub / (1.0 + ub) * us;
    let transport = ell * (p_in * ub_next + ub + p_out * ub_prev);
    let reaction_b = p.mu_b * ub + scaling.hk_ratio() * p.p_over_w * ui;
    [
        2.0 * p.mu * us + p.mu * ui + (p.mu + p.rho) * ur + infection,
        infection + (p.mu + p.alpha + p.gamma) * ui,
        p.gamma * ui + (p.mu + p.rho) * ur,
        transport + reaction_b,
        -ell * (p_out * ub + p_in * ub_next),
        -ell * (p_in * ub + p_out * ub_prev),
    ]
}

/// Debit `ψ = F + A_N` (on bacteria) at one site, with `F` coupled through
/// `H/K`.
#[inline]
fn site_debit(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams, site: usize) -> [f64; 4] {
    let n = state.n();
    let [us, ui, ur, ub] = densities(state, scaling, site);
    let ub_next = state.count(Compartment::B, wrap(site as isize + 1, n)) as f64 / scaling.k as f64;
    let ub_prev = state.count(Compartment::B, wrap(site as isize - 1, n)) as f64 / scaling.k as f64;
    let p = params;
    let tc = &p.transport;
    let infection = p.beta * ub / (1.0 + ub) * us;
    let transport = tc.ell() * ((ub_prev - ub) * tc.p_out() + (ub_next - ub) * tc.p_in());
    [
        p.mu * ui + (p.mu + p.rho) * ur - infection,
        infection - (p.gamma + p.alpha + p.mu) * ui,
        p.gamma * ui - (p.mu + p.rho) * ur,
        -p.mu_b * ub + scaling.hk_ratio() * p.p_over_w * ui + transport,
    ]
}

pub fn square_amplitudes(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams) -> SquareAmplitudes {
    let n = state.n();
    let per_site: Vec<[f64; 6]> = (0..n).map(|i| site_amplitudes(state, params, scaling, i)).collect();
    let ub_field: Vec<f64> = (0..n).map(|i| densities(state, scaling, i)[3]).collect();
    let field = |f: &dyn Fn(usize) -> f64| LatticeField::from_fn(n, f).expect("valid lattice");
    let tc = &params.transport;
    SquareAmplitudes {
        s: field(&|i| per_site[i][0]),
        i: field(&|i| per_site[i][1]),
        r: field(&|i| per_site[i][2]),
        b: field(&|i| per_site[i][3]),
        transport: field(&|i| {
            tc.ell() * (tc.p_in() * ub_field[wrap(i as isize + 1, n)] + ub_field[i] + tc.p_out() * ub_field[wrap(i as isize - 1, n)])
        }),
        reaction_b: field(&|i| {
            let u = densities(state, scaling, i);
            params.mu_b * u[3] + scaling.hk_ratio() * params.p_over_w * u[1]
        }),
        cross_next: field(&|i| per_site[i][4]),
        cross_prev: field(&|i| per_site[i][5]),
    }
}

/// Martingale quantities of one trajectory on its sample grid, obtained by
/// replaying the event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayDiagnostics {
    pub times: Vec<f64>,
    /// `Z(t) = u(t) − u(0) − ∫ψ(u)`, indexed `[time][site][compartment]`.
    pub z: Vec<Vec<[f64; 4]>>,
    /// Sums of squared (or cross) jumps, indexed `[time][site][component]`.
    pub observed: Vec<Vec<[f64; 6]>>,
    /// Compensators of `observed`.
    pub predicted: Vec<Vec<[f64; 6]>>,
}

/// Replays the event log of `traj`, checking every stored snapshot, and
/// accumulates the integrals exactly over the intervals between events
/// where the state is constant.
pub fn replay_diagnostics(traj: &Trajectory, params: &EpidemicParams) -> Result<ReplayDiagnostics> {
    let log = traj
        .event_log
        .as_ref()
        .ok_or_else(|| Error::domain("martingale diagnostics need a trajectory with an event log"))?;
    let scaling = &traj.scaling;
    let mut state = traj
        .initial_state()
        .ok_or_else(|| Error::domain("trajectory has no snapshots"))?
        .clone();
    let n = state.n();
    if params.transport.n() != n {
        return Err(Error::Mismatch(format!(
            "trajectory on {n} sites, transport built for {}",
            params.transport.n()
        )));
    }
    let inv = [
        1.0 / scaling.h as f64,
        1.0 / scaling.h as f64,
        1.0 / scaling.h as f64,
        1.0 / scaling.k as f64,
        1.0 / scaling.k as f64,
        1.0 / scaling.k as f64,
    ];
    let u0: Vec<[f64; 4]> = (0..n).map(|i| densities(&state, scaling, i)).collect();
    let mut debit: Vec<[f64; 4]> = (0..n).map(|i| site_debit(&state, params, scaling, i)).collect();
    let mut amp: Vec<[f64; 6]> = (0..n).map(|i| site_amplitudes(&state, params, scaling, i)).collect();
    let mut int_debit = vec![[0.0f64; 4]; n];
    let mut int_amp = vec![[0.0f64; 6]; n];
    let mut jumps = vec![[0.0f64; 6]; n];
    let mut t_cur = 0.0;

    let times = &traj.sample_times;
    let mut out = ReplayDiagnostics {
        times: times.clone(),
        z: Vec::with_capacity(times.len()),
        observed: Vec::with_capacity(times.len()),
        predicted: Vec::with_capacity(times.len()),
    };
    let mut k = 0;

    let advance = |to: f64, t_cur: &mut f64, int_debit: &mut [[f64; 4]], int_amp: &mut [[f64; 6]], debit: &[[f64; 4]], amp: &[[f64; 6]]| {
        let dt = to - *t_cur;
        if dt > 0.0 {
            for i in 0..n {
                for c in 0..4 {
                    int_debit[i][c] += debit[i][c] * dt;
                }
                for c in 0..6 {
                    int_amp[i][c] += amp[i][c] * dt;
                }
            }
            *t_cur = to;
        }
    };

    let mut record = |k: usize, state: &SystemState, int_debit: &[[f64; 4]], int_amp: &[[f64; 6]], jumps: &[[f64; 6]]| -> Result<()> {
        if let Some(expected) = traj.states.get(k) {
            if expected != state {
                return Err(Error::InvariantViolation(format!(
                    "replayed state differs from stored snapshot at t = {}",
                    times[k]
                )));
            }
        }
        let mut z = Vec::with_capacity(n);
        let mut pred = Vec::with_capacity(n);
        for i in 0..n {
            let u = densities(state, scaling, i);
            let mut zi = [0.0; 4];
            for c in 0..4 {
                zi[c] = u[c] - u0[i][c] - int_debit[i][c];
            }
            z.push(zi);
            let mut pi = [0.0; 6];
            for c in 0..6 {
                pi[c] = inv[c] * int_amp[i][c];
            }
            pred.push(pi);
        }
        out.z.push(z);
        out.predicted.push(pred);
        out.observed.push(jumps.to_vec());
        Ok(())
    };

    let mut last_time = 0.0;
    for ev in log {
        if !(ev.time >= last_time) {
            return Err(Error::InvariantViolation(format!("event log time {} goes backwards", ev.time)));
        }
        last_time = ev.time;
        while k < times.len() && times[k] < ev.time {
            advance(times[k], &mut t_cur, &mut int_debit, &mut int_amp, &debit, &amp);
            record(k, &state, &int_debit, &int_amp, &jumps)?;
            k += 1;
        }
        advance(ev.time, &mut t_cur, &mut int_debit, &mut int_amp, &debit, &amp);
        let event = ev.event();
        state.apply(event)?;
        accumulate_jumps(event.kind, event.site, n, scaling, &mut jumps);
        let (a, b) = state.touched_sites(event);
        for centre in std::iter::once(a).chain(b) {
            for off in -1..=1 {
                let i = wrap(centre as isize + off, n);
                debit[i] = site_debit(&state, params, scaling, i);
                amp[i] = site_amplitudes(&state, params, scaling, i);
            }
        }
    }
    while k < times.len() {
        advance(times[k], &mut t_cur, &mut int_debit, &mut int_amp, &debit, &amp);
        record(k, &state, &int_debit, &int_amp, &jumps)?;
        k += 1;
    }
    Ok(out)
}

fn accumulate_jumps(kind: EventKind, site: usize, n: usize, scaling: &ScalingParams, jumps: &mut [[f64; 6]]) {
    let delta = kind.local_delta();
    for c in Compartment::ALL {
        let d = delta[c.index()] as f64 / renormalisation(c, scaling);
        jumps[site][c.index()] += d * d;
    }
    if let Some(off) = kind.transport_offset() {
        let k = scaling.k as f64;
        let target = wrap(site as isize + off, n);
        jumps[target][3] += 1.0 / (k * k);
        // one site loses a bacterium, its neighbour gains it
        let product = -1.0 / (k * k);
        let (next_of, prev_of) = if off == 1 { (site, target) } else { (target, site) };
        jumps[next_of][4] += product;
        jumps[prev_of][5] += product;
    }
}

/// `Z(t)` for every sample time, site and compartment.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleResidual {
    pub times: Vec<f64>,
    pub fields: Vec<CompartmentFields>,
}

pub fn martingale_residual(traj: &Trajectory, params: &EpidemicParams) -> Result<MartingaleResidual> {
    let d = replay_diagnostics(traj, params)?;
    let fields = d
        .z
        .iter()
        .map(|z| {
            let flat: Vec<f64> = (0..4).flat_map(|c| z.iter().map(move |zi| zi[c])).collect();
            CompartmentFields::from_flat(&flat)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MartingaleResidual { times: d.times, fields })
}

/// Replica statistics of the zero-type martingales and of the compensated
/// squared and cross jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompensatorCheck {
    pub times: Vec<f64>,
    pub n: usize,
    pub replicas: usize,
    pub observed_mean: Vec<Vec<[f64; 6]>>,
    pub predicted_mean: Vec<Vec<[f64; 6]>>,
    /// Mean and standard error of `observed − predicted`.
    pub residual_mean: Vec<Vec<[f64; 6]>>,
    pub residual_stderr: Vec<Vec<[f64; 6]>>,
    pub z_mean: Vec<Vec<[f64; 4]>>,
    pub z_stderr: Vec<Vec<[f64; 4]>>,
}

pub fn compensator_check(replicas: &[Trajectory], params: &EpidemicParams) -> Result<CompensatorCheck> {
    let runs = replicas
        .iter()
        .map(|t| replay_diagnostics(t, params))
        .collect::<Result<Vec<_>>>()?;
    let first = runs.first().ok_or_else(|| Error::domain("compensator check needs at least one replica"))?;
    let times = first.times.clone();
    let n = first.z.first().map_or(0, Vec::len);
    if runs.iter().any(|r| r.times != times || r.z.first().map_or(0, Vec::len) != n) {
        return Err(Error::Mismatch("replicas use different sample grids or lattices".into()));
    }
    let nt = times.len();
    let mut out = CompensatorCheck {
        times,
        n,
        replicas: runs.len(),
        observed_mean: vec![vec![[0.0; 6]; n]; nt],
        predicted_mean: vec![vec![[0.0; 6]; n]; nt],
        residual_mean: vec![vec![[0.0; 6]; n]; nt],
        residual_stderr: vec![vec![[0.0; 6]; n]; nt],
        z_mean: vec![vec![[0.0; 4]; n]; nt],
        z_stderr: vec![vec![[0.0; 4]; n]; nt],
    };
    let mut buf = Vec::with_capacity(runs.len());
    for t in 0..nt {
        for i in 0..n {
            for c in 0..6 {
                buf.clear();
                buf.extend(runs.iter().map(|r| r.observed[t][i][c] - r.predicted[t][i][c]));
                let (m, se) = mean_stderr(&buf);
                out.residual_mean[t][i][c] = m;
                out.residual_stderr[t][i][c] = se;
                out.observed_mean[t][i][c] = runs.iter().map(|r| r.observed[t][i][c]).sum::<f64>() / runs.len() as f64;
                out.predicted_mean[t][i][c] = runs.iter().map(|r| r.predicted[t][i][c]).sum::<f64>() / runs.len() as f64;
            }
            for c in 0..4 {
                buf.clear();
                buf.extend(runs.iter().map(|r| r.z[t][i][c]));
                let (m, se) = mean_stderr(&buf);
                out.z_mean[t][i][c] = m;
                out.z_stderr[t][i][c] = se;
            }
        }
    }
    Ok(out)
}

impl CompensatorCheck {
    /// Fraction of `(time, site)` cells with `t > 0` whose replica mean of
    /// `Z` for compartment `c` lies within `sigmas` standard errors of 0.
    pub fn z_pass_fraction(&self, c: Compartment, sigmas: f64) -> f64 {
        self.pass_fraction(|t, i| (self.z_mean[t][i][c.index()], self.z_stderr[t][i][c.index()]), sigmas)
    }

    /// Same for component `component` (see [`QV_COMPONENTS`]) of the
    /// compensated squared jumps.
    pub fn residual_pass_fraction(&self, component: usize, sigmas: f64) -> f64 {
        self.pass_fraction(
            |t, i| (self.residual_mean[t][i][component], self.residual_stderr[t][i][component]),
            sigmas,
        )
    }

    fn pass_fraction(&self, cell: impl Fn(usize, usize) -> (f64, f64), sigmas: f64) -> f64 {
        let mut total = 0usize;
        let mut passed = 0usize;
        for t in 0..self.times.len() {
            if self.times[t] <= 0.0 {
                continue;
            }
            for i in 0..self.n {
                let (m, se) = cell(t, i);
                total += 1;
                passed += passes_mean_zero(m, se, sigmas) as usize;
            }
        }
        if total == 0 {
            1.0
        } else {
            passed as f64 / total as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TransportCoefficients;
    use crate::stochastic::{LoggedEvent, RngSeed};

    fn setup() -> (EpidemicParams, ScalingParams) {
        let tc = TransportCoefficients::new(0.0, 0.5, 3).unwrap();
        let p = EpidemicParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0, tc).unwrap();
        (p, ScalingParams::new(3, 10, 5).unwrap())
    }

    #[test]
    fn one_death_by_hand() {
        let (p, sc) = setup();
        let s0 = SystemState::new(vec![0; 3], vec![0; 3], vec![0; 3], vec![3, 0, 0]).unwrap();
        let mut s1 = s0.clone();
        s1.apply(crate::stochastic::Event { kind: EventKind::BacteriaDeath, site: 0 }).unwrap();
        let traj = Trajectory {
            sample_times: vec![0.0, 0.25, 1.0],
            states: vec![s0.clone(), s0, s1],
            event_log: Some(vec![LoggedEvent { time: 0.5, kind: EventKind::BacteriaDeath, site: 0 }]),
            seed: RngSeed::new(0),
            scaling: sc,
        };
        let m = martingale_residual(&traj, &p).unwrap();
        assert!(m.fields[0].sup_norm() == 0.0);
        // drift +μ_B·u_B·t with u_B = 3/5, then −1/K at the jump, then +μ_B·(2/5)·0.5
        let zb = |k: usize| m.fields[k].get(Compartment::B).values()[0];
        assert!((zb(1) - 2.0 * 0.6 * 0.25).abs() < 1e-15);
        let expected = -0.2 + 2.0 * 0.6 * 0.5 + 2.0 * 0.4 * 0.5;
        assert!((zb(2) - expected).abs() < 1e-14, "{}", zb(2));
        let d = replay_diagnostics(&traj, &p).unwrap();
        assert!((d.observed[2][0][3] - 1.0 / 25.0).abs() < 1e-15);
        assert!((d.predicted[2][0][3] - (2.0 * 0.6 * 0.5 + 2.0 * 0.4 * 0.5) / 5.0).abs() < 1e-14);
    }

    #[test]
    fn snapshot_mismatch_is_detected() {
        let (p, sc) = setup();
        let s0 = SystemState::uniform(3, [0, 0, 0, 2]).unwrap();
        let traj = Trajectory {
            sample_times: vec![0.0, 1.0],
            states: vec![s0.clone(), s0],
            event_log: Some(vec![LoggedEvent { time: 0.5, kind: EventKind::BacteriaDeath, site: 1 }]),
            seed: RngSeed::new(0),
            scaling: sc,
        };
        assert!(matches!(replay_diagnostics(&traj, &p), Err(Error::InvariantViolation(_))));
    }
}
