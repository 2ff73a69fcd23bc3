use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use super::event::{site_rates, EventKind};
use super::rng::RngSeed;
use super::state::SystemState;
use super::{check_inputs, Trajectory};
use crate::fields::{Compartment, SampleGrid};
use crate::lattice::wrap;
use crate::params::{EpidemicParams, ScalingParams};
use crate::{Error, Result};

/// Halvings allowed within one step before giving up.
pub const MAX_HALVINGS: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauLeapRun {
    pub trajectory: Trajectory,
    /// Number of rejected leaps, each followed by halving the step.
    pub rejections: u64,
    pub steps: u64,
}

/// Poisson leaping with step at most `tau`. Steps are cut to land exactly on
/// sample times. A leap that would drive a count negative is discarded and
/// retried with half the step.
pub fn simulate_tau_leap(
    initial: &SystemState,
    grid: &SampleGrid,
    tau: f64,
    params: &EpidemicParams,
    scaling: &ScalingParams,
    seed: RngSeed,
) -> Result<TauLeapRun> {
    check_inputs(initial, params, scaling)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::domain(format!("tau must be positive and finite, got {tau}")));
    }
    let mut rng = seed.rng();
    let n = initial.n();
    let mut state = initial.clone();
    let mut states = Vec::with_capacity(grid.len());
    let mut rejections = 0;
    let mut steps = 0;
    let mut t = 0.0;
    for &target in grid.times() {
        while t < target {
            let mut h = tau.min(target - t);
            let mut halvings = 0;
            let next = loop {
                match leap(&state, params, scaling, h, &mut rng) {
                    Some(s) => break s,
                    None => {
                        rejections += 1;
                        halvings += 1;
                        if halvings > MAX_HALVINGS {
                            return Err(Error::InvariantViolation(format!(
                                "tau-leap could not keep counts non-negative at t = {t}"
                            )));
                        }
                        h *= 0.5;
                    }
                }
            };
            state = next;
            steps += 1;
            t = if target - t <= h { target } else { t + h };
        }
        debug_assert_eq!(state.n(), n);
        states.push(state.clone());
    }
    log::debug!("tau-leap: {steps} steps, {rejections} rejections");
    Ok(TauLeapRun {
        trajectory: Trajectory {
            sample_times: grid.times().to_vec(),
            states,
            event_log: None,
            seed,
            scaling: *scaling,
        },
        rejections,
        steps,
    })
}

fn leap<R: Rng>(
    state: &SystemState,
    params: &EpidemicParams,
    scaling: &ScalingParams,
    h: f64,
    rng: &mut R,
) -> Option<SystemState> {
    let n = state.n();
    let mut delta = vec![[0i64; 4]; n];
    for site in 0..n {
        let rates = site_rates(state, params, scaling, site);
        for kind in EventKind::ALL {
            let lambda = rates[kind.index()] * h;
            if lambda <= 0.0 {
                continue;
            }
            let fires = Poisson::new(lambda).ok()?.sample(rng) as i64;
            if fires == 0 {
                continue;
            }
            let d = kind.local_delta();
            for c in 0..4 {
                delta[site][c] += d[c] * fires;
            }
            if let Some(off) = kind.transport_offset() {
                delta[wrap(site as isize + off, n)][3] += fires;
            }
        }
    }
    let mut next = state.clone();
    for c in Compartment::ALL {
        let counts = next.counts_mut(c);
        for site in 0..n {
            let v = counts[site] as i64 + delta[site][c.index()];
            if v < 0 {
                return None;
            }
            counts[site] = v as u64;
        }
    }
    Some(next)
}
