//! Event-driven simulation of the lattice counting process.

mod event;
mod rng;
mod ssa;
mod state;
mod sum_tree;
mod tau_leap;

use rayon::prelude::*;
use serde::Serialize;

pub use event::{apply_event, drift_from_events, event_rate, site_rates, Event, EventKind, KINDS};
pub use rng::{RngSeed, RNG_ALGORITHM};
pub use ssa::{simulate_ssa, step_ssa, SsaEngine, SsaStep};
pub use state::{renormalisation, RoundingReport, SystemState};
pub use sum_tree::SumTree;
pub use tau_leap::{simulate_tau_leap, TauLeapRun, MAX_HALVINGS};

use crate::fields::{CompartmentFields, SampledPath};
use crate::params::{EpidemicParams, ScalingParams};
use crate::{Error, Result};

/// An event together with the time it fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoggedEvent {
    pub time: f64,
    pub kind: EventKind,
    pub site: usize,
}

impl LoggedEvent {
    pub fn event(&self) -> Event {
        Event {
            kind: self.kind,
            site: self.site,
        }
    }
}

/// Count snapshots on a sample grid, optionally with the full event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub states: Vec<SystemState>,
    pub event_log: Option<Vec<LoggedEvent>>,
    pub seed: RngSeed,
    pub scaling: ScalingParams,
}

impl Trajectory {
    pub fn initial_state(&self) -> Option<&SystemState> {
        self.states.first()
    }

    pub fn final_state(&self) -> Option<&SystemState> {
        self.states.last()
    }

    /// Densities at the sample times.
    pub fn rescaled(&self) -> SampledPath {
        SampledPath {
            times: self.sample_times.clone(),
            states: self.states.iter().map(|s| s.rescaled(&self.scaling)).collect(),
        }
    }

    pub fn rescaled_final(&self) -> Option<CompartmentFields> {
        self.final_state().map(|s| s.rescaled(&self.scaling))
    }
}

impl Serialize for SystemState {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_flat().serialize(serializer)
    }
}

pub(crate) fn check_inputs(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams) -> Result<()> {
    params.validate()?;
    if state.n() != scaling.n || params.transport.n() != scaling.n {
        return Err(Error::Mismatch(format!(
            "state has {} sites, transport {} and scaling {}",
            state.n(),
            params.transport.n(),
            scaling.n
        )));
    }
    Ok(())
}

/// Runs `replicas` independent simulations in parallel on the current rayon
/// pool. Replica `r` receives stream `r` of `seed`; results come back in
/// replica order.
pub fn run_replicas<T, F>(replicas: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngSeed) -> Result<T> + Sync,
{
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| f(RngSeed::replica(seed, r)))
        .collect()
}
