use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::event::{site_rates, Event, EventKind, KINDS};
use super::rng::RngSeed;
use super::state::SystemState;
use super::sum_tree::SumTree;
use super::{check_inputs, LoggedEvent, Trajectory};
use crate::fields::SampleGrid;
use crate::params::{EpidemicParams, ScalingParams};
use crate::Result;

/// Outcome of one step of the direct method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SsaStep {
    Fired { event: Event, waiting_time: f64 },
    /// Every propensity is zero; the waiting time is infinite.
    Absorbed,
}

/// One Gillespie step from scratch: recomputes every propensity, draws an
/// exponential waiting time with the total rate and picks an event with
/// probability proportional to its rate. The state is not modified.
pub fn step_ssa<R: Rng + ?Sized>(
    state: &SystemState,
    params: &EpidemicParams,
    scaling: &ScalingParams,
    rng: &mut R,
) -> SsaStep {
    let rates: Vec<f64> = (0..state.n())
        .flat_map(|site| site_rates(state, params, scaling, site))
        .collect();
    let total: f64 = rates.iter().sum();
    if total <= 0.0 {
        return SsaStep::Absorbed;
    }
    let e: f64 = rng.sample(Exp1);
    let waiting_time = e / total;
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (idx, &r) in rates.iter().enumerate() {
        if r <= 0.0 {
            continue;
        }
        chosen = Some(idx);
        acc += r;
        if target < acc {
            break;
        }
    }
    let idx = chosen.expect("positive total implies a positive rate");
    SsaStep::Fired {
        event: leaf_event(idx),
        waiting_time,
    }
}

fn leaf_event(idx: usize) -> Event {
    Event {
        kind: EventKind::ALL[idx % KINDS],
        site: idx / KINDS,
    }
}

/// Direct-method simulator with incremental propensity bookkeeping.
///
/// Propensities live in a sum tree indexed by `site * 14 + kind`. An event
/// changes counts at one site, or two for transport, so only those sites'
/// leaves are refreshed after each jump.
pub struct SsaEngine<'a, R> {
    state: SystemState,
    params: &'a EpidemicParams,
    scaling: &'a ScalingParams,
    tree: SumTree,
    rng: R,
    time: f64,
}

impl<'a, R: Rng> SsaEngine<'a, R> {
    pub fn new(state: SystemState, params: &'a EpidemicParams, scaling: &'a ScalingParams, rng: R) -> Self {
        let weights: Vec<f64> = (0..state.n())
            .flat_map(|site| site_rates(&state, params, scaling, site))
            .collect();
        Self {
            tree: SumTree::new(&weights),
            state,
            params,
            scaling,
            rng,
            time: 0.0,
        }
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn into_state(self) -> SystemState {
        self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    /// Draws the next event without applying it.
    pub fn propose(&mut self) -> SsaStep {
        let total = self.tree.total();
        if total <= 0.0 {
            return SsaStep::Absorbed;
        }
        let e: f64 = self.rng.sample(Exp1);
        let u = self.rng.random::<f64>() * total;
        SsaStep::Fired {
            event: leaf_event(self.tree.find(u)),
            waiting_time: e / total,
        }
    }

    /// Applies `event` at absolute time `time` and refreshes the affected rates.
    pub fn fire(&mut self, event: Event, time: f64) -> Result<()> {
        self.state.apply(event)?;
        self.time = time;
        let (a, b) = self.state.touched_sites(event);
        self.refresh(a);
        if let Some(b) = b {
            self.refresh(b);
        }
        Ok(())
    }

    fn refresh(&mut self, site: usize) {
        let rates = site_rates(&self.state, self.params, self.scaling, site);
        for (k, r) in rates.into_iter().enumerate() {
            self.tree.update(site * KINDS + k, r);
        }
    }
}

/// Exact simulation on `grid`. The snapshot at a sample time `t` is the
/// state after every event with time `<= t`. When all propensities vanish
/// the clock jumps to the horizon.
pub fn simulate_ssa(
    initial: &SystemState,
    grid: &SampleGrid,
    params: &EpidemicParams,
    scaling: &ScalingParams,
    seed: RngSeed,
    record_events: bool,
) -> Result<Trajectory> {
    check_inputs(initial, params, scaling)?;
    let times = grid.times();
    let horizon = grid.horizon();
    let mut engine = SsaEngine::new(initial.clone(), params, scaling, seed.rng());
    let mut states = Vec::with_capacity(times.len());
    let mut log = record_events.then(Vec::new);
    let mut next_sample = 0;
    loop {
        let (event, t_next) = match engine.propose() {
            SsaStep::Fired { event, waiting_time } => (Some(event), engine.time() + waiting_time),
            SsaStep::Absorbed => (None, f64::INFINITY),
        };
        while next_sample < times.len() && times[next_sample] < t_next {
            states.push(engine.state().clone());
            next_sample += 1;
        }
        let Some(event) = event else { break };
        if t_next > horizon {
            break;
        }
        engine.fire(event, t_next)?;
        if let Some(log) = log.as_mut() {
            log.push(LoggedEvent {
                time: t_next,
                kind: event.kind,
                site: event.site,
            });
        }
    }
    Ok(Trajectory {
        sample_times: times.to_vec(),
        states,
        event_log: log,
        seed,
        scaling: *scaling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TransportCoefficients;
    use crate::Compartment;

    fn params() -> EpidemicParams {
        let tc = TransportCoefficients::new(2.0, 0.6, 5).unwrap();
        EpidemicParams::new(0.3, 0.2, 0.4, 0.5, 1.1, 0.7, 0.9, tc).unwrap()
    }

    #[test]
    fn horizon_zero_returns_initial() {
        let sc = ScalingParams::new(5, 50, 50).unwrap();
        let s0 = SystemState::uniform(5, [40, 5, 5, 20]).unwrap();
        let grid = SampleGrid::uniform(0.0, 1).unwrap();
        let tr = simulate_ssa(&s0, &grid, &params(), &sc, RngSeed::new(3), true).unwrap();
        assert_eq!(tr.states, vec![s0]);
        assert_eq!(tr.event_log.unwrap().len(), 0);
    }

    #[test]
    fn extinct_state_is_absorbing() {
        let sc = ScalingParams::new(5, 50, 50).unwrap();
        let s0 = SystemState::empty(5).unwrap();
        let mut rng = RngSeed::new(1).rng();
        assert_eq!(step_ssa(&s0, &params(), &sc, &mut rng), SsaStep::Absorbed);
        let grid = SampleGrid::uniform(3.0, 4).unwrap();
        let tr = simulate_ssa(&s0, &grid, &params(), &sc, RngSeed::new(1), false).unwrap();
        assert_eq!(tr.states.len(), 4);
        assert!(tr.states.iter().all(|s| *s == s0));
    }

    #[test]
    fn engine_tree_matches_fresh_rates_after_many_events() {
        let sc = ScalingParams::new(5, 30, 30).unwrap();
        let p = params();
        let s0 = SystemState::uniform(5, [20, 5, 5, 20]).unwrap();
        let mut eng = SsaEngine::new(s0, &p, &sc, RngSeed::new(9).rng());
        for _ in 0..2000 {
            match eng.propose() {
                SsaStep::Fired { event, waiting_time } => {
                    let t = eng.time() + waiting_time;
                    eng.fire(event, t).unwrap();
                }
                SsaStep::Absorbed => break,
            }
        }
        let fresh: f64 = (0..5).flat_map(|i| site_rates(eng.state(), &p, &sc, i)).sum();
        assert!((fresh - eng.total_rate()).abs() <= 1e-9 * fresh.max(1.0));
        assert!(eng.state().total(Compartment::S) > 0);
    }
}
