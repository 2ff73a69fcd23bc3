//! The fourteen jump types of the counting process, their propensities and
//! their effect on the per-site counts.

use serde::Serialize;

use super::state::{renormalisation, SystemState};
use crate::fields::{Compartment, CompartmentFields};
use crate::lattice::{wrap, LatticeField};
use crate::params::{EpidemicParams, ScalingParams};
use crate::{Error, Result};

pub const KINDS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[repr(u8)]
pub enum EventKind {
    BirthFromS = 0,
    BirthFromI = 1,
    BirthFromR = 2,
    DeathS = 3,
    Infection = 4,
    DeathINatural = 5,
    DeathICholera = 6,
    Recovery = 7,
    DeathR = 8,
    ImmunityLoss = 9,
    BacteriaDeath = 10,
    Contamination = 11,
    TransportOut = 12,
    TransportIn = 13,
}

impl EventKind {
    pub const ALL: [EventKind; KINDS] = [
        EventKind::BirthFromS,
        EventKind::BirthFromI,
        EventKind::BirthFromR,
        EventKind::DeathS,
        EventKind::Infection,
        EventKind::DeathINatural,
        EventKind::DeathICholera,
        EventKind::Recovery,
        EventKind::DeathR,
        EventKind::ImmunityLoss,
        EventKind::BacteriaDeath,
        EventKind::Contamination,
        EventKind::TransportOut,
        EventKind::TransportIn,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }

    /// Count change `(ΔS, ΔI, ΔR, ΔB)` at the site where the event happens.
    pub fn local_delta(self) -> [i64; 4] {
        use EventKind::*;
        match self {
            BirthFromS | BirthFromI | BirthFromR => [1, 0, 0, 0],
            DeathS => [-1, 0, 0, 0],
            Infection => [-1, 1, 0, 0],
            DeathINatural | DeathICholera => [0, -1, 0, 0],
            Recovery => [0, -1, 1, 0],
            DeathR => [0, 0, -1, 0],
            ImmunityLoss => [1, 0, -1, 0],
            BacteriaDeath => [0, 0, 0, -1],
            Contamination => [0, 0, 0, 1],
            TransportOut | TransportIn => [0, 0, 0, -1],
        }
    }

    /// Offset of the site receiving the transported bacterium, if any.
    pub fn transport_offset(self) -> Option<isize> {
        match self {
            EventKind::TransportOut => Some(1),
            EventKind::TransportIn => Some(-1),
            _ => None,
        }
    }

    pub fn is_human(self) -> bool {
        self.local_delta()[3] == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub site: usize,
}

/// Propensities of all fourteen kinds at one site, indexed by
/// [`EventKind::index`]. Written in count form; each entry equals the
/// rescaled-density rate of the generator.
#[inline]
pub fn site_rates(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams, site: usize) -> [f64; KINDS] {
    let s = state.count(Compartment::S, site) as f64;
    let i = state.count(Compartment::I, site) as f64;
    let r = state.count(Compartment::R, site) as f64;
    let b = state.count(Compartment::B, site) as f64;
    let k = scaling.k as f64;
    let tc = &params.transport;
    let dose = if b > 0.0 { b / (k + b) } else { 0.0 };
    [
        params.mu * s,
        params.mu * i,
        params.mu * r,
        params.mu * s,
        params.beta * s * dose,
        params.mu * i,
        params.alpha * i,
        params.gamma * i,
        params.mu * r,
        params.rho * r,
        params.mu_b * b,
        params.p_over_w * i,
        tc.ell() * tc.p_out() * b,
        tc.ell() * tc.p_in() * b,
    ]
}

pub fn event_rate(
    state: &SystemState,
    params: &EpidemicParams,
    scaling: &ScalingParams,
    kind: EventKind,
    site: usize,
) -> f64 {
    site_rates(state, params, scaling, site)[kind.index()]
}

impl SystemState {
    /// Applies one jump in place. Fails without modifying the state if the
    /// compartment it draws from is empty.
    pub fn apply(&mut self, e: Event) -> Result<()> {
        let n = self.n();
        if e.site >= n {
            return Err(Error::InvariantViolation(format!("event at site {} on {n} sites", e.site)));
        }
        let delta = e.kind.local_delta();
        for c in Compartment::ALL {
            if delta[c.index()] < 0 && self.count(c, e.site) == 0 {
                return Err(Error::InvariantViolation(format!(
                    "{:?} at site {} with no {} to remove",
                    e.kind,
                    e.site + 1,
                    c.label()
                )));
            }
        }
        for c in Compartment::ALL {
            let slot = &mut self.counts_mut(c)[e.site];
            match delta[c.index()] {
                1 => *slot += 1,
                -1 => *slot -= 1,
                _ => {}
            }
        }
        if let Some(off) = e.kind.transport_offset() {
            let target = wrap(e.site as isize + off, n);
            self.counts_mut(Compartment::B)[target] += 1;
        }
        Ok(())
    }

    /// Sites whose counts `e` changes.
    pub fn touched_sites(&self, e: Event) -> (usize, Option<usize>) {
        let other = e.kind.transport_offset().map(|off| wrap(e.site as isize + off, self.n()));
        (e.site, other)
    }
}

/// Pure form of [`SystemState::apply`].
pub fn apply_event(state: &SystemState, e: Event) -> Result<SystemState> {
    let mut next = state.clone();
    next.apply(e)?;
    Ok(next)
}

/// Expected instantaneous change of the rescaled densities, summed over the
/// event table: `Σ rate · jump`.
pub fn drift_from_events(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams) -> CompartmentFields {
    let n = state.n();
    let mut drift = vec![[0.0f64; 4]; n];
    for site in 0..n {
        let rates = site_rates(state, params, scaling, site);
        for kind in EventKind::ALL {
            let rate = rates[kind.index()];
            let delta = kind.local_delta();
            for c in Compartment::ALL {
                drift[site][c.index()] += rate * delta[c.index()] as f64 / renormalisation(c, scaling);
            }
            if let Some(off) = kind.transport_offset() {
                drift[wrap(site as isize + off, n)][3] += rate / scaling.k as f64;
            }
        }
    }
    let field = |c: usize| LatticeField::new(drift.iter().map(|d| d[c]).collect()).expect("valid lattice");
    CompartmentFields::new(field(0), field(1), field(2), field(3)).expect("same lattice")
}
