use serde::Serialize;

use crate::deterministic::{integrate, Coupling, ReactionField, StepSize};
use crate::fields::{CompartmentFields, FieldSelection, InitialCondition, SampleGrid};
use crate::lattice::DEFAULT_QUADRATURE_POINTS;
use crate::params::{EpidemicParams, ScalingParams};
use crate::stats::{median, quantile};
use crate::stochastic::{simulate_ssa, RngSeed, RoundingReport, SystemState};
use crate::{Compartment, Error, Result};

use super::sup_distance;

/// A replica counts as leaving the ball when its sup norm exceeds this
/// multiple of the deterministic solution's sup norm over the horizon.
pub const BALL_RADIUS_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `N, H, K → ∞` with `H/K` fixed; all compartments follow the coupled
    /// lattice system.
    Theorem1,
    /// `H/K → 0`; bacteria follow the decoupled equation.
    Theorem2,
}

impl Regime {
    pub fn coupling(self) -> Coupling {
        match self {
            Regime::Theorem1 => Coupling::Coupled,
            Regime::Theorem2 => Coupling::Decoupled,
        }
    }

    pub fn selection(self) -> FieldSelection {
        match self {
            Regime::Theorem1 => FieldSelection::All,
            Regime::Theorem2 => FieldSelection::Only(Compartment::B),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Regime::Theorem1),
            "theorem2" => Ok(Regime::Theorem2),
            other => Err(Error::Regime(format!("unknown regime `{other}` (expected theorem1 or theorem2)"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Theorem1 => "theorem1",
            Regime::Theorem2 => "theorem2",
        })
    }
}

/// Checks that a ladder of scalings moves in the direction of `regime`.
///
/// Both regimes need a non-empty ladder with `K` strictly increasing and `N`
/// non-decreasing. The first regime also needs `H/K` identical on every rung;
/// the second needs `H/K < 1` and non-increasing.
pub fn validate_ladder(ladder: &[ScalingParams], regime: Regime) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Regime("ladder has no rungs".into()));
    }
    for (j, w) in ladder.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if b.k <= a.k {
            return Err(Error::Regime(format!(
                "K must increase along the ladder (rung {} has K = {}, rung {} has K = {})",
                j + 1,
                a.k,
                j + 2,
                b.k
            )));
        }
        if b.n < a.n {
            return Err(Error::Regime(format!("N decreases from {} to {} at rung {}", a.n, b.n, j + 2)));
        }
        let lhs = a.h as u128 * b.k as u128;
        let rhs = b.h as u128 * a.k as u128;
        match regime {
            Regime::Theorem1 if lhs != rhs => {
                return Err(Error::Regime(format!(
                    "theorem1 needs a constant H/K, but rung {} has {}/{} and rung {} has {}/{}",
                    j + 1,
                    a.h,
                    a.k,
                    j + 2,
                    b.h,
                    b.k
                )))
            }
            Regime::Theorem2 if rhs > lhs => {
                return Err(Error::Regime(format!(
                    "theorem2 needs H/K non-increasing, but it grows at rung {}",
                    j + 2
                )))
            }
            _ => {}
        }
    }
    if regime == Regime::Theorem2 {
        if let Some(bad) = ladder.iter().find(|s| s.h >= s.k) {
            return Err(Error::Regime(format!(
                "theorem2 needs H < K on every rung, got H = {}, K = {}",
                bad.h, bad.k
            )));
        }
    }
    Ok(())
}

/// Fixed inputs of a convergence experiment.
#[derive(Clone, Copy)]
pub struct LlnSetup<'a> {
    pub initial: &'a dyn InitialCondition,
    /// Rates; the transport is re-expressed on each rung's lattice with the
    /// same continuum diffusion and velocity.
    pub params: &'a EpidemicParams,
    pub grid: &'a SampleGrid,
    pub replicas: usize,
    pub seed: u64,
    pub regime: Regime,
    pub step: StepSize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungReport {
    pub scaling: ScalingParams,
    /// `sup_t ‖u^N(t) − v^N(t)‖` per replica, in replica order.
    pub distances: Vec<f64>,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// Replicas whose sup norm left the ball of radius
    /// `BALL_RADIUS_FACTOR · sup_t ‖v^N(t)‖`.
    pub ball_exits: usize,
    pub rounding: RoundingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub regime: Regime,
    pub rungs: Vec<RungReport>,
}

impl ConvergenceReport {
    pub fn medians(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.median).collect()
    }

    pub fn medians_strictly_decreasing(&self) -> bool {
        self.medians().windows(2).all(|w| w[1] < w[0])
    }
}

/// For each rung: projects the initial profile, rounds it to counts, runs the
/// replicas in parallel and the lattice system once, and records the sup
/// distances. The deterministic run starts from the unrounded projection.
pub fn lln_experiment(ladder: &[ScalingParams], setup: &LlnSetup<'_>) -> Result<ConvergenceReport> {
    validate_ladder(ladder, setup.regime)?;
    if setup.replicas == 0 {
        return Err(Error::domain("need at least one replica"));
    }
    let mut rungs = Vec::with_capacity(ladder.len());
    for (idx, scaling) in ladder.iter().enumerate() {
        let params = setup.params.with_resolution(scaling.n)?;
        let v0 = CompartmentFields::project(setup.initial, scaling.n, DEFAULT_QUADRATURE_POINTS)?;
        let (state0, rounding) = SystemState::from_densities(&v0, scaling)?;
        let rf = match setup.regime {
            Regime::Theorem1 => ReactionField::coupled(params, scaling.hk_ratio())?,
            Regime::Theorem2 => ReactionField::decoupled(params)?,
        };
        let det = integrate(&v0, setup.grid, &rf, &params.transport, setup.step)?;
        let radius = BALL_RADIUS_FACTOR * det.path.states.iter().map(CompartmentFields::sup_norm).fold(0.0, f64::max);
        let selection = setup.regime.selection();
        let per_replica = crate::stochastic::run_replicas(setup.replicas, setup.seed, |seed| {
            let seed = RngSeed::rung_replica(setup.seed, idx as u32, seed.stream as u32);
            let traj = simulate_ssa(&state0, setup.grid, &params, scaling, seed, false)?;
            let path = traj.rescaled();
            let exited = path.states.iter().any(|s| s.sup_norm() > radius);
            Ok((sup_distance(&path, &det.path, selection)?, exited))
        })?;
        let distances: Vec<f64> = per_replica.iter().map(|(d, _)| *d).collect();
        let ball_exits = per_replica.iter().filter(|(_, e)| *e).count();
        log::info!(
            "rung {} (N = {}, H = {}, K = {}): median distance {:.4e}",
            idx + 1,
            scaling.n,
            scaling.h,
            scaling.k,
            median(&distances)
        );
        rungs.push(RungReport {
            scaling: *scaling,
            median: median(&distances),
            q25: quantile(&distances, 0.25),
            q75: quantile(&distances, 0.75),
            distances,
            ball_exits,
            rounding,
        });
    }
    Ok(ConvergenceReport {
        regime: setup.regime,
        rungs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sc(n: usize, h: u64, k: u64) -> ScalingParams {
        ScalingParams::new(n, h, k).unwrap()
    }

    #[test]
    fn theorem1_needs_constant_ratio() {
        assert!(validate_ladder(&[sc(8, 100, 100), sc(8, 1000, 1000)], Regime::Theorem1).is_ok());
        assert!(validate_ladder(&[sc(8, 50, 100), sc(8, 500, 1000)], Regime::Theorem1).is_ok());
        let err = validate_ladder(&[sc(8, 100, 100), sc(8, 100, 1000)], Regime::Theorem1).unwrap_err();
        assert!(err.to_string().contains("constant H/K"), "{err}");
    }

    #[test]
    fn theorem2_ratio_below_one_and_not_growing() {
        assert!(validate_ladder(&[sc(8, 10, 1000), sc(8, 100, 10_000)], Regime::Theorem2).is_ok());
        assert!(validate_ladder(&[sc(8, 10, 1000), sc(8, 10, 10_000)], Regime::Theorem2).is_ok());
        assert!(validate_ladder(&[sc(8, 10, 1000), sc(8, 1000, 10_000)], Regime::Theorem2).is_err());
        assert!(validate_ladder(&[sc(8, 100, 100)], Regime::Theorem2).is_err());
    }

    #[test]
    fn k_must_grow() {
        assert!(validate_ladder(&[sc(8, 100, 100), sc(8, 100, 100)], Regime::Theorem1).is_err());
        assert!(validate_ladder(&[], Regime::Theorem1).is_err());
        assert!(validate_ladder(&[sc(8, 100, 100), sc(4, 1000, 1000)], Regime::Theorem1).is_err());
    }
}
