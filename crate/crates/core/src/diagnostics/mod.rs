//! Distances between paths, compensated martingales of the counting process
//! and the large-population convergence experiments.

mod lln;
mod martingale;

pub use lln::{lln_experiment, validate_ladder, ConvergenceReport, LlnSetup, Regime, RungReport, BALL_RADIUS_FACTOR};
pub use martingale::{
    compensator_check, martingale_residual, replay_diagnostics, square_amplitudes, CompensatorCheck,
    MartingaleResidual, ReplayDiagnostics, SquareAmplitudes, QV_COMPONENTS,
};

use crate::fields::{FieldSelection, SampledPath};
use crate::{Error, Result};

/// Largest absolute difference over sample times, the selected compartments
/// and sites. The two paths must share their sample times and lattice.
pub fn sup_distance(a: &SampledPath, b: &SampledPath, selection: FieldSelection) -> Result<f64> {
    if a.times.len() != b.times.len() || a.times.iter().zip(&b.times).any(|(x, y)| x != y) {
        return Err(Error::Mismatch("paths are sampled on different time grids".into()));
    }
    if a.states.len() != a.times.len() || b.states.len() != b.times.len() {
        return Err(Error::Mismatch("path has a different number of states and sample times".into()));
    }
    let mut worst = 0.0f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        worst = worst.max(x.max_abs_diff(y, selection)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Compartment, CompartmentFields, LatticeField};

    fn path(shift: f64) -> SampledPath {
        let f = |t: f64| {
            let s = LatticeField::from_fn(4, |i| 0.1 * i as f64 + t).unwrap();
            let b = LatticeField::from_fn(4, |i| 0.3 * i as f64 + shift).unwrap();
            CompartmentFields::new(s.clone(), s.clone(), s, b).unwrap()
        };
        SampledPath {
            times: vec![0.0, 0.5, 1.0],
            states: vec![f(0.0), f(0.5), f(1.0)],
        }
    }

    #[test]
    fn distance_to_self_and_to_shift() {
        assert_eq!(sup_distance(&path(0.0), &path(0.0), FieldSelection::All).unwrap(), 0.0);
        let d = sup_distance(&path(0.0), &path(0.25), FieldSelection::All).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        let d = sup_distance(&path(0.0), &path(0.25), FieldSelection::Only(Compartment::S)).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn rejects_mismatched_grids() {
        let mut b = path(0.0);
        b.times[1] = 0.4;
        assert!(matches!(sup_distance(&path(0.0), &b, FieldSelection::All), Err(Error::Mismatch(_))));
    }
}
