use serde::Serialize;

use crate::fields::{Compartment, CompartmentFields};
use crate::lattice::{check_sites, LatticeField};
use crate::params::ScalingParams;
use crate::{Error, Result};

/// Raw per-site counts of susceptible, infected and recovered humans and of
/// bacteria. Counts are the source of truth; densities are derived views.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemState {
    counts: [Vec<u64>; 4],
}

/// Worst rounding error, per compartment and in density units, made when
/// converting a density profile to integer counts.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RoundingReport {
    pub max_abs_error: [f64; 4],
}

impl SystemState {
    pub fn new(s: Vec<u64>, i: Vec<u64>, r: Vec<u64>, b: Vec<u64>) -> Result<Self> {
        let n = s.len();
        check_sites(n)?;
        if i.len() != n || r.len() != n || b.len() != n {
            return Err(Error::Mismatch("compartment count vectors of different lengths".into()));
        }
        Ok(Self { counts: [s, i, r, b] })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![0; n], vec![0; n], vec![0; n], vec![0; n])
    }

    /// Same count in every site of each compartment.
    pub fn uniform(n: usize, counts: [u64; 4]) -> Result<Self> {
        Self::new(
            vec![counts[0]; n],
            vec![counts[1]; n],
            vec![counts[2]; n],
            vec![counts[3]; n],
        )
    }

    /// Rounds densities to the nearest counts on the grids `H⁻¹ℕ` and `K⁻¹ℕ`.
    pub fn from_densities(u: &CompartmentFields, scaling: &ScalingParams) -> Result<(Self, RoundingReport)> {
        if u.n() != scaling.n {
            return Err(Error::Mismatch(format!(
                "initial densities on {} sites, scaling has N = {}",
                u.n(),
                scaling.n
            )));
        }
        let mut report = RoundingReport::default();
        let mut counts: [Vec<u64>; 4] = Default::default();
        for c in Compartment::ALL {
            let renorm = renormalisation(c, scaling);
            for &v in u.get(c).values() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::domain(format!(
                        "initial density of {} must be finite and >= 0, got {v}",
                        c.label()
                    )));
                }
                let n = (v * renorm).round();
                if n > u64::MAX as f64 / 4.0 {
                    return Err(Error::domain(format!("initial count {n} too large")));
                }
                let err = (n / renorm - v).abs();
                report.max_abs_error[c.index()] = report.max_abs_error[c.index()].max(err);
                counts[c.index()].push(n as u64);
            }
        }
        let [s, i, r, b] = counts;
        Ok((Self::new(s, i, r, b)?, report))
    }

    pub fn n(&self) -> usize {
        self.counts[0].len()
    }

    pub fn counts(&self, c: Compartment) -> &[u64] {
        &self.counts[c.index()]
    }

    pub fn count(&self, c: Compartment, site: usize) -> u64 {
        self.counts[c.index()][site]
    }

    pub(crate) fn counts_mut(&mut self, c: Compartment) -> &mut [u64] {
        &mut self.counts[c.index()]
    }

    pub fn total(&self, c: Compartment) -> u64 {
        self.counts[c.index()].iter().sum()
    }

    /// Densities `count/H` for humans and `count/K` for bacteria.
    pub fn rescaled(&self, scaling: &ScalingParams) -> CompartmentFields {
        let f = |c: Compartment| {
            let r = renormalisation(c, scaling);
            LatticeField::new(self.counts(c).iter().map(|&v| v as f64 / r).collect())
                .expect("state has a valid lattice size")
        };
        CompartmentFields::new(f(Compartment::S), f(Compartment::I), f(Compartment::R), f(Compartment::B))
            .expect("compartments share a lattice")
    }

    /// Counts flattened as `[S..., I..., R..., B...]`.
    pub fn to_flat(&self) -> Vec<u64> {
        self.counts.iter().flatten().copied().collect()
    }

    pub fn from_flat(flat: Vec<u64>) -> Result<Self> {
        if flat.len() % 4 != 0 {
            return Err(Error::Mismatch(format!("flat count vector of length {}", flat.len())));
        }
        let n = flat.len() / 4;
        let mut it = flat.chunks_exact(n).map(<[u64]>::to_vec);
        let (s, i, r, b) = (it.next(), it.next(), it.next(), it.next());
        Self::new(
            s.unwrap_or_default(),
            i.unwrap_or_default(),
            r.unwrap_or_default(),
            b.unwrap_or_default(),
        )
    }
}

/// `H` for human compartments, `K` for bacteria.
pub fn renormalisation(c: Compartment, scaling: &ScalingParams) -> f64 {
    if c.is_human() {
        scaling.h as f64
    } else {
        scaling.k as f64
    }
}
