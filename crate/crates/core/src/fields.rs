//! Four-compartment fields and time-sampled paths of them.

use serde::Serialize;

use crate::lattice::{self, LatticeField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Compartment {
    S,
    I,
    R,
    B,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Compartment::S, Compartment::I, Compartment::R, Compartment::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Compartment::S => "S",
            Compartment::I => "I",
            Compartment::R => "R",
            Compartment::B => "B",
        }
    }

    pub fn is_human(self) -> bool {
        self != Compartment::B
    }
}

/// Densities of the four compartments on a common lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentFields {
    fields: [LatticeField; 4],
}

impl CompartmentFields {
    pub fn new(s: LatticeField, i: LatticeField, r: LatticeField, b: LatticeField) -> Result<Self> {
        let n = s.n();
        if [&i, &r, &b].iter().any(|f| f.n() != n) {
            return Err(Error::Mismatch("compartment fields on different lattices".into()));
        }
        Ok(Self { fields: [s, i, r, b] })
    }

    pub fn constant(n: usize, y: [f64; 4]) -> Result<Self> {
        Self::new(
            LatticeField::constant(n, y[0])?,
            LatticeField::constant(n, y[1])?,
            LatticeField::constant(n, y[2])?,
            LatticeField::constant(n, y[3])?,
        )
    }

    /// Projects a compartment profile `x ↦ (S, I, R, B)` onto `n` sites.
    pub fn project(initial: &dyn InitialCondition, n: usize, quadrature_points: usize) -> Result<Self> {
        let mut out = Vec::with_capacity(4);
        for c in Compartment::ALL {
            out.push(lattice::project(|x| initial.value(c, x), n, quadrature_points)?);
        }
        let [s, i, r, b]: [LatticeField; 4] = out.try_into().expect("four compartments");
        Self::new(s, i, r, b)
    }

    /// Builds fields from a flat `[S..., I..., R..., B...]` vector.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 4 != 0 {
            return Err(Error::Mismatch(format!("flat state of length {} is not 4N", flat.len())));
        }
        let n = flat.len() / 4;
        let f = |c: usize| LatticeField::new(flat[c * n..(c + 1) * n].to_vec());
        Self::new(f(0)?, f(1)?, f(2)?, f(3)?)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.fields.iter().flat_map(|f| f.values().iter().copied()).collect()
    }

    pub fn n(&self) -> usize {
        self.fields[0].n()
    }

    pub fn get(&self, c: Compartment) -> &LatticeField {
        &self.fields[c.index()]
    }

    pub fn get_mut(&mut self, c: Compartment) -> &mut LatticeField {
        &mut self.fields[c.index()]
    }

    /// The four values at one site.
    pub fn site(&self, i: usize) -> [f64; 4] {
        [
            self.fields[0].values()[i],
            self.fields[1].values()[i],
            self.fields[2].values()[i],
            self.fields[3].values()[i],
        ]
    }

    pub fn site_means(&self) -> [f64; 4] {
        let n = self.n() as f64;
        let mut out = [0.0; 4];
        for (o, f) in out.iter_mut().zip(&self.fields) {
            *o = f.values().iter().sum::<f64>() / n;
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.fields.iter().map(LatticeField::sup_norm).fold(0.0, f64::max)
    }

    /// Largest absolute sitewise difference over the selected compartments.
    pub fn max_abs_diff(&self, other: &Self, selection: FieldSelection) -> Result<f64> {
        let mut m: f64 = 0.0;
        for c in selection.compartments() {
            m = m.max(self.get(*c).max_abs_diff(other.get(*c))?);
        }
        Ok(m)
    }

    /// Block-averages every compartment onto a coarser lattice.
    pub fn restrict(&self, coarse_n: usize) -> Result<Self> {
        let [s, i, r, b] = &self.fields;
        Self::new(
            lattice::restrict(s, coarse_n)?,
            lattice::restrict(i, coarse_n)?,
            lattice::restrict(r, coarse_n)?,
            lattice::restrict(b, coarse_n)?,
        )
    }
}

/// Which compartments take part in a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FieldSelection {
    All,
    Only(Compartment),
}

impl FieldSelection {
    pub fn compartments(&self) -> &'static [Compartment] {
        match self {
            FieldSelection::All => &Compartment::ALL,
            FieldSelection::Only(Compartment::S) => &[Compartment::S],
            FieldSelection::Only(Compartment::I) => &[Compartment::I],
            FieldSelection::Only(Compartment::R) => &[Compartment::R],
            FieldSelection::Only(Compartment::B) => &[Compartment::B],
        }
    }
}

/// A spatial profile for each compartment on the unit interval.
pub trait InitialCondition: Sync {
    fn value(&self, c: Compartment, x: f64) -> f64;
}

impl<F> InitialCondition for F
where
    F: Fn(f64) -> [f64; 4] + Sync,
{
    fn value(&self, c: Compartment, x: f64) -> f64 {
        self(x)[c.index()]
    }
}

/// Increasing observation times `0 = t_0 < t_1 < … ≤ horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    times: Vec<f64>,
    horizon: f64,
}

impl SampleGrid {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::domain(format!("horizon must be finite and >= 0, got {horizon}")));
        }
        if times.first() != Some(&0.0) {
            return Err(Error::domain("sample grid must start at t = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("sample times must be strictly increasing"));
        }
        if times.iter().any(|t| !t.is_finite() || *t > horizon) {
            return Err(Error::domain("sample times must lie in [0, horizon]"));
        }
        Ok(Self { times, horizon })
    }

    /// `points` equally spaced times from 0 to `horizon` inclusive.
    pub fn uniform(horizon: f64, points: usize) -> Result<Self> {
        if horizon == 0.0 || points <= 1 {
            return Self::new(vec![0.0], horizon);
        }
        let steps = (points - 1) as f64;
        let mut times: Vec<f64> = (0..points).map(|k| horizon * k as f64 / steps).collect();
        times[points - 1] = horizon;
        Self::new(times, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Compartment fields observed on a sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub times: Vec<f64>,
    pub states: Vec<CompartmentFields>,
}

impl SampledPath {
    pub fn n(&self) -> Option<usize> {
        self.states.first().map(CompartmentFields::n)
    }

    pub fn last(&self) -> Option<&CompartmentFields> {
        self.states.last()
    }
}
