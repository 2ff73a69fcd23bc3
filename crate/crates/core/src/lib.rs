//! Spatial stochastic SIRB cholera dynamics on a periodic one-dimensional
//! lattice.
//!
//! Humans (susceptible, infected, recovered) live on the sites of a cycle of
//! `N` nodes; bacteria live in per-site water reservoirs and hop to the
//! neighbouring sites with a directional bias. The crate provides
//!
//! * [`lattice`]: periodic step-function fields and the discrete operators
//!   (centered and one-sided gradients, Laplacian, biased transport `A_N`);
//! * [`stochastic`]: an exact event-driven simulator for the counting process
//!   and a tau-leaping accelerator;
//! * [`deterministic`]: the reaction field, the lattice ODE system, the
//!   homogeneous ODE, the decoupled bacteria equation and closed-form linear
//!   solutions;
//! * [`diagnostics`]: sup-norm distances, compensated martingales and the
//!   large-population convergence experiments;
//! * [`io`] and [`config`]: file formats, replay and run configuration.

pub mod config;
pub mod deterministic;
pub mod diagnostics;
mod fields;
mod error;
pub mod io;
pub mod lattice;
pub mod params;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
pub use fields::{
    Compartment, CompartmentFields, FieldSelection, InitialCondition, SampleGrid, SampledPath,
};
pub use lattice::{LatticeField, TransportCoefficients};
pub use params::{EpidemicParams, ScalingParams};

/// Version string embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
