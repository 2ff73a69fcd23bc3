//! Biological rate constants and population scalings.

use serde::Serialize;

use crate::lattice::{check_sites, TransportCoefficients};
use crate::{Error, Result};

/// Rate constants of the SIRB model, all per unit time.
///
/// The contamination constants `p` and `W` only ever appear as the ratio
/// `p/W`, so they are stored as one number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpidemicParams {
    /// Natural human birth and death rate.
    pub mu: f64,
    /// Cholera-induced mortality of infected humans.
    pub alpha: f64,
    /// Recovery rate.
    pub gamma: f64,
    /// Loss of immunity.
    pub rho: f64,
    /// Contact rate with contaminated water.
    pub beta: f64,
    /// Shedding of bacteria by one infected into a unit reservoir.
    pub p_over_w: f64,
    /// Bacterial death rate.
    pub mu_b: f64,
    pub transport: TransportCoefficients,
}

impl EpidemicParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        alpha: f64,
        gamma: f64,
        rho: f64,
        beta: f64,
        p_over_w: f64,
        mu_b: f64,
        transport: TransportCoefficients,
    ) -> Result<Self> {
        let p = Self {
            mu,
            alpha,
            gamma,
            rho,
            beta,
            p_over_w,
            mu_b,
            transport,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.named_rates() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("rate `{name}` must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn named_rates(&self) -> [(&'static str, f64); 9] {
        [
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("rho", self.rho),
            ("beta", self.beta),
            ("p_over_w", self.p_over_w),
            ("mu_b", self.mu_b),
            ("ell", self.transport.ell()),
            ("p_out", self.transport.p_out()),
        ]
    }

    /// The same continuum model on a lattice of `n` sites.
    pub fn with_resolution(&self, n: usize) -> Result<Self> {
        Ok(Self {
            transport: self.transport.at_resolution(n)?,
            ..*self
        })
    }
}

/// Lattice size and the renormalisation constants for humans (`h`) and
/// bacteria (`k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ScalingParams {
    pub n: usize,
    pub h: u64,
    pub k: u64,
}

impl ScalingParams {
    pub fn new(n: usize, h: u64, k: u64) -> Result<Self> {
        check_sites(n)?;
        if h < 1 || k < 1 {
            return Err(Error::domain(format!("H and K must be >= 1, got H = {h}, K = {k}")));
        }
        Ok(Self { n, h, k })
    }

    /// The ratio `H/K` entering the bacterial source term.
    pub fn hk_ratio(&self) -> f64 {
        self.h as f64 / self.k as f64
    }
}
