#![allow(dead_code)]

use std::f64::consts::PI;

use sirb_core::stochastic::{apply_event, event_rate, EventKind, SystemState};
use sirb_core::{Compartment, EpidemicParams, ScalingParams, TransportCoefficients};

/// Generic rates, all in [0.1, 2], with transport on an `n`-site lattice.
pub fn generic_params(n: usize) -> EpidemicParams {
    let tc = TransportCoefficients::new(1.0, 0.7, n).unwrap();
    EpidemicParams::new(0.2, 0.3, 0.5, 0.4, 1.5, 1.0, 0.5, tc).unwrap()
}

/// `S = 0.9 + 0.05 sin 2πx`, `I = 0.1`, `R = 0`, `B = 0.5`.
pub fn smooth_initial(x: f64) -> [f64; 4] {
    [0.9 + 0.05 * (2.0 * PI * x).sin(), 0.1, 0.0, 0.5]
}

/// Quadratic-variation rates by brute force over the event table: for every
/// event with positive rate, apply it and square the resulting change of the
/// rescaled fields. Indexed `[site][S, I, R, B, B·B_next, B·B_prev]`, scaled
/// by `H` (humans) or `K` (bacteria).
pub fn brute_force_amplitudes(state: &SystemState, params: &EpidemicParams, scaling: &ScalingParams) -> Vec<[f64; 6]> {
    let n = state.n();
    let renorm = [scaling.h as f64, scaling.h as f64, scaling.h as f64, scaling.k as f64];
    let mut out = vec![[0.0; 6]; n];
    for site in 0..n {
        for kind in EventKind::ALL {
            let rate = event_rate(state, params, scaling, kind, site);
            if rate == 0.0 {
                continue;
            }
            let next = apply_event(state, sirb_core::stochastic::Event { kind, site }).unwrap();
            let delta = |c: Compartment, i: usize| {
                (next.count(c, i) as f64 - state.count(c, i) as f64) / renorm[c.index()]
            };
            for i in 0..n {
                for c in Compartment::ALL {
                    let d = delta(c, i);
                    out[i][c.index()] += renorm[c.index()] * rate * d * d;
                }
                let b = delta(Compartment::B, i);
                out[i][4] += renorm[3] * rate * b * delta(Compartment::B, (i + 1) % n);
                out[i][5] += renorm[3] * rate * b * delta(Compartment::B, (i + n - 1) % n);
            }
        }
    }
    out
}
