// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Back-action sequence: a Rabi pulse followed by one or two readouts.
//!
//! Curve R1 is the outcome of the first readout, R2 the outcome of a second
//! readout after `delay`, and R3 a lone second readout after an idle time
//! equal to the first pulse plus the delay. The readout drive does not change
//! the qubit decay rates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hazard::ReadoutModel;
use super::prep::{sample_state, Populations, RabiDrive};
use super::pulse::ReadoutPulse;
use super::rng::shot_rng;
use super::shot::{idle, ShotSimulator};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoReadoutCurves {
    /// Rabi pulse lengths (ns).
    pub grid: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
    pub shots: u64,
}

impl TwoReadoutCurves {
    pub fn stderr(&self, curve: &[f64]) -> Vec<f64> {
        curve
            .iter()
            .map(|p| (p * (1.0 - p) / self.shots as f64).sqrt())
            .collect()
    }
}

/// Runs the three sequences at every Rabi pulse length in `grid`.
///
/// `pulse1 = None` skips the first readout, so R1 is reported as NaN and R2
/// coincides with R3 shot by shot.
#[allow(clippy::too_many_arguments)]
pub fn two_readout_run(
    model: &ReadoutModel,
    initial: &Populations,
    rabi: &RabiDrive,
    grid: &[f64],
    pulse1: Option<&ReadoutPulse>,
    delay: f64,
    pulse2: &ReadoutPulse,
    shots: u64,
    seed: u64,
) -> Result<TwoReadoutCurves> {
    if !(delay >= 0.0) {
        return Err(Error::param("delay", "must be >= 0"));
    }
    if shots == 0 {
        return Err(Error::param("shots", "must be > 0"));
    }
    rabi.validate()?;
    let first = pulse1.map(|p| ShotSimulator::new(model, p)).transpose()?;
    let second = ShotSimulator::new(model, pulse2)?;
    let idle_time = pulse1.map_or(0.0, |p| p.duration()) + delay;
    let cascade = &model.cascade;

    let mut out = TwoReadoutCurves {
        grid: grid.to_vec(),
        r1: Vec::with_capacity(grid.len()),
        r2: Vec::with_capacity(grid.len()),
        r3: Vec::with_capacity(grid.len()),
        shots,
    };
    for (k, &t) in grid.iter().enumerate() {
        let pop = rabi.apply(*initial, t);
        let point = 2 * k as u64;
        let (h1, h2) = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = shot_rng(seed, point, shot);
                let state = sample_state(&pop, &mut rng);
                let (b1, state) = match &first {
                    Some(sim) => {
                        let o = sim.run(state, &mut rng);
                        (o.bifurcation_time.is_some(), o.final_state)
                    }
                    None => (false, state),
                };
                let state = idle(state, cascade, delay, &mut rng);
                let b2 = second.run(state, &mut rng).bifurcation_time.is_some();
                (b1 as u64, b2 as u64)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let h3: u64 = (0..shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = shot_rng(seed, point + 1, shot);
                let state = sample_state(&pop, &mut rng);
                let state = idle(state, cascade, idle_time, &mut rng);
                second.run(state, &mut rng).bifurcation_time.is_some() as u64
            })
            .sum();
        let n = shots as f64;
        out.r1
            .push(if first.is_some() { h1 as f64 / n } else { f64::NAN });
        out.r2.push(h2 as f64 / n);
        out.r3.push(h3 as f64 / n);
    }
    Ok(out)
}
