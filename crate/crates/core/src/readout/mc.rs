// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use rayon::prelude::*;

use super::expect::switching_probability;
use super::hazard::ReadoutModel;
use super::prep::{sample_state, Populations};
use super::pulse::ReadoutPulse;
use super::rng::shot_rng;
use super::shot::ShotSimulator;
use crate::error::{Error, Result};
use crate::jba::SCurveModel;

pub const MIN_SHOTS: u64 = 100;

/// Monte Carlo S-curve: the qubit starts in a state drawn from `pop`, and
/// grid point `k` uses substream `point_offset + k` of `seed`.
#[allow(clippy::too_many_arguments)]
pub fn run_scurve_mc(
    model: &ReadoutModel,
    pulse: &ReadoutPulse,
    pop: &Populations,
    grid: &[f64],
    shots: u64,
    seed: u64,
    point_offset: u64,
    label: &str,
) -> Result<SCurveModel> {
    if shots < MIN_SHOTS {
        return Err(Error::param("shots", format!("must be >= {MIN_SHOTS}")));
    }
    let mut p_b = Vec::with_capacity(grid.len());
    let mut stderr = Vec::with_capacity(grid.len());
    for (k, &power) in grid.iter().enumerate() {
        let sim = ShotSimulator::new(model, &pulse.with_sample_power(power))?;
        let point = point_offset + k as u64;
        let hits = (0..shots)
            .into_par_iter()
            .filter(|&shot| {
                let mut rng = shot_rng(seed, point, shot);
                let state = sample_state(pop, &mut rng);
                sim.run(state, &mut rng).bifurcation_time.is_some()
            })
            .count();
        let p = hits as f64 / shots as f64;
        p_b.push(p);
        stderr.push((p * (1.0 - p) / shots as f64).sqrt());
    }
    Ok(SCurveModel {
        grid: grid.to_vec(),
        p_b,
        stderr,
        shots,
        t_s: pulse.t_sample,
        label: label.to_string(),
    })
}

/// Ensemble-averaged S-curve from population propagation.
pub fn scurve_expected(
    model: &ReadoutModel,
    pulse: &ReadoutPulse,
    pop: &Populations,
    grid: &[f64],
    label: &str,
) -> Result<SCurveModel> {
    let p_b = grid
        .iter()
        .map(|&power| {
            let table = model.hazard_table(&pulse.with_sample_power(power))?;
            Ok(switching_probability(*pop, &table, &model.cascade))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SCurveModel {
        grid: grid.to_vec(),
        stderr: vec![0.0; p_b.len()],
        p_b,
        shots: 0,
        t_s: pulse.t_sample,
        label: label.to_string(),
    })
}

/// Switching times (ns) of `shots` shots, in shot order; `None` for shots
/// that stay in the low state.
pub fn switching_times(
    model: &ReadoutModel,
    pulse: &ReadoutPulse,
    pop: &Populations,
    shots: u64,
    seed: u64,
    point: u64,
) -> Result<Vec<Option<f64>>> {
    let sim = ShotSimulator::new(model, pulse)?;
    Ok((0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = shot_rng(seed, point, shot);
            let state = sample_state(pop, &mut rng);
            sim.run(state, &mut rng).bifurcation_time
        })
        .collect())
}

/// Median of the recorded switching times, ignoring shots that did not switch.
pub fn median_switching_time(times: &[Option<f64>]) -> Option<f64> {
    let mut t: Vec<f64> = times.iter().flatten().copied().collect();
    if t.is_empty() {
        return None;
    }
    t.sort_by(f64::total_cmp);
    let n = t.len();
    Some(if n % 2 == 1 {
        t[n / 2]
    } else {
        0.5 * (t[n / 2 - 1] + t[n / 2])
    })
}
