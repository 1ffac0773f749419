// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde_json::json;

use super::result::{ExperimentResult, Metadata};
use super::setup::Setup;
use crate::device::stark_invert;
use crate::error::{Error, Result};
use crate::jba::{spinodals, JbaOperatingPoint, PowerReference};

/// AC-Stark calibration of the intracavity photon number with the qubit in
/// |0> and an auxiliary tone at `f_drive` swept upward through `grid` (dB).
///
/// Below the upward switching threshold the resonator sits on the low
/// branch; above it, on the high branch. Series: `n` (steady-state photon
/// number), `f01_GHz` (shifted qubit frequency) and `n_bar` (photon number
/// recovered from the frequency). Scalars: `threshold_dB`, `n_bar_below`
/// and `n_bar_above` on either side of the jump.
pub fn run_ac_stark(setup: &Setup, f_drive: f64, grid: &[f64]) -> Result<ExperimentResult> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("P_grid", "must be non-empty and sorted"));
    }
    let point = JbaOperatingPoint::for_state(&setup.device, &setup.map, 0, f_drive)?;
    let power = PowerReference::new(&setup.device, f_drive);
    let threshold = spinodals(&point).ok().map(|s| s.eps2_up);
    let mut n = Vec::with_capacity(grid.len());
    let mut f01 = Vec::with_capacity(grid.len());
    let mut n_bar = Vec::with_capacity(grid.len());
    for &p in grid {
        let eps2 = power.eps2(p);
        let roots = crate::jba::steady_states(&point, eps2.sqrt());
        let switched = threshold.is_some_and(|t| eps2 >= t);
        let photons = if switched { roots[roots.len() - 1] } else { roots[0] };
        let f = setup.map.stark_at(photons)?;
        n.push(photons);
        f01.push(f);
        n_bar.push(stark_invert(&setup.map, f)?);
    }
    let mut res = ExperimentResult::new(
        "P_dB",
        grid.to_vec(),
        Metadata::new(
            "ac_stark",
            0,
            setup.device.hash(),
            json!({"delta": setup.delta, "f_drive": f_drive}),
        ),
    );
    let zeros = vec![0.0; grid.len()];
    res.push_series("n", n, zeros.clone())?;
    res.push_series("f01_GHz", f01, zeros.clone())?;
    res.push_series("n_bar", n_bar.clone(), zeros)?;
    if let Some(t) = threshold {
        let p_b = power.power_db(t);
        res.set("threshold_dB", p_b, 0.0);
        if let Some(k) = grid.iter().rposition(|&p| power.eps2(p) < t) {
            res.set("n_bar_below", n_bar[k], 0.0);
        }
        if let Some(k) = grid.iter().position(|&p| power.eps2(p) >= t) {
            res.set("n_bar_above", n_bar[k], 0.0);
        }
    }
    Ok(res)
}
