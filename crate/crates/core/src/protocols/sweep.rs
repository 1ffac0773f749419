// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde_json::json;

use super::analysis::{golden_section, scurve_shift_match, shifted_scurve};
use super::experiments::{Reader, Sampling};
use super::result::{ExperimentResult, Metadata};
use super::sequence::{build_composite_readout, prepare_then};
use super::setup::Setup;
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::jba::{EscapeModel, PowerReference};
use crate::readout::{scurve_expected, switching_probability, Populations, Preparation, ReadoutPulse};

/// Power optimization tolerance (dB).
pub const POWER_TOL_DB: f64 = 0.05;

/// Start populations of `state` read out with or without shelving.
pub fn readout_populations(
    setup: &Setup,
    pulse: &ReadoutPulse,
    state: usize,
    shelve: bool,
) -> Result<Populations> {
    let tail = build_composite_readout(shelve, setup, *pulse)?;
    let seq = prepare_then(setup, state, &tail)?;
    Ok(seq.populations(setup.prep.initial(), &setup.prep, &setup.budget))
}

/// Sampling power maximizing the expected contrast between `pop_hi` and
/// `pop_lo`, searched between 4 dB below the state-1 threshold and 1 dB
/// above the state-0 threshold.
pub fn optimal_power(
    setup: &Setup,
    pulse: &ReadoutPulse,
    pop_lo: &Populations,
    pop_hi: &Populations,
) -> Result<f64> {
    let model = setup.model(pulse.f_drive)?;
    let power = model.power_reference();
    let thr = model.thresholds();
    let (Some(t0), Some(t1)) = (thr[0], thr[1]) else {
        return Err(Error::NoBistability {
            omega: model.points[1].omega,
        });
    };
    let lo = power.power_db(t0.min(t1)) - 4.0;
    let hi = power.power_db(t0.max(t1)) + 1.0;
    let mut failure = None;
    let best = golden_section(
        |p| match model.hazard_table(&pulse.with_sample_power(p)) {
            Ok(table) => {
                switching_probability(*pop_hi, &table, &model.cascade)
                    - switching_probability(*pop_lo, &table, &model.cascade)
            }
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        POWER_TOL_DB,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Readout timing shared by every point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    /// Readout frequency below the bare cavity (MHz).
    pub offset_mhz: f64,
    pub t_rise: f64,
    pub t_sample: f64,
    pub t_hold: f64,
}

struct SweepPoint {
    contrast: (f64, f64),
    delta_f1: f64,
    pull_01: f64,
    t1: f64,
    t_phi: f64,
    power: f64,
}

fn sweep_point(
    setup: &Setup,
    timing: &Timing,
    shots: u64,
    seed: u64,
    index: u64,
) -> Result<SweepPoint> {
    let f = setup.readout_frequency(timing.offset_mhz);
    let base = ReadoutPulse::new(f, 0.0, timing.t_rise, timing.t_sample, timing.t_hold)?;
    let pop0 = readout_populations(setup, &base, 0, false)?;
    let pop1 = readout_populations(setup, &base, 1, false)?;
    let power = optimal_power(setup, &base, &pop0, &pop1)?;
    let pulse = base.with_sample_power(power);
    let reader = Reader::new(&setup.model(f)?, &pulse)?;
    let sampling = Sampling::MonteCarlo { shots };
    let (p1, e1) = reader.measure(&pop1, sampling, seed, 2 * index);
    let (p0, e0) = reader.measure(&pop0, sampling, seed, 2 * index + 1);

    let model = setup.model(f)?;
    // from well below the lowest threshold up to just past the optimum
    let lowest = model
        .thresholds()
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, &t| m.min(t));
    let start = model.power_reference().power_db(lowest).min(power) - 4.0;
    let steps = ((power + 1.0 - start) / 0.05).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|k| start + 0.05 * k as f64).collect();
    let s1 = scurve_expected(&model, &base, &pop1, &grid, "S1")?;
    let bracket = (-1.0, 3.0 * setup.map.pull_01 + 2.0);
    let delta_f1 = scurve_shift_match(
        &s1,
        |shift| shifted_scurve(setup, &base, &pop0, &grid, shift),
        bracket,
    )?;
    Ok(SweepPoint {
        contrast: (p1 - p0, e1.hypot(e0)),
        delta_f1,
        pull_01: setup.map.pull_01,
        t1: setup.budget.t1,
        t_phi: setup.budget.t_phi,
        power,
    })
}

/// Readout contrast and coherence versus qubit-cavity detuning. Each point
/// retunes the flux, optimizes the sampling power, and estimates the
/// contrast with `shots` shots per state. Points that fail are reported as
/// NaN with a note.
#[allow(clippy::too_many_arguments)]
pub fn contrast_vs_detuning(
    device: &DeviceParams,
    deltas: &[f64],
    timing: &Timing,
    escape: Option<EscapeModel>,
    prep: Preparation,
    shots: u64,
    seed: u64,
) -> Result<ExperimentResult> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("delta_grid", "must be non-empty and sorted"));
    }
    Sampling::MonteCarlo { shots }.validate()?;
    let mut cols: Vec<Vec<f64>> = (0..7).map(|_| Vec::with_capacity(deltas.len())).collect();
    let mut notes = Vec::new();
    for (k, &delta) in deltas.iter().enumerate() {
        let point = Setup::new(device, delta).and_then(|s| {
            let s = s.with_prep(prep);
            let s = match escape {
                Some(e) => s.with_escape(e),
                None => s,
            };
            sweep_point(&s, timing, shots, seed, k as u64)
        });
        match point {
            Ok(p) => {
                for (c, v) in cols.iter_mut().zip([
                    p.contrast.0,
                    p.contrast.1,
                    p.delta_f1,
                    p.pull_01,
                    p.t1,
                    p.t_phi,
                    p.power,
                ]) {
                    c.push(v);
                }
            }
            Err(e) => {
                notes.push(format!("delta = {delta} GHz: {e}"));
                for c in cols.iter_mut() {
                    c.push(f64::NAN);
                }
            }
        }
    }
    let mut res = ExperimentResult::new(
        "delta_GHz",
        deltas.to_vec(),
        Metadata::new(
            "sweep_detuning",
            seed,
            device.hash(),
            json!({"timing": timing, "shots": shots, "escape": escape, "prep": prep}),
        ),
    );
    let zeros = vec![0.0; deltas.len()];
    res.push_series("contrast", cols[0].clone(), cols[1].clone())?;
    for (name, k) in [("delta_f1_MHz", 2), ("pull_01_MHz", 3), ("T1_us", 4), ("T_phi_us", 5), ("P_opt_dB", 6)] {
        res.push_series(name, cols[k].clone(), zeros.clone())?;
    }
    res.notes = notes;
    Ok(res)
}

/// Width (dB) between 10% and 90% switching of an S-curve, by linear
/// interpolation on its grid.
pub fn scurve_width(grid: &[f64], p_b: &[f64]) -> Option<f64> {
    let cross = |level: f64| {
        (1..grid.len()).find_map(|k| {
            (p_b[k - 1] < level && p_b[k] >= level).then(|| {
                grid[k - 1] + (level - p_b[k - 1]) / (p_b[k] - p_b[k - 1]) * (grid[k] - grid[k - 1])
            })
        })
    };
    Some(cross(0.9)? - cross(0.1)?)
}

/// Input power (dB) of the upward threshold for each qubit state.
pub fn state_thresholds(setup: &Setup, f_drive: f64) -> Result<[Option<f64>; 3]> {
    let model = setup.model(f_drive)?;
    let power: PowerReference = model.power_reference();
    Ok(model.thresholds().map(|t| t.map(|v| power.power_db(v))))
}
