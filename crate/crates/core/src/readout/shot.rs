// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::hazard::{HazardTable, ReadoutModel};
use super::pulse::ReadoutPulse;
use super::rng::ShotSeed;
use crate::device::{CoherenceBudget, DeviceParams, DispersiveMap};
use crate::error::{Error, Result};
use crate::jba::EscapeModel;

/// A single downward qubit transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Time from the start of the readout pulse (ns).
    pub t: f64,
    pub from: u8,
    pub to: u8,
}

/// Sampled homodyne quadratures.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub t_ns: Vec<f64>,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub prepared_state: u8,
    /// Qubit state when the pulse ends.
    pub final_state: u8,
    pub jumps: Vec<Jump>,
    pub bifurcated: bool,
    pub bifurcation_time: Option<f64>,
    pub trace: Option<Trace>,
    pub seed: ShotSeed,
}

/// Outcome of one readout without bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotOutcome {
    pub bifurcation_time: Option<f64>,
    pub final_state: u8,
    pub jumps: Vec<Jump>,
}

/// Competing-hazards sampler for one pulse shape.
///
/// Each shot draws a unit exponential budget; the resonator switches when
/// the hazard integrated along the qubit trajectory exceeds it. Qubit decay
/// times are drawn from the cascade rates and continue through the hold.
#[derive(Debug, Clone)]
pub struct ShotSimulator {
    pub table: HazardTable,
    /// Decay rate out of each level (1/ns).
    pub rates: [f64; 3],
    pub duration: f64,
}

impl ShotSimulator {
    pub fn new(model: &ReadoutModel, pulse: &ReadoutPulse) -> Result<Self> {
        Ok(Self {
            table: model.hazard_table(pulse)?,
            rates: model.decay_rates(),
            duration: pulse.duration(),
        })
    }

    pub fn run(&self, prepared: u8, rng: &mut impl Rng) -> ShotOutcome {
        let budget: f64 = rng.sample(Exp1);
        let window = self.table.t_end;
        let mut state = prepared;
        let mut t = 0.0;
        let mut spent = 0.0;
        let mut switched = None;
        let mut jumps = Vec::new();
        loop {
            let s = state as usize;
            let rate = self.rates[s];
            let t_jump = if rate > 0.0 {
                t + rng.sample::<f64, _>(Exp1) / rate
            } else {
                f64::INFINITY
            };
            if switched.is_none() && t < window {
                let seg_end = t_jump.min(window);
                let start = self.table.cumulative(s, t);
                let gained = self.table.cumulative(s, seg_end) - start;
                if spent + gained >= budget {
                    let at = self.table.crossing(s, start + budget - spent).unwrap_or(seg_end);
                    switched = Some(at.clamp(t, seg_end));
                } else {
                    spent += gained;
                }
            }
            if t_jump >= self.duration {
                break;
            }
            jumps.push(Jump {
                t: t_jump,
                from: state,
                to: state - 1,
            });
            state -= 1;
            t = t_jump;
        }
        ShotOutcome {
            bifurcation_time: switched,
            final_state: state,
            jumps,
        }
    }

    pub fn record(&self, prepared: u8, seed: ShotSeed) -> ShotRecord {
        let out = self.run(prepared, &mut seed.rng());
        ShotRecord {
            prepared_state: prepared,
            final_state: out.final_state,
            jumps: out.jumps,
            bifurcated: out.bifurcation_time.is_some(),
            bifurcation_time: out.bifurcation_time,
            trace: None,
            seed,
        }
    }
}

/// Qubit state after idling for `t` ns from `state`.
pub fn idle(state: u8, cascade: &CoherenceBudget, t: f64, rng: &mut impl Rng) -> u8 {
    let rates = [0.0, cascade.rate_10 * 1e-3, cascade.rate_21 * 1e-3];
    let mut state = state;
    let mut elapsed = 0.0;
    while state > 0 {
        let rate = rates[state as usize];
        if rate <= 0.0 {
            break;
        }
        elapsed += rng.sample::<f64, _>(Exp1) / rate;
        if elapsed >= t {
            break;
        }
        state -= 1;
    }
    state
}

/// Simulates one readout of a qubit prepared in `prepared`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_shot(
    prepared: u8,
    pulse: &ReadoutPulse,
    device: &DeviceParams,
    map: &DispersiveMap,
    escape: &EscapeModel,
    cascade: &CoherenceBudget,
    seed: ShotSeed,
) -> Result<ShotRecord> {
    if prepared > 2 {
        return Err(Error::param("prepared", "must be 0, 1 or 2"));
    }
    let model = ReadoutModel::new(device, map, pulse.f_drive, *escape, cascade.clone())?;
    Ok(ShotSimulator::new(&model, pulse)?.record(prepared, seed))
}
