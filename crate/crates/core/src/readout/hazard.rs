// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::pulse::ReadoutPulse;
use crate::device::{CoherenceBudget, DeviceParams, DispersiveMap};
use crate::error::{Error, Result};
use crate::jba::{spinodals, EscapeModel, JbaOperatingPoint, PowerReference};

/// Everything needed to turn a readout pulse into per-state switching
/// hazards at one qubit bias point and readout frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    pub points: [JbaOperatingPoint; 3],
    pub escape: EscapeModel,
    pub cascade: CoherenceBudget,
    pub atten_db: f64,
}

impl ReadoutModel {
    pub fn new(
        device: &DeviceParams,
        map: &DispersiveMap,
        f_drive: f64,
        escape: EscapeModel,
        cascade: CoherenceBudget,
    ) -> Result<Self> {
        let point = |s| JbaOperatingPoint::for_state(device, map, s, f_drive);
        Ok(Self {
            points: [point(0)?, point(1)?, point(2)?],
            escape,
            cascade,
            atten_db: device.atten_db,
        })
    }

    pub fn f_drive(&self) -> f64 {
        self.points[0].f_drive
    }

    pub fn power_reference(&self) -> PowerReference {
        PowerReference {
            atten_db: self.atten_db,
            kappa: self.points[0].kappa,
            f_drive: self.f_drive(),
        }
    }

    /// Upward switching threshold eps_B^2 per state; `None` when the
    /// resonator is monostable and never latches.
    pub fn thresholds(&self) -> [Option<f64>; 3] {
        self.points
            .map(|p| spinodals(&p).ok().filter(|_| p.is_bistable()).map(|s| s.eps2_up))
    }

    /// Decay rates out of each level (1/ns).
    pub fn decay_rates(&self) -> [f64; 3] {
        [0.0, self.cascade.rate_10 * 1e-3, self.cascade.rate_21 * 1e-3]
    }

    pub fn hazard_table(&self, pulse: &ReadoutPulse) -> Result<HazardTable> {
        pulse.validate()?;
        if (pulse.f_drive - self.f_drive()).abs() > 1e-12 {
            return Err(Error::param("f", "pulse frequency differs from the readout model"));
        }
        let eps2_sample = self.power_reference().eps2(pulse.p_sample);
        let thresholds = self.thresholds();
        let t_end = pulse.decision_time();
        let n = pulse.steps(t_end);
        let cum = thresholds.map(|threshold| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(n + 1);
            out.push(0.0);
            for k in 0..n {
                let t0 = k as f64 * pulse.dt;
                let t1 = ((k + 1) as f64 * pulse.dt).min(t_end);
                if let Some(eps2_b) = threshold {
                    let ratio = eps2_sample * pulse.envelope(0.5 * (t0 + t1)) / eps2_b;
                    acc += self.escape.rate_at_ratio(ratio) * (t1 - t0) * 1e-9;
                }
                out.push(acc);
            }
            out
        });
        Ok(HazardTable {
            dt: pulse.dt,
            t_end,
            cum,
        })
    }
}

/// Cumulative switching hazard per qubit state on a uniform time grid,
/// linear between nodes (piecewise-constant rate).
#[derive(Debug, Clone, PartialEq)]
pub struct HazardTable {
    pub dt: f64,
    pub t_end: f64,
    pub cum: [Vec<f64>; 3],
}

impl HazardTable {
    /// Constant rates (Hz) over `[0, t_end]` ns.
    pub fn constant(rates: [f64; 3], t_end: f64, dt: f64) -> Self {
        let n = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
        let cum = rates.map(|r| {
            (0..=n)
                .map(|k| r * (k as f64 * dt).min(t_end) * 1e-9)
                .collect()
        });
        Self { dt, t_end, cum }
    }

    pub fn node_time(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.t_end)
    }

    /// Integrated hazard in state `s` from 0 to `t` (clamped to the window).
    pub fn cumulative(&self, s: usize, t: f64) -> f64 {
        let c = &self.cum[s];
        let t = t.clamp(0.0, self.t_end);
        let n = c.len() - 1;
        if n == 0 {
            return 0.0;
        }
        let k = ((t / self.dt) as usize).min(n - 1);
        let (t0, t1) = (self.node_time(k), self.node_time(k + 1));
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        c[k] + w * (c[k + 1] - c[k])
    }

    /// Earliest time at which the integrated hazard in state `s` reaches
    /// `level`, if it does within the window.
    pub fn crossing(&self, s: usize, level: f64) -> Option<f64> {
        let c = &self.cum[s];
        if level <= 0.0 {
            return Some(0.0);
        }
        if *c.last()? < level {
            return None;
        }
        let k = c.partition_point(|&h| h < level).max(1);
        let (h0, h1) = (c[k - 1], c[k]);
        let (t0, t1) = (self.node_time(k - 1), self.node_time(k));
        let w = if h1 > h0 { (level - h0) / (h1 - h0) } else { 1.0 };
        Some(t0 + w * (t1 - t0))
    }

    /// Hazard accumulated in each grid step for state `s`.
    pub fn increments(&self, s: usize) -> impl Iterator<Item = f64> + '_ {
        self.cum[s].windows(2).map(|w| w[1] - w[0])
    }

    pub fn steps(&self) -> usize {
        self.cum[0].len() - 1
    }
}
