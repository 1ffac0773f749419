// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integration step (ns).
pub const DEFAULT_DT_NS: f64 = 0.5;
/// Default hold power relative to the sampling power (dB).
pub const DEFAULT_HOLD_OFFSET_DB: f64 = -3.0;

/// Sample-and-hold readout envelope: a linear ramp in power over `t_rise`,
/// a plateau at `p_sample` for `t_sample`, then `p_hold` for `t_hold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutPulse {
    /// Drive frequency (GHz).
    pub f_drive: f64,
    /// Sampling power (dB).
    pub p_sample: f64,
    /// Hold power (dB).
    pub p_hold: f64,
    pub t_rise: f64,
    pub t_sample: f64,
    pub t_hold: f64,
    /// Grid step (ns).
    #[serde(default = "default_dt")]
    pub dt: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT_NS
}

impl ReadoutPulse {
    pub fn new(f_drive: f64, p_sample: f64, t_rise: f64, t_sample: f64, t_hold: f64) -> Result<Self> {
        let pulse = Self {
            f_drive,
            p_sample,
            p_hold: p_sample + DEFAULT_HOLD_OFFSET_DB,
            t_rise,
            t_sample,
            t_hold,
            dt: DEFAULT_DT_NS,
        };
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn with_sample_power(mut self, p_sample: f64) -> Self {
        let offset = self.p_hold - self.p_sample;
        self.p_sample = p_sample;
        self.p_hold = p_sample + offset;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("t_R", self.t_rise), ("t_S", self.t_sample), ("t_H", self.t_hold)] {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::param("dt", "must lie in (0, 1] ns"));
        }
        if !(self.f_drive > 0.0) {
            return Err(Error::param("f", "must be > 0"));
        }
        if !self.p_sample.is_finite() || !(self.p_hold <= self.p_sample) {
            return Err(Error::param("P_H", "must not exceed P_S"));
        }
        Ok(())
    }

    /// End of the window in which the resonator can switch (ns).
    pub fn decision_time(&self) -> f64 {
        self.t_rise + self.t_sample
    }

    pub fn duration(&self) -> f64 {
        self.t_rise + self.t_sample + self.t_hold
    }

    /// Number of grid steps covering [0, t_end].
    pub fn steps(&self, t_end: f64) -> usize {
        (t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    /// Power at time `t` relative to `p_sample`, in linear units.
    pub fn envelope(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else if t < self.t_rise {
            t / self.t_rise
        } else if t <= self.decision_time() {
            1.0
        } else if t <= self.duration() {
            10f64.powf((self.p_hold - self.p_sample) / 10.0)
        } else {
            0.0
        }
    }

    /// Envelope in dB at time `t` (`-inf` when off).
    pub fn power_db(&self, t: f64) -> f64 {
        let e = self.envelope(t);
        if e > 0.0 {
            self.p_sample + 10.0 * e.log10()
        } else {
            f64::NEG_INFINITY
        }
    }
}
