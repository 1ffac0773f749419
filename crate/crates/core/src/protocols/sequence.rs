// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Control and readout pulse sequences executed at the population level.

use serde::{Deserialize, Serialize};

use super::setup::Setup;
use crate::device::CoherenceBudget;
use crate::error::{Error, Result};
use crate::readout::{decay, Populations, Preparation, RabiDrive, ReadoutPulse, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Square,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    /// Rotation by `angle` on one transition with the preparation errors.
    Control { transition: Transition, angle: f64 },
    /// Rabi drive on 0-1 for the segment duration.
    Rabi { drive: RabiDrive },
    /// Free evolution between two pi/2 pulses, reduced to the final |1>
    /// population of a Ramsey fringe with coherence time `t2` (ns).
    Ramsey { detuning_mhz: f64, t2: f64 },
    /// Free evolution.
    Idle,
    /// Free evolution under an auxiliary tone at the readout frequency.
    /// Decay rates do not depend on the drive.
    Drive { power_db: f64 },
    Readout { pulse: ReadoutPulse },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Carrier frequency (GHz); zero for idle segments.
    pub frequency: f64,
    pub envelope: Envelope,
    /// Start time (ns).
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.start + s.duration)
    }

    /// Appends a segment right after the previous one.
    pub fn push(&mut self, kind: SegmentKind, frequency: f64, duration: f64) -> Result<&mut Self> {
        let zero_ok = matches!(
            kind,
            SegmentKind::Idle | SegmentKind::Drive { .. } | SegmentKind::Rabi { .. } | SegmentKind::Ramsey { .. }
        );
        if !(duration > 0.0 || (zero_ok && duration == 0.0)) || !duration.is_finite() {
            return Err(Error::param("duration", "must be > 0"));
        }
        if self
            .segments
            .iter()
            .any(|s| matches!(s.kind, SegmentKind::Readout { .. }))
        {
            return Err(Error::param("segments", "nothing may follow the readout"));
        }
        let start = self.end();
        self.segments.push(Segment {
            kind,
            frequency,
            envelope: Envelope::Square,
            start,
            duration,
        });
        Ok(self)
    }

    pub fn pi(&mut self, setup: &Setup, transition: Transition) -> Result<&mut Self> {
        self.rotation(setup, transition, std::f64::consts::PI)
    }

    pub fn rotation(&mut self, setup: &Setup, transition: Transition, angle: f64) -> Result<&mut Self> {
        let f = match transition {
            Transition::Ge => setup.spectrum.f01,
            Transition::Ef => setup.spectrum.f12,
        };
        let t = setup.prep.t_pi * (angle / std::f64::consts::PI).abs();
        self.push(SegmentKind::Control { transition, angle }, f, t)
    }

    pub fn readout(&mut self, pulse: ReadoutPulse) -> Result<&mut Self> {
        self.push(SegmentKind::Readout { pulse }, pulse.f_drive, pulse.duration())
    }

    pub fn readout_pulse(&self) -> Option<&ReadoutPulse> {
        self.segments.iter().find_map(|s| match &s.kind {
            SegmentKind::Readout { pulse } => Some(pulse),
            _ => None,
        })
    }

    /// Qubit populations when the readout starts.
    pub fn populations(
        &self,
        initial: Populations,
        prep: &Preparation,
        cascade: &CoherenceBudget,
    ) -> Populations {
        let mut pop = initial;
        for seg in &self.segments {
            pop = match &seg.kind {
                SegmentKind::Control { transition, angle } => {
                    prep.rotate(pop, *transition, *angle, cascade)
                }
                SegmentKind::Rabi { drive } => drive.apply(pop, seg.duration),
                SegmentKind::Ramsey { detuning_mhz, t2 } => {
                    let phase = 2.0 * std::f64::consts::PI * detuning_mhz * 1e-3 * seg.duration;
                    let excited = 0.5 * (1.0 + (-seg.duration / t2).exp() * phase.cos());
                    // residual |1> before the first pulse inverts the fringe
                    let mixed = pop[1] + (pop[0] - pop[1]) * excited;
                    [pop[0] + pop[1] - mixed, mixed, pop[2]]
                }
                SegmentKind::Idle | SegmentKind::Drive { .. } => decay(pop, cascade, seg.duration),
                SegmentKind::Readout { .. } => break,
            };
        }
        pop
    }
}

/// Readout optionally preceded by a pi pulse on 1-2 that shelves |1> in |2>.
pub fn build_composite_readout(
    shelve: bool,
    setup: &Setup,
    pulse: ReadoutPulse,
) -> Result<PulseSequence> {
    let mut seq = PulseSequence::new();
    if shelve {
        seq.pi(setup, Transition::Ef)?;
    }
    seq.readout(pulse)?;
    Ok(seq)
}

/// Prefixes `tail` with the control pulses that prepare `state`.
pub fn prepare_then(setup: &Setup, state: usize, tail: &PulseSequence) -> Result<PulseSequence> {
    let mut seq = PulseSequence::new();
    if state >= 1 {
        seq.pi(setup, Transition::Ge)?;
    }
    if state >= 2 {
        seq.pi(setup, Transition::Ef)?;
    }
    if state > 2 {
        return Err(Error::param("state", "must be 0, 1 or 2"));
    }
    for s in &tail.segments {
        seq.push(s.kind.clone(), s.frequency, s.duration)?;
    }
    Ok(seq)
}
