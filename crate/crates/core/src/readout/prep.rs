// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Population-level qubit control: imperfect rotations, residual thermal
//! population, and free decay along the 2 -> 1 -> 0 cascade.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::CoherenceBudget;
use crate::error::{Error, Result};

/// Occupation probabilities of |0>, |1>, |2>.
pub type Populations = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    #[serde(rename = "01")]
    Ge,
    #[serde(rename = "12")]
    Ef,
}

/// Imperfections of state preparation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preparation {
    /// Equilibrium population of |1> before any pulse.
    pub thermal: f64,
    /// Fraction left behind by a pi pulse.
    pub pi_error: f64,
    /// Fraction of |0> promoted to |1> by a pi pulse on 1-2.
    pub spurious: f64,
    /// pi pulse length (ns).
    pub t_pi: f64,
}

impl Default for Preparation {
    fn default() -> Self {
        Self {
            thermal: 0.01,
            pi_error: 0.01,
            spurious: 0.01,
            t_pi: 20.0,
        }
    }
}

impl Preparation {
    pub fn ideal() -> Self {
        Self {
            thermal: 0.0,
            pi_error: 0.0,
            spurious: 0.0,
            t_pi: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("thermal", self.thermal),
            ("pi_error", self.pi_error),
            ("spurious", self.spurious),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, "must lie in [0, 1]"));
            }
        }
        if !(self.t_pi > 0.0) || !self.t_pi.is_finite() {
            return Err(Error::param("t_pi", "must be > 0"));
        }
        Ok(())
    }

    pub fn initial(&self) -> Populations {
        [1.0 - self.thermal, self.thermal, 0.0]
    }

    /// Rotation by `angle` on `transition`, with decay during the pulse
    /// split evenly around an instantaneous transfer.
    pub fn rotate(
        &self,
        pop: Populations,
        transition: Transition,
        angle: f64,
        cascade: &CoherenceBudget,
    ) -> Populations {
        let half = 0.5 * self.t_pi * (angle / std::f64::consts::PI).abs();
        let p = decay(pop, cascade, half);
        let weight = (0.5 * angle).sin().powi(2);
        let q = weight * (1.0 - self.pi_error);
        let p = match transition {
            Transition::Ge => [
                (1.0 - q) * p[0] + q * p[1],
                q * p[0] + (1.0 - q) * p[1],
                p[2],
            ],
            Transition::Ef => {
                let s = weight * self.spurious;
                [
                    (1.0 - s) * p[0],
                    s * p[0] + (1.0 - q) * p[1] + q * p[2],
                    q * p[1] + (1.0 - q) * p[2],
                ]
            }
        };
        decay(p, cascade, half)
    }

    /// Populations after preparing `target` with resonant pi pulses.
    pub fn prepare(&self, target: usize, cascade: &CoherenceBudget) -> Result<Populations> {
        let pi = std::f64::consts::PI;
        let p = self.initial();
        match target {
            0 => Ok(p),
            1 => Ok(self.rotate(p, Transition::Ge, pi, cascade)),
            2 => {
                let p = self.rotate(p, Transition::Ge, pi, cascade);
                Ok(self.rotate(p, Transition::Ef, pi, cascade))
            }
            _ => Err(Error::param("state", "must be 0, 1 or 2")),
        }
    }
}

/// Resonant drive on the 0-1 transition with an exponentially damped
/// oscillation envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiDrive {
    /// Rabi frequency (MHz).
    pub f_rabi: f64,
    /// Envelope decay time (ns).
    pub tau: f64,
}

impl Default for RabiDrive {
    fn default() -> Self {
        Self {
            f_rabi: 29.0,
            tau: 500.0,
        }
    }
}

impl RabiDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_rabi > 0.0) || !self.f_rabi.is_finite() {
            return Err(Error::param("f_rabi", "must be > 0"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::param("tau_rabi", "must be > 0"));
        }
        Ok(())
    }

    /// Fraction of population exchanged between |0> and |1> after `t` ns.
    pub fn flip(&self, t: f64) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * self.f_rabi * 1e-3 * t;
        0.5 * (1.0 - (-t / self.tau).exp() * phase.cos())
    }

    pub fn apply(&self, pop: Populations, t: f64) -> Populations {
        let x = self.flip(t);
        [
            (1.0 - x) * pop[0] + x * pop[1],
            x * pop[0] + (1.0 - x) * pop[1],
            pop[2],
        ]
    }
}

/// Free evolution for `t` ns under the decay cascade. Linear in `pop`, so
/// unnormalized vectors are allowed.
pub fn decay(pop: Populations, cascade: &CoherenceBudget, t: f64) -> Populations {
    let a = cascade.rate_21 * 1e-3 * t;
    let b = cascade.rate_10 * 1e-3 * t;
    let ea = (-a).exp();
    let eb = (-b).exp();
    // mass moved 2 -> 1 that is still in 1 at time t
    let through = if (a - b).abs() < 1e-9 * a.max(b).max(1e-300) {
        a * ea
    } else {
        a * (ea - eb) / (b - a)
    };
    let p2 = pop[2] * ea;
    let p1 = pop[1] * eb + pop[2] * through;
    [pop[0] + pop[1] + pop[2] - p1 - p2, p1, p2]
}

/// Draws a basis state from `pop`.
pub fn sample_state(pop: &Populations, rng: &mut impl Rng) -> u8 {
    let u: f64 = rng.random();
    if u < pop[0] {
        0
    } else if u < pop[0] + pop[1] {
        1
    } else {
        2
    }
}
