// Copyright 2026 The jba-readout Authors
// SPDX-License-Identifier: Apache-2.0

//! Semiclassical driven Duffing resonator used as a latching detector.
//!
//! In the frame of the drive the intracavity photon number n obeys
//!
//! ```text
//! n * [(delta - |K| n)^2 + kappa^2 / 4] = eps^2
//! ```
//!
//! with delta = 2 pi (f_Ci - f) > 0 and a softening Kerr constant K. For a
//! reduced detuning Omega = 2 delta / kappa above sqrt(3) the response is
//! bistable between a low-amplitude branch and a high-amplitude branch.
//! Switching out of the low branch is noise activated with a barrier that
//! vanishes as (1 - eps^2 / eps_B^2)^(3/2) at the upward spinodal.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::PLANCK;
use crate::device::{DeviceParams, DispersiveMap};
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Drive and resonator parameters for one qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JbaOperatingPoint {
    /// Drive frequency (GHz).
    pub f_drive: f64,
    /// Angular detuning 2 pi (f_Ci - f) (rad/s).
    pub delta: f64,
    /// Energy decay rate (rad/s).
    pub kappa: f64,
    /// Angular Kerr constant (rad/s per photon, negative).
    pub kerr: f64,
    /// Reduced detuning 2 delta / kappa.
    pub omega: f64,
}

impl JbaOperatingPoint {
    pub fn new(f_drive: f64, delta: f64, kappa: f64, kerr: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::param("kappa", "must be > 0"));
        }
        if kerr == 0.0 || !kerr.is_finite() {
            return Err(Error::param("kerr", "must be non-zero"));
        }
        if !delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        Ok(Self {
            f_drive,
            delta,
            kappa,
            kerr,
            omega: 2.0 * delta / kappa,
        })
    }

    /// Operating point seen by the resonator with the qubit in `state`.
    pub fn for_state(
        device: &DeviceParams,
        map: &DispersiveMap,
        state: usize,
        f_drive: f64,
    ) -> Result<Self> {
        let delta = 2.0 * PI * (map.cavity_freq(state) - f_drive) * 1e9;
        Self::new(f_drive, delta, device.kappa(), device.kerr_angular())
    }

    pub fn is_bistable(&self) -> bool {
        self.omega > SQRT3
    }

    /// eps^2 required to hold `n` photons.
    pub fn drive_for(&self, n: f64) -> f64 {
        let detuning = self.delta - self.kerr.abs() * n;
        n * (detuning * detuning + 0.25 * self.kappa * self.kappa)
    }

    /// Reflected field per unit incident amplitude with `n` photons inside,
    /// for a lossless one-port resonator.
    pub fn reflection(&self, n: f64) -> (f64, f64) {
        // r = (i x - kappa/2) / (i x + kappa/2), x = delta - |K| n
        let x = self.delta - self.kerr.abs() * n;
        let h = 0.5 * self.kappa;
        let den = x * x + h * h;
        ((x * x - h * h) / den, (2.0 * x * h) / den)
    }
}

/// Bistability boundaries of a driven Duffing resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spinodals {
    /// Photon number where the low branch ends.
    pub n_minus: f64,
    /// Photon number where the high branch ends.
    pub n_plus: f64,
    /// eps^2 at n_minus: the upward bifurcation threshold eps_B^2.
    pub eps2_up: f64,
    /// eps^2 at n_plus: the retrapping threshold, always <= `eps2_up`.
    pub eps2_down: f64,
}

/// Spinodal photon numbers and drive strengths. Requires Omega >= sqrt(3);
/// exactly at the cusp the two spinodals merge.
pub fn spinodals(point: &JbaOperatingPoint) -> Result<Spinodals> {
    let reduced = point.omega * point.omega - 3.0;
    if reduced < -1e-12 || point.delta <= 0.0 {
        return Err(Error::NoBistability { omega: point.omega });
    }
    let root = (0.25 * point.kappa * point.kappa * reduced.max(0.0)).sqrt();
    let k = point.kerr.abs();
    let n_minus = (2.0 * point.delta - root) / (3.0 * k);
    let n_plus = (2.0 * point.delta + root) / (3.0 * k);
    Ok(Spinodals {
        n_minus,
        n_plus,
        eps2_up: point.drive_for(n_minus),
        eps2_down: point.drive_for(n_plus),
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All non-negative stationary photon numbers for drive amplitude `eps`,
/// ascending. One or three roots in general; two exactly at a spinodal.
pub fn steady_states(point: &JbaOperatingPoint, eps: f64) -> Vec<f64> {
    let e2 = eps * eps;
    if e2 == 0.0 {
        return vec![0.0];
    }
    let residual = |n: f64| point.drive_for(n) - e2;
    let tol = 1e-12 * e2;
    let upper = |from: f64| {
        let mut hi = from.max(1.0) * 2.0;
        while residual(hi) <= 0.0 {
            hi *= 2.0;
        }
        hi
    };

    let mut roots = Vec::with_capacity(3);
    match spinodals(point) {
        Ok(sp) if sp.n_plus > sp.n_minus => {
            let at_minus = residual(sp.n_minus);
            let at_plus = residual(sp.n_plus);
            if at_minus.abs() <= tol {
                roots.push(sp.n_minus);
            } else if at_minus > 0.0 {
                roots.push(bisect(residual, 0.0, sp.n_minus));
            }
            if at_plus.abs() <= tol {
                roots.push(sp.n_plus);
            }
            if at_minus > tol && at_plus < -tol {
                roots.push(bisect(residual, sp.n_minus, sp.n_plus));
            }
            if at_plus < -tol {
                roots.push(bisect(residual, sp.n_plus, upper(sp.n_plus)));
            } else if at_minus < -tol {
                // n_minus below the drive: the only root sits past n_plus
                roots.push(bisect(residual, sp.n_plus, upper(sp.n_plus)));
            }
        }
        _ => roots.push(bisect(residual, 0.0, upper(0.0))),
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
    roots
}

/// Noise-activated escape out of the low-amplitude branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeModel {
    /// Rate prefactor (Hz), reached at and above the spinodal.
    pub attempt_rate: f64,
    /// Barrier height in units of the noise intensity at zero drive.
    pub barrier_scale: f64,
    /// Near-bifurcation scaling exponent of the barrier.
    #[serde(default = "EscapeModel::default_exponent")]
    pub exponent: f64,
}

impl EscapeModel {
    pub const DEFAULT_BARRIER_SCALE: f64 = 40.0;

    fn default_exponent() -> f64 {
        1.5
    }

    pub fn new(attempt_rate: f64, barrier_scale: f64) -> Result<Self> {
        if !(attempt_rate > 0.0) || !attempt_rate.is_finite() {
            return Err(Error::param("attempt_rate", "must be > 0"));
        }
        if !(barrier_scale > 0.0) || !barrier_scale.is_finite() {
            return Err(Error::param("barrier_scale", "must be > 0"));
        }
        Ok(Self {
            attempt_rate,
            barrier_scale,
            exponent: Self::default_exponent(),
        })
    }

    /// Prefactor in units of the resonator energy decay rate kappa.
    pub const CALIBRATED_ATTEMPT_FACTOR: f64 = 0.85;

    /// Calibrated default: prefactor 0.85 kappa and b = 40.
    pub fn calibrated(kappa: f64) -> Self {
        Self {
            attempt_rate: Self::CALIBRATED_ATTEMPT_FACTOR * kappa,
            barrier_scale: Self::DEFAULT_BARRIER_SCALE,
            exponent: Self::default_exponent(),
        }
    }

    /// Escape rate (Hz) at drive ratio eps^2 / eps_B^2.
    pub fn rate_at_ratio(&self, ratio: f64) -> f64 {
        if ratio >= 1.0 {
            self.attempt_rate
        } else {
            let gap = 1.0 - ratio.max(0.0);
            self.attempt_rate * (-self.barrier_scale * gap.powf(self.exponent)).exp()
        }
    }
}

/// Escape rate (Hz) out of the low branch at drive amplitude `eps`.
/// Above the upward spinodal switching is deterministic at the prefactor rate.
pub fn escape_rate(point: &JbaOperatingPoint, model: &EscapeModel, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!("drive amplitude {eps} must be >= 0")));
    }
    let sp = spinodals(point)?;
    Ok(model.rate_at_ratio(eps * eps / sp.eps2_up))
}

/// Converts refrigerator-input power to drive amplitude at the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReference {
    pub atten_db: f64,
    pub kappa: f64,
    /// Drive frequency (GHz).
    pub f_drive: f64,
}

impl PowerReference {
    pub fn new(device: &DeviceParams, f_drive: f64) -> Self {
        Self {
            atten_db: device.atten_db,
            kappa: device.kappa(),
            f_drive,
        }
    }

    /// Incident photon flux (1/s) for power `p_db` (dB re 1 mW at the
    /// refrigerator input).
    pub fn photon_flux(&self, p_db: f64) -> f64 {
        if p_db == f64::NEG_INFINITY {
            return 0.0;
        }
        let watts = 1e-3 * 10f64.powf((p_db + self.atten_db) / 10.0);
        watts / (PLANCK * self.f_drive * 1e9)
    }

    /// Squared drive amplitude eps^2 = kappa * flux (1/s^2).
    pub fn eps2(&self, p_db: f64) -> f64 {
        self.kappa * self.photon_flux(p_db)
    }

    pub fn eps(&self, p_db: f64) -> f64 {
        self.eps2(p_db).sqrt()
    }

    /// Inverse of [`PowerReference::eps2`].
    pub fn power_db(&self, eps2: f64) -> f64 {
        let watts = eps2 / self.kappa * PLANCK * self.f_drive * 1e9;
        10.0 * (watts * 1e3).log10() - self.atten_db
    }
}

/// Drive amplitude (sqrt(photons)/s, scaled by sqrt(kappa)) at the resonator
/// for a power `p_db` referred to the refrigerator input.
pub fn drive_from_power(p_db: f64, device: &DeviceParams, f_drive: f64) -> f64 {
    PowerReference::new(device, f_drive).eps(p_db)
}

/// Input power (dB) at which the low branch of `point` ends.
pub fn threshold_power(point: &JbaOperatingPoint, device: &DeviceParams) -> Result<f64> {
    let sp = spinodals(point)?;
    Ok(PowerReference::new(device, point.f_drive).power_db(sp.eps2_up))
}

/// Bifurcation probability versus sampling power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SCurveModel {
    /// Sampling powers (dB).
    pub grid: Vec<f64>,
    pub p_b: Vec<f64>,
    /// Binomial standard errors; zero for closed-form curves.
    pub stderr: Vec<f64>,
    /// Shots per grid point; zero for closed-form curves.
    pub shots: u64,
    /// Sampling time (ns).
    pub t_s: f64,
    pub label: String,
}

impl SCurveModel {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Maximum of `a - b` over a common grid.
pub fn contrast(a: &SCurveModel, b: &SCurveModel) -> f64 {
    a.p_b
        .iter()
        .zip(&b.p_b)
        .map(|(x, y)| x - y)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Closed-form S-curve p_B = 1 - exp(-Gamma t_S) at constant sampling power.
pub fn s_curve_analytic(
    point: &JbaOperatingPoint,
    model: &EscapeModel,
    grid: &[f64],
    t_s: f64,
    power: &PowerReference,
) -> Result<SCurveModel> {
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("grid", "must be sorted"));
    }
    let p_b = grid
        .iter()
        .map(|&p| {
            let rate = escape_rate(point, model, power.eps(p))?;
            Ok(-(-rate * t_s * 1e-9).exp_m1())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SCurveModel {
        grid: grid.to_vec(),
        stderr: vec![0.0; p_b.len()],
        p_b,
        shots: 0,
        t_s,
        label: "analytic".into(),
    })
}
